use berry_core::bounds::{bounds_report, ProblemConstants};
use serde_json::json;

use crate::cli::BoundsArgs;
use crate::report::{to_value, Completed, RunReport, Status};

pub fn execute(args: &BoundsArgs) -> anyhow::Result<Completed> {
    let constants = ProblemConstants {
        m: args.m,
        lipschitz: args.lipschitz,
        gdot_max: args.gdot_max,
        n_params: args.n_params,
        grad_norm: args.grad_norm,
        h_norm: args.h_norm,
        hdot_norm: args.hdot_norm,
        gap: args.gap,
        m_h: args.mh,
    };
    let bounds = bounds_report(&constants)?;
    let summary = json!({
        "command": "bounds",
        "status": "ok",
        "radius": bounds.radius,
        "dt_max": bounds.dt_max,
        "sigma_theta_max": bounds.sigma_theta_max,
        "sigma2_grad_max": bounds.sigma2_grad_max,
        "sigma2_hess_max": bounds.sigma2_hess_max,
        "m_tot": bounds.m_tot,
    });
    let report = RunReport::new("bounds", to_value(&constants)?, to_value(&bounds)?);
    Ok(Completed {
        report,
        summary,
        status: Status::Ok,
        out: args.out.clone(),
    })
}
