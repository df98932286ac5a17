use berry_core::tracker::run_loop;
use log::info;
use serde_json::json;

use crate::cli::RunArgs;
use crate::loops::{ansatz_for, base_config, resolve};
use crate::report::{to_value, Completed, RunReport, Status};

pub fn execute(args: &RunArgs, no_timing: bool) -> anyhow::Result<Completed> {
    let mut cfg = base_config(&args.tracker)?;
    if let Some(n) = args.steps {
        cfg.n_steps = n;
    }
    if let Some(v) = args.noise_sigma2_grad {
        cfg.sigma2_grad = v;
    }
    if let Some(v) = args.noise_sigma2_hess {
        cfg.sigma2_hess = v;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let spec = resolve(&args.tracker.loop_ref, cfg.n_steps)?;
    let ansatz = ansatz_for(&spec, args.tracker.ansatz.as_deref())?;
    info!("tracking {} with {ansatz}, {} steps", spec.label(), cfg.n_steps);
    let mut result = run_loop(&spec, ansatz, &cfg)?;
    if no_timing {
        result = result.without_timing();
    }
    info!("outcome {:?}, omega {:?}", result.outcome, result.omega);

    let status = if result.is_fail() {
        Status::Unresolved
    } else {
        Status::Ok
    };
    let summary = json!({
        "command": "run",
        "status": if result.is_fail() { "fail" } else { "ok" },
        "loop": spec.label(),
        "ansatz": result.ansatz,
        "n_steps": result.n_steps,
        "outcome": result.outcome,
        "omega": result.omega,
        "fail_reason": result.fail_reason,
    });
    let report = RunReport::new("run", to_value(&cfg)?, to_value(&result)?);
    Ok(Completed {
        report,
        summary,
        status,
        out: args.out.clone(),
    })
}
