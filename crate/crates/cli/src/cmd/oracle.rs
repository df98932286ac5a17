use anyhow::Context;
use berry_core::oracle::{discrete_berry_phase, exact_ground_path, gap_scan, GapGrid};
use berry_core::Error;
use log::info;
use serde_json::{json, Value};

use crate::cli::OracleArgs;
use crate::report::{to_value, Completed, RunReport, Status};

pub fn execute(args: &OracleArgs) -> anyhow::Result<Completed> {
    let spec = crate::loops::load(&args.loop_ref, args.dense.max(2) + 1)?;
    let config = json!({ "loop": spec.label(), "dense": args.dense });
    info!("exact ground-state path for {}", spec.label());

    let path = exact_ground_path(&spec, args.dense);
    let (mut result, mut summary, status) = match path.and_then(|p| discrete_berry_phase(&p).map(|ph| (p, ph))) {
        Ok((path, phase)) => {
            let (t_gap, min_gap) = path.min_gap();
            let summary = json!({
                "command": "oracle",
                "status": "ok",
                "loop": spec.label(),
                "phase": phase,
                "closing_overlap": path.closing_overlap,
                "min_gap": min_gap,
            });
            let result = json!({
                "phase": phase,
                "closing_overlap": path.closing_overlap,
                "min_link_overlap": path.min_link_overlap(),
                "min_gap": { "t": t_gap, "gap": min_gap },
                "n_points": path.t_grid.len(),
            });
            (result, summary, Status::Ok)
        }
        Err(e @ (Error::DegeneracyOnPath { .. } | Error::UnderResolved { .. } | Error::Inconclusive(_))) => {
            let (kind, detail) = match &e {
                Error::DegeneracyOnPath { t, gap } => ("degenerate", json!({ "t": t, "gap": gap })),
                Error::UnderResolved { t, overlap } => ("under-resolved", json!({ "t": t, "overlap": overlap })),
                Error::Inconclusive(o) => ("inconclusive", json!({ "closing_overlap": o })),
                _ => unreachable!(),
            };
            log::error!("{e}");
            let summary = json!({
                "command": "oracle",
                "status": kind,
                "loop": spec.label(),
                "message": e.to_string(),
                "detail": detail,
            });
            (
                json!({ "phase": Value::Null, "error": kind, "detail": detail }),
                summary,
                Status::Unresolved,
            )
        }
        Err(e) => return Err(e.into()),
    };

    if let (Some(grid_path), Some(csv_path)) = (&args.gap_scan, &args.gap_out) {
        let (grid, base) = GapGrid::load(grid_path).with_context(|| format!("loading {}", grid_path.display()))?;
        let surface = gap_scan(&spec, &grid, &base)?;
        std::fs::write(csv_path, surface.to_csv()).with_context(|| format!("writing {}", csv_path.display()))?;
        let minimum = to_value(&surface.minimum())?;
        info!(
            "gap surface with {} samples written to {}",
            surface.samples.len(),
            csv_path.display()
        );
        result["gap_minimum"] = minimum.clone();
        summary["gap_minimum"] = minimum;
    }

    let report = RunReport::new("oracle", config, result);
    Ok(Completed {
        report,
        summary,
        status,
        out: args.out.clone(),
    })
}
