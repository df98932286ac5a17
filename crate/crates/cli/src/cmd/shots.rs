use anyhow::{bail, Context};
use berry_core::hamiltonian::{build_active_hamiltonian, LoopPoint, LoopSpec};
use berry_core::noise::shots_for_norm;
use berry_core::orbital::rhf_orbitals;
use log::info;
use serde_json::json;

use crate::cli::ShotsArgs;
use crate::report::{to_value, Completed, RunReport, Status};

/// Largest integral one-norm along the loop, on restricted Hartree-Fock
/// orbitals of each geometry, and the shots it needs at `--sigma`.
pub fn execute(args: &ShotsArgs) -> anyhow::Result<Completed> {
    let spec = LoopSpec::load(&args.loop_ref).with_context(|| format!("loading {}", args.loop_ref.display()))?;
    let Some(active) = spec.active_space() else {
        bail!("{} is not a bundle loop", spec.label());
    };
    let n_doubly = active.n_core + active.n_active_electrons / 2;
    let mut norms = Vec::with_capacity(spec.n_points);
    for k in 0..spec.n_points {
        let LoopPoint::Bundle(b) = spec.point(k)? else {
            unreachable!("bundle loop yields bundles")
        };
        let (_, c) = rhf_orbitals(&b, n_doubly)?;
        norms.push(build_active_hamiltonian(&b, &c, &active)?.one_norm());
    }
    let (argmax, max) = norms
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("loops have at least two points");
    let estimate = shots_for_norm(max, args.sigma)?;
    info!("max one-norm {max:.6} at point {argmax}: {} shots", estimate.n_shots);

    let summary = json!({
        "command": "shots",
        "status": "ok",
        "loop": spec.label(),
        "max_one_norm": max,
        "argmax": argmax,
        "n_shots": estimate.n_shots,
    });
    let result = json!({
        "one_norms": norms,
        "argmax": argmax,
        "estimate": estimate,
    });
    let config = json!({ "loop": spec.label(), "sigma": args.sigma });
    let report = RunReport::new("shots", config, to_value(&result)?);
    Ok(Completed {
        report,
        summary,
        status: Status::Ok,
        out: args.out.clone(),
    })
}
