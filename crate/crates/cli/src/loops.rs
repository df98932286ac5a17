use std::path::Path;

use anyhow::{bail, Context};
use berry_core::hamiltonian::LoopSpec;
use berry_core::tracker::{AnsatzChoice, TrackerConfig};
use log::info;

use crate::cli::TrackerArgs;

/// Loop named by `reference` on its own grid; builtins get `n_points` points.
pub fn load(reference: &str, n_points: usize) -> anyhow::Result<LoopSpec> {
    match reference.strip_prefix("builtin:") {
        Some(name) => Ok(LoopSpec::builtin(name, n_points)?),
        None => {
            let path = Path::new(reference);
            LoopSpec::load(path).with_context(|| format!("loading loop {}", path.display()))
        }
    }
}

/// Loop for `reference`, on a grid that `n_steps` divides when the family
/// allows resampling.
pub fn resolve(reference: &str, n_steps: usize) -> anyhow::Result<LoopSpec> {
    let spec = load(reference, n_steps + 1)?;
    if spec.stride(n_steps).is_ok() {
        return Ok(spec);
    }
    if spec.is_analytic() {
        info!("resampling {} onto {} points", spec.label(), n_steps + 1);
        return Ok(spec.regrid(n_steps + 1)?);
    }
    bail!(
        "{} has {} intervals, which {} steps do not divide",
        spec.label(),
        spec.n_intervals(),
        n_steps
    )
}

pub fn ansatz_for(spec: &LoopSpec, requested: Option<&str>) -> anyhow::Result<AnsatzChoice> {
    match requested {
        Some(s) => Ok(s.parse()?),
        None if spec.is_analytic() => Ok(AnsatzChoice::Direct),
        None => Ok(AnsatzChoice::Uccd),
    }
}

/// Configuration file (or defaults) with the shared flags applied on top.
pub fn base_config(args: &TrackerArgs) -> anyhow::Result<TrackerConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => TrackerConfig::default(),
    };
    if args.reg {
        cfg.reg = true;
    }
    if args.no_backtrack {
        cfg.backtrack = false;
    }
    if let Some(f) = args.fidelity {
        cfg.fidelity = f;
    }
    if let Some(m) = args.m_thr {
        cfg.m_thr = m;
    }
    if args.overlap_shots.is_some() {
        cfg.overlap_shots = args.overlap_shots;
    }
    Ok(cfg)
}
