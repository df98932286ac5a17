use anyhow::{bail, Context};
use berry_core::hamiltonian::LoopSpec;
use berry_core::noise::trial_rng;
use berry_core::oracle::{oracle_phase, DEFAULT_DENSE_POINTS};
use berry_core::tracker::{run_loop, AnsatzChoice, Outcome, Phase, TrackerConfig};
use log::info;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cli::BenchmarkArgs;
use crate::loops::{ansatz_for, base_config, resolve};
use crate::report::{to_value, Completed, RunReport, Status};

pub const THREADS_ENV: &str = "BERRY_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_steps: usize,
    pub sigma2: f64,
    pub success_prob: f64,
    pub n_fail: usize,
}

/// Seed of trial `trial` in cell `cell`; every (cell, trial) pair draws from
/// its own stream of the master seed.
pub fn trial_seed(seed: u64, cell: usize, trials: usize, trial: usize) -> u64 {
    trial_rng(seed, (cell * trials + trial) as u64).next_u64()
}

fn pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

struct Cell<'a> {
    spec: &'a LoopSpec,
    n_steps: usize,
    sigma2: f64,
}

/// Success fraction against `want` for every cell, trials run in parallel.
fn sweep(
    cells: &[Cell<'_>],
    ansatz: AnsatzChoice,
    base: &TrackerConfig,
    want: Phase,
    trials: usize,
    seed: u64,
) -> anyhow::Result<Vec<SweepRow>> {
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<Outcome> = pool()?.install(|| {
        jobs.par_iter()
            .map(|&(c, t)| {
                let cell = &cells[c];
                let cfg = TrackerConfig {
                    n_steps: cell.n_steps,
                    sigma2_grad: cell.sigma2,
                    sigma2_hess: cell.sigma2,
                    seed: trial_seed(seed, c, trials, t),
                    ..base.clone()
                };
                Ok(run_loop(cell.spec, ansatz, &cfg)?.outcome)
            })
            .collect::<anyhow::Result<_>>()
    })?;
    Ok(cells
        .iter()
        .zip(outcomes.chunks(trials.max(1)))
        .map(|(cell, chunk)| {
            let correct = chunk
                .iter()
                .filter(|o| matches!((o, want), (Outcome::Pi, Phase::Pi) | (Outcome::Zero, Phase::Zero)))
                .count();
            SweepRow {
                n_steps: cell.n_steps,
                sigma2: cell.sigma2,
                success_prob: correct as f64 / trials as f64,
                n_fail: chunk.iter().filter(|&&o| o == Outcome::Fail).count(),
            }
        })
        .collect())
}

pub fn write_csv(rows: &[SweepRow], path: &std::path::Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn execute(args: &BenchmarkArgs) -> anyhow::Result<Completed> {
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    if let Some(s) = args.sigma2_list.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        bail!("noise variances must be non-negative, got {s}");
    }
    let base = base_config(&args.tracker)?;
    let specs = args
        .steps_list
        .iter()
        .map(|&n| resolve(&args.tracker.loop_ref, n))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let ansatz = ansatz_for(&specs[0], args.tracker.ansatz.as_deref())?;
    let want = oracle_phase(&specs[0], DEFAULT_DENSE_POINTS)?;
    info!("{}: oracle phase {want:?}", specs[0].label());

    let cells: Vec<Cell<'_>> = specs
        .iter()
        .zip(&args.steps_list)
        .flat_map(|(spec, &n_steps)| {
            args.sigma2_list
                .iter()
                .map(move |&sigma2| Cell { spec, n_steps, sigma2 })
        })
        .collect();
    info!("{} cells x {} trials with {ansatz}", cells.len(), args.trials);
    let rows = sweep(&cells, ansatz, &base, want, args.trials, args.seed)?;
    write_csv(&rows, &args.out)?;

    let summary = json!({
        "command": "benchmark",
        "status": "ok",
        "loop": specs[0].label(),
        "oracle_phase": want,
        "rows": rows,
    });
    let result = json!({
        "loop": specs[0].label(),
        "ansatz": ansatz,
        "oracle_phase": want,
        "trials": args.trials,
        "seed": args.seed,
        "rows": rows,
    });
    let report = RunReport::new("benchmark", to_value(&base)?, result);
    Ok(Completed {
        report,
        summary,
        status: Status::Ok,
        out: args.report.clone(),
    })
}
