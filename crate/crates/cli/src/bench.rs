//! `bench` subcommand: seeded instances per size, wall times and flop
//! counters for the growth checks.

use std::fmt::Write as _;
use std::time::Instant;

use otbarriers::driver::{solve_classical, solve_quantum};
use otbarriers::ipm::PathMode;
use otbarriers::{OtError, Result};

use crate::generate;

pub const BENCH_HEADER: &str =
    "kind,n,repeat,seed,value,certified,phase2_outer,newton_steps,flops,flops_per_newton,wall_time_s";

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub kind: String,
    pub n: usize,
    pub repeat: usize,
    pub seed: u64,
    pub value: f64,
    pub certified: bool,
    pub phase2_outer: usize,
    pub newton_steps: usize,
    pub flops: u64,
    pub flops_per_newton: f64,
    pub wall_time_s: f64,
}

pub fn bench_one(
    kind: &str,
    n: usize,
    repeat: usize,
    delta: f64,
    mode: PathMode,
) -> Result<BenchRow> {
    let seed = (n as u64) * 1000 + repeat as u64;
    let start = Instant::now();
    let (value, certified, outer, newton, flops) = match kind {
        "classical" => {
            let file = generate::generate_classical(&[n, n], seed, 0.25);
            let inst = file.to_classical()?;
            let sol = solve_classical(&inst, delta, mode)?;
            (
                sol.report.value,
                sol.report.certified,
                sol.report.iterations.phase2_outer,
                sol.report.iterations.phase1_newton + sol.report.iterations.phase2_newton,
                sol.report.flops,
            )
        }
        "quantum" => {
            let file = generate::generate_quantum(&[n, n], seed, 0.3);
            let inst = file.to_quantum()?;
            let sol = solve_quantum(&inst, delta, mode)?;
            (
                sol.report.value,
                sol.report.certified,
                sol.report.iterations.phase2_outer,
                sol.report.iterations.phase1_newton + sol.report.iterations.phase2_newton,
                sol.report.flops,
            )
        }
        other => {
            return Err(OtError::InvalidInput(format!(
                "unknown bench kind {other:?}"
            )));
        }
    };
    Ok(BenchRow {
        kind: kind.into(),
        n,
        repeat,
        seed,
        value,
        certified,
        phase2_outer: outer,
        newton_steps: newton,
        flops,
        flops_per_newton: flops as f64 / newton.max(1) as f64,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_bench(
    kind: &str,
    sizes: &[usize],
    repeats: usize,
    delta: f64,
    mode: PathMode,
    threads: usize,
) -> Result<Vec<BenchRow>> {
    let mut jobs = Vec::new();
    for &n in sizes {
        for r in 0..repeats {
            jobs.push((n, r));
        }
    }
    if threads <= 1 {
        return jobs
            .iter()
            .map(|&(n, r)| bench_one(kind, n, r, delta, mode))
            .collect();
    }
    // Repeats run concurrently on immutable inputs; the row order is fixed
    // afterwards so the CSV stays deterministic.
    let mut rows: Vec<Option<BenchRow>> = vec![None; jobs.len()];
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for chunk in jobs.chunks(jobs.len().div_ceil(threads)) {
            handles.push(scope.spawn(move || -> Result<Vec<BenchRow>> {
                chunk
                    .iter()
                    .map(|&(n, r)| bench_one(kind, n, r, delta, mode))
                    .collect()
            }));
        }
        let mut k = 0;
        for h in handles {
            for row in h
                .join()
                .map_err(|_| OtError::Internal("bench thread panicked".into()))??
            {
                rows[k] = Some(row);
                k += 1;
            }
        }
        Ok(())
    })?;
    Ok(rows
        .into_iter()
        .map(|r| r.expect("all jobs filled"))
        .collect())
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:e},{},{},{},{},{:e},{:.6}",
            r.kind,
            r.n,
            r.repeat,
            r.seed,
            r.value,
            r.certified,
            r.phase2_outer,
            r.newton_steps,
            r.flops,
            r.flops_per_newton,
            r.wall_time_s
        )
        .expect("write to string");
    }
    out
}
