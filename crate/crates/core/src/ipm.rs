//! Equality-constrained short-step central-path follower over a barrier
//! oracle. Phase I runs damped Newton at `eta = 0` to the analytic center;
//! Phase II grows `eta` geometrically with recentering, recovers a primal
//! through the instance callback at `eps = 1/eta`, and certifies the answer
//! by a weak-duality gap.

use crate::barrier::DualOracle;
use crate::error::{OtError, Result};
use crate::linalg::{dot, lu_solve, Mat};

/// Path-following mode. Short steps validate the complexity scaling; long
/// steps are the practical default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    ShortStep,
    LongStep,
}

#[derive(Debug, Clone)]
pub struct IpmConfig {
    /// Target precision for the duality gap.
    pub delta: f64,
    /// Barrier complexity bound used for the growth rate and stop rule.
    pub theta_bound: f64,
    pub mode: PathMode,
    /// Newton cap per recentering.
    pub max_newton: usize,
    /// Outer iteration cap for phase II.
    pub max_outer: usize,
    /// Geometric growth factor for eta.
    pub growth: f64,
    /// Follow the path up to exactly this eta instead of the gap stop rule.
    pub eta_target: Option<f64>,
}

impl IpmConfig {
    /// Short-step schedule: growth `1 + 1/(2 sqrt(theta))`, which keeps the
    /// recentering cheap while fitting the `O(sqrt(theta) log(theta r/delta))`
    /// iteration budget with a small constant.
    pub fn short_step(delta: f64, theta_bound: f64) -> Self {
        IpmConfig {
            delta,
            theta_bound,
            mode: PathMode::ShortStep,
            max_newton: 200,
            max_outer: 100_000,
            growth: 1.0 + 0.5 / theta_bound.sqrt(),
            eta_target: None,
        }
    }

    /// Long-step schedule: decimate the gap each outer iteration.
    pub fn long_step(delta: f64, theta_bound: f64) -> Self {
        IpmConfig {
            delta,
            theta_bound,
            mode: PathMode::LongStep,
            max_newton: 500,
            max_outer: 1000,
            growth: 10.0,
            eta_target: None,
        }
    }

    pub fn with_eta_target(mut self, eta: f64) -> Self {
        self.eta_target = Some(eta);
        self
    }
}

/// State along the central path.
#[derive(Debug, Clone)]
pub struct PathState {
    pub z: Vec<f64>,
    pub eta: f64,
    pub newton_decrement: f64,
    pub iteration: usize,
    pub flop_estimate: u64,
}

/// Weak-duality certificate from a recovered primal.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub dual_value: f64,
    pub primal_value: f64,
    pub gap: f64,
    pub primal_residuals: Vec<f64>,
}

impl Certificate {
    pub fn max_residual(&self) -> f64 {
        self.primal_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_certified(&self, delta: f64, feas_tol: f64) -> bool {
        self.gap <= delta && self.max_residual() <= feas_tol
    }
}

/// Primal recovery callback: maps a dual point and `eps` to a primal value
/// and per-constraint residual norms.
pub trait PrimalRecovery {
    fn recover(&self, z: &[f64], eps: f64) -> Result<PrimalInfo>;
    fn feas_tol(&self) -> f64 {
        1e-8
    }
}

#[derive(Debug, Clone)]
pub struct PrimalInfo {
    pub value: f64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub outer: usize,
    pub eta: f64,
    pub newton_steps: usize,
    pub decrement: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub flops: u64,
}

#[derive(Debug, Clone, Default)]
pub struct IterStats {
    pub phase1_newton: usize,
    pub phase2_outer: usize,
    pub phase2_newton: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Dual objective at the final point; the certified answer.
    pub value: f64,
    pub certificate: Certificate,
    pub certified: bool,
    pub dual_point: Vec<f64>,
    pub eps_final: f64,
    pub iterations: IterStats,
    pub trace: Vec<TraceRow>,
    pub flops: u64,
    /// Path state at termination (eta = 1/eps_final).
    pub final_state: PathState,
}

/// One Newton step for `min eta * (-b . z) + barrier(z)` subject to `A z = A z_start`,
/// through the bordered KKT system. Returns the new point and the decrement.
pub fn newton_step(
    oracle: &dyn DualOracle,
    objective: &[f64],
    constraints: &Mat,
    z: &[f64],
    eta: f64,
) -> Result<(Vec<f64>, f64)> {
    newton_step_counted(oracle, objective, constraints, z, eta, &mut 0)
}

fn newton_step_counted(
    oracle: &dyn DualOracle,
    objective: &[f64],
    constraints: &Mat,
    z: &[f64],
    eta: f64,
    flops: &mut u64,
) -> Result<(Vec<f64>, f64)> {
    let m = oracle.dim();
    let k = constraints.rows;
    let ev = oracle.eval(z);
    *flops += oracle.take_flops();
    if !ev.domain_ok {
        return Err(OtError::DomainViolation(
            "Newton step started outside the domain".into(),
        ));
    }
    // Gradient of the path objective: -eta b + grad(barrier).
    let mut g = ev.gradient.clone();
    for (gi, bi) in g.iter_mut().zip(objective) {
        *gi -= eta * bi;
    }
    // Bordered system [H A^T; A 0] (dz, nu) = (-g, 0), symmetrically
    // equilibrated so that near-boundary Hessian scales do not swamp the
    // constraint rows.
    let size = m + k;
    let mut scale_d = vec![1.0; size];
    for i in 0..m {
        scale_d[i] = 1.0 / ev.hessian[(i, i)].abs().max(1.0).sqrt();
    }
    let mut kkt = Mat::zeros(size, size);
    for i in 0..m {
        for j in 0..m {
            kkt[(i, j)] = ev.hessian[(i, j)] * scale_d[i] * scale_d[j];
        }
    }
    for r in 0..k {
        for j in 0..m {
            let v = constraints[(r, j)] * scale_d[j];
            kkt[(m + r, j)] = v;
            kkt[(j, m + r)] = v;
        }
    }
    let mut rhs = vec![0.0; size];
    for i in 0..m {
        rhs[i] = -g[i] * scale_d[i];
    }
    let sol = lu_solve(&kkt, &rhs).map_err(|e| {
        OtError::SingularSystem(format!(
            "KKT solve failed (restricted Hessian singular near the boundary?): {e}"
        ))
    })?;
    *flops += (2 * size * size * size / 3) as u64;
    let dz: Vec<f64> = (0..m).map(|i| sol[i] * scale_d[i]).collect();
    let dz = &dz[..];
    let hdz = ev.hessian.matvec(dz);
    let lambda = dot(dz, &hdz).max(0.0).sqrt();
    let step = if lambda <= 0.25 {
        1.0
    } else {
        1.0 / (1.0 + lambda)
    };

    let mut scale = step;
    for _ in 0..60 {
        let z_new: Vec<f64> = z.iter().zip(dz).map(|(a, d)| a + scale * d).collect();
        let ok = oracle.eval(&z_new).domain_ok;
        *flops += oracle.take_flops();
        if ok {
            return Ok((z_new, lambda));
        }
        scale *= 0.5;
    }
    Err(OtError::DomainViolation(
        "damped Newton step left the domain even after backtracking".into(),
    ))
}

const CENTER_DECREMENT: f64 = 0.125;

fn recenter(
    oracle: &dyn DualOracle,
    objective: &[f64],
    constraints: &Mat,
    state: &mut PathState,
    target: f64,
    cap: usize,
) -> Result<usize> {
    let mut steps = 0;
    let mut flops = state.flop_estimate;
    while steps < cap {
        let (z_new, lambda) = newton_step_counted(
            oracle,
            objective,
            constraints,
            &state.z,
            state.eta,
            &mut flops,
        )?;
        state.z = z_new;
        state.iteration += 1;
        state.newton_decrement = lambda;
        state.flop_estimate = flops;
        steps += 1;
        if lambda <= target {
            return Ok(steps);
        }
    }
    Err(OtError::IterationBudget(format!(
        "recentering at eta = {:.3e} stalled with decrement {:.3e} after {steps} Newton steps",
        state.eta, state.newton_decrement
    )))
}

/// Weak-duality certificate at a dual point: `dual = b . z`, primal from the
/// recovery callback at `eps`.
pub fn certify(
    recover: &dyn PrimalRecovery,
    objective: &[f64],
    z: &[f64],
    eps: f64,
) -> Result<Certificate> {
    let dual_value = dot(objective, z);
    let info = recover.recover(z, eps)?;
    let gap = info.value - dual_value;
    debug_assert!(
        gap >= -1e-9 * (1.0 + info.value.abs()),
        "weak duality violated: gap = {gap}"
    );
    Ok(Certificate {
        dual_value,
        primal_value: info.value,
        gap,
        primal_residuals: info.residuals,
    })
}

/// Follows the central path from the given interior balanced start.
///
/// Phase I: damped Newton at `eta = 0` to the analytic center. Phase II:
/// geometric eta growth with recentering until `theta/eta <= delta/2` (or a
/// caller-fixed `eta_target`), then certificates with eta doubling until the
/// gap closes or the outer budget runs out. An uncertified report carries the
/// best certificate found.
pub fn follow_path(
    oracle: &dyn DualOracle,
    objective: &[f64],
    constraints: &Mat,
    start: &[f64],
    config: &IpmConfig,
    recover: &dyn PrimalRecovery,
) -> Result<SolveReport> {
    let mut stats = IterStats::default();
    let mut trace = Vec::new();
    let mut state = PathState {
        z: start.to_vec(),
        eta: 0.0,
        newton_decrement: f64::INFINITY,
        iteration: 0,
        flop_estimate: 0,
    };

    // Phase I.
    let phase1_cap = 20 * config.max_newton;
    let steps = recenter(
        oracle,
        objective,
        constraints,
        &mut state,
        CENTER_DECREMENT,
        phase1_cap,
    )?;
    stats.phase1_newton = steps;

    // Initial eta: the decrement scales linearly in eta at the analytic
    // center, so pick the largest eta that keeps the start well centered.
    let eta_stop = 2.0 * config.theta_bound / config.delta;
    let mut probe_flops = state.flop_estimate;
    let (_, lambda_unit) = newton_step_counted(
        oracle,
        objective,
        constraints,
        &state.z,
        1.0,
        &mut probe_flops,
    )?;
    state.flop_estimate = probe_flops;
    state.eta = if lambda_unit > 0.0 {
        CENTER_DECREMENT / lambda_unit
    } else {
        1.0
    };
    state.eta = state.eta.min(eta_stop).max(f64::MIN_POSITIVE);
    let steps = recenter(
        oracle,
        objective,
        constraints,
        &mut state,
        CENTER_DECREMENT,
        config.max_newton,
    )?;
    stats.phase2_newton += steps;
    trace.push(TraceRow {
        outer: 0,
        eta: state.eta,
        newton_steps: steps,
        decrement: state.newton_decrement,
        dual_value: dot(objective, &state.z),
        gap: f64::NAN,
        flops: state.flop_estimate,
    });

    let goal_eta = config.eta_target.unwrap_or(eta_stop);
    let mut prev_dual = dot(objective, &state.z);
    while state.eta < goal_eta {
        if stats.phase2_outer >= config.max_outer {
            break;
        }
        state.eta = (state.eta * config.growth).min(goal_eta);
        let steps = recenter(
            oracle,
            objective,
            constraints,
            &mut state,
            CENTER_DECREMENT,
            config.max_newton,
        )?;
        stats.phase2_outer += 1;
        stats.phase2_newton += steps;
        let dual = dot(objective, &state.z);
        debug_assert!(
            dual >= prev_dual - 1e-10 * (1.0 + prev_dual.abs()),
            "dual objective decreased along the path: {prev_dual} -> {dual}"
        );
        prev_dual = dual;
        trace.push(TraceRow {
            outer: stats.phase2_outer,
            eta: state.eta,
            newton_steps: steps,
            decrement: state.newton_decrement,
            dual_value: dual,
            gap: f64::NAN,
            flops: state.flop_estimate,
        });
    }

    // Tight recentering before certification: the recovered primal sits on
    // the path only up to the Newton decrement, so certificates are issued
    // from a nearly exact center.
    let cert_decrement = if config.eta_target.is_some() {
        1e-9
    } else {
        1e-7
    };
    let steps = recenter(
        oracle,
        objective,
        constraints,
        &mut state,
        cert_decrement,
        config.max_newton,
    )?;
    stats.phase2_newton += steps;
    if let Some(row) = trace.last_mut() {
        row.newton_steps += steps;
        row.decrement = state.newton_decrement;
    }

    // Certify, doubling eta as needed.
    let mut eps = 1.0 / state.eta;
    let mut cert = certify(recover, objective, &state.z, eps)?;
    if let Some(row) = trace.last_mut() {
        row.gap = cert.gap;
        row.dual_value = cert.dual_value;
    }
    let feas_tol = recover.feas_tol();
    let mut certified = cert.is_certified(config.delta, feas_tol);
    if config.eta_target.is_none() {
        while !certified && stats.phase2_outer < config.max_outer {
            state.eta *= 2.0;
            let steps = recenter(
                oracle,
                objective,
                constraints,
                &mut state,
                cert_decrement,
                config.max_newton,
            )?;
            stats.phase2_outer += 1;
            stats.phase2_newton += steps;
            eps = 1.0 / state.eta;
            cert = certify(recover, objective, &state.z, eps)?;
            certified = cert.is_certified(config.delta, feas_tol);
            trace.push(TraceRow {
                outer: stats.phase2_outer,
                eta: state.eta,
                newton_steps: steps,
                decrement: state.newton_decrement,
                dual_value: cert.dual_value,
                gap: cert.gap,
                flops: state.flop_estimate,
            });
        }
    }

    Ok(SolveReport {
        value: cert.dual_value,
        certified,
        eps_final: eps,
        iterations: stats,
        trace,
        flops: state.flop_estimate,
        certificate: cert,
        final_state: PathState {
            z: state.z.clone(),
            ..state
        },
        dual_point: state.z,
    })
}
