//! Glue between transport instances and the path follower: dual objectives,
//! balance constraints, primal recovery callbacks, and one-call solvers.

use crate::barrier::{theta_bound, ClassicalBarrier, QuantumBarrier};
use crate::classical::{self, ClassicalInstance, Coupling, DualPoint};
use crate::error::Result;
use crate::ipm::{self, IpmConfig, PathMode, PrimalInfo, PrimalRecovery, SolveReport};
use crate::linalg::Mat;
use crate::quantum::{self, DensityCoupling, HermitianDualPoint, QuantumInstance};
use crate::tensor::marginal;

/// Concatenated marginals: the classical dual objective vector.
pub fn classical_objective(inst: &ClassicalInstance) -> Vec<f64> {
    inst.marginals()
        .vectors()
        .iter()
        .flatten()
        .copied()
        .collect()
}

/// Balance rows `1.x_1 - 1.x_i = 0` in the flat classical coordinates.
pub fn classical_constraints(dims: &[usize]) -> Mat {
    let total: usize = dims.iter().sum();
    let mut a = Mat::zeros(dims.len() - 1, total);
    for r in 0..dims.len() - 1 {
        for j in 0..dims[0] {
            a[(r, j)] = 1.0;
        }
        let off: usize = dims[..=r].iter().sum();
        for j in 0..dims[r + 1] {
            a[(r, off + j)] = -1.0;
        }
    }
    a
}

/// Concatenated isometric coordinates of the densities: the quantum dual
/// objective vector (`tr(rho X)` is the coordinate dot product).
pub fn quantum_objective(inst: &QuantumInstance) -> Vec<f64> {
    let mut out = Vec::new();
    for r in inst.densities().densities() {
        out.extend(crate::herm::HermitianCoordinates::from_matrix(r).coords);
    }
    out
}

/// Balance rows `tr X_1 - tr X_i = 0`; traces are sums of the first `n_i`
/// coordinates of each mode block.
pub fn quantum_constraints(dims: &[usize]) -> Mat {
    let total: usize = dims.iter().map(|&n| n * n).sum();
    let mut a = Mat::zeros(dims.len() - 1, total);
    for r in 0..dims.len() - 1 {
        for j in 0..dims[0] {
            a[(r, j)] = 1.0;
        }
        let off: usize = dims[..=r].iter().map(|&n| n * n).sum();
        for j in 0..dims[r + 1] {
            a[(r, off + j)] = -1.0;
        }
    }
    a
}

struct ClassicalRecovery<'a> {
    inst: &'a ClassicalInstance,
}

impl PrimalRecovery for ClassicalRecovery<'_> {
    fn recover(&self, z: &[f64], eps: f64) -> Result<PrimalInfo> {
        let dual = DualPoint::from_flat(self.inst.dims(), z);
        let u = classical::barrier_primal(self.inst, &dual, eps)?;
        let value = self.inst.cost().inner(&u.tensor);
        let mut residuals = Vec::with_capacity(self.inst.parties());
        for i in 0..self.inst.parties() {
            let got = marginal(&u.tensor, i)?;
            let worst = got
                .iter()
                .zip(self.inst.marginals().vector(i))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            residuals.push(worst);
        }
        Ok(PrimalInfo { value, residuals })
    }

    fn feas_tol(&self) -> f64 {
        1e-8 * (1.0 + self.inst.marginals().common_mass())
    }
}

struct QuantumRecovery<'a> {
    inst: &'a QuantumInstance,
}

impl PrimalRecovery for QuantumRecovery<'_> {
    fn recover(&self, z: &[f64], eps: f64) -> Result<PrimalInfo> {
        let dual = HermitianDualPoint::from_flat(self.inst.dims(), z);
        let rho = quantum::recover_primal(self.inst, &dual, eps)?;
        let value = self.inst.cost().matrix().inner(rho.rho.matrix());
        let g = quantum::gamma_residual(&rho.rho, self.inst.densities())?;
        let mut residuals = g.per_mode;
        residuals.push(g.trace_error);
        Ok(PrimalInfo { value, residuals })
    }

    fn feas_tol(&self) -> f64 {
        1e-8 * (1.0 + self.inst.densities().common_trace())
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalSolve {
    pub report: SolveReport,
    pub dual: DualPoint,
    pub coupling: Coupling,
}

/// Solves the classical dual by the central-path follower and recovers the
/// coupling `U = eps_final * slack^{-o}`.
pub fn solve_classical(
    inst: &ClassicalInstance,
    delta: f64,
    mode: PathMode,
) -> Result<ClassicalSolve> {
    let oracle = ClassicalBarrier::new(inst);
    let config = match mode {
        PathMode::ShortStep => IpmConfig::short_step(delta, theta_bound(inst.dims())),
        PathMode::LongStep => IpmConfig::long_step(delta, theta_bound(inst.dims())),
    };
    solve_classical_with(inst, &oracle, &config)
}

pub fn solve_classical_with(
    inst: &ClassicalInstance,
    oracle: &ClassicalBarrier<'_>,
    config: &IpmConfig,
) -> Result<ClassicalSolve> {
    let objective = classical_objective(inst);
    let constraints = classical_constraints(inst.dims());
    let start = oracle.region().center.clone();
    let recovery = ClassicalRecovery { inst };
    let report = ipm::follow_path(oracle, &objective, &constraints, &start, config, &recovery)?;
    let dual = DualPoint::from_flat(inst.dims(), &report.dual_point);
    let coupling = classical::barrier_primal(inst, &dual, report.eps_final)?;
    Ok(ClassicalSolve {
        report,
        dual,
        coupling,
    })
}

#[derive(Debug, Clone)]
pub struct QuantumSolve {
    pub report: SolveReport,
    pub dual: HermitianDualPoint,
    pub rho: DensityCoupling,
}

/// Solves the quantum dual by the central-path follower and recovers the
/// coupling `rho = eps_final * slack^{-1}`.
pub fn solve_quantum(inst: &QuantumInstance, delta: f64, mode: PathMode) -> Result<QuantumSolve> {
    let oracle = QuantumBarrier::new(inst);
    let config = match mode {
        PathMode::ShortStep => IpmConfig::short_step(delta, theta_bound(inst.dims())),
        PathMode::LongStep => IpmConfig::long_step(delta, theta_bound(inst.dims())),
    };
    let objective = quantum_objective(inst);
    let constraints = quantum_constraints(inst.dims());
    let start = oracle.region().center.clone();
    let recovery = QuantumRecovery { inst };
    let report = ipm::follow_path(
        &oracle,
        &objective,
        &constraints,
        &start,
        &config,
        &recovery,
    )?;
    let dual = HermitianDualPoint::from_flat(inst.dims(), &report.dual_point);
    let rho = quantum::recover_primal(inst, &dual, report.eps_final)?;
    Ok(QuantumSolve { report, dual, rho })
}

#[derive(Debug, Clone)]
pub struct PathPoint {
    pub tau_beta: f64,
    pub report: SolveReport,
}

/// Follows the path to exactly `eta = 1/eps` and evaluates the barrier-dual
/// functional there; agrees with the generalized Sinkhorn's `tau_beta`.
pub fn classical_path_point(inst: &ClassicalInstance, eps: f64) -> Result<PathPoint> {
    let oracle = ClassicalBarrier::new(inst);
    let config = IpmConfig::long_step(1e-9, theta_bound(inst.dims())).with_eta_target(1.0 / eps);
    let objective = classical_objective(inst);
    let constraints = classical_constraints(inst.dims());
    let start = oracle.region().center.clone();
    let recovery = ClassicalRecovery { inst };
    let report = ipm::follow_path(
        &oracle,
        &objective,
        &constraints,
        &start,
        &config,
        &recovery,
    )?;
    let dual = DualPoint::from_flat(inst.dims(), &report.dual_point);
    let tau_beta = classical::phi_dual(inst, &dual, eps)?;
    Ok(PathPoint { tau_beta, report })
}

/// Quantum analog of [`classical_path_point`]: `kappa_beta` via `phi` at the
/// path point `eta = 1/eps`.
pub fn quantum_path_point(inst: &QuantumInstance, eps: f64) -> Result<PathPoint> {
    let oracle = QuantumBarrier::new(inst);
    let config = IpmConfig::long_step(1e-9, theta_bound(inst.dims())).with_eta_target(1.0 / eps);
    let objective = quantum_objective(inst);
    let constraints = quantum_constraints(inst.dims());
    let start = oracle.region().center.clone();
    let recovery = QuantumRecovery { inst };
    let report = ipm::follow_path(
        &oracle,
        &objective,
        &constraints,
        &start,
        &config,
        &recovery,
    )?;
    let dual = HermitianDualPoint::from_flat(inst.dims(), &report.dual_point);
    let tau_beta = quantum::phi_dual(inst, &dual, eps)?;
    Ok(PathPoint { tau_beta, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_rows_annihilate_balanced_points() {
        let a = classical_constraints(&[3, 2, 4]);
        assert_eq!(a.rows, 2);
        assert_eq!(a.cols, 9);
        // x_1 sums 6, x_2 sums 6, x_3 sums 6.
        let z = [2.0, 2.0, 2.0, 3.0, 3.0, 1.5, 1.5, 1.5, 1.5];
        for v in a.matvec(&z) {
            assert!(v.abs() < 1e-12);
        }

        let aq = quantum_constraints(&[2, 3]);
        assert_eq!(aq.rows, 1);
        assert_eq!(aq.cols, 13);
        // Diagonal coords carry the traces.
        let mut z = vec![0.0; 13];
        z[0] = 1.0;
        z[1] = 2.0; // tr X_1 = 3
        z[4] = 1.0;
        z[5] = 1.0;
        z[6] = 1.0; // tr X_2 = 3
        for v in aq.matvec(&z) {
            assert!(v.abs() < 1e-12);
        }
        z[6] = 0.5;
        assert!(aq.matvec(&z)[0].abs() > 0.4);
    }
}
