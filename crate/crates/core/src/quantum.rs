//! Quantum bi-/multi-partite optimal transport: the coupling set of states
//! with prescribed partial traces, the dual slack operator, primal recovery
//! `rho = eps * slack^{-1}`, a diagonal-pinching reduction to the classical
//! problem, and the quantum bound chains.

use crate::classical::{ClassicalInstance, MarginalFamily};
use crate::error::{OtError, Result};
use crate::herm::{
    chol_logdet, partial_trace_except, pd_inverse, spectral_bundle, HermitianCoordinates,
    HermitianMatrix, ProductOperator,
};
use crate::tensor::DenseTensor;

/// Positive definite densities with a common trace.
#[derive(Debug, Clone)]
pub struct DensityFamily {
    rho: Vec<HermitianMatrix>,
    common_trace: f64,
    lambda_mins: Vec<f64>,
}

impl DensityFamily {
    pub fn new(rho: Vec<HermitianMatrix>) -> Result<Self> {
        if rho.len() < 2 {
            return Err(OtError::InvalidInput(format!(
                "a density family needs at least 2 parties, got {}",
                rho.len()
            )));
        }
        let mut lambda_mins = Vec::with_capacity(rho.len());
        for (i, r) in rho.iter().enumerate() {
            let s = spectral_bundle(r)?;
            if s.lambda_min <= 0.0 {
                return Err(OtError::SingularDensity {
                    mode: i,
                    pivot: s.lambda_min,
                });
            }
            lambda_mins.push(s.lambda_min);
        }
        let common_trace = rho[0].trace();
        for (i, r) in rho.iter().enumerate() {
            if (r.trace() - common_trace).abs() > 1e-12 * common_trace.max(1.0) {
                return Err(OtError::InvalidInput(format!(
                    "density {i} has trace {} != common trace {common_trace}",
                    r.trace()
                )));
            }
        }
        Ok(DensityFamily {
            rho,
            common_trace,
            lambda_mins,
        })
    }

    pub fn parties(&self) -> usize {
        self.rho.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.rho.iter().map(|r| r.dim()).collect()
    }

    pub fn density(&self, i: usize) -> &HermitianMatrix {
        &self.rho[i]
    }

    pub fn densities(&self) -> &[HermitianMatrix] {
        &self.rho
    }

    pub fn common_trace(&self) -> f64 {
        self.common_trace
    }

    pub fn is_unit_trace(&self) -> bool {
        (self.common_trace - 1.0).abs() <= 1e-9
    }

    /// `lambda_min` of each density, normalized to unit trace.
    pub fn normalized_lambda_mins(&self) -> Vec<f64> {
        self.lambda_mins
            .iter()
            .map(|l| l / self.common_trace)
            .collect()
    }
}

/// Hermitian cost on the product space plus marginal densities.
#[derive(Debug, Clone)]
pub struct QuantumInstance {
    cost: ProductOperator,
    densities: DensityFamily,
    lambda_min_c: f64,
    lambda_max_c: f64,
    norm2_c: f64,
}

impl QuantumInstance {
    pub fn new(cost: ProductOperator, densities: DensityFamily) -> Result<Self> {
        if cost.mode_dims() != densities.dims().as_slice() {
            return Err(OtError::DimensionMismatch(format!(
                "cost mode dims {:?} != density dims {:?}",
                cost.mode_dims(),
                densities.dims()
            )));
        }
        let s = spectral_bundle(cost.matrix())?;
        Ok(QuantumInstance {
            cost,
            densities,
            lambda_min_c: s.lambda_min,
            lambda_max_c: s.lambda_max,
            norm2_c: s.norm2,
        })
    }

    pub fn cost(&self) -> &ProductOperator {
        &self.cost
    }

    pub fn densities(&self) -> &DensityFamily {
        &self.densities
    }

    pub fn dims(&self) -> &[usize] {
        self.cost.mode_dims()
    }

    pub fn parties(&self) -> usize {
        self.cost.modes()
    }

    pub fn total_dim(&self) -> usize {
        self.cost.dim()
    }

    pub fn lambda_min_c(&self) -> f64 {
        self.lambda_min_c
    }

    pub fn lambda_max_c(&self) -> f64 {
        self.lambda_max_c
    }

    pub fn norm2_c(&self) -> f64 {
        self.norm2_c
    }
}

/// Dual variables: one Hermitian matrix per party.
#[derive(Debug, Clone)]
pub struct HermitianDualPoint {
    pub x: Vec<HermitianMatrix>,
}

impl HermitianDualPoint {
    pub fn zeros(dims: &[usize]) -> Self {
        HermitianDualPoint {
            x: dims.iter().map(|&n| HermitianMatrix::zeros(n)).collect(),
        }
    }

    pub fn traces(&self) -> Vec<f64> {
        self.x.iter().map(|m| m.trace()).collect()
    }

    pub fn is_balanced(&self, tol: f64) -> bool {
        let t = self.traces();
        t.iter()
            .all(|&ti| (ti - t[0]).abs() <= tol * (1.0 + t[0].abs()))
    }

    /// Concatenated isometric real coordinates, `sum n_i^2` entries.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in &self.x {
            out.extend(HermitianCoordinates::from_matrix(m).coords);
        }
        out
    }

    pub fn from_flat(dims: &[usize], flat: &[f64]) -> Self {
        let mut x = Vec::with_capacity(dims.len());
        let mut k = 0;
        for &n in dims {
            let coords = flat[k..k + n * n].to_vec();
            k += n * n;
            x.push(HermitianCoordinates { n, coords }.to_matrix());
        }
        debug_assert_eq!(k, flat.len());
        HermitianDualPoint { x }
    }

    /// `sum_i tr(rho_i X_i)`, the dual objective.
    pub fn objective(&self, r: &DensityFamily) -> f64 {
        self.x
            .iter()
            .zip(r.densities())
            .map(|(xi, ri)| ri.inner(xi))
            .sum()
    }
}

/// PSD coupling candidate on the product space.
#[derive(Debug, Clone)]
pub struct DensityCoupling {
    pub rho: ProductOperator,
}

/// `C(X_1,...,X_d) = C - sum_i lift(X_i)`.
pub fn slack_operator(inst: &QuantumInstance, z: &HermitianDualPoint) -> Result<ProductOperator> {
    let dims = inst.dims();
    if z.x.len() != dims.len() || z.x.iter().zip(dims).any(|(xi, &n)| xi.dim() != n) {
        return Err(OtError::DimensionMismatch(format!(
            "dual point dims {:?} != instance dims {:?}",
            z.x.iter().map(|m| m.dim()).collect::<Vec<_>>(),
            dims
        )));
    }
    let total = inst.total_dim();
    let mut out = inst.cost().clone();
    for (i, xi) in z.x.iter().enumerate() {
        let stride = out.stride(i);
        let offsets = out.context_offsets(i);
        let n_i = dims[i];
        let m = out.matrix_mut();
        // Upper triangle only; `set` mirrors the conjugate entry.
        for a in 0..n_i {
            for b in a..n_i {
                let v = xi.get(a, b);
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                for &off in &offsets {
                    let cur = m.get(a * stride + off, b * stride + off);
                    m.set(a * stride + off, b * stride + off, cur - v);
                }
            }
        }
        debug_assert_eq!(m.dim(), total);
    }
    Ok(out)
}

/// Smallest eigenvalue of the slack operator; negative outside the domain.
pub fn slack_lambda_min(inst: &QuantumInstance, z: &HermitianDualPoint) -> Result<f64> {
    let s = slack_operator(inst, z)?;
    Ok(spectral_bundle(s.matrix())?.lambda_min)
}

/// Membership in the open dual domain, by the Cholesky pivot rule.
pub fn slack_is_pd(inst: &QuantumInstance, z: &HermitianDualPoint) -> Result<bool> {
    let s = slack_operator(inst, z)?;
    Ok(chol_logdet(s.matrix()).1)
}

/// Canonical interior start: `X_i = (t/n_i) I` with
/// `t = (lambda_min(C) - 1)/sum(1/n_i)`; the slack is then at least identity.
pub fn start_dual_point(inst: &QuantumInstance) -> HermitianDualPoint {
    let dims = inst.dims();
    let inv_sum: f64 = dims.iter().map(|&n| 1.0 / n as f64).sum();
    let t = (inst.lambda_min_c() - 1.0) / inv_sum;
    HermitianDualPoint {
        x: dims
            .iter()
            .map(|&n| HermitianMatrix::identity(n).scale(t / n as f64))
            .collect(),
    }
}

/// Per-mode partial-trace residuals, spectrum floor, and trace error of a
/// coupling candidate.
#[derive(Debug, Clone)]
pub struct GammaResidual {
    pub per_mode: Vec<f64>,
    pub lambda_min: f64,
    pub trace_error: f64,
}

impl GammaResidual {
    pub fn max_residual(&self) -> f64 {
        self.per_mode.iter().copied().fold(0.0, f64::max)
    }
}

pub fn gamma_residual(rho: &ProductOperator, r: &DensityFamily) -> Result<GammaResidual> {
    if rho.mode_dims() != r.dims().as_slice() {
        return Err(OtError::DimensionMismatch(format!(
            "coupling mode dims {:?} != density dims {:?}",
            rho.mode_dims(),
            r.dims()
        )));
    }
    let mut per_mode = Vec::with_capacity(r.parties());
    for i in 0..r.parties() {
        let t = partial_trace_except(rho, i)?;
        per_mode.push(t.sub(r.density(i)).frobenius());
    }
    let s = spectral_bundle(rho.matrix())?;
    Ok(GammaResidual {
        per_mode,
        lambda_min: s.lambda_min,
        trace_error: (rho.matrix().trace() - r.common_trace()).abs(),
    })
}

/// `rho = eps * C(X)^{-1}`; positive definite by construction. Fails when the
/// slack is not positive definite.
pub fn recover_primal(
    inst: &QuantumInstance,
    z: &HermitianDualPoint,
    eps: f64,
) -> Result<DensityCoupling> {
    let slack = slack_operator(inst, z)?;
    let inv = pd_inverse(slack.matrix()).ok_or_else(|| {
        OtError::DomainViolation("slack operator is not positive definite".into())
    })?;
    let rho = ProductOperator::new(inst.dims().to_vec(), inv.scale(eps))?;
    Ok(DensityCoupling { rho })
}

const DIAGONAL_TOL: f64 = 1e-14;

/// When the cost and every density are diagonal in the computational basis,
/// pinching reduces the quantum problem to a classical one with the same
/// value: `kappa = tau` and `kappa_beta = tau_beta`. Returns `None` otherwise.
pub fn diagonal_reduction(inst: &QuantumInstance) -> Option<ClassicalInstance> {
    if inst.cost().matrix().max_offdiag_norm() > DIAGONAL_TOL {
        return None;
    }
    for r in inst.densities().densities() {
        if r.max_offdiag_norm() > DIAGONAL_TOL {
            return None;
        }
    }
    let dims = inst.dims().to_vec();
    let total = inst.total_dim();
    let cost_diag: Vec<f64> = (0..total)
        .map(|k| inst.cost().matrix().get(k, k).re)
        .collect();
    let cost = DenseTensor::new(dims.clone(), cost_diag).ok()?;
    let marginals = MarginalFamily::new(
        inst.densities()
            .densities()
            .iter()
            .map(|r| (0..r.dim()).map(|k| r.get(k, k).re).collect())
            .collect(),
    )
    .ok()?;
    ClassicalInstance::new(cost, marginals).ok()
}

/// Dual functional of the quantum barrier relaxation:
/// `phi = sum tr(rho_i X_i) + eps log det(slack) + N eps (1 - log eps)`.
pub fn phi_dual(inst: &QuantumInstance, z: &HermitianDualPoint, eps: f64) -> Result<f64> {
    let slack = slack_operator(inst, z)?;
    let (logdet, pd) = chol_logdet(slack.matrix());
    if !pd {
        return Err(OtError::DomainViolation(
            "phi evaluated outside the dual domain".into(),
        ));
    }
    let n_total = inst.total_dim() as f64;
    Ok(z.objective(inst.densities()) + eps * logdet + n_total * eps * (1.0 - eps.ln()))
}

/// Two-sided bound chain of the bipartite quantum barrier relaxation.
#[derive(Debug, Clone)]
pub struct QuantumChainReport {
    pub kappa: f64,
    pub kappa_beta: f64,
    pub upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

/// Checks the strict chain `kappa < kappa_beta < kappa + n1 n2 eps (1 -
/// log eps) + (n1 n2 eps/2) log(2|C|_2^2 + 2(2|C|_2/(l1 l2))^2)` with `l_i`
/// the smallest density eigenvalues. Bipartite unit-trace instances only.
pub fn bound_chain_quantum(
    inst: &QuantumInstance,
    eps: f64,
    kappa: f64,
    kappa_beta: f64,
) -> Result<QuantumChainReport> {
    if inst.parties() != 2 {
        return Err(OtError::InvalidInput(
            "bound chain is stated for bipartite instances".into(),
        ));
    }
    if !inst.densities().is_unit_trace() {
        return Err(OtError::InvalidInput(
            "bound chain needs unit-trace densities".into(),
        ));
    }
    let dims = inst.dims();
    let n1n2 = (dims[0] * dims[1]) as f64;
    let l = inst.densities().normalized_lambda_mins();
    let c2 = inst.norm2_c();
    let ratio = 2.0 * c2 / (l[0] * l[1]);
    let upper = kappa
        + n1n2 * eps * (1.0 - eps.ln())
        + 0.5 * n1n2 * eps * (2.0 * c2 * c2 + 2.0 * ratio * ratio).ln();
    let report = QuantumChainReport {
        kappa,
        kappa_beta,
        upper,
        lower_margin: kappa_beta - kappa,
        upper_margin: upper - kappa_beta,
    };
    if !(kappa < kappa_beta) {
        return Err(OtError::ChainViolation(format!(
            "kappa = {kappa} is not strictly below kappa_beta = {kappa_beta}"
        )));
    }
    if !(kappa_beta < upper) {
        return Err(OtError::ChainViolation(format!(
            "kappa_beta = {kappa_beta} is not strictly below the upper bound {upper}"
        )));
    }
    Ok(report)
}

/// Multipartite chain, reported rather than asserted: the stated factor is
/// `d^d eps / 2` and the check records whether it holds.
#[derive(Debug, Clone)]
pub struct MultiChainReport {
    pub kappa: f64,
    pub kappa_beta: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

pub fn bound_chain_quantum_multi(
    inst: &QuantumInstance,
    eps: f64,
    kappa: f64,
    kappa_beta: f64,
) -> Result<MultiChainReport> {
    let d = inst.parties();
    if d < 3 {
        return Err(OtError::InvalidInput(
            "multipartite chain needs d >= 3".into(),
        ));
    }
    if !inst.densities().is_unit_trace() {
        return Err(OtError::InvalidInput(
            "bound chain needs unit-trace densities".into(),
        ));
    }
    let n_total = inst.total_dim() as f64;
    let df = d as f64;
    let l_prod: f64 = inst.densities().normalized_lambda_mins().iter().product();
    let c2 = inst.norm2_c();
    let ratio = 2.0 * c2 / l_prod;
    let upper = kappa
        + n_total * eps * (1.0 - eps.ln())
        + 0.5 * df.powi(d as i32) * eps * (df * c2 * c2 + df * ratio * ratio).ln();
    Ok(MultiChainReport {
        kappa,
        kappa_beta,
        upper,
        lower_holds: kappa < kappa_beta,
        upper_holds: kappa_beta < upper,
    })
}
