//! Classical bi-/multi-partite optimal transport: the coupling polytope, an
//! exact simplex LP reference, a log-domain entropic Sinkhorn baseline, the
//! barrier relaxation's generalized Sinkhorn (row/column rescaling through the
//! scalar root kernel, plus a rebalance step), and bound-chain checks.

use crate::error::{OtError, Result};
use crate::linalg::Mat;
use crate::rootfind::{self, ShiftSpectrum};
use crate::simplex;
use crate::tensor::{marginal, DenseTensor};

/// Strictly positive marginals with a common coordinate sum.
#[derive(Debug, Clone)]
pub struct MarginalFamily {
    p: Vec<Vec<f64>>,
    common_mass: f64,
}

impl MarginalFamily {
    pub fn new(p: Vec<Vec<f64>>) -> Result<Self> {
        if p.len() < 2 {
            return Err(OtError::InvalidInput(format!(
                "a marginal family needs at least 2 parties, got {}",
                p.len()
            )));
        }
        for (i, pi) in p.iter().enumerate() {
            if pi.is_empty() {
                return Err(OtError::InvalidInput(format!("marginal {i} is empty")));
            }
            for (j, &v) in pi.iter().enumerate() {
                if !(v > 0.0) {
                    return Err(OtError::NonPositiveMarginal { mode: i, index: j });
                }
            }
        }
        let common_mass: f64 = p[0].iter().sum();
        for (i, pi) in p.iter().enumerate() {
            let s: f64 = pi.iter().sum();
            if (s - common_mass).abs() > 1e-12 * common_mass {
                return Err(OtError::InvalidInput(format!(
                    "marginal {i} has mass {s} != common mass {common_mass}"
                )));
            }
        }
        Ok(MarginalFamily { p, common_mass })
    }

    pub fn parties(&self) -> usize {
        self.p.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.p.iter().map(|v| v.len()).collect()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.p[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn common_mass(&self) -> f64 {
        self.common_mass
    }

    pub fn is_probability(&self) -> bool {
        (self.common_mass - 1.0).abs() <= 1e-9
    }

    /// Minimum entry of each marginal, normalized to unit mass.
    pub fn normalized_min_entries(&self) -> Vec<f64> {
        self.p
            .iter()
            .map(|pi| pi.iter().copied().fold(f64::INFINITY, f64::min) / self.common_mass)
            .collect()
    }
}

/// Cost tensor plus marginals, with the cached scalars used by the start
/// point, radius, and bound-chain formulas.
#[derive(Debug, Clone)]
pub struct ClassicalInstance {
    cost: DenseTensor,
    marginals: MarginalFamily,
    c_min: f64,
    c_max: f64,
    c_abs: f64,
}

impl ClassicalInstance {
    pub fn new(cost: DenseTensor, marginals: MarginalFamily) -> Result<Self> {
        if cost.dims() != marginals.dims().as_slice() {
            return Err(OtError::DimensionMismatch(format!(
                "cost dims {:?} != marginal dims {:?}",
                cost.dims(),
                marginals.dims()
            )));
        }
        let c_min = cost.min_entry();
        let c_max = cost.max_entry();
        let c_abs = c_min.abs().max(c_max.abs());
        Ok(ClassicalInstance {
            cost,
            marginals,
            c_min,
            c_max,
            c_abs,
        })
    }

    pub fn cost(&self) -> &DenseTensor {
        &self.cost
    }

    pub fn marginals(&self) -> &MarginalFamily {
        &self.marginals
    }

    pub fn dims(&self) -> &[usize] {
        self.cost.dims()
    }

    pub fn parties(&self) -> usize {
        self.marginals.parties()
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// `max |c|`.
    pub fn c_abs(&self) -> f64 {
        self.c_abs
    }

    pub fn cells(&self) -> usize {
        self.cost.len()
    }
}

/// Nonnegative coupling candidate.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub tensor: DenseTensor,
}

impl Coupling {
    /// Max over modes of the sup-norm marginal residual.
    pub fn marginal_residual(&self, m: &MarginalFamily) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..m.parties() {
            let got = marginal(&self.tensor, i).expect("mode in range");
            for (a, b) in got.iter().zip(m.vector(i)) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

/// Dual variables, one vector per party.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub x: Vec<Vec<f64>>,
}

impl DualPoint {
    pub fn zeros(dims: &[usize]) -> Self {
        DualPoint {
            x: dims.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn sums(&self) -> Vec<f64> {
        self.x.iter().map(|v| v.iter().sum()).collect()
    }

    pub fn is_balanced(&self, tol: f64) -> bool {
        let s = self.sums();
        s.iter()
            .all(|&si| (si - s[0]).abs() <= tol * (1.0 + s[0].abs()))
    }

    pub fn flat(&self) -> Vec<f64> {
        self.x.iter().flatten().copied().collect()
    }

    pub fn from_flat(dims: &[usize], flat: &[f64]) -> Self {
        let mut x = Vec::with_capacity(dims.len());
        let mut k = 0;
        for &n in dims {
            x.push(flat[k..k + n].to_vec());
            k += n;
        }
        debug_assert_eq!(k, flat.len());
        DualPoint { x }
    }

    /// `sum_i p_i . x_i`, the dual objective.
    pub fn objective(&self, m: &MarginalFamily) -> f64 {
        self.x
            .iter()
            .zip(m.vectors())
            .map(|(xi, pi)| xi.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

/// `C(x_1,...,x_d)`: entry `(j_1..j_d)` is `c - sum_i x_{j_i,i}`.
pub fn slack_tensor(inst: &ClassicalInstance, z: &DualPoint) -> Result<DenseTensor> {
    let dims = inst.dims();
    if z.x.len() != dims.len() || z.x.iter().zip(dims).any(|(xi, &n)| xi.len() != n) {
        return Err(OtError::DimensionMismatch(format!(
            "dual point dims {:?} != instance dims {:?}",
            z.x.iter().map(|v| v.len()).collect::<Vec<_>>(),
            dims
        )));
    }
    let mut out = inst.cost().clone();
    let d = dims.len();
    for flat in 0..out.len() {
        let mut v = out.entries()[flat];
        for (i, xi) in z.x.iter().enumerate().take(d) {
            v -= xi[out.mode_index(flat, i)];
        }
        out.entries_mut()[flat] = v;
    }
    Ok(out)
}

/// Canonical interior start: `x_i = (t/n_i) 1` with `t = (c_min - 1)/sum(1/n_i)`,
/// so every slack entry is at least 1 and the sums balance.
pub fn start_dual_point(inst: &ClassicalInstance) -> DualPoint {
    let dims = inst.dims();
    let inv_sum: f64 = dims.iter().map(|&n| 1.0 / n as f64).sum();
    let t = (inst.c_min() - 1.0) / inv_sum;
    DualPoint {
        x: dims.iter().map(|&n| vec![t / n as f64; n]).collect(),
    }
}

const LP_SIZE_LIMIT: usize = 20_000;

/// Exact optimum of `min <C,V>` over the coupling polytope, via two-phase
/// dense simplex with Bland's rule. Desk scale only.
pub fn lp_reference(inst: &ClassicalInstance) -> Result<(f64, Coupling)> {
    let n_vars = inst.cells();
    if n_vars > LP_SIZE_LIMIT {
        return Err(OtError::LpTooLarge {
            vars: n_vars,
            limit: LP_SIZE_LIMIT,
        });
    }
    let dims = inst.dims();
    let d = dims.len();
    // Independent rows: all of mode 0, first n_i - 1 of each later mode.
    let mut n_rows = dims[0];
    for &n in &dims[1..] {
        n_rows += n - 1;
    }
    let mut a = Mat::zeros(n_rows, n_vars);
    let mut b = vec![0.0; n_rows];
    let mut row = 0;
    for i in 0..d {
        let keep = if i == 0 { dims[i] } else { dims[i] - 1 };
        for j in 0..keep {
            b[row] = inst.marginals().vector(i)[j];
            for cell in 0..n_vars {
                if inst.cost().mode_index(cell, i) == j {
                    a[(row, cell)] = 1.0;
                }
            }
            row += 1;
        }
    }
    let c = inst.cost().entries();

    let solved = match simplex::solve_equality_lp(c, &a, &b) {
        Ok(s) => s,
        Err(OtError::DegenerateBasis(msg)) => {
            // Retry once with a deterministic tiny perturbation of the rhs.
            let mut b2 = b.clone();
            for (k, v) in b2.iter_mut().enumerate() {
                *v *= 1.0 + 1e-12 * (k as f64 + 1.0);
            }
            simplex::solve_equality_lp(c, &a, &b2).map_err(|_| OtError::DegenerateBasis(msg))?
        }
        Err(e) => return Err(e),
    };

    let v = DenseTensor::new(dims.to_vec(), solved.x)?;
    debug_assert!(
        solved.objective >= inst.c_min() * inst.marginals().common_mass() - 1e-9,
        "LP value below the entrywise lower bound"
    );
    Ok((solved.objective, Coupling { tensor: v }))
}

fn shannon_entropy(u: &DenseTensor) -> f64 {
    u.entries()
        .iter()
        .map(|&v| if v > 0.0 { -v * v.ln() } else { 0.0 })
        .sum()
}

/// `-sum log u`, the entrywise log barrier.
pub fn log_barrier(u: &DenseTensor) -> f64 {
    u.entries().iter().map(|&v| -v.ln()).sum()
}

/// Product coupling `p_1 (x) ... (x) p_d / mass^{d-1}`; always feasible.
pub fn product_coupling(m: &MarginalFamily) -> Coupling {
    let mut t = DenseTensor::outer(m.vectors());
    let scale = m.common_mass().powi(m.parties() as i32 - 1);
    for v in t.entries_mut() {
        *v /= scale;
    }
    Coupling { tensor: t }
}

#[derive(Debug, Clone)]
pub struct EntropicSolution {
    pub tau_eps: f64,
    pub coupling: Coupling,
    /// Log-domain rescaling factors, one per party, balanced sums.
    pub potentials: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub max_residual: f64,
}

/// Log-sum-exp accumulators, one slot per slice of one mode.
struct LseAcc {
    m: Vec<f64>,
    s: Vec<f64>,
}

impl LseAcc {
    fn new(n: usize) -> Self {
        LseAcc {
            m: vec![f64::NEG_INFINITY; n],
            s: vec![0.0; n],
        }
    }
    #[inline]
    fn push(&mut self, j: usize, v: f64) {
        if v <= self.m[j] {
            self.s[j] += (v - self.m[j]).exp();
        } else {
            self.s[j] = self.s[j] * (self.m[j] - v).exp() + 1.0;
            self.m[j] = v;
        }
    }
    #[inline]
    fn value(&self, j: usize) -> f64 {
        self.m[j] + self.s[j].ln()
    }
}

/// Entropic relaxation solved by log-domain Sinkhorn with an eps-scaling warm
/// start; stable for arbitrarily small `eps`. Returns the relaxed value
/// `tau_eps = <C,U> - eps E_S(U)`, the coupling, and the potentials.
pub fn entropic_sinkhorn(
    inst: &ClassicalInstance,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    entropic_sinkhorn_log(inst, eps, tol, max_iter)
}

fn check_entropic_inputs(inst: &ClassicalInstance, eps: f64) -> Result<()> {
    if eps <= 0.0 {
        return Err(OtError::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if !inst.marginals().is_probability() {
        return Err(OtError::InvalidInput(format!(
            "entropic relaxation needs probability marginals, common mass is {}",
            inst.marginals().common_mass()
        )));
    }
    Ok(())
}

fn entropic_sinkhorn_log(
    inst: &ClassicalInstance,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    check_entropic_inputs(inst, eps)?;
    let dims = inst.dims().to_vec();
    let d = dims.len();
    let cost = inst.cost();
    let log_p: Vec<Vec<f64>> = (0..d)
        .map(|i| inst.marginals().vector(i).iter().map(|v| v.ln()).collect())
        .collect();

    // Stage schedule for the warm start; potentials carry over in cost units.
    let mut stages = vec![];
    let mut e = 0.5f64;
    while e > eps {
        stages.push(e);
        e *= 0.2;
    }
    stages.push(eps);
    if eps >= 0.5 {
        stages = vec![eps];
    }

    let mut lambda: Vec<Vec<f64>> = dims.iter().map(|&n| vec![0.0; n]).collect();
    let mut prev_eps = stages[0];
    let mut total_sweeps = 0usize;
    let mut residual = f64::INFINITY;

    for (si, &stage_eps) in stages.iter().enumerate() {
        let scale = prev_eps / stage_eps;
        for li in lambda.iter_mut() {
            for v in li.iter_mut() {
                *v *= scale;
            }
        }
        prev_eps = stage_eps;
        let last = si + 1 == stages.len();
        let stage_tol = if last { tol } else { tol.max(1e-6) };
        let stage_cap = if last { max_iter } else { max_iter.min(500) };

        let mut sweep = 0usize;
        loop {
            sweep += 1;
            total_sweeps += 1;
            for i in 0..d {
                let mut acc = LseAcc::new(dims[i]);
                for (flat, &c) in cost.entries().iter().enumerate() {
                    let mut v = -c / stage_eps;
                    for (l, ll) in lambda.iter().enumerate() {
                        v += ll[cost.mode_index(flat, l)];
                    }
                    acc.push(cost.mode_index(flat, i), v);
                }
                for j in 0..dims[i] {
                    lambda[i][j] += log_p[i][j] - acc.value(j);
                }
            }
            // Marginal residuals of the implied plan.
            residual = 0.0;
            for i in 0..d {
                let mut acc = LseAcc::new(dims[i]);
                for (flat, &c) in cost.entries().iter().enumerate() {
                    let mut v = -c / stage_eps;
                    for (l, ll) in lambda.iter().enumerate() {
                        v += ll[cost.mode_index(flat, l)];
                    }
                    acc.push(cost.mode_index(flat, i), v);
                }
                for j in 0..dims[i] {
                    residual =
                        residual.max((acc.value(j).exp() - inst.marginals().vector(i)[j]).abs());
                }
            }
            if residual <= stage_tol || sweep >= stage_cap {
                break;
            }
        }
        if last && residual > tol {
            return Err(OtError::IterationBudget(format!(
                "entropic Sinkhorn at eps={eps:.3e}: residual {residual:.3e} > tol {tol:.3e} after {total_sweeps} sweeps"
            )));
        }
    }

    // Balance the potentials: shift by t_i with sum t_i = 0.
    let sums: Vec<f64> = lambda.iter().map(|l| l.iter().sum()).collect();
    let inv: Vec<f64> = dims.iter().map(|&n| 1.0 / n as f64).collect();
    let target: f64 =
        sums.iter().zip(&inv).map(|(s, w)| s * w).sum::<f64>() / inv.iter().sum::<f64>();
    for (i, li) in lambda.iter_mut().enumerate() {
        let shift = (target - sums[i]) / dims[i] as f64;
        for v in li.iter_mut() {
            *v += shift;
        }
    }

    let mut u = DenseTensor::zeros(dims.clone());
    for flat in 0..u.len() {
        let mut v = -cost.entries()[flat] / eps;
        for (l, ll) in lambda.iter().enumerate() {
            v += ll[cost.mode_index(flat, l)];
        }
        u.entries_mut()[flat] = v.exp();
    }
    let tau_eps = cost.inner(&u) - eps * shannon_entropy(&u);
    Ok(EntropicSolution {
        tau_eps,
        coupling: Coupling { tensor: u },
        potentials: lambda,
        sweeps: total_sweeps,
        max_residual: residual,
    })
}

/// Classic kernel-space Sinkhorn on `exp(-C/eps)`. Fails with a distinct
/// error when the kernel underflows to an all-zero slice, which happens for
/// small `eps`; the log-domain solver has no such failure mode.
pub fn entropic_sinkhorn_kernel(
    inst: &ClassicalInstance,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    check_entropic_inputs(inst, eps)?;
    let dims = inst.dims().to_vec();
    let d = dims.len();
    let cost = inst.cost();
    let mut kernel = DenseTensor::zeros(dims.clone());
    for (k, &c) in cost.entries().iter().enumerate() {
        kernel.entries_mut()[k] = (-c / eps).exp();
    }
    for i in 0..d {
        let slice_max = {
            let mut m = vec![0.0f64; dims[i]];
            for (flat, &v) in kernel.entries().iter().enumerate() {
                let j = kernel.mode_index(flat, i);
                m[j] = m[j].max(v);
            }
            m
        };
        if let Some(j) = slice_max.iter().position(|&v| v == 0.0) {
            return Err(OtError::KernelUnderflow(format!("slice {j} of mode {i}")));
        }
    }

    let mut scalings: Vec<Vec<f64>> = dims.iter().map(|&n| vec![1.0; n]).collect();
    let mut residual = f64::INFINITY;
    let mut sweeps = 0usize;
    while sweeps < max_iter {
        sweeps += 1;
        for i in 0..d {
            let mut sums = vec![0.0f64; dims[i]];
            for (flat, &kv) in kernel.entries().iter().enumerate() {
                let mut v = kv;
                for (l, sl) in scalings.iter().enumerate() {
                    if l != i {
                        v *= sl[kernel.mode_index(flat, l)];
                    }
                }
                sums[kernel.mode_index(flat, i)] += v;
            }
            for j in 0..dims[i] {
                scalings[i][j] = inst.marginals().vector(i)[j] / sums[j];
            }
        }
        residual = 0.0;
        for i in 0..d {
            let mut sums = vec![0.0f64; dims[i]];
            for (flat, &kv) in kernel.entries().iter().enumerate() {
                let mut v = kv;
                for (l, sl) in scalings.iter().enumerate() {
                    v *= sl[kernel.mode_index(flat, l)];
                }
                sums[kernel.mode_index(flat, i)] += v;
            }
            for j in 0..dims[i] {
                residual = residual.max((sums[j] - inst.marginals().vector(i)[j]).abs());
            }
        }
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(OtError::IterationBudget(format!(
            "kernel Sinkhorn residual {residual:.3e} > tol {tol:.3e} after {sweeps} sweeps"
        )));
    }

    let mut u = kernel.clone();
    for flat in 0..u.len() {
        let mut v = u.entries()[flat];
        for (l, sl) in scalings.iter().enumerate() {
            v *= sl[u.mode_index(flat, l)];
        }
        u.entries_mut()[flat] = v;
    }
    let potentials: Vec<Vec<f64>> = scalings
        .iter()
        .map(|s| s.iter().map(|v| v.ln()).collect())
        .collect();
    let tau_eps = cost.inner(&u) - eps * shannon_entropy(&u);
    Ok(EntropicSolution {
        tau_eps,
        coupling: Coupling { tensor: u },
        potentials,
        sweeps,
        max_residual: residual,
    })
}

/// Shifts each `x_i` along the all-ones direction (`sum t_i = 0`) so the
/// coordinate sums agree. Leaves the slack tensor and the dual objective
/// unchanged.
pub fn rebalance(z: &DualPoint) -> DualPoint {
    let dims: Vec<usize> = z.x.iter().map(|v| v.len()).collect();
    let sums = z.sums();
    let inv: Vec<f64> = dims.iter().map(|&n| 1.0 / n as f64).collect();
    let target: f64 =
        sums.iter().zip(&inv).map(|(s, w)| s * w).sum::<f64>() / inv.iter().sum::<f64>();
    let x =
        z.x.iter()
            .enumerate()
            .map(|(i, xi)| {
                let shift = (target - sums[i]) / dims[i] as f64;
                xi.iter().map(|v| v + shift).collect()
            })
            .collect();
    DualPoint { x }
}

/// Shifts mode `i` of the dual point so that, slice by slice, the reciprocal
/// slack sums hit the targets: `sum_other 1/slack = d_target[j]`. One scalar
/// root solve per slice; the output stays interior by construction.
pub fn rescale_mode(
    inst: &ClassicalInstance,
    z: &DualPoint,
    mode: usize,
    targets: &[f64],
    tol: f64,
) -> Result<DualPoint> {
    let dims = inst.dims();
    if mode >= dims.len() {
        return Err(OtError::ModeOutOfRange {
            index: mode,
            modes: dims.len(),
        });
    }
    if targets.len() != dims[mode] {
        return Err(OtError::DimensionMismatch(format!(
            "{} targets for mode of dimension {}",
            targets.len(),
            dims[mode]
        )));
    }
    if targets.iter().any(|&t| !(t > 0.0)) {
        return Err(OtError::InvalidInput(
            "rescale targets must be positive".into(),
        ));
    }
    let slack = slack_tensor(inst, z)?;
    if slack.min_entry() <= 0.0 {
        return Err(OtError::DomainViolation(format!(
            "slack min {:.3e} is not positive",
            slack.min_entry()
        )));
    }
    // Gather slice slack values.
    let n = dims[mode];
    let mut slices: Vec<Vec<f64>> = vec![Vec::with_capacity(slack.len() / n); n];
    for (flat, &s) in slack.entries().iter().enumerate() {
        slices[slack.mode_index(flat, mode)].push(s);
    }
    let mut out = z.clone();
    for j in 0..n {
        let spectrum = ShiftSpectrum::new(std::mem::take(&mut slices[j]))?;
        let root = rootfind::solve(targets[j], &spectrum, tol)?;
        // New slack on the slice is old + root.x, so the dual entry moves down.
        out.x[mode][j] -= root.x;
    }
    debug_assert!(
        slack_tensor(inst, &out)?.min_entry() > 0.0,
        "rescale left the dual domain"
    );
    Ok(out)
}

/// Dual functional of the barrier relaxation:
/// `phi = sum p_i.x_i + eps * sum log(slack) + N eps (1 - log eps)`.
pub fn phi_dual(inst: &ClassicalInstance, z: &DualPoint, eps: f64) -> Result<f64> {
    let slack = slack_tensor(inst, z)?;
    if slack.min_entry() <= 0.0 {
        return Err(OtError::DomainViolation(
            "phi evaluated outside the dual domain".into(),
        ));
    }
    let log_sum: f64 = slack.entries().iter().map(|&s| s.ln()).sum();
    let n_cells = inst.cells() as f64;
    Ok(z.objective(inst.marginals()) + eps * log_sum + n_cells * eps * (1.0 - eps.ln()))
}

/// One trace row per sweep of the generalized Sinkhorn.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sweep: usize,
    pub phi: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BarrierSinkhornSolution {
    pub tau_beta: f64,
    pub dual: DualPoint,
    pub coupling: Coupling,
    pub sweeps: usize,
    pub max_residual: f64,
    pub converged: bool,
    pub trace: Vec<SweepRow>,
}

/// Recovers the primal `U = eps * slack^{-o}` from an interior dual point.
pub fn barrier_primal(inst: &ClassicalInstance, z: &DualPoint, eps: f64) -> Result<Coupling> {
    let slack = slack_tensor(inst, z)?;
    if slack.min_entry() <= 0.0 {
        return Err(OtError::DomainViolation(
            "primal recovery outside the dual domain".into(),
        ));
    }
    let mut u = slack.clone();
    for v in u.entries_mut() {
        *v = eps / *v;
    }
    Ok(Coupling { tensor: u })
}

/// Generalized Sinkhorn for the barrier relaxation: cyclic mode rescaling with
/// targets `p_i / eps`, a rebalance after each sweep, and the dual functional
/// `phi` nondecreasing across sweeps. When the sweep budget runs out the best
/// iterate is returned with `converged = false`.
pub fn barrier_sinkhorn(
    inst: &ClassicalInstance,
    eps: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<BarrierSinkhornSolution> {
    barrier_sinkhorn_from(inst, eps, tol, max_sweeps, start_dual_point(inst))
}

/// Same as [`barrier_sinkhorn`] but from a caller-provided interior start.
pub fn barrier_sinkhorn_from(
    inst: &ClassicalInstance,
    eps: f64,
    tol: f64,
    max_sweeps: usize,
    start: DualPoint,
) -> Result<BarrierSinkhornSolution> {
    if eps <= 0.0 {
        return Err(OtError::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let dims = inst.dims();
    let d = dims.len();
    let max_dim = *dims.iter().max().unwrap() as f64;
    let root_tol = (tol / eps) / (10.0 * max_dim);
    let targets: Vec<Vec<f64>> = (0..d)
        .map(|i| inst.marginals().vector(i).iter().map(|p| p / eps).collect())
        .collect();

    let mut z = start;
    {
        let slack = slack_tensor(inst, &z)?;
        if slack.min_entry() <= 0.0 {
            return Err(OtError::DomainViolation(
                "barrier Sinkhorn start is not interior".into(),
            ));
        }
    }
    let mut trace = Vec::new();
    let mut phi_prev = phi_dual(inst, &z, eps)?;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut sweeps = 0usize;

    while sweeps < max_sweeps {
        sweeps += 1;
        for i in 0..d {
            z = rescale_mode(inst, &z, i, &targets[i], root_tol)?;
        }
        z = rebalance(&z);
        let phi = phi_dual(inst, &z, eps)?;
        debug_assert!(
            phi >= phi_prev - 1e-10 * (1.0 + phi_prev.abs()),
            "phi decreased across a sweep: {phi_prev} -> {phi}"
        );
        phi_prev = phi;

        let u = barrier_primal(inst, &z, eps)?;
        residual = u.marginal_residual(inst.marginals());
        trace.push(SweepRow {
            sweep: sweeps,
            phi,
            max_residual: residual,
        });
        if residual <= tol {
            converged = true;
            break;
        }
    }

    let coupling = barrier_primal(inst, &z, eps)?;
    let tau_beta = inst.cost().inner(&coupling.tensor) + eps * log_barrier(&coupling.tensor);
    Ok(BarrierSinkhornSolution {
        tau_beta,
        dual: z,
        coupling,
        sweeps,
        max_residual: residual,
        converged,
        trace,
    })
}

/// Two-sided bound chain of the bipartite barrier relaxation.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub tau: f64,
    pub tau_beta: f64,
    pub upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

/// Checks the strict chain `tau < tau_beta < tau + n1 n2 eps (1 - log eps) +
/// (n1 n2 eps / 2) log(2c^2 + 2(2c/(min p1 min p2))^2)` and returns the
/// terms. Bipartite probability instances only.
pub fn bound_chain_classical(
    inst: &ClassicalInstance,
    eps: f64,
    tau: f64,
    tau_beta: f64,
) -> Result<ChainReport> {
    if inst.parties() != 2 {
        return Err(OtError::InvalidInput(
            "bound chain is stated for bipartite instances".into(),
        ));
    }
    if !inst.marginals().is_probability() {
        return Err(OtError::InvalidInput(
            "bound chain needs probability marginals".into(),
        ));
    }
    let dims = inst.dims();
    let n1n2 = (dims[0] * dims[1]) as f64;
    let mins = inst.marginals().normalized_min_entries();
    let c = inst.c_abs();
    let ratio = 2.0 * c / (mins[0] * mins[1]);
    let upper = tau
        + n1n2 * eps * (1.0 - eps.ln())
        + 0.5 * n1n2 * eps * (2.0 * c * c + 2.0 * ratio * ratio).ln();
    let report = ChainReport {
        tau,
        tau_beta,
        upper,
        lower_margin: tau_beta - tau,
        upper_margin: upper - tau_beta,
    };
    if !(tau < tau_beta) {
        return Err(OtError::ChainViolation(format!(
            "tau = {tau} is not strictly below tau_beta = {tau_beta}"
        )));
    }
    if !(tau_beta < upper) {
        return Err(OtError::ChainViolation(format!(
            "tau_beta = {tau_beta} is not strictly below the upper bound {upper}"
        )));
    }
    Ok(report)
}
