//! Value/gradient/Hessian oracles for the augmented dual barriers: the
//! entrywise log barrier on the classical slack tensor and the log-det
//! barrier on the quantum slack operator, each plus a Euclidean ball barrier
//! that bounds the search region. Also canonical start points, containment
//! radii, and a sampled estimate of the barrier complexity parameter.

use std::cell::Cell;

use crate::classical::{self, ClassicalInstance};
use crate::error::{OtError, Result};
use crate::herm::{
    cholesky_factor, coordinate_basis_matrix, partial_trace_except, pd_inverse_from_factor,
    HermitianCoordinates, ProductOperator,
};
use crate::linalg::{lu_solve, Mat};
use crate::quantum::{self, HermitianDualPoint, QuantumInstance};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Barrier value, gradient, and Hessian at a point, in the flat real dual
/// coordinates. When `domain_ok` is false only the flag is meaningful.
#[derive(Debug, Clone)]
pub struct BarrierEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Mat,
    pub domain_ok: bool,
}

impl BarrierEvaluation {
    fn outside(dim: usize) -> Self {
        BarrierEvaluation {
            value: f64::INFINITY,
            gradient: vec![0.0; dim],
            hessian: Mat::zeros(dim, dim),
            domain_ok: false,
        }
    }
}

/// Ball `B_o(center, radius)` that contains the dual optimizer.
#[derive(Debug, Clone)]
pub struct TrustRegion {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TrustRegion {
    pub fn distance2(&self, z: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(z)
            .map(|(c, v)| (v - c) * (v - c))
            .sum()
    }
}

/// Containment radius for the classical dual:
/// `r^2 = max(n_i) (9c^2 + 1) / prod_i (min p_i)^2` with unit-mass marginals.
pub fn classical_radius(inst: &ClassicalInstance) -> f64 {
    let max_n = *inst.dims().iter().max().unwrap() as f64;
    let c = inst.c_abs();
    let denom: f64 = inst.marginals().normalized_min_entries().iter().product();
    (max_n * (9.0 * c * c + 1.0) / (denom * denom)).sqrt()
}

/// Containment radius for the quantum dual, with `|C|_2` in place of `c` and
/// smallest density eigenvalues in place of smallest marginal entries.
pub fn quantum_radius(inst: &QuantumInstance) -> f64 {
    let max_n = *inst.dims().iter().max().unwrap() as f64;
    let c = inst.norm2_c();
    let denom: f64 = inst.densities().normalized_lambda_mins().iter().product();
    (max_n * (9.0 * c * c + 1.0) / (denom * denom)).sqrt()
}

pub fn classical_trust_region(inst: &ClassicalInstance) -> TrustRegion {
    let region = TrustRegion {
        center: classical::start_dual_point(inst).flat(),
        radius: classical_radius(inst),
    };
    debug_assert!(region.radius > 1.0);
    region
}

pub fn quantum_trust_region(inst: &QuantumInstance) -> TrustRegion {
    let region = TrustRegion {
        center: quantum::start_dual_point(inst).flat(),
        radius: quantum_radius(inst),
    };
    debug_assert!(region.radius > 1.0);
    region
}

/// A barrier oracle over flat real dual coordinates.
pub trait DualOracle {
    fn dim(&self) -> usize;
    fn eval(&self, z: &[f64]) -> BarrierEvaluation;
    /// Drains the flop counter accumulated since the last call.
    fn take_flops(&self) -> u64 {
        0
    }
}

fn ball_terms(region: &TrustRegion, z: &[f64]) -> Option<(f64, Vec<f64>, f64)> {
    let r2 = region.radius * region.radius;
    let dist2 = region.distance2(z);
    let s = r2 - dist2;
    if s <= 0.0 {
        return None;
    }
    let value = -s.ln() + r2.ln();
    let grad: Vec<f64> = region
        .center
        .iter()
        .zip(z)
        .map(|(c, v)| 2.0 * (v - c) / s)
        .collect();
    Some((value, grad, s))
}

fn add_ball_hessian(h: &mut Mat, region: &TrustRegion, z: &[f64], s: f64) {
    let m = z.len();
    let d: Vec<f64> = z.iter().zip(&region.center).map(|(v, c)| v - c).collect();
    for i in 0..m {
        h[(i, i)] += 2.0 / s;
        for j in 0..m {
            h[(i, j)] += 4.0 * d[i] * d[j] / (s * s);
        }
    }
}

/// Augmented barrier for the classical dual domain:
/// `-sum log(slack) - log(r^2 - |z - z0|^2) + log r^2`.
pub struct ClassicalBarrier<'a> {
    inst: &'a ClassicalInstance,
    region: TrustRegion,
    mode_offsets: Vec<usize>,
    flops: Cell<u64>,
}

impl<'a> ClassicalBarrier<'a> {
    pub fn new(inst: &'a ClassicalInstance) -> Self {
        Self::with_region(inst, classical_trust_region(inst))
    }

    pub fn with_region(inst: &'a ClassicalInstance, region: TrustRegion) -> Self {
        let mut mode_offsets = Vec::with_capacity(inst.parties());
        let mut off = 0;
        for &n in inst.dims() {
            mode_offsets.push(off);
            off += n;
        }
        ClassicalBarrier {
            inst,
            region,
            mode_offsets,
            flops: Cell::new(0),
        }
    }

    pub fn region(&self) -> &TrustRegion {
        &self.region
    }

    pub fn instance(&self) -> &ClassicalInstance {
        self.inst
    }
}

impl DualOracle for ClassicalBarrier<'_> {
    fn dim(&self) -> usize {
        self.inst.dims().iter().sum()
    }

    fn eval(&self, z: &[f64]) -> BarrierEvaluation {
        let m = self.dim();
        debug_assert_eq!(z.len(), m);
        let d = self.inst.parties();
        let cost = self.inst.cost();
        let cells = cost.len();
        self.flops
            .set(self.flops.get() + (cells * (3 * d + d * d + 4)) as u64);

        let Some((ball_value, ball_grad, s_ball)) = ball_terms(&self.region, z) else {
            return BarrierEvaluation::outside(m);
        };

        let mut value = ball_value;
        let mut gradient = ball_grad;
        let mut hessian = Mat::zeros(m, m);
        let mut positions = vec![0usize; d];
        for flat in 0..cells {
            let mut slack = cost.entries()[flat];
            for i in 0..d {
                let pos = self.mode_offsets[i] + cost.mode_index(flat, i);
                positions[i] = pos;
                slack -= z[pos];
            }
            if slack <= 0.0 {
                return BarrierEvaluation::outside(m);
            }
            value -= slack.ln();
            let w = 1.0 / slack;
            let w2 = w * w;
            for i in 0..d {
                gradient[positions[i]] += w;
                hessian[(positions[i], positions[i])] += w2;
                for l in (i + 1)..d {
                    hessian[(positions[i], positions[l])] += w2;
                    hessian[(positions[l], positions[i])] += w2;
                }
            }
        }
        add_ball_hessian(&mut hessian, &self.region, z, s_ball);
        BarrierEvaluation {
            value,
            gradient,
            hessian,
            domain_ok: true,
        }
    }

    fn take_flops(&self) -> u64 {
        self.flops.replace(0)
    }
}

/// Augmented barrier for the quantum dual domain:
/// `-log det(slack) - log(r^2 - sum |X_i - X_i0|_F^2) + log r^2`, evaluated in
/// the isometric real coordinates.
pub struct QuantumBarrier<'a> {
    inst: &'a QuantumInstance,
    region: TrustRegion,
    mode_offsets: Vec<usize>,
    /// Sparse triplets (row, col, value) of each lifted coordinate basis
    /// direction, reused across evaluations.
    basis_lifts: Vec<Vec<(usize, usize, Complex64)>>,
    flops: Cell<u64>,
}

impl<'a> QuantumBarrier<'a> {
    pub fn new(inst: &'a QuantumInstance) -> Self {
        Self::with_region(inst, quantum_trust_region(inst))
    }

    pub fn with_region(inst: &'a QuantumInstance, region: TrustRegion) -> Self {
        let dims = inst.dims();
        let mut mode_offsets = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &n in dims {
            mode_offsets.push(off);
            off += n * n;
        }
        let shell = inst.cost();
        let mut basis_lifts = Vec::with_capacity(off);
        for (i, &n_i) in dims.iter().enumerate() {
            let stride = shell.stride(i);
            let offsets = shell.context_offsets(i);
            for a in 0..n_i * n_i {
                let basis = coordinate_basis_matrix(n_i, a);
                let mut triplets = Vec::new();
                for p in 0..n_i {
                    for q in 0..n_i {
                        let v = basis.get(p, q);
                        if v.norm_sqr() == 0.0 {
                            continue;
                        }
                        for &ctx in &offsets {
                            triplets.push((p * stride + ctx, q * stride + ctx, v));
                        }
                    }
                }
                basis_lifts.push(triplets);
            }
        }
        QuantumBarrier {
            inst,
            region,
            mode_offsets,
            basis_lifts,
            flops: Cell::new(0),
        }
    }

    pub fn region(&self) -> &TrustRegion {
        &self.region
    }

    pub fn instance(&self) -> &QuantumInstance {
        self.inst
    }
}

impl DualOracle for QuantumBarrier<'_> {
    fn dim(&self) -> usize {
        self.inst.dims().iter().map(|&n| n * n).sum()
    }

    fn eval(&self, z: &[f64]) -> BarrierEvaluation {
        let m = self.dim();
        debug_assert_eq!(z.len(), m);
        let dims = self.inst.dims();
        let nn = self.inst.total_dim();

        let Some((ball_value, ball_grad, s_ball)) = ball_terms(&self.region, z) else {
            return BarrierEvaluation::outside(m);
        };

        let point = HermitianDualPoint::from_flat(dims, z);
        let slack = match quantum::slack_operator(self.inst, &point) {
            Ok(s) => s,
            Err(_) => return BarrierEvaluation::outside(m),
        };
        let Some(factor) = cholesky_factor(slack.matrix()) else {
            return BarrierEvaluation::outside(m);
        };
        let logdet = 2.0 * (0..nn).map(|j| factor[j * nn + j].re.ln()).sum::<f64>();
        let e = pd_inverse_from_factor(&factor, nn);
        let e_op = ProductOperator::new(dims.to_vec(), e.clone()).expect("dims agree");
        // Cholesky + inverse + gradient partial traces.
        self.flops
            .set(self.flops.get() + (4 * nn * nn * nn + 2 * nn * nn * dims.len()) as u64);

        let value = -logdet + ball_value;
        let mut gradient = ball_grad;
        for (i, &n_i) in dims.iter().enumerate() {
            let g_i = partial_trace_except(&e_op, i).expect("mode in range");
            let coords = HermitianCoordinates::from_matrix(&g_i).coords;
            let off = self.mode_offsets[i];
            for (k, v) in coords.iter().enumerate() {
                gradient[off + k] += v;
            }
            debug_assert_eq!(coords.len(), n_i * n_i);
        }

        // Hessian of -log det via the resolvent quadratic form:
        // H[a][b] = tr(E W_a E W_b) over the sparse lifted basis directions.
        let mut hessian = Mat::zeros(m, m);
        let mut quad_flops = 0u64;
        for a in 0..m {
            let wa = &self.basis_lifts[a];
            for b in a..m {
                let wb = &self.basis_lifts[b];
                quad_flops += (wa.len() * wb.len()) as u64;
                let mut acc = Complex64::new(0.0, 0.0);
                for &(v, w, alpha) in wa {
                    for &(t, u, beta) in wb {
                        acc += alpha * beta * e.get(u, v) * e.get(w, t);
                    }
                }
                // tr(E W_a E W_b) is real for Hermitian arguments; the
                // imaginary residue is rounding noise.
                hessian[(a, b)] = acc.re;
                hessian[(b, a)] = acc.re;
            }
        }
        self.flops.set(self.flops.get() + 6 * quad_flops);
        add_ball_hessian(&mut hessian, &self.region, z, s_ball);
        BarrierEvaluation {
            value,
            gradient,
            hessian,
            domain_ok: true,
        }
    }

    fn take_flops(&self) -> u64 {
        self.flops.replace(0)
    }
}

/// Largest step `s` with `from + s * dir` still inside the barrier domain,
/// found by doubling and bisection on `domain_ok`.
pub fn ray_to_boundary(oracle: &dyn DualOracle, from: &[f64], dir: &[f64]) -> Result<f64> {
    let probe = |s: f64| {
        let z: Vec<f64> = from.iter().zip(dir).map(|(f, d)| f + s * d).collect();
        oracle.eval(&z).domain_ok
    };
    if !probe(0.0) {
        return Err(OtError::DomainViolation(
            "ray origin is outside the domain".into(),
        ));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while probe(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 80 {
            return Err(OtError::Internal(
                "domain appears unbounded along the ray".into(),
            ));
        }
    }
    let mut lo = if doublings == 0 { 0.0 } else { hi / 2.0 };
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(lo)
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Sampled lower bound on the complexity parameter
/// `theta = sup grad^T H^{-1} grad` over interior points, reached by walking
/// random rays from the region center toward the boundary.
pub fn theta_estimate(
    oracle: &dyn DualOracle,
    region: &TrustRegion,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(OtError::InvalidInput(
            "theta estimate needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = oracle.dim();
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let u = random_unit(dim, &mut rng);
        let s_max = ray_to_boundary(oracle, &region.center, &u)?;
        let frac: f64 = rng.gen_range(0.0..1.0);
        // Bias samples toward the boundary, where the supremum is approached,
        // but stay strictly interior so the Hessian solve is well scaled.
        let s = s_max * (1.0 - frac * frac * frac).min(0.999);
        let z: Vec<f64> = region
            .center
            .iter()
            .zip(&u)
            .map(|(c, d)| c + s * d)
            .collect();
        let ev = oracle.eval(&z);
        if !ev.domain_ok {
            continue;
        }
        let hg = lu_solve(&ev.hessian, &ev.gradient).map_err(|e| {
            OtError::SingularSystem(format!("Hessian solve failed at sampled point {z:?}: {e}"))
        })?;
        let theta: f64 = ev.gradient.iter().zip(&hg).map(|(a, b)| a * b).sum();
        best = best.max(theta);
    }
    Ok(best)
}

/// Distances from the region center to sampled boundary points of the barrier
/// domain (slack boundary or ball, whichever the ray hits first).
pub fn boundary_distances(
    oracle: &dyn DualOracle,
    region: &TrustRegion,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = oracle.dim();
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = random_unit(dim, &mut rng);
        out.push(ray_to_boundary(oracle, &region.center, &u)?);
    }
    Ok(out)
}

/// Barrier complexity bound `theta(beta_hat) <= prod(n_i) + 1` for both the
/// classical and quantum augmented barriers.
pub fn theta_bound(dims: &[usize]) -> f64 {
    dims.iter().product::<usize>() as f64 + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::MarginalFamily;
    use crate::herm::HermitianMatrix;
    use crate::tensor::DenseTensor;

    fn classical_instance_2x2() -> ClassicalInstance {
        let cost = DenseTensor::new(vec![2, 2], vec![0.3, 1.0, 0.9, -0.2]).unwrap();
        let m = MarginalFamily::new(vec![vec![0.4, 0.6], vec![0.5, 0.5]]).unwrap();
        ClassicalInstance::new(cost, m).unwrap()
    }

    fn quantum_instance_22() -> QuantumInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let total = 4;
        let mut h = HermitianMatrix::zeros(total);
        for p in 0..total {
            for q in p..total {
                if p == q {
                    h.set(p, q, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
                } else {
                    h.set(
                        p,
                        q,
                        Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)),
                    );
                }
            }
        }
        let cost = ProductOperator::new(vec![2, 2], h).unwrap();
        let d1 = HermitianMatrix::diag(&[0.6, 0.4]);
        let mut d2 = HermitianMatrix::diag(&[0.55, 0.45]);
        d2.set(0, 1, Complex64::new(0.1, 0.05));
        let densities = crate::quantum::DensityFamily::new(vec![d1, d2]).unwrap();
        QuantumInstance::new(cost, densities).unwrap()
    }

    fn numeric_gradient(oracle: &dyn DualOracle, z: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; z.len()];
        for k in 0..z.len() {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += h;
            zm[k] -= h;
            g[k] = (oracle.eval(&zp).value - oracle.eval(&zm).value) / (2.0 * h);
        }
        g
    }

    fn numeric_hessian(oracle: &dyn DualOracle, z: &[f64], h: f64) -> Mat {
        let m = z.len();
        let mut out = Mat::zeros(m, m);
        for k in 0..m {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += h;
            zm[k] -= h;
            let gp = oracle.eval(&zp).gradient;
            let gm = oracle.eval(&zm).gradient;
            for j in 0..m {
                out[(j, k)] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn classical_value_at_center_with_equal_slacks() {
        // All slacks equal s at the center: value = -#cells * log s.
        let cost = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        let m = MarginalFamily::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let inst = ClassicalInstance::new(cost, m).unwrap();
        let oracle = ClassicalBarrier::new(&inst);
        let ev = oracle.eval(&oracle.region().center.clone());
        assert!(ev.domain_ok);
        // c_min = 1 so the start slack is exactly 1 everywhere: value 0.
        assert!(ev.value.abs() < 1e-12);
    }

    #[test]
    fn classical_gradient_and_hessian_match_finite_differences() {
        let inst = classical_instance_2x2();
        let oracle = ClassicalBarrier::new(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let u = random_unit(oracle.dim(), &mut rng);
            let center = oracle.region().center.clone();
            let smax = ray_to_boundary(&oracle, &center, &u).unwrap();
            let z: Vec<f64> = center
                .iter()
                .zip(&u)
                .map(|(c, d)| c + 0.4 * smax.min(3.0) * d)
                .collect();
            let ev = oracle.eval(&z);
            assert!(ev.domain_ok);
            let znorm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let g_fd = numeric_gradient(&oracle, &z, 1e-5 * (1.0 + znorm));
            for (a, b) in ev.gradient.iter().zip(&g_fd) {
                assert!(
                    (a - b).abs() <= 1e-6 * (1.0 + a.abs()),
                    "grad {a} vs fd {b}"
                );
            }
            let h_fd = numeric_hessian(&oracle, &z, 1e-4);
            for i in 0..oracle.dim() {
                for j in 0..oracle.dim() {
                    let a = ev.hessian[(i, j)];
                    let b = h_fd[(i, j)];
                    assert!(
                        (a - b).abs() <= 1e-4 * (1.0 + a.abs()),
                        "hess {a} vs fd {b}"
                    );
                }
            }
            assert!(ev.hessian.asymmetry() < 1e-10);
        }
    }

    #[test]
    fn quantum_value_and_gradient_known_case() {
        // C = 2 I_4, z = 0: value has -log det(2I) = -4 log 2; the log-det
        // gradient over X is I_2 in coordinates.
        let cost =
            ProductOperator::new(vec![2, 2], HermitianMatrix::identity(4).scale(2.0)).unwrap();
        let densities = crate::quantum::DensityFamily::new(vec![
            HermitianMatrix::identity(2).scale(0.5),
            HermitianMatrix::identity(2).scale(0.5),
        ])
        .unwrap();
        let inst = QuantumInstance::new(cost, densities).unwrap();
        // Center the ball at the origin so only the log-det term contributes.
        let dim = 8;
        let region = TrustRegion {
            center: vec![0.0; dim],
            radius: 50.0,
        };
        let oracle = QuantumBarrier::with_region(&inst, region);
        let ev = oracle.eval(&vec![0.0; dim]);
        assert!(ev.domain_ok);
        assert!((ev.value - (-4.0 * 2f64.ln())).abs() < 1e-12);
        // Gradient blocks: diagonal coords 1, off-diagonal coords 0.
        for mode in 0..2 {
            let off = mode * 4;
            assert!((ev.gradient[off] - 1.0).abs() < 1e-12);
            assert!((ev.gradient[off + 1] - 1.0).abs() < 1e-12);
            assert!(ev.gradient[off + 2].abs() < 1e-12);
            assert!(ev.gradient[off + 3].abs() < 1e-12);
        }
    }

    #[test]
    fn quantum_gradient_and_hessian_match_finite_differences() {
        let inst = quantum_instance_22();
        let oracle = QuantumBarrier::new(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let u = random_unit(oracle.dim(), &mut rng);
            let center = oracle.region().center.clone();
            let smax = ray_to_boundary(&oracle, &center, &u).unwrap();
            let z: Vec<f64> = center
                .iter()
                .zip(&u)
                .map(|(c, d)| c + 0.4 * smax.min(3.0) * d)
                .collect();
            let ev = oracle.eval(&z);
            assert!(ev.domain_ok);
            let znorm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let g_fd = numeric_gradient(&oracle, &z, 1e-5 * (1.0 + znorm));
            for (a, b) in ev.gradient.iter().zip(&g_fd) {
                assert!(
                    (a - b).abs() <= 1e-6 * (1.0 + a.abs()),
                    "grad {a} vs fd {b}"
                );
            }
            let h_fd = numeric_hessian(&oracle, &z, 1e-4);
            for i in 0..oracle.dim() {
                for j in 0..oracle.dim() {
                    let a = ev.hessian[(i, j)];
                    let b = h_fd[(i, j)];
                    assert!(
                        (a - b).abs() <= 1e-4 * (1.0 + a.abs()),
                        "hess {a} vs fd {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn barrier_blows_up_toward_the_boundary() {
        let inst = classical_instance_2x2();
        let oracle = ClassicalBarrier::new(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let u = random_unit(oracle.dim(), &mut rng);
        let center = oracle.region().center.clone();
        let smax = ray_to_boundary(&oracle, &center, &u).unwrap();
        let mut exceeded = false;
        for k in 1..60 {
            let frac = 1.0 - 2f64.powi(-k);
            let z: Vec<f64> = center
                .iter()
                .zip(&u)
                .map(|(c, d)| c + frac * smax * d)
                .collect();
            let ev = oracle.eval(&z);
            if !ev.domain_ok {
                break;
            }
            if ev.value > 1e6 {
                exceeded = true;
                break;
            }
        }
        // The ball boundary is hit at finite distance; the barrier passes 1e6
        // long before the slack reaches 1e-9 only on slack-limited rays. On
        // ball-limited rays the ball term provides the blow-up.
        assert!(exceeded || smax >= oracle.region().radius * 0.999);
    }

    #[test]
    fn theta_estimate_respects_bounds() {
        let inst = classical_instance_2x2();
        let oracle = ClassicalBarrier::new(&inst);
        let region = oracle.region().clone();
        let theta = theta_estimate(&oracle, &region, 100, 12345).unwrap();
        let bound = theta_bound(inst.dims());
        assert!(theta <= bound + 1e-6, "theta {theta} > bound {bound}");
        assert!(theta > 0.5, "theta estimate suspiciously small: {theta}");
    }

    #[test]
    fn pure_log_barrier_theta_is_dimension() {
        // theta(-sum log x) = n, checked through the oracle interface on a
        // hand-rolled box barrier.
        struct Box3;
        impl DualOracle for Box3 {
            fn dim(&self) -> usize {
                3
            }
            fn eval(&self, z: &[f64]) -> BarrierEvaluation {
                if z.iter().any(|&v| v <= 0.0 || v >= 1.0) {
                    return BarrierEvaluation::outside(3);
                }
                let value = -z.iter().map(|v| v.ln()).sum::<f64>();
                let gradient: Vec<f64> = z.iter().map(|v| -1.0 / v).collect();
                let mut hessian = Mat::zeros(3, 3);
                for i in 0..3 {
                    hessian[(i, i)] = 1.0 / (z[i] * z[i]);
                }
                BarrierEvaluation {
                    value,
                    gradient,
                    hessian,
                    domain_ok: true,
                }
            }
        }
        let oracle = Box3;
        let region = TrustRegion {
            center: vec![0.5; 3],
            radius: 2.0,
        };
        let theta = theta_estimate(&oracle, &region, 200, 7).unwrap();
        assert!(theta <= 3.0 + 1e-9, "theta {theta} exceeds n");
        assert!(theta > 2.0, "supremum n = 3 badly undersampled: {theta}");
    }

    #[test]
    fn pure_logdet_barrier_theta_is_dimension() {
        // theta(-log det X) = n on the PD cone, sampled through the oracle
        // interface in the isometric coordinates.
        use crate::herm::{pd_inverse, HermitianCoordinates, HermitianMatrix};
        struct LogDet2;
        impl DualOracle for LogDet2 {
            fn dim(&self) -> usize {
                4
            }
            fn eval(&self, z: &[f64]) -> BarrierEvaluation {
                // Clip the unbounded PD cone so ray sampling terminates; the
                // quantity g^T H^{-1} g equals n at every interior point.
                if z.iter().map(|v| v * v).sum::<f64>() > 64.0 {
                    return BarrierEvaluation::outside(4);
                }
                let x = HermitianCoordinates {
                    n: 2,
                    coords: z.to_vec(),
                }
                .to_matrix();
                let Some(inv) = pd_inverse(&x) else {
                    return BarrierEvaluation::outside(4);
                };
                let (logdet, _) = crate::herm::chol_logdet(&x);
                let gradient = HermitianCoordinates::from_matrix(&inv.scale(-1.0)).coords;
                let mut hessian = Mat::zeros(4, 4);
                for a in 0..4 {
                    let ka = inv.matmul(&coordinate_basis_matrix(2, a));
                    for b in 0..4 {
                        let kb = inv.matmul(&coordinate_basis_matrix(2, b));
                        // tr(X^{-1} B_a X^{-1} B_b)
                        let mut acc = Complex64::new(0.0, 0.0);
                        let n = 2;
                        for i in 0..n {
                            for j in 0..n {
                                acc += ka[i * n + j] * kb[j * n + i];
                            }
                        }
                        hessian[(a, b)] = acc.re;
                    }
                }
                BarrierEvaluation {
                    value: -logdet,
                    gradient,
                    hessian,
                    domain_ok: true,
                }
            }
        }
        let oracle = LogDet2;
        let center = HermitianCoordinates::from_matrix(&HermitianMatrix::identity(2)).coords;
        let region = TrustRegion {
            center,
            radius: 10.0,
        };
        let theta = theta_estimate(&oracle, &region, 100, 31).unwrap();
        assert!(theta <= 2.0 + 1e-9, "theta {theta} exceeds n = 2");
        assert!(
            theta > 2.0 - 1e-6,
            "theta(-log det) should be exactly n: {theta}"
        );
    }

    #[test]
    fn boundary_distance_lower_bound() {
        let inst = classical_instance_2x2();
        let oracle = ClassicalBarrier::new(&inst);
        let region = oracle.region().clone();
        let dists = boundary_distances(&oracle, &region, 50, 99).unwrap();
        for d in dists {
            assert!(d >= 1.0 / 2f64.sqrt() - 1e-9, "boundary at distance {d}");
        }
    }

    fn spot_check_self_concordance(oracle: &dyn DualOracle, center: &[f64], seed: u64) {
        // |D^3 f[u,u,u]| <= 2 (D^2 f[u,u])^{3/2} within 5 percent slack,
        // by finite differences of the quadratic form along random rays.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let u = random_unit(oracle.dim(), &mut rng);
            let smax = ray_to_boundary(oracle, center, &u).unwrap();
            let z: Vec<f64> = center
                .iter()
                .zip(&u)
                .map(|(c, d)| c + 0.3 * smax.min(2.0) * d)
                .collect();
            let quad = |point: &[f64]| -> f64 {
                let ev = oracle.eval(point);
                assert!(ev.domain_ok);
                let hu = ev.hessian.matvec(&u);
                u.iter().zip(&hu).map(|(a, b)| a * b).sum()
            };
            let h = 1e-5;
            let zp: Vec<f64> = z.iter().zip(&u).map(|(v, d)| v + h * d).collect();
            let zm: Vec<f64> = z.iter().zip(&u).map(|(v, d)| v - h * d).collect();
            let d2 = quad(&z);
            let d3 = (quad(&zp) - quad(&zm)) / (2.0 * h);
            assert!(
                d3.abs() <= 2.0 * d2.powf(1.5) * 1.05 + 1e-9,
                "D3 {d3} vs D2 {d2}"
            );
        }
    }

    #[test]
    fn self_concordance_spot_check_classical() {
        let inst = classical_instance_2x2();
        let oracle = ClassicalBarrier::new(&inst);
        let center = oracle.region().center.clone();
        spot_check_self_concordance(&oracle, &center, 17);
    }

    #[test]
    fn self_concordance_spot_check_quantum() {
        let inst = quantum_instance_22();
        let oracle = QuantumBarrier::new(&inst);
        let center = oracle.region().center.clone();
        spot_check_self_concordance(&oracle, &center, 19);
    }
}
