//! Complex Hermitian matrices, product-space operators, partial traces,
//! Kronecker lifts, a cyclic Jacobi eigensolver, Cholesky-based log-det /
//! positive-definiteness detection, and the isometric real parametrization
//! used to assemble gradients and Hessians of log-det barriers.

use crate::error::{OtError, Result};
use num_complex::Complex64;

/// Hermitian matrix stored dense row-major. The constructor symmetrizes
/// `(H + H*)/2` and rejects inputs that are not Hermitian within `1e-12`
/// absolute (relative to the largest magnitude entry).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(OtError::DimensionMismatch(format!(
                "{n}x{n} Hermitian matrix needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut sym = entries.clone();
        for p in 0..n {
            for q in p..n {
                let a = entries[p * n + q];
                let b = entries[q * n + p].conj();
                if (a - b).norm() > 1e-12 * (1.0 + scale) {
                    return Err(OtError::InvalidInput(format!(
                        "matrix is not Hermitian at ({p},{q}): {a} vs conj {b}"
                    )));
                }
                let avg = 0.5 * (a + b);
                sym[p * n + q] = avg;
                sym[q * n + p] = avg.conj();
            }
            sym[p * n + p] = Complex64::new(sym[p * n + p].re, 0.0);
        }
        Ok(HermitianMatrix { n, entries: sym })
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            n,
            entries: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        h
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.entries[i * n + i] = Complex64::new(values[i], 0.0);
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.entries[p * self.n + q]
    }

    /// Sets entry (p,q) and mirrors (q,p) with the conjugate.
    pub fn set(&mut self, p: usize, q: usize, v: Complex64) {
        self.entries[p * self.n + q] = v;
        if p == q {
            self.entries[p * self.n + p] = Complex64::new(v.re, 0.0);
        } else {
            self.entries[q * self.n + p] = v.conj();
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entries[i * self.n + i].re).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        debug_assert_eq!(self.n, other.n);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        HermitianMatrix { n: self.n, entries }
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        debug_assert_eq!(self.n, other.n);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        HermitianMatrix { n: self.n, entries }
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        let entries = self.entries.iter().map(|a| a * s).collect();
        HermitianMatrix { n: self.n, entries }
    }

    /// `tr(self * other)`; real for Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..n {
            for q in 0..n {
                acc += self.entries[p * n + q] * other.entries[q * n + p];
            }
        }
        acc.re
    }

    pub fn matmul(&self, other: &HermitianMatrix) -> Vec<Complex64> {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        out
    }

    pub fn max_offdiag_norm(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    worst = worst.max(self.entries[p * n + q].norm());
                }
            }
        }
        worst
    }
}

/// Hermitian operator on a tensor-product space with row/column indices
/// identified with row-major multi-indices over `mode_dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOperator {
    mode_dims: Vec<usize>,
    matrix: HermitianMatrix,
}

impl ProductOperator {
    pub fn new(mode_dims: Vec<usize>, matrix: HermitianMatrix) -> Result<Self> {
        let total: usize = mode_dims.iter().product();
        if mode_dims.is_empty() || mode_dims.contains(&0) {
            return Err(OtError::InvalidInput(format!(
                "mode dims must all be >= 1, got {mode_dims:?}"
            )));
        }
        if matrix.dim() != total {
            return Err(OtError::DimensionMismatch(format!(
                "operator dimension {} does not match product of mode dims {mode_dims:?} = {total}",
                matrix.dim()
            )));
        }
        Ok(ProductOperator { mode_dims, matrix })
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut HermitianMatrix {
        &mut self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Stride of mode `i` in the row-major flat index.
    pub fn stride(&self, mode: usize) -> usize {
        self.mode_dims[(mode + 1)..].iter().product()
    }

    /// Flat offsets of all multi-indices with mode `i` removed; the flat index
    /// with mode `i` set to `a` is `a * stride(i) + offset`.
    pub fn context_offsets(&self, mode: usize) -> Vec<usize> {
        let stride = self.stride(mode);
        let n_i = self.mode_dims[mode];
        let total = self.dim();
        let block = stride * n_i;
        let mut offsets = Vec::with_capacity(total / n_i);
        let mut outer = 0;
        while outer < total {
            for inner in 0..stride {
                offsets.push(outer + inner);
            }
            outer += block;
        }
        offsets
    }
}

/// `tr_{î} H`: traces out every mode except `mode` (0-based). The result is
/// Hermitian with the same trace as `H`.
pub fn partial_trace_except(h: &ProductOperator, mode: usize) -> Result<HermitianMatrix> {
    if mode >= h.modes() {
        return Err(OtError::ModeOutOfRange {
            index: mode,
            modes: h.modes(),
        });
    }
    let n_i = h.mode_dims()[mode];
    let stride = h.stride(mode);
    let offsets = h.context_offsets(mode);
    let big = h.matrix();
    let nn = h.dim();
    let mut out = HermitianMatrix::zeros(n_i);
    for a in 0..n_i {
        for b in 0..n_i {
            let mut acc = Complex64::new(0.0, 0.0);
            for &off in &offsets {
                acc += big.entries[(a * stride + off) * nn + (b * stride + off)];
            }
            out.entries[a * n_i + b] = acc;
        }
    }
    // Symmetrize against round-off.
    for p in 0..n_i {
        for q in (p + 1)..n_i {
            let avg = 0.5 * (out.entries[p * n_i + q] + out.entries[q * n_i + p].conj());
            out.entries[p * n_i + q] = avg;
            out.entries[q * n_i + p] = avg.conj();
        }
        let d = out.entries[p * n_i + p];
        out.entries[p * n_i + p] = Complex64::new(d.re, 0.0);
    }
    Ok(out)
}

/// Lifts `u` on mode `i` to the product space: identity on every other mode.
pub fn kron_lift(u: &HermitianMatrix, mode_dims: &[usize], mode: usize) -> Result<ProductOperator> {
    if mode >= mode_dims.len() {
        return Err(OtError::ModeOutOfRange {
            index: mode,
            modes: mode_dims.len(),
        });
    }
    if u.dim() != mode_dims[mode] {
        return Err(OtError::DimensionMismatch(format!(
            "lift of a {}x{} matrix onto mode {mode} with dim {}",
            u.dim(),
            u.dim(),
            mode_dims[mode]
        )));
    }
    let total: usize = mode_dims.iter().product();
    let mut big = HermitianMatrix::zeros(total);
    let shell = ProductOperator::new(mode_dims.to_vec(), HermitianMatrix::zeros(total))?;
    let stride = shell.stride(mode);
    let offsets = shell.context_offsets(mode);
    let n_i = mode_dims[mode];
    for a in 0..n_i {
        for b in 0..n_i {
            let v = u.get(a, b);
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for &off in &offsets {
                big.entries[(a * stride + off) * total + (b * stride + off)] = v;
            }
        }
    }
    ProductOperator::new(mode_dims.to_vec(), big)
}

/// Eigenvalues and matrix norms of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralBundle {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub norm2: f64,
    pub norm_f: f64,
}

/// Full eigenvalue set via cyclic complex Jacobi rotations.
pub fn spectral_bundle(h: &HermitianMatrix) -> Result<SpectralBundle> {
    let n = h.dim();
    let norm_f_input = h.frobenius();
    let mut a = h.clone();
    let tol = 1e-15 * (1.0 + norm_f_input);
    let max_sweeps = 100;
    let mut sweeps = 0;
    loop {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.entries[p * n + q].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(OtError::EigenNonConvergence {
                sweeps,
                offdiag: (2.0 * off).sqrt(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.entries[p * n + q];
                let beta = apq.norm();
                if beta <= tol / (n as f64) {
                    continue;
                }
                let phase = apq / beta;
                let app = a.entries[p * n + p].re;
                let aqq = a.entries[q * n + q].re;
                let tau = (aqq - app) / (2.0 * beta);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary G: G[p][p]=c, G[p][q]=s*phase, G[q][p]=-s*conj(phase), G[q][q]=c.
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.entries[k * n + p];
                    let akq = a.entries[k * n + q];
                    let new_kp = akp * c - akq * s * phase.conj();
                    let new_kq = akp * s * phase + akq * c;
                    a.entries[k * n + p] = new_kp;
                    a.entries[p * n + k] = new_kp.conj();
                    a.entries[k * n + q] = new_kq;
                    a.entries[q * n + k] = new_kq.conj();
                }
                let new_pp = app * c * c - 2.0 * beta * c * s + aqq * s * s;
                let new_qq = app * s * s + 2.0 * beta * c * s + aqq * c * c;
                a.entries[p * n + p] = Complex64::new(new_pp, 0.0);
                a.entries[q * n + q] = Complex64::new(new_qq, 0.0);
                a.entries[p * n + q] = Complex64::new(0.0, 0.0);
                a.entries[q * n + p] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a.entries[i * n + i].re).collect();
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let lambda_max = eigenvalues[0];
    let lambda_min = eigenvalues[n - 1];
    Ok(SpectralBundle {
        norm2: lambda_max.max(-lambda_min),
        norm_f: eigenvalues.iter().map(|l| l * l).sum::<f64>().sqrt(),
        eigenvalues,
        lambda_min,
        lambda_max,
    })
}

/// Complex Cholesky factor `L` (lower, real positive diagonal) of `H = L L*`.
/// Pivot tolerance is `1e-12 * (1 + max diagonal)`, scale invariant.
pub fn cholesky_factor(h: &HermitianMatrix) -> Option<Vec<Complex64>> {
    let n = h.dim();
    let mut max_diag = 0.0f64;
    for i in 0..n {
        max_diag = max_diag.max(h.get(i, i).re);
    }
    let pivot_tol = 1e-12 * (1.0 + max_diag);
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = h.get(j, j).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d <= pivot_tol {
            return None;
        }
        let dj = d.sqrt();
        l[j * n + j] = Complex64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut v = h.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = v / dj;
        }
    }
    Some(l)
}

/// Cholesky-based `log det` and positive-definiteness flag. On failure the
/// flag is false and the returned value is meaningless.
pub fn chol_logdet(h: &HermitianMatrix) -> (f64, bool) {
    match cholesky_factor(h) {
        Some(l) => {
            let n = h.dim();
            let logdet = 2.0 * (0..n).map(|j| l[j * n + j].re.ln()).sum::<f64>();
            (logdet, true)
        }
        None => (f64::NAN, false),
    }
}

/// Inverse of a positive definite Hermitian matrix via its Cholesky factor.
pub fn pd_inverse(h: &HermitianMatrix) -> Option<HermitianMatrix> {
    let l = cholesky_factor(h)?;
    Some(pd_inverse_from_factor(&l, h.dim()))
}

/// Inverse from a precomputed Cholesky factor `L` (`A = L L*`).
pub fn pd_inverse_from_factor(l: &[Complex64], n: usize) -> HermitianMatrix {
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    // Solve L L* X = e_col for each column.
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for v in col.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        col[c] = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let mut acc = col[i];
            for k in 0..i {
                acc -= l[i * n + k] * col[k];
            }
            col[i] = acc / l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut acc = col[i];
            for k in (i + 1)..n {
                acc -= l[k * n + i].conj() * col[k];
            }
            col[i] = acc / l[i * n + i].re;
        }
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    // Symmetrize.
    let mut out = HermitianMatrix::zeros(n);
    for p in 0..n {
        for q in p..n {
            let avg = 0.5 * (inv[p * n + q] + inv[q * n + p].conj());
            out.entries[p * n + q] = avg;
            out.entries[q * n + p] = avg.conj();
        }
        out.entries[p * n + p] = Complex64::new(out.entries[p * n + p].re, 0.0);
    }
    out
}

/// Isometric real parametrization of a Hermitian matrix: the first `n` coords
/// are the diagonal; each pair `p < q` (row-major) contributes
/// `(sqrt(2) Re h_pq, sqrt(2) Im h_pq)`. The map preserves the Frobenius norm
/// and the trace inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCoordinates {
    pub n: usize,
    pub coords: Vec<f64>,
}

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

impl HermitianCoordinates {
    pub fn from_matrix(h: &HermitianMatrix) -> Self {
        let n = h.dim();
        let mut coords = Vec::with_capacity(n * n);
        for i in 0..n {
            coords.push(h.get(i, i).re);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let z = h.get(p, q);
                coords.push(SQRT2 * z.re);
                coords.push(SQRT2 * z.im);
            }
        }
        HermitianCoordinates { n, coords }
    }

    pub fn to_matrix(&self) -> HermitianMatrix {
        let n = self.n;
        let mut h = HermitianMatrix::zeros(n);
        for i in 0..n {
            h.entries[i * n + i] = Complex64::new(self.coords[i], 0.0);
        }
        let mut k = n;
        for p in 0..n {
            for q in (p + 1)..n {
                let re = self.coords[k] / SQRT2;
                let im = self.coords[k + 1] / SQRT2;
                k += 2;
                h.entries[p * n + q] = Complex64::new(re, im);
                h.entries[q * n + p] = Complex64::new(re, -im);
            }
        }
        h
    }
}

/// Basis Hermitian matrix with coordinate `index` set to 1 (all others 0).
pub fn coordinate_basis_matrix(n: usize, index: usize) -> HermitianMatrix {
    let mut coords = vec![0.0; n * n];
    coords[index] = 1.0;
    HermitianCoordinates { n, coords }.to_matrix()
}
