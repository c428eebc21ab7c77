//! Dense two-phase primal simplex with Bland's rule, used as the exact LP
//! reference at desk scale. Equality form `min c^T x, A x = b, x >= 0` with
//! `A` of full row rank.

use crate::error::{OtError, Result};
use crate::linalg::{lu_solve, Mat};

const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

struct Tableau<'a> {
    a: &'a Mat,
    b: Vec<f64>,
    n: usize,
    m: usize,
    /// Column indices in the basis; artificials are `n..n+m`.
    basis: Vec<usize>,
}

impl<'a> Tableau<'a> {
    fn column(&self, j: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.m];
        if j < self.n {
            for i in 0..self.m {
                col[i] = self.a[(i, j)];
            }
        } else {
            col[j - self.n] = 1.0;
        }
        col
    }

    fn basis_matrix(&self) -> Mat {
        let mut bm = Mat::zeros(self.m, self.m);
        for (k, &j) in self.basis.iter().enumerate() {
            let col = self.column(j);
            for i in 0..self.m {
                bm[(i, k)] = col[i];
            }
        }
        bm
    }

    fn basic_solution(&self) -> Result<Vec<f64>> {
        let bm = self.basis_matrix();
        lu_solve(&bm, &self.b).map_err(|e| OtError::DegenerateBasis(e.to_string()))
    }

    /// One phase of the simplex; `costs[j]` for all columns (originals and
    /// artificials), `allowed` filters entering candidates.
    fn run_phase(
        &mut self,
        costs: &dyn Fn(usize) -> f64,
        allowed: &dyn Fn(usize) -> bool,
        max_iters: usize,
    ) -> Result<usize> {
        let mut iters = 0;
        loop {
            if iters > max_iters {
                return Err(OtError::IterationBudget(format!(
                    "simplex exceeded {max_iters} pivots"
                )));
            }
            let bm = self.basis_matrix();
            let xb = lu_solve(&bm, &self.b).map_err(|e| OtError::DegenerateBasis(e.to_string()))?;
            // Dual: B^T y = c_B.
            let cb: Vec<f64> = self.basis.iter().map(|&j| costs(j)).collect();
            let y = lu_solve(&bm.transpose(), &cb)
                .map_err(|e| OtError::DegenerateBasis(e.to_string()))?;
            // Bland: entering = lowest-index column with negative reduced cost.
            let mut entering = None;
            for j in 0..(self.n + self.m) {
                if self.basis.contains(&j) || !allowed(j) {
                    continue;
                }
                let col = self.column(j);
                let mut red = costs(j);
                for i in 0..self.m {
                    red -= y[i] * col[i];
                }
                if red < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(e) = entering else {
                return Ok(iters);
            };
            // Direction d = B^{-1} A_e.
            let d = lu_solve(&bm, &self.column(e))
                .map_err(|err| OtError::DegenerateBasis(err.to_string()))?;
            // Ratio test, Bland tie-break on the leaving variable index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if d[i] > PIVOT_TOL {
                    let ratio = xb[i].max(0.0) / d[i];
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || ((ratio - lr).abs() <= 1e-12 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((li, _)) = leave else {
                return Err(OtError::Internal(
                    "simplex direction unbounded on a bounded polytope".into(),
                ));
            };
            self.basis[li] = e;
            iters += 1;
        }
    }
}

/// Solves `min c^T x` over `A x = b, x >= 0`. `A` must have full row rank;
/// infeasibility and unboundedness are reported as errors.
pub fn solve_equality_lp(c: &[f64], a: &Mat, b: &[f64]) -> Result<LpSolution> {
    let m = a.rows;
    let n = a.cols;
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);

    // Normalize to b >= 0 for the artificial start.
    let mut a_std = a.clone();
    let mut b_std = b.to_vec();
    for i in 0..m {
        if b_std[i] < 0.0 {
            b_std[i] = -b_std[i];
            for j in 0..n {
                a_std[(i, j)] = -a_std[(i, j)];
            }
        }
    }

    let mut t = Tableau {
        a: &a_std,
        b: b_std,
        n,
        m,
        basis: (n..n + m).collect(),
    };
    let max_iters = 200 * (n + m) + 1000;

    // Phase 1: drive out the artificials.
    let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
    let it1 = t.run_phase(&phase1_cost, &|_| true, max_iters)?;
    let xb = t.basic_solution()?;
    let art_level: f64 = t
        .basis
        .iter()
        .zip(&xb)
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v.abs())
        .sum();
    if art_level > 1e-8 {
        return Err(OtError::InvalidInput(format!(
            "LP infeasible: artificial residual {art_level:.3e}"
        )));
    }
    // Pivot any zero-level artificial out of the basis.
    for row in 0..m {
        if t.basis[row] < n {
            continue;
        }
        let bm = t.basis_matrix();
        let mut replaced = false;
        for j in 0..n {
            if t.basis.contains(&j) {
                continue;
            }
            let d =
                lu_solve(&bm, &t.column(j)).map_err(|e| OtError::DegenerateBasis(e.to_string()))?;
            if d[row].abs() > PIVOT_TOL {
                t.basis[row] = j;
                replaced = true;
                break;
            }
        }
        if !replaced {
            return Err(OtError::DegenerateBasis(format!(
                "artificial stuck in basis row {row}; constraint matrix may be rank deficient"
            )));
        }
    }

    // Phase 2 over the original columns only.
    let phase2_cost = |j: usize| if j < n { c[j] } else { 0.0 };
    let it2 = t.run_phase(&phase2_cost, &|j| j < n, max_iters)?;

    let xb = t.basic_solution()?;
    let mut x = vec![0.0; n];
    for (k, &j) in t.basis.iter().enumerate() {
        if j < n {
            x[j] = xb[k].max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution {
        objective,
        x,
        iterations: it1 + it2,
    })
}
