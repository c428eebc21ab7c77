//! Scalar root solver for `f(x, a) = sum_i 1/(x + a_i) = a` on `(-a_n, inf)`,
//! the inner kernel of the generalized Sinkhorn rescaling step. Bracketing,
//! bisection to a unit-width bracket, then Newton from the lower end with a
//! Regula Falsi upper companion; Newton iterates that leave the bracket fall
//! back to bisection.

use crate::error::{OtError, Result};

/// Shift spectrum `a_1 >= ... >= a_n`, sorted descending on construction.
#[derive(Debug, Clone)]
pub struct ShiftSpectrum {
    a: Vec<f64>,
}

impl ShiftSpectrum {
    pub fn new(mut a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(OtError::InvalidInput(
                "shift spectrum must be nonempty".into(),
            ));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(OtError::InvalidInput(
                "shift spectrum entries must be finite".into(),
            ));
        }
        a.sort_by(|x, y| y.partial_cmp(x).unwrap());
        Ok(ShiftSpectrum { a })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn shifts(&self) -> &[f64] {
        &self.a
    }

    /// Smallest shift `a_n`; the domain is `x > -a_n`.
    pub fn min_shift(&self) -> f64 {
        *self.a.last().unwrap()
    }

    pub fn max_shift(&self) -> f64 {
        self.a[0]
    }
}

/// Result of a solve: root, residual, iteration counts, final bracket.
#[derive(Debug, Clone)]
pub struct RootResult {
    pub x: f64,
    pub f_at_x: f64,
    pub iterations_bisect: usize,
    pub iterations_newton: usize,
    pub bracket_final: (f64, f64),
}

/// `f`, `f'`, `f''` at `x`. Errors when `x` is at or below `-a_n`.
pub fn f_and_derivs(x: f64, s: &ShiftSpectrum) -> Result<(f64, f64, f64)> {
    if x <= -s.min_shift() {
        return Err(OtError::DomainViolation(format!(
            "x = {x} is outside (-a_n, inf) with a_n = {}",
            s.min_shift()
        )));
    }
    let mut f = 0.0;
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    for &a in s.shifts() {
        let t = 1.0 / (x + a);
        f += t;
        f1 -= t * t;
        f2 += 2.0 * t * t * t;
    }
    Ok((f, f1, f2))
}

fn f_only(x: f64, s: &ShiftSpectrum) -> f64 {
    s.shifts().iter().map(|&a| 1.0 / (x + a)).sum()
}

/// Initial bracket `x0 = 1/a - a_n`, `y0 = n/a - a_n`; the root always lies in
/// `[x0, y0]`, strictly inside when the shifts are not all equal.
pub fn bracket(a_target: f64, s: &ShiftSpectrum) -> Result<(f64, f64)> {
    if a_target <= 0.0 {
        return Err(OtError::InvalidInput(format!(
            "target must be positive, got {a_target}"
        )));
    }
    let an = s.min_shift();
    let n = s.len() as f64;
    Ok((1.0 / a_target - an, n / a_target - an))
}

/// Solves `f(x) = a_target` to `|f(x) - a_target| <= tol`.
pub fn solve(a_target: f64, s: &ShiftSpectrum, tol: f64) -> Result<RootResult> {
    if a_target <= 0.0 {
        return Err(OtError::InvalidInput(format!(
            "target must be positive, got {a_target}"
        )));
    }
    if tol <= 0.0 {
        return Err(OtError::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = s.len();

    // Equal shifts: f(x) = n/(x + a_1), solved in closed form.
    if s.max_shift() == s.min_shift() {
        let x = n as f64 / a_target - s.max_shift();
        return Ok(RootResult {
            x,
            f_at_x: f_only(x, s),
            iterations_bisect: 0,
            iterations_newton: 0,
            bracket_final: (x, x),
        });
    }

    let (mut lo, mut hi) = bracket(a_target, s)?;
    let mut f_lo = f_only(lo, s);
    let mut f_hi = f_only(hi, s);
    debug_assert!(f_lo >= a_target && f_hi <= a_target);

    // Bisection budget: ceil(log2(n(n-1) a / tol)) halvings, base 2 so that
    // each step halves the residual bound along with the bracket.
    let budget = {
        let arg = (n * (n - 1)) as f64 * a_target / tol;
        if arg <= 1.0 {
            0
        } else {
            arg.log2().ceil() as usize
        }
    };
    let mut bisect_iters = 0usize;
    while hi - lo > 1.0 && bisect_iters < budget {
        if f_lo - a_target <= tol || a_target - f_hi <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f_only(mid, s);
        bisect_iters += 1;
        if f_mid > a_target {
            lo = mid;
            f_lo = f_mid;
        } else if f_mid < a_target {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            hi = mid;
            f_lo = f_mid;
            f_hi = f_mid;
            break;
        }
        // Lower iterates never fall below the residual-slope bound region.
        debug_assert!(
            f_lo - f_hi <= n as f64 * a_target * a_target * (hi - lo) * (1.0 + 1e-9) + 1e-12,
            "bisection residual bound violated"
        );
    }

    // Newton from the lower end (monotone increasing toward the root), with a
    // Regula Falsi companion closing the bracket from above. The invariant
    // f(x) >= a_target >= f(y) holds throughout, so (x, y) always encloses
    // the root; the returned point is whichever end met the tolerance.
    let mut x = lo;
    let mut fx = f_lo;
    let mut y = hi;
    let mut fy = f_hi;
    let mut newton_iters = 0usize;
    let max_newton = 64usize;
    let mut solution: Option<(f64, f64)> = None;
    if (fx - a_target).abs() <= tol {
        solution = Some((x, fx));
    } else if (fy - a_target).abs() <= tol {
        solution = Some((y, fy));
    }
    while solution.is_none() && newton_iters < max_newton {
        let (f, f1, _) = f_and_derivs(x, s)?;
        let mut x_next = x + (a_target - f) / f1;
        if !(x_next > x && x_next <= y) {
            // Leaving the bracket (or stalling): replace with bisection.
            x_next = 0.5 * (x + y);
        }
        let f_next = f_only(x_next, s);
        if f_next >= a_target {
            x = x_next;
            fx = f_next;
        } else {
            // Overshoot past the root: tighten the upper end instead.
            y = x_next;
            fy = f_next;
        }
        // Regula Falsi update for the upper companion.
        if fx > a_target && fy < a_target && fx - fy > 0.0 {
            let y_rf = ((fx - a_target) * y + (a_target - fy) * x) / (fx - fy);
            if y_rf > x && y_rf < y {
                let f_rf = f_only(y_rf, s);
                if f_rf < a_target {
                    y = y_rf;
                    fy = f_rf;
                } else {
                    x = y_rf;
                    fx = f_rf;
                }
            }
        }
        newton_iters += 1;
        if (fx - a_target).abs() <= tol {
            solution = Some((x, fx));
        } else if (fy - a_target).abs() <= tol {
            solution = Some((y, fy));
        }
    }

    let Some((x_sol, f_sol)) = solution else {
        return Err(OtError::IterationBudget(format!(
            "root solve stalled: residual {:.3e} > tol {tol:.3e} after {bisect_iters} bisections and {newton_iters} Newton steps",
            (fx - a_target).abs()
        )));
    };

    Ok(RootResult {
        x: x_sol,
        f_at_x: f_sol,
        iterations_bisect: bisect_iters,
        iterations_newton: newton_iters,
        bracket_final: (x, y),
    })
}
