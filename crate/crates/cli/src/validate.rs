//! `validate` subcommand: runs every applicable oracle and invariant suite on
//! a loaded instance and reports one line per check.

use otbarriers::barrier::{
    boundary_distances, theta_bound, theta_estimate, ClassicalBarrier, QuantumBarrier,
};
use otbarriers::classical::{
    barrier_sinkhorn, bound_chain_classical, entropic_sinkhorn, lp_reference, product_coupling,
    ClassicalInstance,
};
use otbarriers::driver::{classical_path_point, solve_classical, solve_quantum};
use otbarriers::ipm::PathMode;
use otbarriers::quantum::{
    bound_chain_quantum, diagonal_reduction, gamma_residual, QuantumInstance,
};

pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, result: Result<(bool, String), otbarriers::OtError>) -> CheckResult {
    match result {
        Ok((passed, detail)) => CheckResult {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name: name.into(),
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn validate_classical(inst: &ClassicalInstance) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let desk_lp = inst.cells() <= 20_000;

    out.push(check("start-point-interior", {
        let z = otbarriers::classical::start_dual_point(inst);
        otbarriers::classical::slack_tensor(inst, &z).map(|s| {
            (
                s.min_entry() >= 1.0 - 1e-12 && z.is_balanced(1e-12),
                format!("slack min {:.6}", s.min_entry()),
            )
        })
    }));

    let mut tau = None;
    if desk_lp {
        out.push(check("lp-sandwich", {
            lp_reference(inst).map(|(t, v)| {
                tau = Some(t);
                let mass = inst.marginals().common_mass();
                let lower = inst.c_min() * mass;
                let upper = inst
                    .cost()
                    .inner(&product_coupling(inst.marginals()).tensor);
                let feas = v.marginal_residual(inst.marginals());
                (
                    t >= lower - 1e-9 && t <= upper + 1e-9 && feas <= 1e-8 * (1.0 + mass),
                    format!("tau {t:.9} in [{lower:.6}, {upper:.6}], vertex residual {feas:.2e}"),
                )
            })
        }));
    }

    if inst.marginals().is_probability() && desk_lp {
        if let Some(t) = tau {
            out.push(check("entropic-chain", {
                let n_total: f64 = inst.cells() as f64;
                let eps = 1e-3 / n_total.ln();
                entropic_sinkhorn(inst, eps, 1e-10, 400_000).map(|sol| {
                    let ok = sol.tau_eps <= t + 1e-9 && t <= sol.tau_eps + 1e-3 + 1e-9;
                    (
                        ok,
                        format!("tau_eps {:.9} vs tau {t:.9} at eps {eps:.3e}", sol.tau_eps),
                    )
                })
            }));
        }
    }

    let eps = 0.1;
    let mut tau_beta = None;
    out.push(check("barrier-sinkhorn-fixed-point", {
        barrier_sinkhorn(inst, eps, 1e-8, 50_000).map(|sol| {
            tau_beta = Some(sol.tau_beta);
            let monotone = sol
                .trace
                .windows(2)
                .all(|w| w[1].phi >= w[0].phi - 1e-10 * (1.0 + w[0].phi.abs()));
            (
                sol.converged && monotone,
                format!(
                    "tau_beta {:.9}, residual {:.2e}, {} sweeps",
                    sol.tau_beta, sol.max_residual, sol.sweeps
                ),
            )
        })
    }));

    out.push(check("ipm-vs-path-point", {
        classical_path_point(inst, eps).map(|pp| {
            let ok = tau_beta
                .map(|tb| (tb - pp.tau_beta).abs() <= 1e-6 * (1.0 + tb.abs()))
                .unwrap_or(false);
            (ok, format!("path tau_beta {:.9}", pp.tau_beta))
        })
    }));

    if desk_lp {
        out.push(check("ipm-certifies-lp-value", {
            solve_classical(inst, 1e-6, PathMode::LongStep).map(|sol| {
                let ok = tau
                    .map(|t| {
                        sol.report.certified
                            && (sol.report.value - t).abs() <= 1e-6 * (1.0 + t.abs())
                    })
                    .unwrap_or(sol.report.certified);
                (
                    ok,
                    format!(
                        "ipm value {:.9}, gap {:.2e}",
                        sol.report.value, sol.report.certificate.gap
                    ),
                )
            })
        }));
    }

    if inst.parties() == 2 && inst.marginals().is_probability() {
        if let (Some(t), Some(tb)) = (tau, tau_beta) {
            out.push(check("bound-chain", {
                bound_chain_classical(inst, eps, t, tb).map(|rep| {
                    (
                        rep.lower_margin > 0.0 && rep.upper_margin > 0.0,
                        format!(
                            "margins {:.3e} / {:.3e}",
                            rep.lower_margin, rep.upper_margin
                        ),
                    )
                })
            }));
        }
    }

    out.push(check("theta-and-boundary-geometry", {
        let oracle = ClassicalBarrier::new(inst);
        let region = oracle.region().clone();
        let bound = theta_bound(inst.dims());
        let d = inst.parties() as f64;
        theta_estimate(&oracle, &region, 100, 2024).and_then(|theta| {
            let dists = boundary_distances(&oracle, &region, 50, 2025)?;
            let min_dist = dists.iter().copied().fold(f64::INFINITY, f64::min);
            Ok((
                theta <= bound + 1e-6 && min_dist >= 1.0 / d.sqrt() - 1e-9,
                format!("theta {theta:.4} <= {bound}, boundary >= {min_dist:.4}"),
            ))
        })
    }));

    out
}

pub fn validate_quantum(inst: &QuantumInstance) -> Vec<CheckResult> {
    let mut out = Vec::new();

    out.push(check("start-point-interior", {
        let z = otbarriers::quantum::start_dual_point(inst);
        otbarriers::quantum::slack_lambda_min(inst, &z).map(|lam| {
            (
                lam >= 1.0 - 1e-9 && z.is_balanced(1e-12),
                format!("slack lambda_min {lam:.6}"),
            )
        })
    }));

    let mut kappa = None;
    out.push(check("ipm-certification", {
        solve_quantum(inst, 1e-6, PathMode::LongStep).and_then(|sol| {
            kappa = Some(sol.report.value);
            let g = gamma_residual(&sol.rho.rho, inst.densities())?;
            Ok((
                sol.report.certified
                    && g.max_residual() <= 5e-6
                    && sol.report.value >= inst.lambda_min_c() - 1e-9,
                format!(
                    "kappa {:.9}, gap {:.2e}, Gamma residual {:.2e}",
                    sol.report.value,
                    sol.report.certificate.gap,
                    g.max_residual()
                ),
            ))
        })
    }));

    if let Some(cinst) = diagonal_reduction(inst) {
        out.push(check("diagonal-pinching-equivalence", {
            lp_reference(&cinst).map(|(t, _)| {
                let ok = kappa
                    .map(|k| (k - t).abs() <= 1e-6 * (1.0 + t.abs()))
                    .unwrap_or(false);
                (ok, format!("classical tau {t:.9}"))
            })
        }));
    }

    if inst.parties() == 2 && inst.densities().is_unit_trace() {
        if let Some(k) = kappa {
            out.push(check("bound-chain", {
                otbarriers::driver::quantum_path_point(inst, 0.1).and_then(|pp| {
                    bound_chain_quantum(inst, 0.1, k, pp.tau_beta).map(|rep| {
                        (
                            rep.lower_margin > 0.0 && rep.upper_margin > 0.0,
                            format!(
                                "margins {:.3e} / {:.3e}",
                                rep.lower_margin, rep.upper_margin
                            ),
                        )
                    })
                })
            }));
        }
    }

    out.push(check("theta-and-boundary-geometry", {
        let oracle = QuantumBarrier::new(inst);
        let region = oracle.region().clone();
        let bound = theta_bound(inst.dims());
        let d = inst.parties() as f64;
        theta_estimate(&oracle, &region, 60, 2026).and_then(|theta| {
            let dists = boundary_distances(&oracle, &region, 30, 2027)?;
            let min_dist = dists.iter().copied().fold(f64::INFINITY, f64::min);
            Ok((
                theta <= bound + 1e-6 && min_dist >= 1.0 / d.sqrt() - 1e-9,
                format!("theta {theta:.4} <= {bound}, boundary >= {min_dist:.4}"),
            ))
        })
    }));

    // Weak duality of the product coupling against sampled interior duals.
    out.push(check(
        "weak-duality-samples",
        (|| {
            let dims = inst.dims().to_vec();
            let total: usize = dims.iter().product();
            let mut big = otbarriers::herm::HermitianMatrix::zeros(total);
            // Product state over the densities.
            let shell = inst.cost();
            for row in 0..total {
                for col in 0..total {
                    let mut acc = num_complex::Complex64::new(1.0, 0.0);
                    for (i, _) in dims.iter().enumerate() {
                        let stride = shell.stride(i);
                        let a = (row / stride) % dims[i];
                        let b = (col / stride) % dims[i];
                        acc *= inst.densities().density(i).get(a, b);
                    }
                    big.set(row, col, acc);
                }
            }
            let primal = inst.cost().matrix().inner(&big);
            let mut ok = true;
            for k in 0..8 {
                let mut z = otbarriers::quantum::start_dual_point(inst);
                for xi in z.x.iter_mut() {
                    *xi = xi.scale(1.0 - 0.1 * k as f64 / 8.0);
                }
                if !otbarriers::quantum::slack_is_pd(inst, &z)? {
                    continue;
                }
                ok &= z.objective(inst.densities()) <= primal + 1e-9;
            }
            Ok((ok, format!("product primal {primal:.9}")))
        })(),
    ));

    out
}
