//! Cross-solver consistency: the path follower against the exact LP, the
//! generalized Sinkhorn against the path point, the quantum solver against
//! the classical one on diagonal data, and the dual-line invariance.

use num_complex::Complex64;
use otbarriers::barrier::{ClassicalBarrier, DualOracle, QuantumBarrier};
use otbarriers::classical::{
    barrier_sinkhorn, bound_chain_classical, lp_reference, phi_dual, rebalance, slack_tensor,
    ClassicalInstance, DualPoint, MarginalFamily,
};
use otbarriers::driver::{
    classical_path_point, quantum_path_point, solve_classical, solve_quantum,
};
use otbarriers::herm::{HermitianMatrix, ProductOperator};
use otbarriers::ipm::PathMode;
use otbarriers::quantum::{
    bound_chain_quantum, diagonal_reduction, gamma_residual, DensityFamily, HermitianDualPoint,
    QuantumInstance,
};
use otbarriers::tensor::DenseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_probability(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.25..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn random_classical(dims: &[usize], rng: &mut ChaCha8Rng) -> ClassicalInstance {
    let cells: usize = dims.iter().product();
    let cost = DenseTensor::new(
        dims.to_vec(),
        (0..cells).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let marginals =
        MarginalFamily::new(dims.iter().map(|&n| random_probability(n, rng)).collect()).unwrap();
    ClassicalInstance::new(cost, marginals).unwrap()
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let mut h = HermitianMatrix::zeros(n);
    for p in 0..n {
        for q in p..n {
            if p == q {
                h.set(p, q, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
            } else {
                h.set(
                    p,
                    q,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
        }
    }
    h
}

fn random_density(n: usize, floor: f64, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let mut b = vec![Complex64::new(0.0, 0.0); n * n];
    for v in b.iter_mut() {
        *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let mut s = HermitianMatrix::zeros(n);
    for p in 0..n {
        for q in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += b[p * n + k] * b[q * n + k].conj();
            }
            s.set(p, q, acc);
        }
    }
    let t = s.trace();
    let mut out = s.scale(1.0 / t);
    for i in 0..n {
        let cur = out.get(i, i);
        out.set(i, i, cur + Complex64::new(floor, 0.0));
    }
    out.scale(1.0 / (1.0 + n as f64 * floor))
}

fn random_quantum(dims: &[usize], rng: &mut ChaCha8Rng) -> QuantumInstance {
    let total: usize = dims.iter().product();
    let c = {
        let h = random_hermitian(total, rng);
        let s = otbarriers::herm::spectral_bundle(&h).unwrap();
        h.scale(1.0 / s.norm2.max(1e-12))
    };
    let cost = ProductOperator::new(dims.to_vec(), c).unwrap();
    let densities =
        DensityFamily::new(dims.iter().map(|&n| random_density(n, 0.3, rng)).collect()).unwrap();
    QuantumInstance::new(cost, densities).unwrap()
}

#[test]
fn classical_ipm_certifies_against_lp_bipartite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for dims in [[2usize, 3], [4, 4], [5, 2]] {
        let inst = random_classical(&dims, &mut rng);
        let (tau, _) = lp_reference(&inst).unwrap();
        let solve = solve_classical(&inst, 1e-6, PathMode::LongStep).unwrap();
        assert!(solve.report.certified, "not certified on dims {dims:?}");
        assert!(
            (solve.report.value - tau).abs() <= 1e-6 * (1.0 + tau.abs()),
            "dims {dims:?}: ipm {} vs lp {tau}",
            solve.report.value
        );
        // Dual feasibility gives an exact lower bound.
        assert!(solve.report.value <= tau + 1e-9);
    }
}

#[test]
fn classical_ipm_certifies_against_lp_multipartite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let inst = random_classical(&[3, 3, 3], &mut rng);
    let (tau, _) = lp_reference(&inst).unwrap();
    let solve = solve_classical(&inst, 1e-6, PathMode::LongStep).unwrap();
    assert!(solve.report.certified);
    assert!((solve.report.value - tau).abs() <= 1e-6 * (1.0 + tau.abs()));
}

#[test]
fn short_step_reaches_the_same_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let inst = random_classical(&[3, 3], &mut rng);
    let (tau, _) = lp_reference(&inst).unwrap();
    let solve = solve_classical(&inst, 1e-5, PathMode::ShortStep).unwrap();
    assert!(solve.report.certified);
    assert!((solve.report.value - tau).abs() <= 1e-5 * (1.0 + tau.abs()));
}

#[test]
fn sinkhorn_and_path_point_agree_on_tau_beta() {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    for dims in [[2usize, 2], [3, 4]] {
        let inst = random_classical(&dims, &mut rng);
        let eps = 0.1;
        let sk = barrier_sinkhorn(&inst, eps, 1e-9, 20_000).unwrap();
        assert!(sk.converged);
        let pp = classical_path_point(&inst, eps).unwrap();
        assert!(
            (sk.tau_beta - pp.tau_beta).abs() <= 1e-6 * (1.0 + sk.tau_beta.abs()),
            "dims {dims:?}: sinkhorn {} vs path {}",
            sk.tau_beta,
            pp.tau_beta
        );
    }
}

#[test]
fn quantum_matches_classical_on_diagonal_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    for n in [2usize, 3] {
        let total = n * n;
        let cost_diag: Vec<f64> = (0..total).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cost = ProductOperator::new(vec![n, n], HermitianMatrix::diag(&cost_diag)).unwrap();
        let densities = DensityFamily::new(
            (0..2)
                .map(|_| HermitianMatrix::diag(&random_probability(n, &mut rng)))
                .collect(),
        )
        .unwrap();
        let qinst = QuantumInstance::new(cost, densities).unwrap();
        let cinst = diagonal_reduction(&qinst).expect("diagonal instance");
        let (tau, _) = lp_reference(&cinst).unwrap();
        let qsolve = solve_quantum(&qinst, 1e-6, PathMode::LongStep).unwrap();
        assert!(qsolve.report.certified);
        assert!(
            (qsolve.report.value - tau).abs() <= 1e-6 * (1.0 + tau.abs()),
            "n={n}: kappa {} vs tau {tau}",
            qsolve.report.value
        );
        // Barrier values agree as well (pinching preserves the barrier optimum).
        let eps = 0.1;
        let qp = quantum_path_point(&qinst, eps).unwrap();
        let cp = classical_path_point(&cinst, eps).unwrap();
        assert!(
            (qp.tau_beta - cp.tau_beta).abs() <= 1e-6 * (1.0 + cp.tau_beta.abs()),
            "n={n}: kappa_beta {} vs tau_beta {}",
            qp.tau_beta,
            cp.tau_beta
        );
    }
}

#[test]
fn quantum_certification_on_nondiagonal_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    for dims in [[2usize, 2], [2, 3]] {
        let inst = random_quantum(&dims, &mut rng);
        let solve = solve_quantum(&inst, 1e-6, PathMode::LongStep).unwrap();
        assert!(solve.report.certified, "dims {dims:?} not certified");
        assert!(solve.report.certificate.gap <= 1e-6);
        let g = gamma_residual(&solve.rho.rho, inst.densities()).unwrap();
        assert!(
            g.max_residual() <= 5e-6,
            "gamma residual {}",
            g.max_residual()
        );
        assert!(solve.report.value >= inst.lambda_min_c() - 1e-9);

        // Sandwich: the product coupling bounds kappa from above.
        let total = inst.total_dim();
        let mut big = HermitianMatrix::zeros(total);
        for row in 0..total {
            for col in 0..total {
                let mut acc = Complex64::new(1.0, 0.0);
                for (i, &n_i) in dims.iter().enumerate() {
                    let stride = inst.cost().stride(i);
                    acc *= inst
                        .densities()
                        .density(i)
                        .get((row / stride) % n_i, (col / stride) % n_i);
                }
                big.set(row, col, acc);
            }
        }
        let product_value = inst.cost().matrix().inner(&big);
        assert!(solve.report.value <= product_value + 1e-9);
    }
}

#[test]
fn certify_gap_closed_forms() {
    use otbarriers::driver::{classical_constraints, classical_objective, quantum_objective};
    use otbarriers::ipm::certify;

    // Classical 1x1 on the central path: gap is exactly eps (one barrier term).
    struct ClassicalRec<'a>(&'a ClassicalInstance);
    impl otbarriers::ipm::PrimalRecovery for ClassicalRec<'_> {
        fn recover(&self, z: &[f64], eps: f64) -> otbarriers::Result<otbarriers::ipm::PrimalInfo> {
            let dual = DualPoint::from_flat(self.0.dims(), z);
            let u = otbarriers::classical::barrier_primal(self.0, &dual, eps)?;
            Ok(otbarriers::ipm::PrimalInfo {
                value: self.0.cost().inner(&u.tensor),
                residuals: vec![u.marginal_residual(self.0.marginals())],
            })
        }
    }
    let c = 0.8;
    let inst = ClassicalInstance::new(
        DenseTensor::new(vec![1, 1], vec![c]).unwrap(),
        MarginalFamily::new(vec![vec![1.0], vec![1.0]]).unwrap(),
    )
    .unwrap();
    let eps = 0.03;
    // Central point: x + y = c - eps, balanced.
    let z = vec![(c - eps) / 2.0, (c - eps) / 2.0];
    let cert = certify(&ClassicalRec(&inst), &classical_objective(&inst), &z, eps).unwrap();
    assert!(
        (cert.gap - eps).abs() < 1e-14,
        "gap {} vs eps {eps}",
        cert.gap
    );
    let _ = classical_constraints(inst.dims());

    // Quantum C = 2 I_4, R = (I/2, I/2): the symmetric central point is
    // X = Y = (1 - 2 eps) I and the gap is exactly 4 eps.
    struct QuantumRec<'a>(&'a QuantumInstance);
    impl otbarriers::ipm::PrimalRecovery for QuantumRec<'_> {
        fn recover(&self, z: &[f64], eps: f64) -> otbarriers::Result<otbarriers::ipm::PrimalInfo> {
            let dual = HermitianDualPoint::from_flat(self.0.dims(), z);
            let rho = otbarriers::quantum::recover_primal(self.0, &dual, eps)?;
            let g = gamma_residual(&rho.rho, self.0.densities())?;
            Ok(otbarriers::ipm::PrimalInfo {
                value: self.0.cost().matrix().inner(rho.rho.matrix()),
                residuals: g.per_mode,
            })
        }
    }
    let cost = ProductOperator::new(vec![2, 2], HermitianMatrix::identity(4).scale(2.0)).unwrap();
    let densities = DensityFamily::new(vec![
        HermitianMatrix::identity(2).scale(0.5),
        HermitianMatrix::identity(2).scale(0.5),
    ])
    .unwrap();
    let qinst = QuantumInstance::new(cost, densities).unwrap();
    let eps = 0.05;
    let zq = HermitianDualPoint {
        x: vec![
            HermitianMatrix::identity(2).scale(1.0 - 2.0 * eps),
            HermitianMatrix::identity(2).scale(1.0 - 2.0 * eps),
        ],
    };
    let cert = certify(
        &QuantumRec(&qinst),
        &quantum_objective(&qinst),
        &zq.flat(),
        eps,
    )
    .unwrap();
    assert!(
        (cert.gap - 4.0 * eps).abs() < 1e-12,
        "gap {} vs 4 eps {}",
        cert.gap,
        4.0 * eps
    );
    assert!(cert.max_residual() < 1e-12);
}

#[test]
fn phase_one_decrement_drops_below_threshold_on_a_small_instance() {
    use otbarriers::driver::{classical_constraints, classical_objective};
    use otbarriers::ipm::newton_step;
    let mut rng = ChaCha8Rng::seed_from_u64(1013);
    let inst = random_classical(&[2, 2], &mut rng);
    let oracle = ClassicalBarrier::new(&inst);
    let objective = classical_objective(&inst);
    let constraints = classical_constraints(inst.dims());
    let mut z = oracle.region().center.clone();
    let mut last = f64::INFINITY;
    let mut reached = false;
    for _ in 0..60 {
        let (z_new, dec) = newton_step(&oracle, &objective, &constraints, &z, 0.0).unwrap();
        z = z_new;
        // Once inside the quadratic region the decrement is monotone.
        if last < 0.25 {
            assert!(dec <= last * 1.001, "decrement rose from {last} to {dec}");
        }
        last = dec;
        if dec < 1e-8 {
            reached = true;
            break;
        }
    }
    assert!(reached, "decrement never fell below 1e-8 (last {last})");
}

#[test]
fn converged_dual_line_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    // Classical: shift along (1, -1)/rebalance reproduces objective and slack.
    let inst = random_classical(&[3, 3], &mut rng);
    let solve = solve_classical(&inst, 1e-6, PathMode::LongStep).unwrap();
    let z = solve.dual;
    let t = 0.7;
    let shifted = DualPoint {
        x: vec![
            z.x[0].iter().map(|v| v + t / 3.0).collect(),
            z.x[1].iter().map(|v| v - t / 3.0).collect(),
        ],
    };
    let back = rebalance(&shifted);
    let o1 = z.objective(inst.marginals());
    let o2 = back.objective(inst.marginals());
    assert!((o1 - o2).abs() <= 1e-9 * (1.0 + o1.abs()));
    let s1 = slack_tensor(&inst, &z).unwrap();
    let s2 = slack_tensor(&inst, &shifted).unwrap();
    for (a, b) in s1.entries().iter().zip(s2.entries()) {
        assert!((a - b).abs() < 1e-12);
    }

    // Quantum: identity-direction shifts.
    let qinst = random_quantum(&[2, 2], &mut rng);
    let qsolve = solve_quantum(&qinst, 1e-6, PathMode::LongStep).unwrap();
    let zq = qsolve.dual;
    let shifted = HermitianDualPoint {
        x: vec![
            zq.x[0].add(&HermitianMatrix::identity(2).scale(0.4)),
            zq.x[1].add(&HermitianMatrix::identity(2).scale(-0.4)),
        ],
    };
    let o1 = zq.objective(qinst.densities());
    let o2 = shifted.objective(qinst.densities());
    assert!((o1 - o2).abs() <= 1e-9 * (1.0 + o1.abs()));
}

#[test]
fn bound_chains_hold_on_solved_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let inst = random_classical(&[3, 3], &mut rng);
    let (tau, _) = lp_reference(&inst).unwrap();
    for eps in [0.1, 0.01] {
        let sk = barrier_sinkhorn(&inst, eps, 1e-9, 50_000).unwrap();
        let rep = bound_chain_classical(&inst, eps, tau, sk.tau_beta).unwrap();
        assert!(rep.lower_margin > 0.0 && rep.upper_margin > 0.0);
    }

    let qinst = random_quantum(&[2, 2], &mut rng);
    let qsolve = solve_quantum(&qinst, 1e-7, PathMode::LongStep).unwrap();
    let kappa_certified = qsolve.report.value;
    for eps in [0.1, 0.01] {
        let qp = quantum_path_point(&qinst, eps).unwrap();
        // kappa from the certified solve is below the true optimum by at most
        // the gap, so the strict chain check uses it directly.
        let rep = bound_chain_quantum(&qinst, eps, kappa_certified, qp.tau_beta).unwrap();
        assert!(rep.lower_margin > 0.0 && rep.upper_margin > 0.0);
    }
}

#[test]
fn optimizer_stays_inside_the_trust_region() {
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let inst = random_classical(&[4, 3], &mut rng);
    let oracle = ClassicalBarrier::new(&inst);
    let solve = solve_classical(&inst, 1e-6, PathMode::LongStep).unwrap();
    let dist2 = oracle.region().distance2(&solve.report.dual_point);
    assert!(dist2.sqrt() < oracle.region().radius);

    let qinst = random_quantum(&[2, 2], &mut rng);
    let qoracle = QuantumBarrier::new(&qinst);
    let qsolve = solve_quantum(&qinst, 1e-6, PathMode::LongStep).unwrap();
    let dist2 = qoracle.region().distance2(&qsolve.report.dual_point);
    assert!(dist2.sqrt() < qoracle.region().radius);
}

#[test]
fn restricted_hessians_are_positive_definite() {
    use otbarriers::driver::{classical_constraints, quantum_constraints};
    use otbarriers::linalg::{cholesky, nullspace_basis};
    let mut rng = ChaCha8Rng::seed_from_u64(1010);

    let inst = random_classical(&[3, 2], &mut rng);
    let oracle = ClassicalBarrier::new(&inst);
    let a = classical_constraints(inst.dims());
    let z_basis = nullspace_basis(&a);
    let ev = oracle.eval(&oracle.region().center.clone());
    let restricted = z_basis.transpose().matmul(&ev.hessian).matmul(&z_basis);
    assert!(
        cholesky(&restricted).is_some(),
        "restricted classical Hessian not PD"
    );

    let qinst = random_quantum(&[2, 2], &mut rng);
    let qoracle = QuantumBarrier::new(&qinst);
    let aq = quantum_constraints(qinst.dims());
    let zq = nullspace_basis(&aq);
    let evq = qoracle.eval(&qoracle.region().center.clone());
    let restricted = zq.transpose().matmul(&evq.hessian).matmul(&zq);
    assert!(
        cholesky(&restricted).is_some(),
        "restricted quantum Hessian not PD"
    );
}

#[test]
fn phi_at_path_point_matches_primal_value_form() {
    // tau_beta computed from the dual functional equals <C,U> + eps beta(U)
    // at the recovered primal, up to the centering tolerance.
    let mut rng = ChaCha8Rng::seed_from_u64(1011);
    let inst = random_classical(&[3, 3], &mut rng);
    let eps = 0.05;
    let sk = barrier_sinkhorn(&inst, eps, 1e-10, 50_000).unwrap();
    let primal_form = inst.cost().inner(&sk.coupling.tensor)
        + eps * otbarriers::classical::log_barrier(&sk.coupling.tensor);
    let dual_form = phi_dual(&inst, &sk.dual, eps).unwrap();
    assert!((primal_form - dual_form).abs() < 1e-6 * (1.0 + primal_form.abs()));
}
