//! Seeded instance generation: costs normalized to unit scale, marginals and
//! densities kept away from the boundary by a conditioning floor.

use num_complex::Complex64;
use otbarriers::herm::{spectral_bundle, HermitianMatrix};
use otbarriers::OtError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::{InstanceFile, Metadata, NumericArray};

/// Classical: cost uniform in [-1, 1]; marginals are normalized positive
/// uniforms mixed with the uniform vector so every entry is at least
/// `conditioning / n_i`.
pub fn generate_classical(dims: &[usize], seed: u64, conditioning: f64) -> InstanceFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: usize = dims.iter().product();
    let cost: Vec<f64> = (0..cells).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let marginals = dims
        .iter()
        .map(|&n| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64)).collect();
            let s: f64 = raw.iter().sum();
            NumericArray::Real(
                raw.iter()
                    .map(|v| (1.0 - conditioning) * v / s + conditioning / n as f64)
                    .collect(),
            )
        })
        .collect();
    InstanceFile {
        kind: "classical".into(),
        dims: dims.to_vec(),
        cost: NumericArray::Real(cost),
        marginals,
        metadata: Some(Metadata {
            name: None,
            seed: Some(seed),
            conditioning: Some(conditioning),
        }),
    }
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    // (A + A*)/2 for A with uniform complex entries.
    let mut h = HermitianMatrix::zeros(n);
    for p in 0..n {
        for q in p..n {
            if p == q {
                h.set(p, q, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
            } else {
                let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let b = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                h.set(p, q, 0.5 * (a + b.conj()));
            }
        }
    }
    h
}

/// Quantum: `C = (A + A*)/2` normalized to unit spectral norm;
/// `rho_i = (B B*/tr + floor I)/(1 + n floor)`, so the smallest eigenvalue is
/// at least `floor / (n (1 + floor))`.
pub fn generate_quantum(dims: &[usize], seed: u64, conditioning: f64) -> InstanceFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = dims.iter().product();
    let cost = {
        let h = random_hermitian(total, &mut rng);
        let s = spectral_bundle(&h).expect("random Hermitian spectrum");
        if s.norm2 > 0.0 {
            h.scale(1.0 / s.norm2)
        } else {
            h
        }
    };
    let marginals = dims
        .iter()
        .map(|&n| {
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
            let mut rho = s.scale(1.0 / t);
            for i in 0..n {
                let cur = rho.get(i, i);
                rho.set(i, i, cur + Complex64::new(conditioning, 0.0));
            }
            let rho = rho.scale(1.0 / (1.0 + n as f64 * conditioning));
            NumericArray::Complex(rho.entries().iter().map(|z| [z.re, z.im]).collect())
        })
        .collect();
    InstanceFile {
        kind: "quantum".into(),
        dims: dims.to_vec(),
        cost: NumericArray::Complex(cost.entries().iter().map(|z| [z.re, z.im]).collect()),
        marginals,
        metadata: Some(Metadata {
            name: None,
            seed: Some(seed),
            conditioning: Some(conditioning),
        }),
    }
}

pub fn generate(
    kind: &str,
    dims: &[usize],
    seed: u64,
    conditioning: f64,
) -> Result<InstanceFile, OtError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(OtError::InvalidInput(format!(
            "dims must all be >= 1, got {dims:?}"
        )));
    }
    if !(0.0..1.0).contains(&conditioning) {
        return Err(OtError::InvalidInput(format!(
            "conditioning floor must be in [0, 1), got {conditioning}"
        )));
    }
    match kind {
        "classical" => Ok(generate_classical(dims, seed, conditioning)),
        "quantum" => Ok(generate_quantum(dims, seed, conditioning)),
        other => Err(OtError::InvalidInput(format!(
            "unknown kind {other:?}; expected \"classical\" or \"quantum\""
        ))),
    }
}
