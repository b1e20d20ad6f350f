//! Exact i.i.d. sampler for the type-A chamber measure at `p = 2`, via the
//! tridiagonal Hermite beta-ensemble.
//!
//! The symmetric tridiagonal matrix with independent entries
//! `diag_i ~ N(0,1)` and `offdiag_i ~ chi_{beta (N-1-i)} / sqrt(2)` has
//! eigenvalue density proportional to
//! `prod_{i<j} |l_i - l_j|^beta exp(-|l|^2/2)`.
//! Rescaling `x = l / sqrt(2)` turns the Gaussian factor into `exp(-|x|^2)`
//! while only changing the Vandermonde by a constant, so the sorted,
//! rescaled eigenvalues are exact draws from
//! `Z_H^{-1} prod_{i<j} (x_i - x_j)^{2k} e^{-|x|^2}` on
//! `x_1 > ... > x_N` with `beta = 2k`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, StandardNormal};

use super::{SampleChain, SamplerError};
use crate::vecmath::norm_sq;

/// Draw `n` independent samples from the A_{N-1} chamber measure at `p = 2`
/// with multiplicity `k > 0` (`beta = 2k`).
pub fn sample_beta_hermite_oracle(
    n_dim: usize,
    k: f64,
    n: usize,
    seed: u64,
) -> Result<SampleChain, SamplerError> {
    if !(k > 0.0) {
        return Err(SamplerError::Unsupported(format!(
            "beta-ensemble oracle requires k > 0, got {k}"
        )));
    }
    if n_dim == 0 {
        return Err(SamplerError::Unsupported("dimension must be positive".into()));
    }
    let beta = 2.0 * k;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let chi: Vec<ChiSquared<f64>> = (1..n_dim)
        .map(|i| {
            let dof = beta * (n_dim - i) as f64;
            ChiSquared::new(dof).map_err(|e| SamplerError::Unsupported(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut points = Vec::with_capacity(n * n_dim);
    let mut log_density = Vec::with_capacity(n);
    let mut eigenvalues = vec![0.0f64; n_dim];
    for _ in 0..n {
        if n_dim == 1 {
            eigenvalues[0] = rng.sample::<f64, _>(StandardNormal);
        } else {
            let mut m = DMatrix::<f64>::zeros(n_dim, n_dim);
            for i in 0..n_dim {
                m[(i, i)] = rng.sample::<f64, _>(StandardNormal);
            }
            for (i, dist) in chi.iter().enumerate() {
                let value = rng.sample(dist).sqrt() * inv_sqrt2;
                m[(i, i + 1)] = value;
                m[(i + 1, i)] = value;
            }
            let eig = SymmetricEigen::new(m);
            for (slot, v) in eigenvalues.iter_mut().zip(eig.eigenvalues.iter()) {
                *slot = *v;
            }
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        let x: Vec<f64> = eigenvalues.iter().map(|l| l * inv_sqrt2).collect();
        let mut lw = 0.0;
        for i in 0..n_dim {
            for j in (i + 1)..n_dim {
                lw += beta * (x[i] - x[j]).abs().ln();
            }
        }
        log_density.push(lw - norm_sq(&x));
        points.extend_from_slice(&x);
    }
    Ok(SampleChain {
        dim: n_dim,
        points,
        log_density,
        acceptance_rate: 1.0,
        seed,
        burn_in: 0,
        thinning: 1,
        algo: "beta-hermite-oracle".into(),
    })
}
