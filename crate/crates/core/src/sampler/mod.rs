//! MCMC sampling of the Boltzmann measures `mu_U` and their Weyl-chamber
//! restrictions, in any dimension.
//!
//! The unnormalised log density is
//! `log pi(x) = sum_a 2 k_a log|<a,x>| - |x|^p`, with gradient
//! `sum_a 2 k_a a / <a,x> - p |x|^{p-2} x`. Proposals falling on a wall are
//! rejected outright (the density vanishes there when `k > 0`), and the
//! chamber variant additionally rejects proposals leaving the chamber.
//!
//! Seeding: every chain derives its own 64-bit seed from the master seed via
//! SplitMix64 (`chain_seed_i = splitmix64(master ^ i)`), then drives a
//! ChaCha12 generator; chains are bit-reproducible and independent of
//! scheduling.

pub mod beta_ensemble;
pub mod diagnostics;

use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde_json::json;
use thiserror::Error;

use crate::quadrature::{MeasureSpec, MeasureVariant};
use crate::root_system::{ChamberId, RootSystem, WALL_TOL};
use crate::vecmath::{norm, norm_sq};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("sampler requires a mu_U or chamber measure: {0}")]
    InvalidMeasure(String),
    #[error("start point lies on a wall (or outside the target chamber)")]
    InvalidStart,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("at least {needed} chains required, got {got}")]
    InsufficientChains { needed: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    /// Random-walk Metropolis with a pre-run doubling/halving scale tuner.
    Rwm,
    /// Metropolis-adjusted Langevin; restricted to `p >= 2`, where the drift
    /// is locally Lipschitz away from the walls.
    Langevin,
}

/// One MCMC run: retained draws, per-draw unnormalised log density, and the
/// bookkeeping needed to reproduce it.
#[derive(Clone, Debug)]
pub struct SampleChain {
    dim: usize,
    points: Vec<f64>,
    pub log_density: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub burn_in: usize,
    pub thinning: usize,
    pub algo: String,
}

impl SampleChain {
    pub fn len(&self) -> usize {
        self.log_density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_density.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_points().map(|x| x[j]).collect()
    }

    /// CSV export: one row per draw, columns `x_1..x_N`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<(), SamplerError> {
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for x in self.iter_points() {
            let row: Vec<String> = x.iter().map(|c| format!("{c:.17e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// JSON sidecar with the chain's reproducibility metadata.
    pub fn sidecar_json(&self) -> serde_json::Value {
        json!({
            "seed": self.seed,
            "algo": self.algo,
            "burn_in": self.burn_in,
            "thinning": self.thinning,
            "acceptance_rate": self.acceptance_rate,
        })
    }
}

/// SplitMix64; the documented seed-splitting function for chain streams.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

struct Target<'a> {
    rs: &'a RootSystem,
    p: f64,
    chamber: Option<&'a ChamberId>,
}

impl<'a> Target<'a> {
    fn from_measure(ms: &'a MeasureSpec) -> Result<Self, SamplerError> {
        match &ms.variant {
            MeasureVariant::MuU { p } => Ok(Target { rs: &ms.rs, p: *p, chamber: None }),
            MeasureVariant::MuUChamber { p, chamber } => {
                Ok(Target { rs: &ms.rs, p: *p, chamber: Some(chamber) })
            }
            other => Err(SamplerError::InvalidMeasure(format!(
                "variant {other:?} is not a sampling target"
            ))),
        }
    }

    fn is_admissible(&self, x: &[f64]) -> bool {
        let scale = norm(x);
        for idx in 0..self.rs.num_positive_roots() {
            let ip = self.rs.inner_with_root(idx, x);
            if self.rs.multiplicity(idx) > 0.0 && ip.abs() < WALL_TOL * scale.max(1e-300) {
                return false;
            }
        }
        match self.chamber {
            Some(c) => c.contains(self.rs, x),
            None => true,
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if !self.is_admissible(x) {
            return f64::NEG_INFINITY;
        }
        self.rs.log_weight(x) - norm_sq(x).powf(self.p / 2.0)
    }

    fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for idx in 0..self.rs.num_positive_roots() {
            let k = self.rs.multiplicity(idx);
            if k == 0.0 {
                continue;
            }
            let ip = self.rs.inner_with_root(idx, x);
            let alpha = &self.rs.positive_roots()[idx];
            for (gi, ai) in g.iter_mut().zip(alpha) {
                *gi += 2.0 * k * ai / ip;
            }
        }
        let r = norm(x);
        if r > 0.0 {
            let c = self.p * r.powf(self.p - 2.0);
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi -= c * xi;
            }
        }
        g
    }

    /// Generic interior start: the fundamental-chamber direction scaled to
    /// the bulk radius of the measure, mapped into the requested chamber.
    fn default_start(&self) -> Result<Vec<f64>, SamplerError> {
        let base = self.rs.fundamental_chamber_point();
        let radius = (((self.rs.dim() as f64) + 2.0 * self.rs.gamma()) / self.p)
            .powf(1.0 / self.p)
            .max(1.0);
        let candidate: Vec<f64> = base.iter().map(|c| c * radius).collect();
        if self.is_admissible(&candidate) {
            return Ok(candidate);
        }
        if let Some(target_chamber) = self.chamber {
            let group = self
                .rs
                .generate_group()
                .map_err(|e| SamplerError::InvalidMeasure(e.to_string()))?;
            for g in group {
                let moved = g.apply(&candidate);
                if let Ok(c) = self.rs.chamber_index(&moved) {
                    if &c == target_chamber {
                        return Ok(moved);
                    }
                }
            }
        }
        Err(SamplerError::InvalidStart)
    }
}

/// Sample `mu_U` (or its chamber restriction) with the default start point.
pub fn sample_mu_u(
    ms: &MeasureSpec,
    n: usize,
    algo: Algo,
    seed: u64,
) -> Result<SampleChain, SamplerError> {
    let target = Target::from_measure(ms)?;
    let start = target.default_start()?;
    sample_mu_u_from(ms, n, algo, seed, &start)
}

/// Sample from an explicit start point (must be off all walls, and inside
/// the chamber for the restricted variant).
pub fn sample_mu_u_from(
    ms: &MeasureSpec,
    n: usize,
    algo: Algo,
    seed: u64,
    start: &[f64],
) -> Result<SampleChain, SamplerError> {
    sample_with_thinning(ms, n, algo, seed, start, 1)
}

/// As `sample_mu_u_from`, retaining every `thinning`-th post-burn-in step.
pub fn sample_with_thinning(
    ms: &MeasureSpec,
    n: usize,
    algo: Algo,
    seed: u64,
    start: &[f64],
    thinning: usize,
) -> Result<SampleChain, SamplerError> {
    let target = Target::from_measure(ms)?;
    let p = target.p;
    if !(p > 1.0) {
        return Err(SamplerError::Unsupported(format!(
            "p must exceed 1 (Langevin additionally requires p >= 2), got {p}"
        )));
    }
    if algo == Algo::Langevin && p < 2.0 {
        return Err(SamplerError::Unsupported(format!(
            "Langevin drift is unbounded near the origin for p < 2 (got p = {p}); use rwm"
        )));
    }
    if !target.is_admissible(start) {
        return Err(SamplerError::InvalidStart);
    }
    let thinning = thinning.max(1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut x = start.to_vec();
    let mut log_pi = target.log_density(&x);
    let dim = x.len();

    // Pre-run scale tuning by doubling/halving, frozen before sampling.
    let mut step = 2.4 / (dim as f64).sqrt();
    let (acc_lo, acc_hi) = match algo {
        Algo::Rwm => (0.2, 0.4),
        Algo::Langevin => (0.4, 0.7),
    };
    for _ in 0..30 {
        let mut accepted = 0usize;
        for _ in 0..100 {
            if propose_and_accept(&target, algo, step, &mut x, &mut log_pi, &mut rng) {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / 100.0;
        if rate > acc_hi {
            step *= 2.0;
        } else if rate < acc_lo {
            step /= 2.0;
        } else {
            break;
        }
    }

    let burn_in = n / 10;
    for _ in 0..burn_in {
        propose_and_accept(&target, algo, step, &mut x, &mut log_pi, &mut rng);
    }
    let mut points = Vec::with_capacity(n * dim);
    let mut log_density = Vec::with_capacity(n);
    let mut accepted = 0usize;
    let total_steps = n * thinning;
    for s in 0..total_steps {
        if propose_and_accept(&target, algo, step, &mut x, &mut log_pi, &mut rng) {
            accepted += 1;
        }
        if (s + 1) % thinning == 0 {
            points.extend_from_slice(&x);
            log_density.push(log_pi);
        }
    }
    Ok(SampleChain {
        dim,
        points,
        log_density,
        acceptance_rate: accepted as f64 / total_steps.max(1) as f64,
        seed,
        burn_in,
        thinning,
        algo: match algo {
            Algo::Rwm => "rwm".into(),
            Algo::Langevin => "langevin".into(),
        },
    })
}

fn propose_and_accept(
    target: &Target<'_>,
    algo: Algo,
    step: f64,
    x: &mut Vec<f64>,
    log_pi: &mut f64,
    rng: &mut ChaCha12Rng,
) -> bool {
    let dim = x.len();
    let normal = rand_distr::StandardNormal;
    match algo {
        Algo::Rwm => {
            let proposal: Vec<f64> = x
                .iter()
                .map(|&xi| xi + step * rng.sample::<f64, _>(normal))
                .collect();
            let log_pi_new = target.log_density(&proposal);
            let log_ratio = log_pi_new - *log_pi;
            if log_ratio >= 0.0 || rng.gen::<f64>().ln() < log_ratio {
                *x = proposal;
                *log_pi = log_pi_new;
                true
            } else {
                false
            }
        }
        Algo::Langevin => {
            // MALA: y = x + tau g(x) + sqrt(2 tau) xi, Metropolis-corrected so
            // the invariant measure is exact despite the singular drift.
            let tau = 0.5 * step * step;
            let gx = target.grad_log_density(x);
            let mean_fwd: Vec<f64> = x.iter().zip(&gx).map(|(xi, gi)| xi + tau * gi).collect();
            let proposal: Vec<f64> = mean_fwd
                .iter()
                .map(|&mi| mi + (2.0 * tau).sqrt() * rng.sample::<f64, _>(normal))
                .collect();
            let log_pi_new = target.log_density(&proposal);
            if log_pi_new == f64::NEG_INFINITY {
                return false;
            }
            let gy = target.grad_log_density(&proposal);
            let mean_bwd: Vec<f64> =
                proposal.iter().zip(&gy).map(|(yi, gi)| yi + tau * gi).collect();
            let mut log_q_fwd = 0.0;
            let mut log_q_bwd = 0.0;
            for i in 0..dim {
                log_q_fwd -= (proposal[i] - mean_fwd[i]).powi(2) / (4.0 * tau);
                log_q_bwd -= (x[i] - mean_bwd[i]).powi(2) / (4.0 * tau);
            }
            let log_ratio = log_pi_new - *log_pi + log_q_bwd - log_q_fwd;
            if log_ratio >= 0.0 || rng.gen::<f64>().ln() < log_ratio {
                *x = proposal;
                *log_pi = log_pi_new;
                true
            } else {
                false
            }
        }
    }
}

/// Run several independent chains with SplitMix64-derived seeds.
pub fn sample_chains(
    ms: &MeasureSpec,
    n: usize,
    algo: Algo,
    master_seed: u64,
    n_chains: usize,
) -> Result<Vec<SampleChain>, SamplerError> {
    (0..n_chains)
        .map(|i| sample_mu_u(ms, n, algo, splitmix64(master_seed ^ i as u64)))
        .collect()
}

/// As `sample_chains`, but running chains on up to `jobs` worker threads.
/// Each chain is seeded independently of scheduling, so the output is
/// bit-identical to the sequential version.
pub fn sample_chains_parallel(
    ms: &MeasureSpec,
    n: usize,
    algo: Algo,
    master_seed: u64,
    n_chains: usize,
    jobs: usize,
) -> Result<Vec<SampleChain>, SamplerError> {
    let jobs = jobs.max(1).min(n_chains.max(1));
    if jobs <= 1 {
        return sample_chains(ms, n, algo, master_seed, n_chains);
    }
    let mut slots: Vec<Option<Result<SampleChain, SamplerError>>> =
        (0..n_chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (worker, chunk) in slots.chunks_mut(n_chains.div_ceil(jobs)).enumerate() {
            let base = worker * n_chains.div_ceil(jobs);
            scope.spawn(move || {
                for (offset, slot) in chunk.iter_mut().enumerate() {
                    let i = base + offset;
                    *slot = Some(sample_mu_u(ms, n, algo, splitmix64(master_seed ^ i as u64)));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("worker filled every slot"))
        .collect()
}
