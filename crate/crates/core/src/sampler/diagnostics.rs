//! Chain diagnostics: split R-hat, autocorrelation-based effective sample
//! size, and Monte Carlo standard errors of functionals.

use super::{SampleChain, SamplerError};
use crate::dunkl_calc::ScalarField;

/// Diagnostics over a set of chains: per-coordinate ESS and split R-hat,
/// per-functional means and Monte Carlo standard errors.
#[derive(Clone, Debug)]
pub struct ChainDiagnostics {
    pub ess: Vec<f64>,
    pub rhat: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub functional_means: Vec<f64>,
}

/// Effective sample size of one trace, by Geyer's initial positive sequence
/// on the empirical autocorrelations.
pub fn ess_of(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 4 {
        return n as f64;
    }
    let mean: f64 = values.iter().sum::<f64>() / n as f64;
    let c0: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return n as f64; // constant trace carries no autocorrelation
    }
    let autocov = |t: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..(n - t) {
            s += (values[i] - mean) * (values[i + t] - mean);
        }
        s / n as f64
    };
    let mut sum_rho = 0.0;
    let mut t = 1;
    while t + 1 < n {
        let pair = (autocov(t) + autocov(t + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum_rho += pair;
        t += 2;
        if t > 2000 {
            break;
        }
    }
    let ess = n as f64 / (1.0 + 2.0 * sum_rho);
    ess.clamp(1.0, n as f64)
}

/// Split R-hat over several traces: each trace is halved, and the usual
/// between/within variance ratio is computed over the resulting sequences.
pub fn split_rhat(traces: &[Vec<f64>]) -> f64 {
    let mut sequences: Vec<&[f64]> = Vec::with_capacity(traces.len() * 2);
    for t in traces {
        let half = t.len() / 2;
        if half < 2 {
            continue;
        }
        sequences.push(&t[..half]);
        sequences.push(&t[half..2 * half]);
    }
    if sequences.len() < 2 {
        return f64::NAN;
    }
    let len = sequences.iter().map(|s| s.len()).min().expect("nonempty");
    let m = sequences.len() as f64;
    let n = len as f64;
    let means: Vec<f64> = sequences
        .iter()
        .map(|s| s[..len].iter().sum::<f64>() / n)
        .collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|mi| (mi - grand) * (mi - grand)).sum::<f64>();
    let w = sequences
        .iter()
        .zip(&means)
        .map(|(s, mi)| s[..len].iter().map(|v| (v - mi) * (v - mi)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w <= 0.0 {
        return 1.0;
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Pooled mean and Monte Carlo standard error (`sd / sqrt(ess)`) of a
/// functional over one or more chains.
pub fn functional_moment(
    chains: &[SampleChain],
    f: impl Fn(&[f64]) -> f64,
) -> (f64, f64) {
    let mut all = Vec::new();
    let mut total_ess = 0.0;
    for chain in chains {
        let trace: Vec<f64> = chain.iter_points().map(|x| f(x)).collect();
        total_ess += ess_of(&trace);
        all.extend(trace);
    }
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        return (mean, 0.0);
    }
    (mean, (var / total_ess.max(1.0)).sqrt())
}

/// Full diagnostics. R-hat needs at least two chains.
pub fn diagnose(
    chains: &[SampleChain],
    functionals: &[ScalarField],
) -> Result<ChainDiagnostics, SamplerError> {
    if chains.len() < 2 {
        return Err(SamplerError::InsufficientChains { needed: 2, got: chains.len() });
    }
    let dim = chains[0].dim();
    let mut ess = Vec::with_capacity(dim);
    let mut rhat = Vec::with_capacity(dim);
    for j in 0..dim {
        let traces: Vec<Vec<f64>> = chains.iter().map(|c| c.column(j)).collect();
        ess.push(traces.iter().map(|t| ess_of(t)).sum());
        rhat.push(split_rhat(&traces));
    }
    let mut mc_se = Vec::with_capacity(functionals.len());
    let mut functional_means = Vec::with_capacity(functionals.len());
    for f in functionals {
        let (mean, se) = functional_moment(chains, |x| f.eval(x));
        functional_means.push(mean);
        mc_se.push(se);
    }
    Ok(ChainDiagnostics { ess, rhat, mc_se, functional_means })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::MeasureSpec;
    use crate::root_system::RootSystem;
    use crate::sampler::{sample_chains, sample_mu_u, sample_with_thinning, Algo};
    use std::sync::Arc;

    fn gaussian_chains(n: usize, n_chains: usize) -> Vec<SampleChain> {
        let rs = Arc::new(RootSystem::rank_one(0.0).unwrap());
        let ms = MeasureSpec::mu_u(rs, 2.0).unwrap();
        sample_chains(&ms, n, Algo::Rwm, 17, n_chains).unwrap()
    }

    #[test]
    fn rhat_is_near_one_for_identically_distributed_chains() {
        let chains = gaussian_chains(10_000, 4);
        let d = diagnose(&chains, &[]).unwrap();
        assert!(d.rhat[0] < 1.01, "rhat {}", d.rhat[0]);
        assert!(d.ess[0] > 100.0 && d.ess[0] <= 40_000.0);
    }

    #[test]
    fn constant_functional_has_zero_error() {
        let chains = gaussian_chains(2000, 2);
        let constant = ScalarField::new(1, |_| 3.25);
        let d = diagnose(&chains, &[constant]).unwrap();
        assert_eq!(d.mc_se[0], 0.0);
        assert!((d.functional_means[0] - 3.25).abs() < 1e-12);
    }

    #[test]
    fn single_chain_cannot_produce_rhat() {
        let chains = gaussian_chains(500, 1);
        assert!(matches!(
            diagnose(&chains, &[]),
            Err(SamplerError::InsufficientChains { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn thinning_raises_ess_per_retained_sample() {
        let rs = Arc::new(RootSystem::rank_one(1.0).unwrap());
        let ms = MeasureSpec::mu_u(rs.clone(), 2.0).unwrap();
        let start = [1.0];
        let n = 4000;
        let thin1 = sample_with_thinning(&ms, n, Algo::Rwm, 23, &start, 1).unwrap();
        let thin10 = sample_with_thinning(&ms, n, Algo::Rwm, 23, &start, 10).unwrap();
        let e1 = ess_of(&thin1.column(0)) / n as f64;
        let e10 = ess_of(&thin10.column(0)) / n as f64;
        assert!(
            e10 > e1,
            "ess per retained sample should increase with thinning: {e1} vs {e10}"
        );
    }

    #[test]
    fn detailed_balance_smoke_test_against_quadrature_cdf() {
        // Empirical CDF of a long, heavily thinned RWM chain against a dense
        // independently integrated CDF of the rank-1 target density
        // |x|^2 e^{-x^2}; Kolmogorov-Smirnov statistic below the 1% critical
        // value. The seed is fixed, so the check is deterministic.
        use crate::quadrature::gauss::gauss_legendre;
        let rs = Arc::new(RootSystem::rank_one(1.0).unwrap());
        let ms = MeasureSpec::mu_u(rs, 2.0).unwrap();
        let n = 100_000;
        let chain = sample_with_thinning(&ms, n, Algo::Rwm, 29, &[1.0], 50).unwrap();
        let mut xs = chain.column(0);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Reference CDF on a dense uniform grid with per-cell Gauss panels.
        let density = |x: f64| x * x * (-x * x).exp();
        let (l, cells) = (8.0f64, 8192usize);
        let (gx, gw) = gauss_legendre(8);
        let mut boundaries = Vec::with_capacity(cells + 1);
        let mut cum = vec![0.0f64; cells + 1];
        for c in 0..=cells {
            boundaries.push(-l + 2.0 * l * c as f64 / cells as f64);
        }
        for c in 0..cells {
            let (a, b) = (boundaries[c], boundaries[c + 1]);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let cell: f64 = gx.iter().zip(&gw).map(|(t, w)| w * half * density(mid + half * t)).sum();
            cum[c + 1] = cum[c] + cell;
        }
        let total = cum[cells];
        let reference_cdf = |x: f64| -> f64 {
            if x <= -l {
                return 0.0;
            }
            if x >= l {
                return 1.0;
            }
            let pos = (x + l) / (2.0 * l) * cells as f64;
            let idx = (pos.floor() as usize).min(cells - 1);
            let frac = pos - idx as f64;
            ((1.0 - frac) * cum[idx] + frac * cum[idx + 1]) / total
        };
        let mut ks: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let empirical_hi = (i + 1) as f64 / n as f64;
            let empirical_lo = i as f64 / n as f64;
            let theo = reference_cdf(*x);
            ks = ks.max((empirical_hi - theo).abs()).max((theo - empirical_lo).abs());
        }
        let critical = 1.628 / (n as f64).sqrt(); // 1% asymptotic K-S level
        assert!(ks < critical, "KS statistic {ks} above the 1% level {critical}");
    }
}
