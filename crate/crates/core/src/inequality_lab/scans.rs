//! Scan-style verifications: the Rothaus recentering defect, Gaussian
//! concentration profiles, exponential-integrability scans over growing
//! balls, the moment-generating-function bound behind them, Weyl-chamber
//! invariance of G-invariant integrands, and the L^p entropy inequality.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dunkl_calc::{dunkl_gradient_at, ScalarField, TestFunction};
use crate::quadrature::{visit_raw_nodes, GridParams, MeasureSpec};
use crate::root_system::{ChamberId, RootSystem};
use crate::sampler::SampleChain;
use crate::vecmath::{norm, norm_sq};

use super::{
    entropy, EntropyVariant, InequalityReport, LabError, MeasureEstimator, RhsTerm,
    ValueWithError,
};

/// One step of the Rothaus sweep.
#[derive(Clone, Debug, Serialize)]
pub struct RothausRow {
    pub c: f64,
    pub defect: f64,
    pub err: f64,
}

/// Defect `Ent(f0^2) + 2 E f0^2 - Ent((f0 + c)^2)` for the internally
/// recentered `f0 = f - E f`, over a sweep of shifts `c`. Nonnegative (up to
/// error bars) for every `c`.
pub fn rothaus_defect(
    me: &MeasureEstimator,
    f: &TestFunction,
    c_values: &[f64],
) -> Result<Vec<RothausRow>, LabError> {
    let field = f.to_field();
    let (mean, mean_err) = me.expect_fn(|x| field.eval(x))?;
    if mean_err > 1e-4 {
        // recentering only makes sense when the mean itself is resolved
        return Err(LabError::Estimator(format!(
            "mean of the test function too noisy for recentering ({mean_err:.2e})"
        )));
    }
    let centered = {
        let field = field.clone();
        ScalarField::new(me.dim(), move |x| field.eval(x) - mean)
    };
    let tf0 = TestFunction::Field(centered.clone());
    let (ent0, ent0_err) = entropy(me, &tf0, EntropyVariant::Ent)?;
    let (m2, m2_err) = me.expect_fn(|x| centered.eval(x).powi(2))?;
    let mut rows = Vec::with_capacity(c_values.len());
    for &c in c_values {
        let shifted = {
            let centered = centered.clone();
            ScalarField::new(me.dim(), move |x| centered.eval(x) + c)
        };
        let (ent_c, ent_c_err) = entropy(me, &TestFunction::Field(shifted), EntropyVariant::Ent)?;
        rows.push(RothausRow {
            c,
            defect: ent0 + 2.0 * m2 - ent_c,
            err: ent0_err + 2.0 * m2_err + ent_c_err,
        });
    }
    Ok(rows)
}

/// One concentration-profile row: empirical tail versus the Herbst bound.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationRow {
    pub r: f64,
    pub empirical_tail: f64,
    pub bound: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// False when the 95% binomial lower confidence bound exceeds the bound.
    pub satisfied: bool,
}

/// Empirical tails `P(f >= mean + r)` over pooled chain draws against the
/// concentration bound `exp(-r^2/(aC))`, with Wilson 95% intervals. The
/// test function must be G-invariant and carry a Lipschitz bound.
pub fn concentration_profile(
    rs: &RootSystem,
    chains: &[SampleChain],
    f: &ScalarField,
    tight_constant: f64,
    r_grid: &[f64],
) -> Result<Vec<ConcentrationRow>, LabError> {
    let a = f.lipschitz_bound.ok_or_else(|| {
        LabError::HypothesisViolation("concentration requires a Lipschitz bound".into())
    })?;
    if !f.g_invariant {
        return Err(LabError::HypothesisViolation(
            "concentration requires a G-invariant function".into(),
        ));
    }
    spot_check_invariance(rs, f)?;
    let mut values = Vec::new();
    for chain in chains {
        values.extend(chain.iter_points().map(|x| f.eval(x)));
    }
    let n = values.len();
    if n == 0 {
        return Err(LabError::Estimator("no draws".into()));
    }
    let mean: f64 = values.iter().sum::<f64>() / n as f64;
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let count = values.iter().filter(|&&v| v >= mean + r).count();
        let p_hat = count as f64 / n as f64;
        let bound = (-r * r / (a * tight_constant)).exp().min(1.0);
        let (ci_low, ci_high) = wilson_interval(count, n);
        rows.push(ConcentrationRow {
            r,
            empirical_tail: p_hat,
            bound,
            ci_low,
            ci_high,
            satisfied: ci_low <= bound,
        });
    }
    Ok(rows)
}

/// Wilson 95% confidence interval for a binomial proportion.
fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let centre = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn spot_check_invariance(rs: &RootSystem, f: &ScalarField) -> Result<(), LabError> {
    let group = rs.generate_group()?;
    let mut state = 0x2545F4914F6CDD1Du64;
    for _ in 0..5 {
        let x: Vec<f64> = (0..rs.dim())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
            })
            .collect();
        let v = f.eval(&x);
        for g in group.iter() {
            let gx = g.apply(&x);
            if (f.eval(&gx) - v).abs() > 1e-8 * (1.0 + v.abs()) {
                return Err(LabError::HypothesisViolation(
                    "function is not G-invariant on a spot check".into(),
                ));
            }
        }
    }
    Ok(())
}

/// One truncated integral of the exponential-integrability scan.
#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityRow {
    pub radius: f64,
    pub truncated_integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ScanVerdict {
    /// Successive increments shrink geometrically; the last value is the
    /// limit estimate.
    Converged { limit: f64 },
    /// Increments stop shrinking: the integral diverges. A finding, not an
    /// error.
    Diverged,
}

/// Truncated integrals `int_{B_R} e^{b^2 f^2 / 2} dmu_U` over ascending
/// radii. Contributions are assembled in log space (the density underflows
/// and the integrand overflows long before their product does), normalised
/// by `Z` accumulated in the same pass.
pub fn exp_integrability_scan(
    ms: &MeasureSpec,
    resolution: usize,
    f: &ScalarField,
    b: f64,
    radii: &[f64],
) -> Result<(Vec<IntegrabilityRow>, ScanVerdict), LabError> {
    let p = ms
        .p()
        .ok_or_else(|| LabError::Estimator("scan requires a mu_U measure".into()))?;
    if radii.len() < 3 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::OutOfRange("need at least 3 strictly ascending radii".into()));
    }
    let max_radius = *radii.last().expect("nonempty");
    let params = GridParams {
        resolution,
        box_half_width: Some(max_radius * 1.02),
        ..Default::default()
    };
    let mut annulus = vec![0.0f64; radii.len()];
    let mut z_annulus = vec![0.0f64; radii.len() + 1];
    visit_raw_nodes(ms, &params, resolution, |x, w| {
        let r = norm(x);
        let log_measure = w.ln() + ms.rs.log_weight(x) - norm_sq(x).powf(p / 2.0);
        let bucket = radii.partition_point(|&edge| edge < r);
        if bucket < radii.len() {
            let fx = f.eval(x);
            annulus[bucket] += (log_measure + b * b * fx * fx / 2.0).exp();
        }
        z_annulus[bucket.min(radii.len())] += log_measure.exp();
    })?;
    let z: f64 = z_annulus.iter().sum();
    if !(z > 0.0) {
        return Err(LabError::Estimator("measure mass vanished on the scan box".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut cum = 0.0;
    for (i, &radius) in radii.iter().enumerate() {
        cum += annulus[i];
        rows.push(IntegrabilityRow { radius, truncated_integral: cum / z });
    }
    // Geometric-shrinkage test on the tail increments.
    let diffs: Vec<f64> = rows.windows(2).map(|w| w[1].truncated_integral - w[0].truncated_integral).collect();
    let tail = &diffs[diffs.len().saturating_sub(3)..];
    let last = rows.last().expect("nonempty").truncated_integral;
    let mut shrinking = true;
    for w in tail.windows(2) {
        if w[1] > 0.9 * w[0] && w[1] > 1e-9 * last {
            shrinking = false;
        }
    }
    let verdict = if shrinking {
        ScanVerdict::Converged { limit: last }
    } else {
        ScanVerdict::Diverged
    };
    Ok((rows, verdict))
}

/// The moment-generating-function bound behind exponential integrability:
/// `E[e^{s f}] <= exp(s E f + a C s^2 / 4)` for a G-invariant `a`-Lipschitz
/// function and a tight log-Sobolev constant `C`.
pub fn herbst_mgf_bound(
    rs: &RootSystem,
    me: &MeasureEstimator,
    f: &ScalarField,
    tight_constant: f64,
    s: f64,
) -> Result<InequalityReport, LabError> {
    let a = f.lipschitz_bound.ok_or_else(|| {
        LabError::HypothesisViolation("mgf bound requires a Lipschitz bound".into())
    })?;
    if !f.g_invariant {
        return Err(LabError::HypothesisViolation(
            "mgf bound requires a G-invariant function".into(),
        ));
    }
    spot_check_invariance(rs, f)?;
    let (mgf, mgf_err) = me.expect_fn(|x| (s * f.eval(x)).exp())?;
    let (mean, mean_err) = me.expect_fn(|x| f.eval(x))?;
    let rhs = (s * mean + a * tight_constant * s * s / 4.0).exp();
    let rhs_err = rhs * s.abs() * mean_err;
    let mut constants = BTreeMap::new();
    constants.insert("a".into(), a);
    constants.insert("C".into(), tight_constant);
    constants.insert("s".into(), s);
    Ok(InequalityReport::build(
        "herbst-mgf",
        ValueWithError { value: mgf, err: mgf_err },
        vec![RhsTerm { label: "exp(s Ef + aCs^2/4)".into(), coefficient: 1.0, value: rhs, err: rhs_err }],
        constants,
        format!("s={s}"),
    ))
}

/// Chamber decomposition identity for a G-invariant integrand: the full
/// expectation equals `|G|` times the expectation restricted to any single
/// chamber (evaluated on the same estimator through the chamber indicator;
/// grid panels never straddle a wall, so the indicator is exact on nodes).
pub fn chamber_invariance_check(
    rs: &RootSystem,
    g: &TestFunction,
    me: &MeasureEstimator,
    chamber: &ChamberId,
) -> Result<InequalityReport, LabError> {
    let field = g.to_field();
    spot_check_invariance(rs, &field)?;
    let order = rs.group_order()? as f64;
    let (full, full_err) = me.expect_fn(|x| field.eval(x))?;
    let (restricted, restricted_err) = me.expect_fn(|x| {
        if chamber.contains(rs, x) {
            field.eval(x)
        } else {
            0.0
        }
    })?;
    let mut constants = BTreeMap::new();
    constants.insert("group_order".into(), order);
    // Equality check packaged as: |full - |G| restricted| <= combined err.
    let difference = (full - order * restricted).abs();
    let combined = full_err + order * restricted_err;
    Ok(InequalityReport::build(
        "chamber-invariance",
        ValueWithError { value: difference, err: 0.0 },
        vec![RhsTerm {
            label: "combined-error".into(),
            coefficient: 1.0,
            value: combined + 1e-5 * (full.abs() + 1e-300),
            err: 0.0,
        }],
        constants,
        "G-invariant integrand",
    ))
}

/// The L^p entropy inequality for nonnegative compactly supported `f`
/// against the raw Dunkl measure:
/// `int f^p log(f^p / int f^p) <= eps int grad_k f . grad_k(f^{p-1})
///  + C(2 eps / p) int f^p`,
/// with `C(eps) = (N + 2 gamma)/2 (log(1/eps) - c)` for a fitted `c`.
pub fn lp_logsob_check(
    rs: &RootSystem,
    me: &MeasureEstimator,
    f: &ScalarField,
    p: f64,
    epsilon: f64,
    c_fitted: f64,
) -> Result<InequalityReport, LabError> {
    if !(p > 2.0) {
        return Err(LabError::OutOfRange(format!("the L^p form requires p > 2, got {p}")));
    }
    // f must be nonnegative on the support.
    let (min_val, _) = me.expect_fn(|x| f.eval(x).min(0.0))?;
    if min_val < -1e-10 {
        return Err(LabError::HypothesisViolation(
            "the L^p entropy inequality requires f >= 0".into(),
        ));
    }
    let (mass, mass_err) = me.expect_fn(|x| f.eval(x).max(0.0).powf(p))?;
    if mass <= 0.0 {
        return Err(LabError::DegenerateFunction);
    }
    let (lhs, lhs_err) = me.expect_fn(|x| {
        let v = f.eval(x).max(0.0).powf(p);
        if v == 0.0 {
            0.0
        } else {
            v * (v / mass).ln()
        }
    })?;
    // grad_k f . grad_k(f^{p-1})
    let f_pow = {
        let dim = f.dim();
        let f_eval = f.clone();
        ScalarField::new(dim, move |x| f_eval.eval(x).max(0.0).powf(p - 1.0)).with_gradient({
            let f = f.clone();
            move |x| {
                let v = f.eval(x).max(0.0);
                let scale = if v == 0.0 { 0.0 } else { (p - 1.0) * v.powf(p - 2.0) };
                f.gradient_at(x)
                    .expect("analytic gradient required")
                    .iter()
                    .map(|c| c * scale)
                    .collect()
            }
        })
    };
    let tf = TestFunction::Field(f.clone());
    let tf_pow = TestFunction::Field(f_pow);
    let (dirichlet_cross, cross_err) = me.expect_fn(|x| {
        let g1 = dunkl_gradient_at(rs, &tf, x).unwrap_or_else(|_| vec![f64::NAN; x.len()]);
        let g2 = dunkl_gradient_at(rs, &tf_pow, x).unwrap_or_else(|_| vec![f64::NAN; x.len()]);
        g1.iter().zip(&g2).map(|(a, b)| a * b).sum()
    })?;
    let c_of = super::fitting::log_sobolev_c_of_epsilon(rs, 2.0 * epsilon / p, c_fitted);
    let mut constants = BTreeMap::new();
    constants.insert("epsilon".into(), epsilon);
    constants.insert("C_of_epsilon".into(), c_of);
    constants.insert("c".into(), c_fitted);
    constants.insert("p".into(), p);
    Ok(InequalityReport::build(
        "lp-log-sobolev",
        ValueWithError { value: lhs, err: lhs_err + mass_err * (1.0 + lhs.abs() / mass) },
        vec![
            RhsTerm {
                label: "cross-dirichlet".into(),
                coefficient: epsilon,
                value: dirichlet_cross,
                err: cross_err,
            },
            RhsTerm { label: "mass".into(), coefficient: c_of, value: mass, err: mass_err },
        ],
        constants,
        format!("p={p}, eps={epsilon}"),
    ))
}
