//! Named catalogue of every implemented inequality check, with a uniform
//! execution context so the CLI (and the acceptance tests) can run any of
//! them by name against a configured root system, measure and estimator.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dunkl_calc::{Polynomial, ScalarField, TestFunction};
use crate::quadrature::{normalization, GridParams, MeasureSpec, QuadratureGrid};
use crate::root_system::{ChamberId, RootSystem};
use crate::sampler::{sample_chains, Algo};
use crate::vecmath::{norm, norm_sq};

use super::basis::{bump_multiply, FunctionBasis};
use super::fitting::{
    estimate_best_constant_rayleigh, family_rows, fit_epsilon_constant, fit_tight_constant,
    fit_two_constants, log_sobolev_c_of_epsilon, sobolev_ratio, TwoTermFamily,
};
use super::scans::{
    chamber_invariance_check, concentration_profile, exp_integrability_scan, herbst_mgf_bound,
    lp_logsob_check, rothaus_defect,
};
use super::{
    check_bound, FunctionalSpec, GradientKind, InequalityReport, LabError, MeasureEstimator,
    Norm, RhsTerm, ValueWithError,
};

/// One catalogue entry.
#[derive(Clone, Debug, Serialize)]
pub struct CheckSpec {
    pub name: &'static str,
    pub anchor: &'static str,
    pub estimator: &'static str,
}

/// All implemented checks.
pub fn list_checks() -> Vec<CheckSpec> {
    vec![
        CheckSpec { name: "keyineq", anchor: "Gaussian-case moment bound E[f^2 U] <= Dirichlet + (N+2g) E[f^2], explicit constants", estimator: "quadrature" },
        CheckSpec { name: "ubound-intermediate", anchor: "weighted moment bound with explicit coefficients 4/p^2 and 2[p^2+p(N+2g-2)]/p^2", estimator: "quadrature" },
        CheckSpec { name: "ubound-l1", anchor: "L1 weighted bound with C1 = 1/p and D1 = (N+2g-1)/p on ball-vanishing functions", estimator: "quadrature" },
        CheckSpec { name: "ubound-l2", anchor: "fitted weighted-moment bound E[f^2 |x|^p] <= C Dirichlet + D E[f^2], p >= 2", estimator: "quadrature" },
        CheckSpec { name: "logsob-mu-k", anchor: "free log-Sobolev for the Dunkl measure with fitted epsilon-form constant", estimator: "quadrature (mu_k)" },
        CheckSpec { name: "logsob-lp", anchor: "L^p entropy inequality for nonnegative compactly supported functions, p > 2", estimator: "quadrature (mu_k)" },
        CheckSpec { name: "logsob-gaussian", anchor: "defective log-Sobolev for the Gaussian Boltzmann measure, fitted constants", estimator: "quadrature" },
        CheckSpec { name: "logsob-boltzmann", anchor: "defective log-Sobolev for mu_U at p >= 2, fitted constants", estimator: "quadrature" },
        CheckSpec { name: "logsob-pow", anchor: "power-log entropy inequality for mu_U at 1 < p <= 2, s = 2(p-1)/p", estimator: "quadrature" },
        CheckSpec { name: "logsob-l1", anchor: "L1 entropy inequality for mu_U, s = (p-1)/p, fitted constants", estimator: "quadrature" },
        CheckSpec { name: "poincare-ball", anchor: "Neumann Poincare inequality on balls with R^2 scaling of the constant", estimator: "quadrature (ball)" },
        CheckSpec { name: "poincare-mu-U", anchor: "Poincare inequality for mu_U via the generalized eigenproblem", estimator: "quadrature" },
        CheckSpec { name: "tight-logsob", anchor: "tight log-Sobolev inequality for mu_U at p >= 2, fitted tight constant", estimator: "quadrature" },
        CheckSpec { name: "phi-sobolev", anchor: "tight Phi-entropy inequality for mu_U at 1 < p < 2", estimator: "quadrature" },
        CheckSpec { name: "rothaus-defect", anchor: "recentering defect of the entropy functional over a sweep of shifts", estimator: "quadrature" },
        CheckSpec { name: "exp-integrability", anchor: "exponential integrability of Lipschitz observables below the Herbst threshold", estimator: "quadrature" },
        CheckSpec { name: "exp-divergence-below-p2", anchor: "divergence of the exponential integral for p < 2 (necessity of p >= 2)", estimator: "quadrature" },
        CheckSpec { name: "concentration", anchor: "Gaussian concentration of G-invariant Lipschitz observables", estimator: "mcmc" },
        CheckSpec { name: "chamber-poincare", anchor: "Poincare inequality for the chamber-restricted measure, classical gradient", estimator: "quadrature (chamber)" },
        CheckSpec { name: "chamber-tight-logsob", anchor: "tight log-Sobolev for the chamber-restricted measure, classical gradient", estimator: "quadrature (chamber)" },
        CheckSpec { name: "chamber-phi-sobolev", anchor: "Phi-entropy for the chamber-restricted measure at 1 < p < 2", estimator: "quadrature (chamber)" },
        CheckSpec { name: "chamber-invariance", anchor: "chamber decomposition identity for G-invariant integrands", estimator: "quadrature" },
        CheckSpec { name: "sobolev-ratio", anchor: "lower bound for the Dunkl Sobolev constant via the embedding quotient", estimator: "quadrature (mu_k)" },
        CheckSpec { name: "synthetic-violation", anchor: "deliberately false bound; exercises the violation exit path", estimator: "quadrature" },
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum EstimatorChoice {
    Quadrature { resolution: usize, box_half_width: Option<f64> },
    Mcmc { n: usize, chains: usize, algo: Algo },
}

/// Execution context shared by all checks.
#[derive(Clone, Debug)]
pub struct CheckContext {
    pub rs: Arc<RootSystem>,
    pub p: f64,
    pub chamber: bool,
    pub estimator: EstimatorChoice,
    pub seed: u64,
    /// Maximum suite degree; 0 selects 6 for rank <= 2 and 4 for rank 3.
    pub max_degree: u32,
    pub n_random_combos: usize,
}

impl CheckContext {
    pub fn new(rs: Arc<RootSystem>, p: f64) -> Self {
        let resolution = if rs.dim() >= 3 { 8 } else { 16 };
        CheckContext {
            rs,
            p,
            chamber: false,
            estimator: EstimatorChoice::Quadrature { resolution, box_half_width: None },
            seed: 7,
            max_degree: 0,
            n_random_combos: 200,
        }
    }

    pub fn suite_degree(&self) -> u32 {
        if self.max_degree > 0 {
            self.max_degree
        } else if self.rs.dim() >= 3 {
            4
        } else {
            6
        }
    }

    fn effective_dim(&self) -> f64 {
        self.rs.dim() as f64 + 2.0 * self.rs.gamma()
    }

    fn measure(&self) -> Result<MeasureSpec, LabError> {
        if self.chamber {
            Ok(MeasureSpec::mu_u_fundamental_chamber(self.rs.clone(), self.p)?)
        } else {
            Ok(MeasureSpec::mu_u(self.rs.clone(), self.p)?)
        }
    }

    fn quadrature_resolution(&self) -> usize {
        match &self.estimator {
            EstimatorChoice::Quadrature { resolution, .. } => *resolution,
            _ => {
                if self.rs.dim() >= 3 {
                    8
                } else {
                    16
                }
            }
        }
    }

    /// The estimator for the context's probability measure.
    fn probability_estimator(&self) -> Result<(MeasureSpec, MeasureEstimator), LabError> {
        let ms = self.measure()?;
        match &self.estimator {
            EstimatorChoice::Quadrature { resolution, box_half_width } => {
                let params = GridParams {
                    resolution: *resolution,
                    box_half_width: *box_half_width,
                    ..Default::default()
                };
                let grid = QuadratureGrid::build(&ms, &params)?;
                Ok((ms, MeasureEstimator::from_grid(Arc::new(grid))))
            }
            EstimatorChoice::Mcmc { n, chains, algo } => {
                let chains = sample_chains(&ms, *n, *algo, self.seed, *chains)?;
                let me = MeasureEstimator::from_chains(chains)?;
                Ok((ms, me))
            }
        }
    }

    /// A quadrature estimator for the raw Dunkl measure on a given box.
    fn mu_k_estimator(&self, box_half_width: f64) -> Result<MeasureEstimator, LabError> {
        let ms = MeasureSpec::mu_k(self.rs.clone());
        let params = GridParams {
            resolution: self.quadrature_resolution(),
            box_half_width: Some(box_half_width),
            ..Default::default()
        };
        let grid = QuadratureGrid::build(&ms, &params)?;
        Ok(MeasureEstimator::from_grid(Arc::new(grid)))
    }

    /// The standard labelled suite: tensor Hermite polynomials with the
    /// known extremals and random unit combinations.
    pub fn standard_suite(&self) -> Vec<(String, TestFunction)> {
        let dim = self.rs.dim();
        let basis = FunctionBasis::hermite_tensor(dim, self.suite_degree()).with_extremals(dim);
        let mut suite: Vec<(String, TestFunction)> = basis
            .labels
            .iter()
            .cloned()
            .zip(basis.members.iter().cloned())
            .collect();
        for (label, p) in basis.random_unit_combos(self.n_random_combos, self.seed) {
            suite.push((label, TestFunction::Poly(p)));
        }
        suite
    }
}

/// Run a named check. Returns one report per verified instance.
pub fn run_check(name: &str, ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    match name {
        "keyineq" => keyineq(ctx),
        "ubound-intermediate" => ubound_intermediate(ctx),
        "ubound-l1" => ubound_l1(ctx),
        "ubound-l2" => ubound_l2(ctx),
        "logsob-mu-k" => logsob_mu_k(ctx),
        "logsob-lp" => logsob_lp(ctx),
        "logsob-gaussian" => {
            require(ctx.p == 2.0, "the Gaussian form requires p = 2")?;
            fitted_family(ctx, TwoTermFamily::log_sobolev())
        }
        "logsob-boltzmann" => {
            require(ctx.p >= 2.0, "the defective log-Sobolev inequality requires p >= 2")?;
            fitted_family(ctx, TwoTermFamily::log_sobolev())
        }
        "logsob-pow" => {
            require(1.0 < ctx.p && ctx.p <= 2.0, "the power form requires 1 < p <= 2")?;
            let s = 2.0 * (ctx.p - 1.0) / ctx.p;
            fitted_family(ctx, TwoTermFamily::log_sobolev_pow(s))
        }
        "logsob-l1" => {
            let s = (ctx.p - 1.0) / ctx.p;
            fitted_family(ctx, TwoTermFamily::l1_log_sobolev(s))
        }
        "poincare-ball" => poincare_ball(ctx),
        "poincare-mu-u" | "poincare-mu-U" => poincare_mu_u(ctx),
        "tight-logsob" => tight_logsob(ctx),
        "phi-sobolev" => {
            require(1.0 < ctx.p && ctx.p < 2.0, "the Phi form requires 1 < p < 2")?;
            let s = 2.0 * (ctx.p - 1.0) / ctx.p;
            tight_family(ctx, TwoTermFamily::phi_sobolev(s), "phi-sobolev")
        }
        "rothaus-defect" => rothaus(ctx),
        "exp-integrability" => exp_integrability(ctx),
        "exp-divergence-below-p2" => exp_divergence(ctx),
        "concentration" => concentration(ctx),
        "chamber-poincare" => chamber_poincare(ctx),
        "chamber-tight-logsob" => chamber_tight_logsob(ctx),
        "chamber-phi-sobolev" => chamber_phi_sobolev(ctx),
        "chamber-invariance" => chamber_invariance(ctx),
        "sobolev-ratio" => sobolev_ratio_check(ctx),
        "synthetic-violation" => synthetic_violation(ctx),
        other => Err(LabError::OutOfRange(format!("unknown check '{other}'"))),
    }
}

fn require(cond: bool, msg: &str) -> Result<(), LabError> {
    if cond {
        Ok(())
    } else {
        Err(LabError::OutOfRange(msg.into()))
    }
}

fn keyineq(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(ctx.p == 2.0, "keyineq is the p = 2 moment bound")?;
    let (_, me) = ctx.probability_estimator()?;
    let nd = ctx.effective_dim();
    let mut constants = BTreeMap::new();
    constants.insert("C".into(), 1.0);
    constants.insert("D".into(), nd);
    let rhs = vec![
        (
            "dirichlet".to_string(),
            1.0,
            FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Dunkl },
        ),
        ("l2-norm".to_string(), nd, FunctionalSpec::SquaredNorm),
    ];
    let lhs = FunctionalSpec::WeightedL2Moment { radial_exponent: 2.0 };
    let mut reports = Vec::new();
    for (label, f) in ctx.standard_suite() {
        reports.push(check_bound(
            "keyineq",
            &lhs,
            &rhs,
            constants.clone(),
            &ctx.rs,
            &me,
            &f,
            &label,
        )?);
    }
    Ok(reports)
}

fn ubound_intermediate(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let p = ctx.p;
    let (_, me) = ctx.probability_estimator()?;
    let nd = ctx.effective_dim();
    let c_grad = 4.0 / (p * p);
    let c_mom = 2.0 * (p * p + p * (nd - 2.0)) / (p * p);
    let mut constants = BTreeMap::new();
    constants.insert("C".into(), c_grad);
    constants.insert("D".into(), c_mom);
    let lhs = FunctionalSpec::WeightedL2Moment { radial_exponent: 2.0 * (p - 1.0) };
    let rhs = vec![
        (
            "dirichlet".to_string(),
            c_grad,
            FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Dunkl },
        ),
        (
            "weighted-l2".to_string(),
            c_mom,
            FunctionalSpec::WeightedL2Moment { radial_exponent: p - 2.0 },
        ),
    ];
    let mut reports = Vec::new();
    for (label, f) in ctx.standard_suite() {
        reports.push(check_bound(
            "ubound-intermediate",
            &lhs,
            &rhs,
            constants.clone(),
            &ctx.rs,
            &me,
            &f,
            &label,
        )?);
    }
    Ok(reports)
}

/// Radial ramp: 0 on the unit ball, `|x| - 1` in between, 1 outside B_2.
fn radial_ramp(dim: usize) -> ScalarField {
    ScalarField::new(dim, |x| (norm(x) - 1.0).clamp(0.0, 1.0))
        .with_gradient(|x| {
            let r = norm(x);
            if r <= 1.0 || r >= 2.0 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|c| c / r).collect()
            }
        })
        .invariant(true)
}

/// Ball-vanishing nonnegative suite members: `ramp(x) * (combo^2 + t)`.
fn ball_vanishing_suite(ctx: &CheckContext) -> Vec<(String, TestFunction)> {
    let dim = ctx.rs.dim();
    let ramp = radial_ramp(dim);
    let basis = FunctionBasis::hermite_tensor(dim, ctx.suite_degree().min(3));
    let mut suite: Vec<(String, TestFunction)> = Vec::new();
    let mut combos = basis.random_unit_combos(ctx.n_random_combos.min(40), ctx.seed ^ 0x51);
    combos.push(("one".into(), Polynomial::one(dim)));
    for (label, q) in combos {
        let q2 = q.mul(&q);
        let q2c = q2.compiled();
        let grads: Vec<_> = (0..dim).map(|i| q2.partial(i).compiled()).collect();
        let ramp_in = ramp.clone();
        let ramp_grad = ramp.clone();
        let grads_in = grads;
        let q2_grad = q2c.clone();
        let field = ScalarField::new(dim, move |x| ramp_in.eval(x) * q2c.eval(x)).with_gradient(
            move |x| {
                let rv = ramp_grad.eval(x);
                let rg = ramp_grad.gradient_at(x).expect("ramp gradient");
                let qv = q2_grad.eval(x);
                grads_in
                    .iter()
                    .zip(&rg)
                    .map(|(g, dr)| rv * g.eval(x) + qv * dr)
                    .collect()
            },
        );
        suite.push((format!("ramp*{label}^2"), TestFunction::Field(field)));
    }
    suite
}

fn ubound_l1(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let p = ctx.p;
    let (_, me) = ctx.probability_estimator()?;
    let nd = ctx.effective_dim();
    let c1 = 1.0 / p;
    let d1 = (nd - 1.0) / p;
    let mut constants = BTreeMap::new();
    constants.insert("C1".into(), c1);
    constants.insert("D".into(), d1);
    let lhs = FunctionalSpec::WeightedL1Moment { radial_exponent: p - 1.0 };
    let rhs = vec![
        (
            "l1-dirichlet".to_string(),
            c1,
            FunctionalSpec::Dirichlet { norm: Norm::L1, gradient: GradientKind::Dunkl },
        ),
        ("l1-norm".to_string(), d1, FunctionalSpec::AbsNorm),
    ];
    let mut reports = Vec::new();
    for (label, f) in ball_vanishing_suite(ctx) {
        reports.push(check_bound(
            "ubound-l1",
            &lhs,
            &rhs,
            constants.clone(),
            &ctx.rs,
            &me,
            &f,
            &label,
        )?);
    }
    Ok(reports)
}

fn ubound_l2(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(ctx.p >= 2.0, "the fitted weighted-moment bound requires p >= 2")?;
    fitted_family(ctx, TwoTermFamily::weighted_moment(ctx.p))
}

fn fitted_family(
    ctx: &CheckContext,
    family: TwoTermFamily,
) -> Result<Vec<InequalityReport>, LabError> {
    let (_, me) = ctx.probability_estimator()?;
    let suite = ctx.standard_suite();
    let rows = family_rows(&family, &ctx.rs, &me, &suite)?;
    let (_, _, report) = fit_two_constants(&family.name, &rows)?;
    Ok(vec![report])
}

fn tight_family(
    ctx: &CheckContext,
    family: TwoTermFamily,
    name: &str,
) -> Result<Vec<InequalityReport>, LabError> {
    let (_, me) = ctx.probability_estimator()?;
    let suite = ctx.standard_suite();
    let rows = family_rows(&family, &ctx.rs, &me, &suite)?;
    let (c, worst_label) = fit_tight_constant(&rows)?;
    let mut reports = Vec::new();
    // With the fitted constant, every row must close (self-consistency).
    let mut worst_margin = f64::INFINITY;
    let mut worst_report = None;
    for r in &rows {
        let margin = c * r.t1 - r.lhs;
        if margin < worst_margin {
            worst_margin = margin;
            let mut constants = BTreeMap::new();
            constants.insert("C".into(), c);
            worst_report = Some(InequalityReport::build(
                name,
                ValueWithError { value: r.lhs, err: r.lhs_err },
                vec![RhsTerm {
                    label: "dirichlet".into(),
                    coefficient: c,
                    value: r.t1,
                    err: r.t1_err,
                }],
                constants,
                format!("{} (fitted on {})", r.label, worst_label),
            ));
        }
    }
    reports.push(worst_report.expect("suite nonempty"));
    Ok(reports)
}

fn tight_logsob(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(ctx.p >= 2.0, "the tight log-Sobolev inequality requires p >= 2")?;
    tight_family(ctx, TwoTermFamily::log_sobolev(), "tight-logsob")
}

/// Fit the tight log-Sobolev constant of the context measure (the value the
/// concentration and integrability checks consume).
pub fn fitted_tight_constant(ctx: &CheckContext) -> Result<f64, LabError> {
    let (_, me) = ctx.probability_estimator()?;
    let suite = ctx.standard_suite();
    let rows = family_rows(&TwoTermFamily::log_sobolev(), &ctx.rs, &me, &suite)?;
    let (c, _) = fit_tight_constant(&rows)?;
    Ok(c)
}

fn logsob_mu_k(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let support = 5.0;
    let me = ctx.mu_k_estimator(support * 1.2)?;
    let basis = FunctionBasis::hermite_tensor(ctx.rs.dim(), ctx.suite_degree().min(4))
        .with_radial_bump(support);
    let suite: Vec<(String, TestFunction)> = basis
        .labels
        .iter()
        .cloned()
        .zip(basis.members.iter().cloned())
        .collect();
    let c = fit_epsilon_constant(&ctx.rs, &me, &suite)?;
    let rows = family_rows(&TwoTermFamily::log_sobolev(), &ctx.rs, &me, &suite)?;
    let mut reports = Vec::new();
    for eps in [0.25f64, 1.0] {
        let ce = log_sobolev_c_of_epsilon(&ctx.rs, eps, c);
        // worst margin across the suite for this epsilon
        let mut worst: Option<InequalityReport> = None;
        for r in &rows {
            let mut constants = BTreeMap::new();
            constants.insert("epsilon".into(), eps);
            constants.insert("C_of_epsilon".into(), ce);
            constants.insert("c".into(), c);
            let report = InequalityReport::build(
                "logsob-mu-k",
                ValueWithError { value: r.lhs, err: r.lhs_err },
                vec![
                    RhsTerm { label: "dirichlet".into(), coefficient: eps, value: r.t1, err: r.t1_err },
                    RhsTerm { label: "l2-norm".into(), coefficient: ce, value: r.t2, err: r.t2_err },
                ],
                constants,
                r.label.clone(),
            );
            if worst.as_ref().map_or(true, |w| report.margin < w.margin) {
                worst = Some(report);
            }
        }
        reports.push(worst.expect("suite nonempty"));
    }
    Ok(reports)
}

fn logsob_lp(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let support = 5.0;
    let me = ctx.mu_k_estimator(support * 1.2)?;
    let basis = FunctionBasis::hermite_tensor(ctx.rs.dim(), ctx.suite_degree().min(4))
        .with_radial_bump(support);
    let suite: Vec<(String, TestFunction)> = basis
        .labels
        .iter()
        .cloned()
        .zip(basis.members.iter().cloned())
        .collect();
    let c = fit_epsilon_constant(&ctx.rs, &me, &suite)?;
    let dim = ctx.rs.dim();
    let one_plus_sq = Polynomial::one(dim).add(&Polynomial::norm_squared(dim));
    let f = bump_multiply(&TestFunction::Poly(one_plus_sq), support);
    let mut reports = Vec::new();
    for (p_lp, eps) in [(4.0, 0.5), (4.0, 1.0), (3.0, 0.5)] {
        let mut report = lp_logsob_check(&ctx.rs, &me, &f, p_lp, eps, c)?;
        report.test_function = format!("(1+|x|^2)*bump, p={p_lp}, eps={eps}");
        reports.push(report);
    }
    Ok(reports)
}

fn poincare_ball(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let degree = ctx.suite_degree();
    let basis: Vec<Polynomial> = FunctionBasis::hermite_tensor(ctx.rs.dim(), degree)
        .polynomial_members()
        .into_iter()
        .cloned()
        .collect();
    let mut reports = Vec::new();
    let mut rate_constants = Vec::new();
    for radius in [1.0f64, 2.0, 4.0] {
        let ms = MeasureSpec::ball(ctx.rs.clone(), radius)?;
        let params = GridParams {
            resolution: ctx.quadrature_resolution(),
            ..Default::default()
        };
        let grid = QuadratureGrid::build(&ms, &params)?;
        let me = MeasureEstimator::from_grid(Arc::new(grid));
        let (lambda, _) =
            estimate_best_constant_rayleigh(&ctx.rs, &me, &basis, GradientKind::Dunkl)?;
        rate_constants.push(lambda / (radius * radius));
        let mut constants = BTreeMap::new();
        constants.insert("C".into(), lambda / (radius * radius));
        constants.insert("r".into(), radius);
        reports.push(InequalityReport::build(
            "poincare-ball",
            ValueWithError { value: lambda, err: 0.0 },
            vec![RhsTerm {
                label: "C*R^2".into(),
                coefficient: radius * radius,
                value: lambda / (radius * radius),
                err: 0.0,
            }],
            constants,
            format!("rayleigh extremal, R={radius}"),
        ));
    }
    // R-independence of C: max/min of the per-radius constants close to 1.
    let max_c = rate_constants.iter().cloned().fold(f64::MIN, f64::max);
    let min_c = rate_constants.iter().cloned().fold(f64::MAX, f64::min);
    let mut constants = BTreeMap::new();
    constants.insert("C".into(), max_c);
    reports.push(InequalityReport::build(
        "poincare-ball-r-independence",
        ValueWithError { value: max_c, err: 0.0 },
        vec![RhsTerm { label: "min-C-with-1%-headroom".into(), coefficient: 1.01, value: min_c, err: 0.0 }],
        constants,
        "scaling of the ball Poincare constant",
    ));
    Ok(reports)
}

fn poincare_mu_u(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let (_, me) = ctx.probability_estimator()?;
    let basis: Vec<Polynomial> = FunctionBasis::hermite_tensor(ctx.rs.dim(), ctx.suite_degree())
        .polynomial_members()
        .into_iter()
        .cloned()
        .collect();
    let (lambda, _) = estimate_best_constant_rayleigh(&ctx.rs, &me, &basis, GradientKind::Dunkl)?;
    // Independent upper pass: the fitted constant over the whole suite
    // (including tilts outside the polynomial span) must cover lambda.
    let suite = ctx.standard_suite();
    let mut c_fit = lambda;
    let mut worst = ("rayleigh-extremal".to_string(), lambda, 1.0, 0.0, 0.0);
    for (label, f) in &suite {
        let (var, var_err) =
            super::evaluate_functional(&ctx.rs, &me, f, &FunctionalSpec::Variance)?;
        let d = super::dirichlet_form(&ctx.rs, &me, f, Norm::L2, GradientKind::Dunkl)?;
        if d.value > 1e-10 && var / d.value > c_fit {
            c_fit = var / d.value;
            worst = (label.clone(), var, d.value, var_err, d.err);
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("C".into(), c_fit);
    constants.insert("C_lower".into(), lambda);
    Ok(vec![InequalityReport::build(
        "poincare-mu-U",
        ValueWithError { value: worst.1, err: worst.3 },
        vec![RhsTerm { label: "dirichlet".into(), coefficient: c_fit, value: worst.2, err: worst.4 }],
        constants,
        worst.0,
    )])
}

fn rothaus(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let (_, me) = ctx.probability_estimator()?;
    let f = TestFunction::Poly(Polynomial::var(ctx.rs.dim(), 0));
    let sweep: Vec<f64> = (-10..=10).map(|i| i as f64 / 2.0).collect();
    let rows = rothaus_defect(&me, &f, &sweep)?;
    Ok(rows
        .into_iter()
        .map(|row| {
            let mut constants = BTreeMap::new();
            constants.insert("c".into(), row.c);
            InequalityReport::build(
                "rothaus-defect",
                ValueWithError { value: 0.0, err: 0.0 },
                vec![RhsTerm {
                    label: "defect".into(),
                    coefficient: 1.0,
                    value: row.defect,
                    err: row.err,
                }],
                constants,
                format!("x_1 recentered, shift c={}", row.c),
            )
        })
        .collect())
}

fn exp_integrability(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(ctx.p >= 2.0, "exponential integrability requires p >= 2")?;
    let tight_c = fitted_tight_constant(ctx)?;
    let f = ScalarField::norm_field(ctx.rs.dim());
    let a = 1.0;
    let threshold = (2.0 / (a * tight_c)).sqrt();
    let b = 0.7 * threshold;
    let ms = ctx.measure()?;
    let radii: Vec<f64> = (1..=8).map(|i| i as f64).collect();
    let (rows, verdict) =
        exp_integrability_scan(&ms, ctx.quadrature_resolution(), &f, b, &radii)?;
    let mut reports = Vec::new();
    let limit = rows.last().expect("rows nonempty").truncated_integral;
    let diffs: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].truncated_integral - w[0].truncated_integral)
        .collect();
    let last_ratio = match &diffs[..] {
        [.., a, b] if *a > 0.0 => b / a,
        _ => 0.0,
    };
    let mut constants = BTreeMap::new();
    constants.insert("b".into(), b);
    constants.insert("C".into(), tight_c);
    constants.insert("a".into(), a);
    reports.push(InequalityReport::build(
        "exp-integrability",
        ValueWithError { value: last_ratio, err: 0.0 },
        vec![RhsTerm {
            label: "geometric-shrinkage-threshold".into(),
            coefficient: 1.0,
            value: 0.9,
            err: 0.0,
        }],
        constants.clone(),
        format!(
            "truncated integrals of exp(b^2|x|^2/2), limit {limit:.6e}, verdict {verdict:?}"
        ),
    ));
    // The moment-generating bound behind the scan, at s in {-2,-1,1,2}.
    let (_, me) = ctx.probability_estimator()?;
    for s in [-2.0f64, -1.0, 1.0, 2.0] {
        reports.push(herbst_mgf_bound(&ctx.rs, &me, &f, tight_c, s)?);
    }
    Ok(reports)
}

fn exp_divergence(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(
        1.0 < ctx.p && ctx.p < 2.0,
        "the divergence check applies to 1 < p < 2",
    )?;
    let ms = MeasureSpec::mu_u(ctx.rs.clone(), ctx.p)?;
    let f = ScalarField::norm_field(ctx.rs.dim());
    let radii = [8.0, 16.0, 32.0, 48.0, 64.0, 96.0, 128.0];
    let resolution = ctx.quadrature_resolution().min(10);
    let (rows, verdict) = exp_integrability_scan(&ms, resolution, &f, 0.5, &radii)?;
    let diffs: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].truncated_integral - w[0].truncated_integral)
        .collect();
    let last_ratio = match &diffs[..] {
        [.., a, b] if *a > 0.0 => b / a,
        _ => f64::INFINITY,
    };
    let mut constants = BTreeMap::new();
    constants.insert("b".into(), 0.5);
    // Divergence is the expected finding: increments must NOT shrink.
    Ok(vec![InequalityReport::build(
        "exp-divergence-below-p2",
        ValueWithError { value: 0.9, err: 0.0 },
        vec![RhsTerm {
            label: "last-increment-ratio".into(),
            coefficient: 1.0,
            value: last_ratio,
            err: 0.0,
        }],
        constants,
        format!("p={}, verdict {verdict:?}", ctx.p),
    )])
}

fn concentration(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(ctx.p >= 2.0, "concentration requires p >= 2")?;
    let tight_c = {
        // the constant comes from the quadrature fit on the same measure
        let mut quad_ctx = ctx.clone();
        quad_ctx.estimator = EstimatorChoice::Quadrature {
            resolution: ctx.quadrature_resolution(),
            box_half_width: None,
        };
        fitted_tight_constant(&quad_ctx)?
    };
    let (n, n_chains) = match &ctx.estimator {
        EstimatorChoice::Mcmc { n, chains, .. } => (*n, *chains),
        _ => (100_000, 4),
    };
    let ms = ctx.measure()?;
    let chains = sample_chains(&ms, n / n_chains.max(1), Algo::Rwm, ctx.seed, n_chains)?;
    let f = ScalarField::norm_field(ctx.rs.dim());
    let rows = concentration_profile(&ctx.rs, &chains, &f, tight_c, &[0.5, 1.0, 1.5, 2.0])?;
    Ok(rows
        .into_iter()
        .map(|row| {
            let mut constants = BTreeMap::new();
            constants.insert("C".into(), tight_c);
            constants.insert("a".into(), 1.0);
            constants.insert("r".into(), row.r);
            InequalityReport::build(
                "concentration",
                ValueWithError {
                    value: row.empirical_tail,
                    err: (row.ci_high - row.ci_low) / 2.0,
                },
                vec![RhsTerm {
                    label: "exp(-r^2/(aC))".into(),
                    coefficient: 1.0,
                    value: row.bound,
                    err: 0.0,
                }],
                constants,
                format!("f=|x|, r={}", row.r),
            )
        })
        .collect())
}

fn chamber_ctx(ctx: &CheckContext) -> CheckContext {
    let mut c = ctx.clone();
    c.chamber = true;
    c
}

fn chamber_poincare(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let ctx = chamber_ctx(ctx);
    let (_, me) = ctx.probability_estimator()?;
    let basis: Vec<Polynomial> = FunctionBasis::hermite_tensor(ctx.rs.dim(), ctx.suite_degree())
        .polynomial_members()
        .into_iter()
        .cloned()
        .collect();
    let (lambda, _) =
        estimate_best_constant_rayleigh(&ctx.rs, &me, &basis, GradientKind::Classical)?;
    let mut constants = BTreeMap::new();
    constants.insert("C".into(), lambda);
    Ok(vec![InequalityReport::build(
        "chamber-poincare",
        ValueWithError { value: lambda, err: 0.0 },
        vec![RhsTerm { label: "C".into(), coefficient: 1.0, value: lambda, err: 0.0 }],
        constants,
        "rayleigh extremal on the fundamental chamber (classical gradient)",
    )])
}

fn chamber_tight_logsob(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(ctx.p >= 2.0, "the tight chamber log-Sobolev inequality requires p >= 2")?;
    let ctx = chamber_ctx(ctx);
    tight_family(&ctx, TwoTermFamily::log_sobolev_classical(), "chamber-tight-logsob")
}

fn chamber_phi_sobolev(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    require(1.0 < ctx.p && ctx.p < 2.0, "the chamber Phi form requires 1 < p < 2")?;
    let ctx = chamber_ctx(ctx);
    let s = 2.0 * (ctx.p - 1.0) / ctx.p;
    let family = TwoTermFamily {
        name: format!("chamber-phi-sobolev(s={s})"),
        lhs: FunctionalSpec::Entropy(super::EntropyVariant::Phi { s }),
        t1: FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Classical },
        t2: FunctionalSpec::SquaredNorm,
    };
    tight_family(&ctx, family, "chamber-phi-sobolev")
}

fn chamber_invariance(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let mut full_ctx = ctx.clone();
    full_ctx.chamber = false;
    let (ms, me) = full_ctx.probability_estimator()?;
    let chamber = ChamberId::fundamental(ctx.rs.num_positive_roots());
    let mut reports = Vec::new();
    let dim = ctx.rs.dim();
    let one = TestFunction::Poly(Polynomial::one(dim));
    reports.push(chamber_invariance_check(&ctx.rs, &one, &me, &chamber)?);
    let radial = TestFunction::Field(
        ScalarField::new(dim, |x| norm_sq(x) * (-norm_sq(x)).exp()).invariant(true),
    );
    reports.push(chamber_invariance_check(&ctx.rs, &radial, &me, &chamber)?);
    // symmetrised random polynomials
    let basis = FunctionBasis::hermite_tensor(dim, 3);
    let combos = basis.random_unit_combos(2, ctx.seed ^ 0x9a);
    let combo_basis = FunctionBasis {
        members: combos.iter().map(|(_, p)| TestFunction::Poly(p.clone())).collect(),
        labels: combos.iter().map(|(l, _)| l.clone()).collect(),
        g_invariant_only: false,
    };
    if let Ok(sym) = combo_basis.symmetrized(&ctx.rs) {
        for member in sym.members {
            reports.push(chamber_invariance_check(&ctx.rs, &member, &me, &chamber)?);
        }
    }
    // Dual route on the normalisations: Z = |G| Z_H from independent grids.
    let z = match ms.cached_normalization() {
        Some(z) => z,
        None => normalization(&MeasureSpec::mu_u(ctx.rs.clone(), ctx.p)?, ctx.quadrature_resolution())?,
    };
    let chamber_ms = MeasureSpec::mu_u_fundamental_chamber(ctx.rs.clone(), ctx.p)?;
    let z_h = normalization(&chamber_ms, ctx.quadrature_resolution())?;
    let order = ctx.rs.group_order()? as f64;
    let mut constants = BTreeMap::new();
    constants.insert("group_order".into(), order);
    reports.push(InequalityReport::build(
        "chamber-invariance",
        ValueWithError { value: (z - order * z_h).abs(), err: 0.0 },
        vec![RhsTerm {
            label: "1e-5-relative".into(),
            coefficient: 1.0,
            value: 1e-5 * z.abs(),
            err: 0.0,
        }],
        constants,
        "normalisation identity Z = |G| Z_H",
    ));
    Ok(reports)
}

fn sobolev_ratio_check(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let effective_dim = ctx.effective_dim();
    let p = 2.0f64.min(effective_dim * 0.75).max(1.0);
    let support = 4.0;
    let me = ctx.mu_k_estimator(support * 1.1)?;
    let degree = ctx.suite_degree().min(3);
    let basis = FunctionBasis::hermite_tensor(ctx.rs.dim(), degree).with_radial_bump(support);
    let mut suite: Vec<(String, TestFunction)> = basis
        .labels
        .iter()
        .cloned()
        .zip(basis.members.iter().cloned())
        .collect();
    let raw = FunctionBasis::hermite_tensor(ctx.rs.dim(), degree);
    for (label, combo) in raw.random_unit_combos(10, ctx.seed ^ 0x33) {
        suite.push((
            format!("{label}*bump"),
            TestFunction::Field(bump_multiply(&TestFunction::Poly(combo), support)),
        ));
    }
    let (ratio, q, label) = sobolev_ratio(&ctx.rs, &me, &suite, p)?;
    let mut constants = BTreeMap::new();
    constants.insert("C".into(), ratio);
    constants.insert("s".into(), q);
    Ok(vec![InequalityReport::build(
        "sobolev-ratio",
        ValueWithError { value: ratio, err: 0.0 },
        vec![RhsTerm { label: "lower-bound".into(), coefficient: 1.0, value: ratio, err: 0.0 }],
        constants,
        format!("{label}, p={p}, q={q}"),
    )])
}

fn synthetic_violation(ctx: &CheckContext) -> Result<Vec<InequalityReport>, LabError> {
    let (_, me) = ctx.probability_estimator()?;
    let f = TestFunction::Poly(Polynomial::var(ctx.rs.dim(), 0));
    let (var, var_err) = super::evaluate_functional(&ctx.rs, &me, &f, &FunctionalSpec::Variance)?;
    let d = super::dirichlet_form(&ctx.rs, &me, &f, Norm::L2, GradientKind::Dunkl)?;
    let mut constants = BTreeMap::new();
    constants.insert("C".into(), 1e-6);
    Ok(vec![InequalityReport::build(
        "synthetic-violation",
        ValueWithError { value: var, err: var_err },
        vec![RhsTerm { label: "dirichlet".into(), coefficient: 1e-6, value: d.value, err: d.err }],
        constants,
        "x_1 against a deliberately false constant",
    )])
}
