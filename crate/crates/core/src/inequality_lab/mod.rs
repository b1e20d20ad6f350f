//! Evaluation of both sides of the functional inequalities: entropy and
//! Dirichlet functionals over quadrature grids or MCMC chains, generic
//! inequality reports with propagated error bars, constant fitting,
//! Rayleigh-quotient estimates of best constants, and scan utilities.

pub mod basis;
pub mod catalog;
pub mod fitting;
pub mod scans;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use thiserror::Error;

use crate::dunkl_calc::{
    dunkl_gradient_at, dunkl_gradient_poly, DunklError, Polynomial, TestFunction,
};
use crate::quadrature::{QuadratureError, QuadratureGrid};
use crate::root_system::{RootSystem, RootSystemError, WALL_TOL};
use crate::sampler::{diagnostics, SampleChain, SamplerError};
use crate::vecmath::norm;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("estimator: {0}")]
    Estimator(String),
    #[error("degenerate test function (nonpositive total mass)")]
    DegenerateFunction,
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("constant search exhausted: max lhs/t1 ratio {max_ratio_t1}, max lhs/t2 ratio {max_ratio_t2}")]
    SearchExhausted { max_ratio_t1: f64, max_ratio_t2: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Dunkl(#[from] DunklError),
    #[error(transparent)]
    RootSystem(#[from] RootSystemError),
}

/// Expectations against a measure, backed by either a quadrature grid or a
/// set of MCMC chains. Monomial moment tables are cached per degree so that
/// polynomial functionals over large test suites stay cheap.
pub struct MeasureEstimator {
    source: EstimatorSource,
    dim: usize,
    moment_cache: Mutex<HashMap<(u64, u32), Arc<MomentTable>>>,
}

enum EstimatorSource {
    Grid { grid: Arc<QuadratureGrid> },
    Chains { chains: Arc<Vec<SampleChain>> },
}

impl MeasureEstimator {
    pub fn from_grid(grid: Arc<QuadratureGrid>) -> Self {
        let dim = grid.dim();
        MeasureEstimator {
            source: EstimatorSource::Grid { grid },
            dim,
            moment_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_chains(chains: Vec<SampleChain>) -> Result<Self, LabError> {
        if chains.is_empty() || chains.iter().any(|c| c.is_empty()) {
            return Err(LabError::Estimator("empty chain set".into()));
        }
        let dim = chains[0].dim();
        if chains.iter().any(|c| c.dim() != dim) {
            return Err(LabError::Estimator("chains of mixed dimension".into()));
        }
        Ok(MeasureEstimator {
            source: EstimatorSource::Chains { chains: Arc::new(chains) },
            dim,
            moment_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> Option<&QuadratureGrid> {
        match &self.source {
            EstimatorSource::Grid { grid } => Some(grid),
            _ => None,
        }
    }

    pub fn chains(&self) -> Option<&[SampleChain]> {
        match &self.source {
            EstimatorSource::Chains { chains } => Some(chains),
            _ => None,
        }
    }

    /// Expectation of a raw function with an error estimate (Richardson
    /// difference for grids, autocorrelation-aware Monte Carlo standard
    /// error for chains).
    pub fn expect_fn(&self, f: impl Fn(&[f64]) -> f64) -> Result<(f64, f64), LabError> {
        match &self.source {
            EstimatorSource::Grid { grid } => Ok(grid.integrate_fn(|x| f(x))?),
            EstimatorSource::Chains { chains } => {
                let (mean, se) = diagnostics::functional_moment(chains, f);
                if !mean.is_finite() {
                    return Err(LabError::Estimator("non-finite chain functional".into()));
                }
                Ok((mean, se))
            }
        }
    }

    pub fn expect(&self, f: &TestFunction) -> Result<(f64, f64), LabError> {
        match f {
            TestFunction::Poly(p) => self.expect_poly(p),
            TestFunction::Field(field) => self.expect_fn(|x| field.eval(x)),
        }
    }

    /// Expectation of a polynomial via the cached moment tables.
    pub fn expect_poly(&self, p: &Polynomial) -> Result<(f64, f64), LabError> {
        let table = self.weighted_moments(0.0, p.degree())?;
        table.expect_poly(p)
    }

    /// Expectation of `p(x) |x|^q` via a radially weighted moment table.
    pub fn expect_poly_weighted(&self, p: &Polynomial, q: f64) -> Result<(f64, f64), LabError> {
        let table = self.weighted_moments(q, p.degree())?;
        table.expect_poly(p)
    }

    /// The moment table `E[x^beta |x|^q]` over all `|beta| <= max_degree`,
    /// cached by `(q, degree)`.
    pub fn weighted_moments(&self, q: f64, max_degree: u32) -> Result<Arc<MomentTable>, LabError> {
        {
            let cache = self.moment_cache.lock().expect("moment cache poisoned");
            for ((qb, deg), table) in cache.iter() {
                if *qb == q.to_bits() && *deg >= max_degree {
                    return Ok(table.clone());
                }
            }
        }
        let table = Arc::new(self.compute_moments(q, max_degree)?);
        self.moment_cache
            .lock()
            .expect("moment cache poisoned")
            .insert((q.to_bits(), max_degree), table.clone());
        Ok(table)
    }

    fn compute_moments(&self, q: f64, max_degree: u32) -> Result<MomentTable, LabError> {
        let exponents = monomials_up_to(self.dim, max_degree);
        let n_mono = exponents.len();
        let order = monomial_eval_order(&exponents);
        match &self.source {
            EstimatorSource::Grid { grid } => {
                let mut fine = vec![0.0f64; n_mono];
                let mut coarse = vec![0.0f64; n_mono];
                for (set, acc) in [(NodeSet::Fine, &mut fine), (NodeSet::Coarse, &mut coarse)] {
                    let mut mono = vec![0.0f64; n_mono];
                    let count = match set {
                        NodeSet::Fine => grid.num_nodes(),
                        NodeSet::Coarse => grid.num_coarse_nodes(),
                    };
                    for i in 0..count {
                        let (x, w) = match set {
                            NodeSet::Fine => (grid.node(i), grid.weight(i)),
                            NodeSet::Coarse => (grid.coarse_node(i), grid.coarse_weight(i)),
                        };
                        eval_monomials(&order, x, q, &mut mono);
                        for (a, m) in acc.iter_mut().zip(&mono) {
                            *a += w * m;
                        }
                    }
                }
                let values = fine
                    .iter()
                    .zip(&coarse)
                    .map(|(f, c)| (*f, (f - c).abs()))
                    .collect();
                Ok(MomentTable { exponents, values })
            }
            EstimatorSource::Chains { chains } => {
                // Batch means: per chain, accumulate ~sqrt(n)-sized batch
                // averages; the spread of batch means gives the error.
                let mut totals = vec![0.0f64; n_mono];
                let mut total_n = 0usize;
                let mut batch_means: Vec<Vec<f64>> = Vec::new();
                let mut mono = vec![0.0f64; n_mono];
                for chain in chains.iter() {
                    let n = chain.len();
                    let batch_len = ((n as f64).sqrt().ceil() as usize).max(8);
                    let mut batch = vec![0.0f64; n_mono];
                    let mut in_batch = 0usize;
                    for x in chain.iter_points() {
                        eval_monomials(&order, x, q, &mut mono);
                        for ((t, b), m) in totals.iter_mut().zip(batch.iter_mut()).zip(&mono) {
                            *t += m;
                            *b += m;
                        }
                        in_batch += 1;
                        total_n += 1;
                        if in_batch == batch_len {
                            batch_means.push(batch.iter().map(|s| s / in_batch as f64).collect());
                            batch = vec![0.0f64; n_mono];
                            in_batch = 0;
                        }
                    }
                    if in_batch >= batch_len / 2 {
                        batch_means.push(batch.iter().map(|s| s / in_batch as f64).collect());
                    }
                }
                let n_batches = batch_means.len().max(1);
                let values = (0..n_mono)
                    .map(|j| {
                        let mean = totals[j] / total_n as f64;
                        let var_of_means = batch_means
                            .iter()
                            .map(|b| (b[j] - mean) * (b[j] - mean))
                            .sum::<f64>()
                            / n_batches as f64;
                        (mean, (var_of_means / n_batches as f64).sqrt())
                    })
                    .collect();
                Ok(MomentTable { exponents, values })
            }
        }
    }
}

#[derive(Clone, Copy)]
enum NodeSet {
    Fine,
    Coarse,
}

/// Monomial moments against a fixed measure: `E[x^beta |x|^q]` with errors.
pub struct MomentTable {
    exponents: Vec<Vec<u32>>,
    values: Vec<(f64, f64)>,
}

impl MomentTable {
    pub fn expect_poly(&self, p: &Polynomial) -> Result<(f64, f64), LabError> {
        let index: HashMap<&Vec<u32>, usize> =
            self.exponents.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let mut value = 0.0;
        let mut err = 0.0;
        for (e, c) in p.terms() {
            let idx = *index
                .get(e)
                .ok_or_else(|| LabError::Estimator("moment table degree too low".into()))?;
            let cf = crate::dunkl_calc::polynomial::rational_to_f64(c);
            value += cf * self.values[idx].0;
            err += cf.abs() * self.values[idx].1;
        }
        Ok((value, err))
    }
}

fn monomials_up_to(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, axis: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if axis == dim {
            out.push(prefix.clone());
            return;
        }
        for d in 0..=left {
            prefix[axis] = d;
            rec(dim, axis + 1, left - d, prefix, out);
        }
        prefix[axis] = 0;
    }
    let mut out = Vec::new();
    let mut prefix = vec![0u32; dim];
    rec(dim, 0, max_degree, &mut prefix, &mut out);
    out
}

/// Per-monomial evaluation recipe `value[i] = value[parent] * x[var]` (the
/// constant slot holds the radial weight), one multiply per table entry.
struct MonomialOrder {
    exponents: Vec<Vec<u32>>,
    parent: Vec<usize>,
    var: Vec<usize>,
}

fn monomial_eval_order(exponents: &[Vec<u32>]) -> MonomialOrder {
    let index: HashMap<&Vec<u32>, usize> =
        exponents.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut parent = vec![usize::MAX; exponents.len()];
    let mut var = vec![usize::MAX; exponents.len()];
    for (i, e) in exponents.iter().enumerate() {
        if e.iter().all(|&d| d == 0) {
            continue;
        }
        let j = e.iter().position(|&d| d > 0).expect("nonconstant");
        let mut p = e.clone();
        p[j] -= 1;
        parent[i] = *index.get(&p).expect("parent monomial present");
        var[i] = j;
    }
    MonomialOrder { exponents: exponents.to_vec(), parent, var }
}

fn eval_monomials(order: &MonomialOrder, x: &[f64], q: f64, out: &mut [f64]) {
    let radial = if q == 0.0 { 1.0 } else { norm(x).powf(q) };
    for i in 0..order.exponents.len() {
        out[i] = if order.parent[i] == usize::MAX {
            radial
        } else {
            out[order.parent[i]] * x[order.var[i]]
        };
    }
}

/// Entropy-type functionals of `f^2` (or of `f` itself in the L^1 variant).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EntropyVariant {
    /// `Ent(f^2) = E[f^2 log f^2] - E[f^2] log E[f^2]`.
    Ent,
    /// Positive-part power variant `E[f^2 (log_+ (f^2 / E f^2))^s]`.
    EntPow { s: f64 },
    /// `E[f^2 |log (f^2 / E f^2)|^s]`.
    AbsLogPow { s: f64 },
    /// Phi-entropy with `Phi(u) = u (log(1+u))^s`: `E[Phi(f^2)] - Phi(E f^2)`.
    Phi { s: f64 },
    /// `E[f |log(|f| / E|f|)|^s]`.
    L1LogPow { s: f64 },
}

pub(crate) fn xlogx(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

/// Entropy functional with first-order propagated error bars.
pub fn entropy(
    me: &MeasureEstimator,
    f: &TestFunction,
    variant: EntropyVariant,
) -> Result<(f64, f64), LabError> {
    let field = f.to_field();
    match variant {
        EntropyVariant::Ent => {
            let (m2, m2_err) = me.expect_fn(|x| field.eval(x).powi(2))?;
            if m2 <= 0.0 {
                return Err(LabError::DegenerateFunction);
            }
            let (e1, e1_err) = me.expect_fn(|x| xlogx(field.eval(x).powi(2)))?;
            let value = e1 - m2 * m2.ln();
            let err = e1_err + (m2.ln().abs() + 1.0) * m2_err;
            Ok((value, err))
        }
        EntropyVariant::EntPow { s } | EntropyVariant::AbsLogPow { s } => {
            if !(0.0 < s && s <= 1.0) {
                return Err(LabError::OutOfRange(format!("s must lie in (0,1], got {s}")));
            }
            let (m2, m2_err) = me.expect_fn(|x| field.eval(x).powi(2))?;
            if m2 <= 0.0 {
                return Err(LabError::DegenerateFunction);
            }
            let positive_only = matches!(variant, EntropyVariant::EntPow { .. });
            let (v, v_err) = me.expect_fn(|x| {
                let f2 = field.eval(x).powi(2);
                if f2 == 0.0 {
                    return 0.0;
                }
                let lg = (f2 / m2).ln();
                let lg = if positive_only { lg.max(0.0) } else { lg.abs() };
                f2 * lg.powf(s)
            })?;
            let err = v_err + s * m2_err * (1.0 + v / m2);
            Ok((v, err))
        }
        EntropyVariant::Phi { s } => {
            if !(0.0 < s && s <= 2.0) {
                return Err(LabError::OutOfRange(format!("phi exponent {s} out of range")));
            }
            let phi = move |u: f64| if u <= 0.0 { 0.0 } else { u * (1.0 + u).ln().powf(s) };
            let (m2, m2_err) = me.expect_fn(|x| field.eval(x).powi(2))?;
            if m2 <= 0.0 {
                return Err(LabError::DegenerateFunction);
            }
            let (e_phi, e_phi_err) = me.expect_fn(|x| phi(field.eval(x).powi(2)))?;
            let dphi = (1.0 + m2).ln().powf(s)
                + s * m2 * (1.0 + m2).ln().powf(s - 1.0) / (1.0 + m2);
            Ok((e_phi - phi(m2), e_phi_err + dphi.abs() * m2_err))
        }
        EntropyVariant::L1LogPow { s } => {
            if !(0.0 < s && s <= 1.0) {
                return Err(LabError::OutOfRange(format!("s must lie in (0,1], got {s}")));
            }
            let (m1, m1_err) = me.expect_fn(|x| field.eval(x).abs())?;
            if m1 <= 0.0 {
                return Err(LabError::DegenerateFunction);
            }
            let (v, v_err) = me.expect_fn(|x| {
                let fv = field.eval(x);
                if fv == 0.0 {
                    return 0.0;
                }
                fv * ((fv.abs() / m1).ln().abs()).powf(s)
            })?;
            Ok((v, v_err + s * m1_err * (1.0 + v.abs() / m1)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientKind {
    Dunkl,
    Classical,
}

/// Dirichlet form result. `wall_fraction` is the share of evaluation points
/// within the wall tolerance; above 0.1% it is folded into `err`.
#[derive(Clone, Copy, Debug)]
pub struct DirichletResult {
    pub value: f64,
    pub err: f64,
    pub wall_fraction: f64,
}

/// `E[|grad f|^2]` or `E[|grad f|]` with the Dunkl or classical gradient.
pub fn dirichlet_form(
    rs: &RootSystem,
    me: &MeasureEstimator,
    f: &TestFunction,
    norm_kind: Norm,
    gradient: GradientKind,
) -> Result<DirichletResult, LabError> {
    // Exact polynomial gradients when available; numeric otherwise.
    let poly_grads: Option<Vec<Polynomial>> = match (f, gradient) {
        (TestFunction::Poly(p), GradientKind::Dunkl) => match dunkl_gradient_poly(rs, p) {
            Ok(g) => Some(g),
            Err(DunklError::ExactnessUnavailable(_)) => None,
            Err(e) => return Err(e.into()),
        },
        (TestFunction::Poly(p), GradientKind::Classical) => {
            Some((0..rs.dim()).map(|i| p.partial(i)).collect())
        }
        _ => None,
    };
    let wall = wall_fraction(rs, me);
    if let Some(grads) = &poly_grads {
        match norm_kind {
            Norm::L2 => {
                let mut value = 0.0;
                let mut err = 0.0;
                for g in grads {
                    let (v, e) = me.expect_poly(&g.mul(g))?;
                    value += v;
                    err += e;
                }
                return Ok(DirichletResult { value, err, wall_fraction: wall });
            }
            Norm::L1 => {
                let compiled: Vec<_> = grads.iter().map(|g| g.compiled()).collect();
                let (value, err) = me
                    .expect_fn(|x| compiled.iter().map(|g| g.eval(x).powi(2)).sum::<f64>().sqrt())?;
                return Ok(DirichletResult { value, err, wall_fraction: wall });
            }
        }
    }
    // Numeric path: Dunkl gradient with the wall-limit branch, or the
    // classical gradient of the field.
    let field = f.to_field();
    let tf = TestFunction::Field(field.clone());
    let grad_sq = |x: &[f64]| -> f64 {
        let g = match gradient {
            GradientKind::Dunkl => {
                dunkl_gradient_at(rs, &tf, x).unwrap_or_else(|_| vec![f64::NAN; x.len()])
            }
            GradientKind::Classical => {
                field.gradient_at(x).unwrap_or_else(|_| vec![f64::NAN; x.len()])
            }
        };
        g.iter().map(|c| c * c).sum()
    };
    let (value, err) = match norm_kind {
        Norm::L2 => me.expect_fn(grad_sq)?,
        Norm::L1 => me.expect_fn(|x| grad_sq(x).sqrt())?,
    };
    let err = if wall > 0.001 { err + wall * value.abs() } else { err };
    Ok(DirichletResult { value, err, wall_fraction: wall })
}

/// Share of estimator sample points lying within the wall tolerance. Grid
/// nodes are placed strictly off the walls by construction, so only chain
/// draws can raise this.
fn wall_fraction(rs: &RootSystem, me: &MeasureEstimator) -> f64 {
    if let Some(chains) = me.chains() {
        let mut near = 0usize;
        let mut total = 0usize;
        for c in chains {
            for x in c.iter_points() {
                total += 1;
                let scale = norm(x).max(1e-300);
                if (0..rs.num_positive_roots())
                    .any(|i| rs.inner_with_root(i, x).abs() < WALL_TOL * scale)
                {
                    near += 1;
                }
            }
        }
        return near as f64 / total.max(1) as f64;
    }
    0.0
}

/// Functionals an inequality side can be made of.
#[derive(Clone, Debug)]
pub enum FunctionalSpec {
    Entropy(EntropyVariant),
    Dirichlet { norm: Norm, gradient: GradientKind },
    /// `E[f^2 |x|^q]`.
    WeightedL2Moment { radial_exponent: f64 },
    /// `E[|f| |x|^q]`.
    WeightedL1Moment { radial_exponent: f64 },
    /// `E[f^2]`.
    SquaredNorm,
    /// `E[|f|]`.
    AbsNorm,
    /// `E[(f - E f)^2]`.
    Variance,
}

pub fn evaluate_functional(
    rs: &RootSystem,
    me: &MeasureEstimator,
    f: &TestFunction,
    spec: &FunctionalSpec,
) -> Result<(f64, f64), LabError> {
    match spec {
        FunctionalSpec::Entropy(variant) => entropy(me, f, *variant),
        FunctionalSpec::Dirichlet { norm, gradient } => {
            let d = dirichlet_form(rs, me, f, *norm, *gradient)?;
            Ok((d.value, d.err))
        }
        FunctionalSpec::WeightedL2Moment { radial_exponent } => match f {
            TestFunction::Poly(p) => me.expect_poly_weighted(&p.mul(p), *radial_exponent),
            TestFunction::Field(field) => {
                let q = *radial_exponent;
                me.expect_fn(|x| field.eval(x).powi(2) * norm(x).powf(q))
            }
        },
        FunctionalSpec::WeightedL1Moment { radial_exponent } => {
            let field = f.to_field();
            let q = *radial_exponent;
            me.expect_fn(|x| field.eval(x).abs() * norm(x).powf(q))
        }
        FunctionalSpec::SquaredNorm => match f {
            TestFunction::Poly(p) => me.expect_poly(&p.mul(p)),
            TestFunction::Field(field) => me.expect_fn(|x| field.eval(x).powi(2)),
        },
        FunctionalSpec::AbsNorm => {
            let field = f.to_field();
            me.expect_fn(|x| field.eval(x).abs())
        }
        FunctionalSpec::Variance => {
            let (mean, mean_err) = me.expect(f)?;
            let (sq, sq_err) = match f {
                TestFunction::Poly(p) => me.expect_poly(&p.mul(p))?,
                TestFunction::Field(field) => me.expect_fn(|x| field.eval(x).powi(2))?,
            };
            Ok((sq - mean * mean, sq_err + 2.0 * mean.abs() * mean_err))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValueWithError {
    pub value: f64,
    pub err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RhsTerm {
    pub label: String,
    pub coefficient: f64,
    pub value: f64,
    pub err: f64,
}

/// One verified inequality instance.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: ValueWithError,
    pub rhs_terms: Vec<RhsTerm>,
    pub constants: BTreeMap<String, f64>,
    pub margin: f64,
    pub violated: bool,
    pub test_function: String,
}

impl InequalityReport {
    /// Assemble a report: `margin = sum_i coeff_i value_i - lhs`, violated
    /// only when the margin undercuts the combined error bars. Non-finite
    /// sides make the report invalid (NaN margin, serialised as null) rather
    /// than violated.
    pub fn build(
        name: impl Into<String>,
        lhs: ValueWithError,
        rhs_terms: Vec<RhsTerm>,
        constants: BTreeMap<String, f64>,
        test_function: impl Into<String>,
    ) -> Self {
        let rhs_total: f64 = rhs_terms.iter().map(|t| t.coefficient * t.value).sum();
        let finite = lhs.value.is_finite()
            && lhs.err.is_finite()
            && rhs_terms.iter().all(|t| t.value.is_finite() && t.err.is_finite());
        let margin = if finite { rhs_total - lhs.value } else { f64::NAN };
        let combined = lhs.err
            + rhs_terms.iter().map(|t| t.coefficient.abs() * t.err).sum::<f64>();
        InequalityReport {
            name: name.into(),
            lhs,
            rhs_terms,
            constants,
            margin,
            violated: finite && margin < -combined,
            test_function: test_function.into(),
        }
    }

    pub fn combined_err(&self) -> f64 {
        self.lhs.err
            + self.rhs_terms.iter().map(|t| t.coefficient.abs() * t.err).sum::<f64>()
    }

    pub fn rhs_total(&self) -> f64 {
        self.rhs_terms.iter().map(|t| t.coefficient * t.value).sum()
    }

    pub fn is_invalid(&self) -> bool {
        self.margin.is_nan()
    }
}

/// Evaluate `lhs <= sum_i coeff_i * term_i` for one test function.
#[allow(clippy::too_many_arguments)]
pub fn check_bound(
    name: &str,
    lhs_spec: &FunctionalSpec,
    rhs_specs: &[(String, f64, FunctionalSpec)],
    constants: BTreeMap<String, f64>,
    rs: &RootSystem,
    me: &MeasureEstimator,
    f: &TestFunction,
    test_function: &str,
) -> Result<InequalityReport, LabError> {
    let (lv, le) = evaluate_functional(rs, me, f, lhs_spec)?;
    let mut rhs_terms = Vec::with_capacity(rhs_specs.len());
    for (label, coeff, spec) in rhs_specs {
        let (v, e) = evaluate_functional(rs, me, f, spec)?;
        rhs_terms.push(RhsTerm { label: label.clone(), coefficient: *coeff, value: v, err: e });
    }
    Ok(InequalityReport::build(
        name,
        ValueWithError { value: lv, err: le },
        rhs_terms,
        constants,
        test_function,
    ))
}
