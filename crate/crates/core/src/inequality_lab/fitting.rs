//! Constant fitting: two-constant Pareto fits over test suites, tight
//! single-constant fits, Rayleigh-quotient lower bounds for Poincare
//! constants via a generalized eigenproblem, Sobolev-quotient lower bounds,
//! and the epsilon-form constant of the free log-Sobolev inequality.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dunkl_calc::{dunkl_gradient_poly, Polynomial, TestFunction};
use crate::root_system::RootSystem;

use super::{
    evaluate_functional, FunctionalSpec, GradientKind, InequalityReport, LabError,
    MeasureEstimator, Norm, RhsTerm, ValueWithError,
};

/// One evaluated suite row for a two-term family
/// `lhs <= C1 t1 + C2 t2`.
#[derive(Clone, Debug)]
pub struct FitRow {
    pub label: String,
    pub lhs: f64,
    pub lhs_err: f64,
    pub t1: f64,
    pub t1_err: f64,
    pub t2: f64,
    pub t2_err: f64,
}

/// A named inequality family given by its three functionals.
#[derive(Clone, Debug)]
pub struct TwoTermFamily {
    pub name: String,
    pub lhs: FunctionalSpec,
    pub t1: FunctionalSpec,
    pub t2: FunctionalSpec,
}

impl TwoTermFamily {
    /// `Ent(f^2) <= C1 E|grad_k f|^2 + C2 E f^2`.
    pub fn log_sobolev() -> Self {
        TwoTermFamily {
            name: "log-sobolev".into(),
            lhs: FunctionalSpec::Entropy(super::EntropyVariant::Ent),
            t1: FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Dunkl },
            t2: FunctionalSpec::SquaredNorm,
        }
    }

    /// `E[f^2 |log(f^2/Ef^2)|^s] <= C1 E|grad_k f|^2 + C2 E f^2`.
    pub fn log_sobolev_pow(s: f64) -> Self {
        TwoTermFamily {
            name: format!("log-sobolev-pow(s={s})"),
            lhs: FunctionalSpec::Entropy(super::EntropyVariant::AbsLogPow { s }),
            t1: FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Dunkl },
            t2: FunctionalSpec::SquaredNorm,
        }
    }

    /// `E[f |log(|f|/E|f|)|^s] <= C1 E|grad_k f| + C2 E|f|`.
    pub fn l1_log_sobolev(s: f64) -> Self {
        TwoTermFamily {
            name: format!("l1-log-sobolev(s={s})"),
            lhs: FunctionalSpec::Entropy(super::EntropyVariant::L1LogPow { s }),
            t1: FunctionalSpec::Dirichlet { norm: Norm::L1, gradient: GradientKind::Dunkl },
            t2: FunctionalSpec::AbsNorm,
        }
    }

    /// `E[f^2 |x|^p] <= C1 E|grad_k f|^2 + C2 E f^2` (the weighted moment
    /// bound that holds for `p >= 2`).
    pub fn weighted_moment(p: f64) -> Self {
        TwoTermFamily {
            name: format!("weighted-moment(p={p})"),
            lhs: FunctionalSpec::WeightedL2Moment { radial_exponent: p },
            t1: FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Dunkl },
            t2: FunctionalSpec::SquaredNorm,
        }
    }

    /// Tight Phi-entropy family `Ent_Phi(f^2) <= C E|grad_k f|^2` (t2 kept
    /// as the L2 norm for the non-tight variant).
    pub fn phi_sobolev(s: f64) -> Self {
        TwoTermFamily {
            name: format!("phi-sobolev(s={s})"),
            lhs: FunctionalSpec::Entropy(super::EntropyVariant::Phi { s }),
            t1: FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Dunkl },
            t2: FunctionalSpec::SquaredNorm,
        }
    }

    /// Tight log-Sobolev with the classical gradient (the Weyl-chamber
    /// setting).
    pub fn log_sobolev_classical() -> Self {
        TwoTermFamily {
            name: "log-sobolev-classical".into(),
            lhs: FunctionalSpec::Entropy(super::EntropyVariant::Ent),
            t1: FunctionalSpec::Dirichlet { norm: Norm::L2, gradient: GradientKind::Classical },
            t2: FunctionalSpec::SquaredNorm,
        }
    }
}

/// Evaluate a family over a labelled suite.
pub fn family_rows(
    family: &TwoTermFamily,
    rs: &RootSystem,
    me: &MeasureEstimator,
    suite: &[(String, TestFunction)],
) -> Result<Vec<FitRow>, LabError> {
    let mut rows = Vec::with_capacity(suite.len());
    for (label, f) in suite {
        let lhs = match evaluate_functional(rs, me, f, &family.lhs) {
            Ok(v) => v,
            Err(LabError::DegenerateFunction) => continue,
            Err(e) => return Err(e),
        };
        let t1 = evaluate_functional(rs, me, f, &family.t1)?;
        let t2 = evaluate_functional(rs, me, f, &family.t2)?;
        rows.push(FitRow {
            label: label.clone(),
            lhs: lhs.0,
            lhs_err: lhs.1,
            t1: t1.0,
            t1_err: t1.1,
            t2: t2.0,
            t2_err: t2.1,
        });
    }
    Ok(rows)
}

const C1_GRID_POINTS: usize = 61;
const C1_MIN: f64 = 1e-3;
const C1_MAX: f64 = 1e3;
const C2_CAP: f64 = 1e6;

/// Pareto fit of `lhs <= C1 t1 + C2 t2` over the rows: for each `C1` on a
/// log grid, `C2(C1)` is the smallest feasible value (a max of residuals);
/// the returned pair minimises `C1 + C2`. The report documents the binding
/// (worst-case) row at the chosen pair.
pub fn fit_two_constants(
    family_name: &str,
    rows: &[FitRow],
) -> Result<(f64, f64, InequalityReport), LabError> {
    let usable: Vec<&FitRow> = rows.iter().filter(|r| r.t2 > 0.0).collect();
    if usable.is_empty() {
        return Err(LabError::DegenerateBasis("no usable rows for the fit".into()));
    }
    let mut best: Option<(f64, f64, usize)> = None;
    for i in 0..C1_GRID_POINTS {
        let c1 = C1_MIN * (C1_MAX / C1_MIN).powf(i as f64 / (C1_GRID_POINTS - 1) as f64);
        let mut c2 = 0.0f64;
        let mut binding = 0usize;
        for (j, r) in usable.iter().enumerate() {
            let needed = (r.lhs - c1 * r.t1) / r.t2;
            if needed > c2 {
                c2 = needed;
                binding = j;
            }
        }
        if c2 > C2_CAP {
            continue;
        }
        match best {
            Some((bc1, bc2, _)) if bc1 + bc2 <= c1 + c2 => {}
            _ => best = Some((c1, c2, binding)),
        }
    }
    let Some((c1, c2, binding)) = best else {
        let max_t1 = usable
            .iter()
            .filter(|r| r.t1 > 0.0)
            .map(|r| r.lhs / r.t1)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_t2 = usable.iter().map(|r| r.lhs / r.t2).fold(f64::NEG_INFINITY, f64::max);
        return Err(LabError::SearchExhausted { max_ratio_t1: max_t1, max_ratio_t2: max_t2 });
    };
    let worst = usable[binding];
    let mut constants = BTreeMap::new();
    constants.insert("C1".into(), c1);
    constants.insert("C2".into(), c2);
    let report = InequalityReport::build(
        family_name,
        ValueWithError { value: worst.lhs, err: worst.lhs_err },
        vec![
            RhsTerm { label: "t1".into(), coefficient: c1, value: worst.t1, err: worst.t1_err },
            RhsTerm { label: "t2".into(), coefficient: c2, value: worst.t2, err: worst.t2_err },
        ],
        constants,
        worst.label.clone(),
    );
    Ok((c1, c2, report))
}

/// Smallest tight constant `C` with `lhs <= C t1` across the suite: the
/// largest observed ratio, together with the attaining row's label.
pub fn fit_tight_constant(rows: &[FitRow]) -> Result<(f64, String), LabError> {
    let t1_scale = rows.iter().map(|r| r.t1.abs()).fold(0.0f64, f64::max);
    if t1_scale <= 0.0 {
        return Err(LabError::DegenerateBasis("all rows have zero energy".into()));
    }
    let mut best = f64::NEG_INFINITY;
    let mut label = String::new();
    for r in rows {
        if r.t1 <= 1e-9 * t1_scale {
            continue;
        }
        let ratio = r.lhs / r.t1;
        if ratio > best {
            best = ratio;
            label = r.label.clone();
        }
    }
    if !best.is_finite() {
        return Err(LabError::DegenerateBasis("no row with positive energy".into()));
    }
    Ok((best.max(0.0), label))
}

/// Lower bound on the best Poincare constant by restriction to the span of
/// the basis: solve the generalized symmetric eigenproblem `B v = l A v`
/// with `B` the covariance Gram matrix and `A` the Dirichlet Gram matrix.
/// Returns the largest eigenvalue and the coefficients of the extremal
/// combination.
pub fn estimate_best_constant_rayleigh(
    rs: &RootSystem,
    me: &MeasureEstimator,
    basis: &[Polynomial],
    gradient: GradientKind,
) -> Result<(f64, Vec<f64>), LabError> {
    if basis.is_empty() {
        return Err(LabError::DegenerateBasis("empty basis".into()));
    }
    let n = basis.len();
    let grads: Vec<Vec<Polynomial>> = basis
        .iter()
        .map(|p| match gradient {
            GradientKind::Dunkl => dunkl_gradient_poly(rs, p).map_err(LabError::from),
            GradientKind::Classical => {
                Ok((0..rs.dim()).map(|i| p.partial(i)).collect::<Vec<_>>())
            }
        })
        .collect::<Result<_, _>>()?;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    let mut means = vec![0.0f64; n];
    for (i, p) in basis.iter().enumerate() {
        means[i] = me.expect_poly(p)?.0;
    }
    for i in 0..n {
        for j in i..n {
            let mut dirichlet = 0.0;
            for l in 0..rs.dim() {
                dirichlet += me.expect_poly(&grads[i][l].mul(&grads[j][l]))?.0;
            }
            a[(i, j)] = dirichlet;
            a[(j, i)] = dirichlet;
            let cov = me.expect_poly(&basis[i].mul(&basis[j]))?.0 - means[i] * means[j];
            b[(i, j)] = cov;
            b[(j, i)] = cov;
        }
    }
    let chol = nalgebra::Cholesky::new(a.clone()).ok_or_else(|| {
        LabError::DegenerateBasis("Dirichlet Gram matrix is singular on the basis span".into())
    })?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&b)
        .ok_or_else(|| LabError::DegenerateBasis("triangular solve failed".into()))?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| LabError::DegenerateBasis("triangular solve failed".into()))?
        .transpose();
    // Symmetrise against round-off before the eigensolve.
    let z = (&z + &z.transpose()) * 0.5;
    let eig = SymmetricEigen::new(z);
    let (mut lambda_max, mut idx) = (f64::NEG_INFINITY, 0);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v > lambda_max {
            lambda_max = v;
            idx = i;
        }
    }
    let u = eig.eigenvectors.column(idx).into_owned();
    let coeffs = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| LabError::DegenerateBasis("triangular solve failed".into()))?;
    Ok((lambda_max, coeffs.iter().cloned().collect()))
}

/// Lower bound for the Sobolev constant: the largest quotient
/// `||f||_q / ||grad_k f||_p` over the suite, with
/// `q = p (N + 2 gamma) / (N + 2 gamma - p)`. Integrals run against the
/// (unnormalised) Dunkl measure, so members must be compactly supported.
pub fn sobolev_ratio(
    rs: &RootSystem,
    me: &MeasureEstimator,
    suite: &[(String, TestFunction)],
    p: f64,
) -> Result<(f64, f64, String), LabError> {
    let effective_dim = rs.dim() as f64 + 2.0 * rs.gamma();
    if !(1.0 <= p && p < effective_dim) {
        return Err(LabError::OutOfRange(format!(
            "sobolev exponent requires 1 <= p < N + 2 gamma = {effective_dim}, got {p}"
        )));
    }
    let q = p * effective_dim / (effective_dim - p);
    let mut best = 0.0f64;
    let mut label = String::new();
    for (name, f) in suite {
        let field = f.to_field();
        let (num, _) = me.expect_fn(|x| field.eval(x).abs().powf(q))?;
        let tf = TestFunction::Field(field.clone());
        let (den, _) = match p {
            p if (p - 2.0).abs() < 1e-12 => {
                let d = super::dirichlet_form(rs, me, &tf, Norm::L2, GradientKind::Dunkl)?;
                (d.value, d.err)
            }
            p if (p - 1.0).abs() < 1e-12 => {
                let d = super::dirichlet_form(rs, me, &tf, Norm::L1, GradientKind::Dunkl)?;
                (d.value, d.err)
            }
            _ => {
                let tf_inner = tf.clone();
                let rs_inner = rs;
                me.expect_fn(|x| {
                    let g = crate::dunkl_calc::dunkl_gradient_at(rs_inner, &tf_inner, x)
                        .unwrap_or_else(|_| vec![f64::NAN; x.len()]);
                    g.iter().map(|c| c * c).sum::<f64>().sqrt().powf(p)
                })?
            }
        };
        if den <= 1e-14 || num <= 0.0 {
            continue;
        }
        let ratio = num.powf(1.0 / q) / den.powf(1.0 / p);
        if ratio > best {
            best = ratio;
            label = name.clone();
        }
    }
    if label.is_empty() {
        return Err(LabError::DegenerateBasis("no member with positive gradient norm".into()));
    }
    Ok((best, q, label))
}

/// Fit the constant `c` in `C(eps) = (N + 2 gamma)/2 (log(1/eps) - c)` so
/// that `Ent(f^2) <= eps Dirichlet + C(eps) E f^2` holds across the suite
/// for every eps on a log grid. The suite must be integrable against the
/// raw Dunkl measure (compact support).
pub fn fit_epsilon_constant(
    rs: &RootSystem,
    me: &MeasureEstimator,
    suite: &[(String, TestFunction)],
) -> Result<f64, LabError> {
    let rows = family_rows(&TwoTermFamily::log_sobolev(), rs, me, suite)?;
    if rows.is_empty() {
        return Err(LabError::DegenerateBasis("empty suite".into()));
    }
    let half_dim = (rs.dim() as f64 + 2.0 * rs.gamma()) / 2.0;
    let mut c_fit = f64::INFINITY;
    for i in 0..=24 {
        let eps = 2f64.powf(-8.0 + 12.0 * i as f64 / 24.0);
        let mut c_min = 0.0f64;
        for r in &rows {
            if r.t2 <= 0.0 {
                continue;
            }
            c_min = c_min.max((r.lhs - eps * r.t1) / r.t2);
        }
        c_fit = c_fit.min((1.0 / eps).ln() - c_min / half_dim);
    }
    if !c_fit.is_finite() {
        return Err(LabError::DegenerateBasis("epsilon fit failed".into()));
    }
    Ok(c_fit)
}

/// `C(eps) = (N + 2 gamma)/2 (log(1/eps) - c)`.
pub fn log_sobolev_c_of_epsilon(rs: &RootSystem, eps: f64, c: f64) -> f64 {
    (rs.dim() as f64 + 2.0 * rs.gamma()) / 2.0 * ((1.0 / eps).ln() - c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality_lab::basis::FunctionBasis;
    use crate::quadrature::{GridParams, MeasureSpec, QuadratureGrid};
    use std::sync::Arc;

    fn rank_one_estimator(k: f64, resolution: usize) -> (Arc<RootSystem>, MeasureEstimator) {
        let rs = Arc::new(RootSystem::rank_one(k).unwrap());
        let ms = MeasureSpec::mu_u(rs.clone(), 2.0).unwrap();
        let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(resolution)).unwrap();
        (rs, MeasureEstimator::from_grid(Arc::new(grid)))
    }

    fn standard_suite(dim: usize, degree: u32, combos: usize) -> Vec<(String, TestFunction)> {
        let basis = FunctionBasis::hermite_tensor(dim, degree).with_extremals(dim);
        let mut suite: Vec<(String, TestFunction)> = basis
            .labels
            .iter()
            .cloned()
            .zip(basis.members.iter().cloned())
            .collect();
        for (label, p) in basis.random_unit_combos(combos, 7) {
            suite.push((label, TestFunction::Poly(p)));
        }
        suite
    }

    #[test]
    fn rayleigh_gap_of_gaussian_is_one_half() {
        let (rs, me) = rank_one_estimator(0.0, 16);
        let basis: Vec<Polynomial> = FunctionBasis::hermite_tensor(1, 6)
            .polynomial_members()
            .into_iter()
            .cloned()
            .collect();
        let (lambda, coeffs) =
            estimate_best_constant_rayleigh(&rs, &me, &basis, GradientKind::Dunkl).unwrap();
        assert!((lambda - 0.5).abs() < 1e-6, "lambda {lambda}");
        assert_eq!(coeffs.len(), basis.len());
    }

    #[test]
    fn rayleigh_two_member_basis_is_explicit_quotient() {
        // basis {x, x^2}: restriction still attains Var(x)/E|Tx|^2 at least.
        let (rs, me) = rank_one_estimator(1.0, 16);
        let x = Polynomial::var(1, 0);
        let (lambda, _) =
            estimate_best_constant_rayleigh(&rs, &me, &[x.clone()], GradientKind::Dunkl).unwrap();
        // Var(x) = 1.5, Dirichlet = (1+2k)^2 = 9
        assert!((lambda - 1.5 / 9.0).abs() < 1e-8, "lambda {lambda}");
        let (lambda2, _) = estimate_best_constant_rayleigh(
            &rs,
            &me,
            &[x.clone(), x.pow(2)],
            GradientKind::Dunkl,
        )
        .unwrap();
        assert!(lambda2 >= lambda - 1e-12, "enlarging the basis cannot shrink the bound");
    }

    #[test]
    fn tight_gaussian_log_sobolev_constant_is_one() {
        // Variance-1/2 Gaussian: tight log-Sobolev constant exactly 1,
        // attained by exponential tilts.
        let (rs, me) = rank_one_estimator(0.0, 20);
        let suite = standard_suite(1, 6, 50);
        let rows = family_rows(&TwoTermFamily::log_sobolev(), &rs, &me, &suite).unwrap();
        let (c, label) = fit_tight_constant(&rows).unwrap();
        assert!((c - 1.0).abs() < 0.05, "tight constant {c} from {label}");
    }

    #[test]
    fn two_constant_fit_covers_all_rows() {
        let (rs, me) = rank_one_estimator(1.0, 14);
        let suite = standard_suite(1, 5, 40);
        let rows = family_rows(&TwoTermFamily::log_sobolev(), &rs, &me, &suite).unwrap();
        let (c1, c2, report) = fit_two_constants("log-sobolev", &rows).unwrap();
        assert!(c1 > 0.0 && c2 >= 0.0);
        assert!(!report.violated);
        for r in &rows {
            assert!(
                r.lhs <= c1 * r.t1 + c2 * r.t2 + 1e-9 * (1.0 + r.lhs.abs()),
                "row {} escapes the fit",
                r.label
            );
        }
    }

    #[test]
    fn fitted_constants_do_not_grow_when_suite_shrinks() {
        let (rs, me) = rank_one_estimator(1.0, 14);
        let suite = standard_suite(1, 5, 30);
        let rows = family_rows(&TwoTermFamily::log_sobolev(), &rs, &me, &suite).unwrap();
        let (c1_full, c2_full, _) = fit_two_constants("log-sobolev", &rows).unwrap();
        let (c1_half, c2_half, _) = fit_two_constants("log-sobolev", &rows[..rows.len() / 2]).unwrap();
        assert!(c1_half + c2_half <= c1_full + c2_full + 1e-12);
    }

    #[test]
    fn epsilon_constant_fits_free_log_sobolev() {
        let rs = Arc::new(RootSystem::rank_one(1.0).unwrap());
        let ms = MeasureSpec::mu_k(rs.clone());
        let grid = QuadratureGrid::build(
            &ms,
            &GridParams { resolution: 16, box_half_width: Some(6.0), ..Default::default() },
        )
        .unwrap();
        let me = MeasureEstimator::from_grid(Arc::new(grid));
        let basis = FunctionBasis::hermite_tensor(1, 4).with_radial_bump(5.0);
        let suite: Vec<(String, TestFunction)> = basis
            .labels
            .iter()
            .cloned()
            .zip(basis.members.iter().cloned())
            .collect();
        let c = fit_epsilon_constant(&rs, &me, &suite).unwrap();
        assert!(c.is_finite());
        // With the fitted c, the inequality holds at every grid epsilon.
        let rows = family_rows(&TwoTermFamily::log_sobolev(), &rs, &me, &suite).unwrap();
        for i in 0..=12 {
            let eps = 2f64.powf(-6.0 + 8.0 * i as f64 / 12.0);
            let ce = log_sobolev_c_of_epsilon(&rs, eps, c);
            for r in &rows {
                assert!(
                    r.lhs <= eps * r.t1 + ce * r.t2 + 1e-7 * (1.0 + r.lhs.abs()),
                    "eps {eps}: row {}",
                    r.label
                );
            }
        }
    }

    #[test]
    fn sobolev_quotient_stays_below_classical_ceiling() {
        // k = 0, N = 3, p = 2 -> q = 6; the best constant is the classical
        // Sobolev constant 0.42727 (sharp for the Aubin-Talenti bubbles);
        // polynomial-bump candidates must stay strictly below it.
        let rs = Arc::new(RootSystem::build_type_a(3, 0.0).unwrap());
        let ms = MeasureSpec::mu_k(rs.clone());
        let grid = QuadratureGrid::build(
            &ms,
            &GridParams { resolution: 8, box_half_width: Some(3.2), ..Default::default() },
        )
        .unwrap();
        let me = MeasureEstimator::from_grid(Arc::new(grid));
        let basis = FunctionBasis::hermite_tensor(3, 2).with_radial_bump(3.0);
        let suite: Vec<(String, TestFunction)> = basis
            .labels
            .iter()
            .cloned()
            .zip(basis.members.iter().cloned())
            .collect();
        let (ratio, q, label) = sobolev_ratio(&rs, &me, &suite, 2.0).unwrap();
        assert!((q - 6.0).abs() < 1e-12);
        assert!(ratio > 0.0, "positive lower bound");
        assert!(ratio < 0.42727 * 1.02, "ratio {ratio} from {label} exceeds the sharp constant");
    }

    #[test]
    fn sobolev_quotient_is_scale_invariant() {
        // N + 2 gamma = 3 here, so p = 2 < 3 is admissible; f(t x) rescaling
        // leaves the quotient unchanged. Each dilate gets a grid whose box
        // matches its support so all three are resolved equally well.
        let rs = Arc::new(RootSystem::rank_one(1.0).unwrap());
        let base = crate::inequality_lab::basis::bump_multiply(
            &TestFunction::Poly(Polynomial::var(1, 0)),
            2.0,
        );
        let mut ratios = Vec::new();
        for t in [0.5f64, 1.0, 2.0] {
            let ms = MeasureSpec::mu_k(rs.clone());
            let grid = QuadratureGrid::build(
                &ms,
                &GridParams {
                    resolution: 20,
                    box_half_width: Some(2.0 / t * 1.05),
                    ..Default::default()
                },
            )
            .unwrap();
            let me = MeasureEstimator::from_grid(Arc::new(grid));
            let b = base.clone();
            let scaled = crate::dunkl_calc::ScalarField::new(1, move |x| b.eval(&[t * x[0]]))
                .with_gradient({
                    let b = base.clone();
                    move |x| {
                        b.gradient_at(&[t * x[0]])
                            .expect("bump gradient")
                            .iter()
                            .map(|g| t * g)
                            .collect()
                    }
                });
            let suite = vec![("scaled".to_string(), TestFunction::Field(scaled))];
            let (ratio, _, _) = sobolev_ratio(&rs, &me, &suite, 2.0).unwrap();
            ratios.push(ratio);
        }
        for r in &ratios[1..] {
            assert!(
                (r - ratios[0]).abs() < 1e-4 * ratios[0],
                "scaling broke the quotient: {ratios:?}"
            );
        }
    }

    #[test]
    fn rayleigh_rejects_degenerate_basis() {
        let (rs, me) = rank_one_estimator(0.0, 10);
        let x = Polynomial::var(1, 0);
        // duplicated member: the Dirichlet Gram matrix is singular
        let err = estimate_best_constant_rayleigh(
            &rs,
            &me,
            &[x.clone(), x.clone()],
            GradientKind::Dunkl,
        );
        assert!(matches!(err, Err(LabError::DegenerateBasis(_))));
    }

    #[test]
    fn phi_family_fit_is_finite_and_consistent_at_s_one() {
        // At s = 1 the Phi-entropy is dominated by Ent plus the L2 mass, so
        // a two-constant fit must exist with finite constants.
        let (rs, me) = rank_one_estimator(1.0, 14);
        let suite = standard_suite(1, 4, 20);
        let rows = family_rows(&TwoTermFamily::phi_sobolev(1.0), &rs, &me, &suite).unwrap();
        let (c1, c2, report) = fit_two_constants("phi-sobolev", &rows).unwrap();
        assert!(c1.is_finite() && c2.is_finite() && c1 > 0.0);
        assert!(!report.violated);
    }

    #[test]
    fn poincare_bound_stays_below_half_the_tight_constant() {
        // Classical ordering: the spectral-gap estimate never exceeds half
        // the tight log-Sobolev constant (compared as numeric estimates).
        for k in [0.0f64, 1.0] {
            let (rs, me) = rank_one_estimator(k, 16);
            let basis: Vec<Polynomial> = FunctionBasis::hermite_tensor(1, 6)
                .polynomial_members()
                .into_iter()
                .cloned()
                .collect();
            let (lambda, _) =
                estimate_best_constant_rayleigh(&rs, &me, &basis, GradientKind::Dunkl).unwrap();
            let suite = standard_suite(1, 6, 60);
            let rows = family_rows(&TwoTermFamily::log_sobolev(), &rs, &me, &suite).unwrap();
            let (c_tight, _) = fit_tight_constant(&rows).unwrap();
            assert!(
                lambda <= c_tight / 2.0 + 0.02,
                "k={k}: lambda {lambda} vs C/2 = {}",
                c_tight / 2.0
            );
        }
    }

    #[test]
    fn sobolev_rejects_out_of_range_exponent() {
        let (rs, me) = rank_one_estimator(0.0, 8);
        // N + 2 gamma = 1: no admissible p
        assert!(matches!(
            sobolev_ratio(&rs, &me, &[], 1.0),
            Err(LabError::OutOfRange(_))
        ));
    }
}
