//! Dunkl operators: exact on rational polynomials, numeric on scalar fields.
//!
//! The Dunkl operator attached to a root system with multiplicities `k` is
//!
//! ```text
//! T_i f(x) = d_i f(x) + sum_{a in R_+} k_a a_i (f(x) - f(sigma_a x)) / <a,x>
//! ```
//!
//! On polynomials the difference quotient is an exact polynomial division
//! (the numerator always vanishes on the hyperplane `<a,x> = 0`), so `T_i`
//! maps polynomials to polynomials and every identity can be checked in
//! rational arithmetic. The numeric path works pointwise on any
//! differentiable field, replacing each quotient near its wall by the limit
//! `<a, grad f(x)>`: with `|a|^2 = 2` one has `x - sigma_a x = <a,x> a`, so
//! `f(x) - f(sigma_a x) = <a,x> <a, grad f(x)> + O(<a,x>^2)` and the
//! singularity is removable.

pub mod polynomial;
pub mod scalar_field;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

pub use polynomial::Polynomial;
pub use scalar_field::ScalarField;

use crate::root_system::{RootSystem, RootSystemError};
use crate::vecmath::dot;

#[derive(Debug, Error)]
pub enum DunklError {
    #[error("exact mode unavailable: {0}")]
    ExactnessUnavailable(String),
    #[error("polynomial division left a nonzero remainder")]
    NonzeroRemainder,
    #[error("analytic gradient required and finite differences are disallowed")]
    GradientRequired,
    #[error("operation requires polynomial input")]
    PolynomialRequired,
    #[error("point lies on a reflection hyperplane")]
    OnWall,
    #[error("serialization: {0}")]
    Serialization(String),
    #[error(transparent)]
    RootSystem(#[from] RootSystemError),
}

/// A test function: exact polynomial or black-box scalar field.
#[derive(Clone, Debug)]
pub enum TestFunction {
    Poly(Polynomial),
    Field(ScalarField),
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Poly(p) => p.dim(),
            TestFunction::Field(f) => f.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Poly(p) => p.eval_f64(x),
            TestFunction::Field(f) => f.eval(x),
        }
    }

    pub fn as_poly(&self) -> Option<&Polynomial> {
        match self {
            TestFunction::Poly(p) => Some(p),
            TestFunction::Field(_) => None,
        }
    }

    /// View as a `ScalarField` (polynomials gain exact derivative closures).
    pub fn to_field(&self) -> ScalarField {
        match self {
            TestFunction::Poly(p) => ScalarField::from_polynomial(p),
            TestFunction::Field(f) => f.clone(),
        }
    }
}

/// Exact per-root data needed by the polynomial path.
struct ExactRoot {
    k: BigRational,
    direction: Vec<BigRational>,
    reflection: Vec<Vec<BigRational>>,
}

fn exact_roots(rs: &RootSystem) -> Result<Vec<Option<ExactRoot>>, DunklError> {
    let mut out = Vec::with_capacity(rs.num_positive_roots());
    for idx in 0..rs.num_positive_roots() {
        if rs.multiplicity(idx) == 0.0 {
            out.push(None); // zero multiplicity contributes nothing
            continue;
        }
        let k = rs.multiplicity_exact(idx).cloned().ok_or_else(|| {
            DunklError::ExactnessUnavailable(format!(
                "multiplicity {} of root {idx} has no small rational representation",
                rs.multiplicity(idx)
            ))
        })?;
        let direction = rs.rational_direction(idx).cloned().ok_or_else(|| {
            DunklError::ExactnessUnavailable(format!(
                "root {idx} has no rational direction"
            ))
        })?;
        let reflection = rs
            .rational_reflection(idx)
            .cloned()
            .expect("rational reflection exists whenever the direction does");
        out.push(Some(ExactRoot { k, direction, reflection }));
    }
    Ok(out)
}

/// Exact Dunkl operator `T_i` on a polynomial.
///
/// The difference term is scale-invariant in the root, so it is evaluated
/// with the rational direction `d` parallel to `a`:
/// `a_i / <a,x> = d_i / <d,x>`.
pub fn apply_t_poly(rs: &RootSystem, i: usize, p: &Polynomial) -> Result<Polynomial, DunklError> {
    assert!(i < rs.dim(), "axis index out of range");
    assert_eq!(p.dim(), rs.dim());
    let mut out = p.partial(i);
    for root in exact_roots(rs)?.iter().flatten() {
        if root.direction[i].is_zero() {
            continue;
        }
        let reflected = p.substitute_linear(&root.reflection);
        let quotient = p.sub(&reflected).divide_by_linear(&root.direction)?;
        let coeff = &root.k * &root.direction[i];
        out = out.add(&quotient.scale(&coeff));
    }
    Ok(out)
}

/// Exact Dunkl gradient `(T_1 p, ..., T_N p)`.
pub fn dunkl_gradient_poly(rs: &RootSystem, p: &Polynomial) -> Result<Vec<Polynomial>, DunklError> {
    (0..rs.dim()).map(|i| apply_t_poly(rs, i, p)).collect()
}

/// Exact Dunkl Laplacian by iterating `T_i` twice per axis.
pub fn dunkl_laplacian_poly(rs: &RootSystem, p: &Polynomial) -> Result<Polynomial, DunklError> {
    let mut out = Polynomial::zero(p.dim());
    for i in 0..rs.dim() {
        let ti = apply_t_poly(rs, i, p)?;
        out = out.add(&apply_t_poly(rs, i, &ti)?);
    }
    Ok(out)
}

/// Exact polynomial form of the difference-operator Laplacian
/// `lap f + sum_a 2 k_a [ <grad f, a>/<a,x> - (f - f∘sigma_a)/<a,x>^2 ]`.
///
/// Each bracket is a polynomial: writing `a = c d` for the rational
/// direction `d` (so `c^2 = 2/|d|^2`), one has
/// `f - f∘sigma_a = <d,x> q1` and the bracket equals
/// `(<grad f, d> - q1 |d|^2 / 2) / <d,x>`, whose numerator vanishes on the
/// wall, so the second division is exact as well.
pub fn dunkl_laplacian_formula_poly(
    rs: &RootSystem,
    p: &Polynomial,
) -> Result<Polynomial, DunklError> {
    let dim = p.dim();
    let mut out = Polynomial::zero(dim);
    for i in 0..dim {
        out = out.add(&p.partial(i).partial(i));
    }
    let two = BigRational::from_integer(2.into());
    for root in exact_roots(rs)?.iter().flatten() {
        let reflected = p.substitute_linear(&root.reflection);
        let q1 = p.sub(&reflected).divide_by_linear(&root.direction)?;
        let mut grad_dot = Polynomial::zero(dim);
        for (j, dj) in root.direction.iter().enumerate() {
            if !dj.is_zero() {
                grad_dot = grad_dot.add(&p.partial(j).scale(dj));
            }
        }
        let d_norm_sq: BigRational = root.direction.iter().map(|c| c * c).sum();
        let numerator = grad_dot.sub(&q1.scale(&(d_norm_sq / &two)));
        let q2 = numerator.divide_by_linear(&root.direction)?;
        out = out.add(&q2.scale(&(&two * &root.k)));
    }
    Ok(out)
}

/// Difference quotients `(f(x) - f(sigma_a x)) / <a,x>` for every positive
/// root, with the wall limit `<a, grad f(x)>` where `x` sits on the wall.
fn difference_quotients(
    rs: &RootSystem,
    f: &ScalarField,
    x: &[f64],
    fx: f64,
    grad: &mut Option<Vec<f64>>,
) -> Result<Vec<f64>, DunklError> {
    let mut out = Vec::with_capacity(rs.num_positive_roots());
    for idx in 0..rs.num_positive_roots() {
        if rs.multiplicity(idx) == 0.0 {
            out.push(0.0);
            continue;
        }
        if rs.on_wall(idx, x) {
            if grad.is_none() {
                *grad = Some(f.gradient_at(x)?);
            }
            let g = grad.as_ref().expect("just set");
            out.push(dot(&rs.positive_roots()[idx], g));
        } else {
            let ip = rs.inner_with_root(idx, x);
            let reflected = rs.reflect_by_index(idx, x);
            out.push((fx - f.eval(&reflected)) / ip);
        }
    }
    Ok(out)
}

/// Numeric Dunkl operator `T_i f(x)` on a scalar field.
pub fn apply_t_numeric(
    rs: &RootSystem,
    i: usize,
    f: &ScalarField,
    x: &[f64],
) -> Result<f64, DunklError> {
    Ok(dunkl_gradient_at(rs, &TestFunction::Field(f.clone()), x)?[i])
}

/// Dunkl gradient at a point; exact polynomial derivatives are used when the
/// input is a polynomial, the removable-singularity limit near walls
/// otherwise.
pub fn dunkl_gradient_at(
    rs: &RootSystem,
    f: &TestFunction,
    x: &[f64],
) -> Result<Vec<f64>, DunklError> {
    let field = f.to_field();
    let fx = field.eval(x);
    let mut grad_cache = Some(field.gradient_at(x)?);
    let quotients = difference_quotients(rs, &field, x, fx, &mut grad_cache)?;
    let grad = grad_cache.expect("gradient computed above");
    let mut out = grad;
    for (idx, q) in quotients.iter().enumerate() {
        let k = rs.multiplicity(idx);
        if k == 0.0 {
            continue;
        }
        let alpha = &rs.positive_roots()[idx];
        for (o, ai) in out.iter_mut().zip(alpha) {
            *o += k * ai * q;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianMethod {
    /// Iterate the exact operator: `sum_i T_i(T_i p)`. Polynomials only.
    SumOfSquares,
    /// Difference-operator form in terms of the classical gradient and
    /// Laplacian; requires second derivatives and an off-wall point.
    Formula,
}

/// Dunkl Laplacian of `f` at `x`.
///
/// `Formula` evaluates
/// `lap f + 2 sum_a k_a [ <grad f, a>/<a,x> - (f(x) - f(sigma_a x))/<a,x>^2 ]`.
pub fn dunkl_laplacian(
    rs: &RootSystem,
    f: &TestFunction,
    x: &[f64],
    method: LaplacianMethod,
) -> Result<f64, DunklError> {
    match method {
        LaplacianMethod::SumOfSquares => {
            let p = f.as_poly().ok_or(DunklError::PolynomialRequired)?;
            Ok(dunkl_laplacian_poly(rs, p)?.eval_f64(x))
        }
        LaplacianMethod::Formula => {
            let field = f.to_field();
            let mut out = field.laplacian_at(x)?;
            let grad = field.gradient_at(x)?;
            let fx = field.eval(x);
            for idx in 0..rs.num_positive_roots() {
                let k = rs.multiplicity(idx);
                if k == 0.0 {
                    continue;
                }
                if rs.on_wall(idx, x) {
                    return Err(DunklError::OnWall);
                }
                let alpha = &rs.positive_roots()[idx];
                let ip = rs.inner_with_root(idx, x);
                let reflected = rs.reflect_by_index(idx, x);
                out += 2.0 * k * (dot(&grad, alpha) / ip - (fx - field.eval(&reflected)) / (ip * ip));
            }
            Ok(out)
        }
    }
}

/// Exact right-hand side of the generalised Leibniz rule:
/// `T_i f * g + f * T_i g - sum_a k_a a_i (f - f∘sigma_a)(g - g∘sigma_a) / <a,x>`.
pub fn leibniz_rhs_poly(
    rs: &RootSystem,
    i: usize,
    f: &Polynomial,
    g: &Polynomial,
) -> Result<Polynomial, DunklError> {
    let tf = apply_t_poly(rs, i, f)?;
    let tg = apply_t_poly(rs, i, g)?;
    let mut out = tf.mul(g).add(&f.mul(&tg));
    for root in exact_roots(rs)?.iter().flatten() {
        if root.direction[i].is_zero() {
            continue;
        }
        let df = f.sub(&f.substitute_linear(&root.reflection));
        let dg = g.sub(&g.substitute_linear(&root.reflection));
        // Each factor vanishes on the wall, so dividing the product once is exact.
        let quotient = df.mul(&dg).divide_by_linear(&root.direction)?;
        let coeff = &root.k * &root.direction[i];
        out = out.sub(&quotient.scale(&coeff));
    }
    Ok(out)
}

/// Numeric Leibniz right-hand side at a point. Near a wall the cross term
/// vanishes (both differences are `O(<a,x>)`, so the quotient is
/// `O(<a,x>)` itself) and is replaced by its limit 0.
pub fn leibniz_rhs_numeric(
    rs: &RootSystem,
    i: usize,
    f: &ScalarField,
    g: &ScalarField,
    x: &[f64],
) -> Result<f64, DunklError> {
    let tf = apply_t_numeric(rs, i, f, x)?;
    let tg = apply_t_numeric(rs, i, g, x)?;
    let mut out = tf * g.eval(x) + f.eval(x) * tg;
    for idx in 0..rs.num_positive_roots() {
        let k = rs.multiplicity(idx);
        if k == 0.0 || rs.on_wall(idx, x) {
            continue;
        }
        let alpha = &rs.positive_roots()[idx];
        if alpha[i] == 0.0 {
            continue;
        }
        let ip = rs.inner_with_root(idx, x);
        let reflected = rs.reflect_by_index(idx, x);
        let df = f.eval(x) - f.eval(&reflected);
        let dg = g.eval(x) - g.eval(&reflected);
        out -= k * alpha[i] * df * dg / ip;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    pub(crate) fn random_poly(
        rng: &mut impl Rng,
        dim: usize,
        max_degree: u32,
        n_terms: usize,
    ) -> Polynomial {
        let mut p = Polynomial::zero(dim);
        for _ in 0..n_terms {
            let mut exps = vec![0u32; dim];
            let mut remaining = max_degree;
            for e in exps.iter_mut() {
                let d = rng.gen_range(0..=remaining);
                *e = d;
                remaining -= d;
            }
            let c = rat(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=4));
            p = p.add(&Polynomial::monomial(dim, exps, c));
        }
        p
    }

    #[test]
    fn rank_one_operator_on_coordinates() {
        // T(x) = 1 + 2k, T(x^2) = 2x.
        let rs = RootSystem::rank_one(0.75).unwrap();
        let x = Polynomial::var(1, 0);
        let tx = apply_t_poly(&rs, 0, &x).unwrap();
        assert_eq!(tx, Polynomial::constant(1, rat(5, 2))); // 1 + 2*(3/4)
        let tx2 = apply_t_poly(&rs, 0, &x.mul(&x)).unwrap();
        assert_eq!(tx2, x.scale(&rat(2, 1)));
    }

    #[test]
    fn zero_multiplicity_reduces_to_partial_derivative() {
        let rs = RootSystem::build_type_a(3, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..5 {
            let p = random_poly(&mut rng, 3, 4, 6);
            for i in 0..3 {
                assert_eq!(apply_t_poly(&rs, i, &p).unwrap(), p.partial(i));
            }
        }
    }

    #[test]
    fn exactness_unavailable_for_irrational_multiplicity() {
        // pi/4 admits no small-denominator rational representation.
        let rs = RootSystem::rank_one(std::f64::consts::FRAC_PI_4).unwrap();
        let p = Polynomial::var(1, 0);
        assert!(matches!(
            apply_t_poly(&rs, 0, &p),
            Err(DunklError::ExactnessUnavailable(_))
        ));
        // the numeric path still works
        let v = apply_t_numeric(&rs, 0, &ScalarField::from_polynomial(&p), &[0.7]).unwrap();
        assert!((v - (1.0 + 2.0 * std::f64::consts::FRAC_PI_4)).abs() < 1e-10);
    }

    #[test]
    fn numeric_matches_exact_on_polynomials() {
        let rs = RootSystem::build_type_b(2, 0.5, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = random_poly(&mut rng, 2, 5, 6);
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if !rs.off_all_walls(&x) {
                continue;
            }
            let f = TestFunction::Poly(p.clone());
            let numeric = dunkl_gradient_at(&rs, &f, &x).unwrap();
            for i in 0..2 {
                let exact = apply_t_poly(&rs, i, &p).unwrap().eval_f64(&x);
                assert!(
                    (numeric[i] - exact).abs() < 1e-8 * (1.0 + exact.abs()),
                    "axis {i}: numeric {} vs exact {}",
                    numeric[i],
                    exact
                );
            }
        }
    }

    #[test]
    fn rank_one_numeric_square() {
        let rs = RootSystem::rank_one(1.0).unwrap();
        let f = ScalarField::new(1, |x| x[0] * x[0]);
        let t = apply_t_numeric(&rs, 0, &f, &[0.5]).unwrap();
        assert!((t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invariant_field_has_classical_gradient() {
        // For G-invariant f the difference terms vanish identically.
        let rs = RootSystem::build_type_a(3, 2.0).unwrap();
        let f = TestFunction::Poly(Polynomial::norm_squared(3));
        let x = [1.0, 0.3, -0.8];
        let g = dunkl_gradient_at(&rs, &f, &x).unwrap();
        for i in 0..3 {
            assert!((g[i] - 2.0 * x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn wall_limit_agrees_with_exact_path() {
        // x on the wall x1 = x2 of A_2: the numeric operator takes the limit
        // branch and must agree with the exact polynomial value there.
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        let p = Polynomial::monomial(3, vec![2, 1, 0], rat(1, 1));
        let x = [1.5, 1.5, -0.4];
        let f = TestFunction::Poly(p.clone());
        let numeric = dunkl_gradient_at(&rs, &f, &x).unwrap();
        for i in 0..3 {
            let exact = apply_t_poly(&rs, i, &p).unwrap().eval_f64(&x);
            assert!((numeric[i] - exact).abs() < 1e-9, "axis {i}");
        }
    }

    #[test]
    fn rank_one_wall_limit_cubic() {
        let rs = RootSystem::rank_one(2.0).unwrap();
        let p = Polynomial::monomial(1, vec![3], rat(1, 1));
        let exact = apply_t_poly(&rs, 0, &p).unwrap();
        let numeric =
            apply_t_numeric(&rs, 0, &ScalarField::from_polynomial(&p), &[0.0]).unwrap();
        assert!((numeric - exact.eval_f64(&[0.0])).abs() < 1e-12);
    }

    #[test]
    fn laplacian_two_ways_and_closed_forms() {
        // rank-1: T(T(x^2)) = 2(1 + 2k)
        let k = 1.25;
        let rs = RootSystem::rank_one(k).unwrap();
        let p = Polynomial::var(1, 0).pow(2);
        let lap = dunkl_laplacian_poly(&rs, &p).unwrap();
        // 2 + 4k with k = 5/4
        assert_eq!(lap, Polynomial::constant(1, rat(7, 1)));
        let x = [0.7];
        let by_formula =
            dunkl_laplacian(&rs, &TestFunction::Poly(p.clone()), &x, LaplacianMethod::Formula)
                .unwrap();
        let by_squares =
            dunkl_laplacian(&rs, &TestFunction::Poly(p), &x, LaplacianMethod::SumOfSquares)
                .unwrap();
        assert!((by_formula - by_squares).abs() < 1e-8);
        assert!((by_squares - (2.0 + 4.0 * k)).abs() < 1e-12);
    }

    #[test]
    fn exact_laplacian_routes_agree_on_random_polynomials() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for rs in [
            RootSystem::build_type_a(3, 1.0).unwrap(),
            RootSystem::build_type_b(2, 0.5, 1.5).unwrap(),
        ] {
            for _ in 0..10 {
                let p = random_poly(&mut rng, rs.dim(), 5, 6);
                let a = dunkl_laplacian_poly(&rs, &p).unwrap();
                let b = dunkl_laplacian_formula_poly(&rs, &p).unwrap();
                assert!(a.sub(&b).is_zero(), "Laplacian routes must agree exactly");
            }
        }
    }

    #[test]
    fn laplacian_of_norm_matches_closed_form() {
        // Delta_k |x| = (N + 2 gamma - 1)/|x| away from the walls.
        for rs in [
            RootSystem::build_type_a(3, 1.0).unwrap(),
            RootSystem::build_type_b(2, 1.0, 1.0).unwrap(),
        ] {
            let f = TestFunction::Field(ScalarField::norm_field(rs.dim()));
            let mut rng = ChaCha12Rng::seed_from_u64(9);
            for _ in 0..50 {
                let x: Vec<f64> =
                    (0..rs.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                if !rs.off_all_walls(&x) {
                    continue;
                }
                let expected = (rs.dim() as f64 + 2.0 * rs.gamma() - 1.0) / crate::vecmath::norm(&x);
                let got = dunkl_laplacian(&rs, &f, &x, LaplacianMethod::Formula).unwrap();
                assert!(
                    (got - expected).abs() < 1e-8 * expected.abs(),
                    "got {got}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn classical_laplacian_recovered_at_k_zero() {
        let rs = RootSystem::build_type_a(3, 0.0).unwrap();
        let p = Polynomial::norm_squared(3);
        let lap = dunkl_laplacian(
            &rs,
            &TestFunction::Poly(p),
            &[0.4, 0.1, -0.2],
            LaplacianMethod::SumOfSquares,
        )
        .unwrap();
        assert!((lap - 6.0).abs() < 1e-12);
    }

    #[test]
    fn formula_mode_rejects_wall_points() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        let f = TestFunction::Poly(Polynomial::norm_squared(3));
        let err = dunkl_laplacian(&rs, &f, &[1.0, 1.0, 0.0], LaplacianMethod::Formula);
        assert!(matches!(err, Err(DunklError::OnWall)));
    }

    #[test]
    fn sum_of_squares_requires_polynomial() {
        let rs = RootSystem::rank_one(1.0).unwrap();
        let f = TestFunction::Field(ScalarField::new(1, |x| x[0].cos()));
        assert!(matches!(
            dunkl_laplacian(&rs, &f, &[0.1], LaplacianMethod::SumOfSquares),
            Err(DunklError::PolynomialRequired)
        ));
    }

    #[test]
    fn leibniz_identity_exact_on_random_pairs() {
        let systems = [
            RootSystem::build_type_a(3, 1.0).unwrap(),
            RootSystem::build_type_b(2, 0.5, 2.0).unwrap(),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for rs in &systems {
            for _ in 0..10 {
                let f = random_poly(&mut rng, rs.dim(), 3, 4);
                let g = random_poly(&mut rng, rs.dim(), 3, 4);
                for i in 0..rs.dim() {
                    let lhs = apply_t_poly(rs, i, &f.mul(&g)).unwrap();
                    let rhs = leibniz_rhs_poly(rs, i, &f, &g).unwrap();
                    assert!(lhs.sub(&rhs).is_zero(), "Leibniz identity must be exact");
                }
            }
        }
    }

    #[test]
    fn leibniz_rank_one_square() {
        // f = g = x: rhs must equal T(x^2) = 2x, the correction cancelling
        // the naive product-rule excess.
        let rs = RootSystem::rank_one(1.0).unwrap();
        let x = Polynomial::var(1, 0);
        let rhs = leibniz_rhs_poly(&rs, 0, &x, &x).unwrap();
        assert_eq!(rhs, x.scale(&rat(2, 1)));
    }

    #[test]
    fn leibniz_reduces_to_product_rule_for_invariant_factor() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        let f = Polynomial::norm_squared(3); // G-invariant
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let g = random_poly(&mut rng, 3, 3, 4);
        for i in 0..3 {
            let tf = apply_t_poly(&rs, i, &f).unwrap();
            let tg = apply_t_poly(&rs, i, &g).unwrap();
            let two_term = tf.mul(&g).add(&f.mul(&tg));
            let rhs = leibniz_rhs_poly(&rs, i, &f, &g).unwrap();
            assert!(rhs.sub(&two_term).is_zero());
        }
    }

    #[test]
    fn classical_product_rule_at_k_zero() {
        let rs = RootSystem::build_type_a(3, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let f = random_poly(&mut rng, 3, 3, 4);
        let g = random_poly(&mut rng, 3, 3, 4);
        for i in 0..3 {
            let lhs = apply_t_poly(&rs, i, &f.mul(&g)).unwrap();
            let rhs = f.partial(i).mul(&g).add(&f.mul(&g.partial(i)));
            assert!(lhs.sub(&rhs).is_zero());
        }
    }

    #[test]
    fn operators_commute_on_low_degree_monomials() {
        for rs in [
            RootSystem::build_type_a(3, 1.0).unwrap(),
            RootSystem::build_type_b(2, 0.5, 1.5).unwrap(),
        ] {
            let dim = rs.dim();
            let mut exps_list = Vec::new();
            // all monomials of total degree <= 5
            fn gen(dim: usize, deg: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
                if prefix.len() == dim {
                    out.push(prefix.clone());
                    return;
                }
                for d in 0..=deg {
                    prefix.push(d);
                    gen(dim, deg - d, prefix, out);
                    prefix.pop();
                }
            }
            gen(dim, 5, &mut Vec::new(), &mut exps_list);
            for exps in exps_list {
                let p = Polynomial::monomial(dim, exps, rat(1, 1));
                for i in 0..dim {
                    for j in (i + 1)..dim {
                        let tij = apply_t_poly(&rs, i, &apply_t_poly(&rs, j, &p).unwrap()).unwrap();
                        let tji = apply_t_poly(&rs, j, &apply_t_poly(&rs, i, &p).unwrap()).unwrap();
                        assert!(tij.sub(&tji).is_zero(), "T_i T_j must commute");
                    }
                }
            }
        }
    }

    #[test]
    fn degree_drops_by_one_on_homogeneous_input() {
        let rs = RootSystem::build_type_b(2, 1.0, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for deg in 1..=5u32 {
            // random homogeneous polynomial of the given degree
            let mut p = Polynomial::zero(2);
            for _ in 0..4 {
                let a = rng.gen_range(0..=deg);
                let c = rat(rng.gen_range(-5i64..=5), 1);
                p = p.add(&Polynomial::monomial(2, vec![a, deg - a], c));
            }
            if p.is_zero() {
                continue;
            }
            for i in 0..2 {
                let tp = apply_t_poly(&rs, i, &p).unwrap();
                if !tp.is_zero() {
                    assert_eq!(tp.degree(), deg - 1);
                }
            }
        }
    }
}
