//! Test-function suites: tensor Hermite polynomials, known extremals
//! (coordinates, `|x|^2`, exponential tilts), radial-bump truncations for
//! compactly supported checks, random unit-norm combinations, and exact
//! group symmetrisation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::dunkl_calc::polynomial::rational_from_f64;
use crate::dunkl_calc::{Polynomial, ScalarField, TestFunction};
use crate::root_system::RootSystem;
use crate::vecmath::{dot, norm, norm_sq};

use super::{LabError, MeasureEstimator};

/// A labelled test-function collection.
#[derive(Clone, Debug)]
pub struct FunctionBasis {
    pub members: Vec<TestFunction>,
    pub labels: Vec<String>,
    pub g_invariant_only: bool,
}

/// Probabilists' Hermite polynomial `He_n` as an exact univariate
/// coefficient list (index = power), via `He_{n+1} = x He_n - n He_{n-1}`.
fn hermite_coeffs(n: u32) -> Vec<BigRational> {
    let mut prev = vec![BigRational::one()];
    if n == 0 {
        return prev;
    }
    let mut curr = vec![BigRational::zero(), BigRational::one()];
    for m in 1..n {
        let mut next = vec![BigRational::zero(); m as usize + 2];
        for (i, c) in curr.iter().enumerate() {
            next[i + 1] += c;
        }
        let m_rat = BigRational::from_integer(BigInt::from(m));
        for (i, c) in prev.iter().enumerate() {
            next[i] -= &m_rat * c;
        }
        prev = curr;
        curr = next;
    }
    curr
}

fn hermite_poly(dim: usize, axis: usize, n: u32) -> Polynomial {
    let coeffs = hermite_coeffs(n);
    let mut p = Polynomial::zero(dim);
    for (power, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut exps = vec![0u32; dim];
        exps[axis] = power as u32;
        p = p.add(&Polynomial::monomial(dim, exps, c.clone()));
    }
    p
}

impl FunctionBasis {
    /// Tensor products `prod_i He_{b_i}(x_i)` over all multi-indices with
    /// total degree between 1 and `max_degree` (the constant is excluded).
    pub fn hermite_tensor(dim: usize, max_degree: u32) -> Self {
        let mut members = Vec::new();
        let mut labels = Vec::new();
        let mut indices = Vec::new();
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
        rec(dim, 0, max_degree, &mut vec![0u32; dim], &mut indices);
        indices.sort();
        for beta in indices {
            let total: u32 = beta.iter().sum();
            if total == 0 {
                continue;
            }
            let mut p = Polynomial::one(dim);
            for (axis, &b) in beta.iter().enumerate() {
                if b > 0 {
                    p = p.mul(&hermite_poly(dim, axis, b));
                }
            }
            members.push(TestFunction::Poly(p));
            labels.push(format!("hermite{beta:?}"));
        }
        FunctionBasis { members, labels, g_invariant_only: false }
    }

    /// Append the known extremal candidates: `|x|^2` and exponential tilts
    /// `exp(a u.x)` along the first axis and the diagonal.
    pub fn with_extremals(mut self, dim: usize) -> Self {
        self.members.push(TestFunction::Poly(Polynomial::norm_squared(dim)));
        self.labels.push("norm-squared".into());
        let mut directions = vec![(String::from("e1"), {
            let mut u = vec![0.0; dim];
            u[0] = 1.0;
            u
        })];
        if dim > 1 {
            let d = (dim as f64).sqrt();
            directions.push(("diagonal".into(), vec![1.0 / d; dim]));
        }
        for (dname, u) in directions {
            for a in [0.5f64, 1.0] {
                let u = u.clone();
                let grad_u = u.clone();
                self.members.push(TestFunction::Field(
                    ScalarField::new(dim, move |x| (a * dot(&u, x)).exp()).with_gradient(
                        move |x| {
                            let v = (a * dot(&grad_u, x)).exp();
                            grad_u.iter().map(|ui| a * ui * v).collect()
                        },
                    ),
                ));
                self.labels.push(format!("tilt({a},{dname})"));
            }
        }
        self
    }

    /// Only the polynomial members (the linear span random combos draw from).
    pub fn polynomial_members(&self) -> Vec<&Polynomial> {
        self.members
            .iter()
            .filter_map(|m| match m {
                TestFunction::Poly(p) => Some(p),
                _ => None,
            })
            .collect()
    }

    /// Random unit-norm coefficient combinations of the polynomial members.
    pub fn random_unit_combos(&self, count: usize, seed: u64) -> Vec<(String, Polynomial)> {
        let polys = self.polynomial_members();
        if polys.is_empty() {
            return Vec::new();
        }
        let dim = polys[0].dim();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let normal = rand_distr::StandardNormal;
        (0..count)
            .map(|i| {
                let raw: Vec<f64> =
                    (0..polys.len()).map(|_| rng.sample::<f64, _>(normal)).collect();
                let scale = norm(&raw).max(1e-12);
                let mut combo = Polynomial::zero(dim);
                for (c, p) in raw.iter().zip(&polys) {
                    let coeff = rational_from_f64(c / scale).expect("finite coefficient");
                    combo = combo.add(&p.scale(&coeff));
                }
                (format!("combo{i}"), combo)
            })
            .collect()
    }

    /// Replace every polynomial member by its average over the reflection
    /// group (exact, using the rational group matrices). Non-polynomial
    /// members are dropped.
    pub fn symmetrized(&self, rs: &RootSystem) -> Result<FunctionBasis, LabError> {
        let mats = rs
            .rational_group_matrices()?
            .ok_or_else(|| LabError::DegenerateBasis(
                "group symmetrisation requires rational reflection matrices".into(),
            ))?;
        let order = BigRational::from_integer(BigInt::from(mats.len() as i64));
        let mut members = Vec::new();
        let mut labels = Vec::new();
        for (m, label) in self.members.iter().zip(&self.labels) {
            if let TestFunction::Poly(p) = m {
                let mut sum = Polynomial::zero(p.dim());
                for g in &mats {
                    sum = sum.add(&p.substitute_linear(g));
                }
                let avg = sum.scale(&(BigRational::one() / &order));
                if !avg.is_zero() {
                    members.push(TestFunction::Poly(avg));
                    labels.push(format!("sym({label})"));
                }
            }
        }
        Ok(FunctionBasis { members, labels, g_invariant_only: true })
    }

    /// Multiply every member by the smooth radial bump supported on the ball
    /// of the given radius (value 1 at the origin). The products carry
    /// analytic gradients assembled by the product rule; the bump is radial,
    /// hence G-invariant, so Dunkl and classical Leibniz rules both apply.
    pub fn with_radial_bump(&self, radius: f64) -> FunctionBasis {
        let members = self
            .members
            .iter()
            .map(|m| TestFunction::Field(bump_multiply(m, radius)))
            .collect();
        FunctionBasis {
            members,
            labels: self.labels.iter().map(|l| format!("{l}*bump({radius})")).collect(),
            g_invariant_only: self.g_invariant_only,
        }
    }

    /// Condition number of the Gram matrix of the polynomial members.
    pub fn gram_condition(&self, me: &MeasureEstimator) -> Result<f64, LabError> {
        let polys = self.polynomial_members();
        if polys.len() < 2 {
            return Ok(1.0);
        }
        let n = polys.len();
        let mut gram = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let (v, _) = me.expect_poly(&polys[i].mul(polys[j]))?;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(gram);
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        if min <= 0.0 {
            return Err(LabError::DegenerateBasis(format!(
                "Gram matrix not positive definite (min eigenvalue {min})"
            )));
        }
        Ok(max / min)
    }
}

/// Smooth bump `psi(x) = exp(1 - 1/(1 - (|x|/R)^2))` on `|x| < R`, zero
/// outside; `psi(0) = 1`.
pub fn radial_bump_value(x: &[f64], radius: f64) -> f64 {
    let t = norm_sq(x) / (radius * radius);
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t)).exp()
    }
}

/// Gradient of the bump: `psi'(x) = psi(x) * (-2 x / R^2) / (1 - t)^2`.
pub fn radial_bump_gradient(x: &[f64], radius: f64) -> Vec<f64> {
    let r2 = radius * radius;
    let t = norm_sq(x) / r2;
    if t >= 1.0 {
        return vec![0.0; x.len()];
    }
    let psi = (1.0 - 1.0 / (1.0 - t)).exp();
    let factor = -2.0 / (r2 * (1.0 - t) * (1.0 - t)) * psi;
    x.iter().map(|xi| xi * factor).collect()
}

/// `f * bump` with the product-rule gradient.
pub fn bump_multiply(f: &TestFunction, radius: f64) -> ScalarField {
    let field = f.to_field();
    let dim = field.dim();
    let invariant = match f {
        TestFunction::Field(sf) => sf.g_invariant,
        TestFunction::Poly(_) => false,
    };
    let eval_field = field.clone();
    let grad_field = field.clone();
    ScalarField::new(dim, move |x| eval_field.eval(x) * radial_bump_value(x, radius))
        .with_gradient(move |x| {
            let psi = radial_bump_value(x, radius);
            if psi == 0.0 {
                return vec![0.0; x.len()];
            }
            let fv = grad_field.eval(x);
            let fg = grad_field.gradient_at(x).expect("bump factors carry gradients");
            let pg = radial_bump_gradient(x, radius);
            fg.iter().zip(&pg).map(|(df, dp)| df * psi + fv * dp).collect()
        })
        .invariant(invariant)
}
