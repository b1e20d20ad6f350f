//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by the exponent multi-index, so the
//! representation is canonical (no zero coefficients, deterministic order)
//! and all arithmetic is exact. This is the test-function class closed under
//! the Dunkl operators: differentiation, composition with rational linear
//! maps, and division by linear forms all stay inside it.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dunkl_calc::DunklError;

/// Exact multivariate polynomial over the rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(exps, c)| {
                let mono: Vec<String> = exps
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| if e == 1 { format!("x{}", i) } else { format!("x{}^{}", i, e) })
                    .collect();
                if mono.is_empty() {
                    format!("{}", c)
                } else {
                    format!("{}*{}", c, mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        let mut p = Self::zero(dim);
        if !c.is_zero() {
            p.terms.insert(vec![0; dim], c);
        }
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, BigRational::one())
    }

    /// The coordinate function `x_i`.
    pub fn var(dim: usize, i: usize) -> Self {
        assert!(i < dim, "variable index out of range");
        let mut exps = vec![0u32; dim];
        exps[i] = 1;
        Self::monomial(dim, exps, BigRational::one())
    }

    pub fn monomial(dim: usize, exps: Vec<u32>, coeff: BigRational) -> Self {
        assert_eq!(exps.len(), dim);
        let mut p = Self::zero(dim);
        if !coeff.is_zero() {
            p.terms.insert(exps, coeff);
        }
        p
    }

    /// `|x|^2` as a polynomial.
    pub fn norm_squared(dim: usize) -> Self {
        let mut p = Self::zero(dim);
        for i in 0..dim {
            let mut exps = vec![0u32; dim];
            exps[i] = 2;
            p.add_term(exps, BigRational::one());
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; zero polynomial reports degree 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, exps: Vec<u32>, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> Polynomial {
        if s.is_zero() {
            return Self::zero(self.dim);
        }
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Self::one(self.dim);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Exact partial derivative with respect to `x_i`.
    pub fn partial(&self, i: usize) -> Polynomial {
        assert!(i < self.dim);
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[i] -= 1;
            let factor = BigRational::from_integer(BigInt::from(e[i]));
            out.add_term(exps, c * factor);
        }
        out
    }

    /// Substitute `x_i -> sum_j m[i][j] x_j`, i.e. compose with the linear
    /// map whose rows are `m`. Used for the reflection action `p(sigma x)`.
    pub fn substitute_linear(&self, m: &[Vec<BigRational>]) -> Polynomial {
        assert_eq!(m.len(), self.dim);
        // Precompute powers of each substituted coordinate up to its largest
        // exponent in this polynomial.
        let mut max_exp = vec![0u32; self.dim];
        for e in self.terms.keys() {
            for i in 0..self.dim {
                max_exp[i] = max_exp[i].max(e[i]);
            }
        }
        let mut powers: Vec<Vec<Polynomial>> = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut row = Polynomial::zero(self.dim);
            for (j, mij) in m[i].iter().enumerate() {
                if !mij.is_zero() {
                    let mut exps = vec![0u32; self.dim];
                    exps[j] = 1;
                    row.add_term(exps, mij.clone());
                }
            }
            let mut pw = vec![Polynomial::one(self.dim)];
            for e in 1..=max_exp[i] {
                let next = pw[(e - 1) as usize].mul(&row);
                pw.push(next);
            }
            powers.push(pw);
        }
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(self.dim, c.clone());
            for i in 0..self.dim {
                if e[i] > 0 {
                    term = term.mul(&powers[i][e[i] as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Exact division by the linear form `l(x) = sum_j d_j x_j`.
    ///
    /// Returns the quotient; errors if the remainder is nonzero. The
    /// difference `p - p∘sigma_a` is always divisible by `<a,x>`, and this
    /// routine is how that quotient is extracted in the Dunkl operator.
    pub fn divide_by_linear(&self, d: &[BigRational]) -> Result<Polynomial, DunklError> {
        assert_eq!(d.len(), self.dim);
        let pivot = d
            .iter()
            .position(|c| !c.is_zero())
            .expect("divisor must be a nonzero linear form");
        // Long division in x_pivot, treating the other variables as scalars:
        // group p by the power of x_pivot, then peel off the leading power.
        let mut by_power: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (e, c) in &self.terms {
            let k = e[pivot];
            let mut rest = e.clone();
            rest[pivot] = 0;
            by_power
                .entry(k)
                .or_insert_with(|| Polynomial::zero(self.dim))
                .add_term(rest, c.clone());
        }
        let max_pow = *by_power.keys().next_back().unwrap_or(&0);
        // Remainder of the divisor: r(x) = l(x) - d_pivot * x_pivot.
        let mut r = Polynomial::zero(self.dim);
        for (j, dj) in d.iter().enumerate() {
            if j != pivot && !dj.is_zero() {
                let mut exps = vec![0u32; self.dim];
                exps[j] = 1;
                r.add_term(exps, dj.clone());
            }
        }
        let inv_pivot = BigRational::one() / d[pivot].clone();
        let mut quotient = Polynomial::zero(self.dim);
        let mut carry: BTreeMap<u32, Polynomial> = by_power;
        let mut k = max_pow;
        while k >= 1 {
            let ck = carry.remove(&k).unwrap_or_else(|| Polynomial::zero(self.dim));
            if !ck.is_zero() {
                // q_{k-1} = c_k / d_pivot, contributing q_{k-1} x_pivot^{k-1}.
                let qk = ck.scale(&inv_pivot);
                let mut shifted = Polynomial::zero(self.dim);
                for (e, c) in &qk.terms {
                    let mut exps = e.clone();
                    exps[pivot] += k - 1;
                    shifted.add_term(exps, c.clone());
                }
                quotient = quotient.add(&shifted);
                // c_{k-1} <- c_{k-1} - q_{k-1} * r
                let correction = qk.mul(&r);
                let entry = carry.entry(k - 1).or_insert_with(|| Polynomial::zero(self.dim));
                *entry = entry.sub(&correction);
            }
            k -= 1;
        }
        let remainder = carry.remove(&0).unwrap_or_else(|| Polynomial::zero(self.dim));
        if !remainder.is_zero() {
            return Err(DunklError::NonzeroRemainder);
        }
        Ok(quotient)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (i, &ei) in e.iter().enumerate() {
                for _ in 0..ei {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Coefficient-as-f64 form for hot evaluation loops.
    pub fn compiled(&self) -> CompiledPoly {
        CompiledPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), rational_to_f64(c)))
                .collect(),
        }
    }

    /// Exact evaluation at a rational point.
    pub fn eval_rational(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.dim);
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &ei) in e.iter().enumerate() {
                for _ in 0..ei {
                    t *= &x[i];
                }
            }
            acc += t;
        }
        acc
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<PolyTermJson> = self
            .terms
            .iter()
            .map(|(e, c)| PolyTermJson {
                exponents: e.clone(),
                numerator: c.numer().to_string(),
                denominator: c.denom().to_string(),
            })
            .collect();
        serde_json::to_value(terms).expect("polynomial term serialization")
    }

    pub fn from_json(dim: usize, value: &serde_json::Value) -> Result<Self, DunklError> {
        let terms: Vec<PolyTermJson> = serde_json::from_value(value.clone())
            .map_err(|e| DunklError::Serialization(e.to_string()))?;
        let mut p = Self::zero(dim);
        for t in terms {
            if t.exponents.len() != dim {
                return Err(DunklError::Serialization(format!(
                    "term has {} exponents, expected {}",
                    t.exponents.len(),
                    dim
                )));
            }
            let numer: BigInt = t
                .numerator
                .parse()
                .map_err(|_| DunklError::Serialization("bad numerator".into()))?;
            let denom: BigInt = t
                .denominator
                .parse()
                .map_err(|_| DunklError::Serialization("bad denominator".into()))?;
            if denom.is_zero() {
                return Err(DunklError::Serialization("zero denominator".into()));
            }
            p.add_term(t.exponents, BigRational::new(numer, denom));
        }
        Ok(p)
    }
}

/// One serialized polynomial term. Numerator and denominator are decimal
/// strings so that arbitrary-precision coefficients survive the round trip.
#[derive(Serialize, Deserialize)]
struct PolyTermJson {
    exponents: Vec<u32>,
    numerator: String,
    denominator: String,
}

/// Flat f64 view of a polynomial for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (i, &ei) in e.iter().enumerate() {
                for _ in 0..ei {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// The exact rational value of a finite f64 (every finite float is rational).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Deterministic pseudo-random polynomial with small integer-over-small
/// denominator coefficients; a verification helper shared by the identity
/// suites.
pub fn random_polynomial(dim: usize, max_degree: u32, n_terms: usize, seed: u64) -> Polynomial {
    let mut state = seed ^ 0x9E3779B97F4A7C15;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as u32
    };
    let mut p = Polynomial::zero(dim);
    for _ in 0..n_terms {
        let mut exps = vec![0u32; dim];
        let mut left = max_degree;
        for e in exps.iter_mut() {
            let d = next() % (left + 1);
            *e = d;
            left -= d;
        }
        let num = (next() % 19) as i64 - 9;
        let den = (next() % 4) as i64 + 1;
        p = p.add(&Polynomial::monomial(
            dim,
            exps,
            BigRational::new(BigInt::from(num), BigInt::from(den)),
        ));
    }
    p
}

/// Best rational approximation with bounded denominator, via the continued
/// fraction expansion. Returns `None` if no fraction with denominator at most
/// `max_den` reproduces `x` to within `tol`.
pub fn rational_reconstruct(x: f64, max_den: u64, tol: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let negative = x < 0.0;
    let mut v = x.abs();
    // Convergents p/q of the continued fraction of |x|.
    let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, v.floor() as i128, 1i128);
    v -= v.floor();
    for _ in 0..64 {
        let approx = p1 as f64 / q1 as f64;
        if (approx - x.abs()).abs() <= tol * (1.0 + x.abs()) {
            break;
        }
        if v.abs() < 1e-18 {
            break;
        }
        v = 1.0 / v;
        let a = v.floor();
        if a >= 1e18 {
            break;
        }
        v -= a;
        let a = a as i128;
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 as u128 > max_den as u128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let approx = p1 as f64 / q1 as f64;
    if q1 >= 1 && (approx - x.abs()).abs() <= tol * (1.0 + x.abs()) {
        let mut r = BigRational::new(BigInt::from(p1), BigInt::from(q1));
        if negative {
            r = -r;
        }
        Some(r)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn arithmetic_is_exact_and_canonical() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let p = x.add(&y).mul(&x.sub(&y)); // x^2 - y^2
        let q = x.mul(&x).sub(&y.mul(&y));
        assert_eq!(p, q);
        assert!(p.sub(&q).is_zero());
        assert_eq!(p.degree(), 2);
        assert_eq!(p.num_terms(), 2);
    }

    #[test]
    fn partial_derivative() {
        // d/dx (x^3 y) = 3 x^2 y
        let p = Polynomial::monomial(2, vec![3, 1], rat(1, 1));
        let d = p.partial(0);
        assert_eq!(d, Polynomial::monomial(2, vec![2, 1], rat(3, 1)));
    }

    #[test]
    fn substitute_swap_of_variables() {
        // p(x, y) = x^2 y, swap -> y^2 x
        let p = Polynomial::monomial(2, vec![2, 1], rat(1, 1));
        let swap = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
        let q = p.substitute_linear(&swap);
        assert_eq!(q, Polynomial::monomial(2, vec![1, 2], rat(1, 1)));
    }

    #[test]
    fn divide_difference_by_linear_form() {
        // (x^2 - y^2) / (x - y) = x + y, remainder zero.
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let p = x.mul(&x).sub(&y.mul(&y));
        let q = p.divide_by_linear(&[rat(1, 1), rat(-1, 1)]).unwrap();
        assert_eq!(q, x.add(&y));
    }

    #[test]
    fn division_rejects_nonzero_remainder() {
        let x = Polynomial::var(1, 0);
        let p = x.mul(&x).add(&Polynomial::one(1)); // x^2 + 1 not divisible by x
        assert!(p.divide_by_linear(&[rat(1, 1)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = Polynomial::monomial(3, vec![1, 0, 2], rat(-7, 3))
            .add(&Polynomial::constant(3, rat(5, 1)));
        let v = p.to_json();
        let q = Polynomial::from_json(3, &v).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rational_reconstruction_finds_small_fractions() {
        assert_eq!(rational_reconstruct(0.5, 1000, 1e-12).unwrap(), rat(1, 2));
        assert_eq!(
            rational_reconstruct(1.0 / 3.0, 1000, 1e-12).unwrap(),
            rat(1, 3)
        );
        assert_eq!(rational_reconstruct(-2.5, 1000, 1e-12).unwrap(), rat(-5, 2));
        // Nothing small reproduces an irrational to 1e-12.
        assert!(rational_reconstruct(std::f64::consts::SQRT_2, 10_000, 1e-13).is_none());
    }

    #[test]
    fn eval_matches_rational_eval() {
        let p = Polynomial::monomial(2, vec![2, 3], rat(3, 4));
        let x = [1.5, -2.0];
        let exact = p.eval_rational(&[rat(3, 2), rat(-2, 1)]);
        assert!((p.eval_f64(&x) - rational_to_f64(&exact)).abs() < 1e-12);
        assert!((p.compiled().eval(&x) - p.eval_f64(&x)).abs() < 1e-14);
    }
}
