//! Scalar test functions with optional analytic derivative data.
//!
//! A `ScalarField` wraps an evaluation closure plus whatever analytic
//! structure the caller can provide: a gradient, a Laplacian, a Lipschitz
//! bound, and a G-invariance flag. Missing gradients fall back to central
//! finite differences unless the field forbids it.

use std::sync::Arc;

use crate::dunkl_calc::polynomial::Polynomial;
use crate::dunkl_calc::DunklError;
use crate::vecmath::norm;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: EvalFn,
    gradient: Option<GradFn>,
    laplacian: Option<EvalFn>,
    pub lipschitz_bound: Option<f64>,
    pub g_invariant: bool,
    allow_fd: bool,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("has_gradient", &self.gradient.is_some())
            .field("has_laplacian", &self.laplacian.is_some())
            .field("lipschitz_bound", &self.lipschitz_bound)
            .field("g_invariant", &self.g_invariant)
            .finish()
    }
}

impl ScalarField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            dim,
            eval: Arc::new(eval),
            gradient: None,
            laplacian: None,
            lipschitz_bound: None,
            g_invariant: false,
            allow_fd: true,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_laplacian(mut self, lap: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.laplacian = Some(Arc::new(lap));
        self
    }

    pub fn with_lipschitz_bound(mut self, a: f64) -> Self {
        self.lipschitz_bound = Some(a);
        self
    }

    pub fn invariant(mut self, flag: bool) -> Self {
        self.g_invariant = flag;
        self
    }

    /// Disallow the finite-difference fallback; derivative requests without
    /// analytic data then fail with `GradientRequired`.
    pub fn forbid_finite_differences(mut self) -> Self {
        self.allow_fd = false;
        self
    }

    /// Wrap a polynomial with its exact gradient and Laplacian.
    pub fn from_polynomial(p: &Polynomial) -> Self {
        let dim = p.dim();
        let compiled = p.compiled();
        let grads: Vec<_> = (0..dim).map(|i| p.partial(i).compiled()).collect();
        let lap: Vec<_> = (0..dim).map(|i| p.partial(i).partial(i).compiled()).collect();
        ScalarField::new(dim, move |x| compiled.eval(x))
            .with_gradient(move |x| grads.iter().map(|g| g.eval(x)).collect())
            .with_laplacian(move |x| lap.iter().map(|l| l.eval(x)).sum())
    }

    /// The radial field `x -> |x|`, with its analytic gradient `x/|x|` and
    /// Laplacian `(N-1)/|x|`. 1-Lipschitz and G-invariant.
    pub fn norm_field(dim: usize) -> Self {
        ScalarField::new(dim, |x| norm(x))
            .with_gradient(|x| {
                let n = norm(x);
                x.iter().map(|c| c / n).collect()
            })
            .with_laplacian(move |x| (dim as f64 - 1.0) / norm(x))
            .with_lipschitz_bound(1.0)
            .invariant(true)
    }

    /// A radial profile `x -> g(|x|)`; radial fields are G-invariant.
    pub fn radial(
        dim: usize,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        let field = ScalarField::new(dim, move |x| g(norm(x))).invariant(true);
        match g_prime {
            Some(gp) => field.with_gradient(move |x| {
                let r = norm(x);
                if r == 0.0 {
                    return vec![0.0; x.len()];
                }
                let d = gp(r) / r;
                x.iter().map(|c| c * d).collect()
            }),
            None => field,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Analytic gradient if present, otherwise central finite differences
    /// with step `h = max(1e-6, 1e-6 |x|)`.
    pub fn gradient_at(&self, x: &[f64]) -> Result<Vec<f64>, DunklError> {
        if let Some(g) = &self.gradient {
            return Ok(g(x));
        }
        if !self.allow_fd {
            return Err(DunklError::GradientRequired);
        }
        let h = 1e-6f64.max(1e-6 * norm(x));
        let mut grad = Vec::with_capacity(self.dim);
        let mut xp = x.to_vec();
        for i in 0..self.dim {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = (self.eval)(&xp);
            xp[i] = orig - h;
            let fm = (self.eval)(&xp);
            xp[i] = orig;
            grad.push((fp - fm) / (2.0 * h));
        }
        Ok(grad)
    }

    /// Analytic Laplacian if present, otherwise second-order central
    /// differences with step `h = 3e-4 max(1, |x|)`.
    pub fn laplacian_at(&self, x: &[f64]) -> Result<f64, DunklError> {
        if let Some(l) = &self.laplacian {
            return Ok(l(x));
        }
        if !self.allow_fd {
            return Err(DunklError::GradientRequired);
        }
        let h = 3e-4 * 1.0f64.max(norm(x));
        let f0 = (self.eval)(x);
        let mut xp = x.to_vec();
        let mut lap = 0.0;
        for i in 0..self.dim {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = (self.eval)(&xp);
            xp[i] = orig - h;
            let fm = (self.eval)(&xp);
            xp[i] = orig;
            lap += (fp - 2.0 * f0 + fm) / (h * h);
        }
        Ok(lap)
    }
}
