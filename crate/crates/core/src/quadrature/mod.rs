//! Deterministic integration against the Dunkl measures.
//!
//! Integrals over `mu_k`, `mu_U = Z^{-1} e^{-|x|^p} mu_k`, Weyl-chamber
//! restrictions and Dunkl ball measures are computed by iterated panelized
//! Gauss-Legendre quadrature over a truncation box. The panel layout is the
//! load-bearing part:
//!
//! - On the axis where a reflection hyperplane is last expressible (the
//!   highest coordinate its root touches), the 1-D segment is split exactly
//!   at the crossing. Panels therefore never straddle a wall, so the weight
//!   cusp `|<a,x>|^{2k}` and chamber indicators sit on panel boundaries.
//! - Ball chords are clipped exactly on the last axis and geometrically
//!   graded toward the chord endpoints on the outer axes, where the iterated
//!   integrand has algebraic edge behaviour.
//! - Segments are graded toward the origin and the wall crossings whenever
//!   the weight or `e^{-|x|^p}` is not smooth there.
//!
//! Every grid carries a companion at half resolution; integration reports
//! the fine value with the Richardson difference as its error estimate.

pub mod gauss;

use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::dunkl_calc::{apply_t_poly, DunklError, Polynomial, TestFunction};
use crate::root_system::{ChamberId, RootSystem, RootSystemError};
use crate::vecmath::{norm_sq, pairwise_sum};

use gauss::gauss_legendre;

const DEFAULT_TAIL_TARGET: f64 = 1e-12;
const GRADE_LEVELS: usize = 11;
const GRADE_RATIO: f64 = 0.35;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("tensor quadrature supports N <= 3, got {0}; use the sampler instead")]
    UnsupportedDimension(usize),
    #[error("integrand not finite at node {node:?}: {value}")]
    Evaluation { node: Vec<f64>, value: f64 },
    #[error("normalization did not stabilise: coarse {coarse}, fine {fine}")]
    NonConvergence { coarse: f64, fine: f64 },
    #[error("grid would need {needed} nodes, cap is {cap}; lower the resolution")]
    NodeBudget { needed: usize, cap: usize },
    #[error("grid cache: {0}")]
    Cache(String),
    #[error(transparent)]
    RootSystem(#[from] RootSystemError),
    #[error(transparent)]
    Dunkl(#[from] DunklError),
}

/// Which measure integrals run against.
#[derive(Clone, Debug)]
pub enum MeasureVariant {
    /// The (infinite) Dunkl measure `w_k(x) dx`; integrands must decay.
    MuK,
    /// Probability measure `Z^{-1} e^{-|x|^p} w_k dx`, `p > 1`.
    MuU { p: f64 },
    /// `mu_U` restricted to one Weyl chamber and renormalised.
    MuUChamber { p: f64, chamber: ChamberId },
    /// Normalised Dunkl measure on the centred ball of the given radius.
    Ball { radius: f64 },
}

/// A measure bound to its root system, with the last computed normalisation
/// cached (the unnormalised mass of the truncated density).
#[derive(Clone, Debug)]
pub struct MeasureSpec {
    pub rs: Arc<RootSystem>,
    pub variant: MeasureVariant,
    z: Arc<OnceLock<f64>>,
}

impl MeasureSpec {
    pub fn mu_k(rs: Arc<RootSystem>) -> Self {
        MeasureSpec { rs, variant: MeasureVariant::MuK, z: Arc::new(OnceLock::new()) }
    }

    pub fn mu_u(rs: Arc<RootSystem>, p: f64) -> Result<Self, QuadratureError> {
        if !(p > 1.0) {
            return Err(QuadratureError::InvalidMeasure(format!(
                "mu_U requires p > 1, got {p}"
            )));
        }
        Ok(MeasureSpec { rs, variant: MeasureVariant::MuU { p }, z: Arc::new(OnceLock::new()) })
    }

    pub fn mu_u_chamber(
        rs: Arc<RootSystem>,
        p: f64,
        chamber: ChamberId,
    ) -> Result<Self, QuadratureError> {
        if !(p > 1.0) {
            return Err(QuadratureError::InvalidMeasure(format!(
                "mu_U requires p > 1, got {p}"
            )));
        }
        if chamber.signs.len() != rs.num_positive_roots() {
            return Err(QuadratureError::InvalidMeasure(
                "chamber sign pattern does not match the root count".into(),
            ));
        }
        Ok(MeasureSpec {
            rs,
            variant: MeasureVariant::MuUChamber { p, chamber },
            z: Arc::new(OnceLock::new()),
        })
    }

    /// `mu_U` restricted to the fundamental chamber.
    pub fn mu_u_fundamental_chamber(rs: Arc<RootSystem>, p: f64) -> Result<Self, QuadratureError> {
        let chamber = ChamberId::fundamental(rs.num_positive_roots());
        Self::mu_u_chamber(rs, p, chamber)
    }

    pub fn ball(rs: Arc<RootSystem>, radius: f64) -> Result<Self, QuadratureError> {
        if !(radius > 0.0) {
            return Err(QuadratureError::InvalidMeasure(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(MeasureSpec { rs, variant: MeasureVariant::Ball { radius }, z: Arc::new(OnceLock::new()) })
    }

    pub fn p(&self) -> Option<f64> {
        match &self.variant {
            MeasureVariant::MuU { p } | MeasureVariant::MuUChamber { p, .. } => Some(*p),
            _ => None,
        }
    }

    pub fn chamber(&self) -> Option<&ChamberId> {
        match &self.variant {
            MeasureVariant::MuUChamber { chamber, .. } => Some(chamber),
            _ => None,
        }
    }

    /// All variants but the raw Dunkl measure are probability measures.
    pub fn is_probability(&self) -> bool {
        !matches!(self.variant, MeasureVariant::MuK)
    }

    /// Cached normalisation (set by grid builds and `normalization`):
    /// `Z` for `mu_U`, `Z_H` for the chamber variant, `mu_k(B_R)` for balls.
    pub fn cached_normalization(&self) -> Option<f64> {
        self.z.get().copied()
    }

    fn store_normalization(&self, z: f64) {
        let _ = self.z.set(z);
    }

    /// Unnormalised density against Lebesgue measure (zero outside the
    /// chamber or ball for the restricted variants).
    pub fn density(&self, x: &[f64]) -> f64 {
        let w = self.rs.weight(x);
        match &self.variant {
            MeasureVariant::MuK => w,
            MeasureVariant::MuU { p } => w * (-norm_sq(x).powf(p / 2.0)).exp(),
            MeasureVariant::MuUChamber { p, chamber } => {
                if chamber.contains(&self.rs, x) {
                    w * (-norm_sq(x).powf(p / 2.0)).exp()
                } else {
                    0.0
                }
            }
            MeasureVariant::Ball { radius } => {
                if norm_sq(x) <= radius * radius {
                    w
                } else {
                    0.0
                }
            }
        }
    }

    /// Truncation half-width: large enough that `e^{-L^p/2}` is below the
    /// tail target, so the out-of-box mass is provably negligible.
    fn default_half_width(&self) -> f64 {
        match &self.variant {
            MeasureVariant::Ball { radius } => *radius,
            MeasureVariant::MuU { p } | MeasureVariant::MuUChamber { p, .. } => {
                (2.0 * -DEFAULT_TAIL_TARGET.ln()).powf(1.0 / p) * 1.01
            }
            // mu_k itself has no decay: callers integrate decaying
            // integrands; this default covers the Gaussian-damped class.
            MeasureVariant::MuK => 8.0,
        }
    }
}

/// Grid construction knobs. `resolution` is the number of Gauss nodes per
/// axis per panel; the companion grid for error estimation doubles it.
/// `base_panels = 0` selects panels of width about 1.8, the variation scale
/// of the exponential densities.
#[derive(Clone, Debug)]
pub struct GridParams {
    pub resolution: usize,
    pub base_panels: usize,
    pub box_half_width: Option<f64>,
    pub node_budget: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            resolution: 24,
            base_panels: 0,
            box_half_width: None,
            node_budget: 60_000_000,
        }
    }
}

impl GridParams {
    pub fn with_resolution(resolution: usize) -> Self {
        GridParams { resolution, ..Default::default() }
    }
}

/// Materialised quadrature grid: nodes with weights that already include the
/// measure density (and the normalisation for probability measures), plus a
/// half-resolution companion used for error estimation.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    coarse_nodes: Vec<f64>,
    coarse_weights: Vec<f64>,
    pub truncation_radius: f64,
    pub est_tail: f64,
    /// Unnormalised mass of the truncated density at fine resolution.
    pub raw_mass: f64,
    /// Same at the coarse resolution.
    pub raw_mass_coarse: f64,
}

impl QuadratureGrid {
    pub fn build(ms: &MeasureSpec, params: &GridParams) -> Result<Self, QuadratureError> {
        let dim = ms.rs.dim();
        if dim > 3 {
            return Err(QuadratureError::UnsupportedDimension(dim));
        }
        let mut fine_nodes = Vec::new();
        let mut fine_weights = Vec::new();
        let mut coarse_nodes = Vec::new();
        let mut coarse_weights = Vec::new();
        let budget = params.node_budget;
        for (m, nodes, weights) in [
            (params.resolution, &mut coarse_nodes, &mut coarse_weights),
            (2 * params.resolution, &mut fine_nodes, &mut fine_weights),
        ] {
            let mut over_budget = false;
            for_each_node(ms, params, m, |x, w| {
                if weights.len() >= budget {
                    over_budget = true;
                    return;
                }
                nodes.extend_from_slice(x);
                weights.push(w);
            })?;
            if over_budget {
                return Err(QuadratureError::NodeBudget { needed: budget + 1, cap: budget });
            }
        }
        let raw_mass = pairwise_sum(&fine_weights);
        let raw_mass_coarse = pairwise_sum(&coarse_weights);
        if ms.is_probability() {
            if !(raw_mass > 0.0) || !(raw_mass_coarse > 0.0) {
                return Err(QuadratureError::InvalidMeasure(
                    "measure has nonpositive mass on the truncation box".into(),
                ));
            }
            for w in fine_weights.iter_mut() {
                *w /= raw_mass;
            }
            for w in coarse_weights.iter_mut() {
                *w /= raw_mass_coarse;
            }
            ms.store_normalization(raw_mass);
        }
        let half_width = params.box_half_width.unwrap_or_else(|| ms.default_half_width());
        let est_tail = estimate_tail(ms, half_width, &fine_nodes, &fine_weights, raw_mass);
        Ok(QuadratureGrid {
            dim,
            nodes: fine_nodes,
            weights: fine_weights,
            coarse_nodes,
            coarse_weights,
            truncation_radius: half_width,
            est_tail,
            raw_mass,
            raw_mass_coarse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn num_coarse_nodes(&self) -> usize {
        self.coarse_weights.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn coarse_node(&self, i: usize) -> &[f64] {
        &self.coarse_nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coarse_weight(&self, i: usize) -> f64 {
        self.coarse_weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of `w_i f(x_i)` over one node set with pairwise accumulation.
    fn sum_over(
        nodes: &[f64],
        weights: &[f64],
        dim: usize,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> Result<f64, QuadratureError> {
        let n = weights.len();
        let mut partials = Vec::with_capacity(n / 4096 + 1);
        let mut buf = Vec::with_capacity(4096.min(n));
        for i in 0..n {
            let x = &nodes[i * dim..(i + 1) * dim];
            let v = f(x);
            if !v.is_finite() {
                return Err(QuadratureError::Evaluation { node: x.to_vec(), value: v });
            }
            buf.push(weights[i] * v);
            if buf.len() == 4096 {
                partials.push(pairwise_sum(&buf));
                buf.clear();
            }
        }
        if !buf.is_empty() {
            partials.push(pairwise_sum(&buf));
        }
        Ok(pairwise_sum(&partials))
    }

    /// Integrate a raw closure, returning the fine value and the Richardson
    /// error estimate against the coarse companion.
    pub fn integrate_fn(
        &self,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Result<(f64, f64), QuadratureError> {
        let fine = Self::sum_over(&self.nodes, &self.weights, self.dim, &mut f)?;
        let coarse = Self::sum_over(&self.coarse_nodes, &self.coarse_weights, self.dim, &mut f)?;
        let err = (fine - coarse).abs() + self.est_tail * fine.abs();
        Ok((fine, err))
    }

    /// Disk-cache key: root-system content hash, measure variant, box
    /// half-width and resolution.
    pub fn cache_key(ms: &MeasureSpec, params: &GridParams) -> String {
        let variant = match &ms.variant {
            MeasureVariant::MuK => "mu_k".to_string(),
            MeasureVariant::MuU { p } => format!("mu_u_p{p}"),
            MeasureVariant::MuUChamber { p, chamber } => {
                let signs: String =
                    chamber.signs.iter().map(|s| if *s > 0 { '+' } else { '-' }).collect();
                format!("mu_uh_p{p}_{signs}")
            }
            MeasureVariant::Ball { radius } => format!("ball_r{radius}"),
        };
        let half_width = params.box_half_width.unwrap_or_else(|| ms.default_half_width());
        format!(
            "grid_{}_{}_L{half_width}_m{}_b{}",
            ms.rs.content_key(),
            variant,
            params.resolution,
            params.base_panels,
        )
    }

    /// Serialize to a compact little-endian binary artifact.
    pub fn save_binary(&self, path: &std::path::Path) -> Result<(), QuadratureError> {
        let io = |e: std::io::Error| QuadratureError::Cache(e.to_string());
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(b"DLGRID01");
        buf.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for scalar in [self.truncation_radius, self.est_tail, self.raw_mass, self.raw_mass_coarse]
        {
            buf.extend_from_slice(&scalar.to_le_bytes());
        }
        for array in [&self.nodes, &self.weights, &self.coarse_nodes, &self.coarse_weights] {
            buf.extend_from_slice(&(array.len() as u64).to_le_bytes());
            for v in array.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, buf).map_err(io)
    }

    /// Load a grid previously written by `save_binary`.
    pub fn load_binary(path: &std::path::Path) -> Result<Self, QuadratureError> {
        let bytes = std::fs::read(path).map_err(|e| QuadratureError::Cache(e.to_string()))?;
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, n: usize| -> Result<&[u8], QuadratureError> {
            if *cursor + n > bytes.len() {
                return Err(QuadratureError::Cache("truncated grid artifact".into()));
            }
            let slice = &bytes[*cursor..*cursor + n];
            *cursor += n;
            Ok(slice)
        };
        if take(&mut cursor, 8)? != b"DLGRID01" {
            return Err(QuadratureError::Cache("bad grid magic".into()));
        }
        let dim = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().expect("8 bytes")) as usize;
        let mut scalars = [0.0f64; 4];
        for s in scalars.iter_mut() {
            *s = f64::from_le_bytes(take(&mut cursor, 8)?.try_into().expect("8 bytes"));
        }
        let mut arrays: Vec<Vec<f64>> = Vec::with_capacity(4);
        for _ in 0..4 {
            let len =
                u64::from_le_bytes(take(&mut cursor, 8)?.try_into().expect("8 bytes")) as usize;
            let data = take(&mut cursor, len * 8)?;
            arrays.push(
                data.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            );
        }
        let coarse_weights = arrays.pop().expect("four arrays");
        let coarse_nodes = arrays.pop().expect("four arrays");
        let weights = arrays.pop().expect("four arrays");
        let nodes = arrays.pop().expect("four arrays");
        Ok(QuadratureGrid {
            dim,
            nodes,
            weights,
            coarse_nodes,
            coarse_weights,
            truncation_radius: scalars[0],
            est_tail: scalars[1],
            raw_mass: scalars[2],
            raw_mass_coarse: scalars[3],
        })
    }

    /// Load from the cache directory if the keyed artifact exists, otherwise
    /// build and store it.
    pub fn build_cached(
        ms: &MeasureSpec,
        params: &GridParams,
        cache_dir: &std::path::Path,
    ) -> Result<Self, QuadratureError> {
        let path = cache_dir.join(format!("{}.grid", Self::cache_key(ms, params)));
        if path.exists() {
            let grid = Self::load_binary(&path)?;
            if ms.is_probability() {
                ms.store_normalization(grid.raw_mass);
            }
            return Ok(grid);
        }
        let grid = Self::build(ms, params)?;
        grid.save_binary(&path)?;
        Ok(grid)
    }
}

/// Integrate a test function against the measure the grid was built for.
pub fn integrate(
    ms: &MeasureSpec,
    f: &TestFunction,
    grid: &QuadratureGrid,
) -> Result<(f64, f64), QuadratureError> {
    if f.dim() != ms.rs.dim() || grid.dim != ms.rs.dim() {
        return Err(QuadratureError::InvalidMeasure(
            "dimension mismatch between measure, grid and integrand".into(),
        ));
    }
    match f {
        TestFunction::Poly(p) => {
            let c = p.compiled();
            grid.integrate_fn(|x| c.eval(x))
        }
        TestFunction::Field(field) => grid.integrate_fn(|x| field.eval(x)),
    }
}

/// Normalising constant of a `mu_U` variant or the Dunkl mass of a ball,
/// computed stream-wise (no grid is materialised) at the given resolution
/// and its double. Fails with both estimates if they disagree by more than
/// 1e-6 relative.
pub fn normalization(ms: &MeasureSpec, resolution: usize) -> Result<f64, QuadratureError> {
    normalization_with(ms, &GridParams::with_resolution(resolution))
}

/// As `normalization`, with full control over the panel layout.
pub fn normalization_with(ms: &MeasureSpec, params: &GridParams) -> Result<f64, QuadratureError> {
    if matches!(ms.variant, MeasureVariant::MuK) {
        return Err(QuadratureError::InvalidMeasure(
            "mu_k is not normalisable on R^N".into(),
        ));
    }
    let mut masses = [0.0f64; 2];
    for (slot, m) in [(0usize, params.resolution), (1usize, 2 * params.resolution)] {
        let mut acc = PairwiseAccumulator::new();
        for_each_node(ms, params, m, |_, w| acc.push(w))?;
        masses[slot] = acc.total();
    }
    let (coarse, fine) = (masses[0], masses[1]);
    if (fine - coarse).abs() > 1e-6 * fine.abs() {
        return Err(QuadratureError::NonConvergence { coarse, fine });
    }
    ms.store_normalization(fine);
    Ok(fine)
}

/// Residual of the integration-by-parts identity
/// `int T_i(f) G dmu_k + int f T_i(G) dmu_k` with `G = g e^{-|x|^2}`.
/// The Gaussian factor is G-invariant, so `T_i(G) = (T_i g - 2 x_i g) e^{-|x|^2}`
/// exactly, and the whole integrand is polynomial-times-Gaussian.
pub fn ibp_residual(
    rs: &RootSystem,
    i: usize,
    f: &Polynomial,
    g: &Polynomial,
    grid: &QuadratureGrid,
) -> Result<f64, QuadratureError> {
    let tf = apply_t_poly(rs, i, f)?;
    let tg = apply_t_poly(rs, i, g)?;
    let xi = Polynomial::var(rs.dim(), i);
    let two = num_rational::BigRational::from_integer(2.into());
    let tg_full = tg.sub(&xi.mul(g).scale(&two));
    let integrand = tf.mul(g).add(&f.mul(&tg_full));
    let c = integrand.compiled();
    let (value, _err) = grid.integrate_fn(|x| c.eval(x) * (-norm_sq(x)).exp())?;
    Ok(value.abs())
}

struct PairwiseAccumulator {
    partials: Vec<f64>,
    buf: Vec<f64>,
}

impl PairwiseAccumulator {
    fn new() -> Self {
        PairwiseAccumulator { partials: Vec::new(), buf: Vec::with_capacity(4096) }
    }

    fn push(&mut self, v: f64) {
        self.buf.push(v);
        if self.buf.len() == 4096 {
            self.partials.push(pairwise_sum(&self.buf));
            self.buf.clear();
        }
    }

    fn total(&mut self) -> f64 {
        if !self.buf.is_empty() {
            self.partials.push(pairwise_sum(&self.buf));
            self.buf.clear();
        }
        pairwise_sum(&self.partials)
    }
}

/// Tail bound for box-truncated measures: outside the box `|x| > L`, so
/// `e^{-|x|^p} <= e^{-L^p/2} e^{-|x|^p/2}` and the out-of-box mass is at most
/// `e^{-L^p/2} * C` with `C = int e^{-|x|^p/2} dmu_k`, estimated on the grid
/// itself (inflated by 2% for its own truncation). Reported relative to the
/// measure's mass.
fn estimate_tail(
    ms: &MeasureSpec,
    half_width: f64,
    nodes: &[f64],
    weights: &[f64],
    raw_mass: f64,
) -> f64 {
    let p = match &ms.variant {
        MeasureVariant::MuU { p } | MeasureVariant::MuUChamber { p, .. } => *p,
        MeasureVariant::Ball { .. } => return 0.0,
        MeasureVariant::MuK => return 0.0,
    };
    let dim = ms.rs.dim();
    let n = weights.len();
    let mut acc = PairwiseAccumulator::new();
    for i in 0..n {
        let x = &nodes[i * dim..(i + 1) * dim];
        // weights are already normalised by raw_mass here; undo that and
        // re-weight e^{-U} to e^{-U/2}.
        let u = norm_sq(x).powf(p / 2.0);
        acc.push(weights[i] * raw_mass * (u / 2.0).exp());
    }
    let c_half = acc.total() * 1.02;
    c_half * (-half_width.powf(p) / 2.0).exp() / raw_mass
}

/// Visit the panel nodes with raw Gauss weights (no measure density
/// applied). The truncation box, wall splits and grading match the measure's
/// grids; callers fold in densities themselves, e.g. in log space when the
/// density underflows.
pub fn visit_raw_nodes(
    ms: &MeasureSpec,
    params: &GridParams,
    resolution: usize,
    sink: impl FnMut(&[f64], f64),
) -> Result<(), QuadratureError> {
    for_each_node_impl(ms, params, resolution, false, sink)
}

/// Visit every node of the iterated panel grid at `m` Gauss nodes per panel.
fn for_each_node(
    ms: &MeasureSpec,
    params: &GridParams,
    m: usize,
    sink: impl FnMut(&[f64], f64),
) -> Result<(), QuadratureError> {
    for_each_node_impl(ms, params, m, true, sink)
}

fn for_each_node_impl(
    ms: &MeasureSpec,
    params: &GridParams,
    m: usize,
    include_density: bool,
    mut sink: impl FnMut(&[f64], f64),
) -> Result<(), QuadratureError> {
    let dim = ms.rs.dim();
    if dim > 3 {
        return Err(QuadratureError::UnsupportedDimension(dim));
    }
    let half_width = params.box_half_width.unwrap_or_else(|| ms.default_half_width());
    let (gauss_x, gauss_w) = gauss_legendre(m);
    let base_panels = if params.base_panels > 0 {
        params.base_panels
    } else {
        ((2.0 * half_width / 1.8).ceil() as usize).max(4)
    };
    let max_width = 2.0 * half_width / base_panels as f64;
    let ball_radius = match &ms.variant {
        MeasureVariant::Ball { radius } => Some(*radius),
        _ => None,
    };
    // Smoothness bookkeeping: grade toward walls when the weight has a cusp,
    // toward the origin when either the weight or e^{-|x|^p} is non-smooth.
    let wall_grading = !ms.rs.weight_is_polynomial();
    let origin_grading = wall_grading
        || match ms.p() {
            Some(p) => !(p.fract() == 0.0 && (p as i64) % 2 == 0),
            None => false,
        };
    let mut prefix = vec![0.0f64; dim];
    recurse_axis(
        ms,
        RecurseCtx {
            dim,
            half_width,
            max_width,
            gauss_x: &gauss_x,
            gauss_w: &gauss_w,
            ball_radius,
            wall_grading,
            origin_grading,
            include_density,
        },
        0,
        &mut prefix,
        1.0,
        &mut sink,
    );
    Ok(())
}

#[derive(Clone, Copy)]
struct RecurseCtx<'a> {
    dim: usize,
    half_width: f64,
    max_width: f64,
    gauss_x: &'a [f64],
    gauss_w: &'a [f64],
    ball_radius: Option<f64>,
    wall_grading: bool,
    origin_grading: bool,
    include_density: bool,
}

fn recurse_axis(
    ms: &MeasureSpec,
    ctx: RecurseCtx<'_>,
    axis: usize,
    prefix: &mut Vec<f64>,
    weight_so_far: f64,
    sink: &mut impl FnMut(&[f64], f64),
) {
    // Segment for this axis: box edge, or exact ball chord.
    let (a, b, ball_edges) = match ctx.ball_radius {
        None => (-ctx.half_width, ctx.half_width, false),
        Some(radius) => {
            let rho_sq: f64 = prefix[..axis].iter().map(|c| c * c).sum();
            let c_sq = radius * radius - rho_sq;
            if c_sq <= 0.0 {
                return;
            }
            let c = c_sq.sqrt();
            // Chord ends are exact on the last axis; on outer axes the
            // iterated integrand has an algebraic edge there.
            (-c, c, axis + 1 < ctx.dim)
        }
    };
    // Wall crossings resolvable at this axis: roots whose support ends here.
    let mut cuts: Vec<(f64, bool)> = Vec::new(); // (position, grade toward it)
    if a < 0.0 && 0.0 < b {
        cuts.push((0.0, ctx.origin_grading));
    }
    for (idx, root) in ms.rs.positive_roots().iter().enumerate() {
        if root[axis] == 0.0 || root[axis + 1..].iter().any(|&c| c != 0.0) {
            continue;
        }
        let t = -crate::vecmath::dot(&root[..axis], &prefix[..axis]) / root[axis];
        if t > a && t < b {
            let grade = ctx.wall_grading && ms.rs.multiplicity(idx) > 0.0;
            cuts.push((t, grade));
        }
    }
    cuts.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite cuts"));
    cuts.dedup_by(|x, y| {
        if (x.0 - y.0).abs() < 1e-12 * (b - a) {
            y.1 |= x.1;
            true
        } else {
            false
        }
    });
    let panels = panelize(a, b, &cuts, ctx.max_width, ball_edges);
    let last_axis = axis + 1 == ctx.dim;
    for (lo, hi) in panels {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (gx, gw) in ctx.gauss_x.iter().zip(ctx.gauss_w) {
            prefix[axis] = mid + half * gx;
            let w = weight_so_far * gw * half;
            if last_axis {
                if ctx.include_density {
                    let density = ms.density(prefix);
                    if density != 0.0 {
                        sink(prefix, w * density);
                    }
                } else {
                    sink(prefix, w);
                }
            } else {
                recurse_axis(ms, ctx, axis + 1, prefix, w, sink);
            }
        }
    }
    prefix[axis] = 0.0;
}

/// Split `[a, b]` at the cut points, cap panel width, and refine
/// geometrically toward graded cuts and (optionally) both endpoints.
fn panelize(
    a: f64,
    b: f64,
    cuts: &[(f64, bool)],
    max_width: f64,
    grade_edges: bool,
) -> Vec<(f64, f64)> {
    let mut boundaries: Vec<f64> = vec![a];
    boundaries.extend(cuts.iter().map(|c| c.0));
    boundaries.push(b);
    let mut graded: Vec<f64> = cuts.iter().filter(|c| c.1).map(|c| c.0).collect();
    if grade_edges {
        graded.push(a);
        graded.push(b);
    }
    let mut panels = Vec::new();
    for w in boundaries.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-14 * (b - a) {
            continue;
        }
        let pieces = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        for i in 0..pieces {
            let plo = lo + i as f64 * step;
            let phi = if i + 1 == pieces { hi } else { lo + (i + 1) as f64 * step };
            subdivide_graded(plo, phi, &graded, &mut panels);
        }
    }
    panels
}

fn subdivide_graded(lo: f64, hi: f64, graded: &[f64], out: &mut Vec<(f64, f64)>) {
    let tol = 1e-12 * (hi - lo).abs().max(1e-300);
    let grade_lo = graded.iter().any(|&g| (g - lo).abs() < tol.max(1e-12));
    let grade_hi = graded.iter().any(|&g| (g - hi).abs() < tol.max(1e-12));
    match (grade_lo, grade_hi) {
        (false, false) => out.push((lo, hi)),
        (true, false) => geometric_toward(lo, hi, GRADE_LEVELS, false, out),
        (false, true) => geometric_toward(lo, hi, GRADE_LEVELS, true, out),
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            geometric_toward(lo, mid, GRADE_LEVELS, false, out);
            geometric_toward(mid, hi, GRADE_LEVELS, true, out);
        }
    }
}

/// Geometric panel cascade toward `lo` (or `hi` when `toward_hi`).
fn geometric_toward(lo: f64, hi: f64, levels: usize, toward_hi: bool, out: &mut Vec<(f64, f64)>) {
    let len = hi - lo;
    let mut fractions: Vec<f64> = (0..=levels).map(|l| GRADE_RATIO.powi(l as i32)).collect();
    fractions.push(0.0);
    // fractions descend from 1 to 0; panels between consecutive fractions.
    for w in fractions.windows(2) {
        let (f_hi, f_lo) = (w[0], w[1]);
        let (plo, phi) = if toward_hi {
            (hi - f_hi * len, hi - f_lo * len)
        } else {
            (lo + f_lo * len, lo + f_hi * len)
        };
        if phi > plo {
            out.push((plo, phi));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dunkl_calc::ScalarField;
    use std::f64::consts::PI;

    fn rank_one(k: f64) -> Arc<RootSystem> {
        Arc::new(RootSystem::rank_one(k).unwrap())
    }

    #[test]
    fn gaussian_normalisation_in_one_dimension() {
        // k = 0, p = 2: Z = sqrt(pi).
        let ms = MeasureSpec::mu_u(rank_one(0.0), 2.0).unwrap();
        let z = normalization(&ms, 16).unwrap();
        assert!((z - PI.sqrt()).abs() < 1e-10, "Z = {z}");
    }

    #[test]
    fn second_moment_matches_gamma_ratio() {
        // int x^2 dmu_U = k + 1/2 for the rank-1 system at p = 2.
        for k in [0.0, 1.0, 2.5, 0.6] {
            let rs = rank_one(k);
            let ms = MeasureSpec::mu_u(rs.clone(), 2.0).unwrap();
            let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(16)).unwrap();
            let p = Polynomial::var(1, 0).pow(2);
            let (v, err) = integrate(&ms, &TestFunction::Poly(p), &grid).unwrap();
            assert!(
                (v - (k + 0.5)).abs() < 1e-8 + err,
                "k={k}: moment {v}, expected {}",
                k + 0.5
            );
        }
    }

    #[test]
    fn grid_weights_are_normalised_within_tail() {
        let rs = Arc::new(RootSystem::build_type_b(2, 1.0, 0.5).unwrap());
        let ms = MeasureSpec::mu_u(rs, 2.0).unwrap();
        let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(10)).unwrap();
        let total: f64 = pairwise_sum(grid.weights());
        assert!(total <= 1.0 + 1e-12);
        assert!(total >= 1.0 - grid.est_tail - 1e-12);
        assert!(grid.weights().iter().all(|&w| w >= 0.0));
        assert!(grid.est_tail < 1e-9);
    }

    #[test]
    fn ball_mass_ratio_shows_homogeneity() {
        // mu_k(B_2)/mu_k(B_1) = 2^{N + 2 gamma}. A fixed absolute panel
        // layout and different Gauss orders keep the two node sets from
        // being dilates of one another.
        let rs = Arc::new(RootSystem::build_type_b(2, 1.0, 1.0).unwrap());
        let params1 = GridParams { resolution: 10, box_half_width: Some(2.2), ..Default::default() };
        let params2 = GridParams { resolution: 12, box_half_width: Some(2.2), ..Default::default() };
        let m1 = normalization_with(&MeasureSpec::ball(rs.clone(), 1.0).unwrap(), &params1).unwrap();
        let m2 = normalization_with(&MeasureSpec::ball(rs.clone(), 2.0).unwrap(), &params2).unwrap();
        let expected = 2f64.powf(2.0 + 2.0 * rs.gamma());
        assert!(
            ((m2 / m1) / expected - 1.0).abs() < 1e-6,
            "ratio {} vs {expected}",
            m2 / m1
        );
    }

    #[test]
    fn rank_one_ball_grid_integrates_monomials_exactly() {
        // Against the closed form int_{-R}^{R} x^d |x|^{2k} dx with k = 1.
        let rs = rank_one(1.0);
        let radius = 1.5;
        let ms = MeasureSpec::ball(rs, radius).unwrap();
        let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(12)).unwrap();
        let mass = 2.0 * radius.powi(3) / 3.0; // int |x|^2 over [-R, R]
        for d in (0..=18).step_by(2) {
            let p = Polynomial::var(1, 0).pow(d);
            let (v, _) = integrate(&ms, &TestFunction::Poly(p), &grid).unwrap();
            let exact = 2.0 * radius.powi(d as i32 + 3) / (d as f64 + 3.0) / mass;
            assert!(
                (v - exact).abs() < 1e-12 * exact.abs().max(1.0),
                "degree {d}: {v} vs {exact}"
            );
        }
    }

    #[test]
    fn fractional_multiplicity_moments_via_grading() {
        // k = 0.7: the weight has a genuine cusp at 0; graded panels must
        // still reproduce int x^2 dmu_U = k + 1/2 to high accuracy.
        let rs = rank_one(0.7);
        let ms = MeasureSpec::mu_u(rs, 2.0).unwrap();
        let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(20)).unwrap();
        let p = Polynomial::var(1, 0).pow(2);
        let (v, _) = integrate(&ms, &TestFunction::Poly(p), &grid).unwrap();
        assert!((v - 1.2).abs() < 1e-9, "moment {v}");
    }

    #[test]
    fn chamber_normalisation_is_group_fraction_of_full() {
        // Z = |G| Z_H by G-invariance of the integrand.
        let rs = Arc::new(RootSystem::build_type_b(2, 1.0, 1.0).unwrap());
        let full = MeasureSpec::mu_u(rs.clone(), 2.0).unwrap();
        let chamber = MeasureSpec::mu_u_fundamental_chamber(rs.clone(), 2.0).unwrap();
        let z = normalization(&full, 12).unwrap();
        let z_h = normalization(&chamber, 12).unwrap();
        let order = rs.group_order().unwrap() as f64;
        assert!(
            (order * z_h / z - 1.0).abs() < 1e-5,
            "|G| Z_H / Z = {}",
            order * z_h / z
        );
    }

    #[test]
    fn small_p_normalisation_is_finite() {
        let ms = MeasureSpec::mu_u(rank_one(1.0), 1.1).unwrap();
        let z = normalization(&ms, 20).unwrap();
        assert!(z.is_finite() && z > 0.0);
    }

    #[test]
    fn integrate_reports_nonfinite_evaluations() {
        let ms = MeasureSpec::mu_u(rank_one(0.0), 2.0).unwrap();
        let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(6)).unwrap();
        let f = TestFunction::Field(ScalarField::new(1, |x| 1.0 / (x[0] - x[0]).abs()));
        assert!(matches!(
            integrate(&ms, &f, &grid),
            Err(QuadratureError::Evaluation { .. })
        ));
    }

    #[test]
    fn mu_u_requires_p_above_one() {
        assert!(MeasureSpec::mu_u(rank_one(1.0), 1.0).is_err());
        assert!(MeasureSpec::mu_u(rank_one(1.0), 0.5).is_err());
    }

    #[test]
    fn ibp_residual_is_small_for_polynomial_pairs() {
        // rank 1: f = x, g = 1 (times the Gaussian damping).
        let rs = RootSystem::rank_one(1.0).unwrap();
        let arc = Arc::new(RootSystem::rank_one(1.0).unwrap());
        let ms = MeasureSpec::mu_k(arc);
        let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(16)).unwrap();
        let f = Polynomial::var(1, 0);
        let g = Polynomial::one(1);
        let r = ibp_residual(&rs, 0, &f, &g, &grid).unwrap();
        assert!(r < 1e-6, "residual {r}");
        // f constant: residual reduces to |int T_i g dmu| which also vanishes.
        let r = ibp_residual(&rs, 0, &Polynomial::one(1), &Polynomial::var(1, 0), &grid).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn chamber_identity_for_a2() {
        // Z = |G| Z_H with |G| = 6 for A_2, independent chamber grid.
        let rs = Arc::new(RootSystem::build_type_a(3, 1.0).unwrap());
        let full = MeasureSpec::mu_u(rs.clone(), 2.0).unwrap();
        let chamber = MeasureSpec::mu_u_fundamental_chamber(rs.clone(), 2.0).unwrap();
        let z = normalization(&full, 6).unwrap();
        let z_h = normalization(&chamber, 6).unwrap();
        assert!(
            (6.0 * z_h / z - 1.0).abs() < 1e-5,
            "|G| Z_H / Z = {}",
            6.0 * z_h / z
        );
    }

    #[test]
    fn classical_ibp_at_k_zero() {
        let rs = RootSystem::rank_one(0.0).unwrap();
        let ms = MeasureSpec::mu_k(Arc::new(RootSystem::rank_one(0.0).unwrap()));
        let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(16)).unwrap();
        let f = Polynomial::var(1, 0).pow(2);
        let g = Polynomial::var(1, 0);
        let r = ibp_residual(&rs, 0, &f, &g, &grid).unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn normalization_reports_non_convergence_at_absurd_resolution() {
        let ms = MeasureSpec::mu_u(rank_one(0.0), 2.0).unwrap();
        let params = GridParams { resolution: 1, base_panels: 1, ..Default::default() };
        match normalization_with(&ms, &params) {
            Err(QuadratureError::NonConvergence { coarse, fine }) => {
                assert!(coarse.is_finite() && fine.is_finite());
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn node_budget_is_enforced() {
        let ms = MeasureSpec::mu_u(rank_one(1.0), 2.0).unwrap();
        let params = GridParams { resolution: 16, node_budget: 100, ..Default::default() };
        assert!(matches!(
            QuadratureGrid::build(&ms, &params),
            Err(QuadratureError::NodeBudget { .. })
        ));
    }

    #[test]
    fn grid_cache_round_trip() {
        let dir = std::env::temp_dir().join("dunkl-lab-grid-cache-test");
        let _ = std::fs::remove_dir_all(&dir);
        let ms = MeasureSpec::mu_u(rank_one(1.0), 2.0).unwrap();
        let params = GridParams::with_resolution(8);
        let key = QuadratureGrid::cache_key(&ms, &params);
        assert!(key.contains("mu_u_p2"));
        let built = QuadratureGrid::build_cached(&ms, &params, &dir).unwrap();
        let loaded = QuadratureGrid::build_cached(&ms, &params, &dir).unwrap();
        assert_eq!(built.num_nodes(), loaded.num_nodes());
        let p = Polynomial::var(1, 0).pow(2);
        let (a, _) = integrate(&ms, &TestFunction::Poly(p.clone()), &built).unwrap();
        let (b, _) = integrate(&ms, &TestFunction::Poly(p), &loaded).unwrap();
        assert_eq!(a, b, "cached grid must reproduce integrals bit-exactly");
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn quadrature_rejects_high_dimensions() {
        let rs = Arc::new(RootSystem::build_type_a(5, 1.0).unwrap());
        let ms = MeasureSpec::mu_u(rs, 2.0).unwrap();
        assert!(matches!(
            QuadratureGrid::build(&ms, &GridParams::default()),
            Err(QuadratureError::UnsupportedDimension(5))
        ));
    }
}
