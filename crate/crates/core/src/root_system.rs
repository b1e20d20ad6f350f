//! Root systems, reflections, the finite reflection group, Weyl chambers and
//! the Dunkl weight.
//!
//! All roots are rescaled at construction so that `|a|^2 = 2`; with that
//! normalisation the reflection in the hyperplane orthogonal to `a` is
//! `sigma_a x = x - <a,x> a`. Multiplicities are stored per orbit of the
//! reflection group, which enforces G-invariance structurally. Where a root
//! direction and a multiplicity admit small rational representations they are
//! recorded as exact data, enabling the exact polynomial Dunkl calculus.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dunkl_calc::polynomial::{rational_reconstruct, rational_to_f64};
use crate::vecmath::{dot, norm};

/// Relative tolerance below which `<a,x>` counts as lying on the wall of `a`.
pub const WALL_TOL: f64 = 1e-10;

const MATRIX_DEDUP_TOL: f64 = 1e-10;
const ROOT_MATCH_TOL: f64 = 1e-9;
const GROUP_ITERATION_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum RootSystemError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("not a root system: {0}")]
    NotARootSystem(String),
    #[error("invalid multiplicity: {0}")]
    InvalidMultiplicity(String),
    #[error("group generation failed to close within the iteration cap")]
    GroupGenerationFailure,
    #[error("vector is not a root of this system")]
    UnknownRoot,
    #[error("point lies on a reflection hyperplane")]
    OnWall,
    #[error("serialization: {0}")]
    Serialization(String),
}

/// How `|<a,x>|^{2k}` is raised: integer exponents take a fast exact path.
#[derive(Clone, Copy, Debug)]
enum PowKind {
    Int(i32),
    Real(f64),
}

impl PowKind {
    fn apply(self, base_abs: f64) -> f64 {
        match self {
            PowKind::Int(e) => base_abs.powi(e),
            PowKind::Real(e) => base_abs.powf(e),
        }
    }
}

/// One element of the reflection group: an orthogonal matrix together with a
/// shortest word in the generating reflections (indices into `positive_roots`).
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub matrix: Vec<Vec<f64>>,
    pub word: Vec<usize>,
}

impl GroupElement {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| dot(row, x)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
}

/// Sign pattern of `<a,x>` over the positive roots; labels a Weyl chamber.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChamberId {
    pub signs: Vec<i8>,
}

impl ChamberId {
    /// The fundamental chamber, where every positive root pairs positively.
    pub fn fundamental(n_positive_roots: usize) -> Self {
        ChamberId { signs: vec![1; n_positive_roots] }
    }

    pub fn contains(&self, rs: &RootSystem, x: &[f64]) -> bool {
        rs.positive_roots().iter().zip(&self.signs).all(|(alpha, &s)| {
            let ip = dot(alpha, x);
            ip != 0.0 && (ip > 0.0) == (s > 0)
        })
    }
}

/// A finite root system with normalised roots, orbit multiplicities and the
/// cached reflection group. Immutable after construction.
#[derive(Debug)]
pub struct RootSystem {
    dim: usize,
    positive_roots: Vec<Vec<f64>>,
    orbit_of_root: Vec<usize>,
    orbit_multiplicity: Vec<f64>,
    orbit_multiplicity_exact: Vec<Option<BigRational>>,
    weight_pow: Vec<PowKind>,
    rational_directions: Vec<Option<Vec<BigRational>>>,
    rational_reflections: Vec<Option<Vec<Vec<BigRational>>>>,
    gamma: f64,
    group: OnceLock<Vec<GroupElement>>,
}

impl RootSystem {
    /// Type A_{N-1} in R^N: positive roots `e_i - e_j` for `i < j`, a single
    /// orbit with common multiplicity `k`.
    pub fn build_type_a(n: usize, k: f64) -> Result<Self, RootSystemError> {
        if n < 2 {
            return Err(RootSystemError::InvalidDimension(format!(
                "type A requires N >= 2, got {n}"
            )));
        }
        let mut roots = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                r[j] = -1.0;
                roots.push(r);
            }
        }
        let k_per_root = vec![k; roots.len()];
        Self::construct(n, roots, k_per_root)
    }

    /// Type B_N: positive roots `sqrt(2) e_i` (multiplicity `k1`) and
    /// `e_i ± e_j` for `i < j` (multiplicity `k2`).
    pub fn build_type_b(n: usize, k1: f64, k2: f64) -> Result<Self, RootSystemError> {
        if n < 2 {
            return Err(RootSystemError::InvalidDimension(format!(
                "type B requires N >= 2, got {n}"
            )));
        }
        let mut roots = Vec::new();
        let mut ks = Vec::new();
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = std::f64::consts::SQRT_2;
            roots.push(r);
            ks.push(k1);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for sign in [-1.0, 1.0] {
                    let mut r = vec![0.0; n];
                    r[i] = 1.0;
                    r[j] = sign;
                    roots.push(r);
                    ks.push(k2);
                }
            }
        }
        Self::construct(n, roots, ks)
    }

    /// Validate and build from arbitrary positive roots with per-root
    /// multiplicities (rescaled to `|a|^2 = 2` internally).
    pub fn build_custom(
        positive_roots: Vec<Vec<f64>>,
        multiplicities: Vec<f64>,
    ) -> Result<Self, RootSystemError> {
        if positive_roots.is_empty() {
            return Err(RootSystemError::NotARootSystem("no roots given".into()));
        }
        let dim = positive_roots[0].len();
        Self::construct(dim, positive_roots, multiplicities)
    }

    /// The rank-one system `{±sqrt(2)}` on the line, `G = {id, -id}`.
    pub fn rank_one(k: f64) -> Result<Self, RootSystemError> {
        Self::construct(1, vec![vec![std::f64::consts::SQRT_2]], vec![k])
    }

    fn construct(
        dim: usize,
        raw_roots: Vec<Vec<f64>>,
        raw_k: Vec<f64>,
    ) -> Result<Self, RootSystemError> {
        if dim == 0 {
            return Err(RootSystemError::InvalidDimension("dimension 0".into()));
        }
        if raw_roots.len() != raw_k.len() {
            return Err(RootSystemError::InvalidMultiplicity(format!(
                "{} roots but {} multiplicities",
                raw_roots.len(),
                raw_k.len()
            )));
        }
        for k in &raw_k {
            if !k.is_finite() || *k < 0.0 {
                return Err(RootSystemError::InvalidMultiplicity(format!(
                    "multiplicities must be finite and nonnegative, got {k}"
                )));
            }
        }
        // Normalise |a|^2 = 2.
        let mut roots = Vec::with_capacity(raw_roots.len());
        for r in &raw_roots {
            if r.len() != dim {
                return Err(RootSystemError::NotARootSystem(
                    "roots of mixed dimension".into(),
                ));
            }
            let n = norm(r);
            if n < 1e-14 {
                return Err(RootSystemError::NotARootSystem("zero root".into()));
            }
            let s = std::f64::consts::SQRT_2 / n;
            roots.push(r.iter().map(|c| c * s).collect::<Vec<f64>>());
        }
        // R ∩ spanned-line = {±a}: no two positive roots may be parallel.
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                if dot(&roots[i], &roots[j]).abs() > 2.0 - ROOT_MATCH_TOL {
                    return Err(RootSystemError::NotARootSystem(format!(
                        "positive roots {i} and {j} are parallel"
                    )));
                }
            }
        }
        // Closure: sigma_a(R) = R for every root a.
        let signed_index = |v: &[f64]| -> Option<(usize, f64)> {
            for (idx, r) in roots.iter().enumerate() {
                let ip = dot(r, v);
                if (ip - 2.0).abs() < ROOT_MATCH_TOL
                    && r.iter().zip(v).all(|(a, b)| (a - b).abs() < ROOT_MATCH_TOL)
                {
                    return Some((idx, 1.0));
                }
                if (ip + 2.0).abs() < ROOT_MATCH_TOL
                    && r.iter().zip(v).all(|(a, b)| (a + b).abs() < ROOT_MATCH_TOL)
                {
                    return Some((idx, -1.0));
                }
            }
            None
        };
        let mut orbit_parent: Vec<usize> = (0..roots.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        for a in 0..roots.len() {
            for b in 0..roots.len() {
                let reflected = reflect_normalized(&roots[a], &roots[b]);
                match signed_index(&reflected) {
                    Some((idx, _)) => {
                        let ra = find(&mut orbit_parent, b);
                        let rb = find(&mut orbit_parent, idx);
                        if ra != rb {
                            orbit_parent[ra] = rb;
                        }
                    }
                    None => {
                        return Err(RootSystemError::NotARootSystem(format!(
                            "reflection of root {b} in root {a} lands outside the system"
                        )));
                    }
                }
            }
        }
        // Deterministic orbit numbering: order of first appearance.
        let mut orbit_of_root = vec![usize::MAX; roots.len()];
        let mut orbit_repr: Vec<usize> = Vec::new();
        for i in 0..roots.len() {
            let r = find(&mut orbit_parent, i);
            let idx = match orbit_repr.iter().position(|&x| x == r) {
                Some(idx) => idx,
                None => {
                    orbit_repr.push(r);
                    orbit_repr.len() - 1
                }
            };
            orbit_of_root[i] = idx;
        }
        let n_orbits = orbit_repr.len();
        // k must be constant on each orbit.
        let mut orbit_multiplicity = vec![f64::NAN; n_orbits];
        for (i, &o) in orbit_of_root.iter().enumerate() {
            if orbit_multiplicity[o].is_nan() {
                orbit_multiplicity[o] = raw_k[i];
            } else if (orbit_multiplicity[o] - raw_k[i]).abs() > 1e-12 {
                return Err(RootSystemError::InvalidMultiplicity(format!(
                    "roots in one orbit carry different multiplicities ({} vs {})",
                    orbit_multiplicity[o], raw_k[i]
                )));
            }
        }
        let gamma: f64 = orbit_of_root.iter().map(|&o| orbit_multiplicity[o]).sum();
        let orbit_multiplicity_exact: Vec<Option<BigRational>> = orbit_multiplicity
            .iter()
            .map(|&k| rational_reconstruct(k, 10_000, 1e-13))
            .collect();
        let weight_pow: Vec<PowKind> = orbit_multiplicity
            .iter()
            .map(|&k| {
                let e = 2.0 * k;
                if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
                    PowKind::Int(e as i32)
                } else {
                    PowKind::Real(e)
                }
            })
            .collect();
        let rational_directions: Vec<Option<Vec<BigRational>>> =
            roots.iter().map(|r| rationalize_direction(r)).collect();
        let rational_reflections: Vec<Option<Vec<Vec<BigRational>>>> = rational_directions
            .iter()
            .map(|d| d.as_ref().map(|d| rational_reflection_matrix(d)))
            .collect();
        Ok(RootSystem {
            dim,
            positive_roots: roots,
            orbit_of_root,
            orbit_multiplicity,
            orbit_multiplicity_exact,
            weight_pow,
            rational_directions,
            rational_reflections,
            gamma,
            group: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positive_roots(&self) -> &[Vec<f64>] {
        &self.positive_roots
    }

    pub fn num_positive_roots(&self) -> usize {
        self.positive_roots.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn num_orbits(&self) -> usize {
        self.orbit_multiplicity.len()
    }

    pub fn orbit_of_root(&self, root_idx: usize) -> usize {
        self.orbit_of_root[root_idx]
    }

    pub fn multiplicity_of_orbit(&self, orbit: usize) -> f64 {
        self.orbit_multiplicity[orbit]
    }

    pub fn multiplicity(&self, root_idx: usize) -> f64 {
        self.orbit_multiplicity[self.orbit_of_root[root_idx]]
    }

    /// Exact multiplicity, when the stored float reconstructs to a small
    /// rational; the exact Dunkl calculus requires this.
    pub fn multiplicity_exact(&self, root_idx: usize) -> Option<&BigRational> {
        self.orbit_multiplicity_exact[self.orbit_of_root[root_idx]].as_ref()
    }

    /// A rational vector parallel to the root, when one exists. The Dunkl
    /// difference term only depends on the direction of the root, so any
    /// parallel rational vector supports the exact path.
    pub fn rational_direction(&self, root_idx: usize) -> Option<&Vec<BigRational>> {
        self.rational_directions[root_idx].as_ref()
    }

    /// Exact reflection matrix for the root, when the direction is rational.
    pub fn rational_reflection(&self, root_idx: usize) -> Option<&Vec<Vec<BigRational>>> {
        self.rational_reflections[root_idx].as_ref()
    }

    /// True when `2k` is an even integer for every orbit, i.e. the weight
    /// `w_k` is a polynomial with no cusp on the walls.
    pub fn weight_is_polynomial(&self) -> bool {
        self.weight_pow.iter().all(|p| matches!(p, PowKind::Int(e) if e % 2 == 0))
    }

    pub fn inner_with_root(&self, root_idx: usize, x: &[f64]) -> f64 {
        dot(&self.positive_roots[root_idx], x)
    }

    /// Reflection `sigma_a x = x - <a,x> a` for the stored normalised root.
    pub fn reflect_by_index(&self, root_idx: usize, x: &[f64]) -> Vec<f64> {
        reflect_normalized(&self.positive_roots[root_idx], x)
    }

    /// Reflection in the hyperplane orthogonal to `alpha`, which must be
    /// parallel to a root of the system.
    pub fn reflect(&self, alpha: &[f64], x: &[f64]) -> Result<Vec<f64>, RootSystemError> {
        let idx = self.root_index_of(alpha).ok_or(RootSystemError::UnknownRoot)?;
        Ok(self.reflect_by_index(idx, x))
    }

    /// Index of the positive root parallel to `alpha` (either sign).
    pub fn root_index_of(&self, alpha: &[f64]) -> Option<usize> {
        if alpha.len() != self.dim {
            return None;
        }
        let na = norm(alpha);
        if na < 1e-14 {
            return None;
        }
        for (i, r) in self.positive_roots.iter().enumerate() {
            let cosine = dot(r, alpha) / (std::f64::consts::SQRT_2 * na);
            if (cosine.abs() - 1.0).abs() < ROOT_MATCH_TOL {
                return Some(i);
            }
        }
        None
    }

    pub fn on_wall(&self, root_idx: usize, x: &[f64]) -> bool {
        let ip = self.inner_with_root(root_idx, x);
        ip == 0.0 || ip.abs() < WALL_TOL * norm(x)
    }

    pub fn off_all_walls(&self, x: &[f64]) -> bool {
        (0..self.positive_roots.len()).all(|i| !self.on_wall(i, x))
    }

    /// The Dunkl weight `w_k(x) = prod_a |<a,x>|^{2 k_a}`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        let mut w = 1.0;
        for (i, alpha) in self.positive_roots.iter().enumerate() {
            let ip = dot(alpha, x).abs();
            w *= self.weight_pow[self.orbit_of_root[i]].apply(ip);
        }
        w
    }

    /// `log w_k(x)`; `-inf` on a wall with positive multiplicity.
    pub fn log_weight(&self, x: &[f64]) -> f64 {
        let mut lw = 0.0;
        for (i, alpha) in self.positive_roots.iter().enumerate() {
            let k = self.multiplicity(i);
            if k == 0.0 {
                continue;
            }
            lw += 2.0 * k * dot(alpha, x).abs().ln();
        }
        lw
    }

    /// Breadth-first closure of the generating reflections. Elements carry a
    /// shortest word; the result is cached, deterministic and contains the
    /// identity first.
    pub fn generate_group(&self) -> Result<&[GroupElement], RootSystemError> {
        if let Some(g) = self.group.get() {
            return Ok(g);
        }
        let generators: Vec<Vec<Vec<f64>>> = (0..self.positive_roots.len())
            .map(|i| self.reflection_matrix(i))
            .collect();
        let identity: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut elements: Vec<GroupElement> =
            vec![GroupElement { matrix: identity, word: vec![] }];
        let mut frontier: Vec<usize> = vec![0];
        let mut iterations = 0usize;
        while !frontier.is_empty() {
            let mut next_frontier = Vec::new();
            for &ei in &frontier {
                for (gi, gen) in generators.iter().enumerate() {
                    iterations += 1;
                    if iterations > GROUP_ITERATION_CAP {
                        return Err(RootSystemError::GroupGenerationFailure);
                    }
                    let candidate = mat_mul(gen, &elements[ei].matrix);
                    let seen = elements
                        .iter()
                        .any(|e| mat_close(&e.matrix, &candidate, MATRIX_DEDUP_TOL));
                    if !seen {
                        let mut word = vec![gi];
                        word.extend_from_slice(&elements[ei].word);
                        elements.push(GroupElement { matrix: candidate, word });
                        next_frontier.push(elements.len() - 1);
                    }
                }
            }
            frontier = next_frontier;
        }
        let _ = self.group.set(elements);
        Ok(self.group.get().expect("group cache just set"))
    }

    /// Group order `|G|`, equal to the number of Weyl chambers.
    pub fn group_order(&self) -> Result<usize, RootSystemError> {
        Ok(self.generate_group()?.len())
    }

    /// Exact rational matrices of all group elements, when every generating
    /// reflection has one (composed along each element's word).
    pub fn rational_group_matrices(&self) -> Result<Option<Vec<Vec<Vec<BigRational>>>>, RootSystemError> {
        if self.rational_reflections.iter().any(|r| r.is_none()) {
            return Ok(None);
        }
        let group = self.generate_group()?;
        let id: Vec<Vec<BigRational>> = (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(group.len());
        for g in group {
            let mut m = id.clone();
            // word lists generator indices applied right-to-left
            for &gi in g.word.iter() {
                let refl = self.rational_reflections[gi].as_ref().expect("checked above");
                m = rational_mat_mul(&m, refl);
            }
            out.push(m);
        }
        Ok(Some(out))
    }

    /// Dense f64 reflection matrix for the root. Built from the exact
    /// rational direction when one exists, so that e.g. signed-permutation
    /// reflections carry exact 0/±1 entries; the float formula `I - a a^T`
    /// is the fallback.
    pub fn reflection_matrix(&self, root_idx: usize) -> Vec<Vec<f64>> {
        if let Some(m) = self.rational_reflections[root_idx].as_ref() {
            return m
                .iter()
                .map(|row| row.iter().map(rational_to_f64).collect())
                .collect();
        }
        let a = &self.positive_roots[root_idx];
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| (if i == j { 1.0 } else { 0.0 }) - a[i] * a[j])
                    .collect()
            })
            .collect()
    }

    /// Label the chamber containing `x`, or fail if `x` lies on a wall.
    pub fn chamber_index(&self, x: &[f64]) -> Result<ChamberId, RootSystemError> {
        let mut signs = Vec::with_capacity(self.positive_roots.len());
        for i in 0..self.positive_roots.len() {
            if self.on_wall(i, x) {
                return Err(RootSystemError::OnWall);
            }
            signs.push(if self.inner_with_root(i, x) > 0.0 { 1 } else { -1 });
        }
        Ok(ChamberId { signs })
    }

    /// A point interior to the fundamental chamber (all inner products
    /// positive), found by averaging the positive roots and polishing.
    pub fn fundamental_chamber_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for r in &self.positive_roots {
            for (xi, ri) in x.iter_mut().zip(r) {
                *xi += ri;
            }
        }
        let n = norm(&x);
        if n > 1e-12 && (0..self.positive_roots.len()).all(|i| self.inner_with_root(i, &x) > 1e-9) {
            return x.iter().map(|c| c / n).collect();
        }
        // Degenerate sum (possible for custom systems): randomized search.
        let mut state = 0x9E3779B97F4A7C15u64;
        for _ in 0..10_000 {
            let mut cand = vec![0.0; self.dim];
            for c in cand.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *c = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            }
            if (0..self.positive_roots.len()).all(|i| self.inner_with_root(i, &cand) > 1e-6) {
                let n = norm(&cand);
                return cand.iter().map(|c| c / n).collect();
            }
        }
        x
    }

    /// Serialize as `{dim, positive_roots, multiplicities: {orbit_index: k}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mult: BTreeMap<String, f64> = self
            .orbit_multiplicity
            .iter()
            .enumerate()
            .map(|(i, &k)| (i.to_string(), k))
            .collect();
        serde_json::json!({
            "dim": self.dim,
            "positive_roots": self.positive_roots,
            "multiplicities": mult,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, RootSystemError> {
        #[derive(Deserialize)]
        struct RootSystemJson {
            dim: usize,
            positive_roots: Vec<Vec<f64>>,
            multiplicities: BTreeMap<String, f64>,
        }
        let parsed: RootSystemJson = serde_json::from_value(value.clone())
            .map_err(|e| RootSystemError::Serialization(e.to_string()))?;
        // Two-phase: recover the (deterministic) orbit structure from the
        // roots alone, then assign per-orbit multiplicities from the map.
        let probe = Self::construct(
            parsed.dim,
            parsed.positive_roots.clone(),
            vec![0.0; parsed.positive_roots.len()],
        )?;
        let mut per_root = vec![0.0; parsed.positive_roots.len()];
        for (key, &k) in &parsed.multiplicities {
            let orbit: usize = key
                .parse()
                .map_err(|_| RootSystemError::Serialization(format!("bad orbit key {key}")))?;
            if orbit >= probe.num_orbits() {
                return Err(RootSystemError::Serialization(format!(
                    "orbit index {orbit} out of range"
                )));
            }
            for (i, &o) in probe.orbit_of_root.iter().enumerate() {
                if o == orbit {
                    per_root[i] = k;
                }
            }
        }
        if parsed.multiplicities.len() != probe.num_orbits() {
            return Err(RootSystemError::Serialization(format!(
                "expected {} orbit multiplicities, got {}",
                probe.num_orbits(),
                parsed.multiplicities.len()
            )));
        }
        Self::construct(parsed.dim, parsed.positive_roots, per_root)
    }

    /// Stable content hash of the serialized system (used for cache keys).
    pub fn content_key(&self) -> String {
        let json = self.to_json().to_string();
        // FNV-1a, enough for a cache key.
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// `sigma_a x` for a root with `|a|^2 = 2`.
pub fn reflect_normalized(alpha: &[f64], x: &[f64]) -> Vec<f64> {
    let ip = dot(alpha, x);
    x.iter().zip(alpha).map(|(xi, ai)| xi - ip * ai).collect()
}

fn rationalize_direction(root: &[f64]) -> Option<Vec<BigRational>> {
    let scale = root.iter().cloned().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut dir = Vec::with_capacity(root.len());
    for c in root {
        dir.push(rational_reconstruct(c / scale, 10_000, 1e-9)?);
    }
    // Verify the rational direction really is parallel to the root.
    let df: Vec<f64> = dir.iter().map(rational_to_f64).collect();
    let nd = norm(&df);
    if nd < 1e-14 {
        return None;
    }
    let cosine = dot(&df, root) / (nd * norm(root));
    if (cosine.abs() - 1.0).abs() < 1e-9 {
        Some(dir)
    } else {
        None
    }
}

/// `I - 2 d d^T / |d|^2` with exact rational entries.
fn rational_reflection_matrix(d: &[BigRational]) -> Vec<Vec<BigRational>> {
    let norm_sq: BigRational = d.iter().map(|c| c * c).sum();
    let two = BigRational::from_integer(2.into());
    let factor = two / norm_sq;
    (0..d.len())
        .map(|i| {
            (0..d.len())
                .map(|j| {
                    let delta = if i == j { BigRational::one() } else { BigRational::zero() };
                    delta - &factor * &d[i] * &d[j]
                })
                .collect()
        })
        .collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

fn rational_mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|l| &a[i][l] * &b[l][j]).sum())
                .collect()
        })
        .collect()
}

fn mat_close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(ra, rb)| ra.iter().zip(rb).all(|(x, y)| (x - y).abs() < tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecmath::norm_sq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()
    }

    #[test]
    fn type_a_roots_and_gamma() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        assert_eq!(rs.num_positive_roots(), 3);
        assert_eq!(rs.dim(), 3);
        // e1-e2, e1-e3, e2-e3
        assert_eq!(rs.positive_roots()[0], vec![1.0, -1.0, 0.0]);
        assert_eq!(rs.positive_roots()[1], vec![1.0, 0.0, -1.0]);
        assert_eq!(rs.positive_roots()[2], vec![0.0, 1.0, -1.0]);
        assert!((rs.gamma() - 3.0).abs() < 1e-15);
        assert_eq!(rs.num_orbits(), 1);
    }

    #[test]
    fn type_a_k_zero_gamma() {
        let rs = RootSystem::build_type_a(2, 0.0).unwrap();
        assert_eq!(rs.gamma(), 0.0);
    }

    #[test]
    fn type_a_rejects_dimension_one() {
        assert!(matches!(
            RootSystem::build_type_a(1, 1.0),
            Err(RootSystemError::InvalidDimension(_))
        ));
        assert!(matches!(
            RootSystem::build_type_b(1, 1.0, 1.0),
            Err(RootSystemError::InvalidDimension(_))
        ));
    }

    #[test]
    fn type_b_roots_and_gamma() {
        let rs = RootSystem::build_type_b(2, 1.0, 1.0).unwrap();
        assert_eq!(rs.num_positive_roots(), 4); // sqrt2 e1, sqrt2 e2, e1-e2, e1+e2
        assert!((rs.gamma() - 4.0).abs() < 1e-15);
        assert_eq!(rs.num_orbits(), 2);
        for r in rs.positive_roots() {
            assert!((norm_sq(r) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn type_b_zero_multiplicity_weight_is_one() {
        let rs = RootSystem::build_type_b(2, 0.0, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = random_point(&mut rng, 2);
            assert!((rs.weight(&x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn weight_value_and_homogeneity() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        let x = [3.0, 2.0, 1.0];
        // squared differences: (1*2*1)^2 = 4
        assert!((rs.weight(&x) - 4.0).abs() < 1e-12);
        let x2: Vec<f64> = x.iter().map(|c| 2.0 * c).collect();
        // homogeneity degree 2*gamma = 6: 2^6 * 4 = 256
        assert!((rs.weight(&x2) - 256.0).abs() < 1e-9);
    }

    #[test]
    fn weight_is_group_invariant() {
        for rs in [
            RootSystem::build_type_a(3, 1.0).unwrap(),
            RootSystem::build_type_b(2, 0.5, 1.5).unwrap(),
        ] {
            let group = rs.generate_group().unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(11);
            for _ in 0..1000 {
                let x = random_point(&mut rng, rs.dim());
                let w = rs.weight(&x);
                for g in group {
                    let gx = g.apply(&x);
                    assert!(
                        (rs.weight(&gx) - w).abs() <= 1e-12 * w.abs().max(1e-300),
                        "weight not invariant"
                    );
                }
            }
        }
    }

    #[test]
    fn reflect_acts_as_transposition_for_type_a() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        let alpha = [1.0, -1.0, 0.0];
        let y = rs.reflect(&alpha, &[3.0, 2.0, 1.0]).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-14);
        assert!((y[1] - 3.0).abs() < 1e-14);
        assert!((y[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reflect_fixes_the_wall_and_is_an_involution() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        let alpha = [1.0, -1.0, 0.0];
        let x = [2.0, 2.0, -1.0];
        let y = rs.reflect(&alpha, &x).unwrap();
        assert_eq!(y, x.to_vec());
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_point(&mut rng, 3);
            let y = rs.reflect(&alpha, &x).unwrap();
            let z = rs.reflect(&alpha, &y).unwrap();
            for (a, b) in x.iter().zip(&z) {
                assert!((a - b).abs() < 1e-13);
            }
            assert!((norm_sq(&x) - norm_sq(&y)).abs() < 1e-14 * (1.0 + norm_sq(&x)));
        }
    }

    #[test]
    fn reflect_rejects_non_roots() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        assert!(matches!(
            rs.reflect(&[1.0, 1.0, 0.0], &[1.0, 2.0, 3.0]),
            Err(RootSystemError::UnknownRoot)
        ));
    }

    #[test]
    fn group_orders() {
        assert_eq!(RootSystem::build_type_a(2, 1.0).unwrap().group_order().unwrap(), 2);
        assert_eq!(RootSystem::build_type_a(3, 1.0).unwrap().group_order().unwrap(), 6);
        assert_eq!(RootSystem::build_type_a(4, 1.0).unwrap().group_order().unwrap(), 24);
        assert_eq!(RootSystem::build_type_b(2, 1.0, 1.0).unwrap().group_order().unwrap(), 8);
        assert_eq!(RootSystem::build_type_b(3, 1.0, 1.0).unwrap().group_order().unwrap(), 48);
        assert_eq!(RootSystem::rank_one(1.5).unwrap().group_order().unwrap(), 2);
    }

    #[test]
    fn group_elements_permute_the_roots() {
        let rs = RootSystem::build_type_b(2, 1.0, 1.0).unwrap();
        let group = rs.generate_group().unwrap();
        for g in group {
            for r in rs.positive_roots() {
                let gr = g.apply(r);
                assert!(rs.root_index_of(&gr).is_some(), "group element must map R onto R");
            }
            // orthogonality
            for i in 0..2 {
                for j in 0..2 {
                    let col_i: Vec<f64> = g.matrix.iter().map(|row| row[i]).collect();
                    let col_j: Vec<f64> = g.matrix.iter().map(|row| row[j]).collect();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&col_i, &col_j) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn chamber_index_examples() {
        let rs = RootSystem::build_type_a(3, 1.0).unwrap();
        let c = rs.chamber_index(&[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(c.signs, vec![1, 1, 1]);
        let c = rs.chamber_index(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.signs, vec![-1, -1, -1]);
        assert!(matches!(
            rs.chamber_index(&[2.0, 2.0, 1.0]),
            Err(RootSystemError::OnWall)
        ));
    }

    #[test]
    fn chamber_count_matches_group_order() {
        for rs in [
            RootSystem::build_type_a(3, 1.0).unwrap(),
            RootSystem::build_type_a(4, 1.0).unwrap(),
            RootSystem::build_type_b(2, 1.0, 1.0).unwrap(),
        ] {
            let order = rs.group_order().unwrap();
            let mut seen = std::collections::HashSet::new();
            let mut rng = ChaCha12Rng::seed_from_u64(5);
            for _ in 0..10_000 {
                let x = random_point(&mut rng, rs.dim());
                if let Ok(c) = rs.chamber_index(&x) {
                    seen.insert(c.signs);
                }
            }
            assert_eq!(seen.len(), order);
        }
    }

    #[test]
    fn custom_rank_one_system() {
        let rs = RootSystem::build_custom(vec![vec![std::f64::consts::SQRT_2]], vec![0.75]).unwrap();
        assert_eq!(rs.group_order().unwrap(), 2);
        assert!((rs.gamma() - 0.75).abs() < 1e-15);
        assert!(rs.rational_direction(0).is_some());
    }

    #[test]
    fn custom_rejects_unequal_multiplicities_on_one_orbit() {
        // All three A_2 roots lie in one orbit.
        let roots = vec![
            vec![1.0, -1.0, 0.0],
            vec![1.0, 0.0, -1.0],
            vec![0.0, 1.0, -1.0],
        ];
        let err = RootSystem::build_custom(roots, vec![1.0, 1.0, 2.0]).unwrap_err();
        assert!(matches!(err, RootSystemError::InvalidMultiplicity(_)));
    }

    #[test]
    fn custom_rejects_broken_closure() {
        // A_2 with one root removed is not closed under its reflections.
        let roots = vec![vec![1.0, -1.0, 0.0], vec![1.0, 0.0, -1.0]];
        let err = RootSystem::build_custom(roots, vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, RootSystemError::NotARootSystem(_)));
    }

    #[test]
    fn custom_rescales_input_roots() {
        let rs = RootSystem::build_custom(vec![vec![5.0]], vec![1.0]).unwrap();
        assert!((norm_sq(&rs.positive_roots()[0]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_preserves_orbit_multiplicities() {
        let rs = RootSystem::build_type_b(2, 0.5, 1.25).unwrap();
        let value = rs.to_json();
        assert!(value.get("dim").is_some());
        assert!(value.get("positive_roots").is_some());
        assert!(value.get("multiplicities").is_some());
        let back = RootSystem::from_json(&value).unwrap();
        assert_eq!(back.num_positive_roots(), rs.num_positive_roots());
        assert!((back.gamma() - rs.gamma()).abs() < 1e-14);
        for i in 0..rs.num_positive_roots() {
            assert!((back.multiplicity(i) - rs.multiplicity(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn rational_group_matrices_exist_for_built_ins() {
        let rs = RootSystem::build_type_b(2, 1.0, 1.0).unwrap();
        let mats = rs.rational_group_matrices().unwrap().unwrap();
        assert_eq!(mats.len(), 8);
        // Each rational matrix must match the float matrix of its element.
        let group = rs.generate_group().unwrap();
        for (g, m) in group.iter().zip(&mats) {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((rational_to_f64(&m[i][j]) - g.matrix[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}
