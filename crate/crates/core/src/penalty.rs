//! Closed-form sparsifiers for the penalized rank-one subproblems.
//!
//! Given `m = M v` (or `Mᵀ u`), a sparsifier returns the unnormalized
//! maximizer direction of `uᵀm - pen(u)` over the unit ball. Parameters are
//! used exactly as they appear in the closed forms: lasso thresholds at
//! `λ`, group lasso shrinks block `k` by `(λ/2)√p_k`, and sparse-group
//! lasso soft-thresholds at `λα/2` before a block shrink at `λ(1-α)√p_k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::Vector;
use crate::{PlsError, Result};

/// Contiguous partition of a variable axis into groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct GroupStructure {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl GroupStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(PlsError::InvalidGroups("no groups given".into()));
        }
        if let Some(k) = sizes.iter().position(|&s| s == 0) {
            return Err(PlsError::InvalidGroups(format!("group {} has size 0", k + 1)));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(GroupStructure { sizes, offsets })
    }

    /// `count` groups of equal `size`.
    pub fn uniform(count: usize, size: usize) -> Result<Self> {
        Self::new(vec![size; count])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Total number of variables covered.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(PlsError::InvalidGroups(format!(
                "group sizes sum to {}, axis has {dim} variables",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Indices (0-based) of groups holding at least one nonzero entry.
    pub fn selected(&self, x: &[f64]) -> Vec<usize> {
        (0..self.len()).filter(|&k| x[self.range(k)].iter().any(|&v| v != 0.0)).collect()
    }
}

impl TryFrom<Vec<usize>> for GroupStructure {
    type Error = PlsError;
    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        GroupStructure::new(sizes)
    }
}

impl From<GroupStructure> for Vec<usize> {
    fn from(g: GroupStructure) -> Vec<usize> {
        g.sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    None,
    Lasso,
    Group,
    SparseGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    /// Lasso share for sparse-group; ignored otherwise.
    pub alpha: f64,
    pub groups: Option<GroupStructure>,
}

impl PenaltySpec {
    pub fn none() -> Self {
        PenaltySpec { kind: PenaltyKind::None, lambda: 0.0, alpha: 0.0, groups: None }
    }

    pub fn lasso(lambda: f64) -> Self {
        PenaltySpec { kind: PenaltyKind::Lasso, lambda, alpha: 0.0, groups: None }
    }

    pub fn group(lambda: f64, groups: GroupStructure) -> Self {
        PenaltySpec { kind: PenaltyKind::Group, lambda, alpha: 0.0, groups: Some(groups) }
    }

    pub fn sparse_group(lambda: f64, alpha: f64, groups: GroupStructure) -> Self {
        PenaltySpec { kind: PenaltyKind::SparseGroup, lambda, alpha, groups: Some(groups) }
    }

    /// True when the sparsifier is the identity map.
    pub fn is_identity(&self) -> bool {
        self.kind == PenaltyKind::None || self.lambda == 0.0
    }

    /// Check parameters, and the group partition against `dim` when given.
    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(PlsError::InvalidInput(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let grouped = matches!(self.kind, PenaltyKind::Group | PenaltyKind::SparseGroup);
        if self.kind == PenaltyKind::SparseGroup && !(0.0..=1.0).contains(&self.alpha) {
            return Err(PlsError::InvalidInput(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        match (&self.groups, grouped) {
            (None, true) => {
                Err(PlsError::InvalidGroups("group penalty needs a group structure".into()))
            }
            (Some(_), false) => Err(PlsError::InvalidGroups(
                "group structure given for a penalty without groups".into(),
            )),
            (Some(g), true) => dim.map_or(Ok(()), |d| g.check_dim(d)),
            (None, false) => Ok(()),
        }
    }

    /// Penalty value consistent with the closed form, so that
    /// `uᵀMv - pen_u(u) - pen_v(v)` never decreases along the alternating updates.
    pub fn objective_penalty(&self, x: &[f64]) -> f64 {
        if self.is_identity() {
            return 0.0;
        }
        let l1 = || x.iter().map(|v| v.abs()).sum::<f64>();
        let grp = |g: &GroupStructure| {
            (0..g.len())
                .map(|k| {
                    let r = g.range(k);
                    (r.len() as f64).sqrt() * x[r].iter().map(|v| v * v).sum::<f64>().sqrt()
                })
                .sum::<f64>()
        };
        match (self.kind, &self.groups) {
            (PenaltyKind::Lasso, _) => self.lambda * l1(),
            (PenaltyKind::Group, Some(g)) => 0.5 * self.lambda * grp(g),
            (PenaltyKind::SparseGroup, Some(g)) => {
                0.5 * self.lambda * self.alpha * l1() + self.lambda * (1.0 - self.alpha) * grp(g)
            }
            _ => 0.0,
        }
    }
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec::none()
    }
}

/// `sign(x) (|x| - λ)₊`.
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    let a = x.abs() - lambda;
    if a > 0.0 {
        a.copysign(x)
    } else {
        0.0
    }
}

/// Apply the sparsifier selected by `spec` to `m`.
pub fn sparsify(m: &Vector, spec: &PenaltySpec) -> Result<Vector> {
    spec.validate(Some(m.len()))?;
    if spec.is_identity() {
        return Ok(m.clone());
    }
    let lambda = spec.lambda;
    let mut out = m.clone();
    match spec.kind {
        PenaltyKind::None => {}
        PenaltyKind::Lasso => out.apply(|x| *x = soft_threshold(*x, lambda)),
        PenaltyKind::Group => {
            let g = spec.groups.as_ref().expect("validated");
            for k in 0..g.len() {
                let r = g.range(k);
                let block = &mut out.as_mut_slice()[r];
                let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
                let factor = if norm > 0.0 {
                    1.0 - 0.5 * lambda * (block.len() as f64).sqrt() / norm
                } else {
                    0.0
                };
                if factor > 0.0 {
                    block.iter_mut().for_each(|v| *v *= factor);
                } else {
                    block.fill(0.0);
                }
            }
        }
        PenaltyKind::SparseGroup => {
            let g = spec.groups.as_ref().expect("validated");
            let alpha = spec.alpha;
            for k in 0..g.len() {
                let r = g.range(k);
                let block = &mut out.as_mut_slice()[r];
                let sqrt_pk = (block.len() as f64).sqrt();
                block.iter_mut().for_each(|v| *v = soft_threshold(*v, 0.5 * lambda * alpha));
                let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
                let shrink = lambda * (1.0 - alpha) * sqrt_pk;
                // at alpha = 1 the zero test reduces to g1 = 0
                let zero = norm == 0.0 || (alpha < 1.0 && norm <= shrink);
                if zero {
                    block.fill(0.0);
                } else {
                    let factor = 0.5 - 0.5 * shrink / norm;
                    block.iter_mut().for_each(|v| *v *= factor);
                }
            }
        }
    }
    Ok(out)
}

/// Worst angular deviations observed by [`sparsifier_limits_check`], in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitsReport {
    pub trials: usize,
    /// Sparse-group at `α = 1` against lasso at `λ/2`.
    pub alpha_one: f64,
    /// Sparse-group at `α = 0` against group lasso at `2λ`.
    pub alpha_zero: f64,
    /// Sparse-group at `λ = 0` against the input itself.
    pub lambda_zero: f64,
}

impl LimitsReport {
    pub fn max_deviation(&self) -> f64 {
        self.alpha_one.max(self.alpha_zero).max(self.lambda_zero)
    }
}

/// Angle between two vectors; zero when both vanish, `π` when exactly one does.
pub fn angle_between(a: &Vector, b: &Vector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => std::f64::consts::PI,
        _ => {
            let d = (a / na - b / nb).norm();
            2.0 * (0.5 * d).min(1.0).asin()
        }
    }
}

/// Check the α-limits of the sparse-group sparsifier on seeded random inputs.
///
/// Uses the lambda and group structure of `spec` (any kind carrying groups).
pub fn sparsifier_limits_check(spec: &PenaltySpec, trials: usize, seed: u64) -> Result<LimitsReport> {
    let groups = spec
        .groups
        .clone()
        .ok_or_else(|| PlsError::InvalidGroups("limits check needs a group structure".into()))?;
    let lambda = spec.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = LimitsReport { trials, alpha_one: 0.0, alpha_zero: 0.0, lambda_zero: 0.0 };
    for _ in 0..trials {
        let m = Vector::from_fn(groups.dim(), |_, _| 3.0 * rng.sample::<f64, _>(StandardNormal));
        let sg1 = sparsify(&m, &PenaltySpec::sparse_group(lambda, 1.0, groups.clone()))?;
        let la = sparsify(&m, &PenaltySpec::lasso(0.5 * lambda))?;
        rep.alpha_one = rep.alpha_one.max(angle_between(&sg1, &la));

        let sg0 = sparsify(&m, &PenaltySpec::sparse_group(lambda, 0.0, groups.clone()))?;
        let gr = sparsify(&m, &PenaltySpec::group(2.0 * lambda, groups.clone()))?;
        rep.alpha_zero = rep.alpha_zero.max(angle_between(&sg0, &gr));

        let alpha = rng.random::<f64>();
        let sgl = sparsify(&m, &PenaltySpec::sparse_group(0.0, alpha, groups.clone()))?;
        rep.lambda_zero = rep.lambda_zero.max(angle_between(&sgl, &m));
    }
    Ok(rep)
}
