//! The unified alternating PLS algorithm and its outputs.
//!
//! All four methods share one component loop: take the leading singular
//! triple of the current cross-product `M`, refine it with the penalized
//! alternating updates, then deflate. They differ only in the deflation
//! and in how weights are mapped back onto the original variables.

mod dummy;
mod engine;
mod inner;
mod regression;
mod simpls;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::{
    apply_centering, check_finite, ColumnMoments, DenseMatrix, Vector, DEFAULT_SVD_MAX_ITER,
    DEFAULT_SVD_TOL,
};
use crate::penalty::PenaltySpec;
use crate::{PlsError, Result};

pub use dummy::{encode_dummy, DummyResponse};
pub use engine::CrossProducts;
pub use inner::{
    inner_loop, penalized_objective, InnerOptions, InnerResult, DEFAULT_EPS,
    DEFAULT_INNER_MAX_ITER,
};
pub use regression::{classify, classify_labels, predict, regression_coefficients};

/// Ridge regularization of the covariance inverses in regularized CCA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Ridge {
    /// `(XᵀX + λ_x I)^{-1/2}`.
    Additive { x: f64, y: f64 },
    /// `((1-λ*_x) XᵀX + λ*_x I)^{-1/2}`; `λ* = 1` gives PLS-SVD, `λ* = 0` plain CCA.
    Convex { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PlsMode {
    /// Mode (i): SVD of `XᵀY` with rank-one deflation of `M` only.
    PlsSvd,
    /// Mode (ii): both blocks deflated by their own scores.
    PlsW2a,
    /// Mode (iii): PLS-SVD on whitened blocks.
    Rcca { ridge: Ridge },
    /// Mode (iv): PLS regression (NIPALS), or SIMPLS when `simpls` is set.
    PlsR { scaled: bool, simpls: bool },
}

impl PlsMode {
    pub fn svd() -> Self {
        PlsMode::PlsSvd
    }
    pub fn w2a() -> Self {
        PlsMode::PlsW2a
    }
    pub fn rcca_convex(x: f64, y: f64) -> Self {
        PlsMode::Rcca { ridge: Ridge::Convex { x, y } }
    }
    pub fn rcca_ridge(x: f64, y: f64) -> Self {
        PlsMode::Rcca { ridge: Ridge::Additive { x, y } }
    }
    /// Unscaled NIPALS regression.
    pub fn regression() -> Self {
        PlsMode::PlsR { scaled: false, simpls: false }
    }
    pub fn regression_scaled() -> Self {
        PlsMode::PlsR { scaled: true, simpls: false }
    }
    pub fn simpls() -> Self {
        PlsMode::PlsR { scaled: false, simpls: true }
    }

    pub fn is_regression(&self) -> bool {
        matches!(self, PlsMode::PlsR { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlsMode::PlsSvd => "pls-svd",
            PlsMode::PlsW2a => "pls-w2a",
            PlsMode::Rcca { .. } => "rcca",
            PlsMode::PlsR { .. } => "pls-r",
        }
    }

    fn validate(&self) -> Result<()> {
        if let PlsMode::Rcca { ridge } = self {
            let ok = match *ridge {
                Ridge::Additive { x, y } => x >= 0.0 && y >= 0.0,
                Ridge::Convex { x, y } => (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y),
            };
            if !ok {
                return Err(PlsError::InvalidInput(format!("invalid ridge parameters {ridge:?}")));
            }
        }
        Ok(())
    }

    /// Largest number of components the mode can extract.
    pub fn component_cap(&self, n: usize, p: usize, q: usize) -> usize {
        let n1 = n.saturating_sub(1);
        match self {
            PlsMode::PlsR { .. } => p.min(n1),
            _ => p.min(q).min(n1),
        }
    }
}

impl fmt::Display for PlsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlsMode {
    type Err = PlsError;
    /// Parses the base mode; rCCA defaults to `λ* = 0` on both sides.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pls-svd" | "svd" => Ok(PlsMode::svd()),
            "pls-w2a" | "w2a" => Ok(PlsMode::w2a()),
            "rcca" | "cca" => Ok(PlsMode::rcca_convex(0.0, 0.0)),
            "pls-r" | "plsr" | "regression" => Ok(PlsMode::regression()),
            other => Err(PlsError::InvalidInput(format!("unknown mode '{other}'"))),
        }
    }
}

/// How the in-memory fit maintains the deflated cross-products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Deflate the data blocks and recompute `M = X_hᵀY_h` each component.
    #[default]
    Explicit,
    /// Work only on the `p×q`, `p×p`, `q×q` products through the `M_h` recursions.
    Recursion,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub center: bool,
    pub scale: bool,
    pub eps: f64,
    pub max_iter: usize,
    pub svd_tol: f64,
    pub svd_max_iter: usize,
    /// Stop once the leading singular value of `M_h` drops below this fraction of the first.
    pub rank_tol: f64,
    pub engine: Engine,
    /// Materialize the score matrices (always possible in memory; one extra pass when chunked).
    pub keep_scores: bool,
    /// Chunked path: reduce per-chunk products in parallel (order no longer fixed).
    pub parallel_reduce: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            center: true,
            scale: false,
            eps: DEFAULT_EPS,
            max_iter: DEFAULT_INNER_MAX_ITER,
            svd_tol: DEFAULT_SVD_TOL,
            svd_max_iter: DEFAULT_SVD_MAX_ITER,
            rank_tol: 1e-10,
            engine: Engine::Explicit,
            keep_scores: true,
            parallel_reduce: false,
        }
    }
}

impl FitOptions {
    pub(crate) fn inner(&self) -> InnerOptions {
        InnerOptions { eps: self.eps, max_iter: self.max_iter, trace: false }
    }
}

/// Why extraction ended before the requested number of components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum EarlyStop {
    /// The request exceeded the mode's component cap.
    Capped { requested: usize, cap: usize },
    /// `M_h` has no remaining signal at this (1-based) component.
    RankExhausted { component: usize },
    /// A sparsifier zeroed a weight vector at this component.
    DegenerateWeight { component: usize },
    /// The score of this component has zero norm.
    ScoreVanished { component: usize },
}

impl fmt::Display for EarlyStop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EarlyStop::Capped { requested, cap } => {
                write!(f, "requested {requested} components, capped at {cap}")
            }
            EarlyStop::RankExhausted { component } => {
                write!(f, "rank exhausted at component {component}")
            }
            EarlyStop::DegenerateWeight { component } => {
                write!(f, "penalty zeroed the weights of component {component}")
            }
            EarlyStop::ScoreVanished { component } => {
                write!(f, "score of component {component} vanished")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Leading singular value of `M_{h-1}` used as the starting point.
    pub init_delta: f64,
    /// The iterative leading-triple solver failed and the full SVD was used.
    pub init_fallback: bool,
}

/// Linear maps from the processed (centered/scaled) blocks to the scores:
/// `Ξ = X·rx` and `Ω = Y·ry + X·ryx`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreMap {
    pub rx: DenseMatrix,
    pub ry: DenseMatrix,
    /// Only present for PLS regression, where Y-scores use the deflated Y.
    pub ryx: Option<DenseMatrix>,
}

impl ScoreMap {
    pub fn x_scores(&self, x: &DenseMatrix) -> DenseMatrix {
        x * &self.rx
    }

    pub fn y_scores(&self, x: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
        let mut om = y * &self.ry;
        if let Some(ryx) = &self.ryx {
            om += x * ryx;
        }
        om
    }
}

/// Column statistics used to process the blocks before fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Centering {
    pub x_means: Vector,
    /// Column standard deviations when scaling was applied (0 marks constant columns).
    pub x_scales: Option<Vector>,
    pub y_means: Vector,
    pub y_scales: Option<Vector>,
}

impl Centering {
    pub(crate) fn from_moments(
        mx: &ColumnMoments,
        my: &ColumnMoments,
        center: bool,
        scale: bool,
    ) -> Self {
        let mean = |m: &ColumnMoments| {
            if center {
                Vector::from_column_slice(&m.mean)
            } else {
                Vector::zeros(m.mean.len())
            }
        };
        Centering {
            x_means: mean(mx),
            x_scales: scale.then(|| Vector::from_vec(mx.sds())),
            y_means: mean(my),
            y_scales: scale.then(|| Vector::from_vec(my.sds())),
        }
    }

    pub fn process_x(&self, x: &mut DenseMatrix) {
        apply_centering(x, self.x_means.as_slice(), self.x_scales.as_ref().map(|s| s.as_slice()));
    }

    pub fn process_y(&self, y: &mut DenseMatrix) {
        apply_centering(y, self.y_means.as_slice(), self.y_scales.as_ref().map(|s| s.as_slice()));
    }

    /// Map processed Y values back to original units.
    pub fn restore_y(&self, y: &mut DenseMatrix) {
        for (j, mut col) in y.column_iter_mut().enumerate() {
            let sd = match &self.y_scales {
                Some(s) if s[j] > 0.0 => s[j],
                _ => 1.0,
            };
            let mu = self.y_means[j];
            col.apply(|v| *v = *v * sd + mu);
        }
    }
}

/// Everything a fit produces. Column `h` of each matrix belongs to component `h+1`.
///
/// Serializes to JSON losslessly (with `serde_json`'s `float_roundtrip`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlsFit {
    pub mode: PlsMode,
    pub pen_u: PenaltySpec,
    pub pen_v: PenaltySpec,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub requested_components: usize,
    pub centering: Centering,
    /// Weights `u_h` (in the whitened space for rCCA).
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    /// Adjusted weights: `Ξ = X·w_adj` on the processed original variables.
    pub w_adj: DenseMatrix,
    pub z_adj: DenseMatrix,
    /// `c_h = X_{h-1}ᵀξ_h / ‖ξ_h‖²`.
    pub x_loadings: DenseMatrix,
    /// `d_h = Y_{h-1}ᵀξ_h / ‖ξ_h‖²` for regression, `e_h = Y_{h-1}ᵀω_h / ‖ω_h‖²` otherwise.
    pub y_loadings: DenseMatrix,
    /// Regression only: `g_h = Y_{h-1}ᵀω_h / ‖ω_h‖²`.
    pub y_score_loadings: Option<DenseMatrix>,
    /// `δ_h = u_hᵀ M_{h-1} v_h`.
    pub deltas: Vector,
    /// Inner-relation coefficients `p_h` (regression) or `ξᵀω / ‖ξ‖²`.
    pub inner_coefs: Vector,
    pub score_map: ScoreMap,
    pub x_scores: Option<DenseMatrix>,
    pub y_scores: Option<DenseMatrix>,
    /// Regression coefficients on the processed scale.
    pub coefficients: Option<DenseMatrix>,
    /// Fitted responses in original units (regression, in-memory fits).
    pub fitted: Option<DenseMatrix>,
    pub diagnostics: Vec<ComponentDiagnostics>,
    pub stops: Vec<EarlyStop>,
    /// Class names in dummy-column order, for discriminant fits.
    pub classes: Option<Vec<String>>,
}

impl PlsFit {
    pub fn n_components(&self) -> usize {
        self.u.ncols()
    }

    /// True when every component's inner loop met the tolerance.
    pub fn converged(&self) -> bool {
        self.diagnostics.iter().all(|d| d.converged)
    }

    /// 0-based groups with nonzero X-weights on component `h` (0-based).
    /// `None` without a group structure or past the last component.
    pub fn selected_groups_u(&self, h: usize) -> Option<Vec<usize>> {
        let g = self.pen_u.groups.as_ref().filter(|_| h < self.n_components())?;
        Some(g.selected(self.u.column(h).as_slice()))
    }

    pub fn selected_groups_v(&self, h: usize) -> Option<Vec<usize>> {
        let g = self.pen_v.groups.as_ref().filter(|_| h < self.n_components())?;
        Some(g.selected(self.v.column(h).as_slice()))
    }

    /// Score matrices computed from processed blocks.
    pub fn scores_for(&self, xp: &DenseMatrix, yp: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
        (self.score_map.x_scores(xp), self.score_map.y_scores(xp, yp))
    }
}

fn check_request(
    n: usize,
    p: usize,
    q: usize,
    h: usize,
    mode: &PlsMode,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
) -> Result<()> {
    if n < 2 {
        return Err(PlsError::InvalidInput("need at least two observations".into()));
    }
    if p == 0 || q == 0 {
        return Err(PlsError::InvalidInput("blocks must have at least one column".into()));
    }
    if h == 0 {
        return Err(PlsError::InvalidInput("number of components must be at least 1".into()));
    }
    if opts.scale && !opts.center {
        return Err(PlsError::InvalidInput("scaling requires centering".into()));
    }
    mode.validate()?;
    pen_u.validate(Some(p))?;
    pen_v.validate(Some(q))?;
    Ok(())
}

/// Fit any of the four modes in memory.
///
/// `x` is `n×p`, `y` is `n×q`. Centering (and optional scaling) is applied
/// per `opts`. The number of stored components can be below `h` when the
/// request exceeds the mode's cap or extraction stops early; the reason is
/// recorded in [`PlsFit::stops`].
pub fn fit(
    x: &DenseMatrix,
    y: &DenseMatrix,
    mode: PlsMode,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
) -> Result<PlsFit> {
    let (n, p) = x.shape();
    let q = y.ncols();
    if y.nrows() != n {
        return Err(PlsError::DimensionMismatch(format!(
            "X has {n} rows, Y has {} rows",
            y.nrows()
        )));
    }
    check_request(n, p, q, h, &mode, pen_u, pen_v, opts)?;
    check_finite(x, "X")?;
    check_finite(y, "Y")?;

    let centering = Centering::from_moments(
        &ColumnMoments::from_block(x),
        &ColumnMoments::from_block(y),
        opts.center,
        opts.scale,
    );
    let mut xp = x.clone();
    let mut yp = y.clone();
    centering.process_x(&mut xp);
    centering.process_y(&mut yp);

    let mut model = match opts.engine {
        Engine::Explicit => engine::fit_explicit(&xp, &yp, mode, h, pen_u, pen_v, opts, centering)?,
        Engine::Recursion => {
            let prods = CrossProducts::from_blocks(&xp, &yp);
            engine::fit_products(&prods, centering, mode, h, pen_u, pen_v, opts)?
        }
    };
    finish_in_memory(&mut model, &xp, &yp, opts);
    Ok(model)
}

pub(crate) fn finish_in_memory(
    model: &mut PlsFit,
    xp: &DenseMatrix,
    yp: &DenseMatrix,
    opts: &FitOptions,
) {
    if opts.keep_scores {
        let (xi, om) = model.scores_for(xp, yp);
        model.x_scores = Some(xi);
        model.y_scores = Some(om);
    }
    if let Some(b) = &model.coefficients {
        let mut yhat = xp * b;
        model.centering.restore_y(&mut yhat);
        model.fitted = Some(yhat);
    }
}

/// SIMPLS variant of PLS regression: weights penalized directly on the original variables.
pub fn fit_simpls(
    x: &DenseMatrix,
    y: &DenseMatrix,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
) -> Result<PlsFit> {
    fit(x, y, PlsMode::simpls(), h, pen_u, pen_v, opts)
}

/// Fit from precomputed cross-products of already processed blocks.
///
/// This is the entry point of the out-of-core path; no scores are attached.
pub fn fit_products(
    prods: &CrossProducts,
    centering: Centering,
    mode: PlsMode,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
) -> Result<PlsFit> {
    let (p, q) = prods.m.shape();
    check_request(prods.n, p, q, h, &mode, pen_u, pen_v, opts)?;
    engine::fit_products(prods, centering, mode, h, pen_u, pen_v, opts)
}

/// Discriminant analysis: PLS regression on the dummy-coded labels.
pub fn fit_plsda<L: Clone + Eq + std::hash::Hash + ToString>(
    x: &DenseMatrix,
    labels: &[L],
    h: usize,
    pen_u: &PenaltySpec,
    opts: &FitOptions,
) -> Result<PlsFit> {
    let dummy = encode_dummy(labels)?;
    let mut model = fit(x, &dummy.y, PlsMode::regression(), h, pen_u, &PenaltySpec::none(), opts)?;
    model.classes = Some(dummy.classes.iter().map(|c| c.to_string()).collect());
    Ok(model)
}
