use crate::linalg::{
    inv_sqrt_sym_rel, svd_full, svd_leading, DenseMatrix, SvdTriple, Vector, DEFAULT_EIGEN_FLOOR,
};
use crate::penalty::PenaltySpec;
use crate::{PlsError, Result};

use super::inner::inner_loop;
use super::regression::nipals_coefficients;
use super::simpls::run_simpls;
use super::{
    Centering, ComponentDiagnostics, EarlyStop, FitOptions, PlsFit, PlsMode, Ridge, ScoreMap,
};

/// Cross-products of processed (centered/scaled) blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossProducts {
    pub n: usize,
    /// `XᵀY`, `p×q`.
    pub m: DenseMatrix,
    /// `XᵀX`, `p×p`.
    pub nxx: DenseMatrix,
    /// `YᵀY`, `q×q`.
    pub kyy: DenseMatrix,
}

impl CrossProducts {
    pub fn from_blocks(x: &DenseMatrix, y: &DenseMatrix) -> Self {
        CrossProducts { n: x.nrows(), m: x.tr_mul(y), nxx: x.tr_mul(x), kyy: y.tr_mul(y) }
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        CrossProducts {
            n: 0,
            m: DenseMatrix::zeros(p, q),
            nxx: DenseMatrix::zeros(p, p),
            kyy: DenseMatrix::zeros(q, q),
        }
    }

    /// Add another block's products (row blocks of the same variables).
    pub fn accumulate(&mut self, other: &CrossProducts) {
        self.n += other.n;
        self.m += &other.m;
        self.nxx += &other.nxx;
        self.kyy += &other.kyy;
    }
}

/// Products involving the undeflated processed blocks.
pub(crate) trait Original {
    fn m(&self) -> &DenseMatrix;
    fn x_gram(&self, w: &Vector) -> Vector;
    fn y_gram(&self, z: &Vector) -> Vector;
    fn x_total_ss(&self) -> f64;
}

struct BlocksOriginal<'a> {
    x: &'a DenseMatrix,
    y: &'a DenseMatrix,
    m: DenseMatrix,
}

impl Original for BlocksOriginal<'_> {
    fn m(&self) -> &DenseMatrix {
        &self.m
    }
    fn x_gram(&self, w: &Vector) -> Vector {
        self.x.tr_mul(&(self.x * w))
    }
    fn y_gram(&self, z: &Vector) -> Vector {
        self.y.tr_mul(&(self.y * z))
    }
    fn x_total_ss(&self) -> f64 {
        self.x.norm_squared()
    }
}

impl Original for CrossProducts {
    fn m(&self) -> &DenseMatrix {
        &self.m
    }
    fn x_gram(&self, w: &Vector) -> Vector {
        &self.nxx * w
    }
    fn y_gram(&self, z: &Vector) -> Vector {
        &self.kyy * z
    }
    fn x_total_ss(&self) -> f64 {
        self.nxx.trace()
    }
}

enum Deflation<'a> {
    /// `M ← (I - uuᵀ) M (I - vvᵀ)`.
    Project { u: &'a Vector, v: &'a Vector },
    /// Both blocks deflated by their own scores.
    Own { u: &'a Vector, c: &'a Vector, xi_sq: f64, v: &'a Vector, e: &'a Vector, om_sq: f64 },
    /// Both blocks deflated by the X-score.
    XScore { u: &'a Vector, c: &'a Vector, xi_sq: f64, d: &'a Vector },
}

/// Current deflated state of the component loop.
trait Workspace {
    fn m(&self) -> &DenseMatrix;
    /// `X_hᵀX_h w`.
    fn x_gram(&self, w: &Vector) -> Vector;
    /// `Y_hᵀY_h z`.
    fn y_gram(&self, z: &Vector) -> Vector;
    fn deflate(&mut self, step: Deflation<'_>);
}

struct ExplicitWs {
    x: DenseMatrix,
    y: DenseMatrix,
    m: DenseMatrix,
}

impl Workspace for ExplicitWs {
    fn m(&self) -> &DenseMatrix {
        &self.m
    }
    fn x_gram(&self, w: &Vector) -> Vector {
        self.x.tr_mul(&(&self.x * w))
    }
    fn y_gram(&self, z: &Vector) -> Vector {
        self.y.tr_mul(&(&self.y * z))
    }
    fn deflate(&mut self, step: Deflation<'_>) {
        match step {
            Deflation::Project { u, v } => {
                let xu = &self.x * u;
                self.x.ger(-1.0, &xu, u, 1.0);
                let yv = &self.y * v;
                self.y.ger(-1.0, &yv, v, 1.0);
            }
            Deflation::Own { u, c, v, e, .. } => {
                let xi = &self.x * u;
                self.x.ger(-1.0, &xi, c, 1.0);
                let om = &self.y * v;
                self.y.ger(-1.0, &om, e, 1.0);
            }
            Deflation::XScore { u, c, d, .. } => {
                let xi = &self.x * u;
                self.x.ger(-1.0, &xi, c, 1.0);
                self.y.ger(-1.0, &xi, d, 1.0);
            }
        }
        self.m = self.x.tr_mul(&self.y);
    }
}

struct RecursionWs {
    m: DenseMatrix,
    n: Option<DenseMatrix>,
    k: Option<DenseMatrix>,
}

impl Workspace for RecursionWs {
    fn m(&self) -> &DenseMatrix {
        &self.m
    }
    fn x_gram(&self, w: &Vector) -> Vector {
        self.n.as_ref().expect("x Gram tracked for this mode") * w
    }
    fn y_gram(&self, z: &Vector) -> Vector {
        self.k.as_ref().expect("y Gram tracked for this mode") * z
    }
    fn deflate(&mut self, step: Deflation<'_>) {
        match step {
            Deflation::Project { u, v } => {
                let t = self.m.tr_mul(u);
                self.m.ger(-1.0, u, &t, 1.0);
                let s = &self.m * v;
                self.m.ger(-1.0, &s, v, 1.0);
            }
            Deflation::Own { u, c, xi_sq, v, e, om_sq } => {
                let t = self.m.tr_mul(u);
                self.m.ger(-1.0, c, &t, 1.0);
                let s = &self.m * v;
                self.m.ger(-1.0, &s, e, 1.0);
                if let Some(n) = &mut self.n {
                    n.ger(-xi_sq, c, c, 1.0);
                }
                if let Some(k) = &mut self.k {
                    k.ger(-om_sq, e, e, 1.0);
                }
            }
            Deflation::XScore { u, c, xi_sq, d } => {
                self.m.ger(-xi_sq, c, d, 1.0);
                let t = self.m.tr_mul(u);
                self.m.ger(-1.0, c, &t, 1.0);
                if let Some(n) = &mut self.n {
                    n.ger(-xi_sq, c, c, 1.0);
                }
                if let Some(k) = &mut self.k {
                    k.ger(-xi_sq, d, d, 1.0);
                }
            }
        }
    }
}

/// Per-component results in `(p, q)` space, before assembly into a [`PlsFit`].
#[derive(Default)]
pub(crate) struct Parts {
    pub u: Vec<Vector>,
    pub v: Vec<Vector>,
    pub w: Vec<Vector>,
    pub z: Vec<Vector>,
    pub c: Vec<Vector>,
    pub d: Vec<Vector>,
    pub g: Vec<Vector>,
    pub deltas: Vec<f64>,
    pub inner: Vec<f64>,
    pub ry: Vec<Vector>,
    pub ryx: Vec<Vector>,
    pub diagnostics: Vec<ComponentDiagnostics>,
    pub stops: Vec<EarlyStop>,
    pub coefficients: Option<DenseMatrix>,
}

/// Outcome of the shared initialization + penalized refinement step.
pub(crate) enum Step {
    Accepted { u: Vector, v: Vector, delta: f64 },
    Stop(EarlyStop),
}

pub(crate) struct Stepper<'a> {
    pub pen_u: &'a PenaltySpec,
    pub pen_v: &'a PenaltySpec,
    pub opts: &'a FitOptions,
    pub first_delta: Option<f64>,
}

impl Stepper<'_> {
    /// Leading triple of `m`, then the penalized loop; records diagnostics.
    pub fn step(&mut self, m: &DenseMatrix, component: usize, parts: &mut Parts) -> Result<Step> {
        let (init, fallback) = leading_triple(m, self.opts)?;
        let exhausted = match self.first_delta {
            None => init.degenerate,
            Some(d1) => init.degenerate || init.delta <= self.opts.rank_tol * d1,
        };
        if exhausted {
            return Ok(Step::Stop(EarlyStop::RankExhausted { component }));
        }
        self.first_delta.get_or_insert(init.delta);

        let mut diag = ComponentDiagnostics {
            iterations: 0,
            converged: true,
            init_delta: init.delta,
            init_fallback: fallback,
        };
        let (u, v) = if self.pen_u.is_identity() && self.pen_v.is_identity() {
            (init.u, init.v)
        } else {
            let r = inner_loop(m, self.pen_u, self.pen_v, &init, &self.opts.inner())?;
            diag.iterations = r.iterations;
            diag.converged = r.converged;
            if r.degenerate {
                parts.diagnostics.push(diag);
                return Ok(Step::Stop(EarlyStop::DegenerateWeight { component }));
            }
            (r.u, r.v)
        };
        parts.diagnostics.push(diag);
        let delta = u.dot(&(m * &v));
        Ok(Step::Accepted { u, v, delta })
    }
}

fn leading_triple(m: &DenseMatrix, opts: &FitOptions) -> Result<(SvdTriple, bool)> {
    match svd_leading(m, opts.svd_tol, opts.svd_max_iter) {
        Ok(t) => Ok((t, false)),
        Err(PlsError::Convergence { .. }) => Ok((svd_full(m)?.leading(), true)),
        Err(e) => Err(e),
    }
}

/// `∏_{j<h} (I - a_j b_jᵀ) x`, the rightmost factor applied first.
fn adjust(x: &Vector, a: &[Vector], b: &[Vector]) -> Vector {
    let mut t = x.clone();
    for (aj, bj) in a.iter().zip(b).rev() {
        let s = bj.dot(&t);
        t.axpy(-s, aj, 1.0);
    }
    t
}

fn vanished(sq: f64, total: f64) -> bool {
    !(sq > 1e-24 * total.max(f64::MIN_POSITIVE))
}

fn run_nipals(
    mode: PlsMode,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
    orig: &dyn Original,
    ws: &mut dyn Workspace,
    transform: Option<&(DenseMatrix, DenseMatrix)>,
) -> Result<Parts> {
    let mut parts = Parts::default();
    let mut stepper = Stepper { pen_u, pen_v, opts, first_delta: None };
    let total = orig.x_total_ss();

    for comp in 1..=h {
        let (u, v, delta) = match stepper.step(ws.m(), comp, &mut parts)? {
            Step::Accepted { u, v, delta } => (u, v, delta),
            Step::Stop(s) => {
                parts.stops.push(s);
                break;
            }
        };

        match mode {
            PlsMode::PlsSvd | PlsMode::Rcca { .. } => {
                let (w, z) = match transform {
                    Some((a, b)) => (a * &u, b * &v),
                    None => (u.clone(), v.clone()),
                };
                let nw = orig.x_gram(&w);
                let xi_sq = w.dot(&nw);
                let kz = orig.y_gram(&z);
                let om_sq = z.dot(&kz);
                if vanished(xi_sq, total) || vanished(om_sq, total) {
                    parts.stops.push(EarlyStop::ScoreVanished { component: comp });
                    break;
                }
                parts.inner.push(w.dot(&(orig.m() * &z)) / xi_sq);
                parts.c.push(nw / xi_sq);
                parts.d.push(kz / om_sq);
                ws.deflate(Deflation::Project { u: &u, v: &v });
                parts.ry.push(z.clone());
                parts.w.push(w);
                parts.z.push(z);
            }
            PlsMode::PlsW2a => {
                let nu = ws.x_gram(&u);
                let xi_sq = u.dot(&nu);
                let kv = ws.y_gram(&v);
                let om_sq = v.dot(&kv);
                if vanished(xi_sq, total) || vanished(om_sq, total) {
                    parts.stops.push(EarlyStop::ScoreVanished { component: comp });
                    break;
                }
                let c = nu / xi_sq;
                let e = kv / om_sq;
                let w = adjust(&u, &parts.u, &parts.c);
                let z = adjust(&v, &parts.v, &parts.d);
                ws.deflate(Deflation::Own { u: &u, c: &c, xi_sq, v: &v, e: &e, om_sq });
                parts.inner.push(delta / xi_sq);
                parts.c.push(c);
                parts.d.push(e);
                parts.ry.push(z.clone());
                parts.w.push(w);
                parts.z.push(z);
            }
            PlsMode::PlsR { scaled, .. } => {
                let nu = ws.x_gram(&u);
                let xi_sq = u.dot(&nu);
                if vanished(xi_sq, total) {
                    parts.stops.push(EarlyStop::ScoreVanished { component: comp });
                    break;
                }
                let c = nu / xi_sq;
                let d = ws.m().tr_mul(&u) / xi_sq;
                let dnorm = d.norm();
                if !(dnorm > 0.0) {
                    parts.stops.push(EarlyStop::ScoreVanished { component: comp });
                    break;
                }
                // alpha = ‖ξ‖² / ‖Y_{h-1}ᵀξ‖ = 1 / ‖d‖
                let alpha = 1.0 / dnorm;
                let p_h = if scaled { dnorm } else { 1.0 };
                let s = p_h * alpha;
                let kv = ws.y_gram(&v);
                let vkv = v.dot(&kv);
                let g = if vkv > 0.0 { kv / (s * vkv) } else { Vector::zeros(v.len()) };
                let w = adjust(&u, &parts.u, &parts.c);
                let mut ryx = Vector::zeros(u.len());
                for (wj, dj) in parts.w.iter().zip(&parts.d) {
                    ryx.axpy(-s * dj.dot(&v), wj, 1.0);
                }
                ws.deflate(Deflation::XScore { u: &u, c: &c, xi_sq, d: &d });
                parts.inner.push(p_h);
                parts.c.push(c);
                parts.d.push(d);
                parts.g.push(g);
                parts.ry.push(&v * s);
                parts.ryx.push(ryx);
                parts.z.push(v.clone());
                parts.w.push(w);
            }
        }
        parts.deltas.push(delta);
        parts.u.push(u);
        parts.v.push(v);
    }
    Ok(parts)
}

pub(crate) fn rcca_transforms(
    ridge: Ridge,
    nxx: &DenseMatrix,
    kyy: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let f = DEFAULT_EIGEN_FLOOR;
    match ridge {
        Ridge::Additive { x, y } => Ok((inv_sqrt_sym_rel(nxx, x, f)?, inv_sqrt_sym_rel(kyy, y, f)?)),
        Ridge::Convex { x, y } => {
            let rx = nxx * (1.0 - x) + DenseMatrix::identity(nxx.nrows(), nxx.ncols()) * x;
            let ry = kyy * (1.0 - y) + DenseMatrix::identity(kyy.nrows(), kyy.ncols()) * y;
            Ok((inv_sqrt_sym_rel(&rx, 0.0, f)?, inv_sqrt_sym_rel(&ry, 0.0, f)?))
        }
    }
}

fn capped(mode: &PlsMode, n: usize, p: usize, q: usize, h: usize) -> (usize, Option<EarlyStop>) {
    let cap = mode.component_cap(n, p, q);
    if h > cap {
        (cap, Some(EarlyStop::Capped { requested: h, cap }))
    } else {
        (h, None)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_explicit(
    xp: &DenseMatrix,
    yp: &DenseMatrix,
    mode: PlsMode,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
    centering: Centering,
) -> Result<PlsFit> {
    let (n, p) = xp.shape();
    let q = yp.ncols();
    let (h_eff, cap) = capped(&mode, n, p, q, h);
    let orig = BlocksOriginal { x: xp, y: yp, m: xp.tr_mul(yp) };
    let mut parts = match mode {
        PlsMode::PlsR { simpls: true, .. } => run_simpls(h_eff, pen_u, pen_v, opts, &orig)?,
        PlsMode::Rcca { ridge } => {
            let (a, b) = rcca_transforms(ridge, &xp.tr_mul(xp), &yp.tr_mul(yp))?;
            let wx = xp * &a;
            let wy = yp * &b;
            let m = wx.tr_mul(&wy);
            let mut ws = ExplicitWs { x: wx, y: wy, m };
            run_nipals(mode, h_eff, pen_u, pen_v, opts, &orig, &mut ws, Some(&(a, b)))?
        }
        _ => {
            let mut ws = ExplicitWs { x: xp.clone(), y: yp.clone(), m: orig.m.clone() };
            run_nipals(mode, h_eff, pen_u, pen_v, opts, &orig, &mut ws, None)?
        }
    };
    if let Some(c) = cap {
        parts.stops.insert(0, c);
    }
    Ok(assemble(parts, mode, n, p, q, h, pen_u, pen_v, centering))
}

pub(crate) fn fit_products(
    prods: &CrossProducts,
    centering: Centering,
    mode: PlsMode,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
) -> Result<PlsFit> {
    let (p, q) = prods.m.shape();
    let n = prods.n;
    let (h_eff, cap) = capped(&mode, n, p, q, h);
    let mut parts = match mode {
        PlsMode::PlsR { simpls: true, .. } => run_simpls(h_eff, pen_u, pen_v, opts, prods)?,
        PlsMode::Rcca { ridge } => {
            let (a, b) = rcca_transforms(ridge, &prods.nxx, &prods.kyy)?;
            let m = &a * &prods.m * &b;
            let mut ws = RecursionWs { m, n: None, k: None };
            run_nipals(mode, h_eff, pen_u, pen_v, opts, prods, &mut ws, Some(&(a, b)))?
        }
        PlsMode::PlsSvd => {
            let mut ws = RecursionWs { m: prods.m.clone(), n: None, k: None };
            run_nipals(mode, h_eff, pen_u, pen_v, opts, prods, &mut ws, None)?
        }
        PlsMode::PlsW2a | PlsMode::PlsR { .. } => {
            let mut ws = RecursionWs {
                m: prods.m.clone(),
                n: Some(prods.nxx.clone()),
                k: Some(prods.kyy.clone()),
            };
            run_nipals(mode, h_eff, pen_u, pen_v, opts, prods, &mut ws, None)?
        }
    };
    if let Some(c) = cap {
        parts.stops.insert(0, c);
    }
    Ok(assemble(parts, mode, n, p, q, h, pen_u, pen_v, centering))
}

pub(crate) fn columns(v: &[Vector], rows: usize) -> DenseMatrix {
    if v.is_empty() {
        DenseMatrix::zeros(rows, 0)
    } else {
        DenseMatrix::from_columns(v)
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    parts: Parts,
    mode: PlsMode,
    n: usize,
    p: usize,
    q: usize,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    centering: Centering,
) -> PlsFit {
    let w = columns(&parts.w, p);
    let y_loadings = columns(&parts.d, q);
    let v = columns(&parts.v, q);
    let inner = Vector::from_vec(parts.inner);
    let coefficients = match mode {
        PlsMode::PlsR { simpls: true, .. } => {
            Some(parts.coefficients.unwrap_or_else(|| DenseMatrix::zeros(p, q)))
        }
        PlsMode::PlsR { scaled, .. } => Some(nipals_coefficients(&w, &y_loadings, &v, &inner, scaled)),
        _ => None,
    };
    let regression = mode.is_regression();
    let ryx = columns(&parts.ryx, p);
    PlsFit {
        mode,
        pen_u: pen_u.clone(),
        pen_v: pen_v.clone(),
        n,
        p,
        q,
        requested_components: h,
        centering,
        u: columns(&parts.u, p),
        v,
        z_adj: columns(&parts.z, q),
        x_loadings: columns(&parts.c, p),
        y_loadings,
        y_score_loadings: regression.then(|| columns(&parts.g, q)),
        deltas: Vector::from_vec(parts.deltas),
        inner_coefs: inner,
        score_map: ScoreMap {
            rx: w.clone(),
            ry: columns(&parts.ry, q),
            ryx: (regression && !parts.ryx.is_empty()).then_some(ryx),
        },
        w_adj: w,
        x_scores: None,
        y_scores: None,
        coefficients,
        fitted: None,
        diagnostics: parts.diagnostics,
        stops: parts.stops,
        classes: None,
    }
}
