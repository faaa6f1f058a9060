//! Dense matrix primitives and the SVD kernels used by every fit path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{PlsError, Result};

/// Column-major dense matrix of `f64`.
pub type DenseMatrix = DMatrix<f64>;
/// Dense column vector of `f64`.
pub type Vector = DVector<f64>;

pub const DEFAULT_SVD_TOL: f64 = 1e-10;
pub const DEFAULT_SVD_MAX_ITER: usize = 1000;
/// Eigenvalue floor for inverse square roots, relative to the largest eigenvalue.
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-12;

/// Leading singular triple `(delta, u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub delta: f64,
    pub u: Vector,
    pub v: Vector,
    /// Set when the input had no nonzero singular value; `u` and `v` are zero.
    pub degenerate: bool,
}

impl SvdTriple {
    pub fn zero(p: usize, q: usize) -> Self {
        SvdTriple { delta: 0.0, u: Vector::zeros(p), v: Vector::zeros(q), degenerate: true }
    }

    /// Flip signs so the largest-magnitude entry of `u` is positive.
    pub fn fix_sign(&mut self) {
        if flip_needed(self.u.as_slice()) {
            self.u.neg_mut();
            self.v.neg_mut();
        }
    }
}

/// Compact SVD `M = U diag(deltas) Vᵀ`, singular values descending.
#[derive(Debug, Clone)]
pub struct SvdFactorization {
    pub u: DenseMatrix,
    pub deltas: Vector,
    pub v: DenseMatrix,
}

impl SvdFactorization {
    pub fn rank(&self) -> usize {
        self.deltas.len()
    }

    /// Leading triple, sign-fixed.
    pub fn leading(&self) -> SvdTriple {
        let (p, q) = (self.u.nrows(), self.v.nrows());
        if self.deltas.is_empty() || self.deltas[0] == 0.0 {
            return SvdTriple::zero(p, q);
        }
        let mut t = SvdTriple {
            delta: self.deltas[0],
            u: self.u.column(0).into_owned(),
            v: self.v.column(0).into_owned(),
            degenerate: false,
        };
        t.fix_sign();
        t
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut ud = self.u.clone();
        for (j, d) in self.deltas.iter().enumerate() {
            ud.column_mut(j).scale_mut(*d);
        }
        ud * self.v.transpose()
    }
}

pub(crate) fn flip_needed(x: &[f64]) -> bool {
    let mut best = 0.0;
    let mut sign_negative = false;
    for &xi in x {
        if xi.abs() > best {
            best = xi.abs();
            sign_negative = xi < 0.0;
        }
    }
    sign_negative
}

pub(crate) fn check_finite(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PlsError::InvalidInput(format!("{what} contains non-finite values")))
    }
}

/// Full compact SVD with `min(p, q)` columns.
pub fn svd_full(m: &DenseMatrix) -> Result<SvdFactorization> {
    check_finite(m, "matrix")?;
    let (p, q) = m.shape();
    let r = p.min(q);
    if r == 0 {
        return Ok(SvdFactorization {
            u: DenseMatrix::zeros(p, 0),
            deltas: Vector::zeros(0),
            v: DenseMatrix::zeros(q, 0),
        });
    }
    // nalgebra's bidiagonal SVD returns wrong factors on some ordinary
    // inputs (rank-deficient ones especially), so the dense SVD goes through
    // faer; the residual check guards the conversion.
    let (u, s, vt) = thin_svd(m)?;
    let resid = svd_residual(m, &(u.clone(), s.clone(), vt.clone()));
    if !(resid <= 1e-10 * m.norm().max(f64::MIN_POSITIVE)) {
        return Err(PlsError::Convergence { iterations: 0, residual: resid });
    }
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut uo = DenseMatrix::zeros(p, r);
    let mut vo = DenseMatrix::zeros(q, r);
    let mut deltas = Vector::zeros(r);
    for (j, &k) in order.iter().enumerate() {
        deltas[j] = s[k];
        let mut uc = u.column(k).into_owned();
        let mut vc = vt.row(k).transpose();
        if flip_needed(uc.as_slice()) {
            uc.neg_mut();
            vc.neg_mut();
        }
        uo.set_column(j, &uc);
        vo.set_column(j, &vc);
    }
    Ok(SvdFactorization { u: uo, deltas, v: vo })
}

type RawSvd = (DenseMatrix, Vector, DenseMatrix);

fn thin_svd(m: &DenseMatrix) -> Result<RawSvd> {
    let (p, q) = m.shape();
    let a = faer::Mat::<f64>::from_fn(p, q, |i, j| m[(i, j)]);
    let svd = a
        .thin_svd()
        .map_err(|_| PlsError::Convergence { iterations: 0, residual: f64::NAN })?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let r = p.min(q);
    Ok((
        DenseMatrix::from_fn(p, r, |i, j| u[(i, j)]),
        Vector::from_fn(r, |j, _| s[j]),
        DenseMatrix::from_fn(r, q, |i, j| v[(j, i)]),
    ))
}

/// max_j ‖M v_j − s_j u_j‖
fn svd_residual(m: &DenseMatrix, (u, s, vt): &RawSvd) -> f64 {
    let r = m * vt.transpose() - u * DenseMatrix::from_diagonal(s);
    r.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Leading singular triple by block power iteration on the smaller Gram matrix.
///
/// The iteration keeps a small subspace, takes Ritz pairs each sweep and stops
/// once the leading Ritz residual is below `tol` times the Ritz gap, which
/// bounds the angular error of the returned vectors by roughly `tol`.
pub fn svd_leading(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SvdTriple> {
    check_finite(m, "matrix")?;
    let (p, q) = m.shape();
    if p == 0 || q == 0 {
        return Err(PlsError::InvalidInput("empty matrix".into()));
    }
    if m.iter().all(|&x| x == 0.0) {
        return Ok(SvdTriple::zero(p, q));
    }
    let right = q <= p;
    let gram = if right { m.tr_mul(m) } else { m * m.transpose() };
    let x = leading_eigvec(&gram, tol, max_iter)?;
    Ok(triple_from_side(m, x, right))
}

fn triple_from_side(m: &DenseMatrix, x: Vector, right: bool) -> SvdTriple {
    let (p, q) = m.shape();
    let mut t = if right {
        let mv = m * &x;
        let delta = mv.norm();
        if delta == 0.0 {
            return SvdTriple::zero(p, q);
        }
        SvdTriple { delta, u: mv / delta, v: x, degenerate: false }
    } else {
        let mtu = m.tr_mul(&x);
        let delta = mtu.norm();
        if delta == 0.0 {
            return SvdTriple::zero(p, q);
        }
        SvdTriple { delta, u: x, v: mtu / delta, degenerate: false }
    };
    t.fix_sign();
    t
}

fn leading_eigvec(g: &DenseMatrix, tol: f64, max_iter: usize) -> Result<Vector> {
    let dim = g.nrows();
    if dim == 1 {
        return Ok(Vector::from_element(1, 1.0));
    }
    let k = dim.min(3);

    // start from the Gram columns with the largest norms
    let norms: Vec<f64> = g.column_iter().map(|c| c.norm()).collect();
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut start = DenseMatrix::zeros(dim, k);
    for (j, &c) in idx.iter().take(k).enumerate() {
        start.set_column(j, &g.column(c));
    }
    let mut basis = start.qr().q();

    let mut residual = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let z = g * &basis;
        let mut small = basis.tr_mul(&z);
        small = (&small + small.transpose()) * 0.5;
        let eig = SymmetricEigen::new(small);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut s = DenseMatrix::zeros(k, k);
        for (j, &o) in order.iter().enumerate() {
            s.set_column(j, &eig.eigenvectors.column(o));
        }
        let theta0 = eig.eigenvalues[order[0]];
        let theta1 = eig.eigenvalues[order[1]];
        let ritz = &basis * &s;
        let gx = &z * &s;
        let r = gx.column(0) - ritz.column(0) * theta0;
        residual = r.norm();
        let scale = theta0.abs().max(f64::MIN_POSITIVE);
        if residual <= tol * (theta0 - theta1) || residual <= 1e3 * f64::EPSILON * scale {
            return Ok(ritz.column(0).into_owned());
        }
        residual /= scale;
        basis = gx.qr().q();
    }
    Err(PlsError::Convergence { iterations: max_iter, residual })
}

/// `(A + ridge·I)^{-1/2}` for symmetric `A`, clamping eigenvalues below `floor`.
pub fn inv_sqrt_sym(a: &DenseMatrix, ridge: f64, floor: f64) -> Result<DenseMatrix> {
    if !(floor > 0.0) {
        return Err(PlsError::InvalidInput("eigenvalue floor must be positive".into()));
    }
    inv_sqrt_impl(a, ridge, Floor::Absolute(floor))
}

/// As [`inv_sqrt_sym`] with the floor set to `rel_floor` times the largest eigenvalue.
pub fn inv_sqrt_sym_rel(a: &DenseMatrix, ridge: f64, rel_floor: f64) -> Result<DenseMatrix> {
    if !(rel_floor > 0.0) {
        return Err(PlsError::InvalidInput("eigenvalue floor must be positive".into()));
    }
    inv_sqrt_impl(a, ridge, Floor::Relative(rel_floor))
}

enum Floor {
    Absolute(f64),
    Relative(f64),
}

impl Floor {
    fn resolve(&self, largest: f64) -> Result<f64> {
        match *self {
            Floor::Absolute(f) => Ok(f),
            Floor::Relative(r) if largest > 0.0 => Ok(r * largest),
            Floor::Relative(_) => {
                Err(PlsError::InvalidInput("matrix has no positive eigenvalue".into()))
            }
        }
    }
}

fn inv_sqrt_impl(a: &DenseMatrix, ridge: f64, floor: Floor) -> Result<DenseMatrix> {
    check_finite(a, "matrix")?;
    if !a.is_square() {
        return Err(PlsError::InvalidInput("matrix is not square".into()));
    }
    if !(ridge >= 0.0) {
        return Err(PlsError::InvalidInput("ridge must be nonnegative".into()));
    }
    let n = a.nrows();
    let amax = a.amax().max(1.0);
    let mut diagonal = true;
    for j in 0..n {
        for i in 0..j {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * amax {
                return Err(PlsError::InvalidInput("matrix is not symmetric".into()));
            }
            if a[(i, j)] != 0.0 || a[(j, i)] != 0.0 {
                diagonal = false;
            }
        }
    }

    if diagonal {
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)] + ridge).collect();
        let largest = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let f = floor.resolve(largest)?;
        let mut out = DenseMatrix::zeros(n, n);
        for (i, di) in d.into_iter().enumerate() {
            out[(i, i)] = 1.0 / di.max(f).sqrt();
        }
        return Ok(out);
    }

    let mut sym = (a + a.transpose()) * 0.5;
    for i in 0..n {
        sym[(i, i)] += ridge;
    }
    let eig = SymmetricEigen::new(sym);
    let largest = eig.eigenvalues.max();
    let f = floor.resolve(largest)?;
    let mut vs = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / lam.max(f).sqrt());
    }
    let r = vs * eig.eigenvectors.transpose();
    Ok((&r + r.transpose()) * 0.5)
}

/// Running column means and centered sums of squares, mergeable across row blocks.
#[derive(Debug, Clone)]
pub struct ColumnMoments {
    pub n: usize,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl ColumnMoments {
    pub fn empty(cols: usize) -> Self {
        ColumnMoments { n: 0, mean: vec![0.0; cols], m2: vec![0.0; cols] }
    }

    pub fn from_block(x: &DenseMatrix) -> Self {
        let n = x.nrows();
        let mut out = ColumnMoments::empty(x.ncols());
        out.n = n;
        if n == 0 {
            return out;
        }
        for (j, col) in x.column_iter().enumerate() {
            let mut s = 0.0;
            for v in col.iter() {
                s += v;
            }
            let mean = s / n as f64;
            let mut m2 = 0.0;
            for v in col.iter() {
                let d = v - mean;
                m2 += d * d;
            }
            out.mean[j] = mean;
            out.m2[j] = m2;
        }
        out
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &ColumnMoments) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let wb = other.n as f64 / n as f64;
        for j in 0..self.mean.len() {
            let delta = other.mean[j] - self.mean[j];
            self.mean[j] += delta * wb;
            self.m2[j] += other.m2[j] + delta * delta * (self.n as f64) * wb;
        }
        self.n = n;
    }

    /// Sample standard deviations; columns judged constant report 0.
    pub fn sds(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        self.m2
            .iter()
            .zip(&self.mean)
            .map(|(&m2, &mu)| {
                let sd = (m2 / (self.n - 1) as f64).sqrt();
                if m2 == 0.0 || sd <= 1e-12 * mu.abs() {
                    0.0
                } else {
                    sd
                }
            })
            .collect()
    }
}

/// Apply `(x - mean) / sd` in place; `sds` of `None` or zero entries only center.
pub(crate) fn apply_centering(x: &mut DenseMatrix, means: &[f64], sds: Option<&[f64]>) {
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let mu = means[j];
        match sds {
            Some(s) if s[j] > 0.0 => {
                let sd = s[j];
                col.apply(|v| *v = (*v - mu) / sd);
            }
            _ => col.apply(|v| *v -= mu),
        }
    }
}

/// Column-center (and optionally scale) a matrix.
///
/// Returns the processed matrix, the column means and the sample standard
/// deviations (0 for constant columns, which are centered but not scaled).
pub fn center_scale(x: &DenseMatrix, scale: bool) -> Result<(DenseMatrix, Vector, Vector)> {
    if x.nrows() < 2 {
        return Err(PlsError::InvalidInput("centering needs at least two rows".into()));
    }
    let mom = ColumnMoments::from_block(x);
    let sds = mom.sds();
    let mut xc = x.clone();
    apply_centering(&mut xc, &mom.mean, scale.then_some(sds.as_slice()));
    Ok((xc, Vector::from_vec(mom.mean), Vector::from_vec(sds)))
}

/// `P_{basis⊥} X`: the part of each column of `x` orthogonal to the span of `basis`.
pub fn residual_projection(basis: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if basis.nrows() != x.nrows() {
        return Err(PlsError::DimensionMismatch(format!(
            "basis has {} rows, input has {}",
            basis.nrows(),
            x.nrows()
        )));
    }
    let k = basis.ncols();
    if k == 0 {
        return Ok(x.clone());
    }
    if k > basis.nrows() {
        return Err(PlsError::DegenerateBasis);
    }
    let qr = basis.clone().qr();
    let r = qr.r();
    let dmax = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if dmax == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * dmax) {
        return Err(PlsError::DegenerateBasis);
    }
    let q = qr.q();
    Ok(x - &q * q.tr_mul(x))
}

/// Normalize to unit length, or return the zero vector when the norm is zero.
pub(crate) fn normalize(x: Vector) -> (Vector, bool) {
    let n = x.norm();
    if n > 0.0 && n.is_finite() {
        (x / n, true)
    } else {
        (Vector::zeros(x.len()), false)
    }
}
