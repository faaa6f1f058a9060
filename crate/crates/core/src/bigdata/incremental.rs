use crate::linalg::{check_finite, svd_full, DenseMatrix, Vector};
use crate::{PlsError, Result};

/// Updates between re-orthonormalizations of the stored bases.
pub const DEFAULT_REORTH_INTERVAL: usize = 512;

/// Residual directions shorter than this fraction of the centered observation are dropped.
const RESIDUAL_REL_TOL: f64 = 1e-10;
/// Singular values below this fraction of the largest are discarded.
const RANK_REL_TOL: f64 = 1e-14;

/// Running means and a rank-`h` factorization `U diag(deltas) Vᵀ` of the
/// centered cross-product `Σ (xᵢ - μ_X)(yᵢ - μ_Y)ᵀ`.
///
/// The stored rank grows from 0 up to `h` as observations arrive.
#[derive(Debug, Clone)]
pub struct IncrementalState {
    pub n: usize,
    pub mu_x: Vector,
    pub mu_y: Vector,
    /// `p×k`, `k ≤ h`, orthonormal columns.
    pub u: DenseMatrix,
    /// Descending, nonnegative.
    pub deltas: Vector,
    pub v: DenseMatrix,
    pub h: usize,
    pub reorth_every: usize,
    since_reorth: usize,
}

impl IncrementalState {
    pub fn new(p: usize, q: usize, h: usize) -> Result<Self> {
        if h == 0 {
            return Err(PlsError::InvalidInput("rank must be at least 1".into()));
        }
        if p == 0 || q == 0 {
            return Err(PlsError::InvalidInput("dimensions must be positive".into()));
        }
        Ok(IncrementalState {
            n: 0,
            mu_x: Vector::zeros(p),
            mu_y: Vector::zeros(q),
            u: DenseMatrix::zeros(p, 0),
            deltas: Vector::zeros(0),
            v: DenseMatrix::zeros(q, 0),
            h,
            reorth_every: DEFAULT_REORTH_INTERVAL,
            since_reorth: 0,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.mu_x.len(), self.mu_y.len())
    }

    pub fn rank(&self) -> usize {
        self.deltas.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut ud = self.u.clone();
        for (j, d) in self.deltas.iter().enumerate() {
            ud.column_mut(j).scale_mut(*d);
        }
        &ud * self.v.transpose()
    }

    /// Leading triple of the maintained factorization.
    pub fn leading(&self) -> crate::linalg::SvdTriple {
        let (p, q) = self.dims();
        if self.rank() == 0 || self.deltas[0] == 0.0 {
            return crate::linalg::SvdTriple::zero(p, q);
        }
        let mut t = crate::linalg::SvdTriple {
            delta: self.deltas[0],
            u: self.u.column(0).into_owned(),
            v: self.v.column(0).into_owned(),
            degenerate: false,
        };
        t.fix_sign();
        t
    }

    /// Absorb one `(x, y)` observation.
    pub fn update(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        let (p, q) = self.dims();
        if x.len() != p || y.len() != q {
            return Err(PlsError::DimensionMismatch(format!(
                "observation has {}+{} values, state expects {p}+{q}",
                x.len(),
                y.len()
            )));
        }
        let x = Vector::from_column_slice(x);
        let y = Vector::from_column_slice(y);
        check_finite(&DenseMatrix::from_column_slice(p, 1, x.as_slice()), "x")?;
        check_finite(&DenseMatrix::from_column_slice(q, 1, y.as_slice()), "y")?;

        let n = self.n as f64;
        if self.n == 0 {
            self.mu_x = x;
            self.mu_y = y;
            self.n = 1;
            return Ok(());
        }
        let xt = &x - &self.mu_x;
        let yt = &y - &self.mu_y;
        self.mu_x = &self.mu_x * (n / (n + 1.0)) + &x / (n + 1.0);
        self.mu_y = &self.mu_y * (n / (n + 1.0)) + &y / (n + 1.0);
        self.n += 1;

        let (c, xp) = split(&self.u, &xt);
        let (d, yp) = split(&self.v, &yt);
        let xn = xp.norm();
        let yn = yp.norm();
        let add_x = xn > RESIDUAL_REL_TOL * xt.norm();
        let add_y = yn > RESIDUAL_REL_TOL * yt.norm();
        let k = self.rank();
        let (rows, cols) = (k + usize::from(add_x), k + usize::from(add_y));

        // Q = n/(n+1) [ (n+1)/n Δ + c dᵀ , ‖y⊥‖ c ; ‖x⊥‖ dᵀ , ‖x⊥‖‖y⊥‖ ]
        let f = n / (n + 1.0);
        let mut qm = DenseMatrix::zeros(rows, cols);
        for i in 0..k {
            for j in 0..k {
                qm[(i, j)] = f * c[i] * d[j];
            }
            qm[(i, i)] += self.deltas[i];
        }
        if add_y {
            for i in 0..k {
                qm[(i, k)] = f * yn * c[i];
            }
        }
        if add_x {
            for j in 0..k {
                qm[(k, j)] = f * xn * d[j];
            }
        }
        if add_x && add_y {
            qm[(k, k)] = f * xn * yn;
        }
        if rows == 0 || cols == 0 {
            return Ok(());
        }

        let mut ub = self.u.clone().insert_column(k, 0.0);
        if add_x {
            ub.set_column(k, &(xp / xn));
        } else {
            ub = ub.remove_column(k);
        }
        let mut vb = self.v.clone().insert_column(k, 0.0);
        if add_y {
            vb.set_column(k, &(yp / yn));
        } else {
            vb = vb.remove_column(k);
        }

        let s = svd_full(&qm)?;
        let smax = s.deltas.iter().copied().fold(0.0, f64::max);
        let keep = s
            .deltas
            .iter()
            .take(self.h)
            .take_while(|&&d| d > RANK_REL_TOL * smax && d > 0.0)
            .count();
        self.u = &ub * s.u.columns(0, keep);
        self.v = &vb * s.v.columns(0, keep);
        self.deltas = s.deltas.rows(0, keep).into_owned();

        self.since_reorth += 1;
        if self.reorth_every > 0 && self.since_reorth >= self.reorth_every {
            self.reorthonormalize()?;
        }
        Ok(())
    }

    /// Restore exact orthonormality of `U` and `V` without changing `UΔVᵀ`.
    pub fn reorthonormalize(&mut self) -> Result<()> {
        self.since_reorth = 0;
        let k = self.rank();
        if k == 0 {
            return Ok(());
        }
        let qu = self.u.clone().qr();
        let qv = self.v.clone().qr();
        let mut core = qu.r();
        for (j, d) in self.deltas.iter().enumerate() {
            core.column_mut(j).scale_mut(*d);
        }
        let core = core * qv.r().transpose();
        let s = svd_full(&core)?;
        self.u = qu.q() * s.u;
        self.v = qv.q() * s.v;
        self.deltas = s.deltas;
        Ok(())
    }
}

/// Coefficients on an orthonormal basis and the orthogonal residual,
/// with a second Gram-Schmidt pass.
fn split(basis: &DenseMatrix, x: &Vector) -> (Vector, Vector) {
    let c1 = basis.tr_mul(x);
    let r1 = x - basis * &c1;
    let c2 = basis.tr_mul(&r1);
    let r2 = &r1 - basis * &c2;
    (c1 + c2, r2)
}

/// Functional form of [`IncrementalState::update`].
pub fn incremental_update(mut state: IncrementalState, x: &[f64], y: &[f64]) -> Result<IncrementalState> {
    state.update(x, y)?;
    Ok(state)
}
