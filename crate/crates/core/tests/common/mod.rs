#![allow(dead_code)]

use plsforge::linalg::svd_full;
use plsforge::{DenseMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn randn(seed: u64, r: usize, c: usize) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn centered(x: &DenseMatrix) -> DenseMatrix {
    let mean = x.row_mean();
    let mut out = x.clone();
    for mut r in out.row_iter_mut() {
        r -= &mean;
    }
    out
}

/// Largest elementwise difference.
pub fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}

pub fn rel_fro(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Orthogonal projection of `y` onto the column span of `basis`, via SVD.
pub fn project(basis: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
    let s = svd_full(basis).unwrap();
    let tol = 1e-10 * s.deltas.iter().copied().fold(0.0, f64::max);
    let k = s.deltas.iter().filter(|&&d| d > tol).count();
    let u = s.u.columns(0, k);
    &u * (u.transpose() * y)
}

/// Leading singular pair of `m` from a full SVD, sign fixed on `u`.
pub fn lead(m: &DenseMatrix) -> (f64, Vector, Vector) {
    let t = svd_full(m).unwrap().leading();
    (t.delta, t.u, t.v)
}

pub enum RefMode {
    Svd,
    W2a,
    Regression,
}

pub struct RefFit {
    pub u: Vec<Vector>,
    pub v: Vec<Vector>,
    pub xi: Vec<Vector>,
    pub omega: Vec<Vector>,
    pub c: Vec<Vector>,
}

/// Textbook unpenalized two-block PLS on centered data with explicit deflation.
pub fn reference(x: &DenseMatrix, y: &DenseMatrix, h: usize, mode: RefMode) -> RefFit {
    let mut xd = x.clone();
    let mut yd = y.clone();
    let mut out = RefFit { u: vec![], v: vec![], xi: vec![], omega: vec![], c: vec![] };
    let full = svd_full(&x.tr_mul(y)).unwrap();
    for k in 0..h {
        let (u, v) = match mode {
            RefMode::Svd => (full.u.column(k).into_owned(), full.v.column(k).into_owned()),
            _ => {
                let (_, u, v) = lead(&xd.tr_mul(&yd));
                (u, v)
            }
        };
        let xi = &xd * &u;
        let om = &yd * &v;
        let c = xd.tr_mul(&xi) / xi.norm_squared();
        match mode {
            RefMode::Svd => {}
            RefMode::W2a => {
                xd -= &xi * (xi.transpose() * &xd) / xi.norm_squared();
                yd -= &om * (om.transpose() * &yd) / om.norm_squared();
            }
            RefMode::Regression => {
                xd -= &xi * (xi.transpose() * &xd) / xi.norm_squared();
                yd -= &xi * (xi.transpose() * &yd) / xi.norm_squared();
            }
        }
        out.u.push(u);
        out.v.push(v);
        out.xi.push(xi);
        out.omega.push(om);
        out.c.push(c);
    }
    out
}
