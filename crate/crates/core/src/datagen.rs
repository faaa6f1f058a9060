//! Seeded generators for the two simulation designs.
//!
//! Each generator is a row stream driven by one `ChaCha8Rng`, so the same
//! seed produces the same rows whether they are collected in memory,
//! written to a chunked dataset, or written as CSV.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bigdata::{DatasetWriter, Manifest};
use crate::linalg::{DenseMatrix, Vector};
use crate::penalty::GroupStructure;
use crate::pls::{Centering, CrossProducts};
use crate::{PlsError, Result};

/// Rows of an `(X, Y)` pair produced one at a time.
pub trait RowGenerator {
    fn n(&self) -> usize;
    fn dims(&self) -> (usize, usize);
    /// Fill the next row; `false` once all `n` rows have been produced.
    fn next_row(&mut self, x: &mut [f64], y: &mut [f64]) -> bool;
    /// Names of the dummy-coded response columns, if any.
    fn classes(&self) -> Option<Vec<String>> {
        None
    }
}

/// Drain a generator into two matrices.
pub fn collect<G: RowGenerator + ?Sized>(gen: &mut G) -> (DenseMatrix, DenseMatrix) {
    let (p, q) = gen.dims();
    let n = gen.n();
    // Row-major buffers, converted once at the end.
    let mut xs = vec![0.0; n * p];
    let mut ys = vec![0.0; n * q];
    let mut i = 0;
    while i < n && gen.next_row(&mut xs[i * p..(i + 1) * p], &mut ys[i * q..(i + 1) * q]) {
        i += 1;
    }
    (DenseMatrix::from_row_slice(n, p, &xs), DenseMatrix::from_row_slice(n, q, &ys))
}

/// Drain a generator into a chunked dataset directory.
pub fn write_chunked<G: RowGenerator + ?Sized>(
    gen: &mut G,
    dir: impl AsRef<Path>,
    plan: Vec<usize>,
) -> Result<Manifest> {
    let (p, q) = gen.dims();
    if plan.iter().sum::<usize>() != gen.n() {
        return Err(PlsError::InvalidInput("chunk plan does not cover the generated rows".into()));
    }
    let mut w = DatasetWriter::create(dir, p, q, plan)?;
    if let Some(c) = gen.classes() {
        w.set_classes(c);
    }
    let mut x = vec![0.0; p];
    let mut y = vec![0.0; q];
    while gen.next_row(&mut x, &mut y) {
        w.push_row(&x, &y)?;
    }
    w.finish()
}

const GROUP_SIZE: usize = 20;
const X_GROUPS: usize = 20;
const Y_GROUPS: usize = 25;
const ACTIVE: usize = 4;
const SIGNAL_PER_GROUP: usize = 15;
const NOISE_SD: f64 = 1.5;
// Value carried by the 15 signal entries of the k-th active group.
const C_BLOCKS: [f64; ACTIVE] = [1.0, -1.0, -1.0, 1.5];
const D_BLOCKS: [f64; ACTIVE] = [-1.0, -1.5, 1.0, 1.0];

/// Ground truth of the two-latent-variable group design.
#[derive(Debug, Clone, Serialize)]
pub struct GroupPlsTruth {
    pub c1: Vector,
    pub c2: Vector,
    pub d1: Vector,
    pub d2: Vector,
    /// 0-based active X-groups, ascending.
    pub active_x: Vec<usize>,
    pub active_y: Vec<usize>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl GroupPlsTruth {
    pub fn x_groups(&self) -> GroupStructure {
        GroupStructure::uniform(X_GROUPS, GROUP_SIZE).expect("fixed design")
    }

    pub fn y_groups(&self) -> GroupStructure {
        GroupStructure::uniform(Y_GROUPS, GROUP_SIZE).expect("fixed design")
    }
}

/// Row stream for `X = ΞCᵀ + F_X`, `Y = ΞDᵀ + F_Y`.
pub struct GroupPlsGenerator {
    truth: GroupPlsTruth,
    xi: DenseMatrix,
    rng: ChaCha8Rng,
    row: usize,
}

impl GroupPlsGenerator {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 4 {
            return Err(PlsError::InvalidInput("the group design needs n >= 4".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gx = sample(&mut rng, X_GROUPS, ACTIVE).into_vec();
        let gy = sample(&mut rng, Y_GROUPS, ACTIVE).into_vec();
        let mut place = |groups: &[usize], values: &[f64; ACTIVE], dim: usize| {
            let mut out = Vector::zeros(dim);
            for (k, &g) in groups.iter().enumerate() {
                for j in sample(&mut rng, GROUP_SIZE, SIGNAL_PER_GROUP) {
                    out[g * GROUP_SIZE + j] = values[k];
                }
            }
            out
        };
        let p = X_GROUPS * GROUP_SIZE;
        let q = Y_GROUPS * GROUP_SIZE;
        let mut c1 = place(&gx, &C_BLOCKS, p);
        let mut c2 = place(&gx, &C_BLOCKS, p);
        let mut d1 = place(&gy, &D_BLOCKS, q);
        let mut d2 = place(&gy, &D_BLOCKS, q);

        let mut xi = DenseMatrix::zeros(n, 2);
        for i in 0..n {
            for j in 0..2 {
                xi[(i, j)] = rng.sample(StandardNormal);
            }
        }
        // Component 1 of a fit tracks the stronger realized latent variable.
        if xi.column(1).norm_squared() > xi.column(0).norm_squared() {
            xi.swap_columns(0, 1);
            std::mem::swap(&mut c1, &mut c2);
            std::mem::swap(&mut d1, &mut d2);
        }
        let sorted = |mut g: Vec<usize>| {
            g.sort_unstable();
            g
        };
        let truth = GroupPlsTruth {
            c1,
            c2,
            d1,
            d2,
            active_x: sorted(gx),
            active_y: sorted(gy),
            noise_sd: NOISE_SD,
            seed,
        };
        Ok(GroupPlsGenerator { truth, xi, rng, row: 0 })
    }

    pub fn truth(&self) -> &GroupPlsTruth {
        &self.truth
    }

    /// Latent variables `Ξ` (`n×2`).
    pub fn latent(&self) -> &DenseMatrix {
        &self.xi
    }
}

impl RowGenerator for GroupPlsGenerator {
    fn n(&self) -> usize {
        self.xi.nrows()
    }
    fn dims(&self) -> (usize, usize) {
        (self.truth.c1.len(), self.truth.d1.len())
    }
    fn next_row(&mut self, x: &mut [f64], y: &mut [f64]) -> bool {
        if self.row == self.n() {
            return false;
        }
        let (a, b) = (self.xi[(self.row, 0)], self.xi[(self.row, 1)]);
        let t = &self.truth;
        for (j, v) in x.iter_mut().enumerate() {
            let e: f64 = self.rng.sample(StandardNormal);
            *v = a * t.c1[j] + b * t.c2[j] + NOISE_SD * e;
        }
        for (j, v) in y.iter_mut().enumerate() {
            let e: f64 = self.rng.sample(StandardNormal);
            *v = a * t.d1[j] + b * t.d2[j] + NOISE_SD * e;
        }
        self.row += 1;
        true
    }
}

/// Group design with `p = 400` (20 groups of 20) and `q = 500` (25 groups of 20).
pub fn gen_group_pls(n: usize, seed: u64) -> Result<(DenseMatrix, DenseMatrix, GroupPlsTruth)> {
    let mut g = GroupPlsGenerator::new(n, seed)?;
    let (x, y) = collect(&mut g);
    Ok((x, y, g.truth))
}

const DA_MEANS: [f64; 6] = [-1.0, 1.5, 1.0, 2.5, -0.5, 2.0];
const DA_GROUP_SIZE: usize = 100;
const DA_CLASSES: usize = 3;

/// Ground truth of the discriminant design.
///
/// Class `k` (0-based) shifts groups `2k` and `2k+1` by their means;
/// every entry also carries standard-normal noise.
#[derive(Debug, Clone, Serialize)]
pub struct PlsDaTruth {
    pub means: [f64; 6],
    pub group_size: usize,
    pub n_classes: usize,
    /// Rows actually generated (a multiple of 3).
    pub n: usize,
    pub requested_n: usize,
    pub seed: u64,
}

impl PlsDaTruth {
    pub fn p(&self) -> usize {
        self.means.len() * self.group_size
    }

    pub fn groups(&self) -> GroupStructure {
        GroupStructure::uniform(self.means.len(), self.group_size).expect("fixed design")
    }

    /// 0-based groups linked to 0-based class `k`.
    pub fn linked_groups(&self, k: usize) -> [usize; 2] {
        [2 * k, 2 * k + 1]
    }

    /// Population mean of `X` for class `k`.
    pub fn class_mean(&self, k: usize) -> Vector {
        let mut m = Vector::zeros(self.p());
        for g in self.linked_groups(k) {
            m.rows_mut(g * self.group_size, self.group_size).fill(self.means[g]);
        }
        m
    }

    /// Noise-free cross-products (population covariances times `n`) with
    /// the matching centering, for fits that should see no sampling error.
    pub fn population_moments(&self) -> (CrossProducts, Centering) {
        let k = self.n_classes;
        let pi = 1.0 / k as f64;
        let means: Vec<Vector> = (0..k).map(|c| self.class_mean(c)).collect();
        let grand = means.iter().fold(Vector::zeros(self.p()), |a, m| a + m) * pi;
        let dev: Vec<Vector> = means.iter().map(|m| m - &grand).collect();
        let n = self.n as f64;

        let mut sxx = DenseMatrix::identity(self.p(), self.p());
        let mut sxy = DenseMatrix::zeros(self.p(), k);
        for (c, d) in dev.iter().enumerate() {
            sxx += d * d.transpose() * pi;
            sxy.set_column(c, &(d * pi));
        }
        let syy = DenseMatrix::from_fn(k, k, |a, b| if a == b { pi - pi * pi } else { -pi * pi });
        let prods = CrossProducts { n: self.n, m: sxy * n, nxx: sxx * n, kyy: syy * n };
        let centering = Centering {
            x_means: grand,
            x_scales: None,
            y_means: Vector::from_element(k, pi),
            y_scales: None,
        };
        (prods, centering)
    }
}

/// Row stream for the discriminant design; `Y` is the dummy-coded class.
pub struct PlsDaGenerator {
    truth: PlsDaTruth,
    rng: ChaCha8Rng,
    row: usize,
}

impl PlsDaGenerator {
    pub fn new(n: usize, seed: u64) -> Self {
        let balanced = (((n as f64) / DA_CLASSES as f64).round() as usize).max(1) * DA_CLASSES;
        PlsDaGenerator {
            truth: PlsDaTruth {
                means: DA_MEANS,
                group_size: DA_GROUP_SIZE,
                n_classes: DA_CLASSES,
                n: balanced,
                requested_n: n,
                seed,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            row: 0,
        }
    }

    pub fn truth(&self) -> &PlsDaTruth {
        &self.truth
    }

    /// 0-based class of row `i`: contiguous, equal-sized blocks.
    pub fn class_of(&self, i: usize) -> usize {
        i / (self.truth.n / DA_CLASSES)
    }

    /// 1-based labels for every row.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.truth.n).map(|i| self.class_of(i) + 1).collect()
    }
}

impl RowGenerator for PlsDaGenerator {
    fn n(&self) -> usize {
        self.truth.n
    }
    fn dims(&self) -> (usize, usize) {
        (self.truth.p(), DA_CLASSES)
    }
    fn next_row(&mut self, x: &mut [f64], y: &mut [f64]) -> bool {
        if self.row == self.truth.n {
            return false;
        }
        let k = self.class_of(self.row);
        let linked = self.truth.linked_groups(k);
        for (j, v) in x.iter_mut().enumerate() {
            let g = j / self.truth.group_size;
            let e: f64 = self.rng.sample(StandardNormal);
            *v = if linked.contains(&g) { self.truth.means[g] + e } else { e };
        }
        y.fill(0.0);
        y[k] = 1.0;
        self.row += 1;
        true
    }
    fn classes(&self) -> Option<Vec<String>> {
        Some((1..=DA_CLASSES).map(|c| c.to_string()).collect())
    }
}

/// Discriminant design: `p = 600` (6 groups of 100), 3 balanced classes.
///
/// `n` is rounded to the nearest multiple of 3; the truth reports both.
pub fn gen_plsda(n: usize, seed: u64) -> (DenseMatrix, Vec<usize>, PlsDaTruth) {
    let mut g = PlsDaGenerator::new(n, seed);
    let labels = g.labels();
    let (x, _) = collect(&mut g);
    (x, labels, g.truth)
}
