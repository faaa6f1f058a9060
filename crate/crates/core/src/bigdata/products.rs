use rayon::prelude::*;

use super::{checked_chunk, ChunkSource};
use crate::linalg::{ColumnMoments, DenseMatrix, Vector};
use crate::penalty::PenaltySpec;
use crate::pls::{fit_products, Centering, CrossProducts, FitOptions, PlsFit, PlsMode};
use crate::{PlsError, Result};

/// `XᵀY` accumulated over chunks in index order.
pub fn chunked_cross_product<S: ChunkSource + ?Sized>(src: &S) -> Result<DenseMatrix> {
    let (p, q) = src.dims();
    let mut m = DenseMatrix::zeros(p, q);
    for g in 0..src.n_chunks() {
        let (x, y) = checked_chunk(src, g)?;
        m += x.tr_mul(&y);
    }
    Ok(m)
}

/// All three cross-products in one pass.
///
/// Sequential summation in chunk order is reproducible run to run; the
/// parallel reduction is not, and agrees with it to roughly 1e-12 relative.
pub fn chunked_products<S: ChunkSource + ?Sized>(src: &S, parallel: bool) -> Result<CrossProducts> {
    let (p, q) = src.dims();
    let block = |g| checked_chunk(src, g).map(|(x, y)| CrossProducts::from_blocks(&x, &y));
    if parallel {
        return (0..src.n_chunks())
            .into_par_iter()
            .map(block)
            .try_reduce(
                || CrossProducts::zeros(p, q),
                |mut a, b| {
                    a.accumulate(&b);
                    Ok(a)
                },
            );
    }
    let mut acc = CrossProducts::zeros(p, q);
    for g in 0..src.n_chunks() {
        acc.accumulate(&block(g)?);
    }
    Ok(acc)
}

fn chunked_moments<S: ChunkSource + ?Sized>(src: &S) -> Result<(ColumnMoments, ColumnMoments)> {
    let (p, q) = src.dims();
    let mut mx = ColumnMoments::empty(p);
    let mut my = ColumnMoments::empty(q);
    for g in 0..src.n_chunks() {
        let (x, y) = checked_chunk(src, g)?;
        mx.merge(&ColumnMoments::from_block(&x));
        my.merge(&ColumnMoments::from_block(&y));
    }
    Ok((mx, my))
}

/// A source whose chunks are served centered (and optionally scaled).
pub struct CenteredChunks<S> {
    src: S,
    pub centering: Centering,
    /// Sample standard deviations, whether or not scaling is applied.
    pub x_sds: Vector,
    pub y_sds: Vector,
}

impl<S: ChunkSource> CenteredChunks<S> {
    pub fn x_means(&self) -> &Vector {
        &self.centering.x_means
    }

    pub fn y_means(&self) -> &Vector {
        &self.centering.y_means
    }

    pub fn into_inner(self) -> S {
        self.src
    }
}

impl<S: ChunkSource> ChunkSource for CenteredChunks<S> {
    fn n_chunks(&self) -> usize {
        self.src.n_chunks()
    }
    fn dims(&self) -> (usize, usize) {
        self.src.dims()
    }
    fn chunk_len(&self, g: usize) -> usize {
        self.src.chunk_len(g)
    }
    fn read_chunk(&self, g: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        let (mut x, mut y) = checked_chunk(&self.src, g)?;
        self.centering.process_x(&mut x);
        self.centering.process_y(&mut y);
        Ok((x, y))
    }
}

/// First pass: column moments. The returned view centers each chunk on read.
pub fn chunked_center<S: ChunkSource>(src: S, scale: bool) -> Result<CenteredChunks<S>> {
    let (mx, my) = chunked_moments(&src)?;
    if mx.n < 2 {
        return Err(PlsError::InvalidInput("centering needs at least two rows".into()));
    }
    Ok(CenteredChunks {
        centering: Centering::from_moments(&mx, &my, true, scale),
        x_sds: Vector::from_vec(mx.sds()),
        y_sds: Vector::from_vec(my.sds()),
        src,
    })
}

/// Score (and fitted-value) pass: per chunk, `sink(g, Ξ_g, Ω_g)`.
pub fn stream_scores<S, F>(src: &S, model: &PlsFit, mut sink: F) -> Result<()>
where
    S: ChunkSource + ?Sized,
    F: FnMut(usize, DenseMatrix, DenseMatrix) -> Result<()>,
{
    check_dims(src, model)?;
    for g in 0..src.n_chunks() {
        let (mut x, mut y) = checked_chunk(src, g)?;
        model.centering.process_x(&mut x);
        model.centering.process_y(&mut y);
        let (xi, om) = model.scores_for(&x, &y);
        sink(g, xi, om)?;
    }
    Ok(())
}

fn check_dims<S: ChunkSource + ?Sized>(src: &S, model: &PlsFit) -> Result<()> {
    if src.dims() != (model.p, model.q) {
        return Err(PlsError::DimensionMismatch(format!(
            "source is {:?}, model was fit on ({}, {})",
            src.dims(),
            model.p,
            model.q
        )));
    }
    Ok(())
}

/// Fit from a chunked source in `(p, q)`-space.
///
/// Two passes build the centered cross-products; the component loop then
/// runs on the recursions. With `keep_scores`, a third pass collects scores
/// and, for regression, fitted values.
pub fn fit_bigdata<S: ChunkSource + ?Sized>(
    src: &S,
    mode: PlsMode,
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
) -> Result<PlsFit> {
    if opts.scale && !opts.center {
        return Err(PlsError::InvalidInput("scaling requires centering".into()));
    }
    let (mx, my) = chunked_moments(src)?;
    let centering = Centering::from_moments(&mx, &my, opts.center, opts.scale);
    let view = CenteredChunks {
        src,
        centering,
        x_sds: Vector::zeros(0),
        y_sds: Vector::zeros(0),
    };
    let prods = chunked_products(&view, opts.parallel_reduce)?;
    let mut model = fit_products(&prods, view.centering, mode, h, pen_u, pen_v, opts)?;

    if opts.keep_scores {
        let k = model.n_components();
        let n = prods.n;
        let mut xi = DenseMatrix::zeros(n, k);
        let mut om = DenseMatrix::zeros(n, k);
        let mut fitted = model.coefficients.as_ref().map(|b| DenseMatrix::zeros(n, b.ncols()));
        let mut at = 0;
        for g in 0..src.n_chunks() {
            let (mut x, mut y) = checked_chunk(src, g)?;
            model.centering.process_x(&mut x);
            model.centering.process_y(&mut y);
            let len = x.nrows();
            let (a, b) = model.scores_for(&x, &y);
            xi.rows_mut(at, len).copy_from(&a);
            om.rows_mut(at, len).copy_from(&b);
            if let (Some(f), Some(coef)) = (fitted.as_mut(), model.coefficients.as_ref()) {
                let mut yhat = &x * coef;
                model.centering.restore_y(&mut yhat);
                f.rows_mut(at, len).copy_from(&yhat);
            }
            at += len;
        }
        model.x_scores = Some(xi);
        model.y_scores = Some(om);
        model.fitted = fitted;
    }
    Ok(model)
}
