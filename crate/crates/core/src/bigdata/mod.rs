//! Out-of-core and streaming paths.
//!
//! A [`ChunkSource`] yields aligned row blocks of `(X, Y)`. Everything the
//! component loop needs is a `p×q`, `p×p` or `q×q` product, so a fit over
//! chunks costs two passes (moments, products) plus an optional score pass.

mod block_svd;
mod dataset;
mod incremental;
mod products;

use crate::linalg::DenseMatrix;
use crate::{PlsError, Result};

pub use block_svd::{block_svd_leading, block_svd_leading_with, Assembly, RowBlockPartition};
pub use dataset::{
    chunk_plan, chunk_plan_rows, default_chunk_rows, read_all, write_dataset, ChunkedDataset,
    DatasetWriter, Manifest, MANIFEST_FILE,
};
pub use incremental::{incremental_update, IncrementalState, DEFAULT_REORTH_INTERVAL};
pub use products::{
    chunked_center, chunked_cross_product, chunked_products, fit_bigdata, stream_scores,
    CenteredChunks,
};

/// Aligned row blocks of two data matrices, readable repeatedly in a stable order.
///
/// Implementations must allow concurrent `read_chunk` calls.
pub trait ChunkSource: Sync {
    fn n_chunks(&self) -> usize;
    /// `(p, q)`.
    fn dims(&self) -> (usize, usize);
    fn chunk_len(&self, g: usize) -> usize;
    fn read_chunk(&self, g: usize) -> Result<(DenseMatrix, DenseMatrix)>;

    fn n_rows(&self) -> usize {
        (0..self.n_chunks()).map(|g| self.chunk_len(g)).sum()
    }
}

impl<S: ChunkSource + ?Sized> ChunkSource for &S {
    fn n_chunks(&self) -> usize {
        (**self).n_chunks()
    }
    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }
    fn chunk_len(&self, g: usize) -> usize {
        (**self).chunk_len(g)
    }
    fn read_chunk(&self, g: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        (**self).read_chunk(g)
    }
}

/// Read a chunk and check it against the source's declared shape.
pub(crate) fn checked_chunk<S: ChunkSource + ?Sized>(
    src: &S,
    g: usize,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (p, q) = src.dims();
    let rows = src.chunk_len(g);
    let (x, y) = src.read_chunk(g).map_err(|e| e.in_chunk(g))?;
    if x.shape() != (rows, p) || y.shape() != (rows, q) {
        return Err(PlsError::Manifest(format!(
            "expected {rows}x{p} and {rows}x{q} blocks, got {}x{} and {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        ))
        .in_chunk(g));
    }
    Ok((x, y))
}

/// Row blocks of in-memory matrices.
#[derive(Debug, Clone)]
pub struct InMemoryChunks<'a> {
    x: &'a DenseMatrix,
    y: &'a DenseMatrix,
    offsets: Vec<usize>,
}

impl<'a> InMemoryChunks<'a> {
    /// Split into `g` chunks of near-equal size.
    pub fn new(x: &'a DenseMatrix, y: &'a DenseMatrix, g: usize) -> Result<Self> {
        let plan = chunk_plan(x.nrows(), g)?;
        Self::with_sizes(x, y, &plan)
    }

    pub fn with_sizes(x: &'a DenseMatrix, y: &'a DenseMatrix, sizes: &[usize]) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(PlsError::DimensionMismatch(format!(
                "X has {} rows, Y has {} rows",
                x.nrows(),
                y.nrows()
            )));
        }
        if sizes.iter().sum::<usize>() != x.nrows() {
            return Err(PlsError::InvalidInput("chunk sizes do not cover the rows".into()));
        }
        let mut offsets = vec![0];
        for s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(InMemoryChunks { x, y, offsets })
    }
}

impl ChunkSource for InMemoryChunks<'_> {
    fn n_chunks(&self) -> usize {
        self.offsets.len() - 1
    }
    fn dims(&self) -> (usize, usize) {
        (self.x.ncols(), self.y.ncols())
    }
    fn chunk_len(&self, g: usize) -> usize {
        self.offsets[g + 1] - self.offsets[g]
    }
    fn read_chunk(&self, g: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        let (a, len) = (self.offsets[g], self.chunk_len(g));
        Ok((self.x.rows(a, len).into_owned(), self.y.rows(a, len).into_owned()))
    }
}

/// Regroup the rows of another source into a different number of chunks.
pub struct Regrouped<S> {
    inner: S,
    inner_offsets: Vec<usize>,
    offsets: Vec<usize>,
}

impl<S: ChunkSource> Regrouped<S> {
    pub fn new(inner: S, g: usize) -> Result<Self> {
        let mut inner_offsets = vec![0];
        for k in 0..inner.n_chunks() {
            inner_offsets.push(inner_offsets.last().unwrap() + inner.chunk_len(k));
        }
        let plan = chunk_plan(*inner_offsets.last().unwrap(), g)?;
        let mut offsets = vec![0];
        for s in plan {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(Regrouped { inner, inner_offsets, offsets })
    }
}

impl<S: ChunkSource> ChunkSource for Regrouped<S> {
    fn n_chunks(&self) -> usize {
        self.offsets.len() - 1
    }
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }
    fn chunk_len(&self, g: usize) -> usize {
        self.offsets[g + 1] - self.offsets[g]
    }
    fn read_chunk(&self, g: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        let (p, q) = self.dims();
        let (a, b) = (self.offsets[g], self.offsets[g + 1]);
        let mut x = DenseMatrix::zeros(b - a, p);
        let mut y = DenseMatrix::zeros(b - a, q);
        for k in 0..self.inner.n_chunks() {
            let (ia, ib) = (self.inner_offsets[k], self.inner_offsets[k + 1]);
            let (lo, hi) = (a.max(ia), b.min(ib));
            if lo >= hi {
                continue;
            }
            let (cx, cy) = checked_chunk(&self.inner, k)?;
            x.rows_mut(lo - a, hi - lo).copy_from(&cx.rows(lo - ia, hi - lo));
            y.rows_mut(lo - a, hi - lo).copy_from(&cy.rows(lo - ia, hi - lo));
        }
        Ok((x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_memory_chunks_split_evenly() {
        let x = DenseMatrix::from_fn(10, 2, |i, j| (i * 2 + j) as f64);
        let y = DenseMatrix::from_fn(10, 1, |i, _| i as f64);
        let src = InMemoryChunks::new(&x, &y, 3).unwrap();
        assert_eq!(src.n_chunks(), 3);
        assert_eq!((0..3).map(|g| src.chunk_len(g)).collect::<Vec<_>>(), vec![4, 3, 3]);
        let (cx, cy) = src.read_chunk(1).unwrap();
        assert_eq!(cx[(0, 0)], 8.0);
        assert_eq!(cy[(2, 0)], 6.0);
        assert_eq!(src.n_rows(), 10);
    }

    #[test]
    fn regrouped_reassembles_rows() {
        let x = DenseMatrix::from_fn(11, 3, |i, j| (i * 3 + j) as f64);
        let y = DenseMatrix::from_fn(11, 2, |i, j| -((i * 2 + j) as f64));
        let src = InMemoryChunks::new(&x, &y, 4).unwrap();
        let re = Regrouped::new(&src, 2).unwrap();
        let (ax, ay) = read_all(&re).unwrap();
        assert_eq!(ax, x);
        assert_eq!(ay, y);
        assert_eq!(re.n_chunks(), 2);
    }

    #[test]
    fn mismatched_rows_rejected() {
        let x = DenseMatrix::zeros(4, 2);
        let y = DenseMatrix::zeros(5, 1);
        assert!(InMemoryChunks::new(&x, &y, 2).is_err());
        assert!(InMemoryChunks::new(&x, &DenseMatrix::zeros(4, 1), 5).is_err());
    }
}
