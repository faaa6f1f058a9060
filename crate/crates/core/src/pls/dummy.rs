use std::collections::HashMap;
use std::hash::Hash;

use crate::linalg::DenseMatrix;
use crate::{PlsError, Result};

/// Indicator coding of a categorical response.
#[derive(Debug, Clone)]
pub struct DummyResponse<L> {
    /// Column index of each observation's class.
    pub labels: Vec<usize>,
    /// Class values in column order (order of first appearance).
    pub classes: Vec<L>,
    /// `n×c` 0/1 indicator matrix.
    pub y: DenseMatrix,
}

impl<L> DummyResponse<L> {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

pub fn encode_dummy<L: Clone + Eq + Hash>(labels: &[L]) -> Result<DummyResponse<L>> {
    let mut index: HashMap<&L, usize> = HashMap::new();
    let mut classes = Vec::new();
    let mut codes = Vec::with_capacity(labels.len());
    for l in labels {
        let next = classes.len();
        let k = *index.entry(l).or_insert_with(|| {
            classes.push(l.clone());
            next
        });
        codes.push(k);
    }
    if classes.len() < 2 {
        return Err(PlsError::InvalidInput("need at least two distinct labels".into()));
    }
    let mut y = DenseMatrix::zeros(labels.len(), classes.len());
    for (i, &k) in codes.iter().enumerate() {
        y[(i, k)] = 1.0;
    }
    Ok(DummyResponse { labels: codes, classes, y })
}
