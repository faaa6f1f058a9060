use crate::linalg::{check_finite, svd_full, DenseMatrix, SvdTriple, Vector};
use crate::{PlsError, Result};

/// A `p×q` matrix held as row blocks `M_i` of `g_i×q`.
#[derive(Debug, Clone)]
pub struct RowBlockPartition {
    blocks: Vec<DenseMatrix>,
}

impl RowBlockPartition {
    pub fn new(blocks: Vec<DenseMatrix>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(PlsError::InvalidInput("partition needs at least one block".into()));
        };
        let q = first.ncols();
        if blocks.iter().any(|b| b.ncols() != q) {
            return Err(PlsError::DimensionMismatch("blocks differ in column count".into()));
        }
        Ok(RowBlockPartition { blocks })
    }

    /// Split `m` into consecutive row blocks of the given heights.
    pub fn from_matrix(m: &DenseMatrix, sizes: &[usize]) -> Result<Self> {
        if sizes.iter().sum::<usize>() != m.nrows() {
            return Err(PlsError::InvalidInput(format!(
                "block heights sum to {}, matrix has {} rows",
                sizes.iter().sum::<usize>(),
                m.nrows()
            )));
        }
        let mut at = 0;
        let mut blocks = Vec::with_capacity(sizes.len());
        for &g in sizes {
            blocks.push(m.rows(at, g).into_owned());
            at += g;
        }
        Self::new(blocks)
    }

    /// `s` blocks of near-equal height.
    pub fn uniform(m: &DenseMatrix, s: usize) -> Result<Self> {
        let sizes = super::chunk_plan(m.nrows(), s)?;
        Self::from_matrix(m, &sizes)
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.blocks
    }

    pub fn nrows(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn ncols(&self) -> usize {
        self.blocks[0].ncols()
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.nrows(), self.ncols());
        let mut at = 0;
        for b in &self.blocks {
            m.rows_mut(at, b.nrows()).copy_from(b);
            at += b.nrows();
        }
        m
    }

    /// `M v`, block by block.
    fn mul_vec(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.nrows());
        let mut at = 0;
        for b in &self.blocks {
            out.rows_mut(at, b.nrows()).copy_from(&(b * v));
            at += b.nrows();
        }
        out
    }
}

/// How the left singular vector is put together after the merge SVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assembly {
    /// Slice by slice from the block factors and the merge matrix's left vector.
    #[default]
    Blockwise,
    /// `u = M v / ‖M v‖`, one more pass over the blocks.
    Shortcut,
}

/// Leading singular triple of a row-partitioned matrix via split and merge.
pub fn block_svd_leading(part: &RowBlockPartition) -> Result<SvdTriple> {
    block_svd_leading_with(part, Assembly::Blockwise)
}

/// Each block `M_i = U_i D_i V_iᵀ` contributes the `q×q` rows `D_i V_iᵀ` to the
/// merge matrix, whose SVD `U* D* V*ᵀ` shares `D*` and `V*` with `M`.
pub fn block_svd_leading_with(part: &RowBlockPartition, assembly: Assembly) -> Result<SvdTriple> {
    let q = part.ncols();
    let p = part.nrows();
    for (i, b) in part.blocks.iter().enumerate() {
        if b.nrows() < q {
            return Err(PlsError::UnsupportedShape(format!(
                "block {i} has {} rows, fewer than the {q} columns the merge needs",
                b.nrows()
            )));
        }
        check_finite(b, "block")?;
    }
    if q == 0 || p == 0 {
        return Ok(SvdTriple::zero(p, q));
    }

    let factors = part.blocks.iter().map(svd_full).collect::<Result<Vec<_>>>()?;
    let mut merge = DenseMatrix::zeros(q * factors.len(), q);
    for (i, f) in factors.iter().enumerate() {
        let mut dv = f.v.transpose();
        for (k, d) in f.deltas.iter().enumerate() {
            dv.row_mut(k).scale_mut(*d);
        }
        merge.rows_mut(i * q, q).copy_from(&dv);
    }
    let star = svd_full(&merge)?;
    let delta = star.deltas[0];
    if delta == 0.0 {
        return Ok(SvdTriple::zero(p, q));
    }
    let v = star.v.column(0).into_owned();
    let u = match assembly {
        Assembly::Blockwise => {
            let lead = star.u.column(0);
            let mut u = Vector::zeros(p);
            let mut at = 0;
            for (i, f) in factors.iter().enumerate() {
                let g = f.u.nrows();
                u.rows_mut(at, g).copy_from(&(&f.u * lead.rows(i * q, q)));
                at += g;
            }
            u
        }
        Assembly::Shortcut => {
            let mv = part.mul_vec(&v);
            let norm = mv.norm();
            mv / norm
        }
    };
    let mut t = SvdTriple { delta, u, v, degenerate: false };
    t.fix_sign();
    Ok(t)
}
