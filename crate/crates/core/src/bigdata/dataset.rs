use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{checked_chunk, ChunkSource};
use crate::linalg::DenseMatrix;
use crate::{PlsError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;
const DEFAULT_CHUNK_ROWS: usize = 100_000;
const DEFAULT_CHUNK_BYTES: usize = 256 << 20;

/// `manifest.json` of a chunked dataset directory.
///
/// Each chunk is a pair of raw little-endian `f64` files, row-major within
/// the chunk: `x_files[g]` holds `chunk_rows[g]×p` values and `y_files[g]`
/// holds `chunk_rows[g]×q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "G")]
    pub chunks: usize,
    pub chunk_rows: Vec<usize>,
    pub x_files: Vec<String>,
    pub y_files: Vec<String>,
    pub endianness: String,
    pub dtype: String,
    /// Class names for dummy-coded responses, in column order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PlsError::Manifest(m));
        if self.version != FORMAT_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.endianness != "little" || self.dtype != "f64" {
            return bad(format!("unsupported encoding {}/{}", self.endianness, self.dtype));
        }
        if self.chunk_rows.len() != self.chunks
            || self.x_files.len() != self.chunks
            || self.y_files.len() != self.chunks
        {
            return bad(format!("chunk lists do not all have G = {} entries", self.chunks));
        }
        if self.chunk_rows.iter().sum::<usize>() != self.n {
            return bad(format!("chunk rows do not sum to n = {}", self.n));
        }
        if let Some(c) = &self.classes {
            if c.len() != self.q {
                return bad(format!("{} class names for q = {}", c.len(), self.q));
            }
        }
        let unsafe_name = |f: &String| f.is_empty() || f.contains('/') || f.contains('\\') || f == "..";
        if self.x_files.iter().chain(&self.y_files).any(unsafe_name) {
            return bad("chunk file names must be plain file names".into());
        }
        Ok(())
    }
}

/// Near-equal split of `n` rows into `g` chunks; earlier chunks take the remainder.
pub fn chunk_plan(n: usize, g: usize) -> Result<Vec<usize>> {
    if g == 0 {
        return Err(PlsError::InvalidInput("chunk count must be at least 1".into()));
    }
    if g > n.max(1) {
        return Err(PlsError::InvalidInput(format!("cannot split {n} rows into {g} chunks")));
    }
    let (base, extra) = (n / g, n % g);
    Ok((0..g).map(|i| base + usize::from(i < extra)).collect())
}

/// Chunks of at most `rows` rows each.
pub fn chunk_plan_rows(n: usize, rows: usize) -> Result<Vec<usize>> {
    if rows == 0 {
        return Err(PlsError::InvalidInput("chunk size must be at least 1 row".into()));
    }
    if n == 0 {
        return Ok(vec![0]);
    }
    let mut plan = vec![rows; n / rows];
    if n % rows != 0 {
        plan.push(n % rows);
    }
    Ok(plan)
}

/// 10⁵ rows or 256 MiB per chunk, whichever is smaller.
pub fn default_chunk_rows(p: usize, q: usize) -> usize {
    let row_bytes = 8 * (p + q).max(1);
    DEFAULT_CHUNK_ROWS.min(DEFAULT_CHUNK_BYTES / row_bytes).max(1)
}

/// A chunked dataset directory opened for reading.
#[derive(Debug, Clone)]
pub struct ChunkedDataset {
    dir: PathBuf,
    manifest: Manifest,
}

impl ChunkedDataset {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| PlsError::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| PlsError::Manifest(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(ChunkedDataset { dir, manifest })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read_block(&self, file: &str, rows: usize, cols: usize) -> Result<DenseMatrix> {
        let path = self.dir.join(file);
        let mut bytes = Vec::with_capacity(rows * cols * 8);
        File::open(&path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| PlsError::io(&path, e))?;
        if bytes.len() != rows * cols * 8 {
            return Err(PlsError::Manifest(format!(
                "{} has {} bytes, expected {}",
                path.display(),
                bytes.len(),
                rows * cols * 8
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        Ok(DenseMatrix::from_row_slice(rows, cols, &values))
    }
}

impl ChunkSource for ChunkedDataset {
    fn n_chunks(&self) -> usize {
        self.manifest.chunks
    }
    fn dims(&self) -> (usize, usize) {
        (self.manifest.p, self.manifest.q)
    }
    fn chunk_len(&self, g: usize) -> usize {
        self.manifest.chunk_rows[g]
    }
    fn read_chunk(&self, g: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        let m = &self.manifest;
        let rows = m.chunk_rows[g];
        Ok((self.read_block(&m.x_files[g], rows, m.p)?, self.read_block(&m.y_files[g], rows, m.q)?))
    }
}

/// Streaming writer for a chunked dataset; rows are appended in order.
pub struct DatasetWriter {
    dir: PathBuf,
    p: usize,
    q: usize,
    plan: Vec<usize>,
    chunk: usize,
    rows_in_chunk: usize,
    writers: Option<(BufWriter<File>, BufWriter<File>)>,
    x_files: Vec<String>,
    y_files: Vec<String>,
    classes: Option<Vec<String>>,
}

impl DatasetWriter {
    /// Create `dir` (if needed) and prepare to write chunks of the planned sizes.
    pub fn create(dir: impl AsRef<Path>, p: usize, q: usize, plan: Vec<usize>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if plan.is_empty() {
            return Err(PlsError::InvalidInput("empty chunk plan".into()));
        }
        fs::create_dir_all(&dir).map_err(|e| PlsError::io(&dir, e))?;
        let mut w = DatasetWriter {
            dir,
            p,
            q,
            plan,
            chunk: 0,
            rows_in_chunk: 0,
            writers: None,
            x_files: Vec::new(),
            y_files: Vec::new(),
            classes: None,
        };
        w.open_chunk()?;
        Ok(w)
    }

    pub fn set_classes(&mut self, classes: Vec<String>) {
        self.classes = Some(classes);
    }

    fn open_chunk(&mut self) -> Result<()> {
        let xf = format!("x_{:05}.bin", self.chunk);
        let yf = format!("y_{:05}.bin", self.chunk);
        let open = |name: &str| {
            let path = self.dir.join(name);
            File::create(&path).map(BufWriter::new).map_err(|e| PlsError::io(&path, e))
        };
        self.writers = Some((open(&xf)?, open(&yf)?));
        self.x_files.push(xf);
        self.y_files.push(yf);
        self.rows_in_chunk = 0;
        Ok(())
    }

    fn close_chunk(&mut self) -> Result<()> {
        if let Some((mut xw, mut yw)) = self.writers.take() {
            let xf = self.dir.join(self.x_files.last().expect("open chunk"));
            xw.flush().map_err(|e| PlsError::io(&xf, e))?;
            let yf = self.dir.join(self.y_files.last().expect("open chunk"));
            yw.flush().map_err(|e| PlsError::io(&yf, e))?;
        }
        Ok(())
    }

    pub fn push_row(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.p || y.len() != self.q {
            return Err(PlsError::DimensionMismatch(format!(
                "row has {}+{} values, dataset has {}+{}",
                x.len(),
                y.len(),
                self.p,
                self.q
            )));
        }
        while self.rows_in_chunk == self.plan[self.chunk] {
            if self.chunk + 1 == self.plan.len() {
                return Err(PlsError::InvalidInput("more rows than planned".into()));
            }
            self.close_chunk()?;
            self.chunk += 1;
            self.open_chunk()?;
        }
        let (xw, yw) = self.writers.as_mut().expect("open chunk");
        let put = |w: &mut BufWriter<File>, vals: &[f64], file: &str| -> Result<()> {
            for v in vals {
                w.write_all(&v.to_le_bytes()).map_err(|e| PlsError::io(file, e))?;
            }
            Ok(())
        };
        put(xw, x, &self.x_files[self.chunk])?;
        put(yw, y, &self.y_files[self.chunk])?;
        self.rows_in_chunk += 1;
        Ok(())
    }

    /// Flush the last chunk and write the manifest.
    pub fn finish(mut self) -> Result<Manifest> {
        let complete = self.chunk + 1 == self.plan.len() && self.rows_in_chunk == self.plan[self.chunk];
        if !complete {
            return Err(PlsError::InvalidInput("fewer rows written than planned".into()));
        }
        self.close_chunk()?;
        let manifest = Manifest {
            version: FORMAT_VERSION,
            n: self.plan.iter().sum(),
            p: self.p,
            q: self.q,
            chunks: self.plan.len(),
            chunk_rows: self.plan.clone(),
            x_files: std::mem::take(&mut self.x_files),
            y_files: std::mem::take(&mut self.y_files),
            endianness: "little".into(),
            dtype: "f64".into(),
            classes: self.classes.take(),
        };
        manifest.validate()?;
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| PlsError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Write in-memory matrices as a chunked dataset.
pub fn write_dataset(
    dir: impl AsRef<Path>,
    x: &DenseMatrix,
    y: &DenseMatrix,
    plan: Vec<usize>,
) -> Result<Manifest> {
    if x.nrows() != y.nrows() {
        return Err(PlsError::DimensionMismatch("X and Y row counts differ".into()));
    }
    let mut w = DatasetWriter::create(dir, x.ncols(), y.ncols(), plan)?;
    let mut xr = vec![0.0; x.ncols()];
    let mut yr = vec![0.0; y.ncols()];
    for i in 0..x.nrows() {
        xr.iter_mut().enumerate().for_each(|(j, v)| *v = x[(i, j)]);
        yr.iter_mut().enumerate().for_each(|(j, v)| *v = y[(i, j)]);
        w.push_row(&xr, &yr)?;
    }
    w.finish()
}

/// Concatenate every chunk of a source into two matrices.
pub fn read_all<S: ChunkSource + ?Sized>(src: &S) -> Result<(DenseMatrix, DenseMatrix)> {
    let (p, q) = src.dims();
    let n = src.n_rows();
    let mut x = DenseMatrix::zeros(n, p);
    let mut y = DenseMatrix::zeros(n, q);
    let mut at = 0;
    for g in 0..src.n_chunks() {
        let (cx, cy) = checked_chunk(src, g)?;
        let len = cx.nrows();
        x.rows_mut(at, len).copy_from(&cx);
        y.rows_mut(at, len).copy_from(&cy);
        at += len;
    }
    Ok((x, y))
}
