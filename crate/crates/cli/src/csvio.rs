//! Numeric CSV reading and writing.
//!
//! Readers stream records, auto-detect a header (first row with any
//! non-numeric field) and report bad cells with their line number.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plsforge::DenseMatrix;

use crate::error::{CliError, CliResult, Code};

pub struct NumericCsv {
    path: String,
    reader: csv::Reader<File>,
    pub header: Option<Vec<String>>,
    /// First data record when the first row was not a header.
    pending: Option<(u64, Vec<f64>)>,
    width: Option<usize>,
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &str, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(_) => CliError::new(Code::Io, format!("{path}: {e}")),
        _ => CliError::input(format!("{path}, line {line}: {e}")),
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl NumericCsv {
    pub fn open(path: &Path) -> CliResult<Self> {
        let mut rd = reader(path)?;
        let name = path.display().to_string();
        let mut rec = csv::StringRecord::new();
        let got = rd.read_record(&mut rec).map_err(|e| csv_error(&name, e))?;
        let mut out = NumericCsv { path: name, reader: rd, header: None, pending: None, width: None };
        if got {
            let line = rec.position().map_or(1, |p| p.line());
            let parsed: Option<Vec<f64>> = rec.iter().map(parse_cell).collect();
            match parsed {
                Some(v) => {
                    out.width = Some(v.len());
                    out.pending = Some((line, v));
                }
                None => {
                    out.header = Some(rec.iter().map(str::to_string).collect());
                    out.width = Some(rec.len());
                }
            }
        }
        Ok(out)
    }

    /// Column count from the header or first row; `None` for an empty file.
    pub fn width(&self) -> Option<usize> {
        self.width
    }

    /// Next data row with its 1-based line number.
    pub fn next_row(&mut self) -> CliResult<Option<(u64, Vec<f64>)>> {
        if let Some(r) = self.pending.take() {
            return Ok(Some(r));
        }
        let mut rec = csv::StringRecord::new();
        loop {
            if !self.reader.read_record(&mut rec).map_err(|e| csv_error(&self.path, e))? {
                return Ok(None);
            }
            // tolerate blank lines
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            break;
        }
        let line = rec.position().map_or(0, |p| p.line());
        let width = *self.width.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(CliError::input(format!(
                "{}, line {line}: expected {width} fields, found {}",
                self.path,
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(width);
        for (j, cell) in rec.iter().enumerate() {
            match parse_cell(cell) {
                Some(v) => row.push(v),
                None => {
                    return Err(CliError::input(format!(
                        "{}, line {line}, column {}: not a finite number: '{cell}'",
                        self.path,
                        j + 1
                    )))
                }
            }
        }
        Ok(Some((line, row)))
    }
}

/// Whole numeric CSV as a matrix. An empty file (or header only) gives `0×width`.
pub fn read_matrix(path: &Path) -> CliResult<DenseMatrix> {
    let mut csv = NumericCsv::open(path)?;
    let mut data = Vec::new();
    let mut n = 0;
    while let Some((_, row)) = csv.next_row()? {
        data.extend(row);
        n += 1;
    }
    let p = csv.width().unwrap_or(0);
    Ok(DenseMatrix::from_row_slice(n, p, &data))
}

/// Single-column label file; `header` skips the first line.
pub fn read_labels(path: &Path, header: bool) -> CliResult<Vec<String>> {
    let mut rd = reader(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    let mut rec = csv::StringRecord::new();
    let mut first = true;
    while rd.read_record(&mut rec).map_err(|e| csv_error(&name, e))? {
        let line = rec.position().map_or(0, |p| p.line());
        if std::mem::take(&mut first) && header {
            continue;
        }
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 1 {
            return Err(CliError::input(format!(
                "{name}, line {line}: expected one label, found {} fields",
                rec.len()
            )));
        }
        out.push(rec[0].to_string());
    }
    Ok(out)
}

pub fn numbered(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Matrix as CSV with a header row. `row_names` adds a leading column.
pub fn write_matrix(
    path: &Path,
    header: &[String],
    m: &DenseMatrix,
    row_names: Option<(&str, &[String])>,
) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    let mut line = String::new();
    if let Some((title, _)) = row_names {
        line.push_str(title);
        line.push(',');
    }
    line.push_str(&header.join(","));
    writeln!(w, "{line}").map_err(io)?;
    for i in 0..m.nrows() {
        line.clear();
        if let Some((_, names)) = row_names {
            line.push_str(&names[i]);
            line.push(',');
        }
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            // shortest representation that parses back to the same f64
            line.push_str(&m[(i, j)].to_string());
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Incremental writer used for streamed outputs.
pub struct RowWriter {
    path: std::path::PathBuf,
    w: BufWriter<File>,
}

impl RowWriter {
    pub fn create(path: &Path, header: &[String]) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut rw = RowWriter { path: path.to_path_buf(), w: BufWriter::new(file) };
        rw.line(&header.join(","))?;
        Ok(rw)
    }

    pub fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.w, "{s}").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn rows(&mut self, m: &DenseMatrix) -> CliResult<()> {
        for i in 0..m.nrows() {
            let cells: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
            self.line(&cells.join(","))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.w.flush().map_err(|e| CliError::io(&self.path, e))
    }
}
