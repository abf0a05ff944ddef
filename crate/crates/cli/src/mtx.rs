//! Matrix Market readers and writers, plus plain-text vectors.
//!
//! Coordinate and array formats are supported for real general and real
//! symmetric matrices. Values are written with 17 significant digits so a
//! write/read cycle reproduces every f64 bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use sqsolve_core::{CsrMatrix, MatrixSq};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MtxError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("matrix in {0} has no nonzero entries")]
    EmptyMatrix(String),
}

/// A loaded matrix in either dense or sparse storage.
#[derive(Clone, Debug)]
pub enum MatrixData {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl MatrixData {
    pub fn nrows(&self) -> usize {
        match self {
            MatrixData::Dense(a) => a.nrows(),
            MatrixData::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixData::Dense(a) => a.ncols(),
            MatrixData::Sparse(a) => a.ncols(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            MatrixData::Dense(a) => a.clone(),
            MatrixData::Sparse(a) => a.to_dense(),
        }
    }

    pub fn to_matrix_sq(&self) -> sqsolve_core::Result<MatrixSq> {
        match self {
            MatrixData::Dense(a) => MatrixSq::from_dense(a),
            MatrixData::Sparse(a) => MatrixSq::from_csr(a),
        }
    }
}

struct LineReader {
    path: String,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
}

impl LineReader {
    fn open(path: &Path) -> Result<Self, MtxError> {
        let file = File::open(path).map_err(|source| MtxError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            path: path.display().to_string(),
            lines: BufReader::new(file).lines(),
            line_no: 0,
        })
    }

    fn error(&self, message: impl Into<String>) -> MtxError {
        MtxError::Parse {
            path: self.path.clone(),
            line: self.line_no,
            message: message.into(),
        }
    }

    fn next_raw(&mut self) -> Result<Option<String>, MtxError> {
        match self.lines.next() {
            None => Ok(None),
            Some(Ok(l)) => {
                self.line_no += 1;
                Ok(Some(l))
            }
            Some(Err(source)) => Err(MtxError::Io {
                path: self.path.clone(),
                source,
            }),
        }
    }

    /// Next line that is neither blank nor a comment.
    fn next_data(&mut self) -> Result<Option<String>, MtxError> {
        loop {
            match self.next_raw()? {
                None => return Ok(None),
                Some(l) => {
                    let t = l.trim();
                    if !t.is_empty() && !t.starts_with('%') {
                        return Ok(Some(t.to_string()));
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum MtxFormat {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq)]
enum MtxSymmetry {
    General,
    Symmetric,
}

fn parse_header(reader: &mut LineReader) -> Result<(MtxFormat, MtxSymmetry), MtxError> {
    let line = reader
        .next_raw()?
        .ok_or_else(|| reader.error("empty file"))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%MatrixMarket" {
        return Err(
            reader.error("header must be '%%MatrixMarket matrix <format> <field> <symmetry>'")
        );
    }
    if fields[1] != "matrix" {
        return Err(reader.error(format!("unsupported object '{}'", fields[1])));
    }
    let format = match fields[2] {
        "coordinate" => MtxFormat::Coordinate,
        "array" => MtxFormat::Array,
        other => return Err(reader.error(format!("unsupported format '{other}'"))),
    };
    match fields[3] {
        "real" | "integer" => {}
        other => return Err(reader.error(format!("unsupported field type '{other}'"))),
    }
    let symmetry = match fields[4] {
        "general" => MtxSymmetry::General,
        "symmetric" => MtxSymmetry::Symmetric,
        other => return Err(reader.error(format!("unsupported symmetry '{other}'"))),
    };
    Ok((format, symmetry))
}

fn parse_usize(reader: &LineReader, token: &str) -> Result<usize, MtxError> {
    token
        .parse()
        .map_err(|_| reader.error(format!("expected an integer, got '{token}'")))
}

fn parse_f64(reader: &LineReader, token: &str) -> Result<f64, MtxError> {
    let v: f64 = token
        .parse()
        .map_err(|_| reader.error(format!("expected a number, got '{token}'")))?;
    if !v.is_finite() {
        return Err(reader.error(format!("non-finite value '{token}'")));
    }
    Ok(v)
}

pub fn load_matrix_market(path: &Path) -> Result<MatrixData, MtxError> {
    let mut reader = LineReader::open(path)?;
    let (format, symmetry) = parse_header(&mut reader)?;
    let size_line = reader
        .next_data()?
        .ok_or_else(|| reader.error("missing size line"))?;
    let fields: Vec<&str> = size_line.split_whitespace().collect();

    match format {
        MtxFormat::Coordinate => {
            if fields.len() != 3 {
                return Err(reader.error("coordinate size line must be 'rows cols nnz'"));
            }
            let rows = parse_usize(&reader, fields[0])?;
            let cols = parse_usize(&reader, fields[1])?;
            let nnz = parse_usize(&reader, fields[2])?;
            let mut triplets = Vec::with_capacity(nnz * 2);
            for _ in 0..nnz {
                let line = reader
                    .next_data()?
                    .ok_or_else(|| reader.error("unexpected end of file inside entries"))?;
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(reader.error("coordinate entry must be 'i j value'"));
                }
                let i = parse_usize(&reader, f[0])?;
                let j = parse_usize(&reader, f[1])?;
                let v = parse_f64(&reader, f[2])?;
                if i < 1 || i > rows || j < 1 || j > cols {
                    return Err(reader.error(format!(
                        "entry ({i}, {j}) outside declared {rows}x{cols} shape"
                    )));
                }
                // One-based on disk.
                triplets.push((i - 1, j - 1, v));
                if symmetry == MtxSymmetry::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
            if reader.next_data()?.is_some() {
                return Err(reader.error("trailing data after declared entry count"));
            }
            let csr = CsrMatrix::from_triplets(rows, cols, &triplets)
                .map_err(|e| reader.error(e.to_string()))?;
            if csr.nnz() == 0 {
                return Err(MtxError::EmptyMatrix(reader.path));
            }
            Ok(MatrixData::Sparse(csr))
        }
        MtxFormat::Array => {
            if fields.len() != 2 {
                return Err(reader.error("array size line must be 'rows cols'"));
            }
            let rows = parse_usize(&reader, fields[0])?;
            let cols = parse_usize(&reader, fields[1])?;
            if symmetry == MtxSymmetry::Symmetric && rows != cols {
                return Err(reader.error("symmetric array matrix must be square"));
            }
            let mut a = DMatrix::zeros(rows, cols);
            // Column-major on disk; symmetric files store the lower triangle.
            for j in 0..cols {
                let start = if symmetry == MtxSymmetry::Symmetric {
                    j
                } else {
                    0
                };
                for i in start..rows {
                    let line = reader
                        .next_data()?
                        .ok_or_else(|| reader.error("unexpected end of file inside entries"))?;
                    let v = parse_f64(&reader, line.trim())?;
                    a[(i, j)] = v;
                    if symmetry == MtxSymmetry::Symmetric {
                        a[(j, i)] = v;
                    }
                }
            }
            if reader.next_data()?.is_some() {
                return Err(reader.error("trailing data after declared entry count"));
            }
            Ok(MatrixData::Dense(a))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, MtxError> {
    let file = File::create(path).map_err(|source| MtxError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

fn write_err(path: &Path, source: std::io::Error) -> MtxError {
    MtxError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes dense matrices in array format and sparse ones in coordinate
/// format, always as 'real general'.
pub fn save_matrix_market(path: &Path, matrix: &MatrixData) -> Result<(), MtxError> {
    let mut w = create(path)?;
    let result = match matrix {
        MatrixData::Dense(a) => writeln!(w, "%%MatrixMarket matrix array real general")
            .and_then(|_| writeln!(w, "{} {}", a.nrows(), a.ncols()))
            .and_then(|_| {
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        writeln!(w, "{:.17e}", a[(i, j)])?;
                    }
                }
                Ok(())
            }),
        MatrixData::Sparse(a) => writeln!(w, "%%MatrixMarket matrix coordinate real general")
            .and_then(|_| writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz()))
            .and_then(|_| {
                for (i, j, v) in a.triplets() {
                    writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
                }
                Ok(())
            }),
    };
    result
        .and_then(|_| w.flush())
        .map_err(|e| write_err(path, e))
}

/// Loads a vector from a Matrix Market array file (n x 1) or a plain
/// whitespace-separated text file.
pub fn load_vector(path: &Path) -> Result<Vec<f64>, MtxError> {
    let probe = File::open(path).map_err(|source| MtxError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut first_line = String::new();
    BufReader::new(probe)
        .read_line(&mut first_line)
        .map_err(|source| MtxError::Io {
            path: path.display().to_string(),
            source,
        })?;

    if first_line.starts_with("%%MatrixMarket") {
        let data = load_matrix_market(path)?;
        let dense = data.to_dense();
        if dense.ncols() != 1 {
            return Err(MtxError::Parse {
                path: path.display().to_string(),
                line: 2,
                message: format!("expected a single column, got {}", dense.ncols()),
            });
        }
        return Ok(dense.iter().copied().collect());
    }

    let mut reader = LineReader::open(path)?;
    let mut out = Vec::new();
    while let Some(line) = reader.next_data()? {
        for token in line.split_whitespace() {
            out.push(parse_f64(&reader, token)?);
        }
    }
    if out.is_empty() {
        return Err(MtxError::Parse {
            path: path.display().to_string(),
            line: reader.line_no,
            message: "no values found".into(),
        });
    }
    Ok(out)
}

pub fn save_vector(path: &Path, v: &[f64]) -> Result<(), MtxError> {
    let mut w = create(path)?;
    for x in v {
        writeln!(w, "{:.17e}", x).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn one_based_coordinate_indexing() {
        let f = write_temp("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 5.0\n");
        let m = load_matrix_market(f.path()).unwrap();
        let dense = m.to_dense();
        assert_eq!(dense[(0, 0)], 5.0);
        assert_eq!(dense[(1, 1)], 0.0);
    }

    #[test]
    fn symmetric_coordinate_mirrors() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2.0\n2 1 -1.5\n",
        );
        let dense = load_matrix_market(f.path()).unwrap().to_dense();
        assert_eq!(dense[(0, 1)], -1.5);
        assert_eq!(dense[(1, 0)], -1.5);
        assert_eq!(dense[(0, 0)], 2.0);
    }

    #[test]
    fn malformed_header_reports_line() {
        let f = write_temp("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n");
        match load_matrix_market(f.path()) {
            Err(MtxError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_entry_reports_line() {
        let f = write_temp("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
        match load_matrix_market(f.path()) {
            Err(MtxError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn array_is_column_major() {
        let f = write_temp("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
        let dense = load_matrix_market(f.path()).unwrap().to_dense();
        assert_eq!(dense[(0, 0)], 1.0);
        assert_eq!(dense[(1, 0)], 2.0);
        assert_eq!(dense[(0, 1)], 3.0);
        assert_eq!(dense[(1, 1)], 4.0);
    }

    #[test]
    fn vector_from_plain_text() {
        let f = write_temp("1.5 -2.0\n% comment\n3.25\n");
        assert_eq!(load_vector(f.path()).unwrap(), vec![1.5, -2.0, 3.25]);
    }
}
