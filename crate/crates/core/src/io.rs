//! Matrix Market coordinate files and one-value-per-line vector files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{DenseVector, SparseMatrix};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses a real general coordinate file; 1-based indices become 0-based.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };

    let (_, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    let header = header.map_err(|e| Error::io("<reader>", e))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || tokens[3] != "real"
        || tokens[4] != "general"
    {
        return Err(parse_err(
            0,
            "expected '%%MatrixMarket matrix coordinate real general'",
        ));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (no, line) in lines {
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(no, "size line needs rows, cols, nnz"));
                }
                let nums: std::result::Result<Vec<usize>, _> =
                    fields.iter().map(|f| f.parse::<usize>()).collect();
                let nums = nums.map_err(|_| parse_err(no, "non-integer in size line"))?;
                size = Some((nums[0], nums[1], nums[2]));
                triplets.reserve(nums[2]);
            }
            Some((rows, cols, declared)) => {
                if fields.len() != 3 {
                    return Err(parse_err(no, "entry needs row, col, value"));
                }
                if triplets.len() == declared {
                    return Err(parse_err(no, "more entries than declared"));
                }
                let r: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(no, "bad row index"))?;
                let c: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(no, "bad column index"))?;
                let v: f64 = fields[2].parse().map_err(|_| parse_err(no, "bad value"))?;
                if !v.is_finite() {
                    return Err(parse_err(no, "non-finite value"));
                }
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(Error::IndexOutOfBounds {
                        row: r,
                        col: c,
                        rows,
                        cols,
                    });
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }

    let (rows, cols, declared) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    if triplets.len() != declared {
        return Err(Error::Parse {
            line: 0,
            msg: format!("declared {declared} entries, found {}", triplets.len()),
        });
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix_market_to(&mut w, m)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_matrix_market_to<W: Write>(w: &mut W, m: &SparseMatrix) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (r, c, v) in m.entries() {
        // `{:e}` is the shortest representation that round-trips.
        writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<DenseVector> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
            line: no + 1,
            msg: format!("bad vector value '{trimmed}'"),
        })?;
        values.push(v);
    }
    Ok(DenseVector::new(values))
}

pub fn write_vector(path: impl AsRef<Path>, v: &DenseVector) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        for x in v.as_slice() {
            writeln!(w, "{x:e}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}
