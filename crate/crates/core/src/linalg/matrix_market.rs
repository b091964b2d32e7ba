use super::{LinalgError, SparseMatrix};
use std::io::{BufRead, Write};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Writes `a` in coordinate format with 1-based indices and 17 significant digits.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut out: W) -> Result<(), LinalgError> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

/// Reads a real general coordinate Matrix Market stream.
pub fn read_matrix_market<R: BufRead>(input: R) -> Result<SparseMatrix, LinalgError> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, reason: &str| LinalgError::Parse {
        line: line + 1,
        reason: reason.into(),
    };
    let (_, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
    let header = header?;
    let h: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if h.len() < 5
        || h[0] != "%%matrixmarket"
        || h[1] != "matrix"
        || h[2] != "coordinate"
        || h[3] != "real"
        || h[4] != "general"
    {
        return Err(parse_err(
            0,
            "expected 'matrix coordinate real general' header",
        ));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for (ln, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(ln, "expected three fields"));
        }
        match size {
            None => {
                let p = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(ln, "bad size line"))
                };
                size = Some((p(f[0])?, p(f[1])?, p(f[2])?));
            }
            Some((nr, nc, _)) => {
                let i: usize = f[0].parse().map_err(|_| parse_err(ln, "bad row index"))?;
                let j: usize = f[1]
                    .parse()
                    .map_err(|_| parse_err(ln, "bad column index"))?;
                let v: f64 = f[2].parse().map_err(|_| parse_err(ln, "bad value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err(ln, "index out of range"));
                }
                trip.push((i - 1, j - 1, v));
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    if trip.len() != nnz {
        return Err(LinalgError::Parse {
            line: 0,
            reason: format!("declared {nnz} entries, found {}", trip.len()),
        });
    }
    SparseMatrix::from_triplets(nr, nc, &trip)
}
