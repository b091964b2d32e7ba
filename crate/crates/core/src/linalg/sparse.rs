use super::LinalgError;
use rayon::prelude::*;

/// Row count above which SpMV runs in parallel over row blocks.
const PAR_ROWS: usize = 4096;

/// Real matrix in compressed sparse row form with strictly increasing column
/// indices inside each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    /// 32-bit indices halve the index traffic of SpMV and triangular sweeps.
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

fn narrow(cols: Vec<usize>) -> Vec<u32> {
    cols.into_iter().map(|c| c as u32).collect()
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        let bad = |m: String| Err(LinalgError::InvalidStructure(m));
        if ncols > u32::MAX as usize {
            return bad(format!("{ncols} columns exceed the 32-bit index range"));
        }
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 {
            return bad("row_ptr must have nrows + 1 entries starting at 0".into());
        }
        if row_ptr[nrows] != col_idx.len() || col_idx.len() != values.len() {
            return bad("row_ptr[nrows], col_idx and values disagree on nnz".into());
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return bad(format!("row_ptr decreases at row {i}"));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("columns of row {i} are not strictly increasing"));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return bad(format!("column index out of range in row {i}"));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx: narrow(col_idx),
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicate entries
    /// are summed in the order they appear.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        if ncols > u32::MAX as usize {
            return Err(LinalgError::InvalidStructure(format!(
                "{ncols} columns exceed the 32-bit index range"
            )));
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(LinalgError::InvalidStructure(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut slots = counts.clone();
        let mut by_row = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[slots[r]] = (c, v);
            slots[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx: Vec<u32> = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..nrows {
            let row = &mut by_row[counts[i]..counts[i + 1]];
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                let c = c as u32;
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Dense row-major input; exact zeros are not stored.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged dense matrix");
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j as u32);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c as usize] = v;
            }
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&(j as u32)).map_or(0.0, |p| vals[p])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    /// `y = A·x`, summing each row in ascending column order.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.nrows, self.ncols),
                got: (y.len(), x.len()),
            });
        }
        let row_dot = |i: usize| -> f64 {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut s = 0.0;
            for (c, v) in self.col_idx[r.clone()].iter().zip(&self.values[r]) {
                s += v * x[*c as usize];
            }
            s
        };
        if self.nrows >= PAR_ROWS {
            y.par_chunks_mut(1024).enumerate().for_each(|(b, chunk)| {
                for (k, yi) in chunk.iter_mut().enumerate() {
                    *yi = row_dot(b * 1024 + k);
                }
            });
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_dot(i);
            }
        }
        Ok(())
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
        if self.ncols != other.nrows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.ncols, self.ncols),
                got: (other.nrows, other.ncols),
            });
        }
        let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..self.nrows)
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; other.ncols], vec![false; other.ncols]),
                |(acc, used), i| {
                    let mut touched = Vec::new();
                    let (ac, av) = self.row(i);
                    for (&k, &a) in ac.iter().zip(av) {
                        let (bc, bv) = other.row(k as usize);
                        for (&j, &b) in bc.iter().zip(bv) {
                            let j = j as usize;
                            if !used[j] {
                                used[j] = true;
                                touched.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    touched.sort_unstable();
                    let vals = touched
                        .iter()
                        .map(|&j| {
                            used[j] = false;
                            std::mem::take(&mut acc[j])
                        })
                        .collect();
                    (touched.into_iter().map(|j| j as u32).collect(), vals)
                },
            )
            .collect();
        Ok(Self::from_rows(self.nrows, other.ncols, rows))
    }

    /// `Σ cᵢ·Aᵢ` over matrices of equal shape.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix, LinalgError> {
        let (nrows, ncols) = match terms.first() {
            Some((_, a)) => (a.nrows, a.ncols),
            None => {
                return Err(LinalgError::InvalidStructure(
                    "empty linear combination".into(),
                ))
            }
        };
        if let Some((_, a)) = terms
            .iter()
            .find(|(_, a)| (a.nrows, a.ncols) != (nrows, ncols))
        {
            return Err(LinalgError::DimensionMismatch {
                expected: (nrows, ncols),
                got: (a.nrows, a.ncols),
            });
        }
        let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..nrows)
            .into_par_iter()
            .map(|i| {
                let mut entries: Vec<(u32, f64)> = Vec::new();
                for (c, a) in terms {
                    let (cols, vals) = a.row(i);
                    entries.extend(cols.iter().zip(vals).map(|(&j, &v)| (j, c * v)));
                }
                entries.sort_by_key(|&(j, _)| j);
                let mut cols: Vec<u32> = Vec::with_capacity(entries.len());
                let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
                for (j, v) in entries {
                    if cols.last() == Some(&j) {
                        *vals.last_mut().unwrap() += v;
                    } else {
                        cols.push(j);
                        vals.push(v);
                    }
                }
                (cols, vals)
            })
            .collect();
        Ok(Self::from_rows(nrows, ncols, rows))
    }

    /// `A − σ·I`, inserting structural diagonal entries where missing.
    pub fn shifted(&self, sigma: f64) -> Result<SparseMatrix, LinalgError> {
        let n = self.nrows.min(self.ncols);
        let mut eye = Self::identity(n);
        eye.nrows = self.nrows;
        eye.ncols = self.ncols;
        eye.row_ptr.resize(self.nrows + 1, n);
        Self::linear_combination(&[(1.0, self), (-sigma, &eye)])
    }

    pub fn scaled(&self, c: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (j as usize, i, v)));
        }
        Self::from_triplets(self.ncols, self.nrows, &trip).expect("transpose indices are in range")
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn from_rows(nrows: usize, ncols: usize, rows: Vec<(Vec<u32>, Vec<f64>)>) -> Self {
        let nnz = rows.iter().map(|r| r.0.len()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (c, v) in rows {
            col_idx.extend(c);
            values.extend(v);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}
