use super::{gather_dot, LinalgError, SparseMatrix};

/// ILU(0) factors stored in place on the pattern of the factored matrix:
/// strictly lower entries hold `L` (unit diagonal implied), the rest hold `U`.
#[derive(Debug, Clone)]
pub struct IluFactors {
    lu: SparseMatrix,
    sweeps: Sweeps,
}

/// Split copies of the factors laid out for the two triangular sweeps.
#[derive(Debug, Clone)]
struct Sweeps {
    l_ptr: Vec<usize>,
    l_col: Vec<u32>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_col: Vec<u32>,
    u_val: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl Sweeps {
    fn new(lu: &SparseMatrix, diag: &[usize]) -> Self {
        let n = lu.nrows();
        let (rp, ci, v) = (lu.row_ptr(), lu.col_idx(), lu.values());
        let mut s = Sweeps {
            l_ptr: vec![0],
            l_col: Vec::new(),
            l_val: Vec::new(),
            u_ptr: vec![0],
            u_col: Vec::new(),
            u_val: Vec::new(),
            inv_diag: Vec::with_capacity(n),
        };
        for i in 0..n {
            s.l_col.extend_from_slice(&ci[rp[i]..diag[i]]);
            s.l_val.extend_from_slice(&v[rp[i]..diag[i]]);
            s.l_ptr.push(s.l_col.len());
            s.inv_diag.push(1.0 / v[diag[i]]);
        }
        // Upper rows stored in reverse row order so the backward sweep streams forward.
        for i in (0..n).rev() {
            s.u_col.extend_from_slice(&ci[diag[i] + 1..rp[i + 1]]);
            s.u_val.extend_from_slice(&v[diag[i] + 1..rp[i + 1]]);
            s.u_ptr.push(s.u_col.len());
        }
        s
    }
}

/// Incomplete LU with zero fill-in, IKJ ordering.
pub fn ilu0(a: &SparseMatrix) -> Result<IluFactors, LinalgError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LinalgError::DimensionMismatch {
            expected: (n, n),
            got: (a.nrows(), a.ncols()),
        });
    }
    let mut lu = a.clone();
    let row_ptr = lu.row_ptr().to_vec();
    let col_idx = lu.col_idx().to_vec();
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        match col_idx[row_ptr[i]..row_ptr[i + 1]].binary_search(&(i as u32)) {
            Ok(p) => diag.push(row_ptr[i] + p),
            Err(_) => return Err(LinalgError::ZeroPivot(i)),
        }
    }
    let vals = lu.values_mut();
    for i in 0..n {
        for p in row_ptr[i]..diag[i] {
            let k = col_idx[p] as usize;
            let pivot = vals[diag[k]];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(LinalgError::ZeroPivot(k));
            }
            let lik = vals[p] / pivot;
            vals[p] = lik;
            // a_ij -= l_ik * u_kj for j > k present in both rows.
            let mut q = p + 1;
            let mut r = diag[k] + 1;
            let (qe, re) = (row_ptr[i + 1], row_ptr[k + 1]);
            while q < qe && r < re {
                match col_idx[q].cmp(&col_idx[r]) {
                    std::cmp::Ordering::Less => q += 1,
                    std::cmp::Ordering::Greater => r += 1,
                    std::cmp::Ordering::Equal => {
                        vals[q] -= lik * vals[r];
                        q += 1;
                        r += 1;
                    }
                }
            }
        }
        let d = vals[diag[i]];
        if d == 0.0 || !d.is_finite() {
            return Err(LinalgError::ZeroPivot(i));
        }
    }
    let sweeps = Sweeps::new(&lu, &diag);
    Ok(IluFactors { lu, sweeps })
}

impl IluFactors {
    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Combined factor storage.
    pub fn factors(&self) -> &SparseMatrix {
        &self.lu
    }

    /// `z = U⁻¹ L⁻¹ r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut z = vec![0.0; r.len()];
        self.apply_into(r, &mut z)?;
        Ok(z)
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) -> Result<(), LinalgError> {
        let n = self.dim();
        if r.len() != n || z.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, n),
                got: (z.len(), r.len()),
            });
        }
        let sw = &self.sweeps;
        for i in 0..n {
            let (lo, hi) = (sw.l_ptr[i], sw.l_ptr[i + 1]);
            z[i] = r[i] - gather_dot(&sw.l_col[lo..hi], &sw.l_val[lo..hi], z);
        }
        for (t, i) in (0..n).rev().enumerate() {
            let (lo, hi) = (sw.u_ptr[t], sw.u_ptr[t + 1]);
            z[i] = (z[i] - gather_dot(&sw.u_col[lo..hi], &sw.u_val[lo..hi], z)) * sw.inv_diag[i];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factors() {
        let f = ilu0(&SparseMatrix::identity(4)).unwrap();
        assert_eq!(f.factors(), &SparseMatrix::identity(4));
        assert_eq!(
            f.apply(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn zero_diagonal_is_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(ilu0(&a), Err(LinalgError::ZeroPivot(1))));
        let b = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(ilu0(&b), Err(LinalgError::ZeroPivot(0))));
    }

    #[test]
    fn pattern_is_preserved() {
        let a = SparseMatrix::from_dense(&[
            vec![4.0, 1.0, 0.0, 1.0],
            vec![1.0, 4.0, 1.0, 0.0],
            vec![0.0, 1.0, 4.0, 1.0],
            vec![1.0, 0.0, 1.0, 4.0],
        ]);
        let f = ilu0(&a).unwrap();
        assert_eq!(f.factors().row_ptr(), a.row_ptr());
        assert_eq!(f.factors().col_idx(), a.col_idx());
    }
}
