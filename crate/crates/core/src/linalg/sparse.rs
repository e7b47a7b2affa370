use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::graph::Region;

/// Symmetric sparse matrix in CSR form with both triangles stored and
/// column indices sorted within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymCsr {
    /// Builds from a diagonal and a list of off-diagonal couplings `(i, j, v)`
    /// with `i != j`; each pair is mirrored and repeated pairs are summed.
    pub fn from_parts(diag: &[f64], off: &[(usize, usize, f64)]) -> Self {
        let n = diag.len();
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, diag[i])]).collect();
        for &(i, j, v) in off {
            debug_assert!(i != j);
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last = usize::MAX;
            for (j, v) in row {
                if j == last {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = j;
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &Mat<f64>) -> Self {
        let n = m.nrows();
        let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        let mut off = Vec::new();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                if v != 0.0 {
                    off.push((i, j, v));
                }
            }
        }
        Self::from_parts(&diag, &off)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (c, v) = self.row(i);
            let mut acc = 0.0;
            for (j, a) in c.iter().zip(v) {
                acc += a * x[*j];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn quadratic(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            let mut r = 0.0;
            for (j, a) in c.iter().zip(v) {
                r += a * y[*j];
            }
            acc += x[i] * r;
        }
        acc
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            let mut d = 0.0;
            let mut r = 0.0;
            for (j, a) in c.iter().zip(v) {
                if *j == i {
                    d = *a;
                } else {
                    r += a.abs();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        if self.n == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Adds `shift[i]` to each diagonal entry.
    pub fn with_diagonal_added(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, s) in shift.iter().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let k = self.cols[r.clone()].binary_search(&i).expect("diagonal is always stored");
            out.vals[r.start + k] += s;
        }
        out
    }

    /// Principal submatrix on `region` (indices in region order).
    pub fn principal(&self, region: &Region) -> Self {
        let mut local = vec![usize::MAX; self.n];
        for (k, &x) in region.iter().enumerate() {
            local[x] = k;
        }
        let mut row_ptr = Vec::with_capacity(region.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &x in region {
            let (c, v) = self.row(x);
            for (j, a) in c.iter().zip(v) {
                if local[*j] != usize::MAX {
                    cols.push(local[*j]);
                    vals.push(*a);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n: region.len(), row_ptr, cols, vals }
    }

    /// Dense block with rows in `rows` and columns in `cols`.
    pub fn block(&self, rows: &Region, cols: &Region) -> Mat<f64> {
        let mut local = vec![usize::MAX; self.n];
        for (k, &x) in cols.iter().enumerate() {
            local[x] = k;
        }
        let mut out = Mat::zeros(rows.len(), cols.len());
        for (r, &x) in rows.iter().enumerate() {
            let (c, v) = self.row(x);
            for (j, a) in c.iter().zip(v) {
                if local[*j] != usize::MAX {
                    out[(r, local[*j])] = *a;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                m[(i, *j)] = *a;
            }
        }
        m
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                trip.push(Triplet::new(i, *j, *a));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::Linalg(format!("sparse assembly failed: {e:?}")))
    }

    /// Relative asymmetry `max |a_ij - a_ji| / max |a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                num = num.max((a - self.get(*j, i)).abs());
                den = den.max(a.abs());
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assembly_and_products() {
        let a = SymCsr::from_parts(&[2.0, 2.0, 2.0], &[(0, 1, -1.0), (1, 2, -1.0), (1, 0, -0.5)]);
        assert_eq!(a.get(0, 1), -1.5);
        assert_eq!(a.get(1, 0), -1.5);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![0.5, -0.5, 1.0]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.gershgorin(), (-0.5, 4.5));
        let sub = a.principal(&Region::new([0, 2]));
        assert_eq!(sub.to_dense()[(0, 1)], 0.0);
        assert_eq!(sub.dim(), 2);
        let b = a.block(&Region::new([1]), &Region::new([0, 2]));
        assert_eq!((b[(0, 0)], b[(0, 1)]), (-1.5, -1.0));
        let shifted = a.with_diagonal_added(&[1.0, 0.0, -1.0]);
        assert_eq!(shifted.diagonal(), vec![3.0, 2.0, 1.0]);
        assert_eq!(a.quadratic(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), -1.5);
    }
}
