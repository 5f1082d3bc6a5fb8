use std::fmt::Write as _;

use crate::scalar::{Cx, Real};

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<Cx<T>>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Duplicates are summed in their input order, so identical triplet
    /// sequences give bitwise-identical matrices.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, Cx<T>)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Cx<T>> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                let k = values.len() - 1;
                values[k] += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, Cx::new(T::one(), T::zero()))).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[Cx<T>]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Entry `(i, j)` or zero.
    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => Cx::new(T::zero(), T::zero()),
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[Cx<T>], y: &mut [Cx<T>]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(i);
            let mut s = Cx::new(T::zero(), T::zero());
            for (c, v) in cols.iter().zip(vals) {
                s += *v * x[*c];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut y = vec![Cx::new(T::zero(), T::zero()); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^H A x`.
    pub fn quadratic_form(&self, x: &[Cx<T>]) -> Cx<T> {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> T {
        let mut d = T::zero();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                d = d.max((*v - self.get(*c, i).conj()).norm());
            }
        }
        d
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.conj()).collect(),
            ..self.clone()
        }
    }

    /// `alpha A + beta B` on the union pattern.
    pub fn linear_combination(&self, alpha: T, other: &Self, beta: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        indptr.push(0);
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let next_a = ca.get(p).copied().unwrap_or(usize::MAX);
                let next_b = cb.get(q).copied().unwrap_or(usize::MAX);
                if next_a == next_b {
                    indices.push(next_a);
                    values.push(va[p] * alpha + vb[q] * beta);
                    p += 1;
                    q += 1;
                } else if next_a < next_b {
                    indices.push(next_a);
                    values.push(va[p] * alpha);
                    p += 1;
                } else {
                    indices.push(next_b);
                    values.push(vb[q] * beta);
                    q += 1;
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<Cx<T>>> {
        let mut d = vec![vec![Cx::new(T::zero(), T::zero()); self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                row[*c] = *v;
            }
        }
        d
    }

    /// Coordinate text dump: a `rows cols nnz` header, then one
    /// `row col re im` line per stored entry (zero-based indices).
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::with_capacity(self.nnz() * 48);
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let _ = writeln!(s, "{i} {c} {:e} {:e}", v.re.to_f64_lossy(), v.im.to_f64_lossy());
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(1, 0, c(1.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(0.5, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), c(1.5, 0.0));
        assert_eq!(m.get(0, 0), c(0.0, 0.0));
        let y = m.mul_vec(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(y, vec![c(-1.0, 2.0), c(1.5, 0.0)]);
    }

    #[test]
    fn linear_combination_merges_patterns() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(1.0, 0.0)), (0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))],
        );
        let b = CsrMatrix::<f64>::identity(2);
        let s = a.linear_combination(1.0, &b, -2.0);
        assert_eq!(s.get(0, 0), c(-1.0, 0.0));
        assert_eq!(s.get(1, 1), c(-2.0, 0.0));
        assert_eq!(s.get(0, 1), c(0.0, 1.0));
        assert_eq!(a.hermitian_defect(), 0.0);
    }

    #[test]
    fn coordinate_dump_lines() {
        let m = CsrMatrix::<f64>::identity(3);
        let t = m.to_coordinate_text();
        assert_eq!(t.lines().count(), 4);
        assert!(t.starts_with("3 3 3\n0 0 1e0 0e0\n"));
    }
}
