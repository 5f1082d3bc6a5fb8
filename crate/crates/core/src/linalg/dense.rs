//! Dense complex matrices and the Hermitian (generalized) eigensolver.

use std::ops::{Index, IndexMut};

use crate::scalar::{abs2, Cx, Real};

use super::LinalgError;

/// Column-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DMat<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<Cx<T>>,
}

impl<T: Real> Index<(usize, usize)> for DMat<T> {
    type Output = Cx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[j * self.nrows + i]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for DMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[j * self.nrows + i]
    }
}

fn zero<T: Real>() -> Cx<T> {
    Cx::new(T::zero(), T::zero())
}

impl<T: Real> DMat<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major rows.
    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        Self::from_fn(nr, nc, |i, j| rows[i][j])
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Cx<T>] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Cx<T>] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            for k in 0..self.ncols {
                let b = other[(k, j)];
                if b == zero() {
                    continue;
                }
                let a = self.col(k);
                let o = out.col_mut(j);
                for i in 0..a.len() {
                    o[i] += a[i] * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut y = vec![zero(); self.nrows];
        for (j, xj) in x.iter().enumerate() {
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += *a * *xj;
            }
        }
        y
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    pub fn hermitian_defect(&self) -> T {
        let mut d = T::zero();
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Replaces the matrix by its Hermitian part.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for j in 0..self.ncols {
            for i in 0..=j {
                let v = (self[(i, j)] + self[(j, i)].conj()) * half;
                self[(i, j)] = v;
                self[(j, i)] = v.conj();
            }
            let d = self[(j, j)].re;
            self[(j, j)] = Cx::new(d, T::zero());
        }
    }
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky<T: Real>(b: &DMat<T>) -> Result<DMat<T>, LinalgError> {
    let n = b.nrows;
    let mut l = DMat::zeros(n, n);
    for j in 0..n {
        let mut d = b[(j, j)].re;
        for k in 0..j {
            d -= abs2(l[(j, k)]);
        }
        if !(d > T::zero()) {
            return Err(LinalgError::NotPositiveDefinite { index: j });
        }
        let d = d.sqrt();
        l[(j, j)] = Cx::new(d, T::zero());
        for i in j + 1..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L X = B` in place for lower-triangular `L`.
pub fn solve_lower<T: Real>(l: &DMat<T>, b: &mut DMat<T>) {
    let n = l.nrows;
    for c in 0..b.ncols {
        let col = b.col_mut(c);
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[(i, k)] * col[k];
            }
            col[i] = s / l[(i, i)];
        }
    }
}

/// Solves `L^H X = B` in place for lower-triangular `L`.
pub fn solve_lower_adjoint<T: Real>(l: &DMat<T>, b: &mut DMat<T>) {
    let n = l.nrows;
    for c in 0..b.ncols {
        let col = b.col_mut(c);
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * col[k];
            }
            col[i] = s / l[(i, i)].conj();
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary matrix of eigenvectors (columns).
///
/// Householder reduction to a complex tridiagonal matrix, a diagonal phase
/// change making it real, then implicit QL.
pub fn hermitian_eigh<T: Real>(a: &DMat<T>) -> (Vec<T>, DMat<T>) {
    let n = a.nrows;
    let mut w = a.clone();
    w.symmetrize();
    let mut q = DMat::identity(n);
    let two = T::lit(2.0);
    let mut v = vec![zero::<T>(); n];
    let mut p = vec![zero::<T>(); n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<Cx<T>> = (k + 1..n).map(|i| w[(i, k)]).collect();
        let xnorm = x.iter().map(|z| abs2(*z)).sum::<T>().sqrt();
        let tail = x[1..].iter().map(|z| abs2(*z)).sum::<T>();
        if xnorm == T::zero() || tail == T::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > T::zero() {
            x0 / x0.norm()
        } else {
            Cx::new(T::one(), T::zero())
        };
        let alpha = -phase * xnorm;
        let vv = &mut v[..m];
        vv.copy_from_slice(&x);
        vv[0] -= alpha;
        let vnorm = vv.iter().map(|z| abs2(*z)).sum::<T>().sqrt();
        for z in vv.iter_mut() {
            *z = *z / vnorm;
        }
        // p = A22 v, c = v^H p, q = p - c v, A22 -= 2 (v q^H + q v^H).
        let pp = &mut p[..m];
        for (i, pi) in pp.iter_mut().enumerate() {
            *pi = zero();
            for (j, vj) in vv.iter().enumerate() {
                *pi += w[(k + 1 + i, k + 1 + j)] * *vj;
            }
        }
        let c: Cx<T> = vv.iter().zip(pp.iter()).map(|(a, b)| a.conj() * b).sum();
        for i in 0..m {
            pp[i] -= vv[i] * c.re;
        }
        for j in 0..m {
            let vj = vv[j].conj();
            let qj = pp[j].conj();
            for i in 0..m {
                let upd = (vv[i] * qj + pp[i] * vj) * two;
                w[(k + 1 + i, k + 1 + j)] -= upd;
            }
        }
        w[(k + 1, k)] = alpha;
        w[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            w[(i, k)] = zero();
            w[(k, i)] = zero();
        }
        // Q <- Q H_k on columns k+1..n.
        for r in 0..n {
            let mut s = zero::<T>();
            for j in 0..m {
                s += q[(r, k + 1 + j)] * vv[j];
            }
            s = s * two;
            for j in 0..m {
                let upd = s * vv[j].conj();
                q[(r, k + 1 + j)] -= upd;
            }
        }
    }
    // Phase change D making the subdiagonal real and nonnegative.
    let mut d: Vec<T> = (0..n).map(|i| w[(i, i)].re).collect();
    let mut e = vec![T::zero(); n];
    let mut delta = vec![Cx::new(T::one(), T::zero()); n];
    for k in 0..n.saturating_sub(1) {
        let sub = w[(k + 1, k)];
        let mag = sub.norm();
        e[k] = mag;
        delta[k + 1] = if mag > T::zero() {
            delta[k] * (sub / mag)
        } else {
            delta[k]
        };
    }
    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    tql2(&mut d, &mut e, &mut z, n);
    // Eigenvectors: Q D Z.
    let mut qd = q;
    for (j, dj) in delta.iter().enumerate() {
        for x in qd.col_mut(j) {
            *x *= *dj;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vecs = DMat::zeros(n, n);
    for (out_col, &src) in order.iter().enumerate() {
        let col = vecs.col_mut(out_col);
        for k in 0..n {
            let zk = z[src * n + k];
            if zk == T::zero() {
                continue;
            }
            for (r, c) in col.iter_mut().enumerate() {
                *c += qd[(r, k)] * zk;
            }
        }
    }
    let vals = order.iter().map(|&i| d[i]).collect();
    (vals, vecs)
}

/// Implicit QL on a real symmetric tridiagonal matrix (`d` diagonal, `e[i]`
/// coupling `i` and `i + 1`). `z` holds eigenvectors as columns of an `n x n`
/// column-major array, `z[col * n + row]`.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], z: &mut [T], n: usize) {
    if n == 0 {
        return;
    }
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    e[n - 1] = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 * n.max(1) {
                    break;
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (ci, ci1) = (i * n, (i + 1) * n);
                    for k in 0..n {
                        let hk = z[ci1 + k];
                        z[ci1 + k] = s * z[ci + k] + c * hk;
                        z[ci + k] = c * z[ci + k] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
}

/// All eigenpairs of `A x = E B x` for Hermitian `A` and Hermitian positive
/// definite `B`; eigenvectors are `B`-orthonormal.
pub fn generalized_eigh<T: Real>(a: &DMat<T>, b: &DMat<T>) -> Result<(Vec<T>, DMat<T>), LinalgError> {
    let l = cholesky(b)?;
    let mut y = a.clone();
    solve_lower(&l, &mut y);
    let mut c = y.conj_transpose();
    solve_lower(&l, &mut c);
    c.symmetrize();
    let (vals, mut vecs) = hermitian_eigh(&c);
    solve_lower_adjoint(&l, &mut vecs);
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMat<f64> {
        let mut m = DMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        m.symmetrize();
        m
    }

    #[test]
    fn diagonal_and_two_by_two() {
        let a = DMat::from_rows(&[
            vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        ]);
        let (vals, _) = hermitian_eigh(&a);
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);

        let a = DMat::from_rows(&[vec![c(2.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(2.0, 0.0)]]);
        let b = DMat::from_rows(&[vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        let (vals, _) = generalized_eigh(&a, &b).unwrap();
        let s3 = 3f64.sqrt();
        assert!((vals[0] - (3.0 - s3) / 2.0).abs() < 1e-14);
        assert!((vals[1] - (3.0 + s3) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 7, 30] {
            let a = random_hermitian(n, &mut rng);
            let (vals, vecs) = hermitian_eigh(&a);
            let av = a.matmul(&vecs);
            for j in 0..n {
                for i in 0..n {
                    assert!((av[(i, j)] - vecs[(i, j)] * vals[j]).norm() < 1e-12, "n={n}");
                }
            }
            let g = vecs.conj_transpose().matmul(&vecs);
            for j in 0..n {
                for i in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - c(want, 0.0)).norm() < 1e-12);
                }
            }
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn generalized_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20;
        let a = random_hermitian(n, &mut rng);
        let r = DMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut b = r.conj_transpose().matmul(&r);
        for i in 0..n {
            b[(i, i)] += c(n as f64, 0.0);
        }
        let (vals, vecs) = generalized_eigh(&a, &b).unwrap();
        // trace(B^-1 A) via the Cholesky reduction.
        let l = cholesky(&b).unwrap();
        let mut y = a.clone();
        solve_lower(&l, &mut y);
        let mut cm = y.conj_transpose();
        solve_lower(&l, &mut cm);
        let tr: f64 = (0..n).map(|i| cm[(i, i)].re).sum();
        let sum: f64 = vals.iter().sum();
        assert!((tr - sum).abs() <= 1e-10 * tr.abs().max(1.0));
        let g = vecs.conj_transpose().matmul(&b.matmul(&vecs));
        for j in 0..n {
            assert!((g[(j, j)].re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_mass_is_rejected() {
        let b = DMat::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(1.0, 0.0)]]);
        assert!(cholesky(&b).is_err());
    }
}
