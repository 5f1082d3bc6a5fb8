//! Smallest eigenpairs of sparse Hermitian pencils `A x = E B x`.
//!
//! [`solve_smallest`] factors `A - sigma B` once and runs a thick-restart block
//! Krylov iteration on `(A - sigma B)^{-1} B`, which is self-adjoint in the
//! `B` inner product, with full reorthogonalization and explicit
//! Rayleigh-Ritz. [`solve_dense`] is the reference for small problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{generalized_eigh, hermitian_eigh, CsrMatrix, DMat, LdlFactor, LinalgError};
use crate::scalar::{abs2, Cx, Real};

#[derive(Clone, Debug, Error)]
pub enum EigenError<T: Real> {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("requested {nev} eigenpairs of a {dim}-dimensional problem")]
    BadRequest { nev: usize, dim: usize },
    #[error("dense solve limited to dimension {cap}, got {dim}")]
    TooLarge { dim: usize, cap: usize },
    #[error("shift {shift} lies above {count} eigenvalues")]
    ShiftAboveSpectrum { shift: f64, count: usize },
    #[error("no convergence after {iterations} operator applications ({} of {nev} pairs converged)", converged.eigenvalues.len())]
    NotConverged {
        iterations: usize,
        nev: usize,
        converged: Box<EigenResult<T>>,
    },
}

/// Ascending eigenvalues with `B`-orthonormal eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Vec<Vec<Cx<T>>>,
    /// `||A x - E B x||_2 / ||x||_B` per pair.
    pub residuals: Vec<T>,
}

impl<T: Real> EigenResult<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions<T> {
    /// Factorization shift; must lie below the wanted eigenvalues.
    pub shift: T,
    /// Relative residual tolerance: `||A x - E B x||_2 <= tol ||A||_max ||x||_2`.
    pub tol: T,
    /// Budget of operator applications (default `500 nev`).
    pub max_iter: Option<usize>,
    /// Krylov block width (default `clamp(nev, 3, 8)`).
    pub block_size: Option<usize>,
    pub seed: u64,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            shift: -T::one(),
            // 1e-9 in double precision, 1000 ulp otherwise.
            tol: T::lit(1e-9).max(T::epsilon() * T::lit(1000.0)),
            max_iter: None,
            block_size: None,
            seed: 0x5eed,
        }
    }
}

fn czero<T: Real>() -> Cx<T> {
    Cx::new(T::zero(), T::zero())
}

fn dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy<T: Real>(y: &mut [Cx<T>], alpha: Cx<T>, x: &[Cx<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn norm<T: Real>(x: &[Cx<T>]) -> T {
    x.iter().map(|z| abs2(*z)).sum::<T>().sqrt()
}

/// Linear combination `sum_j cols[j] y[j]`.
fn combine<T: Real>(cols: &[Vec<Cx<T>>], y: &[Cx<T>]) -> Vec<Cx<T>> {
    let n = cols.first().map_or(0, |c| c.len());
    let mut out = vec![czero(); n];
    for (c, &w) in cols.iter().zip(y) {
        if w != czero() {
            axpy(&mut out, w, c);
        }
    }
    out
}

/// Dense reference: all eigenpairs via `B = L L^H` and a Hermitian eigensolve.
pub fn solve_dense<T: Real>(a: &CsrMatrix<T>, b: &CsrMatrix<T>, cap: usize) -> Result<EigenResult<T>, EigenError<T>> {
    let n = a.nrows;
    if n > cap {
        return Err(EigenError::TooLarge { dim: n, cap });
    }
    let ad = DMat::from_rows(&a.to_dense());
    let bd = DMat::from_rows(&b.to_dense());
    let (vals, vecs) = generalized_eigh(&ad, &bd)?;
    let eigenvectors: Vec<Vec<Cx<T>>> = (0..n).map(|j| vecs.col(j).to_vec()).collect();
    let residuals = eigenvectors
        .iter()
        .zip(&vals)
        .map(|(x, &e)| residual_norm(a, b, x, e))
        .collect();
    Ok(EigenResult {
        eigenvalues: vals,
        eigenvectors,
        residuals,
    })
}

/// Eigenvalues of a dense Hermitian pencil (`B` positive definite).
pub fn solve_dense_matrices<T: Real>(a: &DMat<T>, b: Option<&DMat<T>>) -> Result<(Vec<T>, DMat<T>), EigenError<T>> {
    match b {
        Some(b) => Ok(generalized_eigh(a, b)?),
        None => Ok(hermitian_eigh(a)),
    }
}

/// `||A x - E B x||_2`.
pub fn residual_norm<T: Real>(a: &CsrMatrix<T>, b: &CsrMatrix<T>, x: &[Cx<T>], e: T) -> T {
    let ax = a.mul_vec(x);
    let bx = b.mul_vec(x);
    ax.iter().zip(&bx).map(|(p, q)| abs2(*p - *q * e)).sum::<T>().sqrt()
}

/// Number of eigenvalues of `(A, B)` strictly below `sigma` (Sylvester inertia).
pub fn count_below<T: Real>(a: &CsrMatrix<T>, b: &CsrMatrix<T>, sigma: T) -> Result<usize, LinalgError> {
    let shifted = a.linear_combination(T::one(), b, -sigma);
    Ok(LdlFactor::factor(&shifted)?.negative_pivots())
}

struct ShiftInvert<T> {
    factor: LdlFactor<T>,
    applications: usize,
}

impl<T: Real> ShiftInvert<T> {
    /// `(A - sigma B)^{-1} y` with `y = B x` already formed.
    fn apply_to_bx(&mut self, bx: &[Cx<T>]) -> Vec<Cx<T>> {
        self.applications += 1;
        self.factor.solve(bx)
    }
}

/// Smallest `nev` eigenpairs of `A x = E B x`.
pub fn solve_smallest<T: Real>(
    a: &CsrMatrix<T>,
    b: &CsrMatrix<T>,
    nev: usize,
    opts: &EigenOptions<T>,
) -> Result<EigenResult<T>, EigenError<T>> {
    let n = a.nrows;
    if nev > n || b.nrows != n {
        return Err(EigenError::BadRequest { nev, dim: n });
    }
    if nev == 0 {
        return Ok(EigenResult {
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
            residuals: Vec::new(),
        });
    }
    let p = opts.block_size.unwrap_or(nev.clamp(3, 8)).clamp(1, n);
    let m_max = (2 * nev + 3 * p).max(nev + 2 * p);
    if m_max >= n {
        let mut full = solve_dense(a, b, usize::MAX)?;
        full.eigenvalues.truncate(nev);
        full.eigenvectors.truncate(nev);
        full.residuals.truncate(nev);
        return Ok(full);
    }

    let mut sigma = opts.shift;
    let factor = match LdlFactor::factor(&a.linear_combination(T::one(), b, -sigma)) {
        Ok(f) => f,
        Err(_) => {
            sigma -= T::one();
            LdlFactor::factor(&a.linear_combination(T::one(), b, -sigma))?
        }
    };
    let below = factor.negative_pivots();
    if below > 0 {
        return Err(EigenError::ShiftAboveSpectrum {
            shift: sigma.to_f64_lossy(),
            count: below,
        });
    }
    let mut op = ShiftInvert {
        factor,
        applications: 0,
    };
    let max_apps = opts.max_iter.unwrap_or(500 * nev);
    let a_max = a.max_abs();
    let tol = opts.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Basis V (B-orthonormal), BV = B V, Z = Op V, H = (BV)^H Z.
    let mut v: Vec<Vec<Cx<T>>> = Vec::with_capacity(m_max);
    let mut bv: Vec<Vec<Cx<T>>> = Vec::with_capacity(m_max);
    let mut z: Vec<Vec<Cx<T>>> = Vec::with_capacity(m_max);
    let mut h = DMat::<T>::zeros(0, 0);

    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<Cx<T>> {
        (0..n)
            .map(|_| Cx::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
            .collect()
    };

    let mut pending: Vec<Vec<Cx<T>>> = (0..p).map(|_| random_vec(&mut rng)).collect();
    let mut best: Option<EigenResult<T>> = None;
    let mut nconv = 0usize;
    loop {
        // Orthogonalize and append pending directions.
        let old_m = v.len();
        for mut w in pending.drain(..) {
            let mut accepted = false;
            for attempt in 0..3 {
                let mut bw = b.mul_vec(&w);
                let before = dot(&w, &bw).re.max(T::zero()).sqrt();
                for _ in 0..2 {
                    for (vj, bvj) in v.iter().zip(&bv) {
                        let c = dot(bvj, &w);
                        axpy(&mut w, -c, vj);
                    }
                }
                bw = b.mul_vec(&w);
                let nrm = dot(&w, &bw).re.max(T::zero()).sqrt();
                if nrm > T::lit(1e-10) * before && nrm > T::zero() {
                    let s = T::one() / nrm;
                    for x in w.iter_mut() {
                        *x = *x * s;
                    }
                    for x in bw.iter_mut() {
                        *x = *x * s;
                    }
                    let zw = op.apply_to_bx(&bw);
                    v.push(w);
                    bv.push(bw);
                    z.push(zw);
                    accepted = true;
                    break;
                }
                if attempt < 2 {
                    w = random_vec(&mut rng);
                }
            }
            if !accepted || v.len() >= n {
                break;
            }
        }
        let m = v.len();
        // Extend H with the new rows and columns.
        let mut hn = DMat::zeros(m, m);
        for j in 0..old_m {
            for i in 0..old_m {
                hn[(i, j)] = h[(i, j)];
            }
        }
        for j in 0..m {
            for i in 0..m {
                if i >= old_m || j >= old_m {
                    hn[(i, j)] = dot(&bv[i], &z[j]);
                }
            }
        }
        hn.symmetrize();
        h = hn;

        let (theta, y) = hermitian_eigh(&h);
        // Largest theta first.
        let order: Vec<usize> = (0..m).rev().collect();
        let k_avail = nev.min(m);
        let ritz = |idx: usize| -> (T, Vec<Cx<T>>) {
            let j = order[idx];
            (theta[j], y.col(j).to_vec())
        };

        // Residual checks from the first unconverged pair.
        let mut results: Vec<(T, Vec<Cx<T>>, T)> = Vec::with_capacity(nev);
        let mut first_bad = None;
        for idx in 0..k_avail {
            let (th, yj) = ritz(idx);
            if th <= T::zero() {
                first_bad = Some(idx);
                break;
            }
            let lam = sigma + T::one() / th;
            let x = combine(&v, &yj);
            let r = residual_norm(a, b, &x, lam);
            let xn = norm(&x);
            if r <= tol * a_max * xn {
                results.push((lam, x, r));
            } else {
                first_bad = Some(idx);
                break;
            }
        }
        nconv = nconv.max(results.len());
        if first_bad.is_none() && results.len() == nev {
            let mut out = EigenResult {
                eigenvalues: Vec::with_capacity(nev),
                eigenvectors: Vec::with_capacity(nev),
                residuals: Vec::with_capacity(nev),
            };
            for (lam, x, r) in results {
                out.eigenvalues.push(lam);
                out.eigenvectors.push(x);
                out.residuals.push(r);
            }
            sort_result(&mut out);
            return Ok(out);
        }
        if results.len() >= best.as_ref().map_or(0, |b| b.len()) {
            let mut partial = EigenResult {
                eigenvalues: results.iter().map(|r| r.0).collect(),
                eigenvectors: results.iter().map(|r| r.1.clone()).collect(),
                residuals: results.iter().map(|r| r.2).collect(),
            };
            sort_result(&mut partial);
            best = Some(partial);
        }
        if op.applications >= max_apps || m >= n {
            return Err(EigenError::NotConverged {
                iterations: op.applications,
                nev,
                converged: Box::new(best.unwrap_or(EigenResult {
                    eigenvalues: Vec::new(),
                    eigenvectors: Vec::new(),
                    residuals: Vec::new(),
                })),
            });
        }

        // Expansion directions: Op-space residuals of the next unconverged Ritz pairs.
        let start = first_bad.unwrap_or(results.len());
        for idx in start..(start + p).min(m) {
            let (th, yj) = ritz(idx);
            let mut s = combine(&z, &yj);
            let x = combine(&v, &yj);
            axpy(&mut s, Cx::new(-th, T::zero()), &x);
            pending.push(s);
        }
        while pending.len() < p {
            pending.push(random_vec(&mut rng));
        }

        // Thick restart keeping the leading Ritz vectors.
        if m + p > m_max {
            let keep = (nev + p).min(m);
            let cols: Vec<Vec<Cx<T>>> = (0..keep).map(|idx| ritz(idx).1).collect();
            let newv: Vec<Vec<Cx<T>>> = cols.iter().map(|c| combine(&v, c)).collect();
            let newbv: Vec<Vec<Cx<T>>> = cols.iter().map(|c| combine(&bv, c)).collect();
            let newz: Vec<Vec<Cx<T>>> = cols.iter().map(|c| combine(&z, c)).collect();
            v = newv;
            bv = newbv;
            z = newz;
            let mut hk = DMat::zeros(keep, keep);
            for j in 0..keep {
                for i in 0..keep {
                    hk[(i, j)] = dot(&bv[i], &z[j]);
                }
            }
            hk.symmetrize();
            h = hk;
        }
    }
}

fn sort_result<T: Real>(r: &mut EigenResult<T>) {
    let mut idx: Vec<usize> = (0..r.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        r.eigenvalues[a]
            .partial_cmp(&r.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    r.eigenvalues = idx.iter().map(|&i| r.eigenvalues[i]).collect();
    r.eigenvectors = idx.iter().map(|&i| r.eigenvectors[i].clone()).collect();
    r.residuals = idx.iter().map(|&i| r.residuals[i]).collect();
}

/// `X^H B X` for the eigenvectors of `r`.
pub fn b_gram<T: Real>(b: &CsrMatrix<T>, r: &EigenResult<T>) -> DMat<T> {
    let k = r.eigenvectors.len();
    let bx: Vec<Vec<Cx<T>>> = r.eigenvectors.iter().map(|x| b.mul_vec(x)).collect();
    DMat::from_fn(k, k, |i, j| dot(&r.eigenvectors[i], &bx[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    fn diag(d: &[f64]) -> CsrMatrix<f64> {
        CsrMatrix::from_triplets(
            d.len(),
            d.len(),
            d.iter().enumerate().map(|(i, &v)| (i, i, c(v, 0.0))).collect(),
        )
    }

    #[test]
    fn diagonal_example() {
        let r = solve_smallest(&diag(&[1.0, 2.0, 3.0]), &diag(&[1.0; 3]), 2, &EigenOptions::default()).unwrap();
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-12 && (r.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_generalized() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 0, c(2.0, 0.0)),
                (0, 1, c(1.0, 0.0)),
                (1, 0, c(1.0, 0.0)),
                (1, 1, c(2.0, 0.0)),
            ],
        );
        let r = solve_smallest(&a, &diag(&[2.0, 1.0]), 2, &EigenOptions::default()).unwrap();
        let s3 = 3f64.sqrt();
        assert!((r.eigenvalues[0] - (3.0 - s3) / 2.0).abs() < 1e-12);
        assert!((r.eigenvalues[1] - (3.0 + s3) / 2.0).abs() < 1e-12);
    }

    fn laplacian_ring(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.push((i, i, c(2.0, 0.0)));
            t.push((i, j, c(-1.0, 0.0)));
            t.push((j, i, c(-1.0, 0.0)));
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn degenerate_ring_spectrum() {
        // Eigenvalues 2 - 2 cos(2 pi m / n) are doubly degenerate for m != 0.
        let n = 200;
        let a = laplacian_ring(n);
        let r = solve_smallest(&a, &CsrMatrix::identity(n), 7, &EigenOptions::default()).unwrap();
        let mut exact: Vec<f64> = (0..n)
            .map(|m| 2.0 - 2.0 * (std::f64::consts::TAU * m as f64 / n as f64).cos())
            .collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in r.eigenvalues.iter().zip(&exact) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let g = b_gram(&CsrMatrix::identity(n), &r);
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - c(want, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn inertia_count() {
        let a = diag(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(count_below(&a, &CsrMatrix::identity(4), 2.5).unwrap(), 2);
    }

    #[test]
    fn rejects_oversized_request() {
        assert!(solve_smallest(&diag(&[1.0]), &diag(&[1.0]), 2, &EigenOptions::default()).is_err());
    }
}
