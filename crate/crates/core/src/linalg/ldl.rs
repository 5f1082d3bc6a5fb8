//! Envelope (skyline) `L D L^H` factorization of sparse Hermitian matrices
//! under a reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use crate::scalar::{abs2, Cx, Real};

use super::{CsrMatrix, LinalgError};

/// Reverse Cuthill-McKee permutation: `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(|v| v.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut start_candidates: Vec<usize> = (0..n).collect();
    start_candidates.sort_by_key(|&i| (degree[i], i));
    for &seed in &start_candidates {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::new();
        visited[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Endpoint of repeated breadth-first sweeps (George-Liu heuristic).
fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (levels, last) = bfs_levels(root, adj);
        let far = last.iter().copied().min_by_key(|&v| (degree[v], v)).unwrap_or(root);
        if levels <= ecc {
            break;
        }
        ecc = levels;
        root = far;
    }
    root
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut seen = std::collections::HashSet::new();
    seen.insert(root);
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in &adj[u] {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// `P A P^T = L D L^H` with unit lower-triangular `L` stored by envelope rows.
#[derive(Clone, Debug)]
pub struct LdlFactor<T> {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each (permuted) row.
    first: Vec<usize>,
    /// Start of each row in `values`; row `i` holds columns `first[i]..i`.
    start: Vec<usize>,
    values: Vec<Cx<T>>,
    diag: Vec<T>,
}

impl<T: Real> LdlFactor<T> {
    /// Factors a Hermitian matrix without pivoting.
    ///
    /// Fails when a pivot is smaller than `1e-13` times the largest diagonal
    /// magnitude seen so far.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_perm(a, perm)
    }

    pub fn factor_with_perm(a: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Self, LinalgError> {
        let n = a.nrows;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for &old_j in a.row(old_i).0 {
                let j = inv[old_j];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            start.push(total);
            total += i - first[i];
        }
        start.push(total);
        let mut values = vec![Cx::new(T::zero(), T::zero()); total];
        let mut diag = vec![T::zero(); n];
        for old_i in 0..n {
            let i = inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                if j < i {
                    values[start[i] + j - first[i]] = *v;
                } else if j == i {
                    diag[i] = v.re;
                }
            }
        }
        let mut scale = T::zero();
        // Row-oriented factorization: row i of L and d_i from previous rows.
        let mut work = vec![Cx::new(T::zero(), T::zero()); n];
        for i in 0..n {
            let fi = first[i];
            let ri = start[i];
            scale = scale.max(diag[i].abs());
            for j in fi..i {
                let fj = first[j];
                let rj = start[j];
                let lo = fi.max(fj);
                let mut s = values[ri + j - fi];
                for k in lo..j {
                    s -= work[k] * values[rj + k - fj].conj();
                }
                // work[j] holds L_ij d_j.
                work[j] = s;
            }
            let mut di = diag[i];
            for j in fi..i {
                let lij = work[j] / diag[j];
                di -= (lij * work[j].conj()).re;
                values[ri + j - fi] = lij;
            }
            if !(di.abs() > T::lit(1e-13) * scale) || !di.is_finite() {
                return Err(LinalgError::ZeroPivot { index: i });
            }
            diag[i] = di;
            for w in work.iter_mut().take(i).skip(fi) {
                *w = Cx::new(T::zero(), T::zero());
            }
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            values,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal entries.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Number of negative pivots, i.e. eigenvalues below zero (Sylvester).
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < T::zero()).count()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Cx<T>]) {
        let n = self.n;
        let mut y: Vec<Cx<T>> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for (k, l) in row.iter().enumerate() {
                s -= *l * y[fi + k];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] = y[i] / self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let yi = y[i];
            for (k, l) in row.iter().enumerate() {
                y[fi + k] -= l.conj() * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    pub fn solve(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Squared Euclidean norm.
pub fn norm2_sq<T: Real>(x: &[Cx<T>]) -> T {
    x.iter().map(|z| abs2(*z)).sum()
}
