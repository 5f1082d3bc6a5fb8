//! Plane-wave (Fourier) baseline for the torus eigenproblem.
//!
//! The coefficient `W` is transformed on a uniform grid of the fundamental
//! cell. Each grid value is the average of `W` over the grid cell centred on
//! the node (exact disc/cell overlap areas), and the known transfer factor of
//! cell averaging is divided out afterwards. Point sampling of a disc
//! indicator converges too slowly for the coefficient accuracy we need.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::eigensolve::{EigenError, EigenResult};
use crate::geometry::{disc_polygon_overlap_area, Vec2};
use crate::linalg::{hermitian_eigh, DMat};
use crate::material::{Mat2, MaterialModel};
use crate::scalar::{Cx, Real};

#[derive(Clone, Debug, Error)]
pub enum SpectralError<T: Real> {
    #[error("plane-wave order M = {0} must be even and at least 2")]
    BadOrder(usize),
    #[error("grid size {grid} must be a power of two and at least 4 M = {min}")]
    BadGrid { grid: usize, min: usize },
    #[error("coefficient for ({0}, {1}) was not computed")]
    MissingCoefficient(i64, i64),
    #[error(transparent)]
    Eigen(#[from] EigenError<T>),
}

/// Dual-lattice vectors `m1 k1 + m2 k2` with `|m_i| <= M / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneWaveBasis<T> {
    pub m: usize,
    pub indices: Vec<(i64, i64)>,
    pub g_vectors: Vec<Vec2<T>>,
}

impl<T: Real> PlaneWaveBasis<T> {
    pub fn new(lattice: &crate::geometry::HexLattice<T>, m: usize) -> Result<Self, SpectralError<T>> {
        if m < 2 || m % 2 != 0 {
            return Err(SpectralError::BadOrder(m));
        }
        let half = (m / 2) as i64;
        let mut indices = Vec::with_capacity((m + 1) * (m + 1));
        for m2 in -half..=half {
            for m1 in -half..=half {
                indices.push((m1, m2));
            }
        }
        let g_vectors = indices.iter().map(|&(a, b)| lattice.dual_point(a, b)).collect();
        Ok(Self { m, indices, g_vectors })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `W_hat(G) = |Omega|^{-1} int_Omega W(x) e^{-i G.x} dx` for `|m_i| <= max_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficients<T> {
    pub max_index: i64,
    pub grid: usize,
    pub coeffs: BTreeMap<(i64, i64), Mat2<T>>,
}

impl<T: Real> FourierCoefficients<T> {
    pub fn get(&self, m1: i64, m2: i64) -> Option<&Mat2<T>> {
        self.coeffs.get(&(m1, m2))
    }
}

fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-12) {
        T::one()
    } else {
        x.sin() / x
    }
}

/// Cell-averaged `W` at every grid node, row-major in `(j, i)`.
fn averaged_field<T: Real>(material: &MaterialModel<T>, grid: usize) -> Vec<Mat2<T>> {
    let lat = &material.lattice;
    let n = T::from_usize_lossy(grid);
    let inv = T::one() / n;
    let half = inv * T::lit(0.5);
    // Half of the longer diagonal of a grid cell.
    let reach = ((lat.v1 + lat.v2).norm().max((lat.v1 - lat.v2).norm())) * half;
    let cell_area = lat.cell_area * inv * inv;
    let eps0 = material.params.eps0;
    let mut out = Vec::with_capacity(grid * grid);
    for j in 0..grid {
        for i in 0..grid {
            let t1 = T::from_usize_lossy(i) * inv;
            let t2 = T::from_usize_lossy(j) * inv;
            let xc = lat.from_fractional(t1, t2);
            let mut fracs: Vec<(T, T)> = Vec::new();
            let mut inside_total = T::zero();
            for inc in &material.inclusions {
                let d = xc.dist(inc.center);
                let frac = if d <= inc.radius - reach {
                    T::one()
                } else if d >= inc.radius + reach {
                    T::zero()
                } else {
                    let poly = [
                        lat.from_fractional(t1 - half, t2 - half),
                        lat.from_fractional(t1 + half, t2 - half),
                        lat.from_fractional(t1 + half, t2 + half),
                        lat.from_fractional(t1 - half, t2 + half),
                    ];
                    disc_polygon_overlap_area(&poly, inc.center, inc.radius) / cell_area
                };
                if frac > T::zero() {
                    fracs.push((frac, material.params.eps_of_site(inc.site)));
                    inside_total += frac;
                }
            }
            let mut w = material.weight_with_eps(xc, eps0).scale(T::one() - inside_total);
            for (f, eps) in fracs {
                w = w + material.weight_with_eps(xc, eps).scale(f);
            }
            out.push(w);
        }
    }
    out
}

/// Fourier coefficients of `W` for all `|m_i| <= max_index` on a `grid^2` lattice.
pub fn fourier_coefficients_w<T: Real>(
    material: &MaterialModel<T>,
    grid: usize,
    max_index: usize,
) -> Result<FourierCoefficients<T>, SpectralError<T>> {
    if !grid.is_power_of_two() || grid < 4 * max_index.max(1) {
        return Err(SpectralError::BadGrid {
            grid,
            min: 4 * max_index.max(1),
        });
    }
    let field = averaged_field(material, grid);
    let mi = max_index as i64;
    let nm = 2 * max_index + 1;
    // Twiddles e^{-2 pi i m p / grid}.
    let tw: Vec<Cx<T>> = (0..grid)
        .map(|p| {
            let a = -T::TAU() * T::from_usize_lossy(p) / T::from_usize_lossy(grid);
            Cx::new(a.cos(), a.sin())
        })
        .collect();
    let phase = |m: i64, p: usize| -> Cx<T> { tw[((m.rem_euclid(grid as i64) as usize) * p) % grid] };
    let zero = Cx::new(T::zero(), T::zero());
    // First pass along i: partial[j][m1 + mi][entry].
    let mut partial = vec![[zero; 4]; grid * nm];
    for j in 0..grid {
        let row = &field[j * grid..(j + 1) * grid];
        for (a, m1) in (-mi..=mi).enumerate() {
            let mut acc = [zero; 4];
            for (i, w) in row.iter().enumerate() {
                let ph = phase(m1, i);
                acc[0] += w.m[0][0] * ph;
                acc[1] += w.m[0][1] * ph;
                acc[2] += w.m[1][0] * ph;
                acc[3] += w.m[1][1] * ph;
            }
            partial[j * nm + a] = acc;
        }
    }
    let scale = T::one() / T::from_usize_lossy(grid * grid);
    let mut coeffs = BTreeMap::new();
    for m2 in -mi..=mi {
        for (a, m1) in (-mi..=mi).enumerate() {
            let mut acc = [zero; 4];
            for j in 0..grid {
                let ph = phase(m2, j);
                let p = &partial[j * nm + a];
                for e in 0..4 {
                    acc[e] += p[e] * ph;
                }
            }
            let pi_n = T::PI() / T::from_usize_lossy(grid);
            let transfer = sinc(pi_n * T::lit(m1 as f64)) * sinc(pi_n * T::lit(m2 as f64));
            let s = scale / transfer;
            coeffs.insert(
                (m1, m2),
                Mat2 {
                    m: [[acc[0] * s, acc[1] * s], [acc[2] * s, acc[3] * s]],
                },
            );
        }
    }
    Ok(FourierCoefficients {
        max_index: mi,
        grid,
        coeffs,
    })
}

/// Default transform grid for order `m`: at least 1024 and at least `4 m`.
pub fn default_grid(m: usize) -> usize {
    (4 * m).next_power_of_two().max(1024)
}

/// Hermitian plane-wave matrix `(k + G)^T W_hat(G - G') (k + G')`.
pub fn plane_wave_matrix<T: Real>(
    coeffs: &FourierCoefficients<T>,
    basis: &PlaneWaveBasis<T>,
    k: Vec2<T>,
) -> Result<DMat<T>, SpectralError<T>> {
    let n = basis.len();
    let mut h = DMat::zeros(n, n);
    for (c, (&(b1, b2), &gc)) in basis.indices.iter().zip(&basis.g_vectors).enumerate() {
        let q = k + gc;
        let qc = [Cx::new(q.x, T::zero()), Cx::new(q.y, T::zero())];
        for (r, (&(a1, a2), &gr)) in basis.indices.iter().zip(&basis.g_vectors).enumerate() {
            let w = coeffs
                .get(a1 - b1, a2 - b2)
                .ok_or(SpectralError::MissingCoefficient(a1 - b1, a2 - b2))?;
            let p = k + gr;
            let wq = w.apply(qc);
            h[(r, c)] = wq[0] * p.x + wq[1] * p.y;
        }
    }
    h.symmetrize();
    Ok(h)
}

/// The `nev` smallest plane-wave eigenvalues at `k` with precomputed coefficients.
pub fn spectral_bands_with<T: Real>(
    coeffs: &FourierCoefficients<T>,
    basis: &PlaneWaveBasis<T>,
    k: Vec2<T>,
    nev: usize,
) -> Result<EigenResult<T>, SpectralError<T>> {
    let h = plane_wave_matrix(coeffs, basis, k)?;
    let n = h.nrows;
    if nev > n {
        return Err(EigenError::BadRequest { nev, dim: n }.into());
    }
    let (vals, vecs) = hermitian_eigh(&h);
    let eigenvectors: Vec<Vec<Cx<T>>> = (0..nev).map(|j| vecs.col(j).to_vec()).collect();
    let residuals = eigenvectors
        .iter()
        .zip(&vals)
        .map(|(x, &e)| {
            let hx = h.mul_vec(x);
            hx.iter().zip(x).map(|(a, b)| (a - b * e).norm_sqr()).sum::<T>().sqrt()
        })
        .collect();
    Ok(EigenResult {
        eigenvalues: vals[..nev].to_vec(),
        eigenvectors,
        residuals,
    })
}

/// The `nev` smallest plane-wave eigenvalues at `k` with `(M + 1)^2` modes.
pub fn spectral_bands<T: Real>(
    material: &MaterialModel<T>,
    k: Vec2<T>,
    m: usize,
    nev: usize,
) -> Result<EigenResult<T>, SpectralError<T>> {
    let basis = PlaneWaveBasis::new(&material.lattice, m)?;
    let coeffs = fourier_coefficients_w(material, default_grid(m), m)?;
    spectral_bands_with(&coeffs, &basis, k, nev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{honeycomb_inclusions, HexLattice};
    use crate::material::{MaterialParams, WeightForm};

    #[test]
    fn basis_is_closed_under_negation() {
        let b = PlaneWaveBasis::<f64>::new(&HexLattice::honeycomb(), 6).unwrap();
        assert_eq!(b.len(), 49);
        for &(a, c) in &b.indices {
            assert!(b.indices.contains(&(-a, -c)));
        }
        assert!(PlaneWaveBasis::<f64>::new(&HexLattice::honeycomb(), 5).is_err());
    }

    #[test]
    fn homogeneous_coefficients() {
        let m = MaterialModel::<f64>::homogeneous(HexLattice::honeycomb());
        let c = fourier_coefficients_w(&m, 64, 4).unwrap();
        for (&(a, b), w) in &c.coeffs {
            let want = if (a, b) == (0, 0) { 1.0 } else { 0.0 };
            assert!((w.m[0][0] - Cx::new(want, 0.0)).norm() < 1e-12);
            assert!((w.m[1][1] - Cx::new(want, 0.0)).norm() < 1e-12);
            assert!(w.m[0][1].norm() < 1e-12 && w.m[1][0].norm() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_bands_are_free() {
        let lat = HexLattice::<f64>::honeycomb();
        let m = MaterialModel::homogeneous(lat);
        let k = Vec2::new(0.3, -1.1);
        let r = spectral_bands(&m, k, 4, 6).unwrap();
        let mut exact: Vec<f64> = PlaneWaveBasis::new(&lat, 4)
            .unwrap()
            .g_vectors
            .iter()
            .map(|g| (k + *g).norm2())
            .collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in r.eigenvalues.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10 * b.max(1.0));
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let lat = HexLattice::<f64>::honeycomb();
        let incs = honeycomb_inclusions(&lat, 0.2).unwrap().to_vec();
        let p = MaterialParams::bulk(2.0, 0.1, WeightForm::FirstOrder).unwrap();
        let c = fourier_coefficients_w(&MaterialModel::new(p, lat, incs), 64, 4).unwrap();
        for (&(a, b), w) in &c.coeffs {
            let wm = c.get(-a, -b).unwrap().conj_transpose();
            for r in 0..2 {
                for s in 0..2 {
                    assert!((w.m[r][s] - wm.m[r][s]).norm() < 1e-12);
                }
            }
        }
    }
}
