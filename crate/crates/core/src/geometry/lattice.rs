//! Hexagonal Bravais lattice, its dual, and the honeycomb inclusion sites.

use super::{GeometryError, Vec2};
use crate::scalar::Real;

/// Lattice basis `v1, v2` with the dual basis satisfying `k_i . v_j = 2 pi delta_ij`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HexLattice<T> {
    pub v1: Vec2<T>,
    pub v2: Vec2<T>,
    pub k1: Vec2<T>,
    pub k2: Vec2<T>,
    pub cell_area: T,
}

/// Solves the 2x2 duality system for the reciprocal basis.
pub fn dual_lattice<T: Real>(v1: Vec2<T>, v2: Vec2<T>) -> Result<(Vec2<T>, Vec2<T>), GeometryError> {
    let det = v1.cross(v2);
    if det.abs() < T::lit(1e-14) {
        return Err(GeometryError::DegenerateBasis {
            det: det.to_f64_lossy(),
        });
    }
    let two_pi = T::TAU();
    // Rows of 2 pi V^{-1}, where V has columns v1, v2.
    let k1 = Vec2::new(v2.y, -v2.x) * (two_pi / det);
    let k2 = Vec2::new(-v1.y, v1.x) * (two_pi / det);
    Ok((k1, k2))
}

impl<T: Real> HexLattice<T> {
    pub fn new(v1: Vec2<T>, v2: Vec2<T>) -> Result<Self, GeometryError> {
        let (k1, k2) = dual_lattice(v1, v2)?;
        Ok(Self {
            v1,
            v2,
            k1,
            k2,
            cell_area: v1.cross(v2).abs(),
        })
    }

    /// `v1 = (sqrt3/2, 1/2)`, `v2 = (sqrt3/2, -1/2)`.
    pub fn honeycomb() -> Self {
        let s = T::lit(3.0).sqrt() * T::lit(0.5);
        let half = T::lit(0.5);
        Self::new(Vec2::new(s, half), Vec2::new(s, -half)).expect("honeycomb basis is regular")
    }

    /// Coordinates `(theta1, theta2)` with `x = theta1 v1 + theta2 v2`.
    pub fn to_fractional(&self, x: Vec2<T>) -> (T, T) {
        let inv = T::one() / T::TAU();
        (x.dot(self.k1) * inv, x.dot(self.k2) * inv)
    }

    #[inline]
    pub fn from_fractional(&self, t1: T, t2: T) -> Vec2<T> {
        self.v1 * t1 + self.v2 * t2
    }

    /// Dual-lattice vector `m1 k1 + m2 k2`.
    #[inline]
    pub fn dual_point(&self, m1: i64, m2: i64) -> Vec2<T> {
        self.k1 * T::lit(m1 as f64) + self.k2 * T::lit(m2 as f64)
    }

    /// Largest `|k_i . v_j - 2 pi delta_ij|`.
    pub fn duality_residual(&self) -> T {
        let tau = T::TAU();
        let r = [
            (self.k1.dot(self.v1) - tau).abs(),
            self.k1.dot(self.v2).abs(),
            self.k2.dot(self.v1).abs(),
            (self.k2.dot(self.v2) - tau).abs(),
        ];
        r.into_iter().fold(T::zero(), T::max)
    }

    /// Honeycomb site A = (v1 + v2)/3.
    pub fn site_a(&self) -> Vec2<T> {
        (self.v1 + self.v2) * (T::one() / T::lit(3.0))
    }

    /// Honeycomb site B = 2(v1 + v2)/3.
    pub fn site_b(&self) -> Vec2<T> {
        (self.v1 + self.v2) * (T::lit(2.0) / T::lit(3.0))
    }

    /// Maps `x` into the fundamental cell `theta_j in [0, 1)`.
    ///
    /// Returns the wrapped point and the integer shift with
    /// `x = wrapped + s1 v1 + s2 v2`.
    pub fn wrap_to_cell(&self, x: Vec2<T>) -> (Vec2<T>, [i64; 2]) {
        let (t1, t2) = self.to_fractional(x);
        let (f1, s1) = wrap_unit(t1);
        let (f2, s2) = wrap_unit(t2);
        (self.from_fractional(f1, f2), [s1, s2])
    }

    /// Maps a quasimomentum into the fundamental dual cell `theta_j in [-1/2, 1/2)`.
    pub fn wrap_to_dual_cell(&self, k: Vec2<T>) -> (Vec2<T>, [i64; 2]) {
        let inv = T::one() / T::TAU();
        let t1 = k.dot(self.v1) * inv;
        let t2 = k.dot(self.v2) * inv;
        let half = T::lit(0.5);
        let (f1, s1) = wrap_unit(t1 + half);
        let (f2, s2) = wrap_unit(t2 + half);
        (self.k1 * (f1 - half) + self.k2 * (f2 - half), [s1, s2])
    }

    pub fn high_symmetry_points(&self) -> HighSymmetryPoints<T> {
        high_symmetry_points(self)
    }
}

/// Splits `t` into a fractional part in `[0, 1)` and the integer floor.
/// Fractional parts within `1e-12` of one snap to zero so that lattice points
/// land on the cell origin.
fn wrap_unit<T: Real>(t: T) -> (T, i64) {
    let mut fl = t.floor();
    let mut f = t - fl;
    if f > T::one() - T::lit(1e-12) {
        f = T::zero();
        fl = fl + T::one();
    }
    (f, fl.to_i64().unwrap_or(0))
}

/// Gamma, K, K' and M of the hexagonal Brillouin zone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighSymmetryPoints<T> {
    pub gamma: Vec2<T>,
    pub k: Vec2<T>,
    pub k_prime: Vec2<T>,
    pub m: Vec2<T>,
}

pub fn high_symmetry_points<T: Real>(lattice: &HexLattice<T>) -> HighSymmetryPoints<T> {
    let k = (lattice.k1 - lattice.k2) * (T::one() / T::lit(3.0));
    HighSymmetryPoints {
        gamma: Vec2::zero(),
        k,
        k_prime: -k,
        m: (lattice.k1 + lattice.k2) * T::lit(0.5),
    }
}

/// Which honeycomb sublattice an inclusion sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    A,
    B,
}

/// Circular inclusion `B_r(center)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inclusion<T> {
    pub center: Vec2<T>,
    pub radius: T,
    pub site: Site,
}

impl<T: Real> Inclusion<T> {
    /// Signed distance to the circle, negative inside.
    #[inline]
    pub fn signed_distance(&self, x: Vec2<T>) -> T {
        x.dist(self.center) - self.radius
    }

    /// Closed-disc membership; points on the circle count as inside.
    #[inline]
    pub fn contains(&self, x: Vec2<T>) -> bool {
        self.signed_distance(x) <= T::zero()
    }
}

/// The two discs of the fundamental cell, `B_r(A)` and `B_r(B)`.
///
/// Fails when the discs would touch or when a disc crosses the boundary of
/// the fundamental cell (the mesh pipeline relies on every disc living inside
/// a single cell).
pub fn honeycomb_inclusions<T: Real>(lattice: &HexLattice<T>, radius: T) -> Result<[Inclusion<T>; 2], GeometryError> {
    let a = lattice.site_a();
    let b = lattice.site_b();
    let limit = a.dist(b) * T::lit(0.5);
    if !(radius > T::zero()) || radius >= limit {
        return Err(GeometryError::InvalidRadius {
            radius: radius.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    let incs = [
        Inclusion {
            center: a,
            radius,
            site: Site::A,
        },
        Inclusion {
            center: b,
            radius,
            site: Site::B,
        },
    ];
    for inc in &incs {
        if cell_boundary_distance(lattice, inc.center) <= radius {
            return Err(GeometryError::DiscCrossesCell {
                radius: radius.to_f64_lossy(),
            });
        }
    }
    Ok(incs)
}

/// Euclidean distance from a point inside the cell to the nearest cell edge.
pub fn cell_boundary_distance<T: Real>(lattice: &HexLattice<T>, x: Vec2<T>) -> T {
    let (t1, t2) = lattice.to_fractional(x);
    // Heights of the parallelogram over each pair of edges.
    let h1 = lattice.cell_area / lattice.v2.norm();
    let h2 = lattice.cell_area / lattice.v1.norm();
    let d1 = t1.min(T::one() - t1) * h1;
    let d2 = t2.min(T::one() - t2) * h2;
    d1.min(d2)
}

/// Translates a cell inclusion by `s1 v1 + s2 v2`.
pub fn translate_inclusion<T: Real>(lattice: &HexLattice<T>, inc: &Inclusion<T>, s1: i64, s2: i64) -> Inclusion<T> {
    Inclusion {
        center: inc.center + lattice.from_fractional(T::lit(s1 as f64), T::lit(s2 as f64)),
        ..*inc
    }
}
