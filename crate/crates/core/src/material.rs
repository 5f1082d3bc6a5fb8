//! Piecewise-constant permittivity and the 2x2 Hermitian material weights.

use std::ops::{Add, Mul};

use thiserror::Error;

use crate::geometry::{HexLattice, Inclusion, Site, Vec2};
use crate::scalar::{cx, cx_real, Cx, Real};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("permittivity {name} = {value} must be positive")]
    NonPositive { name: &'static str, value: f64 },
    #[error("material weight is not elliptic: eps = {eps} requires |{what}| < eps, got {value}")]
    NotElliptic { eps: f64, what: &'static str, value: f64 },
    #[error("wall asymptote kappa_inf = {0} must be positive")]
    BadKappa(f64),
}

/// Domain-wall profile `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WallKind {
    Step,
    Tanh,
}

/// Bulk weight: exact inverse of `[[eps, i gamma], [-i gamma, eps]]` or its
/// first-order expansion `eps^-1 I + gamma eps^-2 sigma2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightForm {
    ExactInverse,
    FirstOrder,
}

/// Symmetry-breaking part of the weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling<T> {
    /// Constant Faraday coefficient `gamma`.
    Bulk { gamma: T, form: WeightForm },
    /// Domain wall `delta kappa(delta k2 . x)` in first-order form.
    Edge { delta: T, kappa_inf: T, wall: WallKind },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams<T> {
    pub eps_a: T,
    pub eps_b: T,
    pub eps0: T,
    pub coupling: Coupling<T>,
}

impl<T: Real> MaterialParams<T> {
    /// `eps_A = eps_B = 1 + J`, background 1, constant `gamma`.
    pub fn bulk(j: T, gamma: T, form: WeightForm) -> Result<Self, MaterialError> {
        Self {
            eps_a: T::one() + j,
            eps_b: T::one() + j,
            eps0: T::one(),
            coupling: Coupling::Bulk { gamma, form },
        }
        .validated()
    }

    /// `eps_A = eps_B = 1 + J`, background 1, domain wall of strength `delta`.
    pub fn edge(j: T, delta: T, kappa_inf: T, wall: WallKind) -> Result<Self, MaterialError> {
        Self {
            eps_a: T::one() + j,
            eps_b: T::one() + j,
            eps0: T::one(),
            coupling: Coupling::Edge { delta, kappa_inf, wall },
        }
        .validated()
    }

    /// Bulk material reached far from the wall on the side where `kappa = sign * kappa_inf`.
    pub fn wall_asymptote(&self, sign: T) -> Option<Self> {
        match self.coupling {
            Coupling::Edge { delta, kappa_inf, .. } => Some(Self {
                coupling: Coupling::Bulk {
                    gamma: sign * delta * kappa_inf,
                    form: WeightForm::FirstOrder,
                },
                ..*self
            }),
            Coupling::Bulk { .. } => None,
        }
    }

    /// Largest attainable `|gamma_eff|`.
    pub fn gamma_bound(&self) -> T {
        match self.coupling {
            Coupling::Bulk { gamma, .. } => gamma.abs(),
            Coupling::Edge { delta, kappa_inf, .. } => (delta * kappa_inf).abs(),
        }
    }

    /// Checks positivity and `eps > |gamma_eff|` on every material.
    pub fn validated(self) -> Result<Self, MaterialError> {
        for (name, v) in [("eps_A", self.eps_a), ("eps_B", self.eps_b), ("eps_0", self.eps0)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(MaterialError::NonPositive {
                    name,
                    value: v.to_f64_lossy(),
                });
            }
        }
        if let Coupling::Edge { kappa_inf, .. } = self.coupling {
            if !(kappa_inf > T::zero()) {
                return Err(MaterialError::BadKappa(kappa_inf.to_f64_lossy()));
            }
        }
        let g = self.gamma_bound();
        let what = match self.coupling {
            Coupling::Bulk { .. } => "gamma",
            Coupling::Edge { .. } => "delta kappa_inf",
        };
        for eps in [self.eps_a, self.eps_b, self.eps0] {
            if !(eps > g) {
                return Err(MaterialError::NotElliptic {
                    eps: eps.to_f64_lossy(),
                    what,
                    value: g.to_f64_lossy(),
                });
            }
        }
        Ok(self)
    }

    pub fn eps_of_site(&self, site: Site) -> T {
        match site {
            Site::A => self.eps_a,
            Site::B => self.eps_b,
        }
    }
}

/// 2x2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[Cx<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn identity() -> Self {
        Self::diag(T::one())
    }

    pub fn diag(d: T) -> Self {
        let z = cx_real(T::zero());
        Self {
            m: [[cx_real(d), z], [z, cx_real(d)]],
        }
    }

    /// `sigma2 = [[0, -i], [i, 0]]`.
    pub fn sigma2() -> Self {
        let z = cx_real(T::zero());
        Self {
            m: [[z, cx(T::zero(), -T::one())], [cx(T::zero(), T::one()), z]],
        }
    }

    pub fn scale(self, s: T) -> Self {
        let mut m = self.m;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        Self { m }
    }

    #[inline]
    pub fn apply(&self, v: [Cx<T>; 2]) -> [Cx<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn conj_transpose(&self) -> Self {
        Self {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            m: [
                [self.m[0][0].conj(), self.m[0][1].conj()],
                [self.m[1][0].conj(), self.m[1][1].conj()],
            ],
        }
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        let h = self.conj_transpose();
        let mut d = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - h.m[i][j]).norm());
            }
        }
        d
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> (T, T) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = (self.m[0][1] + self.m[1][0].conj()) * T::lit(0.5);
        let mean = (a + d) * T::lit(0.5);
        let rad = (((a - d) * T::lit(0.5)).powi(2) + b.norm_sqr()).sqrt();
        (mean - rad, mean + rad)
    }

    /// Maximum row-sum norm.
    pub fn norm_inf(&self) -> T {
        (self.m[0][0].norm() + self.m[0][1].norm()).max(self.m[1][0].norm() + self.m[1][1].norm())
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut m = self.m;
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = m[i][j] + o.m[i][j];
            }
        }
        Self { m }
    }
}

impl<T: Real> Mul<T> for Mat2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Material weight at a point with the side it was evaluated on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSample<T> {
    pub w: Mat2<T>,
    pub side: usize,
}

/// `eps^-1 I + g eps^-2 sigma2`.
pub fn first_order_weight<T: Real>(eps: T, g: T) -> Mat2<T> {
    Mat2::diag(T::one() / eps) + Mat2::sigma2() * (g / (eps * eps))
}

/// Inverse of `[[eps, i g], [-i g, eps]]`.
pub fn exact_inverse_weight<T: Real>(eps: T, g: T) -> Mat2<T> {
    let s = T::one() / (eps * eps - g * g);
    (Mat2::diag(eps) + Mat2::sigma2() * g) * s
}

/// Step or tanh wall profile.
pub fn domain_wall<T: Real>(zeta: T, wall: WallKind, kappa_inf: T) -> T {
    match wall {
        WallKind::Step => {
            if zeta > T::zero() {
                kappa_inf
            } else if zeta < T::zero() {
                -kappa_inf
            } else {
                T::zero()
            }
        }
        WallKind::Tanh => kappa_inf * zeta.tanh(),
    }
}

/// Material parameters bound to the lattice and inclusion geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialModel<T> {
    pub params: MaterialParams<T>,
    pub lattice: HexLattice<T>,
    /// Discs of the fundamental cell (empty for a homogeneous medium).
    pub inclusions: Vec<Inclusion<T>>,
}

impl<T: Real> MaterialModel<T> {
    pub fn new(params: MaterialParams<T>, lattice: HexLattice<T>, inclusions: Vec<Inclusion<T>>) -> Self {
        Self {
            params,
            lattice,
            inclusions,
        }
    }

    /// `W = I`: unit permittivity, no inclusions, no coupling.
    pub fn homogeneous(lattice: HexLattice<T>) -> Self {
        let params = MaterialParams {
            eps_a: T::one(),
            eps_b: T::one(),
            eps0: T::one(),
            coupling: Coupling::Bulk {
                gamma: T::zero(),
                form: WeightForm::FirstOrder,
            },
        };
        Self::new(params, lattice, Vec::new())
    }

    /// Inclusion containing the lattice-wrapped point, if any.
    pub fn site_at(&self, x: Vec2<T>) -> Option<Site> {
        let (w, _) = self.lattice.wrap_to_cell(x);
        self.inclusions.iter().find(|inc| inc.contains(w)).map(|inc| inc.site)
    }

    pub fn epsilon_at(&self, x: Vec2<T>) -> T {
        match self.site_at(x) {
            Some(site) => self.params.eps_of_site(site),
            None => self.params.eps0,
        }
    }

    /// Coupling strength at `x` (constant for bulk, wall profile for edge).
    pub fn gamma_at(&self, x: Vec2<T>) -> T {
        match self.params.coupling {
            Coupling::Bulk { gamma, .. } => gamma,
            Coupling::Edge { delta, kappa_inf, wall } => {
                delta * domain_wall(delta * self.lattice.k2.dot(x), wall, kappa_inf)
            }
        }
    }

    /// Weight at `x` for a known permittivity `eps`.
    pub fn weight_with_eps(&self, x: Vec2<T>, eps: T) -> Mat2<T> {
        let g = self.gamma_at(x);
        match self.params.coupling {
            Coupling::Bulk {
                form: WeightForm::ExactInverse,
                ..
            } => exact_inverse_weight(eps, g),
            _ => first_order_weight(eps, g),
        }
    }

    /// Weight of side `side` (1 inside the disc on `site`, 2 in the background).
    pub fn weight_on_side(&self, x: Vec2<T>, side: usize, site: Option<Site>) -> Mat2<T> {
        let eps = match (side, site) {
            (1, Some(s)) => self.params.eps_of_site(s),
            _ => self.params.eps0,
        };
        self.weight_with_eps(x, eps)
    }

    pub fn weight_bulk(&self, x: Vec2<T>) -> WeightSample<T> {
        let site = self.site_at(x);
        let eps = self.epsilon_at(x);
        let g = match self.params.coupling {
            Coupling::Bulk { gamma, .. } => gamma,
            Coupling::Edge { .. } => T::zero(),
        };
        let w = match self.params.coupling {
            Coupling::Bulk {
                form: WeightForm::ExactInverse,
                ..
            } => exact_inverse_weight(eps, g),
            _ => first_order_weight(eps, g),
        };
        WeightSample {
            w,
            side: if site.is_some() { 1 } else { 2 },
        }
    }

    pub fn weight_edge(&self, x: Vec2<T>) -> WeightSample<T> {
        let site = self.site_at(x);
        WeightSample {
            w: first_order_weight(self.epsilon_at(x), self.gamma_at(x)),
            side: if site.is_some() { 1 } else { 2 },
        }
    }

    pub fn side_norms(&self) -> (T, T) {
        side_norms(&self.params)
    }
}

/// `(||W_1||_inf, ||W_2||_inf)` at the extreme parameter values of each side.
pub fn side_norms<T: Real>(p: &MaterialParams<T>) -> (T, T) {
    let g = p.gamma_bound();
    let norm = |eps: T| match p.coupling {
        Coupling::Bulk {
            form: WeightForm::ExactInverse,
            ..
        } => T::one() / (eps - g),
        _ => T::one() / eps + g / (eps * eps),
    };
    (norm(p.eps_a).max(norm(p.eps_b)), norm(p.eps0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::honeycomb_inclusions;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(params: MaterialParams<f64>) -> MaterialModel<f64> {
        let lat = HexLattice::honeycomb();
        let incs = honeycomb_inclusions(&lat, 0.2).unwrap().to_vec();
        MaterialModel::new(params, lat, incs)
    }

    fn close(a: Cx<f64>, re: f64, im: f64, tol: f64) -> bool {
        (a.re - re).abs() <= tol && (a.im - im).abs() <= tol
    }

    #[test]
    fn epsilon_values_and_periodicity() {
        let m = model(MaterialParams::bulk(2.0, 0.0, WeightForm::FirstOrder).unwrap());
        assert_eq!(m.epsilon_at(m.lattice.site_a()), 3.0);
        let centroid = (m.lattice.v1 + m.lattice.v2) * 0.5;
        assert_eq!(m.epsilon_at(centroid), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            assert_eq!(m.epsilon_at(x + m.lattice.v1), m.epsilon_at(x));
        }
    }

    #[test]
    fn weight_examples() {
        let w = first_order_weight(1.0, 0.0);
        assert_eq!(w, Mat2::identity());
        let w = first_order_weight(1.0, 0.1);
        assert!(close(w.m[0][0], 1.0, 0.0, 1e-15) && close(w.m[0][1], 0.0, -0.1, 1e-15));
        assert!(close(w.m[1][0], 0.0, 0.1, 1e-15) && close(w.m[1][1], 1.0, 0.0, 1e-15));
        let w = exact_inverse_weight(3.0, 0.1);
        assert!(close(w.m[0][0], 3.0 / 8.99, 0.0, 1e-15));
        assert!(close(w.m[0][1], 0.0, -0.1 / 8.99, 1e-15));
        assert!(close(w.m[1][0], 0.0, 0.1 / 8.99, 1e-15));
    }

    #[test]
    fn exact_inverse_inverts() {
        let (eps, g) = (2.5, 0.7);
        let w = exact_inverse_weight(eps, g);
        let a = [[cx(eps, 0.0), cx(0.0, g)], [cx(0.0, -g), cx(eps, 0.0)]];
        for i in 0..2 {
            for j in 0..2 {
                let s = a[i][0] * w.m[0][j] + a[i][1] * w.m[1][j];
                assert!(close(s, if i == j { 1.0 } else { 0.0 }, 0.0, 1e-15));
            }
        }
    }

    #[test]
    fn wall_profile() {
        assert_eq!(domain_wall(0.0, WallKind::Step, 1.0), 0.0);
        assert_eq!(domain_wall(1.0, WallKind::Step, 1.0), 1.0);
        assert_eq!(domain_wall(-1.0, WallKind::Step, 1.0), -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z: f64 = rng.gen_range(-5.0..5.0);
            assert_eq!(
                domain_wall(-z, WallKind::Tanh, 1.3),
                -domain_wall(z, WallKind::Tanh, 1.3)
            );
        }
    }

    #[test]
    fn edge_weight_examples() {
        let m = model(MaterialParams::edge(2.0, 0.0, 1.0, WallKind::Step).unwrap());
        let x = m.lattice.site_a();
        assert_eq!(m.weight_edge(x).w, Mat2::diag(1.0 / 3.0));

        let m = model(MaterialParams::edge(2.0, 0.6, 1.0, WallKind::Step).unwrap());
        // tau2 = 0.5 lies in the background, above the wall.
        let x = m.lattice.from_fractional(0.0, 0.5);
        assert_eq!(m.epsilon_at(x), 1.0);
        let w = m.weight_edge(x).w;
        assert!(close(w.m[0][0], 1.0, 0.0, 1e-15) && close(w.m[0][1], 0.0, -0.6, 1e-15));
        assert!(close(w.m[1][0], 0.0, 0.6, 1e-15));
        let wm = m.weight_edge(-x).w;
        assert!(close(wm.m[0][1], 0.0, 0.6, 1e-15));
    }

    #[test]
    fn side_norm_examples() {
        let p = MaterialParams::<f64>::bulk(2.0, 0.0, WeightForm::FirstOrder).unwrap();
        let (n1, n2) = side_norms(&p);
        assert!((n1 - 1.0 / 3.0).abs() < 1e-15 && (n2 - 1.0).abs() < 1e-15);
        let p = MaterialParams::bulk(0.0, 0.0, WeightForm::FirstOrder).unwrap();
        let (n1, n2) = side_norms(&p);
        assert_eq!(n1, n2);
        let a = MaterialParams::edge(2.0, 0.3, 1.0, WallKind::Tanh).unwrap();
        let b = MaterialParams::edge(2.0, -0.3, 1.0, WallKind::Tanh).unwrap();
        assert_eq!(side_norms(&a), side_norms(&b));
    }

    #[test]
    fn ellipticity_is_enforced() {
        assert!(MaterialParams::bulk(-1.0, 0.0, WeightForm::FirstOrder).is_err());
        assert!(MaterialParams::bulk(0.0, 1.0, WeightForm::FirstOrder).is_err());
        assert!(MaterialParams::edge(2.0, 1.0, 1.0, WallKind::Step).is_err());
        assert!(MaterialParams::edge(2.0, 0.6, 1.0, WallKind::Step).is_ok());
    }

    #[test]
    fn conjugation_flips_gamma() {
        let a = first_order_weight(3.0, 0.2);
        let b = first_order_weight(3.0, -0.2);
        assert_eq!(a.conj(), b);
        let a = exact_inverse_weight(3.0, 0.2);
        let b = exact_inverse_weight(3.0, -0.2);
        assert_eq!(a.conj(), b);
    }
}
