//! Unfitted Nitsche bilinear forms on torus and cylinder meshes.
//!
//! A [`Discretization`] caches everything that does not depend on the
//! quasimomentum (cuts, quadrature, material samples, Nitsche weights), so a
//! band sweep only re-runs the cheap per-`k` element loop.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{subcell_quadrature, triangle_rule, ElementClass, GeometryError, Site, Vec2};
use crate::linalg::CsrMatrix;
use crate::material::{Mat2, MaterialError, MaterialModel};
use crate::mesh::{build_dofmap, classify_mesh, DofMap, LatticeMesh, MeshClassification, MeshError, Topology};
use crate::scalar::{Cx, Real};

/// Default stabilization scalar.
pub const DEFAULT_LAMBDA_HAT: f64 = 10.0;
/// Default number of chords per arc.
pub const DEFAULT_M_ARC: usize = 4;
/// Quadrature order used for all element integrals.
pub const QUAD_ORDER: usize = 2;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("malformed cut in element {element}: both sub-areas vanish")]
    MalformedCut { element: usize },
    #[error("stabilization parameter must be positive, got {0}")]
    BadLambdaHat(f64),
    #[error("non-finite matrix entry from element {element}")]
    NonFinite { element: usize },
    #[error("{0} assembly requires a {1} mesh")]
    WrongTopology(&'static str, &'static str),
}

/// Quasimomentum of a torus problem or the parallel quasimomentum of a cylinder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlochParams<T> {
    Torus {
        k: Vec2<T>,
    },
    /// Enters the shifted gradient as `(k_par / 2 pi) k1`.
    Cylinder {
        k_par: T,
    },
}

impl<T: Real> BlochParams<T> {
    /// The vector `k` in `grad + i k`.
    pub fn vector(&self, mesh: &LatticeMesh<T>) -> Vec2<T> {
        match *self {
            BlochParams::Torus { k } => k,
            BlochParams::Cylinder { k_par } => mesh.lattice.k1 * (k_par / T::TAU()),
        }
    }
}

/// Nitsche weights of one interface element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutElementData<T> {
    pub kappa1: T,
    pub kappa2: T,
    pub lambda_k: T,
}

/// `kappa_1 = w2 |K1| / (w2 |K1| + w1 |K2|)` and its complement.
pub fn kappa_weights<T: Real>(area1: T, area2: T, norm_w1: T, norm_w2: T) -> Result<(T, T), AssemblyError> {
    let den = norm_w2 * area1 + norm_w1 * area2;
    if !(den > T::zero()) || area1 < T::zero() || area2 < T::zero() {
        return Err(AssemblyError::MalformedCut { element: usize::MAX });
    }
    let k1 = norm_w2 * area1 / den;
    Ok((k1, T::one() - k1))
}

/// `lambda_K = h w1 w2 |Gamma_K| / (w2 |K1| + w1 |K2|)`.
pub fn lambda_k<T: Real>(h: T, area1: T, area2: T, gamma_length: T, norm_w1: T, norm_w2: T) -> T {
    h * norm_w1 * norm_w2 * gamma_length / (norm_w2 * area1 + norm_w1 * area2)
}

#[derive(Clone, Debug)]
struct VolumePoint<T> {
    weight: T,
    bary: [T; 3],
    w: Mat2<T>,
}

#[derive(Clone, Debug)]
struct InterfacePoint<T> {
    weight: T,
    bary: [T; 3],
    normal: Vec2<T>,
    /// Weights of side 1 and side 2 at the point.
    w: [Mat2<T>; 2],
}

#[derive(Clone, Debug)]
struct ElementData<T> {
    vertices: [usize; 3],
    grads: [Vec2<T>; 3],
    /// Volume points of each side (empty when the side is absent).
    sides: [Vec<VolumePoint<T>>; 2],
    interface: Vec<InterfacePoint<T>>,
    cut: Option<CutElementData<T>>,
}

fn barycentric<T: Real>(tri: &[Vec2<T>; 3], x: Vec2<T>) -> [T; 3] {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let d = x - tri[0];
    let det = e1.cross(e2);
    let l1 = d.cross(e2) / det;
    let l2 = e1.cross(d) / det;
    [T::one() - l1 - l2, l1, l2]
}

/// Gradients of the three barycentric coordinates.
fn bary_gradients<T: Real>(tri: &[Vec2<T>; 3]) -> [Vec2<T>; 3] {
    let two_a = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    let g = |i: usize| {
        let a = tri[(i + 1) % 3];
        let b = tri[(i + 2) % 3];
        Vec2::new(a.y - b.y, b.x - a.x) * (T::one() / two_a)
    };
    [g(0), g(1), g(2)]
}

/// Mesh, classification, DOF numbering and cached element data.
#[derive(Clone, Debug)]
pub struct Discretization<T> {
    pub mesh: LatticeMesh<T>,
    pub material: MaterialModel<T>,
    pub classification: MeshClassification<T>,
    pub dofmap: DofMap,
    elements: Vec<ElementData<T>>,
}

impl<T: Real> Discretization<T> {
    /// Classifies `mesh` against the material's inclusions and precomputes
    /// all `k`-independent element data.
    pub fn new(mesh: LatticeMesh<T>, material: MaterialModel<T>, m_arc: usize) -> Result<Self, AssemblyError> {
        let classification = classify_mesh(&mesh, &material.inclusions, m_arc)?;
        let dofmap = build_dofmap(&mesh, &classification)?;
        let (n1, n2) = material.side_norms();
        let elements = (0..mesh.triangles.len())
            .into_par_iter()
            .map(|e| element_data(&mesh, &material, &classification, e, n1, n2))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            mesh,
            material,
            classification,
            dofmap,
            elements,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs
    }

    /// Nitsche weights of element `e` if it is an interface element.
    pub fn cut_data(&self, e: usize) -> Option<CutElementData<T>> {
        self.elements[e].cut
    }

    /// Assembles `A`, `B` and the energy-norm matrix at `bloch`.
    pub fn assemble(&self, bloch: BlochParams<T>, lambda_hat: T) -> Result<NitscheSystem<T>, AssemblyError> {
        if !(lambda_hat > T::zero()) {
            return Err(AssemblyError::BadLambdaHat(lambda_hat.to_f64_lossy()));
        }
        let k = bloch.vector(&self.mesh);
        let h = self.mesh.h;
        let locals: Vec<LocalTriplets<T>> = self
            .elements
            .par_iter()
            .enumerate()
            .map(|(e, el)| {
                let t = local_matrices(el, &self.dofmap, k, h, lambda_hat, true);
                if t.is_finite() {
                    Ok(t)
                } else {
                    Err(AssemblyError::NonFinite { element: e })
                }
            })
            .collect::<Result<_, _>>()?;
        let n = self.dofmap.n_dofs;
        let (a, b, en) = gather(n, locals);
        Ok(NitscheSystem {
            a,
            b,
            energy: en,
            bloch,
            lambda_hat,
            n_dofs: n,
        })
    }

    /// Classical conforming form on one DOF per vertex class (no Nitsche
    /// terms), with the same side-wise quadrature and material samples.
    ///
    /// Returns `(A, B)` on the class numbering of [`Self::class_dofs`].
    pub fn assemble_classical(&self, bloch: BlochParams<T>) -> (CsrMatrix<T>, CsrMatrix<T>) {
        let k = bloch.vector(&self.mesh);
        let single = self.class_dofs();
        let n = single.iter().filter(|d| d.is_some()).count();
        let mut single_of_dof = vec![0usize; self.dofmap.n_dofs];
        for (c, d) in self.dofmap.class_dofs.iter().enumerate() {
            for dof in d.iter().flatten() {
                single_of_dof[*dof] = single[c].expect("class with a dof is numbered");
            }
        }
        let locals: Vec<LocalTriplets<T>> = self
            .elements
            .iter()
            .map(|el| {
                let mut t = local_matrices(el, &self.dofmap, k, self.mesh.h, T::one(), false);
                // Remap both sides onto the single-valued numbering.
                t.remap(&|dof| single_of_dof[dof]);
                t
            })
            .collect();
        let (a, b, _) = gather(n, locals);
        (a, b)
    }

    /// Single-valued numbering of the non-Dirichlet vertex classes.
    pub fn class_dofs(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.dofmap
            .class_dofs
            .iter()
            .map(|d| {
                if d[0].is_some() || d[1].is_some() {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Copies single-valued class values into both sides (a jump-free vector).
    pub fn lift_jump_free(&self, values: &[Cx<T>]) -> Vec<Cx<T>> {
        let single = self.class_dofs();
        let mut out = vec![Cx::new(T::zero(), T::zero()); self.dofmap.n_dofs];
        for (c, d) in self.dofmap.class_dofs.iter().enumerate() {
            if let Some(s) = single[c] {
                for dof in d.iter().flatten() {
                    out[*dof] = values[s];
                }
            }
        }
        out
    }

    /// Side-wise `int_K |v|^2` of every element; sums to `v^H B v`.
    pub fn element_masses(&self, v: &[Cx<T>]) -> Vec<T> {
        self.elements
            .iter()
            .map(|el| {
                let mut m = T::zero();
                for side in 1..=2 {
                    let d = el.vertices.map(|vx| self.dofmap.dof(vx, side));
                    for p in &el.sides[side - 1] {
                        let mut u = Cx::new(T::zero(), T::zero());
                        for a in 0..3 {
                            if let Some(i) = d[a] {
                                u += v[i] * p.bary[a];
                            }
                        }
                        m += p.weight * u.norm_sqr();
                    }
                }
                m
            })
            .collect()
    }

    /// Element containing `p` (wrapped periodically) and the physical side
    /// there; `None` outside a cylinder.
    pub fn locate(&self, p: Vec2<T>) -> Option<(usize, usize, Vec2<T>)> {
        let lat = &self.mesh.lattice;
        let (mut t1, mut t2) = lat.to_fractional(p);
        t1 = t1 - t1.floor();
        if let Topology::Torus = self.mesh.topology {
            t2 = t2 - t2.floor();
        }
        let n = self.mesh.n;
        let nf = T::from_usize_lossy(n);
        let s = (t2 - T::lit(self.mesh.tau2_min() as f64)) * nf;
        let rows = self.mesh.rows() - 1;
        if s < T::zero() || s > T::from_usize_lossy(rows) {
            return None;
        }
        let i = ((t1 * nf).floor().to_f64_lossy() as usize).min(n - 1);
        let j = (s.floor().to_f64_lossy() as usize).min(rows - 1);
        let a = t1 * nf - T::from_usize_lossy(i);
        let b = s - T::from_usize_lossy(j);
        let e = 2 * (j * n + i) + usize::from(a + b > T::one());
        let q = lat.from_fractional(
            T::from_usize_lossy(i) / nf + a / nf,
            T::lit(self.mesh.tau2_min() as f64) + (T::from_usize_lossy(j) + b) / nf,
        );
        let side = match self.classification.inclusions[e] {
            Some(inc) if inc.contains(q) => 1,
            _ => 2,
        };
        Some((e, side, q))
    }

    /// Value of a DOF vector at `p`, taking the component of the physical side.
    pub fn evaluate_at(&self, x: &[Cx<T>], p: Vec2<T>) -> Option<Cx<T>> {
        self.locate(p).map(|(e, side, q)| self.evaluate(x, e, side, q))
    }

    /// Value of a DOF vector at `x` inside element `e` on side `side`.
    pub fn evaluate(&self, x: &[Cx<T>], e: usize, side: usize, p: Vec2<T>) -> Cx<T> {
        let tri = self.mesh.triangle(e);
        let bary = barycentric(&tri, p);
        let mut s = Cx::new(T::zero(), T::zero());
        for (a, &v) in self.mesh.triangles[e].iter().enumerate() {
            if let Some(d) = self.dofmap.dof(v, side) {
                s += x[d] * bary[a];
            }
        }
        s
    }
}

fn element_data<T: Real>(
    mesh: &LatticeMesh<T>,
    material: &MaterialModel<T>,
    classification: &MeshClassification<T>,
    e: usize,
    n1: T,
    n2: T,
) -> Result<ElementData<T>, AssemblyError> {
    let tri = mesh.triangle(e);
    let grads = bary_gradients(&tri);
    let class = classification.classes[e];
    let site: Option<Site> = classification.inclusions[e].map(|inc| inc.site);
    let volume = |rule: crate::geometry::QuadRule<T>, side: usize| -> Vec<VolumePoint<T>> {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &weight)| VolumePoint {
                weight,
                bary: barycentric(&tri, x),
                w: material.weight_on_side(x, side, site),
            })
            .collect()
    };
    let mut sides: [Vec<VolumePoint<T>>; 2] = [Vec::new(), Vec::new()];
    let mut interface = Vec::new();
    let mut cut = None;
    match class {
        ElementClass::Regular1 { .. } => sides[0] = volume(triangle_rule(&tri, QUAD_ORDER)?, 1),
        ElementClass::Regular2 => sides[1] = volume(triangle_rule(&tri, QUAD_ORDER)?, 2),
        ElementClass::Interface { .. } => {
            let geom = classification.cuts[e].as_ref().ok_or(MeshError::MissingCut(e))?;
            let q = subcell_quadrature(geom, QUAD_ORDER)?;
            sides[0] = volume(q.side1, 1);
            sides[1] = volume(q.side2, 2);
            for ((&x, &weight), &normal) in q
                .interface
                .points
                .iter()
                .zip(&q.interface.weights)
                .zip(&q.interface.normals)
            {
                interface.push(InterfacePoint {
                    weight,
                    bary: barycentric(&tri, x),
                    normal,
                    w: [material.weight_on_side(x, 1, site), material.weight_on_side(x, 2, site)],
                });
            }
            let (kappa1, kappa2) = kappa_weights(geom.area1, geom.area2, n1, n2)
                .map_err(|_| AssemblyError::MalformedCut { element: e })?;
            cut = Some(CutElementData {
                kappa1,
                kappa2,
                lambda_k: lambda_k(mesh.h, geom.area1, geom.area2, geom.gamma_length, n1, n2),
            });
        }
    }
    Ok(ElementData {
        vertices: mesh.triangles[e],
        grads,
        sides,
        interface,
        cut,
    })
}

/// Per-element contributions as `(row, col, value)` triplets.
#[derive(Clone, Debug, Default)]
struct LocalTriplets<T> {
    a: Vec<(usize, usize, Cx<T>)>,
    b: Vec<(usize, usize, Cx<T>)>,
    en: Vec<(usize, usize, Cx<T>)>,
}

impl<T: Real> LocalTriplets<T> {
    fn is_finite(&self) -> bool {
        [&self.a, &self.b, &self.en]
            .iter()
            .all(|v| v.iter().all(|t| t.2.re.is_finite() && t.2.im.is_finite()))
    }

    fn remap(&mut self, f: &dyn Fn(usize) -> usize) {
        for v in [&mut self.a, &mut self.b, &mut self.en] {
            for t in v.iter_mut() {
                t.0 = f(t.0);
                t.1 = f(t.1);
            }
        }
    }
}

fn gather<T: Real>(n: usize, locals: Vec<LocalTriplets<T>>) -> (CsrMatrix<T>, CsrMatrix<T>, CsrMatrix<T>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut en = Vec::new();
    for t in locals {
        a.extend(t.a);
        b.extend(t.b);
        en.extend(t.en);
    }
    (
        CsrMatrix::from_triplets(n, n, a),
        CsrMatrix::from_triplets(n, n, b),
        CsrMatrix::from_triplets(n, n, en),
    )
}

/// Element matrices; `nitsche = false` drops the interface terms.
fn local_matrices<T: Real>(
    el: &ElementData<T>,
    dofmap: &DofMap,
    k: Vec2<T>,
    h: T,
    lambda_hat: T,
    nitsche: bool,
) -> LocalTriplets<T> {
    let zero = Cx::new(T::zero(), T::zero());
    let i = Cx::new(T::zero(), T::one());
    let mut out = LocalTriplets::default();
    // Shifted gradient of basis function `a` at barycentric point `bary`.
    let sgrad = |a: usize, bary: &[T; 3]| -> [Cx<T>; 2] {
        let g = el.grads[a];
        [
            Cx::new(g.x, T::zero()) + i * k.x * bary[a],
            Cx::new(g.y, T::zero()) + i * k.y * bary[a],
        ]
    };
    let dofs = |side: usize| -> [Option<usize>; 3] { el.vertices.map(|v| dofmap.dof(v, side)) };

    for side in 1..=2 {
        let pts = &el.sides[side - 1];
        if pts.is_empty() {
            continue;
        }
        let d = dofs(side);
        let mut ka = [[zero; 3]; 3];
        let mut kb = [[zero; 3]; 3];
        let mut ke = [[zero; 3]; 3];
        for p in pts {
            let g: [[Cx<T>; 2]; 3] = [sgrad(0, &p.bary), sgrad(1, &p.bary), sgrad(2, &p.bary)];
            let wg: [[Cx<T>; 2]; 3] = [p.w.apply(g[0]), p.w.apply(g[1]), p.w.apply(g[2])];
            for r in 0..3 {
                for c in 0..3 {
                    ka[r][c] += (g[r][0].conj() * wg[c][0] + g[r][1].conj() * wg[c][1]) * p.weight;
                    ke[r][c] += (g[r][0].conj() * g[c][0] + g[r][1].conj() * g[c][1]) * p.weight;
                    kb[r][c] += Cx::new(p.bary[r] * p.bary[c] * p.weight, T::zero());
                }
            }
        }
        for r in 0..3 {
            let Some(dr) = d[r] else { continue };
            for c in 0..3 {
                let Some(dc) = d[c] else { continue };
                out.a.push((dr, dc, ka[r][c]));
                out.b.push((dr, dc, kb[r][c]));
                out.en.push((dr, dc, ke[r][c]));
            }
        }
    }

    if !nitsche || el.interface.is_empty() {
        return out;
    }
    let cut = el.cut.expect("interface element has Nitsche weights");
    let kappa = [cut.kappa1, cut.kappa2];
    let pen = lambda_hat * cut.lambda_k / h;
    let sign = [T::one(), -T::one()];
    // Local functions (side, vertex) for 6 slots.
    let d1 = dofs(1);
    let d2 = dofs(2);
    let slot_dof = |s: usize| if s < 3 { d1[s] } else { d2[s - 3] };
    let mut ka = [[zero; 6]; 6];
    let mut ke = [[zero; 6]; 6];
    for p in &el.interface {
        let mut jump = [T::zero(); 6];
        let mut flux = [zero; 6];
        for s in 0..6 {
            let (side, a) = (s / 3, s % 3);
            jump[s] = sign[side] * p.bary[a];
            let wg = p.w[side].apply(sgrad(a, &p.bary));
            flux[s] = (wg[0] * p.normal.x + wg[1] * p.normal.y) * kappa[side];
        }
        for r in 0..6 {
            for c in 0..6 {
                let cons = flux[c] * jump[r] + flux[r].conj() * jump[c];
                ka[r][c] += (Cx::new(pen * jump[r] * jump[c], T::zero()) - cons) * p.weight;
                ke[r][c] += Cx::new(jump[r] * jump[c] * p.weight / h, T::zero());
            }
        }
    }
    for r in 0..6 {
        let Some(dr) = slot_dof(r) else { continue };
        for c in 0..6 {
            let Some(dc) = slot_dof(c) else { continue };
            out.a.push((dr, dc, ka[r][c]));
            out.en.push((dr, dc, ke[r][c]));
        }
    }
    out
}

/// Stiffness, mass and energy-norm matrices of one Bloch parameter.
#[derive(Clone, Debug)]
pub struct NitscheSystem<T> {
    /// Volume terms, consistency pair and penalty.
    pub a: CsrMatrix<T>,
    /// Side-wise mass.
    pub b: CsrMatrix<T>,
    /// Side-wise shifted-gradient Gram matrix plus `h^{-1}` jump mass.
    pub energy: CsrMatrix<T>,
    pub bloch: BlochParams<T>,
    pub lambda_hat: T,
    pub n_dofs: usize,
}

impl<T: Real> NitscheSystem<T> {
    /// `A` in coordinate text form.
    pub fn dump_a(&self) -> String {
        self.a.to_coordinate_text()
    }

    pub fn dump_b(&self) -> String {
        self.b.to_coordinate_text()
    }
}

/// Mesh-dependent norm `(||(grad + ik) v||^2 + sum_K h^{-1} ||[v]||^2_{Gamma_K})^{1/2}`.
pub fn energy_norm<T: Real>(v: &[Cx<T>], system: &NitscheSystem<T>) -> T {
    system.energy.quadratic_form(v).re.max(T::zero()).sqrt()
}

/// Torus assembly at quasimomentum `k`.
pub fn assemble_bulk<T: Real>(
    disc: &Discretization<T>,
    k: Vec2<T>,
    lambda_hat: T,
) -> Result<NitscheSystem<T>, AssemblyError> {
    if disc.mesh.topology != Topology::Torus {
        return Err(AssemblyError::WrongTopology("bulk", "torus"));
    }
    disc.assemble(BlochParams::Torus { k }, lambda_hat)
}

/// Cylinder assembly at parallel quasimomentum `k_par`.
pub fn assemble_edge<T: Real>(
    disc: &Discretization<T>,
    k_par: T,
    lambda_hat: T,
) -> Result<NitscheSystem<T>, AssemblyError> {
    if !matches!(disc.mesh.topology, Topology::Cylinder { .. }) {
        return Err(AssemblyError::WrongTopology("edge", "cylinder"));
    }
    disc.assemble(BlochParams::Cylinder { k_par }, lambda_hat)
}
