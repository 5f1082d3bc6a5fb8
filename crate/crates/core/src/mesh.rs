//! Uniform triangulations of the torus cell and the truncated cylinder, element
//! classification against the inclusions, and the doubled-DOF map.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{
    classify_triangle, classify_triangle_relaxed, cut_triangle_general, signed_area, translate_inclusion, CutGeometry,
    ElementClass, GeometryError, HexLattice, Inclusion, Vec2,
};
use crate::scalar::Real;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh resolution N = {0} must be at least 1")]
    TooCoarse(usize),
    #[error("cylinder half-length L = {0} must be at least 1")]
    BadLength(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("element {0} is marked Interface but has no cut geometry")]
    MissingCut(usize),
}

/// Periodic cell or cylinder `[0,1] x [-L, L]` in lattice coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Torus,
    Cylinder { l: usize },
}

/// Uniform triangulation in lattice coordinates `x = tau1 v1 + tau2 v2`.
///
/// Vertex `(i, j)` sits at `tau = (i/N, tau2_min + j/N)` and has index
/// `j (N + 1) + i`. Every sub-rhombus is split along the diagonal joining
/// `(i, j+1)` and `(i+1, j)`; triangles are stored counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeMesh<T> {
    pub lattice: HexLattice<T>,
    pub n: usize,
    pub topology: Topology,
    /// `|v1| / N`.
    pub h: T,
    pub vertices: Vec<Vec2<T>>,
    pub triangles: Vec<[usize; 3]>,
    /// Representative vertex of each vertex's periodic class.
    pub periodic_map: Vec<usize>,
    /// True on the Dirichlet lines `tau2 = +-L` of a cylinder.
    pub dirichlet_mask: Vec<bool>,
    /// Integer `tau2` cell row containing each triangle.
    pub element_row: Vec<i64>,
}

/// Torus mesh of the fundamental cell.
pub type TorusMesh<T> = LatticeMesh<T>;
/// Truncated cylinder mesh.
pub type CylinderMesh<T> = LatticeMesh<T>;

impl<T: Real> LatticeMesh<T> {
    pub fn cols(&self) -> usize {
        self.n + 1
    }

    pub fn rows(&self) -> usize {
        match self.topology {
            Topology::Torus => self.n + 1,
            Topology::Cylinder { l } => 2 * l * self.n + 1,
        }
    }

    pub fn tau2_min(&self) -> i64 {
        match self.topology {
            Topology::Torus => 0,
            Topology::Cylinder { l } => -(l as i64),
        }
    }

    #[inline]
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * self.cols() + i
    }

    /// Lattice coordinates of vertex `v`.
    pub fn vertex_tau(&self, v: usize) -> (T, T) {
        let i = v % self.cols();
        let j = v / self.cols();
        let n = T::from_usize_lossy(self.n);
        (
            T::from_usize_lossy(i) / n,
            T::lit(self.tau2_min() as f64) + T::from_usize_lossy(j) / n,
        )
    }

    pub fn triangle(&self, e: usize) -> [Vec2<T>; 3] {
        let t = self.triangles[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn element_area(&self, e: usize) -> T {
        signed_area(&self.triangle(e))
    }

    pub fn centroid(&self, e: usize) -> Vec2<T> {
        let [a, b, c] = self.triangle(e);
        (a + b + c) * (T::one() / T::lit(3.0))
    }

    /// Number of periodic vertex classes.
    pub fn class_count(&self) -> usize {
        match self.topology {
            Topology::Torus => self.n * self.n,
            Topology::Cylinder { .. } => self.n * self.rows(),
        }
    }

    /// Dense class id of a vertex, consistent with `periodic_map`.
    pub fn vertex_class(&self, v: usize) -> usize {
        let r = self.periodic_map[v];
        let i = r % self.cols();
        let j = r / self.cols();
        j * self.n + i
    }

    /// Inclusions relevant to element `e` (the discs of its cell, translated).
    pub fn cell_inclusions(&self, e: usize, inclusions: &[Inclusion<T>]) -> Vec<Inclusion<T>> {
        let row = self.element_row[e];
        inclusions
            .iter()
            .map(|inc| translate_inclusion(&self.lattice, inc, 0, row))
            .collect()
    }
}

fn build<T: Real>(lattice: &HexLattice<T>, n: usize, topology: Topology) -> LatticeMesh<T> {
    let cols = n + 1;
    let (rows, tau2_min) = match topology {
        Topology::Torus => (n + 1, 0i64),
        Topology::Cylinder { l } => (2 * l * n + 1, -(l as i64)),
    };
    let nf = T::from_usize_lossy(n);
    let mut vertices = Vec::with_capacity(rows * cols);
    let mut periodic_map = Vec::with_capacity(rows * cols);
    let mut dirichlet_mask = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        // Integer cell row plus in-cell offset, so every cell row repeats the same offsets.
        let tau2 = T::lit(tau2_min as f64 + (j / n) as f64) + T::from_usize_lossy(j % n) / nf;
        for i in 0..cols {
            let tau1 = if i == n { T::one() } else { T::from_usize_lossy(i) / nf };
            vertices.push(lattice.from_fractional(tau1, tau2));
            let ri = i % n;
            let rj = match topology {
                Topology::Torus => j % n,
                Topology::Cylinder { .. } => j,
            };
            periodic_map.push(rj * cols + ri);
            dirichlet_mask.push(matches!(topology, Topology::Cylinder { .. }) && (j == 0 || j == rows - 1));
        }
    }
    // Replace vertices of the closing column/row by exact translates.
    for j in 0..rows {
        let v = j * cols + n;
        vertices[v] = vertices[j * cols] + lattice.v1;
    }
    if topology == Topology::Torus {
        for i in 0..cols {
            vertices[n * cols + i] = vertices[i] + lattice.v2;
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * (rows - 1));
    let mut element_row = Vec::with_capacity(2 * n * (rows - 1));
    for j in 0..rows - 1 {
        let row = tau2_min + (j / n) as i64;
        for i in 0..n {
            let p00 = j * cols + i;
            let p10 = p00 + 1;
            let p01 = p00 + cols;
            let p11 = p01 + 1;
            for mut t in [[p00, p10, p01], [p10, p11, p01]] {
                let area = signed_area(&[vertices[t[0]], vertices[t[1]], vertices[t[2]]]);
                if area < T::zero() {
                    t.swap(1, 2);
                }
                triangles.push(t);
                element_row.push(row);
            }
        }
    }
    LatticeMesh {
        lattice: *lattice,
        n,
        topology,
        h: lattice.v1.norm() / nf,
        vertices,
        triangles,
        periodic_map,
        dirichlet_mask,
        element_row,
    }
}

/// Uniform `N x N` triangulation of the fundamental cell with periodic identification.
pub fn build_torus_mesh<T: Real>(lattice: &HexLattice<T>, n: usize) -> Result<TorusMesh<T>, MeshError> {
    if n == 0 {
        return Err(MeshError::TooCoarse(n));
    }
    Ok(build(lattice, n, Topology::Torus))
}

/// Uniform triangulation of `{tau1 v1 + tau2 v2 : 0 <= tau1 <= 1, -L <= tau2 <= L}`,
/// periodic in `v1` with Dirichlet lines at `tau2 = +-L`.
pub fn build_cylinder_mesh<T: Real>(lattice: &HexLattice<T>, n: usize, l: usize) -> Result<CylinderMesh<T>, MeshError> {
    if n == 0 {
        return Err(MeshError::TooCoarse(n));
    }
    if l == 0 {
        return Err(MeshError::BadLength(l));
    }
    Ok(build(lattice, n, Topology::Cylinder { l }))
}

/// Per-element classification with the cut geometry of interface elements.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshClassification<T> {
    pub classes: Vec<ElementClass>,
    /// Translated inclusion touching each non-background element.
    pub inclusions: Vec<Option<Inclusion<T>>>,
    pub cuts: Vec<Option<CutGeometry<T>>>,
    pub m_arc: usize,
}

impl<T: Real> MeshClassification<T> {
    pub fn interface_count(&self) -> usize {
        self.classes.iter().filter(|c| c.is_interface()).count()
    }
}

/// Classifies every element and cuts the interface elements with `m_arc` chords.
///
/// `inclusions` are the discs of the fundamental cell; each element only sees
/// the translates belonging to its own cell row.
pub fn classify_mesh<T: Real>(
    mesh: &LatticeMesh<T>,
    inclusions: &[Inclusion<T>],
    m_arc: usize,
) -> Result<MeshClassification<T>, MeshError> {
    let ne = mesh.triangles.len();
    let mut classes = Vec::with_capacity(ne);
    let mut incs = Vec::with_capacity(ne);
    let mut cuts = Vec::with_capacity(ne);
    for e in 0..ne {
        let tri = mesh.triangle(e);
        let local = mesh.cell_inclusions(e, inclusions);
        let class = classify_triangle_relaxed(&tri, &local).map_err(|err| err.at_element(e))?;
        let inc = class.inclusion().map(|k| local[k]);
        let cut = match (class, inc) {
            (ElementClass::Interface { .. }, Some(inc)) => {
                Some(cut_triangle_general(&tri, &inc, m_arc).map_err(|err| err.at_element(e))?)
            }
            _ => None,
        };
        classes.push(class);
        incs.push(inc);
        cuts.push(cut);
    }
    Ok(MeshClassification {
        classes,
        inclusions: incs,
        cuts,
        m_arc,
    })
}

/// One violating element found by [`assumption_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub element: usize,
    pub reason: String,
}

/// Checks the interface assumption on every element; returns all violations.
pub fn assumption_check<T: Real>(mesh: &LatticeMesh<T>, inclusions: &[Inclusion<T>]) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    for e in 0..mesh.triangles.len() {
        let local = mesh.cell_inclusions(e, inclusions);
        if let Err(err) = classify_triangle(&mesh.triangle(e), &local) {
            let reason = match err {
                GeometryError::AssumptionViolation { reason, .. } => reason,
                other => other.to_string(),
            };
            out.push(Violation { element: e, reason });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Global numbering of the direct-sum space `V_{1,h} + V_{2,h}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    /// Vertex class id of every mesh vertex.
    pub vertex_class: Vec<usize>,
    /// DOF of each class in the side-1 and side-2 spaces.
    pub class_dofs: Vec<[Option<usize>; 2]>,
    pub n_dofs: usize,
}

impl DofMap {
    /// DOF of vertex `v` in the space of side `side` (1 or 2).
    #[inline]
    pub fn dof(&self, v: usize, side: usize) -> Option<usize> {
        self.class_dofs[self.vertex_class[v]][side - 1]
    }

    /// Number of classes carrying DOFs on both sides.
    pub fn doubled_count(&self) -> usize {
        self.class_dofs
            .iter()
            .filter(|d| d[0].is_some() && d[1].is_some())
            .count()
    }
}

/// Numbers DOFs lexicographically by vertex class, then side.
///
/// A class gets a side-`i` DOF when it is a vertex of an element covering
/// subdomain `i`; Dirichlet classes get none.
pub fn build_dofmap<T: Real>(
    mesh: &LatticeMesh<T>,
    classification: &MeshClassification<T>,
) -> Result<DofMap, MeshError> {
    let nc = mesh.class_count();
    let vertex_class: Vec<usize> = (0..mesh.vertices.len()).map(|v| mesh.vertex_class(v)).collect();
    let mut used = vec![[false; 2]; nc];
    let mut dirichlet = vec![false; nc];
    for (v, &d) in mesh.dirichlet_mask.iter().enumerate() {
        if d {
            dirichlet[vertex_class[v]] = true;
        }
    }
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let class = classification.classes[e];
        if class.is_interface() && classification.cuts[e].is_none() {
            return Err(MeshError::MissingCut(e));
        }
        for side in 1..=2 {
            if class.covers_side(side) {
                for &v in tri {
                    used[vertex_class[v]][side - 1] = true;
                }
            }
        }
    }
    let mut class_dofs = vec![[None; 2]; nc];
    let mut next = 0;
    for c in 0..nc {
        if dirichlet[c] {
            continue;
        }
        for s in 0..2 {
            if used[c][s] {
                class_dofs[c][s] = Some(next);
                next += 1;
            }
        }
    }
    Ok(DofMap {
        vertex_class,
        class_dofs,
        n_dofs: next,
    })
}

/// Line-oriented text dump of a classified mesh.
///
/// ```text
/// mesh <torus|cylinder> N <n> L <l> h <h>
/// vertices <count>
/// <index> <x> <y> <class> <dirichlet 0|1>      (one line per vertex)
/// triangles <count>
/// <index> <a> <b> <c> <R1|R2|I> <inclusion|->  (one line per triangle)
/// ```
pub fn dump_mesh<T: Real>(mesh: &LatticeMesh<T>, classification: Option<&MeshClassification<T>>) -> String {
    let mut s = String::new();
    let (kind, l) = match mesh.topology {
        Topology::Torus => ("torus", 0),
        Topology::Cylinder { l } => ("cylinder", l),
    };
    let _ = writeln!(s, "mesh {kind} N {} L {l} h {:e}", mesh.n, mesh.h.to_f64_lossy());
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for (v, p) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(
            s,
            "{v} {:e} {:e} {} {}",
            p.x.to_f64_lossy(),
            p.y.to_f64_lossy(),
            mesh.vertex_class(v),
            u8::from(mesh.dirichlet_mask[v])
        );
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles.len());
    for (e, t) in mesh.triangles.iter().enumerate() {
        let (tag, inc) = match classification.map(|c| c.classes[e]) {
            Some(ElementClass::Regular1 { inclusion }) => ("R1", inclusion.to_string()),
            Some(ElementClass::Interface { inclusion }) => ("I", inclusion.to_string()),
            _ => ("R2", "-".to_string()),
        };
        let _ = writeln!(s, "{e} {} {} {} {tag} {inc}", t[0], t[1], t[2]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::honeycomb_inclusions;

    fn lat() -> HexLattice<f64> {
        HexLattice::honeycomb()
    }

    #[test]
    fn torus_counts() {
        let m = build_torus_mesh(&lat(), 2).unwrap();
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(m.class_count(), 4);
        let reps: std::collections::BTreeSet<_> = m.periodic_map.iter().collect();
        assert_eq!(reps.len(), 4);
        let m = build_torus_mesh(&lat(), 64).unwrap();
        assert!((m.h - 1.0 / 64.0).abs() < 1e-15);
        let a = m.lattice.cell_area / (2.0 * 64.0 * 64.0);
        for e in 0..m.triangles.len() {
            assert!((m.element_area(e) - a).abs() < 1e-15);
        }
    }

    #[test]
    fn cylinder_counts() {
        let m = build_cylinder_mesh(&lat(), 2, 1).unwrap();
        assert_eq!(m.triangles.len(), 16);
        let mut lines = std::collections::BTreeSet::new();
        for (v, &d) in m.dirichlet_mask.iter().enumerate() {
            if d {
                lines.insert(v / m.cols());
            }
        }
        assert_eq!(lines.into_iter().collect::<Vec<_>>(), vec![0, m.rows() - 1]);
        for (v, &d) in m.dirichlet_mask.iter().enumerate() {
            let (_, t2) = m.vertex_tau(v);
            assert_eq!(d, (t2.abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn translation_structure_is_exact() {
        for n in [4, 8, 16, 32] {
            let m = build_torus_mesh(&lat(), n).unwrap();
            for j in 0..m.rows() {
                let d = m.vertices[m.vertex_index(n, j)] - m.vertices[m.vertex_index(0, j)];
                assert!(d.dist(m.lattice.v1) <= 2.0 * f64::EPSILON);
            }
            let m2 = build_torus_mesh(&lat(), 2 * n).unwrap();
            assert_eq!(m2.h * 2.0, m.h);
            assert_eq!(m2.triangles.len(), 4 * m.triangles.len());
        }
    }

    #[test]
    fn homogeneous_dofs_equal_classes() {
        let m = build_torus_mesh(&lat(), 8).unwrap();
        let c = classify_mesh(&m, &[], 4).unwrap();
        let d = build_dofmap(&m, &c).unwrap();
        assert_eq!(d.n_dofs, 64);
        assert_eq!(d.doubled_count(), 0);
    }

    #[test]
    fn coarse_mesh_violates_assumption() {
        let l = lat();
        let incs = honeycomb_inclusions(&l, 0.2).unwrap();
        let m = build_torus_mesh(&l, 1).unwrap();
        let v = assumption_check(&m, &incs).unwrap_err();
        assert!(!v.is_empty());
        assert!(assumption_check(&m, &[]).is_ok());
        let m = build_torus_mesh(&l, 64).unwrap();
        assert!(assumption_check(&m, &incs).is_ok());
    }

    #[test]
    fn dofmap_is_deterministic() {
        let l = lat();
        let incs = honeycomb_inclusions(&l, 0.2).unwrap();
        let m = build_torus_mesh(&l, 16).unwrap();
        let c = classify_mesh(&m, &incs, 4).unwrap();
        assert_eq!(build_dofmap(&m, &c).unwrap(), build_dofmap(&m, &c).unwrap());
    }

    #[test]
    fn dump_has_documented_sections() {
        let m = build_torus_mesh(&lat(), 2).unwrap();
        let s = dump_mesh(&m, None);
        assert!(s.starts_with("mesh torus N 2"));
        assert!(s.contains("\nvertices 9\n"));
        assert!(s.contains("\ntriangles 8\n"));
        assert_eq!(s.lines().count(), 1 + 1 + 9 + 1 + 8);
    }
}
