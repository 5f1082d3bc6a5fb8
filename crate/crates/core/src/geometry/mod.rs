//! Plane geometry: lattices, circular inclusions, triangle/circle cutting and
//! quadrature on the resulting sub-cells.

mod cut;
mod lattice;
mod quadrature;
mod vec2;

pub use cut::{
    circle_crossings, classify_triangle, classify_triangle_relaxed, cut_triangle, cut_triangle_general,
    disc_polygon_overlap_area, Crossing, CutGeometry, ElementClass, GammaSegment,
};
pub use lattice::{
    cell_boundary_distance, dual_lattice, high_symmetry_points, honeycomb_inclusions, translate_inclusion, HexLattice,
    HighSymmetryPoints, Inclusion, Site,
};
pub use quadrature::{
    gauss_segment_rule, subcell_quadrature, triangle_rule, triangulate_polygon, CutQuadrature, InterfaceRule, QuadRule,
};
pub use vec2::{signed_area, Vec2};

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("lattice basis is degenerate (|v1 x v2| = {det:e})")]
    DegenerateBasis { det: f64 },
    #[error("inclusion radius {radius} must lie in (0, {limit})")]
    InvalidRadius { radius: f64, limit: f64 },
    #[error("inclusion of radius {radius} crosses the fundamental cell boundary")]
    DiscCrossesCell { radius: f64 },
    #[error("interface assumption violated{}: {reason}", element_suffix(*element))]
    AssumptionViolation { element: Option<usize>, reason: String },
    #[error("quadrature order {0} unsupported (expected 1, 2 or 3)")]
    UnsupportedOrder(usize),
}

fn element_suffix(e: Option<usize>) -> String {
    match e {
        Some(i) => format!(" in element {i}"),
        None => String::new(),
    }
}

impl GeometryError {
    /// Attaches an element index to an assumption violation.
    pub fn at_element(self, element: usize) -> Self {
        match self {
            GeometryError::AssumptionViolation { reason, .. } => GeometryError::AssumptionViolation {
                element: Some(element),
                reason,
            },
            other => other,
        }
    }
}
