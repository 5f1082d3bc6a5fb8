//! Floquet-Bloch unfitted Nitsche finite elements for honeycomb photonic
//! crystals with discontinuous complex matrix-valued material weights.

pub mod assembly;
pub mod eigensolve;
pub mod geometry;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod scalar;
pub mod spectral;
pub mod workflows;

pub use scalar::{Cx, Real};

/// Double-precision instantiations used by the CLI and the acceptance suite.
pub type HexLattice64 = geometry::HexLattice<f64>;
pub type Vec2d = geometry::Vec2<f64>;
pub type MaterialParams64 = material::MaterialParams<f64>;
pub type MaterialModel64 = material::MaterialModel<f64>;
pub type LatticeMesh64 = mesh::LatticeMesh<f64>;
pub type Discretization64 = assembly::Discretization<f64>;
pub type NitscheSystem64 = assembly::NitscheSystem<f64>;
pub type EigenResult64 = eigensolve::EigenResult<f64>;
pub type BandStructure64 = workflows::BandStructure<f64>;
pub type ModeField64 = workflows::ModeField<f64>;

/// Single-precision instantiations.
pub type HexLattice32 = geometry::HexLattice<f32>;
pub type MaterialParams32 = material::MaterialParams<f32>;
pub type Discretization32 = assembly::Discretization<f32>;
pub type BandStructure32 = workflows::BandStructure<f32>;
