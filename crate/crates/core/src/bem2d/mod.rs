//! Galerkin boundary elements on polygons for `-Δu + s²u = 0`.

pub mod assembly;
pub mod manufactured;
pub mod mesh;
pub mod operators;
pub mod space;

pub use assembly::{
    assemble_double_layer, assemble_layers, assemble_mass, assemble_single_layer, assemble_stiffness, Assembler,
    GalerkinMatrix, LayerOperators, OperatorKind, QuadParams, Symmetry,
};
pub use manufactured::{manufactured_error, ManufacturedError};
pub use mesh::{mesh_polygon, MeshSpec, Panel, Point, PolygonBoundary, L_SHAPE, UNIT_SQUARE};
pub use operators::{dti_apply, dtn_apply, energy_norm, energy_norms, operator_norm, DtnCache, DtnOperator, Side};
pub use space::BoundarySpace;
