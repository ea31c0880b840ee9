//! Domain geometry: grids, scalar fields, layer stacks, and exponent data.

mod exponents;
mod field;
mod grid;
mod layers;

pub use exponents::{holder_seminorm, validate_exponents, ExponentSummary, HolderEstimate, ValidationReport};
pub use field::{sphere_in_ball_fraction, ScalarField};
pub use grid::{build_grid, unit_ball_volume, unit_sphere_area, DomainSpec, Grid, GridKind, Location, NodeState};
pub use layers::{build_layered_fields, Layer, LayerStack, MaterialFields};
