//! Numerical toolkit for double-phase elliptic equations with variable
//! exponents on layered domains: an energy-minimization solver, dyadic
//! nonlinear Wolff potentials of the right-hand side, and an empirical harness
//! for the two-sided pointwise bounds of solutions by those potentials.

pub mod bounds;
pub mod error;
pub mod fiber;
pub mod geometry;
pub mod solver;
pub mod wolff;

pub use bounds::{
    classify_case, sweep, verify_bounds, BoundFlags, BoundReport, CaseKind, CaseLabel,
    ConstantStats, ScaleRun, SweepStats, SweepTable, VerifyArgs,
};
pub use error::{Error, Result};
pub use fiber::{
    load_config, preset, preset_cable, preset_fiber, run_scenario, DomainConfig, EvaluateConfig,
    IntegralMode, PointSpec, ScaleSolveSummary, ScenarioConfig, ScenarioReport, ScenarioRun,
    SolverConfig, SourceSpec, WolffConfig,
};
pub use geometry::{
    build_grid, build_layered_fields, holder_seminorm, validate_exponents, DomainSpec,
    ExponentSummary, Grid, GridKind, HolderEstimate, Layer, LayerStack, Location, MaterialFields,
    ScalarField, ValidationReport,
};
pub use solver::{
    analytic_radial_plaplace, energy, energy_gradient, solve_dirichlet, solve_radial,
    weak_residual, RadialSolution, SolveParams, SolveResult,
};
pub use wolff::{
    wolff_constant, wolff_measure, wolff_variable, wolff_window, Atom, MeasureData, Source,
    Truncation, WindowResult, WolffResult, WolffStatus,
};
