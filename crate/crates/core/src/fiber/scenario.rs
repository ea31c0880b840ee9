//! End-to-end scenario runs: fields, validation, solve, and bound sweeps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::{sweep, BoundReport, ScaleRun, SweepStats};
use crate::error::{Error, Result};
use crate::fiber::config::{IntegralMode, ScenarioConfig, SourceSpec};
use crate::geometry::{
    build_grid, build_layered_fields, holder_seminorm, validate_exponents, ExponentSummary, Grid,
    HolderEstimate, MaterialFields, ScalarField, ValidationReport,
};
use crate::solver::{solve_dirichlet, SolveResult};
use crate::wolff::Source;

/// Solve diagnostics of one `f`-scale, as serialized into reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSolveSummary {
    pub scale: f64,
    pub energy: f64,
    pub iterations: usize,
    pub grad_sup: f64,
    pub weak_residual: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub u_center: Option<f64>,
    pub converged: bool,
    pub nonnegative: bool,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub validation: ValidationReport,
    pub summary: ExponentSummary,
    pub seminorm: HolderEstimate,
    pub solves: Vec<ScaleSolveSummary>,
    pub reports: Vec<BoundReport>,
    pub stats: SweepStats,
}

/// A completed scenario: the serializable report plus the full solution data
/// for exports.
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub runs: Vec<ScaleRun>,
    pub grid: Arc<Grid>,
    pub fields: MaterialFields,
}

/// Materializes an `f` specification as a nodal field on a grid.
pub fn source_field(spec: &SourceSpec, grid: &Arc<Grid>, center: [f64; 2]) -> Result<ScalarField> {
    match spec {
        SourceSpec::Constant { value } => Ok(ScalarField::constant(grid, *value)),
        SourceSpec::RadialGaussian {
            amplitude,
            center_radius,
            width,
        } => ScalarField::from_fn(grid, |c| {
            let r = match grid.kind() {
                crate::geometry::GridKind::Cartesian2d => {
                    (c[0] - center[0]).hypot(c[1] - center[1])
                }
                crate::geometry::GridKind::Radial => c[0],
            };
            amplitude * (-((r - center_radius) / width).powi(2)).exp()
        }),
        SourceSpec::Nodal { path } => {
            let text = std::fs::read_to_string(path)?;
            let values: Vec<f64> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| {
                    l.parse::<f64>()
                        .map_err(|e| Error::config("f.path", format!("bad value `{l}`: {e}")))
                })
                .collect::<Result<_>>()?;
            if values.iter().any(|v| *v < 0.0) {
                return Err(Error::config("f.path", "nodal values must be nonnegative"));
            }
            ScalarField::from_values(grid, values)
        }
    }
}

/// Runs the full pipeline: build fields, validate the exponent chain, solve
/// per `f`-scale, then verify the two-sided bounds at every requested
/// (point, radius, scale). When validation fails the solves still run but the
/// verification sweep is skipped and the report carries the invalid result.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let grid = build_grid(config.domain.spec, config.domain.resolution)?;
    let stack = config.stack()?;
    let fields = build_layered_fields(&stack, &grid)?;
    let f_base = source_field(&config.f, &grid, stack.center)?;

    let seminorm = holder_seminorm(&fields.a, config.alpha)?;
    let summary =
        ExponentSummary::from_stack(&stack, config.alpha, config.domain.dim(), seminorm.value);
    let validation = validate_exponents(&summary);

    let bnd = ScalarField::constant(&grid, config.boundary_value);
    let params = config.solver.to_params();
    let mut runs = Vec::new();
    let mut solve_summaries = Vec::new();
    for &scale in &config.evaluate.f_scales {
        let f_scaled = f_base.scaled(scale);
        let solve: SolveResult = solve_dirichlet(&fields, &f_scaled, &bnd, &params)?;
        let source = match (config.wolff.integral_mode, &config.f) {
            (IntegralMode::Analytic, SourceSpec::Constant { value }) => Source::Constant {
                value: value * scale,
                dim: config.domain.dim(),
            },
            _ => Source::Field(f_scaled),
        };
        solve_summaries.push(ScaleSolveSummary {
            scale,
            energy: solve.energy,
            iterations: solve.iterations,
            grad_sup: solve.grad_sup,
            weak_residual: solve.weak_residual,
            min_u: solve.u.min_active(),
            max_u: solve.u.max_active(),
            u_center: solve.u.eval(&grid.center()).ok(),
            converged: solve.converged,
            nonnegative: solve.nonnegative,
            epsilon: solve.epsilon,
        });
        runs.push(ScaleRun {
            scale,
            source,
            solve,
        });
    }

    let (reports, stats) = if validation.valid {
        let points = config.locations()?;
        let table = sweep(
            &runs,
            &fields,
            &summary,
            &points,
            &config.evaluate.radii,
            &config.wolff.truncation(),
            validation.valid,
        )?;
        (table.reports, table.stats)
    } else {
        (Vec::new(), SweepStats::default())
    };

    Ok(ScenarioRun {
        report: ScenarioReport {
            config: config.clone(),
            validation,
            summary,
            seminorm,
            solves: solve_summaries,
            reports,
            stats,
        },
        runs,
        grid,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::CaseKind;
    use crate::fiber::config::load_config;

    fn small_fiber_config(extra: &str) -> ScenarioConfig {
        let text = format!(
            r#"{{"preset": "fiber",
                 "domain": {{"kind": "disk", "radius": 1.0, "resolution": 48}},
                 "solver": {{"tol": 1e-4, "max_iter": 4000}}{extra}}}"#
        );
        load_config(&text).unwrap()
    }

    #[test]
    fn fiber_center_is_case_a() {
        let cfg = small_fiber_config(r#", "evaluate": {"points": [[0.0, 0.0]], "radii": [0.1]}"#);
        let run = run_scenario(&cfg).unwrap();
        assert!(run.report.validation.valid);
        assert_eq!(run.report.reports.len(), 1);
        assert_eq!(run.report.reports[0].case, CaseKind::A);
        assert!(run.report.solves[0].converged);
    }

    #[test]
    fn zero_f_constant_boundary_gives_flat_solution() {
        let cfg = small_fiber_config(
            r#", "f": {"kind": "constant", "value": 0.0}, "boundary_value": 1.0"#,
        );
        let run = run_scenario(&cfg).unwrap();
        let s = &run.report.solves[0];
        assert_eq!(s.min_u, 1.0);
        assert_eq!(s.max_u, 1.0);
        let r = &run.report.reports[0];
        assert_eq!(r.w_pminus_rho, Some(0.0));
    }

    #[test]
    fn deterministic_reports() {
        let cfg = small_fiber_config(
            r#", "evaluate": {"points": [[0.0, 0.0], [0.55, 0.0]], "radii": [0.05, 0.1], "f_scales": [1.0, 2.0]}"#,
        );
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        let ja = serde_json::to_string(&a.report).unwrap();
        let jb = serde_json::to_string(&b.report).unwrap();
        assert_eq!(ja, jb);
        // Rows ordered points-major, radii-minor, scales-last.
        assert_eq!(a.report.reports.len(), 8);
        assert_eq!(a.report.reports[0].rho, 0.05);
        assert_eq!(a.report.reports[0].f_scale, 1.0);
        assert_eq!(a.report.reports[1].f_scale, 2.0);
        assert_eq!(a.report.reports[2].rho, 0.1);
    }

    #[test]
    fn cable_radial_case_labels() {
        let cfg = load_config(
            r#"{"preset": "cable",
                "domain": {"kind": "radial", "radius": 1.0, "dim": 3, "resolution": 256},
                "solver": {"tol": 1e-4, "max_iter": 6000},
                "evaluate": {"points": [0.0, 0.35, 0.75], "radii": [0.05]}}"#,
        )
        .unwrap();
        let run = run_scenario(&cfg).unwrap();
        assert!(run.report.validation.valid);
        let cases: Vec<CaseKind> = run.report.reports.iter().map(|r| r.case).collect();
        assert_eq!(cases[0], CaseKind::A);
        assert_ne!(cases[1], CaseKind::A);
        assert_ne!(cases[2], CaseKind::A);
        // u decreases outward and stays nonnegative.
        let u = &run.runs[0].solve.u;
        let vals = u.values();
        assert!(run.runs[0].solve.converged);
        assert!(u.min_active() >= -1e-8);
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "radial profile not decreasing");
        }
    }

    #[test]
    fn invalid_exponents_solve_but_skip_verification() {
        let cfg = load_config(
            r#"{"layers": [{"r_inner": 0.0, "r_outer": 1.0, "p": 1.8, "q": 2.5, "a": 0.1}],
                "domain": {"kind": "disk", "radius": 1.0, "resolution": 24},
                "solver": {"tol": 1e-4, "max_iter": 2000}}"#,
        )
        .unwrap();
        let run = run_scenario(&cfg).unwrap();
        assert!(!run.report.validation.valid);
        assert!(run.report.reports.is_empty());
        assert_eq!(run.report.solves.len(), 1);
    }
}
