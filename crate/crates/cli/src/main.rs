//! Command-line front end: config validation, solving, Wolff potentials,
//! bound verification, and sweeps.
//!
//! Exit codes: 0 success, 1 domain-level failure (non-convergence, or invalid
//! exponents where validity is required), 2 usage/config errors.

mod emit;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use doublephase::{
    build_grid, build_layered_fields, run_scenario, solve_dirichlet, validate_exponents,
    wolff_constant, wolff_measure, Atom, ExponentSummary, IntegralMode, Location,
    MeasureData, PointSpec, ScaleSolveSummary, ScalarField, ScenarioConfig, Source, SourceSpec,
    ValidationReport,
};

#[derive(Parser)]
#[command(
    name = "doublephase",
    about = "Double-phase elliptic solver, Wolff potentials, and pointwise bound verification on layered domains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario configuration (JSON)
    config: PathBuf,
    /// Dotted-path overrides, e.g. --set solver.tol=1e-6 --set layers.0.q=2.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the exponent compatibility chain; exit 0 iff it holds
    Validate {
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Solve the problem and write solution.csv + summary.json
    Solve {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Evaluate a Wolff potential of f (or of a point measure) at a point
    Wolff {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Evaluation point: `x,y` on planar domains, a radius on radial ones
        #[arg(long)]
        point: String,
        /// Outer radius R of the dyadic sum
        #[arg(long)]
        radius: f64,
        /// `p` (= p_-), `q` (= q_+), or a literal exponent value
        #[arg(long, default_value = "p")]
        exponent: String,
        /// Point masses `x,y,mass` (planar) or `r,mass` (radial); switches to
        /// the measure potential of the atoms
        #[arg(long = "atom", value_name = "ATOM")]
        atoms: Vec<String>,
        /// Order parameter of the measure potential
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Directory for wolff.json (optional)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Verify the two-sided potential bounds at one point
    Verify {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        point: String,
        #[arg(long)]
        radius: f64,
        /// Directory for verify.json (optional)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the full scenario and write sweep.csv, report.json, profile.csv, solution.csv
    Sweep {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { cfg } => {
            let config = input::load_with_overrides(&cfg.config, &cfg.overrides)?;
            let report = validation_of(&config)?;
            print_validation(&config, &report);
            Ok(u8::from(!report.valid))
        }
        Command::Solve { cfg, out } => cmd_solve(&cfg, &out),
        Command::Wolff {
            cfg,
            point,
            radius,
            exponent,
            atoms,
            beta,
            out,
        } => cmd_wolff(&cfg, &point, radius, &exponent, &atoms, beta, out.as_deref()),
        Command::Verify {
            cfg,
            point,
            radius,
            out,
        } => cmd_verify(&cfg, &point, radius, out.as_deref()),
        Command::Sweep { cfg, out } => cmd_sweep(&cfg, &out),
    }
}

fn validation_of(config: &ScenarioConfig) -> Result<ValidationReport> {
    let stack = config.stack()?;
    let summary = ExponentSummary::from_stack(&stack, config.alpha, config.domain.dim(), 0.0);
    Ok(validate_exponents(&summary))
}

fn print_validation(config: &ScenarioConfig, r: &ValidationReport) {
    let stack = config.stack().expect("validated on load");
    let s = ExponentSummary::from_stack(&stack, config.alpha, config.domain.dim(), 0.0);
    let yn = |b: bool| if b { "ok" } else { "VIOLATED" };
    println!("exponents: p in [{}, {}], q in [{}, {}], alpha = {}, n = {}",
        s.p_minus, s.p_plus, s.q_minus, s.q_plus, s.alpha, s.n);
    println!("  1 < p_-                 {}", yn(r.p_minus_above_one));
    println!("  p_- <= p_+              {}", yn(r.p_ordered));
    println!("  p_+ <= q_-              {}", yn(r.p_plus_le_q_minus));
    println!("  q_- <= q_+              {}", yn(r.q_ordered));
    println!(
        "  q_+ <= threshold        {}   (threshold = {})",
        yn(r.q_plus_le_threshold),
        r.threshold
    );
    println!("  q_+ < n                 {}", yn(r.q_plus_below_n));
    println!("valid: {}", if r.valid { "yes" } else { "no" });
}

fn parse_point(text: &str, config: &ScenarioConfig) -> Result<Location> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let spec = match parts.as_slice() {
        [r] => PointSpec::Radius(r.parse().context("bad point radius")?),
        [x, y] => PointSpec::Xy([
            x.parse().context("bad point x")?,
            y.parse().context("bad point y")?,
        ]),
        _ => bail!("point must be `r` or `x,y`"),
    };
    Ok(spec.to_location(&config.domain)?)
}

fn parse_atom(text: &str, config: &ScenarioConfig) -> Result<Atom> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let (location, mass) = match parts.as_slice() {
        [r, m] => (
            PointSpec::Radius(r.parse().context("bad atom radius")?)
                .to_location(&config.domain)?,
            m.parse().context("bad atom mass")?,
        ),
        [x, y, m] => (
            PointSpec::Xy([
                x.parse().context("bad atom x")?,
                y.parse().context("bad atom y")?,
            ])
            .to_location(&config.domain)?,
            m.parse().context("bad atom mass")?,
        ),
        _ => bail!("atom must be `r,mass` or `x,y,mass`"),
    };
    Ok(Atom { location, mass })
}

fn cmd_solve(cfg: &ConfigArg, out: &std::path::Path) -> Result<u8> {
    let config = input::load_with_overrides(&cfg.config, &cfg.overrides)?;
    let grid = build_grid(config.domain.spec, config.domain.resolution)?;
    let stack = config.stack()?;
    let fields = build_layered_fields(&stack, &grid)?;
    let f = doublephase::fiber::source_field(&config.f, &grid, stack.center)?;
    let bnd = ScalarField::constant(&grid, config.boundary_value);
    let solve = solve_dirichlet(&fields, &f, &bnd, &config.solver.to_params())?;

    std::fs::create_dir_all(out)?;
    let summary = ScaleSolveSummary {
        scale: 1.0,
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
    };
    emit::write_atomic(
        &out.join("summary.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    let mut csv = String::new();
    {
        use doublephase::GridKind;
        use std::fmt::Write as _;
        match grid.kind() {
            GridKind::Cartesian2d => {
                csv.push_str("x1,x2,u\n");
                for idx in grid.active_nodes() {
                    let [x, y] = grid.coords(idx);
                    let _ = writeln!(csv, "{x},{y},{}", solve.u.values()[idx]);
                }
            }
            GridKind::Radial => {
                csv.push_str("r,u\n");
                for idx in grid.active_nodes() {
                    let _ = writeln!(csv, "{},{}", grid.coords(idx)[0], solve.u.values()[idx]);
                }
            }
        }
    }
    emit::write_atomic(&out.join("solution.csv"), &csv)?;
    println!(
        "energy {}  iterations {}  grad_sup {}  residual {}  converged {}",
        solve.energy, solve.iterations, solve.grad_sup, solve.weak_residual, solve.converged
    );
    Ok(u8::from(!solve.converged))
}

fn cmd_wolff(
    cfg: &ConfigArg,
    point: &str,
    radius: f64,
    exponent: &str,
    atom_specs: &[String],
    beta: f64,
    out: Option<&std::path::Path>,
) -> Result<u8> {
    let config = input::load_with_overrides(&cfg.config, &cfg.overrides)?;
    let x0 = parse_point(point, &config)?;
    let stack = config.stack()?;
    let n = config.domain.dim();
    let summary = ExponentSummary::from_stack(&stack, config.alpha, n, 0.0);
    let p = match exponent {
        "p" => summary.p_minus,
        "q" => summary.q_plus,
        lit => lit.parse().context("exponent must be `p`, `q`, or a number")?,
    };
    let trunc = config.wolff.truncation();

    let result = if atom_specs.is_empty() {
        let source = match (&config.f, config.wolff.integral_mode) {
            (SourceSpec::Constant { value }, IntegralMode::Analytic) => Source::Constant {
                value: *value,
                dim: n,
            },
            _ => {
                let grid = build_grid(config.domain.spec, config.domain.resolution)?;
                Source::Field(doublephase::fiber::source_field(
                    &config.f,
                    &grid,
                    stack.center,
                )?)
            }
        };
        wolff_constant(&source, &x0, radius, p, n, &trunc)?
    } else {
        let atoms = atom_specs
            .iter()
            .map(|a| parse_atom(a, &config))
            .collect::<Result<Vec<_>>>()?;
        let mu = MeasureData {
            density: None,
            atoms,
        };
        wolff_measure(&mu, &x0, radius, beta, p, n, &trunc)?
    };

    println!("W(x0, R = {radius}) with exponent {p}, n = {n}");
    emit::print_wolff(&result, radius);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        emit::write_atomic(
            &dir.join("wolff.json"),
            &serde_json::to_string_pretty(&result)?,
        )?;
    }
    // Divergence is a diagnostic outcome, not a failure.
    Ok(0)
}

fn cmd_verify(cfg: &ConfigArg, point: &str, radius: f64, out: Option<&std::path::Path>) -> Result<u8> {
    let mut config = input::load_with_overrides(&cfg.config, &cfg.overrides)?;
    let loc = parse_point(point, &config)?;
    config.evaluate.points = vec![match loc {
        Location::Xy(p) => PointSpec::Xy(p),
        Location::Radius(r) => PointSpec::Radius(r),
    }];
    config.evaluate.radii = vec![radius];
    config.evaluate.f_scales = vec![config.evaluate.f_scales[0]];

    let run = run_scenario(&config)?;
    if !run.report.validation.valid {
        println!("exponent condition violated; verification skipped");
        print_validation(&config, &run.report.validation);
        return Ok(1);
    }
    let report = &run.report.reports[0];
    if !report.flags.ball_inside {
        println!("warning: B_4rho(x0) leaves the domain; estimates are exploratory");
    }
    emit::print_bound_report(report);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        emit::write_atomic(
            &dir.join("verify.json"),
            &serde_json::to_string_pretty(report)?,
        )?;
    }
    Ok(u8::from(!run.report.solves.iter().all(|s| s.converged)))
}

fn cmd_sweep(cfg: &ConfigArg, out: &std::path::Path) -> Result<u8> {
    let config = input::load_with_overrides(&cfg.config, &cfg.overrides)?;
    let run = run_scenario(&config)?;
    std::fs::create_dir_all(out)?;

    emit::write_atomic(&out.join("sweep.csv"), &emit::sweep_csv(&run.report.reports))?;
    emit::write_atomic(
        &out.join("report.json"),
        &serde_json::to_string_pretty(&run.report)?,
    )?;
    emit::write_atomic(&out.join("solution.csv"), &emit::solution_csv(&run, 0))?;
    emit::write_atomic(
        &out.join("profile.csv"),
        &emit::profile_csv(&run, config.evaluate.profile_samples)?,
    )?;

    println!("rows: {}", run.report.reports.len());
    let stat = |name: &str, s: Option<doublephase::ConstantStats>| {
        if let Some(s) = s {
            println!(
                "{name}: count {}  min {}  max {}  max/min {}",
                s.count, s.min, s.max, s.ratio
            );
        }
    };
    stat("c1", run.report.stats.c1);
    stat("c2", run.report.stats.c2);
    stat("c3", run.report.stats.c3);
    stat("c4", run.report.stats.c4);

    let solves_ok = run.report.solves.iter().all(|s| s.converged);
    Ok(u8::from(!(solves_ok && run.report.validation.valid)))
}
