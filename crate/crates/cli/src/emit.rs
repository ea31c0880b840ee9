//! Report and CSV emission. Files are written atomically (write-then-rename)
//! and float formatting is the shortest round-trip form, so repeated runs of
//! the same configuration produce byte-identical output.

use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::path::Path;

use doublephase::{
    wolff_constant, BoundReport, GridKind, Location, ScenarioRun, Truncation, WolffResult,
};

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn report_flags(r: &BoundReport) -> String {
    format!(
        "ball={};cond3={};wolff={};solve={};scale={}",
        u8::from(r.flags.ball_inside),
        u8::from(r.flags.condition_valid),
        u8::from(r.flags.potentials_converged),
        u8::from(r.flags.solve_converged),
        r.f_scale
    )
}

fn point_columns(x0: &Location) -> (String, String) {
    match x0 {
        Location::Xy([x, y]) => (x.to_string(), y.to_string()),
        Location::Radius(r) => (String::new(), r.to_string()),
    }
}

pub const SWEEP_HEADER: &str = "point_x,point_y_or_r,rho,case,u_x0,inf_u,W_pminus_rho,W_pminus_2rho,W_qplus_rho,W_qplus_2rho,c1,c2,c3,c4,flags";

pub fn sweep_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in reports {
        let (px, py) = point_columns(&r.x0);
        let _ = writeln!(
            out,
            "{px},{py},{rho},{case},{u},{inf},{wp1},{wp2},{wq1},{wq2},{c1},{c2},{c3},{c4},{flags}",
            rho = r.rho,
            case = r.case,
            u = r.u_x0,
            inf = r.inf_u,
            wp1 = fmt_opt(r.w_pminus_rho),
            wp2 = fmt_opt(r.w_pminus_2rho),
            wq1 = fmt_opt(r.w_qplus_rho),
            wq2 = fmt_opt(r.w_qplus_2rho),
            c1 = fmt_opt(r.c1),
            c2 = fmt_opt(r.c2),
            c3 = fmt_opt(r.c3),
            c4 = fmt_opt(r.c4),
            flags = report_flags(r),
        );
    }
    out
}

/// Solution export: `x1,x2,u` rows over active nodes in lattice order for
/// planar grids, `r,u` for radial ones.
pub fn solution_csv(run: &ScenarioRun, scale_index: usize) -> String {
    let u = &run.runs[scale_index].solve.u;
    let grid = &run.grid;
    let mut out = String::new();
    match grid.kind() {
        GridKind::Cartesian2d => {
            out.push_str("x1,x2,u\n");
            for idx in grid.active_nodes() {
                let [x, y] = grid.coords(idx);
                let _ = writeln!(out, "{x},{y},{}", u.values()[idx]);
            }
        }
        GridKind::Radial => {
            out.push_str("r,u\n");
            for idx in grid.active_nodes() {
                let _ = writeln!(out, "{},{}", grid.coords(idx)[0], u.values()[idx]);
            }
        }
    }
    out
}

/// Radial profile of the solution and of `W_{1,p_-}(., rho)` along a ray from
/// the domain center, for external plotting.
pub fn profile_csv(run: &ScenarioRun, samples: usize) -> Result<String> {
    let grid = &run.grid;
    let report = &run.report;
    let rho = report.config.evaluate.radii[0];
    let p_minus = report.summary.p_minus;
    let n = report.summary.n;
    let trunc = Truncation {
        j_max: report.config.wolff.j_max,
        tail_tol: report.config.wolff.tail_tol,
    };
    let first = &run.runs[0];
    let u = &first.solve.u;

    let (r_lo, mut r_hi) = match grid.domain() {
        doublephase::DomainSpec::Annulus { inner, outer } => (inner, outer),
        doublephase::DomainSpec::Square { extent } => (0.0, extent / 2.0),
        doublephase::DomainSpec::Disk { radius } | doublephase::DomainSpec::Radial { radius, .. } => {
            (0.0, radius)
        }
    };
    let center = match grid.center() {
        Location::Xy(c) => c,
        Location::Radius(_) => [0.0, 0.0],
    };
    let at = |r: f64| match grid.kind() {
        GridKind::Cartesian2d => Location::xy(center[0] + r, center[1]),
        GridKind::Radial => Location::radius(r),
    };

    // The staircase rim of masked grids ends short of the ideal boundary;
    // walk the ray end inward to the last evaluable radius.
    r_hi *= 1.0 - 1e-9;
    let step = grid.spacing() / 8.0;
    while r_hi > r_lo && u.eval(&at(r_hi)).is_err() {
        r_hi -= step;
    }

    let mut out = String::from("r,u,W\n");
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let r = r_lo + t * (r_hi - r_lo);
        let loc = at(r);
        let uv = u.eval(&loc)?;
        let w = wolff_constant(&first.source, &loc, rho, p_minus, n, &trunc)?;
        let _ = writeln!(out, "{r},{uv},{}", w.value);
    }
    Ok(out)
}

pub fn print_wolff(result: &WolffResult, radius: f64) {
    println!("value            {}", result.value);
    println!("partial sum      {}", result.partial_sum);
    println!("tail bound       {}", result.tail_bound);
    println!("levels computed  {}", result.truncation_index);
    println!("status           {:?}", result.status);
    println!("   j        rho_j                 term");
    let mut rho = radius;
    for (j, term) in result.terms.iter().enumerate() {
        println!("{j:4}  {rho:>12.6e}  {term:>20.12e}");
        rho *= 0.5;
    }
}

pub fn print_bound_report(r: &BoundReport) {
    println!("case             {}   (rho = {})", r.case, r.rho);
    if let Some(rho0) = r.rho0 {
        println!("rho0             {rho0}");
    }
    println!("u(x0)            {}", r.u_x0);
    println!("inf_ball u       {}", r.inf_u);
    println!("sup |u|          {}", r.sup_u);
    let line = |name: &str, v: Option<f64>| {
        if let Some(v) = v {
            println!("{name:<16} {v}");
        }
    };
    line("W_p-(rho)", r.w_pminus_rho);
    line("W_p-(2rho)", r.w_pminus_2rho);
    line("W_q+(rho)", r.w_qplus_rho);
    line("W_q+(2rho)", r.w_qplus_2rho);
    line("window(rho)", r.window_rho);
    line("window(2rho)", r.window_2rho);
    line("c1", r.c1);
    line("c2", r.c2);
    line("c3", r.c3);
    line("c4", r.c4);
    for o in &r.omissions {
        println!("omitted          {o}");
    }
    println!(
        "flags            ball_inside={} cond3={} potentials_converged={} solve_converged={}",
        r.flags.ball_inside,
        r.flags.condition_valid,
        r.flags.potentials_converged,
        r.flags.solve_converged
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_header_matches_interface() {
        assert!(SWEEP_HEADER.starts_with("point_x,point_y_or_r,rho,case"));
        assert!(SWEEP_HEADER.ends_with("flags"));
        assert_eq!(SWEEP_HEADER.split(',').count(), 15);
    }
}
