//! Weak solutions of the double-phase equation by energy minimization.
//!
//! The discrete energy
//! `J(u) = int [ s^{p(x)}/p(x) + a(x) s^{q(x)}/q(x) ] dx - int f u dx`,
//! `s = sqrt(|grad u|^2 + eps^2)`, is minimized over interior nodal values
//! with fixed Dirichlet data. The Euler-Lagrange flux is
//! `(s^{p(x)-2} + a(x) s^{q(x)-2}) grad u`, so stationarity of the discrete
//! energy is the discrete weak form of the equation.

mod assembly;
mod descent;
mod oracle;

pub use oracle::{analytic_radial_plaplace, RadialSolution};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    build_grid, build_layered_fields, DomainSpec, Grid, GridKind, LayerStack, Location,
    MaterialFields, ScalarField,
};
use assembly::{assemble, Problem};
use descent::{minimize, DescentSettings};

/// Optimizer controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveParams {
    /// Gradient-magnitude smoothing; `None` picks
    /// `max(1e-6 * sup|boundary| / extent, 1e-8)`.
    pub epsilon: Option<f64>,
    /// Convergence tolerance, relative to the initial gradient sup-norm
    /// (absolute floor 1e-12).
    pub tol: f64,
    /// Iteration cap per descent run.
    pub max_iterations: usize,
    pub armijo_slope: f64,
    pub backtrack_ratio: f64,
    /// Number of extra smoothing stages; stage k runs at `eps * 100^k`.
    pub continuation_steps: usize,
    /// Warm-start from coarsened grids when the resolution allows it.
    pub multilevel: bool,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            epsilon: None,
            tol: 1e-5,
            max_iterations: 20_000,
            armijo_slope: 1e-4,
            backtrack_ratio: 0.5,
            continuation_steps: 2,
            multilevel: true,
        }
    }
}

impl SolveParams {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol = {} must be positive", self.tol)));
        }
        if !(self.backtrack_ratio > 0.0 && self.backtrack_ratio < 1.0) {
            return Err(Error::invalid(format!(
                "backtrack ratio {} not in (0, 1)",
                self.backtrack_ratio
            )));
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return Err(Error::invalid(format!(
                "Armijo slope factor {} not in (0, 1)",
                self.armijo_slope
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be >= 1".to_string()));
        }
        if let Some(e) = self.epsilon {
            if e < 0.0 {
                return Err(Error::invalid(format!("epsilon = {e} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// A computed minimizer with its convergence diagnostics.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: ScalarField,
    pub energy: f64,
    /// Accepted-step energies of the final descent run (strictly decreasing).
    pub energy_history: Vec<f64>,
    /// Final gradient sup-norm; convergence compares it against `tol` times
    /// its value at the canonical flat start of the level.
    pub grad_sup: f64,
    pub weak_residual: f64,
    /// Accepted steps, summed over continuation stages and grid levels.
    pub iterations: usize,
    pub converged: bool,
    /// `min u >= -10 tol * scale(u)` held after the solve.
    pub nonnegative: bool,
    /// Effective smoothing parameter of the final stage.
    pub epsilon: f64,
}

fn check_same_grid(fields: &MaterialFields, others: &[&ScalarField]) -> Result<()> {
    let g = fields.grid();
    for f in [&fields.p, &fields.q, &fields.a] {
        if !f.grid().same_lattice(g) {
            return Err(Error::GridMismatch("material fields on different grids".into()));
        }
    }
    for f in others {
        if !f.grid().same_lattice(g) {
            return Err(Error::GridMismatch("field on a different grid".into()));
        }
    }
    Ok(())
}

fn check_exponents(fields: &MaterialFields) -> Result<()> {
    if fields.p.min_active() <= 1.0 || fields.q.min_active() <= 1.0 {
        return Err(Error::invalid(
            "exponent fields must exceed 1 everywhere".to_string(),
        ));
    }
    Ok(())
}

/// Discrete double-phase energy of `u`.
pub fn energy(u: &ScalarField, fields: &MaterialFields, f: &ScalarField, eps: f64) -> Result<f64> {
    check_same_grid(fields, &[u, f])?;
    check_exponents(fields)?;
    let prob = Problem {
        grid: u.grid(),
        p: fields.p.values(),
        q: fields.q.values(),
        a: fields.a.values(),
        f: f.values(),
        eps,
    };
    Ok(assemble(&prob, u.values(), None, None))
}

/// Partial derivatives of the discrete energy with respect to interior nodal
/// values; boundary and excluded nodes carry zero.
pub fn energy_gradient(
    u: &ScalarField,
    fields: &MaterialFields,
    f: &ScalarField,
    eps: f64,
) -> Result<ScalarField> {
    check_same_grid(fields, &[u, f])?;
    check_exponents(fields)?;
    let n = u.grid().node_count();
    let mut g = vec![0.0; n];
    let mut d = vec![0.0; n];
    let prob = Problem {
        grid: u.grid(),
        p: fields.p.values(),
        q: fields.q.values(),
        a: fields.a.values(),
        f: f.values(),
        eps,
    };
    assemble(&prob, u.values(), Some((&mut g, &mut d)), None);
    for idx in 0..n {
        if !u.grid().is_interior(idx) {
            g[idx] = 0.0;
        }
    }
    ScalarField::from_values(u.grid(), g)
}

fn auto_epsilon(bnd: &ScalarField, grid: &Grid) -> f64 {
    let sup_bnd = bnd
        .grid()
        .active_nodes()
        .filter(|&i| bnd.grid().is_boundary(i))
        .map(|i| bnd.values()[i].abs())
        .fold(0.0f64, f64::max);
    (1e-6 * sup_bnd / grid.domain().extent()).max(1e-8)
}

/// Coarse-to-fine grid chain (the input grid last).
fn level_chain(grid: &Arc<Grid>) -> Vec<Arc<Grid>> {
    let mut chain = vec![grid.clone()];
    let mut res = grid.resolution();
    while chain.len() < 4 && res % 2 == 0 && res / 2 >= 16 {
        res /= 2;
        if let Ok(g) = build_grid(grid.domain(), res) {
            chain.push(g);
        } else {
            break;
        }
    }
    chain.reverse();
    chain
}

/// Injects fine-lattice nodal values onto a coarser level of the chain
/// (coarse node (i, j) coincides with fine node (k i, k j)).
fn restrict(values: &[f64], fine: &Grid, coarse: &Grid) -> Vec<f64> {
    let k = fine.resolution() / coarse.resolution();
    let (cnx, _) = coarse.lattice_shape();
    let (fnx, _) = fine.lattice_shape();
    (0..coarse.node_count())
        .map(|idx| {
            let i = idx % cnx;
            let j = idx / cnx;
            values[(j * k) * fnx + i * k]
        })
        .collect()
}

/// Interpolates a coarse iterate onto the next finer grid (factor 2); fine
/// nodes with no active coarse neighbors fall back to the boundary data.
fn prolong(u_c: &[f64], coarse: &Grid, fine: &Grid, bnd_f: &[f64]) -> Vec<f64> {
    let (cnx, cny) = coarse.lattice_shape();
    let (fnx, _) = fine.lattice_shape();
    let pick = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i >= cnx as isize || j >= cny as isize {
            return None;
        }
        let idx = j as usize * cnx + i as usize;
        coarse.is_active(idx).then(|| u_c[idx])
    };
    let mut out = vec![0.0; fine.node_count()];
    for idx in 0..fine.node_count() {
        if !fine.is_active(idx) {
            continue;
        }
        if fine.is_boundary(idx) {
            out[idx] = bnd_f[idx];
            continue;
        }
        let i = (idx % fnx) as isize;
        let j = (idx / fnx) as isize;
        let (ci, cj) = (i / 2, j / 2);
        let candidates: Vec<f64> = if i % 2 == 0 && j % 2 == 0 {
            pick(ci, cj).into_iter().collect()
        } else if j % 2 == 0 {
            [pick(ci, cj), pick(ci + 1, cj)].into_iter().flatten().collect()
        } else if i % 2 == 0 {
            [pick(ci, cj), pick(ci, cj + 1)].into_iter().flatten().collect()
        } else {
            [
                pick(ci, cj),
                pick(ci + 1, cj),
                pick(ci, cj + 1),
                pick(ci + 1, cj + 1),
            ]
            .into_iter()
            .flatten()
            .collect()
        };
        out[idx] = if candidates.is_empty() {
            bnd_f[idx]
        } else {
            candidates.iter().sum::<f64>() / candidates.len() as f64
        };
    }
    out
}

/// Near-stationary starting iterate for radially symmetric problems.
///
/// The flux balance `r^{n-1} A(u'(r)) = -int_0^r f t^{n-1} dt` with
/// `A(v) = (s^{p-2} + a s^{q-2}) v`, `s = sqrt(v^2 + eps^2)`, pins `u'` at
/// every cell midpoint through a scalar monotone equation (bisection); `u`
/// follows by integrating inward from the Dirichlet value at `r = R`. The
/// descent loop still certifies stationarity of the discrete energy.
fn radial_flux_init(
    grid: &Grid,
    p: &[f64],
    q: &[f64],
    a: &[f64],
    f: &[f64],
    eps: f64,
    bnd: &[f64],
) -> Vec<f64> {
    let h = grid.spacing();
    let n = grid.dim() as i32;
    let nodes = grid.node_count();
    let cells = nodes - 1;
    let mid = |v: &[f64], i: usize| 0.5 * (v[i] + v[i + 1]);

    let flux = |v: f64, pg: f64, qg: f64, ag: f64| -> f64 {
        let s2 = v * v + eps * eps;
        let mut out = s2.powf(0.5 * (pg - 2.0)) * v;
        if ag > 0.0 {
            out += ag * s2.powf(0.5 * (qg - 2.0)) * v;
        }
        out
    };

    // Cumulative load F(r) = int_0^r f t^{n-1} dt at cell edges and midpoints.
    let mut du = vec![0.0; cells];
    let mut f_edge = 0.0;
    for i in 0..cells {
        let r0 = i as f64 * h;
        let rm = r0 + 0.5 * h;
        let rq = r0 + 0.25 * h;
        let f_quarter = 0.75 * f[i] + 0.25 * f[i + 1];
        let f_mid = f_edge + f_quarter * rq.powi(n - 1) * (0.5 * h);
        f_edge += mid(f, i) * rm.powi(n - 1) * h;

        let g = if rm > 0.0 { f_mid / rm.powi(n - 1) } else { 0.0 };
        let target = -g;
        let (pg, qg, ag) = (mid(p, i), mid(q, i), mid(a, i));
        if target == 0.0 {
            du[i] = 0.0;
            continue;
        }
        // phi is strictly increasing and odd; bracket then bisect.
        let mut hi = 0.0f64; // phi(0) = 0 >= target
        let mut lo = -1.0f64;
        let mut guard = 0;
        while flux(lo, pg, qg, ag) > target && guard < 200 {
            lo *= 2.0;
            guard += 1;
        }
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if flux(m, pg, qg, ag) > target {
                hi = m;
            } else {
                lo = m;
            }
        }
        du[i] = 0.5 * (lo + hi);
    }

    let mut u = vec![0.0; nodes];
    u[nodes - 1] = bnd[nodes - 1];
    for i in (0..cells).rev() {
        u[i] = u[i + 1] - h * du[i];
    }
    u
}

fn flat_init(grid: &Grid, bnd: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for idx in grid.active_nodes() {
        if grid.is_boundary(idx) {
            sum += bnd[idx];
            count += 1;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 0.0 };
    (0..grid.node_count())
        .map(|idx| if grid.is_boundary(idx) { bnd[idx] } else { mean })
        .collect()
}

/// Minimizes the double-phase energy with Dirichlet data `boundary_value`.
///
/// Nonnegative `f` and boundary data keep the minimizer nonnegative; the
/// result records whether that held numerically. Non-convergence within the
/// iteration budget is reported through `converged`, not as an error.
pub fn solve_dirichlet(
    fields: &MaterialFields,
    f: &ScalarField,
    boundary_value: &ScalarField,
    params: &SolveParams,
) -> Result<SolveResult> {
    params.validate()?;
    check_same_grid(fields, &[f, boundary_value])?;
    check_exponents(fields)?;
    if f.min_active() < 0.0 {
        return Err(Error::invalid("negative right-hand side f".to_string()));
    }
    let bnd_min = boundary_value
        .grid()
        .active_nodes()
        .filter(|&i| boundary_value.grid().is_boundary(i))
        .map(|i| boundary_value.values()[i])
        .fold(f64::INFINITY, f64::min);
    if bnd_min < 0.0 {
        return Err(Error::invalid("negative boundary data".to_string()));
    }
    run_solve(fields, f, boundary_value, params)
}

fn run_solve(
    fields: &MaterialFields,
    f: &ScalarField,
    bnd: &ScalarField,
    params: &SolveParams,
) -> Result<SolveResult> {
    let grid = fields.grid().clone();
    let eps_final = params.epsilon.unwrap_or_else(|| auto_epsilon(bnd, &grid));
    let settings = |scale: f64| DescentSettings {
        tol: params.tol,
        max_iter: params.max_iterations,
        armijo_slope: params.armijo_slope,
        backtrack_ratio: params.backtrack_ratio,
        grad_scale: Some(scale),
    };
    // Convergence is judged relative to the gradient at the canonical flat
    // start of each level, not at warm starts.
    let flat_scale = |prob: &Problem, flat: &[f64]| -> f64 {
        let n = prob.grid.node_count();
        let mut g = vec![0.0; n];
        let mut d = vec![0.0; n];
        assemble(prob, flat, Some((&mut g, &mut d)), None);
        g.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    };

    // Radial problems start from the flux-balance iterate instead of a grid
    // hierarchy; 2D problems warm-start through coarsened grids.
    let chain = if params.multilevel && grid.kind() != GridKind::Radial {
        level_chain(&grid)
    } else {
        vec![grid.clone()]
    };
    let levels = chain.len();

    let mut total_iterations = 0usize;
    let mut outcome = None;
    if levels > 1 {
        let mut u_prev: Option<(Vec<f64>, Arc<Grid>)> = None;
        for (l, gl) in chain.iter().enumerate() {
            let pl = restrict(fields.p.values(), &grid, gl);
            let ql = restrict(fields.q.values(), &grid, gl);
            let al = restrict(fields.a.values(), &grid, gl);
            let fl = restrict(f.values(), &grid, gl);
            let bl = restrict(bnd.values(), &grid, gl);
            let stage = (levels - 1 - l).min(params.continuation_steps) as i32;
            let eps_l = eps_final * 100f64.powi(stage);
            let flat = flat_init(gl, &bl);
            let init = match &u_prev {
                None => flat.clone(),
                Some((u_c, gc)) => prolong(u_c, gc, gl, &bl),
            };
            let prob = Problem {
                grid: gl,
                p: &pl,
                q: &ql,
                a: &al,
                f: &fl,
                eps: eps_l,
            };
            let out = minimize(&prob, init, &settings(flat_scale(&prob, &flat)));
            total_iterations += out.iterations;
            u_prev = Some((out.u.clone(), gl.clone()));
            outcome = Some(out);
        }
    } else {
        // Single level: run the smoothing ladder eps * 100^k down to eps.
        let flat = flat_init(&grid, bnd.values());
        let mut init: Option<Vec<f64>> = None;
        for stage in (0..=params.continuation_steps).rev() {
            let eps_l = eps_final * 100f64.powi(stage as i32);
            let start = init.take().unwrap_or_else(|| match grid.kind() {
                GridKind::Radial => radial_flux_init(
                    &grid,
                    fields.p.values(),
                    fields.q.values(),
                    fields.a.values(),
                    f.values(),
                    eps_l,
                    bnd.values(),
                ),
                GridKind::Cartesian2d => flat.clone(),
            });
            let prob = Problem {
                grid: &grid,
                p: fields.p.values(),
                q: fields.q.values(),
                a: fields.a.values(),
                f: f.values(),
                eps: eps_l,
            };
            let out = minimize(&prob, start, &settings(flat_scale(&prob, &flat)));
            total_iterations += out.iterations;
            init = Some(out.u.clone());
            outcome = Some(out);
        }
    }

    let out = outcome.expect("at least one descent run");
    let u = ScalarField::from_values(&grid, out.u)?;
    let residual = weak_residual(&u, fields, f, eps_final, None)?;

    let sup_u = u
        .grid()
        .active_nodes()
        .map(|i| u.values()[i].abs())
        .fold(0.0f64, f64::max);
    let min_u = u.min_active();
    let nonnegative = min_u >= -10.0 * params.tol * sup_u.max(1e-12);

    Ok(SolveResult {
        u,
        energy: out.energy,
        energy_history: out.history,
        grad_sup: out.grad_sup,
        weak_residual: residual,
        iterations: total_iterations,
        converged: out.converged,
        nonnegative,
        epsilon: eps_final,
    })
}

/// Radially symmetric solve on `[0, R]` with the shell measure `r^{n-1} dr`,
/// natural condition at `r = 0` and Dirichlet data at `r = R`.
pub fn solve_radial(
    stack: &LayerStack,
    f_radial: impl Fn(f64) -> f64,
    n: usize,
    resolution: usize,
    boundary_value: f64,
    params: &SolveParams,
) -> Result<SolveResult> {
    let grid = build_grid(
        DomainSpec::Radial {
            radius: stack.outer_radius(),
            dim: n,
        },
        resolution,
    )?;
    let fields = build_layered_fields(stack, &grid)?;
    let f = ScalarField::from_fn(&grid, |c| f_radial(c[0]))?;
    let bnd = ScalarField::constant(&grid, boundary_value);
    solve_dirichlet(&fields, &f, &bnd, params)
}

/// Stationarity defect of `u` against a canonical test set: the normalized
/// worst value of `|int A_eps(grad u) . grad phi - int f phi|` over tent
/// functions at every 4th interior node plus three interpolated smooth bumps.
///
/// Test functions vanish on the Dirichlet boundary, so each defect is an exact
/// linear combination of interior energy-gradient entries.
pub fn weak_residual(
    u: &ScalarField,
    fields: &MaterialFields,
    f: &ScalarField,
    eps: f64,
    test_functions: Option<&[ScalarField]>,
) -> Result<f64> {
    check_same_grid(fields, &[u, f])?;
    let grid = u.grid();
    let nn = grid.node_count();
    let mut ga = vec![0.0; nn];
    let mut gl = vec![0.0; nn];
    let prob = Problem {
        grid,
        p: fields.p.values(),
        q: fields.q.values(),
        a: fields.a.values(),
        f: f.values(),
        eps,
    };
    assemble(&prob, u.values(), None, Some((&mut ga, &mut gl)));

    let score = |phi: &dyn Fn(usize) -> f64| -> f64 {
        let mut flux = 0.0;
        let mut load = 0.0;
        for idx in 0..nn {
            if grid.is_interior(idx) {
                let w = phi(idx);
                flux += w * ga[idx];
                load += w * gl[idx];
            }
        }
        (flux - load).abs() / (1.0 + flux.abs() + load.abs())
    };

    let mut worst = 0.0f64;
    if let Some(tests) = test_functions {
        for t in tests {
            if !t.grid().same_lattice(grid) {
                return Err(Error::GridMismatch("test function on a different grid".into()));
            }
            let vals = t.values();
            worst = worst.max(score(&|i| vals[i]));
        }
        return Ok(worst);
    }

    // Tents at every 4th interior node.
    let interior: Vec<usize> = (0..nn).filter(|&i| grid.is_interior(i)).collect();
    for (k, &idx) in interior.iter().enumerate() {
        if k % 4 != 0 {
            continue;
        }
        worst = worst.max(score(&|i| if i == idx { 1.0 } else { 0.0 }));
    }

    // Three interpolated smooth bumps spread over the domain.
    let extent = grid.domain().extent();
    let centers: Vec<[f64; 2]> = match grid.kind() {
        GridKind::Cartesian2d => {
            let c = match grid.center() {
                Location::Xy(c) => c,
                Location::Radius(_) => unreachable!(),
            };
            vec![
                c,
                [c[0] + 0.2 * extent, c[1] + 0.1 * extent],
                [c[0] - 0.15 * extent, c[1] - 0.2 * extent],
            ]
        }
        GridKind::Radial => vec![
            [0.0, 0.0],
            [extent / 3.0, 0.0],
            [2.0 * extent / 3.0, 0.0],
        ],
    };
    let width = extent / 5.0;
    for c in centers {
        worst = worst.max(score(&|i| {
            let [x, y] = grid.coords(i);
            let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
            (-d2 / (width * width)).exp()
        }));
    }
    Ok(worst)
}
