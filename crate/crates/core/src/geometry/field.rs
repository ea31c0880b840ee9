//! Nodal scalar fields with interpolation and ball-local queries.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::grid::{unit_ball_volume, Grid, GridKind, Location};

/// One value per grid node. Values at excluded nodes are carried but ignored.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![value; grid.node_count()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid(format!(
                "value count {} != node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite field value".to_string()));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    /// Evaluates `f` at every node coordinate (radial grids pass `[r, 0]`).
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64; 2]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.node_count()).map(|i| f(&grid.coords(i))).collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn min_active(&self) -> f64 {
        self.grid
            .active_nodes()
            .map(|i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_active(&self) -> f64 {
        self.grid
            .active_nodes()
            .map(|i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear (cartesian) or linear (radial) interpolation at a point.
    pub fn eval(&self, loc: &Location) -> Result<f64> {
        let (ci, cj, xi, eta) = self.grid.locate(loc)?;
        let nodes = self.grid.cell_nodes(ci, cj);
        match self.grid.kind() {
            GridKind::Cartesian2d => {
                let v = [
                    self.values[nodes[0]],
                    self.values[nodes[1]],
                    self.values[nodes[2]],
                    self.values[nodes[3]],
                ];
                Ok(v[0] * (1.0 - xi) * (1.0 - eta)
                    + v[1] * xi * (1.0 - eta)
                    + v[2] * xi * eta
                    + v[3] * (1.0 - xi) * eta)
            }
            GridKind::Radial => {
                Ok(self.values[nodes[0]] * (1.0 - xi) + self.values[nodes[1]] * xi)
            }
        }
    }

    /// Midpoint quadrature of the field over `B_rho(x0)`, with the field
    /// extended by zero outside the domain.
    ///
    /// Cartesian grids sum `h^2 * value` over active cells whose centers lie in
    /// the ball. Radial grids weight each 1D cell by the n-volume of its
    /// spherical shell; for off-center balls the shell volume is scaled by the
    /// fraction of the sphere through the cell midpoint that falls inside the
    /// ball, which reduces to the center-in-ball rule when `x0` is the origin.
    pub fn ball_integral(&self, x0: &Location, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::invalid(format!("non-positive ball radius {rho}")));
        }
        let g = &self.grid;
        let h = g.spacing();
        match (g.kind(), x0) {
            (GridKind::Cartesian2d, Location::Xy([px, py])) => {
                let (cx, cy) = g.cell_shape();
                let o = g.origin();
                // Cell centers sit at origin + (i + 1/2, j + 1/2) h; restrict the
                // scan to the ball's bounding box.
                let lo_i = (((px - rho - o[0]) / h - 0.5).floor().max(0.0)) as usize;
                let hi_i = ((((px + rho - o[0]) / h - 0.5).ceil()).max(0.0) as usize).min(cx.saturating_sub(1));
                let lo_j = (((py - rho - o[1]) / h - 0.5).floor().max(0.0)) as usize;
                let hi_j = ((((py + rho - o[1]) / h - 0.5).ceil()).max(0.0) as usize).min(cy.saturating_sub(1));
                let rho2 = rho * rho;
                let mut sum = 0.0;
                for cj in lo_j..=hi_j.min(cy.saturating_sub(1)) {
                    for ci in lo_i..=hi_i {
                        if !g.cell_active(ci, cj) {
                            continue;
                        }
                        let mx = o[0] + (ci as f64 + 0.5) * h;
                        let my = o[1] + (cj as f64 + 0.5) * h;
                        let dx = mx - px;
                        let dy = my - py;
                        if dx * dx + dy * dy <= rho2 {
                            let n = g.cell_nodes(ci, cj);
                            let center = 0.25
                                * (self.values[n[0]]
                                    + self.values[n[1]]
                                    + self.values[n[2]]
                                    + self.values[n[3]]);
                            sum += center * h * h;
                        }
                    }
                }
                Ok(sum)
            }
            (GridKind::Radial, Location::Radius(d)) => {
                let n = g.dim();
                let omega = unit_ball_volume(n);
                let cells = g.cell_shape().0;
                let mut sum = 0.0;
                for ci in 0..cells {
                    let r0 = ci as f64 * h;
                    let r1 = r0 + h;
                    let rm = 0.5 * (r0 + r1);
                    let frac = sphere_in_ball_fraction(rm, *d, rho, n);
                    if frac <= 0.0 {
                        continue;
                    }
                    let shell = omega * (r1.powi(n as i32) - r0.powi(n as i32));
                    let mid = 0.5 * (self.values[ci] + self.values[ci + 1]);
                    sum += mid * shell * frac;
                }
                Ok(sum)
            }
            _ => Err(Error::invalid(
                "location kind does not match the grid kind".to_string(),
            )),
        }
    }

    /// Minimum nodal value over mask nodes within distance `rho` of `x0`.
    pub fn ball_min(&self, x0: &Location, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::invalid(format!("non-positive ball radius {rho}")));
        }
        let g = &self.grid;
        let mut best = f64::INFINITY;
        let mut found = false;
        match (g.kind(), x0) {
            (GridKind::Cartesian2d, Location::Xy([px, py])) => {
                let rho2 = rho * rho;
                for idx in g.active_nodes() {
                    let [x, y] = g.coords(idx);
                    let dx = x - px;
                    let dy = y - py;
                    if dx * dx + dy * dy <= rho2 {
                        found = true;
                        best = best.min(self.values[idx]);
                    }
                }
            }
            (GridKind::Radial, Location::Radius(d)) => {
                // A node at radius r stands for the whole sphere of that
                // radius; the sphere meets the ball iff |r - d| <= rho.
                for idx in g.active_nodes() {
                    let r = g.coords(idx)[0];
                    if (r - d).abs() <= rho {
                        found = true;
                        best = best.min(self.values[idx]);
                    }
                }
            }
            _ => {
                return Err(Error::invalid(
                    "location kind does not match the grid kind".to_string(),
                ))
            }
        }
        if !found {
            return Err(Error::EmptyBall(format!("no nodes within {rho} of {x0:?}")));
        }
        Ok(best)
    }

    /// Maximum nodal value within distance `rho` of `x0` (used for tail bounds);
    /// falls back to interpolation at `x0` when the ball holds no node.
    pub fn ball_sup(&self, x0: &Location, rho: f64) -> Result<f64> {
        let g = &self.grid;
        let mut best = f64::NEG_INFINITY;
        match (g.kind(), x0) {
            (GridKind::Cartesian2d, Location::Xy([px, py])) => {
                let rho2 = rho * rho;
                for idx in g.active_nodes() {
                    let [x, y] = g.coords(idx);
                    let dx = x - px;
                    let dy = y - py;
                    if dx * dx + dy * dy <= rho2 {
                        best = best.max(self.values[idx]);
                    }
                }
            }
            (GridKind::Radial, Location::Radius(d)) => {
                for idx in g.active_nodes() {
                    let r = g.coords(idx)[0];
                    if (r - d).abs() <= rho {
                        best = best.max(self.values[idx]);
                    }
                }
            }
            _ => {
                return Err(Error::invalid(
                    "location kind does not match the grid kind".to_string(),
                ))
            }
        }
        if best == f64::NEG_INFINITY {
            return self.eval(x0);
        }
        Ok(best)
    }
}

/// Fraction of the sphere of radius `r` (centered at the origin) that lies
/// inside the ball `B_rho(x0)` with `|x0| = d`, in dimension `n`.
pub fn sphere_in_ball_fraction(r: f64, d: f64, rho: f64, n: usize) -> f64 {
    if r <= 0.0 {
        return if d <= rho { 1.0 } else { 0.0 };
    }
    if d <= 1e-14 * (r + rho) {
        return if r <= rho { 1.0 } else { 0.0 };
    }
    if r + d <= rho {
        return 1.0;
    }
    if (d - r).abs() >= rho {
        return 0.0;
    }
    let cos_t = ((r * r + d * d - rho * rho) / (2.0 * r * d)).clamp(-1.0, 1.0);
    let theta = cos_t.acos();
    match n {
        2 => theta / std::f64::consts::PI,
        3 => 0.5 * (1.0 - cos_t),
        _ => {
            // Area fraction of the polar cap on S^{n-1}: int_0^theta sin^{n-2}
            // over int_0^pi sin^{n-2}, by composite Simpson quadrature.
            let f = |t: f64| t.sin().powi(n as i32 - 2);
            simpson(&f, 0.0, theta, 128) / simpson(&f, 0.0, std::f64::consts::PI, 256)
        }
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let m = panels.max(2) & !1;
    let h = (b - a) / m as f64;
    let mut sum = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::{build_grid, DomainSpec};
    use std::f64::consts::PI;

    fn unit_square(res: usize) -> Arc<Grid> {
        build_grid(DomainSpec::Square { extent: 1.0 }, res).unwrap()
    }

    #[test]
    fn eval_reproduces_constants_and_linears() {
        let g = unit_square(8);
        let c = ScalarField::constant(&g, 3.0);
        assert!((c.eval(&Location::xy(0.37, 0.81)).unwrap() - 3.0).abs() < 1e-14);

        let lin = ScalarField::from_fn(&g, |p| p[0]).unwrap();
        assert!((lin.eval(&Location::xy(0.25, 0.5)).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn eval_at_cell_center_averages_corners() {
        let g = unit_square(4);
        let f = ScalarField::from_fn(&g, |p| p[0] * p[1]).unwrap();
        // Center of the cell [0, 0.25]^2: bilinear value is the corner mean.
        let expect = (0.0 + 0.0 + 0.0 + 0.25 * 0.25) / 4.0;
        assert!((f.eval(&Location::xy(0.125, 0.125)).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_outside_points() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, 8).unwrap();
        let f = ScalarField::constant(&g, 1.0);
        assert!(f.eval(&Location::xy(1.5, 1.5)).is_err());
    }

    #[test]
    fn ball_integral_zero_field() {
        let g = unit_square(16);
        let f = ScalarField::constant(&g, 0.0);
        assert_eq!(f.ball_integral(&Location::xy(0.5, 0.5), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn ball_integral_constant_disk_area() {
        let g = build_grid(DomainSpec::Square { extent: 2.0 }, 128).unwrap();
        let f = ScalarField::constant(&g, 2.0);
        let got = f.ball_integral(&Location::xy(1.0, 1.0), 0.5).unwrap();
        let expect = PI / 2.0;
        assert!(
            (got - expect).abs() < 4.0 * g.spacing(),
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn ball_integral_radial_ball_volume() {
        let g = build_grid(
            DomainSpec::Radial {
                radius: 1.0,
                dim: 3,
            },
            512,
        )
        .unwrap();
        let f = ScalarField::constant(&g, 1.0);
        let got = f.ball_integral(&Location::radius(0.0), 0.5).unwrap();
        let expect = 4.0 / 3.0 * PI * 0.125;
        assert!(
            (got - expect).abs() < 5.0 * g.spacing(),
            "got {got}, expect {expect}"
        );
        // Independent check: shell-sum quadrature at a finer slicing.
        let mut shell_sum = 0.0;
        let m = 4096;
        let dr = 0.5 / m as f64;
        for k in 0..m {
            let rm = (k as f64 + 0.5) * dr;
            shell_sum += 4.0 * PI * rm * rm * dr;
        }
        assert!((got - shell_sum).abs() < 5.0 * g.spacing());
    }

    #[test]
    fn ball_integral_radial_offcenter_matches_2d() {
        // Radially symmetric f on n = 2: the cap-fraction path must agree with
        // plain 2D quadrature for an off-center ball.
        let g2 = build_grid(DomainSpec::Disk { radius: 1.0 }, 256).unwrap();
        let gr = build_grid(
            DomainSpec::Radial {
                radius: 1.0,
                dim: 2,
            },
            2048,
        )
        .unwrap();
        let f2 = ScalarField::from_fn(&g2, |p| 1.0 + p[0].hypot(p[1])).unwrap();
        let fr = ScalarField::from_fn(&gr, |p| 1.0 + p[0]).unwrap();
        let a = f2.ball_integral(&Location::xy(0.35, 0.0), 0.2).unwrap();
        let b = fr.ball_integral(&Location::radius(0.35), 0.2).unwrap();
        assert!((a - b).abs() < 0.01 * a.abs(), "2d {a} vs radial {b}");
    }

    #[test]
    fn ball_min_examples() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, 64).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[0] * p[0] + p[1] * p[1]).unwrap();
        let got = f.ball_min(&Location::xy(0.3, 0.0), 0.1).unwrap();
        assert!((got - 0.04).abs() < 2.5 * g.spacing());

        let c = ScalarField::constant(&g, 7.0);
        assert_eq!(c.ball_min(&Location::xy(0.0, 0.0), 0.2).unwrap(), 7.0);
    }

    #[test]
    fn ball_min_matches_brute_force_scan() {
        let g = unit_square(16);
        let f = ScalarField::from_fn(&g, |p| p[0]).unwrap();
        let (x0, rho) = (Location::xy(0.5, 0.5), 0.25);
        let got = f.ball_min(&x0, rho).unwrap();
        // Independent brute-force oracle over all nodes.
        let mut oracle = f64::INFINITY;
        for idx in g.active_nodes() {
            let [x, y] = g.coords(idx);
            if (x - 0.5).hypot(y - 0.5) <= rho {
                oracle = oracle.min(x);
            }
        }
        assert_eq!(got, oracle);
        assert!((got - 0.25).abs() <= g.spacing() + 1e-12);
    }

    #[test]
    fn ball_min_empty_ball_errors() {
        let g = build_grid(
            DomainSpec::Annulus {
                inner: 0.5,
                outer: 1.0,
            },
            16,
        )
        .unwrap();
        let f = ScalarField::constant(&g, 1.0);
        assert!(f.ball_min(&Location::xy(0.0, 0.0), 0.05).is_err());
    }

    #[test]
    fn cap_fraction_limits() {
        assert_eq!(sphere_in_ball_fraction(0.3, 0.0, 0.5, 3), 1.0);
        assert_eq!(sphere_in_ball_fraction(0.7, 0.0, 0.5, 3), 0.0);
        assert_eq!(sphere_in_ball_fraction(0.1, 0.2, 0.5, 3), 1.0);
        assert_eq!(sphere_in_ball_fraction(0.9, 0.2, 0.5, 3), 0.0);
        // Half-space limit: sphere through the ball center with rho = r gives
        // cos(theta*) = d/(2r) -> for d = r: theta* = pi/3, frac(n=3) = 1/4.
        let f = sphere_in_ball_fraction(0.4, 0.4, 0.4, 3);
        assert!((f - 0.25).abs() < 1e-12);
        // Simpson path agrees with the closed forms.
        for n in [2usize, 3] {
            let closed = sphere_in_ball_fraction(0.5, 0.3, 0.4, n);
            let f = |t: f64| t.sin().powi(n as i32 - 2);
            let cos_t: f64 = (0.5f64 * 0.5 + 0.3 * 0.3 - 0.4 * 0.4) / (2.0 * 0.5 * 0.3);
            let theta = cos_t.clamp(-1.0, 1.0).acos();
            let quad = simpson(&f, 0.0, theta, 512) / simpson(&f, 0.0, std::f64::consts::PI, 512);
            assert!((closed - quad).abs() < 1e-8);
        }
    }
}
