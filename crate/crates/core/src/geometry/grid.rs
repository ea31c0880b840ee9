//! Grids over square, disk, annulus, and radially symmetric ball domains.
//!
//! Cartesian grids are node lattices over the bounding box of the domain; a
//! mask selects the nodes inside the domain and a cell is active when all four
//! of its corners are masked. Radial grids discretize `[0, R]` and carry the
//! dimension `n` of the measure `r^{n-1} dr`.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance used when testing mask predicates and point containment.
const GEOM_TOL: f64 = 1e-9;

/// Geometry of the computational domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Axis-aligned square `[0, extent]^2`.
    Square { extent: f64 },
    /// Disk of the given radius centered at the origin.
    Disk { radius: f64 },
    /// Annulus `inner <= |x| <= outer` centered at the origin.
    Annulus { inner: f64, outer: f64 },
    /// Radially symmetric ball of dimension `dim`, reduced to the segment `[0, radius]`.
    Radial { radius: f64, dim: usize },
}

impl DomainSpec {
    /// Half-width of the bounding box (cartesian) or outer radius (radial).
    pub fn extent(&self) -> f64 {
        match *self {
            DomainSpec::Square { extent } => extent,
            DomainSpec::Disk { radius } => radius,
            DomainSpec::Annulus { outer, .. } => outer,
            DomainSpec::Radial { radius, .. } => radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Cartesian2d,
    Radial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    Excluded,
    Interior,
    Boundary,
}

/// A point in the domain: planar coordinates on cartesian grids, a radius on
/// radial grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Xy([f64; 2]),
    Radius(f64),
}

impl Location {
    pub fn xy(x: f64, y: f64) -> Self {
        Location::Xy([x, y])
    }

    pub fn radius(r: f64) -> Self {
        Location::Radius(r)
    }

    /// Distance from the domain center (the origin for disk/annulus/radial,
    /// the square center must be handled by the caller).
    pub fn radial_distance(&self) -> f64 {
        match self {
            Location::Xy([x, y]) => x.hypot(*y),
            Location::Radius(r) => *r,
        }
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // omega_n = omega_{n-2} * 2 pi / n, omega_0 = 1, omega_1 = 2.
    let mut vol = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        vol *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    vol
}

/// Surface area of the unit sphere in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[derive(Clone, Debug)]
pub struct Grid {
    kind: GridKind,
    domain: DomainSpec,
    resolution: usize,
    h: f64,
    dim: usize,
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    states: Vec<NodeState>,
    cells: Vec<bool>,
}

/// Builds the grid for a domain at the given resolution.
///
/// `resolution` counts cells across the characteristic extent, so the spacing
/// is `extent / resolution`. Disk and annulus masks select nodes by radius;
/// cells are active when all four corners are masked, and a masked node is a
/// boundary node when some incident cell is missing or inactive.
pub fn build_grid(domain: DomainSpec, resolution: usize) -> Result<Arc<Grid>> {
    if resolution < 4 {
        return Err(Error::invalid(format!(
            "resolution {resolution} too small (need >= 4)"
        )));
    }
    match domain {
        DomainSpec::Square { extent } | DomainSpec::Disk { radius: extent } => {
            if !(extent > 0.0) || !extent.is_finite() {
                return Err(Error::invalid(format!("degenerate extent {extent}")));
            }
        }
        DomainSpec::Annulus { inner, outer } => {
            if !(outer > 0.0) || !outer.is_finite() || inner < 0.0 || inner >= outer {
                return Err(Error::invalid(format!(
                    "degenerate annulus radii {inner}..{outer}"
                )));
            }
        }
        DomainSpec::Radial { radius, dim } => {
            if !(radius > 0.0) || !radius.is_finite() {
                return Err(Error::invalid(format!("degenerate extent {radius}")));
            }
            if dim < 2 {
                return Err(Error::invalid(format!("radial dimension {dim} (need >= 2)")));
            }
        }
    }

    let grid = match domain {
        DomainSpec::Radial { radius, dim } => {
            let h = radius / resolution as f64;
            let nx = resolution + 1;
            let mut states = vec![NodeState::Interior; nx];
            states[nx - 1] = NodeState::Boundary; // Dirichlet at r = R; r = 0 is natural.
            Grid {
                kind: GridKind::Radial,
                domain,
                resolution,
                h,
                dim,
                nx,
                ny: 1,
                origin: [0.0, 0.0],
                states,
                cells: vec![true; resolution],
            }
        }
        _ => build_cartesian(domain, resolution),
    };
    Ok(Arc::new(grid))
}

fn build_cartesian(domain: DomainSpec, resolution: usize) -> Grid {
    let (extent, origin, nodes_per_side) = match domain {
        DomainSpec::Square { extent } => (extent, [0.0, 0.0], resolution + 1),
        DomainSpec::Disk { radius } | DomainSpec::Annulus { outer: radius, .. } => {
            (radius, [-radius, -radius], 2 * resolution + 1)
        }
        DomainSpec::Radial { .. } => unreachable!(),
    };
    let h = extent / resolution as f64;
    let nx = nodes_per_side;
    let ny = nodes_per_side;
    let tol = GEOM_TOL * extent;

    let masked = |i: usize, j: usize| -> bool {
        let x = origin[0] + i as f64 * h;
        let y = origin[1] + j as f64 * h;
        match domain {
            DomainSpec::Square { .. } => true,
            DomainSpec::Disk { radius } => x.hypot(y) <= radius + tol,
            DomainSpec::Annulus { inner, outer } => {
                let r = x.hypot(y);
                r >= inner - tol && r <= outer + tol
            }
            DomainSpec::Radial { .. } => unreachable!(),
        }
    };

    let cx = nx - 1;
    let cy = ny - 1;
    let mut cells = vec![false; cx * cy];
    for cj in 0..cy {
        for ci in 0..cx {
            cells[cj * cx + ci] = masked(ci, cj)
                && masked(ci + 1, cj)
                && masked(ci, cj + 1)
                && masked(ci + 1, cj + 1);
        }
    }

    let cell_active = |ci: isize, cj: isize| -> bool {
        if ci < 0 || cj < 0 || ci >= cx as isize || cj >= cy as isize {
            return false;
        }
        cells[cj as usize * cx + ci as usize]
    };

    let mut states = vec![NodeState::Excluded; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let incident = [
                cell_active(i as isize - 1, j as isize - 1),
                cell_active(i as isize, j as isize - 1),
                cell_active(i as isize - 1, j as isize),
                cell_active(i as isize, j as isize),
            ];
            let touched = incident.iter().any(|&c| c);
            states[j * nx + i] = if !touched {
                NodeState::Excluded
            } else if incident.iter().all(|&c| c) {
                NodeState::Interior
            } else {
                NodeState::Boundary
            };
        }
    }

    Grid {
        kind: GridKind::Cartesian2d,
        domain,
        resolution,
        h,
        dim: 2,
        nx,
        ny,
        origin,
        states,
        cells,
    }
}

impl Grid {
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Dimension `n` of the ambient space (2 for cartesian grids).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total lattice node count, including excluded nodes.
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn lattice_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn state(&self, idx: usize) -> NodeState {
        self.states[idx]
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.states[idx] != NodeState::Excluded
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.states[idx] == NodeState::Interior
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.states[idx] == NodeState::Boundary
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Physical coordinates of a lattice node. Radial grids report `[r, 0]`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let i = idx % self.nx;
        let j = idx / self.nx;
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    pub fn active_node_count(&self) -> usize {
        self.states
            .iter()
            .filter(|s| **s != NodeState::Excluded)
            .count()
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| self.is_active(i))
    }

    /// Cell counts per axis (`(nx-1, ny-1)`; radial grids have `(nx-1, 1)`).
    pub fn cell_shape(&self) -> (usize, usize) {
        match self.kind {
            GridKind::Cartesian2d => (self.nx - 1, self.ny - 1),
            GridKind::Radial => (self.nx - 1, 1),
        }
    }

    pub fn cell_active(&self, ci: usize, cj: usize) -> bool {
        let (cx, _) = self.cell_shape();
        self.cells[cj * cx + ci]
    }

    /// Node indices of a cell's corners, counterclockwise from the lower-left.
    /// Radial cells return the two end nodes in the first two slots.
    pub fn cell_nodes(&self, ci: usize, cj: usize) -> [usize; 4] {
        match self.kind {
            GridKind::Cartesian2d => [
                self.node_index(ci, cj),
                self.node_index(ci + 1, cj),
                self.node_index(ci + 1, cj + 1),
                self.node_index(ci, cj + 1),
            ],
            GridKind::Radial => [ci, ci + 1, ci + 1, ci],
        }
    }

    /// True when the two grids share the same lattice (fields can be mixed).
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.kind == other.kind
            && self.nx == other.nx
            && self.ny == other.ny
            && self.h == other.h
            && self.origin == other.origin
            && self.dim == other.dim
    }

    /// Center of the domain as a query location.
    pub fn center(&self) -> Location {
        match self.domain {
            DomainSpec::Square { extent } => Location::xy(extent / 2.0, extent / 2.0),
            DomainSpec::Disk { .. } | DomainSpec::Annulus { .. } => Location::xy(0.0, 0.0),
            DomainSpec::Radial { .. } => Location::radius(0.0),
        }
    }

    /// Distance from a point to the boundary of the *ideal* domain (not the
    /// staircase approximation). Negative when the point lies outside.
    pub fn boundary_distance(&self, loc: &Location) -> Result<f64> {
        match (self.domain, loc) {
            (DomainSpec::Square { extent }, Location::Xy([x, y])) => {
                Ok(x.min(*y).min(extent - x).min(extent - y))
            }
            (DomainSpec::Disk { radius }, Location::Xy(p)) => Ok(radius - p[0].hypot(p[1])),
            (DomainSpec::Annulus { inner, outer }, Location::Xy(p)) => {
                let r = p[0].hypot(p[1]);
                Ok((r - inner).min(outer - r))
            }
            (DomainSpec::Radial { radius, .. }, Location::Radius(r)) => Ok(radius - r),
            _ => Err(Error::invalid(
                "location kind does not match the grid kind".to_string(),
            )),
        }
    }

    /// The cell containing a point together with local `[0,1]^2` coordinates.
    /// Points on shared edges resolve to whichever adjacent cell is active.
    pub fn locate(&self, loc: &Location) -> Result<(usize, usize, f64, f64)> {
        match (self.kind, loc) {
            (GridKind::Cartesian2d, Location::Xy([x, y])) => {
                let gx = (x - self.origin[0]) / self.h;
                let gy = (y - self.origin[1]) / self.h;
                let (cx, cy) = self.cell_shape();
                let tol = GEOM_TOL;
                if gx < -tol || gy < -tol || gx > cx as f64 + tol || gy > cy as f64 + tol {
                    return Err(Error::OutOfDomain(format!("({x}, {y})")));
                }
                let base_i = (gx.floor() as isize).clamp(0, cx as isize - 1);
                let base_j = (gy.floor() as isize).clamp(0, cy as isize - 1);
                // The point may sit on a cell edge; try every cell whose closed
                // square contains it and take the first active one.
                for dj in [0isize, -1, 1] {
                    for di in [0isize, -1, 1] {
                        let ci = base_i + di;
                        let cj = base_j + dj;
                        if ci < 0 || cj < 0 || ci >= cx as isize || cj >= cy as isize {
                            continue;
                        }
                        let xi = gx - ci as f64;
                        let eta = gy - cj as f64;
                        if xi < -tol || xi > 1.0 + tol || eta < -tol || eta > 1.0 + tol {
                            continue;
                        }
                        if self.cell_active(ci as usize, cj as usize) {
                            return Ok((
                                ci as usize,
                                cj as usize,
                                xi.clamp(0.0, 1.0),
                                eta.clamp(0.0, 1.0),
                            ));
                        }
                    }
                }
                Err(Error::OutOfDomain(format!("({x}, {y})")))
            }
            (GridKind::Radial, Location::Radius(r)) => {
                let g = r / self.h;
                let cx = self.nx - 1;
                if g < -GEOM_TOL || g > cx as f64 + GEOM_TOL {
                    return Err(Error::OutOfDomain(format!("r = {r}")));
                }
                let ci = (g.floor() as isize).clamp(0, cx as isize - 1) as usize;
                Ok((ci, 0, (g - ci as f64).clamp(0.0, 1.0), 0.0))
            }
            _ => Err(Error::invalid(
                "location kind does not match the grid kind".to_string(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_node_count_and_spacing() {
        let g = build_grid(DomainSpec::Square { extent: 1.0 }, 8).unwrap();
        assert_eq!(g.node_count(), 81);
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(g.active_node_count(), 81);
    }

    #[test]
    fn disk_mask_respects_radius() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, 8).unwrap();
        for idx in g.active_nodes() {
            let [x, y] = g.coords(idx);
            assert!(x.hypot(y) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn annulus_mask_excludes_inner_hole() {
        let g = build_grid(
            DomainSpec::Annulus {
                inner: 0.5,
                outer: 1.0,
            },
            64,
        )
        .unwrap();
        let h = g.spacing();
        for idx in g.active_nodes() {
            let [x, y] = g.coords(idx);
            assert!(x.hypot(y) >= 0.5 - h, "node ({x}, {y}) inside the hole");
        }
    }

    #[test]
    fn boundary_and_interior_partition_the_mask() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, 16).unwrap();
        let mut interior = 0;
        let mut boundary = 0;
        for idx in 0..g.node_count() {
            match g.state(idx) {
                NodeState::Interior => interior += 1,
                NodeState::Boundary => boundary += 1,
                NodeState::Excluded => {}
            }
        }
        assert_eq!(interior + boundary, g.active_node_count());
        assert!(boundary > 0 && interior > 0);
    }

    #[test]
    fn interior_nodes_have_active_stencils() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, 12).unwrap();
        let (nx, _) = g.lattice_shape();
        for idx in 0..g.node_count() {
            if !g.is_interior(idx) {
                continue;
            }
            let i = idx % nx;
            let j = idx / nx;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
                let ni = (i as i64 + di) as usize;
                let nj = (j as i64 + dj) as usize;
                assert!(g.is_active(g.node_index(ni, nj)));
            }
        }
    }

    #[test]
    fn radial_grid_layout() {
        let g = build_grid(
            DomainSpec::Radial {
                radius: 2.0,
                dim: 3,
            },
            10,
        )
        .unwrap();
        assert_eq!(g.node_count(), 11);
        assert_eq!(g.dim(), 3);
        assert!(g.is_interior(0)); // natural condition at r = 0
        assert!(g.is_boundary(10));
        assert_eq!(g.coords(10)[0], 2.0);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(build_grid(DomainSpec::Square { extent: 1.0 }, 3).is_err());
        assert!(build_grid(DomainSpec::Square { extent: 0.0 }, 8).is_err());
        assert!(build_grid(
            DomainSpec::Annulus {
                inner: 1.0,
                outer: 0.5
            },
            8
        )
        .is_err());
        assert!(build_grid(
            DomainSpec::Radial {
                radius: 1.0,
                dim: 1
            },
            8
        )
        .is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
