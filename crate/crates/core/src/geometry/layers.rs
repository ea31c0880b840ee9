//! Radial layer stacks and the mollified coefficient/exponent fields they induce.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::field::ScalarField;
use crate::geometry::grid::{Grid, GridKind};

/// One radial layer with constant material parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub r_inner: f64,
    pub r_outer: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    /// Free-text material tag; carries no physics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
}

/// Ordered, contiguous radial layers plus the interface transition width.
///
/// Raw layer parameters jump at interfaces; all derived fields ramp linearly
/// in `r` over a band of width `delta` centered on each interface, so the
/// fields are Lipschitz and the Hölder seminorm of `a` stays finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
    pub delta: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>, delta: f64, center: [f64; 2]) -> Result<Self> {
        let stack = LayerStack {
            layers,
            delta,
            center,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("layer stack is empty".to_string()));
        }
        let scale = self.outer_radius().max(1.0);
        if self.layers[0].r_inner.abs() > 1e-12 * scale {
            return Err(Error::invalid(format!(
                "first layer must start at r = 0 (got {})",
                self.layers[0].r_inner
            )));
        }
        let mut min_thickness = f64::INFINITY;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.r_outer <= layer.r_inner {
                return Err(Error::invalid(format!(
                    "layer {i} has non-positive thickness ({}..{})",
                    layer.r_inner, layer.r_outer
                )));
            }
            if !(layer.p > 1.0) {
                return Err(Error::invalid(format!("layer {i}: p = {} <= 1", layer.p)));
            }
            if layer.q < layer.p {
                return Err(Error::invalid(format!(
                    "layer {i}: q = {} < p = {}",
                    layer.q, layer.p
                )));
            }
            if layer.a < 0.0 {
                return Err(Error::invalid(format!("layer {i}: a = {} < 0", layer.a)));
            }
            if i + 1 < self.layers.len() {
                let next = &self.layers[i + 1];
                if (next.r_inner - layer.r_outer).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "layers {i} and {} are not contiguous ({} vs {})",
                        i + 1,
                        layer.r_outer,
                        next.r_inner
                    )));
                }
            }
            min_thickness = min_thickness.min(layer.r_outer - layer.r_inner);
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid(format!(
                "transition width delta = {} must be positive",
                self.delta
            )));
        }
        if self.layers.len() > 1 && self.delta >= min_thickness {
            return Err(Error::invalid(format!(
                "transition width {} not smaller than the thinnest layer {}",
                self.delta, min_thickness
            )));
        }
        Ok(())
    }

    pub fn outer_radius(&self) -> f64 {
        self.layers.last().map(|l| l.r_outer).unwrap_or(0.0)
    }

    pub fn p_range(&self) -> (f64, f64) {
        range(self.layers.iter().map(|l| l.p))
    }

    pub fn q_range(&self) -> (f64, f64) {
        range(self.layers.iter().map(|l| l.q))
    }

    /// `(p, q, a)` at radius `r`, with linear ramps of width `delta` across the
    /// interfaces and constant extension beyond the outermost layer.
    pub fn profile(&self, r: f64) -> (f64, f64, f64) {
        let half = self.delta / 2.0;
        for k in 0..self.layers.len().saturating_sub(1) {
            let rk = self.layers[k].r_outer;
            if (r - rk).abs() <= half {
                let t = ((r - (rk - half)) / self.delta).clamp(0.0, 1.0);
                let lo = &self.layers[k];
                let hi = &self.layers[k + 1];
                return (
                    lo.p + t * (hi.p - lo.p),
                    lo.q + t * (hi.q - lo.q),
                    lo.a + t * (hi.a - lo.a),
                );
            }
        }
        let layer = self
            .layers
            .iter()
            .find(|l| r < l.r_outer)
            .unwrap_or_else(|| self.layers.last().unwrap());
        (layer.p, layer.q, layer.a)
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// The `p(x)`, `q(x)`, `a(x)` fields of one problem, on a shared grid.
#[derive(Clone, Debug)]
pub struct MaterialFields {
    pub p: ScalarField,
    pub q: ScalarField,
    pub a: ScalarField,
}

impl MaterialFields {
    pub fn grid(&self) -> &Arc<Grid> {
        self.p.grid()
    }
}

/// Samples the mollified layer profile onto a grid.
///
/// Every masked node must be covered by the stack (distance from the stack
/// center at most the outer radius); square grids whose corners stick out of
/// the outermost layer are rejected as a grid/stack extent mismatch.
pub fn build_layered_fields(stack: &LayerStack, grid: &Arc<Grid>) -> Result<MaterialFields> {
    stack.validate()?;
    let outer = stack.outer_radius();
    let tol = 1e-9 * outer;
    let radius_of = |coords: &[f64; 2]| -> f64 {
        match grid.kind() {
            GridKind::Cartesian2d => {
                (coords[0] - stack.center[0]).hypot(coords[1] - stack.center[1])
            }
            GridKind::Radial => coords[0],
        }
    };
    let mut max_r: f64 = 0.0;
    for idx in grid.active_nodes() {
        max_r = max_r.max(radius_of(&grid.coords(idx)));
    }
    if max_r > outer + tol {
        return Err(Error::GridMismatch(format!(
            "grid reaches radius {max_r} but the stack ends at {outer}"
        )));
    }

    let mut p = vec![0.0; grid.node_count()];
    let mut q = vec![0.0; grid.node_count()];
    let mut a = vec![0.0; grid.node_count()];
    for idx in 0..grid.node_count() {
        let r = radius_of(&grid.coords(idx));
        let (pv, qv, av) = stack.profile(r.min(outer));
        p[idx] = pv;
        q[idx] = qv;
        a[idx] = av;
    }
    Ok(MaterialFields {
        p: ScalarField::from_values(grid, p)?,
        q: ScalarField::from_values(grid, q)?,
        a: ScalarField::from_values(grid, a)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::{build_grid, DomainSpec};

    fn two_layer_stack() -> LayerStack {
        LayerStack::new(
            vec![
                Layer {
                    r_inner: 0.0,
                    r_outer: 0.5,
                    p: 1.8,
                    q: 1.9,
                    a: 0.0,
                    material: None,
                },
                Layer {
                    r_inner: 0.5,
                    r_outer: 1.0,
                    p: 1.9,
                    q: 1.95,
                    a: 0.5,
                    material: None,
                },
            ],
            0.1,
            [0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn single_layer_fields_are_constant() {
        let stack = LayerStack::new(
            vec![Layer {
                r_inner: 0.0,
                r_outer: 1.0,
                p: 1.8,
                q: 1.9,
                a: 0.0,
                material: None,
            }],
            0.05,
            [0.0, 0.0],
        )
        .unwrap();
        let grid = build_grid(DomainSpec::Disk { radius: 1.0 }, 16).unwrap();
        let fields = build_layered_fields(&stack, &grid).unwrap();
        for idx in grid.active_nodes() {
            assert_eq!(fields.p.values()[idx], 1.8);
            assert_eq!(fields.q.values()[idx], 1.9);
            assert_eq!(fields.a.values()[idx], 0.0);
        }
    }

    #[test]
    fn interface_ramp_midpoint_and_plateaus() {
        let stack = two_layer_stack();
        assert_eq!(stack.profile(0.45).2, 0.0);
        assert_eq!(stack.profile(0.55).2, 0.5);
        assert!((stack.profile(0.5).2 - 0.25).abs() < 1e-14);
        assert_eq!(stack.profile(0.2).2, 0.0);
        assert_eq!(stack.profile(0.9).2, 0.5);
    }

    #[test]
    fn fields_piecewise_constant_outside_bands() {
        let stack = two_layer_stack();
        let grid = build_grid(DomainSpec::Disk { radius: 1.0 }, 32).unwrap();
        let fields = build_layered_fields(&stack, &grid).unwrap();
        for idx in grid.active_nodes() {
            let [x, y] = grid.coords(idx);
            let r = x.hypot(y);
            if (r - 0.5).abs() > 0.05 {
                let expect = if r < 0.5 { 0.0 } else { 0.5 };
                assert_eq!(fields.a.values()[idx], expect, "a at r = {r}");
            }
        }
    }

    #[test]
    fn rejects_grid_wider_than_stack() {
        let stack = two_layer_stack();
        // Unit square centered away from the stack center: corners reach
        // radius sqrt(2) > 1.
        let grid = build_grid(DomainSpec::Square { extent: 1.0 }, 8).unwrap();
        assert!(build_layered_fields(&stack, &grid).is_err());
    }

    #[test]
    fn rejects_bad_stacks() {
        // Gap between layers.
        assert!(LayerStack::new(
            vec![
                Layer {
                    r_inner: 0.0,
                    r_outer: 0.4,
                    p: 2.0,
                    q: 2.0,
                    a: 0.0,
                    material: None
                },
                Layer {
                    r_inner: 0.5,
                    r_outer: 1.0,
                    p: 2.0,
                    q: 2.0,
                    a: 0.1,
                    material: None
                },
            ],
            0.05,
            [0.0, 0.0],
        )
        .is_err());
        // delta wider than the thinnest layer.
        assert!(LayerStack::new(
            vec![
                Layer {
                    r_inner: 0.0,
                    r_outer: 0.1,
                    p: 2.0,
                    q: 2.0,
                    a: 0.0,
                    material: None
                },
                Layer {
                    r_inner: 0.1,
                    r_outer: 1.0,
                    p: 2.0,
                    q: 2.0,
                    a: 0.1,
                    material: None
                },
            ],
            0.2,
            [0.0, 0.0],
        )
        .is_err());
        // q < p.
        assert!(LayerStack::new(
            vec![Layer {
                r_inner: 0.0,
                r_outer: 1.0,
                p: 2.0,
                q: 1.5,
                a: 0.0,
                material: None
            }],
            0.05,
            [0.0, 0.0],
        )
        .is_err());
    }
}
