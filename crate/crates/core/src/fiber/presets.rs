//! Layered material presets: a three-layer optic fiber cross-section and a
//! five-layer optic cable.
//!
//! The layer geometry follows the usual fiber/cable build (core, cladding,
//! buffer, strength members, jacket); material names are metadata only. The
//! exponents are chosen so that each preset satisfies the compatibility chain
//! for its intended dimension: `q_+ < n` forces sub-2 exponents in 2D, so the
//! five-layer cable ships as a radially symmetric n = 3 scenario.

use crate::geometry::{Layer, LayerStack};

fn layer(r_inner: f64, r_outer: f64, p: f64, q: f64, a: f64, material: &str) -> Layer {
    Layer {
        r_inner,
        r_outer,
        p,
        q,
        a,
        material: Some(material.to_string()),
    }
}

/// Three-layer fiber cross-section for 2D disk runs. The core has `a = 0`, so
/// center points always fall into case A.
pub fn preset_fiber() -> LayerStack {
    LayerStack::new(
        vec![
            layer(0.0, 0.4, 1.8, 1.9, 0.0, "core (GeO2-doped silica)"),
            layer(0.4, 0.7, 1.85, 1.92, 0.3, "cladding (silica)"),
            layer(0.7, 1.0, 1.9, 1.95, 0.5, "buffer (acrylate)"),
        ],
        0.05,
        [0.0, 0.0],
    )
    .expect("fiber preset is a valid stack")
}

/// Five-layer cable, intended for radially symmetric n = 3 runs.
pub fn preset_cable() -> LayerStack {
    LayerStack::new(
        vec![
            layer(0.0, 0.25, 1.85, 2.0, 0.0, "core (GeO2-doped silica)"),
            layer(0.25, 0.45, 1.9, 2.05, 0.2, "cladding (silica)"),
            layer(0.45, 0.65, 1.95, 2.1, 0.35, "buffer (acrylate)"),
            layer(0.65, 0.85, 2.0, 2.15, 0.5, "strength members (aramid)"),
            layer(0.85, 1.0, 2.0, 2.2, 0.6, "jacket (polyethylene)"),
        ],
        0.04,
        [0.0, 0.0],
    )
    .expect("cable preset is a valid stack")
}

pub fn preset(name: &str) -> Option<LayerStack> {
    match name {
        "fiber" => Some(preset_fiber()),
        "cable" => Some(preset_cable()),
        _ => None,
    }
}
