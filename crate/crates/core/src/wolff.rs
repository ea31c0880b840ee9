//! Dyadic nonlinear Wolff potentials of the right-hand side and of measures.
//!
//! `W^f_{1,p}(x0, R) = sum_j (rho_j^{p-n} int_{B_{rho_j}(x0)} f dx)^{1/(p-1)}`
//! with `rho_j = R / 2^j`. The infinite series is truncated once the grid can
//! no longer resolve the ball (`rho_j < h`) or at `j_max`, and an analytic
//! geometric tail bound is attached; the status reports whether the tail is
//! negligible, dominant, or whether the series diverges outright.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, Location, ScalarField};

/// Right-hand-side data for ball integrals.
///
/// `Field` integrates by grid quadrature; `Constant` uses the exact ball
/// volume (full balls, no domain clipping), which isolates series truncation
/// from quadrature error in oracle tests.
#[derive(Clone, Debug)]
pub enum Source {
    Field(ScalarField),
    Constant { value: f64, dim: usize },
}

impl Source {
    pub fn dim(&self) -> usize {
        match self {
            Source::Field(f) => f.grid().dim(),
            Source::Constant { dim, .. } => *dim,
        }
    }

    /// Grid spacing when quadrature-backed; analytic sources resolve any ball.
    pub fn resolution_floor(&self) -> f64 {
        match self {
            Source::Field(f) => f.grid().spacing(),
            Source::Constant { .. } => 0.0,
        }
    }

    pub fn ball_mass(&self, x0: &Location, rho: f64) -> Result<f64> {
        match self {
            Source::Field(f) => f.ball_integral(x0, rho),
            Source::Constant { value, dim } => {
                Ok(value * unit_ball_volume(*dim) * rho.powi(*dim as i32))
            }
        }
    }

    pub fn local_sup(&self, x0: &Location, rho: f64) -> Result<f64> {
        match self {
            Source::Field(f) => f.ball_sup(x0, rho),
            Source::Constant { value, .. } => Ok(*value),
        }
    }

    fn check_nonnegative(&self) -> Result<()> {
        let min = match self {
            Source::Field(f) => f.min_active(),
            Source::Constant { value, .. } => *value,
        };
        if min < 0.0 {
            return Err(Error::invalid(format!(
                "negative right-hand side (min {min})"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Source {
        match self {
            Source::Field(f) => Source::Field(f.scaled(factor)),
            Source::Constant { value, dim } => Source::Constant {
                value: value * factor,
                dim: *dim,
            },
        }
    }
}

/// Truncation policy for the dyadic sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub j_max: usize,
    pub tail_tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            j_max: 40,
            tail_tol: 1e-2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WolffStatus {
    Converged,
    TailDominated,
    Divergent,
}

/// One evaluated potential: the partial dyadic sum, its per-level terms, and
/// the truncation diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WolffResult {
    /// Sum of the computed terms; `+inf` when the series diverges.
    pub value: f64,
    /// Per-level contributions, ascending `j`; `terms[j]` uses `rho_j = R/2^j`.
    pub terms: Vec<f64>,
    /// First dyadic index *not* computed; terms cover `j < truncation_index`.
    pub truncation_index: usize,
    pub tail_bound: f64,
    pub status: WolffStatus,
    /// Sum of computed terms even when `value` is the divergence sentinel.
    pub partial_sum: f64,
}

const VALUE_FLOOR: f64 = 1e-12;

/// Wolff potential with constant exponent `p` in dimension `n`.
pub fn wolff_constant(
    src: &Source,
    x0: &Location,
    radius: f64,
    p: f64,
    n: usize,
    trunc: &Truncation,
) -> Result<WolffResult> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("exponent p = {p} must exceed 1")));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius {radius} must be positive")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("dimension {n} must be >= 2")));
    }
    if let Source::Field(f) = src {
        if f.grid().dim() != n {
            return Err(Error::invalid(format!(
                "dimension {n} does not match the grid dimension {}",
                f.grid().dim()
            )));
        }
    }
    src.check_nonnegative()?;

    let s = 1.0 / (p - 1.0);
    let h = src.resolution_floor();
    let mut terms = Vec::new();
    let mut rho = radius;
    let mut last_rho = radius;
    for _ in 0..=trunc.j_max {
        if rho < h {
            break;
        }
        let mass = src.ball_mass(x0, rho)?.max(0.0);
        let term = if mass == 0.0 {
            0.0
        } else {
            (rho.powf(p - n as f64) * mass).powf(s)
        };
        terms.push(term);
        last_rho = rho;
        rho *= 0.5;
    }

    let sup = src.local_sup(x0, last_rho)?.max(0.0);
    let ratio = (2.0f64).powf(-p / (p - 1.0));
    let unit_tail = |rho_from: f64| -> f64 {
        // sum_{j >= 1} ((M omega) rho^{n} rho^{p-n})^{s} over rho = rho_from/2^j
        (sup * unit_ball_volume(n)).powf(s) * rho_from.powf(p / (p - 1.0)) * ratio / (1.0 - ratio)
    };
    let tail_bound = if terms.is_empty() {
        // Nothing resolved: bound the whole series starting at j = 0.
        (sup * unit_ball_volume(n)).powf(s) * radius.powf(p / (p - 1.0)) / (1.0 - ratio)
    } else {
        unit_tail(last_rho)
    };

    finish(terms, tail_bound, trunc)
}

/// Wolff potential with the exponent field evaluated at the ball center `x0`.
pub fn wolff_variable(
    src: &Source,
    p_field: &ScalarField,
    x0: &Location,
    radius: f64,
    n: usize,
    trunc: &Truncation,
) -> Result<WolffResult> {
    let p = p_field.eval(x0)?;
    wolff_constant(src, x0, radius, p, n, trunc)
}

/// Point mass of a measure. On radial grids the location is a radius and the
/// atom is taken colinear with the evaluation point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Location,
    pub mass: f64,
}

/// A nonnegative measure: an absolutely continuous density, point atoms, or both.
#[derive(Clone, Debug, Default)]
pub struct MeasureData {
    pub density: Option<Source>,
    pub atoms: Vec<Atom>,
}

fn distance(a: &Location, b: &Location) -> Result<f64> {
    match (a, b) {
        (Location::Xy([ax, ay]), Location::Xy([bx, by])) => Ok((ax - bx).hypot(ay - by)),
        (Location::Radius(ar), Location::Radius(br)) => Ok((ar - br).abs()),
        _ => Err(Error::invalid(
            "atom location kind does not match the evaluation point".to_string(),
        )),
    }
}

/// Measure Wolff potential
/// `W^mu_{beta,p}(x0, R) = sum_j (mu(B_{rho_j}(x0)) / rho_j^{n - beta p})^{1/(p-1)}`.
///
/// An atom sitting at `x0` with `beta p <= n` makes the terms grow (or stay
/// constant) geometrically; the result is then flagged divergent and `value`
/// is `+inf` with the partial sum attached.
pub fn wolff_measure(
    mu: &MeasureData,
    x0: &Location,
    radius: f64,
    beta: f64,
    p: f64,
    n: usize,
    trunc: &Truncation,
) -> Result<WolffResult> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("exponent p = {p} must exceed 1")));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta = {beta} must be positive")));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius {radius} must be positive")));
    }
    for (i, atom) in mu.atoms.iter().enumerate() {
        if atom.mass < 0.0 {
            return Err(Error::invalid(format!(
                "atom {i} has negative mass {}",
                atom.mass
            )));
        }
    }
    if let Some(d) = &mu.density {
        d.check_nonnegative()?;
    }

    let s = 1.0 / (p - 1.0);
    let nf = n as f64;
    let h = mu
        .density
        .as_ref()
        .map(|d| d.resolution_floor())
        .unwrap_or(0.0);
    let mut terms = Vec::new();
    let mut rho = radius;
    let mut last_rho = radius;
    for _ in 0..=trunc.j_max {
        if rho < h {
            break;
        }
        let mut mass = match &mu.density {
            Some(d) => d.ball_mass(x0, rho)?.max(0.0),
            None => 0.0,
        };
        for atom in &mu.atoms {
            if distance(&atom.location, x0)? <= rho {
                mass += atom.mass;
            }
        }
        let term = if mass == 0.0 {
            0.0
        } else {
            (mass * rho.powf(beta * p - nf)).powf(s)
        };
        terms.push(term);
        last_rho = rho;
        rho *= 0.5;
    }

    // Certain divergence: positive mass pinned at the center with beta p <= n.
    let center_tol = 1e-12 * radius;
    let mut center_mass = 0.0;
    let mut near_mass = 0.0;
    for atom in &mu.atoms {
        let d = distance(&atom.location, x0)?;
        if d <= center_tol {
            center_mass += atom.mass;
        }
        if d <= last_rho {
            near_mass += atom.mass;
        }
    }
    let atom_exponent = (beta * p - nf) * s;
    if center_mass > 0.0 && beta * p <= nf + 1e-12 {
        let partial: f64 = terms.iter().sum();
        return Ok(WolffResult {
            value: f64::INFINITY,
            truncation_index: terms.len(),
            terms,
            tail_bound: f64::INFINITY,
            status: WolffStatus::Divergent,
            partial_sum: partial,
        });
    }

    // Tail bound: split into the off-center atom part (each atom drops out of
    // the balls once rho_j < dist) and the bounded-density part; the split of
    // (x + y)^s costs at most a factor 2^{max(0, s-1)}.
    let split = (2.0f64).powf((s - 1.0).max(0.0));
    let mut tail_atoms = 0.0;
    if near_mass > 0.0 {
        for atom in &mu.atoms {
            let d = distance(&atom.location, x0)?;
            if atom.mass <= 0.0 || d > last_rho {
                continue;
            }
            let mut r = last_rho * 0.5;
            let mut guard = 0;
            while r >= d.max(center_tol) && guard < 4096 {
                tail_atoms += atom.mass.powf(s) * r.powf(atom_exponent);
                r *= 0.5;
                guard += 1;
            }
            if guard == 4096 {
                tail_atoms = f64::INFINITY;
            }
        }
    }
    let tail_density = match &mu.density {
        Some(d) => {
            let sup = d.local_sup(x0, last_rho)?.max(0.0);
            let q = (2.0f64).powf(-beta * p * s);
            (sup * unit_ball_volume(n)).powf(s) * last_rho.powf(beta * p * s) * q / (1.0 - q)
        }
        None => 0.0,
    };
    let tail_bound = split * (tail_atoms + tail_density);

    // Empirical growth check: non-decreasing recent terms mean the dyadic sum
    // is not settling.
    let grown = terms.len() >= 4 && {
        let k = terms.len();
        terms[k - 1] > 0.0
            && terms[k - 1] >= terms[k - 2] * (1.0 - 1e-9)
            && terms[k - 2] >= terms[k - 3] * (1.0 - 1e-9)
            && terms[k - 3] >= terms[k - 4] * (1.0 - 1e-9)
    };
    if grown {
        let partial: f64 = terms.iter().sum();
        return Ok(WolffResult {
            value: f64::INFINITY,
            truncation_index: terms.len(),
            terms,
            tail_bound: f64::INFINITY,
            status: WolffStatus::Divergent,
            partial_sum: partial,
        });
    }

    finish(terms, tail_bound, trunc)
}

/// Difference of two potentials of the same data at nested radii,
/// `W(x0, r_outer) - W(x0, r_inner)`, clamped at zero (truncation noise can
/// make the raw difference slightly negative; the raw value is kept).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowResult {
    pub value: f64,
    pub raw: f64,
    pub outer: WolffResult,
    pub inner: WolffResult,
}

pub fn wolff_window(
    src: &Source,
    x0: &Location,
    r_outer: f64,
    r_inner: f64,
    p: f64,
    n: usize,
    trunc: &Truncation,
) -> Result<WindowResult> {
    if !(r_inner > 0.0) || r_inner > r_outer {
        return Err(Error::invalid(format!(
            "window radii must satisfy 0 < r_inner <= r_outer (got {r_inner}, {r_outer})"
        )));
    }
    let outer = wolff_constant(src, x0, r_outer, p, n, trunc)?;
    let inner = wolff_constant(src, x0, r_inner, p, n, trunc)?;
    let raw = outer.value - inner.value;
    Ok(WindowResult {
        value: raw.max(0.0),
        raw,
        outer,
        inner,
    })
}

fn finish(terms: Vec<f64>, tail_bound: f64, trunc: &Truncation) -> Result<WolffResult> {
    let value: f64 = terms.iter().sum();
    let status = if tail_bound <= trunc.tail_tol * value.max(VALUE_FLOOR) {
        WolffStatus::Converged
    } else {
        WolffStatus::TailDominated
    };
    Ok(WolffResult {
        value,
        truncation_index: terms.len(),
        terms,
        tail_bound,
        status,
        partial_sum: value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec, ScalarField};
    use std::f64::consts::PI;

    fn analytic(value: f64, dim: usize) -> Source {
        Source::Constant { value, dim }
    }

    #[test]
    fn zero_source_is_zero_and_converged() {
        let r = wolff_constant(
            &analytic(0.0, 2),
            &Location::xy(0.0, 0.0),
            1.0,
            2.0,
            2,
            &Truncation::default(),
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.status, WolffStatus::Converged);
    }

    #[test]
    fn geometric_closed_form_p2() {
        // f = 1, n = 2, p = 2: sum_j pi rho_j^2 = 4 pi / 3.
        let r = wolff_constant(
            &analytic(1.0, 2),
            &Location::xy(0.0, 0.0),
            1.0,
            2.0,
            2,
            &Truncation::default(),
        )
        .unwrap();
        let expect = 4.0 * PI / 3.0;
        assert!((r.value - expect).abs() < 1e-3 * expect, "got {}", r.value);
        assert_eq!(r.status, WolffStatus::Converged);
        assert_eq!(r.truncation_index, 41);
    }

    #[test]
    fn geometric_closed_form_p15() {
        // f = 1, n = 2, p = 1.5: term_j = (pi rho_j^{1.5})^2 -> 8 pi^2 / 7.
        let r = wolff_constant(
            &analytic(1.0, 2),
            &Location::xy(0.0, 0.0),
            1.0,
            1.5,
            2,
            &Truncation::default(),
        )
        .unwrap();
        let expect = 8.0 * PI * PI / 7.0;
        assert!((r.value - expect).abs() < 1e-3 * expect, "got {}", r.value);
    }

    #[test]
    fn grid_quadrature_within_one_percent() {
        let grid = build_grid(DomainSpec::Square { extent: 2.0 }, 512).unwrap();
        let f = Source::Field(ScalarField::constant(&grid, 1.0));
        let x0 = Location::xy(1.0, 1.0);
        let trunc = Truncation::default();
        let r2 = wolff_constant(&f, &x0, 1.0, 2.0, 2, &trunc).unwrap();
        let e2 = 4.0 * PI / 3.0;
        assert!((r2.value - e2).abs() < 0.01 * e2, "got {}", r2.value);
        let r15 = wolff_constant(&f, &x0, 1.0, 1.5, 2, &trunc).unwrap();
        let e15 = 8.0 * PI * PI / 7.0;
        assert!((r15.value - e15).abs() < 0.01 * e15, "got {}", r15.value);
    }

    #[test]
    fn variable_exponent_reduces_to_constant_bitwise() {
        let grid = build_grid(DomainSpec::Disk { radius: 1.0 }, 32).unwrap();
        let f = Source::Field(ScalarField::constant(&grid, 1.0));
        let p_field = ScalarField::constant(&grid, 1.8);
        let x0 = Location::xy(0.1, 0.05);
        let trunc = Truncation::default();
        let a = wolff_variable(&f, &p_field, &x0, 0.25, 2, &trunc).unwrap();
        let b = wolff_constant(&f, &x0, 0.25, 1.8, 2, &trunc).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.terms, b.terms);
    }

    #[test]
    fn homogeneity_is_exact_in_analytic_mode() {
        let x0 = Location::xy(0.0, 0.0);
        let trunc = Truncation::default();
        for p in [2.0, 1.5, 1.8] {
            let base = wolff_constant(&analytic(1.0, 2), &x0, 1.0, p, 2, &trunc).unwrap();
            let scaled = wolff_constant(&analytic(8.0, 2), &x0, 1.0, p, 2, &trunc).unwrap();
            let factor = 8.0f64.powf(1.0 / (p - 1.0));
            assert!(
                (scaled.value - factor * base.value).abs() <= 1e-12 * factor * base.value,
                "p = {p}: {} vs {}",
                scaled.value,
                factor * base.value
            );
        }
    }

    #[test]
    fn monotone_in_radius_and_data() {
        let x0 = Location::xy(0.0, 0.0);
        let trunc = Truncation::default();
        let small = wolff_constant(&analytic(1.0, 2), &x0, 0.5, 1.8, 2, &trunc).unwrap();
        let large = wolff_constant(&analytic(1.0, 2), &x0, 1.0, 1.8, 2, &trunc).unwrap();
        assert!(large.value >= small.value);
        let denser = wolff_constant(&analytic(2.0, 2), &x0, 0.5, 1.8, 2, &trunc).unwrap();
        assert!(denser.value >= small.value);
    }

    #[test]
    fn dyadic_shift_identity() {
        // W(R) - W(R/2) equals the j = 0 term of the R-sum up to the last
        // truncated term.
        let x0 = Location::xy(0.0, 0.0);
        let trunc = Truncation {
            j_max: 60,
            tail_tol: 1e-2,
        };
        let full = wolff_constant(&analytic(1.0, 2), &x0, 1.0, 1.7, 2, &trunc).unwrap();
        let half = wolff_constant(&analytic(1.0, 2), &x0, 0.5, 1.7, 2, &trunc).unwrap();
        let diff = full.value - half.value;
        assert!(
            (diff - full.terms[0]).abs() <= 1e-12 * full.terms[0],
            "diff {diff} vs term0 {}",
            full.terms[0]
        );
        // The half-radius terms are exactly the shifted full-radius terms.
        for (a, b) in half.terms.iter().zip(full.terms.iter().skip(1)) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn window_examples() {
        let x0 = Location::xy(0.0, 0.0);
        let trunc = Truncation::default();
        let w = wolff_window(&analytic(1.0, 2), &x0, 1.0, 1.0, 2.0, 2, &trunc).unwrap();
        assert_eq!(w.value, 0.0);
        let w = wolff_window(&analytic(1.0, 2), &x0, 1.0, 0.5, 2.0, 2, &trunc).unwrap();
        assert!((w.value - PI).abs() < 1e-3, "got {}", w.value);
        let w = wolff_window(&analytic(0.0, 2), &x0, 1.0, 0.5, 2.0, 2, &trunc).unwrap();
        assert_eq!(w.value, 0.0);
        assert!(wolff_window(&analytic(1.0, 2), &x0, 0.5, 1.0, 2.0, 2, &trunc).is_err());
    }

    #[test]
    fn atom_divergence_both_sides() {
        let x0 = Location::xy(0.0, 0.0);
        let trunc = Truncation {
            j_max: 100,
            tail_tol: 1e-2,
        };
        let atom_at_center = MeasureData {
            density: None,
            atoms: vec![Atom {
                location: Location::xy(0.0, 0.0),
                mass: 1.0,
            }],
        };
        // beta p = 2 <= n = 3: divergent (terms double).
        let r = wolff_measure(&atom_at_center, &x0, 1.0, 1.0, 2.0, 3, &trunc).unwrap();
        assert_eq!(r.status, WolffStatus::Divergent);
        assert!(r.value.is_infinite());
        assert!(r.partial_sum.is_finite());

        // beta p = n exactly: constant terms, still divergent.
        let r = wolff_measure(&atom_at_center, &x0, 1.0, 1.0, 3.0, 3, &trunc).unwrap();
        assert_eq!(r.status, WolffStatus::Divergent);

        // beta p = 3 > n = 2: geometric sum 2 + sqrt(2).
        let r = wolff_measure(&atom_at_center, &x0, 1.0, 1.0, 3.0, 2, &trunc).unwrap();
        assert_eq!(r.status, WolffStatus::Converged);
        let expect = 2.0 + 2.0f64.sqrt();
        assert!((r.value - expect).abs() < 1e-6, "got {}", r.value);
    }

    #[test]
    fn zero_measure_is_zero() {
        let r = wolff_measure(
            &MeasureData::default(),
            &Location::xy(0.0, 0.0),
            1.0,
            1.0,
            2.0,
            2,
            &Truncation::default(),
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.status, WolffStatus::Converged);
    }

    #[test]
    fn negative_mass_rejected() {
        let mu = MeasureData {
            density: None,
            atoms: vec![Atom {
                location: Location::xy(0.0, 0.0),
                mass: -1.0,
            }],
        };
        assert!(wolff_measure(
            &mu,
            &Location::xy(0.0, 0.0),
            1.0,
            1.0,
            2.0,
            2,
            &Truncation::default()
        )
        .is_err());
    }

    #[test]
    fn invalid_exponent_rejected() {
        assert!(wolff_constant(
            &analytic(1.0, 2),
            &Location::xy(0.0, 0.0),
            1.0,
            1.0,
            2,
            &Truncation::default()
        )
        .is_err());
    }

    #[test]
    fn negative_field_rejected() {
        let grid = build_grid(DomainSpec::Square { extent: 1.0 }, 8).unwrap();
        let f = Source::Field(ScalarField::constant(&grid, -1.0));
        assert!(wolff_constant(
            &f,
            &Location::xy(0.5, 0.5),
            0.25,
            2.0,
            2,
            &Truncation::default()
        )
        .is_err());
    }

    #[test]
    fn value_equals_sum_of_terms() {
        let r = wolff_constant(
            &analytic(3.0, 2),
            &Location::xy(0.0, 0.0),
            0.7,
            1.6,
            2,
            &Truncation::default(),
        )
        .unwrap();
        let sum: f64 = r.terms.iter().sum();
        assert_eq!(r.value, sum);
        assert!(r.terms.iter().all(|t| *t >= 0.0));
    }
}
