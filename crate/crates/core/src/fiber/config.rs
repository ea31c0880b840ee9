//! Scenario configuration documents: parsing, defaults, and validation.
//!
//! Documents are JSON. A minimal document names a preset; every omitted key is
//! defaulted, and the resolved configuration serializes back into a document
//! that loads to an equal configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::presets::preset;
use crate::geometry::{DomainSpec, Layer, LayerStack, Location};
use crate::solver::SolveParams;
use crate::wolff::Truncation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    #[serde(flatten)]
    pub spec: DomainSpec,
    pub resolution: usize,
}

impl DomainConfig {
    pub fn dim(&self) -> usize {
        match self.spec {
            DomainSpec::Radial { dim, .. } => dim,
            _ => 2,
        }
    }

    /// Center of the domain in stack coordinates.
    pub fn center(&self) -> [f64; 2] {
        match self.spec {
            DomainSpec::Square { extent } => [extent / 2.0, extent / 2.0],
            _ => [0.0, 0.0],
        }
    }

    /// Largest distance from the stack center to a domain point.
    pub fn outer_reach(&self) -> f64 {
        match self.spec {
            DomainSpec::Square { extent } => extent * std::f64::consts::SQRT_2 / 2.0,
            DomainSpec::Disk { radius }
            | DomainSpec::Annulus { outer: radius, .. }
            | DomainSpec::Radial { radius, .. } => radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-((r - center_radius) / width)^2)`.
    RadialGaussian {
        amplitude: f64,
        center_radius: f64,
        width: f64,
    },
    /// One nodal value per line, in lattice order.
    Nodal {
        path: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverConfig {
    pub fn to_params(self) -> SolveParams {
        SolveParams {
            epsilon: self.epsilon,
            tol: self.tol,
            max_iterations: self.max_iter,
            ..SolveParams::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralMode {
    /// Ball integrals by grid quadrature.
    Quadrature,
    /// Exact full-ball integrals; constant `f` only.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffConfig {
    pub j_max: usize,
    pub tail_tol: f64,
    pub integral_mode: IntegralMode,
}

impl WolffConfig {
    pub fn truncation(&self) -> Truncation {
        Truncation {
            j_max: self.j_max,
            tail_tol: self.tail_tol,
        }
    }
}

/// A point in a configuration document: a radius for radial domains, an
/// `[x, y]` pair for planar ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Radius(f64),
    Xy([f64; 2]),
}

impl PointSpec {
    pub fn to_location(self, domain: &DomainConfig) -> Result<Location> {
        match (self, domain.spec) {
            (PointSpec::Radius(r), DomainSpec::Radial { .. }) => Ok(Location::Radius(r)),
            (PointSpec::Xy(p), spec) if !matches!(spec, DomainSpec::Radial { .. }) => {
                Ok(Location::Xy(p))
            }
            (PointSpec::Radius(_), _) => Err(Error::config(
                "evaluate.points",
                "planar domains need [x, y] points",
            )),
            (PointSpec::Xy(_), _) => Err(Error::config(
                "evaluate.points",
                "radial domains need scalar radius points",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub points: Vec<PointSpec>,
    pub radii: Vec<f64>,
    pub f_scales: Vec<f64>,
    pub profile_samples: usize,
}

/// A fully resolved scenario: every default applied, every invariant checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub domain: DomainConfig,
    pub layers: Vec<Layer>,
    pub delta: f64,
    pub alpha: f64,
    pub f: SourceSpec,
    pub boundary_value: f64,
    pub solver: SolverConfig,
    pub wolff: WolffConfig,
    pub evaluate: EvaluateConfig,
}

impl ScenarioConfig {
    pub fn stack(&self) -> Result<LayerStack> {
        LayerStack::new(self.layers.clone(), self.delta, self.domain.center())
            .map_err(|e| Error::config("layers", e.to_string()))
    }

    pub fn locations(&self) -> Result<Vec<Location>> {
        self.evaluate
            .points
            .iter()
            .map(|p| p.to_location(&self.domain))
            .collect()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: Option<RawDomain>,
    preset: Option<String>,
    layers: Option<Vec<Layer>>,
    delta: Option<f64>,
    alpha: Option<f64>,
    f: Option<SourceSpec>,
    boundary_value: Option<f64>,
    solver: Option<RawSolver>,
    wolff: Option<RawWolff>,
    evaluate: Option<RawEvaluate>,
}

#[derive(Debug, Deserialize)]
struct RawDomain {
    #[serde(flatten)]
    spec: DomainSpec,
    resolution: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    epsilon: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWolff {
    j_max: Option<usize>,
    tail_tol: Option<f64>,
    integral_mode: Option<IntegralMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluate {
    points: Option<Vec<PointSpec>>,
    radii: Option<Vec<f64>>,
    f_scales: Option<Vec<f64>>,
    profile_samples: Option<usize>,
}

/// Parses and resolves a configuration document, applying defaults and
/// reporting violations with their field paths.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ScenarioConfig> {
    let domain = match raw.domain {
        Some(d) => DomainConfig {
            spec: d.spec,
            resolution: d.resolution.unwrap_or(64),
        },
        None => DomainConfig {
            spec: DomainSpec::Disk { radius: 1.0 },
            resolution: 64,
        },
    };
    if domain.resolution < 4 {
        return Err(Error::config(
            "domain.resolution",
            format!("{} is too small (need >= 4)", domain.resolution),
        ));
    }
    match domain.spec {
        DomainSpec::Square { extent } if !(extent > 0.0) => {
            return Err(Error::config("domain.extent", "must be positive"))
        }
        DomainSpec::Disk { radius } | DomainSpec::Radial { radius, .. } if !(radius > 0.0) => {
            return Err(Error::config("domain.radius", "must be positive"))
        }
        DomainSpec::Annulus { inner, outer } if !(inner >= 0.0 && inner < outer) => {
            return Err(Error::config("domain", "annulus needs 0 <= inner < outer"))
        }
        DomainSpec::Radial { dim, .. } if dim < 2 => {
            return Err(Error::config("domain.n", "radial dimension must be >= 2"))
        }
        _ => {}
    }

    let (layers, preset_delta) = match (raw.preset.as_deref(), raw.layers) {
        (Some(name), None) => {
            let stack = preset(name)
                .ok_or_else(|| Error::config("preset", format!("unknown preset `{name}`")))?;
            let delta = stack.delta;
            (stack.layers, Some(delta))
        }
        (None, Some(layers)) => (layers, None),
        (Some(_), Some(_)) => {
            return Err(Error::config("layers", "give either `preset` or `layers`, not both"))
        }
        (None, None) => {
            let stack = preset("fiber").unwrap();
            let delta = stack.delta;
            (stack.layers, Some(delta))
        }
    };
    let h = domain.outer_reach() / domain.resolution as f64;
    let delta = raw.delta.or(preset_delta).unwrap_or(4.0 * h);

    let alpha = raw.alpha.unwrap_or(1.0);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config("alpha", format!("{alpha} not in (0, 1]")));
    }

    let f = raw.f.unwrap_or(SourceSpec::Constant { value: 1.0 });
    match &f {
        SourceSpec::Constant { value } if *value < 0.0 => {
            return Err(Error::config("f.value", "must be nonnegative"))
        }
        SourceSpec::RadialGaussian {
            amplitude, width, ..
        } => {
            if *amplitude < 0.0 {
                return Err(Error::config("f.amplitude", "must be nonnegative"));
            }
            if !(*width > 0.0) {
                return Err(Error::config("f.width", "must be positive"));
            }
        }
        _ => {}
    }

    let boundary_value = raw.boundary_value.unwrap_or(0.0);
    if boundary_value < 0.0 {
        return Err(Error::config("boundary_value", "must be nonnegative"));
    }

    let rs = raw.solver.unwrap_or_default();
    let solver = SolverConfig {
        epsilon: rs.epsilon,
        tol: rs.tol.unwrap_or(1e-5),
        max_iter: rs.max_iter.unwrap_or(20_000),
    };
    if !(solver.tol > 0.0) {
        return Err(Error::config("solver.tol", "must be positive"));
    }
    if solver.max_iter == 0 {
        return Err(Error::config("solver.max_iter", "must be >= 1"));
    }
    if let Some(e) = solver.epsilon {
        if e < 0.0 {
            return Err(Error::config("solver.epsilon", "must be nonnegative"));
        }
    }

    let rw = raw.wolff.unwrap_or_default();
    let wolff = WolffConfig {
        j_max: rw.j_max.unwrap_or(40),
        tail_tol: rw.tail_tol.unwrap_or(1e-2),
        integral_mode: rw.integral_mode.unwrap_or(IntegralMode::Quadrature),
    };
    if !(wolff.tail_tol > 0.0) {
        return Err(Error::config("wolff.tail_tol", "must be positive"));
    }
    if wolff.integral_mode == IntegralMode::Analytic
        && !matches!(f, SourceSpec::Constant { .. })
    {
        return Err(Error::config(
            "wolff.integral_mode",
            "analytic ball integrals require a constant f",
        ));
    }

    let re = raw.evaluate.unwrap_or_default();
    let default_point = match domain.spec {
        DomainSpec::Radial { .. } => PointSpec::Radius(0.0),
        DomainSpec::Square { extent } => PointSpec::Xy([extent / 2.0, extent / 2.0]),
        _ => PointSpec::Xy([0.0, 0.0]),
    };
    let evaluate = EvaluateConfig {
        points: re.points.unwrap_or_else(|| vec![default_point]),
        radii: re.radii.unwrap_or_else(|| vec![0.1]),
        f_scales: re.f_scales.unwrap_or_else(|| vec![1.0]),
        profile_samples: re.profile_samples.unwrap_or(64),
    };
    if evaluate.points.is_empty() {
        return Err(Error::config("evaluate.points", "must not be empty"));
    }
    if evaluate.radii.is_empty() || evaluate.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::config("evaluate.radii", "need a nonempty list of positive radii"));
    }
    if evaluate.f_scales.is_empty() || evaluate.f_scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::config(
            "evaluate.f_scales",
            "need a nonempty list of positive scales",
        ));
    }
    if evaluate.profile_samples < 2 {
        return Err(Error::config("evaluate.profile_samples", "must be >= 2"));
    }

    let config = ScenarioConfig {
        domain,
        layers,
        delta,
        alpha,
        f,
        boundary_value,
        solver,
        wolff,
        evaluate,
    };

    // Cross-cutting checks: the stack must be a valid layering, the points must
    // match the domain kind, and the stack must cover every domain point.
    let stack = config.stack()?;
    config.locations()?;
    if config.domain.outer_reach() > stack.outer_radius() * (1.0 + 1e-9) {
        return Err(Error::config(
            "domain",
            format!(
                "domain reaches radius {} but the stack ends at {}",
                config.domain.outer_reach(),
                stack.outer_radius()
            ),
        ));
    }
    Ok(config)
}
