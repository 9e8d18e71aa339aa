//! Scenario files: one TOML document describing the metric, the curves,
//! numerical tolerances, caps, grids, outputs and the experiment settings.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::billiard::Caps;
use crate::geodesic::IntegratorOptions;
use crate::manifold::{ChartDomain, MetricChart};
use crate::scalar::{lit, Real, Vec2};
use crate::scene::{BoundaryCurve, Scene, SceneError, SceneOptions};
use crate::spectra::SpectrumGrid;

/// Every numeric default a scenario may leave out.
pub mod defaults {
    pub const ABS_TOL: f64 = 1e-10;
    pub const REL_TOL: f64 = 1e-9;
    pub const MAX_STEP: f64 = 0.05;
    pub const EVENT_TOL: f64 = 1e-10;
    pub const MAX_TIME: f64 = 200.0;
    pub const MAX_REFLECTIONS: usize = 10_000;
    pub const TANGENCY: f64 = 1e-6;
    pub const CURVE_SAMPLES: usize = 512;
    pub const GRID_NX: usize = 64;
    pub const GRID_NTHETA: usize = 64;
    pub const GRID_DELTA: f64 = 1e-2;
    pub const CHART_MARGIN: f64 = 1e-6;
    pub const SEED: u64 = 0;
    pub const FRONT_SAMPLES: usize = 128;
    pub const GRAD_STEP: f64 = 1e-5;
    pub const CONJUGACY_SAMPLES: usize = 100;
    pub const CONJUGACY_T_MAX: f64 = 3.0;
    pub const ITINERARY_LENGTH: usize = 8;
    pub const UNIQUENESS_EPS: [f64; 5] = [0.0, 0.01, 0.02, 0.05, 0.1];
    pub const UNIQUENESS_HARMONIC: usize = 2;
    pub const ALMOST_SAME_SUP: f64 = 1e-6;
    pub const ALMOST_SAME_UNMATCHED: f64 = 0.01;
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {file}: {source}")]
    Io { file: PathBuf, source: std::io::Error },
    #[error("scene: {0}")]
    Scene(#[from] SceneError),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { path: path.into(), message: message.into() }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    /// Conformal factor `phi(x, y)` with `g = exp(2 phi) |dx|^2`.
    pub phi: String,
    /// Radius of the disk chart centred at the origin; the whole plane if absent.
    pub chart_radius: Option<f64>,
    pub chart_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub center: [f64; 2],
    pub radius: f64,
    /// `[a_m, b_m]` for `m = 1, 2, ...`.
    #[serde(default)]
    pub coeffs: Vec<[f64; 2]>,
}

impl CurveSpec {
    pub fn to_curve<T: Real>(&self) -> BoundaryCurve<T> {
        BoundaryCurve::with_coeffs(
            Vec2::new(lit(self.center[0]), lit(self.center[1])),
            lit(self.radius),
            self.coeffs.iter().map(|c| (lit(c[0]), lit(c[1]))).collect(),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub event_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSpec {
    pub max_time: Option<f64>,
    pub max_reflections: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub tangency: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: Option<usize>,
    pub ntheta: Option<usize>,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FrontSource {
    /// Chart circle with outward normals.
    Circle { center: [f64; 2], radius: f64 },
    /// Wavefront of a point source at distance `t0`.
    Point { point: [f64; 2], t0: f64, angles: Option<[f64; 2]> },
    /// Front orthogonal to the normal geodesics of an obstacle arc.
    Orthogonal { obstacle: usize, arc: [f64; 2], lambda: f64 },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontsSpec {
    pub source: FrontSource,
    pub samples: Option<usize>,
    /// Successive propagation times.
    #[serde(default)]
    pub steps: Vec<f64>,
    /// Reflect the last front off the obstacle it meets.
    #[serde(default)]
    pub reflect: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSpec {
    pub h: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugacySpec {
    pub samples: Option<usize>,
    pub t_max: Option<f64>,
    /// Centre offset used when resampling the obstacles for scene L.
    pub shift: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItinerarySpec {
    /// `[x, theta]` boundary launches; the spectrum grid if empty.
    #[serde(default)]
    pub launches: Vec<[f64; 2]>,
    pub length: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSpec {
    pub obstacle: Option<usize>,
    pub harmonic: Option<usize>,
    pub eps: Option<Vec<f64>>,
}

/// The parsed document. Every table except `metric`, `bounding` and
/// `obstacles` may be omitted.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub metric: Option<MetricSpec>,
    pub bounding: Option<CurveSpec>,
    #[serde(default)]
    pub obstacles: Vec<CurveSpec>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub caps: CapsSpec,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub output: OutputSpec,
    pub fronts: Option<FrontsSpec>,
    #[serde(default)]
    pub gradcheck: GradcheckSpec,
    #[serde(default)]
    pub conjugacy: ConjugacySpec,
    #[serde(default)]
    pub itinerary: ItinerarySpec,
    #[serde(default)]
    pub uniqueness: UniquenessSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<(usize, usize)>,
    pub max_time: Option<f64>,
    pub max_reflections: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

fn positive(path: &str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(path, format!("must be a positive number, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(path, "must be finite"))
    }
}

fn check_curve(path: &str, c: &CurveSpec) -> Result<(), ScenarioError> {
    finite(&format!("{path}.center"), c.center[0])?;
    finite(&format!("{path}.center"), c.center[1])?;
    positive(&format!("{path}.radius"), c.radius)?;
    for (m, ab) in c.coeffs.iter().enumerate() {
        finite(&format!("{path}.coeffs[{m}]"), ab[0])?;
        finite(&format!("{path}.coeffs[{m}]"), ab[1])?;
    }
    Ok(())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| locate(text, s.start)).unwrap_or_default();
            invalid(if path.is_empty() { "scenario".to_string() } else { path }, e.message().to_string())
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(file: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(file).map_err(|source| ScenarioError::Io { file: file.into(), source })?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let metric = self.metric.as_ref().ok_or_else(|| invalid("metric", "missing table"))?;
        crate::metric_dsl::parse_expr(&metric.phi).map_err(|e| invalid("metric.phi", e.to_string()))?;
        if let Some(r) = metric.chart_radius {
            positive("metric.chart_radius", r)?;
        }
        if let Some(m) = metric.chart_margin {
            if !(m.is_finite() && m >= 0.0) {
                return Err(invalid("metric.chart_margin", "must be non-negative"));
            }
        }
        check_curve("bounding", self.bounding.as_ref().ok_or_else(|| invalid("bounding", "missing table"))?)?;
        for (i, c) in self.obstacles.iter().enumerate() {
            check_curve(&format!("obstacles[{i}]"), c)?;
        }
        let i = &self.integrator;
        for (name, v) in [("abs_tol", i.abs_tol), ("rel_tol", i.rel_tol), ("max_step", i.max_step), ("event_tol", i.event_tol)] {
            if let Some(v) = v {
                positive(&format!("integrator.{name}"), v)?;
            }
        }
        if let Some(t) = self.caps.max_time {
            positive("caps.max_time", t)?;
        }
        if let Some(t) = self.geometry.tangency {
            positive("geometry.tangency", t)?;
        }
        if self.geometry.samples.is_some_and(|n| n < 8) {
            return Err(invalid("geometry.samples", "must be at least 8"));
        }
        if self.grid.nx == Some(0) || self.grid.ntheta == Some(0) {
            return Err(invalid("grid", "sizes must be positive"));
        }
        if let Some(d) = self.grid.delta {
            if !(d > 0.0 && d < std::f64::consts::FRAC_PI_2) {
                return Err(invalid("grid.delta", "must lie in (0, pi/2)"));
            }
        }
        if let Some(f) = &self.fronts {
            if f.samples.is_some_and(|n| n < crate::fronts::STENCIL) {
                return Err(invalid("fronts.samples", format!("must be at least {}", crate::fronts::STENCIL)));
            }
            for (k, &t) in f.steps.iter().enumerate() {
                positive(&format!("fronts.steps[{k}]"), t)?;
            }
            if let FrontSource::Orthogonal { obstacle, .. } = f.source {
                if obstacle >= self.obstacles.len() {
                    return Err(invalid("fronts.source.obstacle", format!("no obstacle {obstacle}")));
                }
            }
        }
        if let Some(h) = self.gradcheck.h {
            positive("gradcheck.h", h)?;
        }
        if let Some(t) = self.conjugacy.t_max {
            positive("conjugacy.t_max", t)?;
        }
        if let Some(o) = self.uniqueness.obstacle {
            if o >= self.obstacles.len() {
                return Err(invalid("uniqueness.obstacle", format!("no obstacle {o}")));
            }
        }
        if self.uniqueness.harmonic == Some(0) {
            return Err(invalid("uniqueness.harmonic", "must be at least 1"));
        }
        Ok(())
    }

    /// Applies command-line overrides, re-checking the values they touch.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ScenarioError> {
        if let Some((nx, nt)) = o.grid {
            if nx == 0 || nt == 0 {
                return Err(invalid("--grid", "sizes must be positive"));
            }
            self.grid.nx = Some(nx);
            self.grid.ntheta = Some(nt);
        }
        if let Some(t) = o.max_time {
            self.caps.max_time = Some(positive("--max-time", t)?);
        }
        if let Some(n) = o.max_reflections {
            self.caps.max_reflections = Some(n);
        }
        if let Some(t) = o.tol {
            let t = positive("--tol", t)?;
            self.integrator.abs_tol = Some(t);
            self.integrator.rel_tol = Some(t * 10.0);
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        Ok(())
    }

    fn metric_spec(&self) -> &MetricSpec {
        self.metric.as_ref().expect("validated scenario has a metric")
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(defaults::SEED)
    }

    pub fn chart<T: Real>(&self) -> Result<MetricChart<T>, ScenarioError> {
        let m = self.metric_spec();
        let domain = match m.chart_radius {
            None => ChartDomain::Plane,
            Some(r) => ChartDomain::Disk {
                center: Vec2::zero(),
                radius: lit(r),
                margin: lit(m.chart_margin.unwrap_or(defaults::CHART_MARGIN)),
            },
        };
        MetricChart::from_source(&m.phi, domain).map_err(|e| invalid("metric.phi", e.to_string()))
    }

    pub fn scene_options<T: Real>(&self) -> SceneOptions<T> {
        SceneOptions {
            samples: self.geometry.samples.unwrap_or(defaults::CURVE_SAMPLES),
            seed: self.seed(),
            tangency: lit(self.geometry.tangency.unwrap_or(defaults::TANGENCY)),
            ..SceneOptions::default()
        }
    }

    /// Validated scene; geometric failures name the offending curve.
    pub fn scene<T: Real>(&self) -> Result<Scene<T>, ScenarioError> {
        let bounding = self.bounding.as_ref().expect("validated scenario has a bounding curve").to_curve();
        let obstacles = self.obstacles.iter().map(CurveSpec::to_curve).collect();
        Ok(Scene::new(self.chart()?, bounding, obstacles, &self.scene_options())?)
    }

    pub fn integrator<T: Real>(&self) -> IntegratorOptions<T> {
        let i = &self.integrator;
        IntegratorOptions {
            abs_tol: lit(i.abs_tol.unwrap_or(defaults::ABS_TOL)),
            rel_tol: lit(i.rel_tol.unwrap_or(defaults::REL_TOL)),
            max_step: lit(i.max_step.unwrap_or(defaults::MAX_STEP)),
            event_tol: lit(i.event_tol.unwrap_or(defaults::EVENT_TOL)),
            ..IntegratorOptions::default()
        }
    }

    pub fn caps<T: Real>(&self) -> Caps<T> {
        Caps {
            max_time: lit(self.caps.max_time.unwrap_or(defaults::MAX_TIME)),
            max_reflections: self.caps.max_reflections.unwrap_or(defaults::MAX_REFLECTIONS),
        }
    }

    pub fn grid<T: Real>(&self) -> SpectrumGrid<T> {
        SpectrumGrid {
            nx: self.grid.nx.unwrap_or(defaults::GRID_NX),
            ntheta: self.grid.ntheta.unwrap_or(defaults::GRID_NTHETA),
            delta: lit(self.grid.delta.unwrap_or(defaults::GRID_DELTA)),
        }
    }

    /// Output directory: the override, else the file's `output.dir`, else `out`.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf).or_else(|| self.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Dotted key path of the table or key around byte `offset`.
fn locate(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let mut table = String::new();
    for line in before.lines() {
        let l = line.trim();
        if l.starts_with('[') {
            table = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
    }
    let line = text[before.rfind('\n').map_or(0, |i| i + 1)..].lines().next().unwrap_or("").trim();
    let key = line.split('=').next().filter(|_| line.contains('=')).map(str::trim).unwrap_or("");
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key.to_string(),
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}
