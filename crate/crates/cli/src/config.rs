//! Experiment configuration (JSON, schema version 1). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use pointscat_core::blasso::SfwOptions;
use pointscat_core::refine::RefineOptions;
use pointscat_core::scatter::{raw_sample_scale, ScattererConfig};
use pointscat_core::{BoxDomain, Complex64, Dim, Point};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::formats::{point, MeasureFile};

pub const SCHEMA_VERSION: u32 = 1;

/// How `lambda_b`, `lambda_f` and `noise_std` are scaled.
///
/// `raw` values refer to the unnormalized far-field samples `e^{-iω·x}` (the scale of the
/// published hyperparameters) and are multiplied by `c²`, resp. `c`, with
/// `c = κ²/(4π√m)`. `normalized` values are passed to the solvers unchanged.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, Default, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Raw,
    Normalized,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InlineTruth {
    pub amplitudes: Vec<[f64; 2]>,
    pub locations: Vec<Vec<f64>>,
}

/// Two scatterers at `(∓Δ/2, 0, …)`, one run per separation.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairTruth {
    pub separations: Vec<f64>,
    #[serde(default = "unit_pair")]
    pub amplitudes: [[f64; 2]; 2],
}

fn unit_pair() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [1.0, 0.0]]
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    Atoms(InlineTruth),
    /// A measure file, relative to the config file's directory.
    File(PathBuf),
    Pair(PairTruth),
}

#[derive(Serialize, Deserialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SfwConfig {
    pub epsilon: Option<f64>,
    pub grid_points_per_axis: Option<usize>,
    pub max_outer_iters: Option<usize>,
    pub lasso_tol: Option<f64>,
    pub lasso_max_iters: Option<usize>,
    pub slide_tol: Option<f64>,
    pub slide_max_iters: Option<usize>,
    pub prune_threshold: Option<f64>,
    pub merge_radius: Option<f64>,
    pub ascent_starts: Option<usize>,
}

#[derive(Serialize, Deserialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    pub grad_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub amplitude_floor: Option<f64>,
    pub collision_radius: Option<f64>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
pub enum DeltaGrid {
    List(Vec<f64>),
    Log(LogGrid),
}

impl DeltaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            DeltaGrid::List(v) => v.clone(),
            DeltaGrid::Log(g) if g.points == 1 => vec![g.min],
            DeltaGrid::Log(g) => {
                let (lo, hi) = (g.min.ln(), g.max.ln());
                (0..g.points).map(|i| (lo + (hi - lo) * i as f64 / (g.points - 1) as f64).exp()).collect()
            }
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kappas: Vec<f64>,
    pub deltas: DeltaGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_trials() -> usize {
    20
}

fn default_directions() -> usize {
    pointscat_core::bounds::DEFAULT_DIRECTIONS
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_b_points")]
    pub b_points: usize,
    /// Sparsity for the advisory; no advisory without it.
    pub sparsity: Option<usize>,
    #[serde(default = "one")]
    pub constant_sep: f64,
    #[serde(default = "one")]
    pub constant_m: f64,
    #[serde(default = "default_rho_fail")]
    pub rho_fail: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            s_max: default_s_max(),
            b_points: default_b_points(),
            sparsity: None,
            constant_sep: 1.0,
            constant_m: 1.0,
            rho_fail: default_rho_fail(),
        }
    }
}

fn default_s_max() -> f64 {
    200.0
}
fn default_b_points() -> usize {
    2000
}
fn one() -> f64 {
    1.0
}
fn default_rho_fail() -> f64 {
    0.1
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridInitConfig {
    #[serde(default = "default_sides")]
    pub sides: Vec<usize>,
}

impl Default for GridInitConfig {
    fn default() -> Self {
        GridInitConfig { sides: default_sides() }
    }
}

fn default_sides() -> Vec<usize> {
    vec![4, 5]
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dim: usize,
    /// Side `r` of the domain box `(−r/2, r/2)^d`.
    pub domain_side: f64,
    pub kappa: f64,
    pub m: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub units: Units,
    pub truth: Option<TruthSpec>,
    #[serde(default)]
    pub noise_std: f64,
    pub lambda_b: Option<f64>,
    pub lambda_f: Option<f64>,
    #[serde(default)]
    pub sfw: SfwConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    /// Matching cutoff; default `0.5/κ`.
    pub match_radius: Option<f64>,
    pub sweep: Option<SweepConfig>,
    pub kernel: Option<KernelConfig>,
    pub grid_init: Option<GridInitConfig>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

/// A loaded configuration and the directory relative paths resolve against.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl Loaded {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config = ExperimentConfig::parse(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base_dir })
    }
}

/// One ground truth with the subdirectory its outputs go to (empty for single runs).
#[derive(Clone, Debug)]
pub struct Run {
    pub label: String,
    pub truth: ScattererConfig,
}

impl ExperimentConfig {
    /// Parses and validates; serde errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| match e {
            CliError::Config(m) => m,
            other => other.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema_version {}, expected {SCHEMA_VERSION}", self.schema_version)));
        }
        self.dimension()?;
        positive("domain_side", self.domain_side)?;
        positive("kappa", self.kappa)?;
        if self.m == Some(0) {
            return Err(bad("m must be at least 1"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(bad("noise_std must be nonnegative"));
        }
        if let Some(v) = self.lambda_b {
            positive("lambda_b", v)?;
        }
        if let Some(v) = self.lambda_f {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad("lambda_f must be nonnegative"));
            }
        }
        if let Some(r) = self.match_radius {
            positive("match_radius", r)?;
        }
        if let Some(s) = &self.sweep {
            if s.kappas.is_empty() || s.trials == 0 || s.directions == 0 {
                return Err(bad("sweep needs kappas, trials ≥ 1 and directions ≥ 1"));
            }
            for &k in &s.kappas {
                positive("sweep kappa", k)?;
            }
            if let DeltaGrid::Log(g) = &s.deltas {
                if g.points == 0 || !(g.min > 0.0 && g.max >= g.min) {
                    return Err(bad("log delta grid needs 0 < min ≤ max and points ≥ 1"));
                }
            }
            let deltas = s.deltas.values();
            if deltas.is_empty() {
                return Err(bad("sweep needs at least one delta"));
            }
            for d in deltas {
                positive("sweep delta", d)?;
            }
        }
        if let Some(g) = &self.grid_init {
            if g.sides.iter().any(|&n| n < 2) {
                return Err(bad("grid_init sides must be at least 2"));
            }
        }
        if let Some(TruthSpec::Pair(p)) = &self.truth {
            if p.separations.is_empty() {
                return Err(bad("pair truth needs at least one separation"));
            }
            for &d in &p.separations {
                positive("separation", d)?;
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> Result<Dim, CliError> {
        Dim::new(self.dim).map_err(|_| bad(format!("dim must be 2 or 3, got {}", self.dim)))
    }

    pub fn domain(&self) -> Result<BoxDomain, CliError> {
        BoxDomain::new(self.dimension()?, self.domain_side).map_err(|e| bad(e.to_string()))
    }

    pub fn measurements(&self) -> Result<usize, CliError> {
        self.m.ok_or_else(|| bad("this command needs `m`"))
    }

    /// `c = κ²/(4π√m)`, or 1 in normalized units.
    pub fn unit_scale(&self) -> Result<f64, CliError> {
        Ok(match self.units {
            Units::Raw => raw_sample_scale(self.kappa, self.measurements()?),
            Units::Normalized => 1.0,
        })
    }

    pub fn effective_noise(&self) -> Result<f64, CliError> {
        Ok(self.noise_std * self.unit_scale()?)
    }

    pub fn sfw_options(&self) -> Result<SfwOptions, CliError> {
        let lambda = self.lambda_b.ok_or_else(|| bad("this command needs `lambda_b`"))?;
        let c = self.unit_scale()?;
        let mut o = SfwOptions::new(lambda * c * c);
        let s = &self.sfw;
        o.epsilon = s.epsilon.unwrap_or(o.epsilon);
        o.grid_points_per_axis = s.grid_points_per_axis.or(o.grid_points_per_axis);
        o.max_outer_iters = s.max_outer_iters.unwrap_or(o.max_outer_iters);
        o.lasso_tol = s.lasso_tol.unwrap_or(o.lasso_tol);
        o.lasso_max_iters = s.lasso_max_iters.unwrap_or(o.lasso_max_iters);
        o.slide_tol = s.slide_tol.unwrap_or(o.slide_tol);
        o.slide_max_iters = s.slide_max_iters.unwrap_or(o.slide_max_iters);
        o.prune_threshold = s.prune_threshold.or(o.prune_threshold);
        o.merge_radius = s.merge_radius.or(o.merge_radius);
        o.ascent_starts = s.ascent_starts.unwrap_or(o.ascent_starts);
        o.validate().map_err(|e| bad(e.to_string()))?;
        Ok(o)
    }

    pub fn refine_options(&self) -> Result<RefineOptions, CliError> {
        let lambda = self.lambda_f.ok_or_else(|| bad("this command needs `lambda_f`"))?;
        let c = self.unit_scale()?;
        let mut o = RefineOptions::new(lambda * c * c);
        let r = &self.refine;
        o.grad_tol = r.grad_tol.unwrap_or(o.grad_tol);
        o.max_iters = r.max_iters.unwrap_or(o.max_iters);
        o.amplitude_floor = r.amplitude_floor.unwrap_or(o.amplitude_floor);
        o.collision_radius = r.collision_radius.or(o.collision_radius);
        o.validate().map_err(|e| bad(e.to_string()))?;
        Ok(o)
    }

    pub fn match_radius(&self) -> f64 {
        self.match_radius.unwrap_or(0.5 / self.kappa)
    }

    /// The ground truths named by `truth`, checked against the domain.
    pub fn runs(&self, base_dir: &Path) -> Result<Vec<Run>, CliError> {
        let dim = self.dimension()?;
        let spec = self.truth.as_ref().ok_or_else(|| bad("this command needs `truth`"))?;
        let cplx = |z: &[f64; 2]| Complex64::new(z[0], z[1]);
        let make = |amps: Vec<Complex64>, locs: Vec<Point>| {
            ScattererConfig::new(dim, amps, locs).map_err(|e| bad(format!("truth: {e}")))
        };
        let runs = match spec {
            TruthSpec::Atoms(t) => {
                let locs = t.locations.iter().map(|c| point(dim, c)).collect::<Result<_, _>>()?;
                vec![Run { label: String::new(), truth: make(t.amplitudes.iter().map(cplx).collect(), locs)? }]
            }
            TruthSpec::File(p) => {
                let file: MeasureFile = crate::formats::read_json(&base_dir.join(p))?;
                let m = file.to_measure()?;
                if m.dim != dim {
                    return Err(bad("truth file dimension differs from `dim`"));
                }
                vec![Run { label: String::new(), truth: make(m.amplitudes(), m.locations())? }]
            }
            TruthSpec::Pair(p) => p
                .separations
                .iter()
                .map(|&d| {
                    let mut x1 = Point::ORIGIN;
                    let mut x2 = Point::ORIGIN;
                    x1.0[0] = -d / 2.0;
                    x2.0[0] = d / 2.0;
                    let truth = make(p.amplitudes.iter().map(cplx).collect(), vec![x1, x2])?;
                    let label = if p.separations.len() == 1 { String::new() } else { format!("delta_{d}") };
                    Ok(Run { label, truth })
                })
                .collect::<Result<_, CliError>>()?,
        };
        let domain = self.domain()?;
        for r in &runs {
            r.truth.check_domain(&domain).map_err(|e| bad(format!("truth: {e}")))?;
        }
        Ok(runs)
    }
}
