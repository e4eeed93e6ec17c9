//! On-disk JSON/CSV representations and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pointscat_core::blasso::SfwTrace;
use pointscat_core::bounds::{BoundReport, SweepRow};
use pointscat_core::matching::MatchReport;
use pointscat_core::refine::RefineReport;
use pointscat_core::sampling::MeasurementPlan;
use pointscat_core::scatter::{Atom, DirectionPair, DiscreteMeasure};
use pointscat_core::{Complex64, Dim, Point};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn coords(p: &Point, dim: Dim) -> Vec<f64> {
    p.coords(dim).to_vec()
}

pub fn point(dim: Dim, c: &[f64]) -> Result<Point, CliError> {
    Point::from_slice(dim, c).map_err(|e| CliError::Config(format!("bad coordinates {c:?}: {e}")))
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomFile {
    pub amplitude: [f64; 2],
    pub location: Vec<f64>,
}

/// A discrete measure: `{"dim": 2, "atoms": [{"amplitude": [re, im], "location": [x, y]}]}`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub dim: usize,
    pub atoms: Vec<AtomFile>,
}

impl MeasureFile {
    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        MeasureFile {
            dim: m.dim.get(),
            atoms: m
                .atoms
                .iter()
                .map(|a| AtomFile { amplitude: complex_pair(a.amplitude), location: coords(&a.location, m.dim) })
                .collect(),
        }
    }

    pub fn to_measure(&self) -> Result<DiscreteMeasure, CliError> {
        let dim = Dim::new(self.dim).map_err(|e| CliError::Config(e.to_string()))?;
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(Atom { amplitude: Complex64::new(a.amplitude[0], a.amplitude[1]), location: point(dim, &a.location)? })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(DiscreteMeasure { dim, atoms })
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub incident: Vec<f64>,
    pub observation: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub dim: usize,
    pub kappa: f64,
    pub seed: u64,
    pub frequencies: Vec<Vec<f64>>,
    pub pairs: Vec<PairFile>,
}

impl PlanFile {
    pub fn from_plan(plan: &MeasurementPlan) -> Self {
        let dim = plan.dim();
        PlanFile {
            dim: dim.get(),
            kappa: plan.kappa(),
            seed: plan.seed(),
            frequencies: plan.frequencies().iter().map(|w| coords(w, dim)).collect(),
            pairs: plan
                .pairs()
                .iter()
                .map(|p| PairFile { incident: coords(&p.incident, dim), observation: coords(&p.observation, dim) })
                .collect(),
        }
    }

    pub fn to_plan(&self) -> Result<MeasurementPlan, CliError> {
        let dim = Dim::new(self.dim).map_err(|e| CliError::Config(e.to_string()))?;
        let frequencies = self.frequencies.iter().map(|w| point(dim, w)).collect::<Result<_, _>>()?;
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                DirectionPair::new(point(dim, &p.incident)?, point(dim, &p.observation)?)
                    .map_err(|e| CliError::Config(format!("bad direction pair: {e}")))
            })
            .collect::<Result<_, _>>()?;
        MeasurementPlan::new(dim, self.kappa, self.seed, frequencies, pairs).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Observations in the normalized convention of the core (`c = κ²/(4π√m)` included).
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObservationsFile {
    pub clean: Vec<[f64; 2]>,
    pub noisy: Vec<[f64; 2]>,
    /// Per-component standard deviation of the added noise, normalized units.
    pub noise_std: f64,
    pub relative_noise_level: f64,
}

pub fn to_complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|z| Complex64::new(z[0], z[1])).collect()
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct BoundFile {
    pub alpha: f64,
    pub beta_abs: Option<f64>,
    /// `null` when `α ≥ 1`.
    pub bound: Option<f64>,
    pub valid: bool,
}

impl From<BoundReport> for BoundFile {
    fn from(r: BoundReport) -> Self {
        BoundFile { alpha: r.alpha, beta_abs: r.beta_abs, bound: r.bound.is_finite().then_some(r.bound), valid: r.valid }
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct MatchFile {
    pub pairing: Vec<(usize, usize)>,
    pub position_rmse: Option<f64>,
    pub amplitude_rmse: Option<f64>,
    pub unmatched_truth: usize,
    pub unmatched_estimate: usize,
    pub relative_residual: Option<f64>,
}

impl From<&MatchReport> for MatchFile {
    fn from(r: &MatchReport) -> Self {
        MatchFile {
            pairing: r.pairing.clone(),
            position_rmse: r.position_rmse,
            amplitude_rmse: r.amplitude_rmse,
            unmatched_truth: r.unmatched_truth,
            unmatched_estimate: r.unmatched_estimate,
            relative_residual: r.relative_residual,
        }
    }
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct RefineFile {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub grad_norm: Option<f64>,
    pub converged: bool,
    pub unchanged: bool,
    pub merged_atoms: usize,
    pub removed_atoms: usize,
}

impl From<&RefineReport> for RefineFile {
    fn from(r: &RefineReport) -> Self {
        RefineFile {
            initial_objective: r.initial_objective,
            final_objective: r.final_objective,
            iterations: r.iterations,
            grad_norm: r.grad_norm.is_finite().then_some(r.grad_norm),
            converged: r.converged,
            unchanged: r.unchanged,
            merged_atoms: r.merged_atoms,
            removed_atoms: r.removed_atoms,
        }
    }
}

pub fn trace_csv(trace: &SfwTrace) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "objective", "eta_max", "atoms"])?;
    for (i, r) in trace.records.iter().enumerate() {
        w.write_record([i.to_string(), r.objective.to_string(), r.eta_max.to_string(), r.atoms.to_string()])?;
    }
    w.into_inner().map_err(|e| CliError::Other(e.to_string()))
}

pub const SWEEP_HEADER: [&str; 6] = ["kappa", "delta", "empirical_mean", "bound", "alpha", "n_failures"];

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let bound = if r.bound.is_finite() { r.bound.to_string() } else { "inf".to_string() };
        w.write_record([
            r.kappa.to_string(),
            r.delta.to_string(),
            r.empirical_mean.to_string(),
            bound,
            r.alpha.to_string(),
            r.n_failures.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Other(e.to_string()))
}

/// Writes through a temporary file in the same directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
