//! The subcommands. Each writes its data files and a `manifest.json` into the output
//! directory; the manifest is written before any solver runs and rewritten at the end.

use std::path::{Path, PathBuf};

use pointscat_core::blasso::DiscreteMeasure;
use pointscat_core::bounds::{
    general_bound_basic, general_bound_pairwise, linearization_gap, row_seed, sweep_grid, sweep_row, two_scatterer_bound,
};
use pointscat_core::kernel::{advisory, b_estimates, check_regions, KernelProfile, RegionGrid};
use pointscat_core::matching::{match_measures, MatchReport};
use pointscat_core::refine::{grid_initialization, objective_foldy, run_pipeline};
use pointscat_core::sampling::{add_noise, build_plan, relative_noise_level, MeasurementPlan, ObservationVector};
use pointscat_core::scatter::{apply_foldy_operator, ScattererConfig};
use pointscat_core::{Complex64, Dim};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Loaded, Run};
use crate::error::CliError;
use crate::formats::{
    complex_pair, read_json, sweep_csv, to_complex, trace_csv, write_atomic, write_json, BoundFile, MatchFile,
    MeasureFile, ObservationsFile, PlanFile, RefineFile,
};

/// Stream index of the noise seed, far from any sweep row index.
const NOISE_STREAM: usize = 1 << 40;

pub fn noise_seed(seed: u64) -> u64 {
    row_seed(seed, NOISE_STREAM)
}

/// Bookkeeping shared by all commands: output directory, manifest, files written.
pub struct Session {
    out: PathBuf,
    command: &'static str,
    config: Option<ExperimentConfig>,
    extra: Value,
    outputs: Vec<String>,
}

impl Session {
    pub fn start(out: &Path, command: &'static str, config: Option<&ExperimentConfig>, extra: Value) -> Result<Self, CliError> {
        let s = Session { out: out.to_path_buf(), command, config: config.cloned(), extra, outputs: Vec::new() };
        s.write_manifest("running", None)?;
        Ok(s)
    }

    fn write_manifest(&self, status: &str, error: Option<&str>) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "pointscat",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "status": status,
            "error": error,
            "config": self.config,
            "resolved": self.extra,
            "outputs": self.outputs,
        });
        write_json(&self.out.join("manifest.json"), &manifest)
    }

    fn path(&mut self, rel: &str) -> PathBuf {
        self.outputs.push(rel.to_string());
        self.out.join(rel)
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let p = self.path(rel);
        write_json(&p, value)
    }

    pub fn bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.path(rel);
        write_atomic(&p, bytes)
    }

    /// Records the outcome in the manifest and passes the result through.
    pub fn finish<T>(self, result: Result<T, CliError>) -> Result<T, CliError> {
        match &result {
            Ok(_) => self.write_manifest("ok", None)?,
            Err(e) => self.write_manifest("failed", Some(&e.to_string()))?,
        }
        result
    }
}

fn rel(label: &str, file: &str) -> String {
    if label.is_empty() {
        file.to_string()
    } else {
        format!("{label}/{file}")
    }
}

/// Resolved solver settings, recorded in manifests.
fn resolved(cfg: &ExperimentConfig) -> Value {
    let mut v = json!({ "noise_seed": noise_seed(cfg.seed), "match_radius": cfg.match_radius() });
    if let Ok(c) = cfg.unit_scale() {
        v["unit_scale"] = json!(c);
        v["noise_std_normalized"] = json!(cfg.noise_std * c);
    }
    if let Ok(o) = cfg.sfw_options() {
        v["sfw"] = json!({
            "lambda_b": o.lambda_b, "epsilon": o.epsilon, "grid_points_per_axis": o.grid_points_per_axis,
            "max_outer_iters": o.max_outer_iters, "lasso_tol": o.lasso_tol, "lasso_max_iters": o.lasso_max_iters,
            "slide_tol": o.slide_tol, "slide_max_iters": o.slide_max_iters, "prune_threshold": o.prune_threshold,
            "merge_radius": o.merge_radius, "ascent_starts": o.ascent_starts,
        });
    }
    if let Ok(o) = cfg.refine_options() {
        v["refine"] = json!({
            "lambda_f": o.lambda_f, "grad_tol": o.grad_tol, "max_iters": o.max_iters,
            "amplitude_floor": o.amplitude_floor, "collision_radius": o.collision_radius,
        });
    }
    v
}

/// Plan and observations for one run, simulated from its truth.
pub struct Simulated {
    pub plan: MeasurementPlan,
    pub clean: ObservationVector,
    pub noisy: ObservationVector,
}

pub fn simulate_run(cfg: &ExperimentConfig, truth: &ScattererConfig) -> Result<Simulated, CliError> {
    let plan = build_plan(cfg.measurements()?, cfg.kappa, cfg.dimension()?, cfg.seed)?;
    let clean = ObservationVector::clean(apply_foldy_operator(truth, &plan)?);
    let noisy = add_noise(&clean, cfg.effective_noise()?, noise_seed(cfg.seed))?;
    Ok(Simulated { plan, clean, noisy })
}

#[derive(Serialize)]
pub struct LinearizationFile {
    /// `‖Φ^f a − Φ^b a‖₂`, normalized units.
    pub error: f64,
    pub foldy_norm: f64,
    pub born_norm: f64,
    /// `error / foldy_norm`.
    pub relative_error: f64,
    pub min_separation: Option<f64>,
    /// Sup-norm bounds on one far-field sample; each also bounds `error`.
    pub two_scatterer_bound: Option<BoundFile>,
    pub general_bound: Option<BoundFile>,
    pub pairwise_bound: Option<BoundFile>,
}

pub fn linearization_report(truth: &ScattererConfig, plan: &MeasurementPlan) -> Result<LinearizationFile, CliError> {
    let g = linearization_gap(truth, plan)?;
    let k = plan.kappa();
    let many = truth.len() >= 2;
    Ok(LinearizationFile {
        error: g.error,
        foldy_norm: g.foldy_norm,
        born_norm: g.born_norm,
        relative_error: g.error / g.foldy_norm,
        min_separation: many.then(|| truth.min_separation()),
        two_scatterer_bound: (truth.len() == 2).then(|| two_scatterer_bound(truth, k)).transpose()?.map(Into::into),
        general_bound: many.then(|| general_bound_basic(truth, k)).transpose()?.map(Into::into),
        pairwise_bound: many.then(|| general_bound_pairwise(truth, k)).transpose()?.map(Into::into),
    })
}

fn observations_file(s: &Simulated) -> ObservationsFile {
    ObservationsFile {
        clean: s.clean.values.iter().map(|&z| complex_pair(z)).collect(),
        noisy: s.noisy.values.iter().map(|&z| complex_pair(z)).collect(),
        noise_std: s.noisy.noise_std,
        relative_noise_level: relative_noise_level(&s.clean, &s.noisy),
    }
}

fn label_or_run(label: &str) -> &str {
    if label.is_empty() {
        "run"
    } else {
        label
    }
}

pub fn simulate(loaded: &Loaded, out: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let runs = cfg.runs(&loaded.base_dir)?;
    cfg.measurements()?;
    let mut session = Session::start(out, "simulate", Some(cfg), resolved(cfg))?;
    let result = (|| {
        for Run { label, truth } in &runs {
            let sim = simulate_run(cfg, truth)?;
            let lin = linearization_report(truth, &sim.plan)?;
            let obs = observations_file(&sim);
            println!(
                "{}: linearization relative error {:.1}%, relative noise level {:.1}%",
                label_or_run(label),
                100.0 * lin.relative_error,
                100.0 * obs.relative_noise_level
            );
            session.json(&rel(label, "plan.json"), &PlanFile::from_plan(&sim.plan))?;
            session.json(&rel(label, "truth.json"), &MeasureFile::from_measure(&truth.to_measure()))?;
            session.json(&rel(label, "observations.json"), &obs)?;
            session.json(&rel(label, "linearization.json"), &lin)?;
        }
        Ok(())
    })();
    session.finish(result)
}

/// Inputs of a recovery: plan, data and, when known, the truth.
struct Problem {
    label: String,
    plan: MeasurementPlan,
    y: Vec<Complex64>,
    truth: Option<DiscreteMeasure>,
}

fn problems(loaded: &Loaded, data: Option<&Path>) -> Result<Vec<Problem>, CliError> {
    let cfg = &loaded.config;
    match data {
        None => cfg
            .runs(&loaded.base_dir)?
            .into_iter()
            .map(|r| {
                let sim = simulate_run(cfg, &r.truth)?;
                Ok(Problem { label: r.label, plan: sim.plan, y: sim.noisy.values, truth: Some(r.truth.to_measure()) })
            })
            .collect(),
        Some(dir) => {
            let labels: Vec<String> = match &cfg.truth {
                Some(_) => cfg.runs(&loaded.base_dir)?.into_iter().map(|r| r.label).collect(),
                None => vec![String::new()],
            };
            labels
                .into_iter()
                .map(|label| {
                    let d = dir.join(&label);
                    let plan = read_json::<PlanFile>(&d.join("plan.json"))?.to_plan()?;
                    let obs: ObservationsFile = read_json(&d.join("observations.json"))?;
                    if obs.noisy.len() != plan.m() {
                        return Err(CliError::Config(format!("{}: observation count differs from plan", d.display())));
                    }
                    let truth_path = d.join("truth.json");
                    let truth = if truth_path.exists() {
                        Some(read_json::<MeasureFile>(&truth_path)?.to_measure()?)
                    } else {
                        None
                    };
                    Ok(Problem { label, plan, y: to_complex(&obs.noisy), truth })
                })
                .collect()
        }
    }
}

/// `‖Φ^f μ − y‖ / ‖y‖`.
pub fn foldy_relative_residual(m: &DiscreteMeasure, plan: &MeasurementPlan, y: &[Complex64]) -> Result<f64, CliError> {
    let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let r = if m.is_empty() { ny } else { (2.0 * objective_foldy(&m.amplitudes(), &m.locations(), plan, y, 0.0)?).sqrt() };
    Ok(r / ny)
}

fn report_match(truth: &DiscreteMeasure, est: &DiscreteMeasure, p: &Problem, radius: f64) -> Result<MatchReport, CliError> {
    Ok(match_measures(truth, est, radius)?.with_residual(foldy_relative_residual(est, &p.plan, &p.y)?))
}

fn ensure_dims(cfg: &ExperimentConfig, p: &Problem) -> Result<(), CliError> {
    if p.plan.dim() != cfg.dimension()? {
        return Err(CliError::Config("plan dimension differs from `dim`".into()));
    }
    Ok(())
}

#[derive(Serialize)]
pub struct RecoverySummary {
    pub linear_atoms: usize,
    pub nonlinear_atoms: usize,
    /// `J^f` of each estimate (normalized units, `λ^f` as resolved).
    pub linear_objective_foldy: f64,
    pub nonlinear_objective_foldy: f64,
    /// `‖Φ^f μ − y‖ / ‖y‖` of each estimate.
    pub linear_relative_residual: f64,
    pub nonlinear_relative_residual: f64,
    pub sfw_converged: bool,
    pub refine: Option<RefineFile>,
}

pub fn recover(loaded: &Loaded, data: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let (sfw, refine, domain) = (cfg.sfw_options()?, cfg.refine_options()?, cfg.domain()?);
    let problems = problems(loaded, data)?;
    let mut session = Session::start(out, "recover", Some(cfg), resolved(cfg))?;
    let result = (|| {
        for p in &problems {
            ensure_dims(cfg, p)?;
            let run = run_pipeline(&p.plan, &p.y, &domain, &sfw, &refine)?;
            let j = |m: &DiscreteMeasure| -> Result<f64, CliError> {
                if m.is_empty() {
                    Ok(0.5 * p.y.iter().map(|z| z.norm_sqr()).sum::<f64>())
                } else {
                    Ok(objective_foldy(&m.amplitudes(), &m.locations(), &p.plan, &p.y, refine.lambda_f)?)
                }
            };
            let summary = RecoverySummary {
                linear_atoms: run.linear.len(),
                nonlinear_atoms: run.nonlinear.len(),
                linear_objective_foldy: j(&run.linear)?,
                nonlinear_objective_foldy: j(&run.nonlinear)?,
                linear_relative_residual: foldy_relative_residual(&run.linear, &p.plan, &p.y)?,
                nonlinear_relative_residual: foldy_relative_residual(&run.nonlinear, &p.plan, &p.y)?,
                sfw_converged: run.sfw_trace.converged,
                refine: run.refine_report.as_ref().map(Into::into),
            };
            println!(
                "{}: linear {} atoms (residual {:.3e}), nonlinear {} atoms (residual {:.3e})",
                label_or_run(&p.label),
                summary.linear_atoms,
                summary.linear_relative_residual,
                summary.nonlinear_atoms,
                summary.nonlinear_relative_residual
            );
            session.json(&rel(&p.label, "linear.json"), &MeasureFile::from_measure(&run.linear))?;
            session.json(&rel(&p.label, "nonlinear.json"), &MeasureFile::from_measure(&run.nonlinear))?;
            session.bytes(&rel(&p.label, "sfw_trace.csv"), &trace_csv(&run.sfw_trace)?)?;
            session.json(&rel(&p.label, "summary.json"), &summary)?;
            if let Some(truth) = &p.truth {
                let radius = cfg.match_radius();
                let lin = report_match(truth, &run.linear, p, radius)?;
                let nl = report_match(truth, &run.nonlinear, p, radius)?;
                session.json(&rel(&p.label, "match.json"), &json!({ "linear": MatchFile::from(&lin), "nonlinear": MatchFile::from(&nl) }))?;
            }
        }
        Ok(())
    })();
    session.finish(result)
}

pub fn grid_init(loaded: &Loaded, data: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let (refine, domain) = (cfg.refine_options()?, cfg.domain()?);
    let sides = cfg.grid_init.clone().unwrap_or_default().sides;
    let problems = problems(loaded, data)?;
    let mut session = Session::start(out, "grid-init", Some(cfg), resolved(cfg))?;
    let result = (|| {
        for p in &problems {
            ensure_dims(cfg, p)?;
            for &side in &sides {
                let r = grid_initialization(&p.plan, &p.y, side, &domain, &refine)?;
                let dir = rel(&p.label, &format!("grid_{side}"));
                print!("{}: {side}×{side} grid → {} atoms", label_or_run(&p.label), r.measure.len());
                session.json(&format!("{dir}/estimate.json"), &MeasureFile::from_measure(&r.measure))?;
                session.json(&format!("{dir}/refine.json"), &RefineFile::from(&r.report))?;
                if let Some(truth) = &p.truth {
                    let m = report_match(truth, &r.measure, p, cfg.match_radius())?;
                    print!(", {} truth atoms unmatched", m.unmatched_truth);
                    session.json(&format!("{dir}/match.json"), &MatchFile::from(&m))?;
                }
                println!();
            }
        }
        Ok(())
    })();
    session.finish(result)
}

pub fn bounds_sweep(loaded: &Loaded, out: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let sweep = cfg.sweep.clone().ok_or_else(|| CliError::Config("bounds-sweep needs a `sweep` section".into()))?;
    let deltas = sweep.deltas.values();
    let mut session = Session::start(out, "bounds-sweep", Some(cfg), json!({ "deltas": deltas }))?;
    let result = (|| {
        let grid = sweep_grid(&sweep.kappas, &deltas);
        let rows = grid
            .par_iter()
            .enumerate()
            .map(|(i, &(k, d))| sweep_row(k, d, sweep.trials, sweep.directions, row_seed(cfg.seed, i)))
            .collect::<Result<Vec<_>, _>>()?;
        let dominated = rows.iter().filter(|r| r.alpha < 1.0).all(|r| r.empirical_mean <= r.bound);
        println!("{} rows; empirical error below the bound on every row with alpha < 1: {dominated}", rows.len());
        session.bytes("sweep.csv", &sweep_csv(&rows)?)
    })();
    session.finish(result)
}

pub fn kernel_check(loaded: &Loaded, out: &Path) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let k = cfg.kernel.clone().unwrap_or_default();
    let dim: Dim = cfg.dimension()?;
    let mut session = Session::start(out, "kernel-check", Some(cfg), Value::Null)?;
    let result = (|| {
        let profile = KernelProfile::new(dim, cfg.kappa)?;
        let r = check_regions(&profile, k.s_max, RegionGrid::default())?;
        let b = b_estimates(&profile, k.s_max, k.b_points)?;
        let adv = k.sparsity.map(|s| advisory(&profile, s, k.constant_sep, k.constant_m, k.rho_fail)).transpose()?;
        println!(
            "d = {}: near curvature min {:.4} (≥ 0.6), far value max {:.4} (≤ 0.93): {}",
            dim.get(),
            r.min_near_curvature,
            r.max_far_value,
            if r.passes { "pass" } else { "fail" }
        );
        let report = json!({
            "dim": dim.get(),
            "kappa": cfg.kappa,
            "regions": {
                "min_near_curvature": r.min_near_curvature,
                "max_far_value": r.max_far_value,
                "far_argmax": r.far_argmax,
                "near_radius": r.near_radius,
                "far_start": r.far_start,
                "s_max": r.s_max,
                "grid": { "near_radii": r.grid.near_radii, "near_directions": r.grid.near_directions, "far_points": r.grid.far_points },
                "passes": r.passes,
            },
            "b_estimates": { "b00": b.b00, "b10": b.b10, "b11": b.b11 },
            "advisory": adv.map(|a| json!({ "delta_min": a.delta_min, "m_min_stable": a.m_min_stable, "m_min_support": a.m_min_support })),
        });
        session.json("kernel_check.json", &report)
    })();
    session.finish(result)
}

pub fn match_files(truth: &Path, estimate: &Path, radius: f64, out: &Path) -> Result<(), CliError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CliError::Config("radius must be positive".into()));
    }
    let t = read_json::<MeasureFile>(truth)?.to_measure()?;
    let e = read_json::<MeasureFile>(estimate)?.to_measure()?;
    let extra = json!({ "truth": truth.display().to_string(), "estimate": estimate.display().to_string(), "radius": radius });
    let mut session = Session::start(out, "match", None, extra)?;
    let result = (|| {
        let r = match_measures(&t, &e, radius)?;
        println!(
            "{} pairs, position rmse {:?}, amplitude rmse {:?}, unmatched truth {}, unmatched estimate {}",
            r.pairing.len(),
            r.position_rmse,
            r.amplitude_rmse,
            r.unmatched_truth,
            r.unmatched_estimate
        );
        session.json("match.json", &MatchFile::from(&r))
    })();
    session.finish(result)
}
