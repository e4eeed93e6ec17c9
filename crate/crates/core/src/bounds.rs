//! Bounds on the linearization error `‖u∞ − u∞,b‖∞` and empirical counterparts.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Dim, Point};
use crate::sampling::{norm2, uniform_direction_plan, MeasurementPlan};
use crate::scatter::{apply_born_at, apply_foldy_operator, far_field_prefactor, green_at, phi_at, ScattererConfig};
use crate::{Error, Result};

/// Number of direction pairs used by the empirical error.
pub const DEFAULT_DIRECTIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub alpha: f64,
    /// `|β|`, only for the two-scatterer bound (where it equals `α`).
    pub beta_abs: Option<f64>,
    /// `+∞` when `α ≥ 1`.
    pub bound: f64,
    pub empirical_sup: Option<f64>,
    pub valid: bool,
}

impl BoundReport {
    fn new(alpha: f64, beta_abs: Option<f64>, bound: impl FnOnce(f64) -> f64) -> Self {
        let valid = alpha < 1.0;
        BoundReport {
            alpha,
            beta_abs,
            bound: if valid { bound(alpha) } else { f64::INFINITY },
            empirical_sup: None,
            valid,
        }
    }

    pub fn with_empirical(mut self, value: f64) -> Self {
        self.empirical_sup = Some(value);
        self
    }
}

/// Bound for exactly two scatterers, through `α = κ²|G(x₁, x₂)|√(|a₁||a₂|)`.
pub fn two_scatterer_bound(cfg: &ScattererConfig, kappa: f64) -> Result<BoundReport> {
    if cfg.len() != 2 {
        return Err(Error::invalid("the two-scatterer bound needs exactly two scatterers"));
    }
    let [a1, a2] = [cfg.amplitudes()[0].norm(), cfg.amplitudes()[1].norm()];
    let t = cfg.locations()[0].dist(&cfg.locations()[1]);
    let geo = (a1 * a2).sqrt();
    let alpha = kappa * kappa * green_at(t, kappa, cfg.dim()).norm() * geo;
    Ok(BoundReport::new(alpha, Some(alpha), |al| {
        far_field_prefactor(kappa) * (2.0 * al / (1.0 - al * al)) * (al * (a1 + a2) / 2.0 + geo)
    }))
}

fn check_general(cfg: &ScattererConfig) -> Result<()> {
    if cfg.len() < 2 {
        return Err(Error::invalid("the general bounds need at least two scatterers"));
    }
    Ok(())
}

/// `α = κ² φ(Δ) max_i ‖a_{−i}‖₁`.
fn general_alpha(cfg: &ScattererConfig, kappa: f64) -> f64 {
    let mods: Vec<f64> = cfg.amplitudes().iter().map(|a| a.norm()).collect();
    let total: f64 = mods.iter().sum();
    let max_rest = mods.iter().map(|m| total - m).fold(0.0, f64::max);
    kappa * kappa * phi_at(cfg.min_separation(), kappa, cfg.dim()) * max_rest
}

fn l1(cfg: &ScattererConfig) -> f64 {
    cfg.amplitudes().iter().map(|a| a.norm()).sum()
}

/// `(κ²/4π) ‖a‖₁ α/(1 − α)`.
pub fn general_bound_basic(cfg: &ScattererConfig, kappa: f64) -> Result<BoundReport> {
    check_general(cfg)?;
    let alpha = general_alpha(cfg, kappa);
    Ok(BoundReport::new(alpha, None, |al| far_field_prefactor(kappa) * l1(cfg) * al / (1.0 - al)))
}

/// `(κ²/4π) (‖a‖₁ α²/(1 − α) + 2 Σ_{i<j} |a_i||a_j| κ² φ(|x_i − x_j|))`.
pub fn general_bound_pairwise(cfg: &ScattererConfig, kappa: f64) -> Result<BoundReport> {
    check_general(cfg)?;
    let alpha = general_alpha(cfg, kappa);
    Ok(BoundReport::new(alpha, None, |al| {
        let (amps, locs) = (cfg.amplitudes(), cfg.locations());
        let mut pairs = 0.0;
        for i in 0..amps.len() {
            for j in 0..i {
                pairs += amps[i].norm() * amps[j].norm() * phi_at(locs[i].dist(&locs[j]), kappa, cfg.dim());
            }
        }
        far_field_prefactor(kappa) * (l1(cfg) * al * al / (1.0 - al) + 2.0 * kappa * kappa * pairs)
    }))
}

/// Norms of the Foldy and Born measurement vectors and of their difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearizationGap {
    pub error: f64,
    pub foldy_norm: f64,
    pub born_norm: f64,
}

pub fn linearization_gap(cfg: &ScattererConfig, plan: &MeasurementPlan) -> Result<LinearizationGap> {
    let f = apply_foldy_operator(cfg, plan)?;
    let b = apply_born_at(cfg.amplitudes(), cfg.locations(), plan);
    let diff: Vec<Complex64> = f.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(LinearizationGap {
        error: norm2(&diff),
        foldy_norm: norm2(&f),
        born_norm: norm2(&b),
    })
}

/// `‖Φ^f_x a − Φ^b_x a‖₂` over `n_dirs` i.i.d. uniform direction pairs.
pub fn empirical_linearization_error(cfg: &ScattererConfig, kappa: f64, n_dirs: usize, seed: u64) -> Result<f64> {
    let plan = uniform_direction_plan(n_dirs, kappa, cfg.dim(), seed)?;
    Ok(linearization_gap(cfg, &plan)?.error)
}

/// One `(κ, Δ)` row of the two-scatterer sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub kappa: f64,
    pub delta: f64,
    pub empirical_mean: f64,
    pub bound: f64,
    pub alpha: f64,
    pub n_failures: usize,
    /// Mean of `‖Φ^f_x a‖₂ + ‖Φ^b_x a‖₂`.
    pub naive_sum_mean: f64,
}

/// Seed of row `index` in a sweep seeded with `seed`.
pub fn row_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Averages the error over `trials` configurations `a = (1, 1)`, `x₁` uniform in `[−1, 1]²`,
/// `x₂ = x₁ + Δe` with `e` uniform on the circle.
pub fn sweep_row(kappa: f64, delta: f64, trials: usize, n_dirs: usize, seed: u64) -> Result<SweepRow> {
    if !(delta > 0.0) || trials == 0 {
        return Err(Error::invalid("sweep rows need delta > 0 and at least one trial"));
    }
    let dim = Dim::Two;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = Complex64::new(1.0, 0.0);
    let (mut sum, mut naive, mut ok, mut failures) = (0.0, 0.0, 0usize, 0usize);
    let mut bound = BoundReport::new(f64::NAN, None, |_| f64::NAN);
    for _ in 0..trials {
        let x1 = Point::new2(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let ang: f64 = rng.random_range(0.0..TAU);
        let x2 = x1 + Point::new2(ang.cos(), ang.sin()) * delta;
        let plan_seed: u64 = rng.random();
        let cfg = ScattererConfig::new(dim, alloc::vec![one, one], alloc::vec![x1, x2])?;
        bound = two_scatterer_bound(&cfg, kappa)?;
        let plan = uniform_direction_plan(n_dirs, kappa, dim, plan_seed)?;
        match linearization_gap(&cfg, &plan) {
            Ok(g) => {
                sum += g.error;
                naive += g.foldy_norm + g.born_norm;
                ok += 1;
            }
            Err(Error::SingularSystem { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    let mean = |v: f64| if ok > 0 { v / ok as f64 } else { f64::NAN };
    Ok(SweepRow {
        kappa,
        delta,
        empirical_mean: mean(sum),
        bound: bound.bound,
        alpha: bound.alpha,
        n_failures: failures,
        naive_sum_mean: mean(naive),
    })
}

/// The `(κ, Δ)` grid in row order (κ outer, Δ inner).
pub fn sweep_grid(kappas: &[f64], deltas: &[f64]) -> Vec<(f64, f64)> {
    kappas
        .iter()
        .flat_map(|&k| deltas.iter().map(move |&d| (k, d)))
        .collect()
}

/// Sequential sweep; row `i` of [`sweep_grid`] uses [`row_seed`]`(seed, i)`.
pub fn sweep_figure1(kappas: &[f64], deltas: &[f64], trials: usize, seed: u64) -> Result<Vec<SweepRow>> {
    sweep_grid(kappas, deltas)
        .into_iter()
        .enumerate()
        .map(|(i, (k, d))| sweep_row(k, d, trials, DEFAULT_DIRECTIONS, row_seed(seed, i)))
        .collect()
}
