//! The autocorrelation kernel of uniform-ball Fourier sampling and the constants of its
//! recovery analysis.
//!
//! With frequencies uniform in `B(0, 2κ)`, `K(x, x') = ρ(σ⁻¹|x − x'|)` where `σ⁻¹ = 2κ` and
//! `ρ(s) = (2/s)^{d/2} Γ(d/2 + 1) J_{d/2}(s)`. Writing `S_ν(s) = J_ν(s)/(s/2)^ν`, every
//! derivative is a polynomial in `s` times some `S_ν`, which stays exact at `s = 0`.

use core::f64::consts::FRAC_PI_2;

use num_traits::Float;

use crate::geometry::{Dim, Point};
use crate::specialfn::{bessel_j_scaled_unchecked, gamma_half_integer, BesselOrder};
use crate::{Error, Result};

/// Near-region curvature constant `ε̄₂`.
pub const NEAR_CURVATURE_MIN: f64 = 0.6;
/// Far-region ceiling `1 − ε̄₀`.
pub const FAR_VALUE_MAX: f64 = 0.93;
/// Near-region radius in the Fisher distance.
pub const R_NEAR: f64 = 0.447_213_595_499_957_94; // 1/√5

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelProfile {
    dim: Dim,
    kappa: f64,
    sigma: f64,
    /// `Γ(d/2 + 1)`.
    gamma: f64,
}

impl KernelProfile {
    pub fn new(dim: Dim, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa must be positive and finite"));
        }
        Ok(KernelProfile {
            dim,
            kappa,
            sigma: 1.0 / (2.0 * kappa),
            gamma: gamma_half_integer(dim.as_f64() / 2.0 + 1.0)?,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `S_{d/2 + k}(s)`.
    fn scaled(&self, k: u8, s: f64) -> f64 {
        let order = BesselOrder::from_twice(self.dim.get() as u8 + 2 * k).expect("order within table");
        bessel_j_scaled_unchecked(order, s)
    }

    fn check(s: f64) -> Result<f64> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::invalid(alloc::format!("kernel argument must be finite and nonnegative, got {s}")));
        }
        Ok(s)
    }

    pub fn rho(&self, s: f64) -> Result<f64> {
        let s = Self::check(s)?;
        Ok(self.gamma * self.scaled(0, s))
    }

    /// `ρ'(s) = −(2/s)^{d/2} Γ(d/2+1) J_{d/2+1}(s)`.
    pub fn rho_d1(&self, s: f64) -> Result<f64> {
        let s = Self::check(s)?;
        Ok(-self.gamma * 0.5 * s * self.scaled(1, s))
    }

    /// `ρ''(s) = (2/s)^{d/2} Γ(d/2+1) (J_{d/2+2}(s) − J_{d/2+1}(s)/s)`.
    pub fn rho_d2(&self, s: f64) -> Result<f64> {
        let s = Self::check(s)?;
        Ok(self.gamma * (0.25 * s * s * self.scaled(2, s) - 0.5 * self.scaled(1, s)))
    }

    /// `ρ'''(s) = (2/s)^{d/2} Γ(d/2+1) (3 J_{d/2+2}(s)/s − J_{d/2+3}(s))`.
    pub fn rho_d3(&self, s: f64) -> Result<f64> {
        let s = Self::check(s)?;
        Ok(self.gamma * (0.75 * s * self.scaled(2, s) - 0.125 * s * s * s * self.scaled(3, s)))
    }

    /// `ρ'(s)/s`, continuous at 0.
    fn rho_d1_over_s(&self, s: f64) -> f64 {
        -0.5 * self.gamma * self.scaled(1, s)
    }

    /// `ρ''(s) − ρ'(s)/s = (2/s)^{d/2} Γ(d/2+1) J_{d/2+2}(s)`.
    fn rho_d2_gap(&self, s: f64) -> f64 {
        0.25 * self.gamma * s * s * self.scaled(2, s)
    }

    /// `−ρ''(0) = 1/(d + 2)`.
    pub fn curvature_at_zero(&self) -> f64 {
        1.0 / (self.dim.as_f64() + 2.0)
    }

    fn reduced(&self, x: &Point, xp: &Point) -> f64 {
        2.0 * self.kappa * x.dist(xp)
    }
}

/// `K(x, x') = ρ(2κ|x − x'|)`.
pub fn kernel_eval(profile: &KernelProfile, x: &Point, xp: &Point) -> f64 {
    profile.gamma * profile.scaled(0, profile.reduced(x, xp))
}

/// `𝔡_𝔤(x, x') = √(−ρ''(0)) σ⁻¹ |x − x'|`.
pub fn fisher_distance(profile: &KernelProfile, x: &Point, xp: &Point) -> f64 {
    profile.curvature_at_zero().sqrt() * profile.reduced(x, xp)
}

/// Operator norms of the kernel's covariant derivatives at a pair of points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovariantNorms {
    pub k00: f64,
    pub k10: f64,
    /// Upper bound on `‖K^{(11)}‖ = ‖K^{(20)}‖`.
    pub k11_upper: f64,
}

fn norms_at(profile: &KernelProfile, s: f64) -> CovariantNorms {
    let c = profile.curvature_at_zero();
    let d1 = -profile.gamma * 0.5 * s * profile.scaled(1, s);
    CovariantNorms {
        k00: (profile.gamma * profile.scaled(0, s)).abs(),
        k10: d1.abs() / c.sqrt(),
        k11_upper: (profile.rho_d1_over_s(s).abs() + profile.rho_d2_gap(s).abs()) / c,
    }
}

pub fn covariant_norms(profile: &KernelProfile, x: &Point, xp: &Point) -> CovariantNorms {
    norms_at(profile, profile.reduced(x, xp))
}

/// Grid sizes for [`check_regions`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionGrid {
    pub near_radii: usize,
    pub near_directions: usize,
    pub far_points: usize,
}

impl Default for RegionGrid {
    fn default() -> Self {
        RegionGrid {
            near_radii: 1000,
            near_directions: 64,
            far_points: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionCheckReport {
    pub dim: Dim,
    /// Minimum of `−K^{(02)}[v, v] / |v|_x²` over the near region.
    pub min_near_curvature: f64,
    /// Maximum of `|ρ(s)|` over `[far_start, s_max]`.
    pub max_far_value: f64,
    /// Where the far maximum is attained.
    pub far_argmax: f64,
    /// Near region in the reduced variable: `s ≤ near_radius`.
    pub near_radius: f64,
    pub far_start: f64,
    pub s_max: f64,
    pub grid: RegionGrid,
    pub passes: bool,
}

/// Checks the near-region curvature and the far-region decay of the kernel on grids.
///
/// The near region `𝔡_𝔤 ≤ 1/√5` is `s ≤ √((d + 2)/5)`; there, for a unit `v` at angle `θ`
/// to `t`, `−K^{(02)}[v, v]/|v|_x² = (−ρ'(s)/s − (ρ''(s) − ρ'(s)/s) cos²θ)/(−ρ''(0))`. The
/// far scan starts at `s = 2/√5`.
pub fn check_regions(profile: &KernelProfile, s_max: f64, grid: RegionGrid) -> Result<RegionCheckReport> {
    if !(s_max >= 10.0 && s_max.is_finite()) {
        return Err(Error::invalid("s_max must be at least 10"));
    }
    if grid.near_radii < 2 || grid.near_directions < 2 || grid.far_points < 2 {
        return Err(Error::invalid("region grids need at least two points"));
    }
    let c = profile.curvature_at_zero();
    let near_radius = R_NEAR / c.sqrt();
    let mut min_near = f64::INFINITY;
    for i in 0..grid.near_radii {
        let s = near_radius * i as f64 / (grid.near_radii - 1) as f64;
        let (d1s, gap) = (profile.rho_d1_over_s(s), profile.rho_d2_gap(s));
        for j in 0..grid.near_directions {
            let theta = FRAC_PI_2 * j as f64 / (grid.near_directions - 1) as f64;
            let cos2 = theta.cos().powi(2);
            min_near = min_near.min((-d1s - gap * cos2) / c);
        }
    }
    let far_start = 2.0 * R_NEAR;
    let (mut max_far, mut argmax) = (0.0, far_start);
    for i in 0..grid.far_points {
        let s = far_start + (s_max - far_start) * i as f64 / (grid.far_points - 1) as f64;
        let v = (profile.gamma * profile.scaled(0, s)).abs();
        if v > max_far {
            max_far = v;
            argmax = s;
        }
    }
    Ok(RegionCheckReport {
        dim: profile.dim,
        min_near_curvature: min_near,
        max_far_value: max_far,
        far_argmax: argmax,
        near_radius,
        far_start,
        s_max,
        grid,
        passes: min_near >= NEAR_CURVATURE_MIN && max_far <= FAR_VALUE_MAX,
    })
}

/// Numerical suprema of the covariant norms over a grid in `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BEstimates {
    pub b00: f64,
    pub b10: f64,
    /// `B₁₁ = B₂₀`, through the upper bound on `‖K^{(11)}‖`.
    pub b11: f64,
}

/// Suprema of [`CovariantNorms`] over `s = 0` and `points` log-spaced values in
/// `[1e-3, s_max]`. These are estimates, not the analytic suprema.
pub fn b_estimates(profile: &KernelProfile, s_max: f64, points: usize) -> Result<BEstimates> {
    if !(s_max > 1e-3 && s_max.is_finite()) || points < 2 {
        return Err(Error::invalid("b_estimates needs s_max > 1e-3 and at least two points"));
    }
    let (lo, hi) = (1e-3f64.ln(), s_max.ln());
    let grid = core::iter::once(0.0).chain((0..points).map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp()));
    let mut out = BEstimates { b00: 0.0, b10: 0.0, b11: 0.0 };
    for s in grid {
        let n = norms_at(profile, s);
        out.b00 = out.b00.max(n.k00);
        out.b10 = out.b10.max(n.k10);
        out.b11 = out.b11.max(n.k11_upper);
    }
    Ok(out)
}

/// Sizes suggested by the recovery theorems, with their hidden constants supplied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Advisory {
    pub delta_min: f64,
    pub m_min_stable: u64,
    pub m_min_support: u64,
}

/// `Δ_min = C_sep s^{2/(d+1)}/κ`, `m_stable = ⌈C_m s (log s log(s/ρ) + log(sκ/ρ))⌉` and
/// `m_support = ⌈C_m s^{3/2} log(κ/ρ)⌉`, every logarithm floored at 1.
pub fn advisory(profile: &KernelProfile, s: usize, constant_sep: f64, constant_m: f64, rho_fail: f64) -> Result<Advisory> {
    if s == 0 {
        return Err(Error::invalid("advisory needs s ≥ 1"));
    }
    if !(constant_sep > 0.0 && constant_m > 0.0 && constant_sep.is_finite() && constant_m.is_finite()) {
        return Err(Error::invalid("advisory constants must be positive"));
    }
    if !(rho_fail > 0.0 && rho_fail < 1.0) {
        return Err(Error::invalid("rho_fail must lie in (0, 1)"));
    }
    let log = |v: f64| v.ln().max(1.0);
    let (sf, k) = (s as f64, profile.kappa);
    let d = profile.dim.as_f64();
    Ok(Advisory {
        delta_min: constant_sep * sf.powf(2.0 / (d + 1.0)) / k,
        m_min_stable: (constant_m * sf * (log(sf) * log(sf / rho_fail) + log(sf * k / rho_fail))).ceil() as u64,
        m_min_support: (constant_m * sf.powf(1.5) * log(k / rho_fail)).ceil() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        for dim in [Dim::Two, Dim::Three] {
            let p = KernelProfile::new(dim, 1.0).unwrap();
            assert_eq!(p.rho(0.0).unwrap(), 1.0);
            assert_eq!(p.rho_d1(0.0).unwrap(), 0.0);
            assert!((p.rho_d2(0.0).unwrap() + p.curvature_at_zero()).abs() < 1e-15);
            assert_eq!(p.rho_d3(0.0).unwrap(), 0.0);
            assert!(p.rho(-1.0).is_err());
            let n = norms_at(&p, 0.0);
            assert_eq!((n.k00, n.k10), (1.0, 0.0));
            assert!((n.k11_upper - 1.0).abs() < 1e-15);
        }
        let p = KernelProfile::new(Dim::Two, 3.0).unwrap();
        assert_eq!(p.sigma(), 1.0 / 6.0);
    }

    #[test]
    fn advisory_floors_logs() {
        let p = KernelProfile::new(Dim::Two, 1.0).unwrap();
        let a = advisory(&p, 1, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(a.delta_min, 1.0);
        assert_eq!(a.m_min_stable, 2);
        assert_eq!(a.m_min_support, 1);
    }
}
