//! Bessel functions of integer and half-integer order, `Y0`, `Y1`, `H0(1)`, Gamma values and
//! an explicit upper bound on `|J_α|`.
//!
//! Evaluation regimes:
//!
//! * `x ≤ 2`: ascending power series (no cancellation in that range).
//! * integer orders above: Miller's backward recurrence normalized with
//!   `J0 + 2 Σ J_{2k} = 1`; the same sweep yields `Y0` and `Y1` through their Neumann series.
//! * half-integer orders above: backward recurrence for spherical Bessel functions normalized
//!   with the closed forms of `j0` or `j1`.

use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::{Error, Result};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const SERIES_MAX_X: f64 = 2.0;
const RESCALE_ABOVE: f64 = 1e200;

/// Order of a Bessel function: `n` or `n + 1/2` with `0 ≤ order ≤ 9/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BesselOrder(u8);

impl BesselOrder {
    /// Largest supported order, stored as twice its value.
    pub const MAX_TWICE: u8 = 9;

    pub const ZERO: BesselOrder = BesselOrder(0);

    /// Order `twice / 2`.
    pub fn from_twice(twice: u8) -> Result<Self> {
        if twice > Self::MAX_TWICE {
            return Err(Error::invalid(alloc::format!(
                "unsupported Bessel order {}/2 (maximum 9/2)",
                twice
            )));
        }
        Ok(BesselOrder(twice))
    }

    pub fn integer(n: u8) -> Result<Self> {
        Self::from_twice(n.saturating_mul(2))
    }

    /// Order `n + 1/2`.
    pub fn half_integer(n: u8) -> Result<Self> {
        Self::from_twice(n.saturating_mul(2).saturating_add(1))
    }

    pub fn from_f64(v: f64) -> Result<Self> {
        let t = 2.0 * v;
        if !(t >= 0.0 && t <= Self::MAX_TWICE as f64 && t == t.round()) {
            return Err(Error::invalid(alloc::format!("unsupported Bessel order {v}")));
        }
        Ok(BesselOrder(t as u8))
    }

    #[inline]
    pub fn twice(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0 as f64 * 0.5
    }

    #[inline]
    pub fn is_half_integer(self) -> bool {
        self.0 % 2 == 1
    }

    /// `self + k`.
    pub fn plus(self, k: u8) -> Result<Self> {
        Self::from_twice(self.0.saturating_add(2 * k))
    }
}

/// `Γ(twice / 2)` for `twice ≥ 1`.
pub(crate) fn gamma_half_multiple(twice: u32) -> f64 {
    debug_assert!(twice >= 1);
    let (mut g, mut k) = if twice % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = twice as f64 * 0.5;
    while k < target {
        g *= k;
        k += 1.0;
    }
    g
}

/// `Γ(k)` for `k ∈ {1, 3/2, 2, 5/2, 3, 7/2}`.
pub fn gamma_half_integer(k: f64) -> Result<f64> {
    let t = 2.0 * k;
    if !(t >= 2.0 && t <= 7.0 && t == t.round()) {
        return Err(Error::invalid(alloc::format!(
            "gamma_half_integer supports 1, 3/2, ..., 7/2; got {k}"
        )));
    }
    Ok(gamma_half_multiple(t as u32))
}

fn check_arg(x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::invalid(alloc::format!(
            "Bessel argument must be finite and nonnegative, got {x}"
        )));
    }
    Ok(())
}

/// `Σ_k (-x²/4)^k / (k! (ν+1)_k) / Γ(ν+1)`, i.e. `J_ν(x) / (x/2)^ν`.
fn scaled_series(order: BesselOrder, x: f64) -> f64 {
    let nu = order.value();
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (nu + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 200.0 {
            break;
        }
    }
    sum / gamma_half_multiple(order.twice() as u32 + 2)
}

/// Quantities produced by one backward sweep over integer orders.
struct IntegerSweep {
    j0: f64,
    j1: f64,
    jn: f64,
    y0: f64,
    y1: f64,
}

fn miller_start(x: f64, n: usize) -> usize {
    let base = x.max(n as f64) + 20.0 + 10.0 * x.cbrt();
    let start = base.ceil() as usize;
    start + start % 2
}

/// Backward recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}` from a high even order.
fn integer_sweep(x: f64, n: usize) -> IntegerSweep {
    debug_assert!(x > 0.0);
    let top = miller_start(x, n);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0; // 2 Σ J_{2k}, k ≥ 1
    let mut s0 = 0.0; // Σ (-1)^k J_{2k} / k
    let mut s1 = 0.0; // Σ (-1)^k (J_{2k-1} - J_{2k+1}) / k
    let mut jn = 0.0;
    let mut j_even_above = 0.0; // J_{2k+1} carried to the odd step
    let mut k = top;
    // After each iteration `cur` holds J_{k-1}.
    while k > 0 {
        if k == n {
            jn = cur;
        }
        if k % 2 == 0 {
            let half = (k / 2) as f64;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            norm += 2.0 * cur;
            s0 += sign * cur / half;
            // (J_{k-1} - J_{k+1}) needs J_{k-1}: computed right below.
            j_even_above = next;
        }
        let prev = (2.0 * k as f64 / x) * cur - next;
        if k % 2 == 0 {
            let half = (k / 2) as f64;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            s1 += sign * (prev - j_even_above) / half;
        }
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > RESCALE_ABOVE {
            let f = 1.0 / RESCALE_ABOVE;
            cur *= f;
            next *= f;
            norm *= f;
            s0 *= f;
            s1 *= f;
            jn *= f;
            j_even_above *= f;
        }
    }
    if n == 0 {
        jn = cur;
    }
    let scale = 1.0 / (cur + norm);
    let j0 = cur * scale;
    let j1 = next * scale;
    let s0 = s0 * scale;
    let s1 = s1 * scale;
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    IntegerSweep {
        j0,
        j1,
        jn: jn * scale,
        y0: 2.0 / PI * (lg * j0 - 2.0 * s0),
        y1: 2.0 / PI * (lg * j1 - j0 / x + s1),
    }
}

/// `J_{n+1/2}(x)` for `x > 2` via spherical Bessel backward recurrence.
fn half_integer_large(n: usize, x: f64) -> f64 {
    let top = miller_start(x, n);
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut fn_val = if n == top { cur } else { 0.0 };
    let mut f1 = 0.0;
    let mut k = top;
    while k > 0 {
        let prev = ((2 * k + 1) as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if k == n {
            fn_val = cur;
        }
        if k == 1 {
            f1 = cur;
        }
        if cur.abs() > RESCALE_ABOVE {
            let f = 1.0 / RESCALE_ABOVE;
            cur *= f;
            next *= f;
            fn_val *= f;
            f1 *= f;
        }
    }
    let f0 = cur;
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = (s / x - c) / x;
    let scale = if j0.abs() >= j1.abs() { j0 / f0 } else { j1 / f1 };
    (2.0 * x / PI).sqrt() * fn_val * scale
}

/// Bessel function of the first kind `J_order(x)` for `x ≥ 0`.
///
/// `x = 0` returns the series limit: 1 for order 0, 0 otherwise.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(bessel_j_unchecked(order, x))
}

pub(crate) fn bessel_j_unchecked(order: BesselOrder, x: f64) -> f64 {
    if x == 0.0 {
        return if order.twice() == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_MAX_X {
        return (0.5 * x).powf(order.value()) * scaled_series(order, x);
    }
    let n = (order.twice() / 2) as usize;
    if order.is_half_integer() {
        half_integer_large(n, x)
    } else {
        integer_sweep(x, n).jn
    }
}

/// `J_ν(x) / (x/2)^ν`, accurate down to `x = 0` where it equals `1/Γ(ν+1)`.
pub fn bessel_j_scaled(order: BesselOrder, x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(bessel_j_scaled_unchecked(order, x))
}

pub(crate) fn bessel_j_scaled_unchecked(order: BesselOrder, x: f64) -> f64 {
    if x <= SERIES_MAX_X {
        scaled_series(order, x)
    } else {
        bessel_j_unchecked(order, x) / (0.5 * x).powf(order.value())
    }
}

fn small_y(x: f64) -> (f64, f64) {
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    (2.0 / PI * lg, -2.0 / (PI * x))
}

/// Bessel function of the second kind of order zero, `x > 0`.
pub fn bessel_y0(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(if x < 1e-6 { small_y(x).0 } else { integer_sweep(x, 0).y0 })
}

/// Bessel function of the second kind of order one, `x > 0`.
pub fn bessel_y1(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(if x < 1e-6 { small_y(x).1 } else { integer_sweep(x, 1).y1 })
}

fn check_positive(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(alloc::format!(
            "argument must be positive and finite (logarithmic singularity at 0), got {x}"
        )));
    }
    Ok(())
}

/// Hankel function of the first kind and order zero, `H0(1)(x) = J0(x) + i Y0(x)`.
pub fn hankel1_0(x: f64) -> Result<Complex64> {
    check_positive(x)?;
    let re = bessel_j_unchecked(BesselOrder::ZERO, x);
    let im = if x < 1e-6 { small_y(x).0 } else { integer_sweep(x, 0).y0 };
    Ok(Complex64::new(re, im))
}

/// `H0(1)(x)` and `H1(1)(x)` from one sweep (used for Green-function derivatives).
pub(crate) fn hankel1_01(x: f64) -> (Complex64, Complex64) {
    if x < 1e-6 {
        let (y0, y1) = small_y(x);
        return (Complex64::new(1.0, y0), Complex64::new(0.5 * x, y1));
    }
    let s = integer_sweep(x, 1);
    (Complex64::new(s.j0, s.y0), Complex64::new(s.j1, s.y1))
}

/// Upper bound on `|J_α(x)|` for `α > 0`, `x > 0`: the minimum of the series-remainder
/// estimate `(x/2)^α/Γ(α+1) (|1 - x²/(4(α+1))| + (e^{x²/4} - 1 - x²/4)/((α+1)(α+2)))` and
/// `0.8 x^{-1/3}`.
pub fn bessel_upper_bound(order: BesselOrder, x: f64) -> Result<f64> {
    if order.twice() == 0 {
        return Err(Error::invalid("bessel_upper_bound requires a positive order"));
    }
    check_positive(x)?;
    let a = order.value();
    let q = 0.25 * x * x;
    let tail = (q.exp_m1() - q) / ((a + 1.0) * (a + 2.0));
    let series = (0.5 * x).powf(a) / gamma_half_multiple(order.twice() as u32 + 2)
        * ((1.0 - q / (a + 1.0)).abs() + tail);
    let far = 0.8 * x.powf(-1.0 / 3.0);
    Ok(if series.is_nan() { far } else { series.min(far) })
}
