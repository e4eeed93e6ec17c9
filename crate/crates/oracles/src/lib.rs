//! Reference computations for the test suites.
//!
//! Everything here is written independently of `pointscat-core`: the Bessel series are
//! summed exactly in big fixed-point arithmetic, the Foldy-Lax system is solved by a
//! truncated Neumann series, and the two-scatterer far field uses the explicit inverse of
//! the 2×2 Foldy matrix.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::f64::consts::PI;

/// Fractional bits of the fixed-point accumulator.
const FRAC_BITS: u64 = 900;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

/// `x = mant * 2^exp` exactly.
fn decompose(x: f64) -> (BigInt, i64) {
    assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (BigInt::from(frac), -1074)
    } else {
        (BigInt::from(frac | (1u64 << 52)), exp - 1075)
    }
}

fn shift(v: BigInt, by: i64) -> BigInt {
    if by >= 0 {
        v << (by as usize)
    } else {
        v >> ((-by) as usize)
    }
}

fn fixed_to_f64(v: &BigInt) -> f64 {
    // keep 120 significant fractional bits before converting
    let drop = FRAC_BITS - 120;
    let top = v.clone() >> (drop as usize);
    top.to_f64().unwrap() * 2f64.powi(-120)
}

/// Multiplies a fixed-point value by `x²/4`, given `x = mant · 2^exp`.
fn times_quarter_square(v: &BigInt, mant: &BigInt, exp: i64) -> BigInt {
    shift(v * mant * mant, 2 * exp - 2)
}

/// `Σ_k (-x²/4)^k / (k! (ν+1)_k)` with `ν = twice/2`, summed in fixed point.
fn scaled_series_sum(twice_order: u32, x: f64) -> f64 {
    let (mant, exp) = decompose(x);
    let mut term = BigInt::one() << (FRAC_BITS as usize);
    let mut sum = term.clone();
    let mut k: u64 = 0;
    loop {
        // t_{k+1} = -t_k · (x²/4) · 2 / ((k+1)(2k+2+twice))
        let num = times_quarter_square(&term, &mant, exp) << 1usize;
        let den = BigInt::from((k + 1) * (2 * k + 2 + twice_order as u64));
        term = -(num / den);
        k += 1;
        sum += &term;
        if term.is_zero() || (k > 10 && term.abs().bits() < 8) {
            break;
        }
        assert!(k < 100_000);
    }
    fixed_to_f64(&sum)
}

fn gamma_half(twice: u32) -> f64 {
    let (mut g, mut k) = if twice % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while k < twice as f64 * 0.5 {
        g *= k;
        k += 1.0;
    }
    g
}

/// `J_ν(x)`, `ν = twice_order / 2`, from its ascending series summed without rounding
/// error in the alternating sum.
pub fn bessel_j(twice_order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if twice_order == 0 { 1.0 } else { 0.0 };
    }
    let n = twice_order / 2;
    let mut pre = (0.5 * x).powi(n as i32);
    if twice_order % 2 == 1 {
        pre *= (0.5 * x).sqrt();
    }
    pre / gamma_half(twice_order + 2) * scaled_series_sum(twice_order, x)
}

/// `Y0(x) = (2/π) [(ln(x/2) + γ) J0(x) + Σ_{k≥1} (-1)^{k+1} H_k (x²/4)^k / (k!)²]`.
pub fn bessel_y0(x: f64) -> f64 {
    assert!(x > 0.0);
    let (mant, exp) = decompose(x);
    let one = BigInt::one() << (FRAC_BITS as usize);
    let mut u = one.clone(); // (x²/4)^k / (k!)²
    let mut harmonic = BigInt::zero();
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    loop {
        k += 1;
        u = times_quarter_square(&u, &mant, exp) / BigInt::from(k * k);
        harmonic += &one / BigInt::from(k);
        let t = (&u * &harmonic) >> (FRAC_BITS as usize);
        if k % 2 == 1 {
            sum += &t;
        } else {
            sum -= &t;
        }
        if k > 10 && t.abs().bits() < 8 {
            break;
        }
        assert!(k < 100_000);
    }
    let j0 = bessel_j(0, x);
    2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + fixed_to_f64(&sum))
}

/// `H0(1)(x) = J0(x) + i Y0(x)`.
pub fn hankel1_0(x: f64) -> Complex64 {
    Complex64::new(bessel_j(0, x), bessel_y0(x))
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn dot(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * b).sum()
}

/// Helmholtz Green function, `(i/4) H0(1)(κr)` in 2-D and `e^{iκr}/(4πr)` in 3-D.
pub fn green(p: &[f64], q: &[f64], kappa: f64) -> Complex64 {
    let r = dist(p, q);
    match p.len() {
        2 => Complex64::new(0.0, 0.25) * hankel1_0(kappa * r),
        3 => Complex64::from_polar(1.0, kappa * r) / (4.0 * PI * r),
        d => panic!("unsupported dimension {d}"),
    }
}

/// `κ² T` with `T_ij = G(x_i, x_j) a_j` off the diagonal.
pub fn interaction_matrix(amps: &[Complex64], locs: &[Vec<f64>], kappa: f64) -> Vec<Vec<Complex64>> {
    let s = amps.len();
    let mut m = vec![vec![Complex64::zero(); s]; s];
    for i in 0..s {
        for j in 0..s {
            if i != j {
                m[i][j] = kappa * kappa * green(&locs[i], &locs[j], kappa) * amps[j];
            }
        }
    }
    m
}

/// `Σ_{n=0}^{terms} M^n b`.
pub fn neumann_solve(m: &[Vec<Complex64>], b: &[Complex64], terms: usize) -> Vec<Complex64> {
    let mut power = b.to_vec();
    let mut acc = b.to_vec();
    for _ in 0..terms {
        let next: Vec<Complex64> = m
            .iter()
            .map(|row| row.iter().zip(&power).map(|(a, v)| a * v).sum())
            .collect();
        for (a, v) in acc.iter_mut().zip(&next) {
            *a += v;
        }
        power = next;
    }
    acc
}

/// Foldy excitations by Neumann series (valid when the series converges).
pub fn foldy_neumann(
    amps: &[Complex64],
    locs: &[Vec<f64>],
    kappa: f64,
    theta: &[f64],
    terms: usize,
) -> Vec<Complex64> {
    let m = interaction_matrix(amps, locs, kappa);
    let b: Vec<Complex64> = locs
        .iter()
        .map(|x| Complex64::from_polar(1.0, kappa * dot(theta, x)))
        .collect();
    neumann_solve(&m, &b, terms)
}

/// Far field `(κ²/4π) Σ a_i u_i e^{-iκ x̂·x_i}` for given excitations.
pub fn far_field_from_excitations(
    amps: &[Complex64],
    locs: &[Vec<f64>],
    u: &[Complex64],
    kappa: f64,
    xhat: &[f64],
) -> Complex64 {
    let s: Complex64 = amps
        .iter()
        .zip(locs)
        .zip(u)
        .map(|((a, x), ui)| a * ui * Complex64::from_polar(1.0, -kappa * dot(xhat, x)))
        .sum();
    s * (kappa * kappa / (4.0 * PI))
}

/// Two-scatterer far field through the explicit inverse of the 2×2 Foldy matrix:
/// `det = 1 - β²`, `β² = κ⁴ G(x1,x2)² a1 a2`.
pub fn two_scatterer_far_field(
    a: [Complex64; 2],
    x: [&[f64]; 2],
    kappa: f64,
    xhat: &[f64],
    theta: &[f64],
) -> Complex64 {
    let k2 = kappa * kappa;
    let g = green(x[0], x[1], kappa);
    let det = Complex64::one() - k2 * k2 * g * g * a[0] * a[1];
    let in1 = Complex64::from_polar(1.0, kappa * dot(theta, x[0]));
    let in2 = Complex64::from_polar(1.0, kappa * dot(theta, x[1]));
    let out1 = Complex64::from_polar(1.0, -kappa * dot(xhat, x[0]));
    let out2 = Complex64::from_polar(1.0, -kappa * dot(xhat, x[1]));
    let t1 = a[0] * out1 * (in1 + k2 * g * a[1] * in2) / det;
    let t2 = a[1] * out2 * (in2 + k2 * g * a[0] * in1) / det;
    k2 / (4.0 * PI) * (t1 + t2)
}

/// Solves the complex least-squares problem `min ‖A a - y‖` through the normal equations
/// with Gauss-Jordan elimination (full pivoting). `cols[j]` is column `j` of `A`.
pub fn least_squares(cols: &[Vec<Complex64>], y: &[Complex64]) -> Vec<Complex64> {
    let s = cols.len();
    let mut g = vec![vec![Complex64::zero(); s + 1]; s];
    for i in 0..s {
        for j in 0..s {
            g[i][j] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
        }
        g[i][s] = cols[i].iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    }
    let mut perm: Vec<usize> = (0..s).collect();
    for c in 0..s {
        let (mut bi, mut bj, mut best) = (c, c, -1.0);
        for i in c..s {
            for j in c..s {
                if g[i][j].norm() > best {
                    best = g[i][j].norm();
                    bi = i;
                    bj = j;
                }
            }
        }
        g.swap(c, bi);
        for row in g.iter_mut() {
            row.swap(c, bj);
        }
        perm.swap(c, bj);
        let p = g[c][c];
        for v in g[c].iter_mut() {
            *v /= p;
        }
        for i in 0..s {
            if i != c {
                let f = g[i][c];
                for j in 0..=s {
                    let t = g[c][j];
                    g[i][j] -= f * t;
                }
            }
        }
    }
    let mut out = vec![Complex64::zero(); s];
    for c in 0..s {
        out[perm[c]] = g[c][s];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // tabulated: J0(1), J1(1), Y0(1), J_{1/2}(π/2) = 2/π
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-16);
        assert!((bessel_j(2, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-16);
        assert!((bessel_y0(1.0) - 0.088_256_964_215_676_96).abs() < 1e-15);
        assert!((bessel_j(1, PI / 2.0) - 2.0 / PI).abs() < 1e-15);
        // J0(200)
        assert!((bessel_j(0, 200.0) + 0.015_437_439_930_565_092).abs() < 1e-15);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let cols = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)],
            vec![Complex64::new(2.0, -1.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 3.0)],
        ];
        let a = [Complex64::new(0.3, -0.2), Complex64::new(-1.0, 0.5)];
        let y: Vec<Complex64> = (0..3).map(|k| cols[0][k] * a[0] + cols[1][k] * a[1]).collect();
        let sol = least_squares(&cols, &y);
        for (s, t) in sol.iter().zip(&a) {
            assert!((s - t).norm() < 1e-13);
        }
    }
}
