use pointscat_core::kernel::{
    advisory, b_estimates, check_regions, covariant_norms, fisher_distance, kernel_eval, KernelProfile, RegionGrid,
};
use pointscat_core::{Dim, Point};
use pointscat_oracles as oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn profiles() -> [KernelProfile; 2] {
    [KernelProfile::new(Dim::Two, 1.0).unwrap(), KernelProfile::new(Dim::Three, 1.0).unwrap()]
}

/// `ρ` from the oracle Bessel series: `(2/s)^{d/2} Γ(d/2+1) J_{d/2+k}(s)`.
fn oracle_rho_part(d: u32, k: u32, s: f64) -> f64 {
    let g = if d == 2 { 1.0 } else { 0.75 * std::f64::consts::PI.sqrt() };
    (2.0 / s).powf(d as f64 / 2.0) * g * oracle::bessel_j(d + 2 * k, s)
}

#[test]
fn value_and_curvature_at_zero() {
    for p in profiles() {
        assert_eq!(p.rho(0.0).unwrap(), 1.0);
        let h = 1e-3;
        let fd = 2.0 * (p.rho(h).unwrap() - 1.0) / (h * h);
        let want = -1.0 / (p.dim().as_f64() + 2.0);
        assert!((fd - want).abs() <= 1e-6, "{fd} vs {want}");
    }
}

#[test]
fn two_dimensional_value_matches_oracle() {
    let p = KernelProfile::new(Dim::Two, 1.0).unwrap();
    let want = 2.0 * oracle::bessel_j(2, 1.0);
    assert!((p.rho(1.0).unwrap() - want).abs() <= 1e-15);
    assert!((want - 0.880_101_171_489_867).abs() < 1e-14);
}

#[test]
fn derivatives_match_finite_differences() {
    let h = 1e-4;
    for p in profiles() {
        let mut s: f64 = 0.1;
        while s <= 100.0 {
            let cd = |f: &dyn Fn(f64) -> f64| (f(s + h) - f(s - h)) / (2.0 * h);
            let d1 = cd(&|v| p.rho(v).unwrap());
            let d2 = cd(&|v| p.rho_d1(v).unwrap());
            let d3 = cd(&|v| p.rho_d2(v).unwrap());
            assert!((p.rho_d1(s).unwrap() - d1).abs() <= 1e-6, "rho' at {s}");
            assert!((p.rho_d2(s).unwrap() - d2).abs() <= 1e-6, "rho'' at {s}");
            assert!((p.rho_d3(s).unwrap() - d3).abs() <= 1e-6, "rho''' at {s}");
            s *= 1.07;
        }
    }
}

#[test]
fn curvature_gap_identity() {
    for (p, d) in profiles().into_iter().zip([2u32, 3]) {
        for i in 1..400 {
            let s = 0.25 * i as f64;
            let lhs = p.rho_d2(s).unwrap() - p.rho_d1(s).unwrap() / s;
            let rhs = oracle_rho_part(d, 2, s);
            assert!((lhs - rhs).abs() <= 1e-10, "s={s}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn kernel_matches_monte_carlo_integral() {
    // K(x, x') = E[conj(e^{-iω·x}) e^{-iω·x'}], ω uniform in B(0, 2κ); rejection sampling.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;
    for (dim, kappa) in [(Dim::Two, 1.0), (Dim::Three, 0.7), (Dim::Two, 2.5)] {
        let p = KernelProfile::new(dim, kappa).unwrap();
        let d = dim.get();
        for _ in 0..3 {
            let mut x = Point::ORIGIN;
            let mut xp = Point::ORIGIN;
            for k in 0..d {
                x.0[k] = rng.random_range(-1.0..1.0);
                xp.0[k] = rng.random_range(-1.0..1.0);
            }
            let (mut sum, mut sq) = (0.0, 0.0);
            let mut taken = 0;
            while taken < n {
                let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                if w.iter().map(|v| v * v).sum::<f64>() > 1.0 {
                    continue;
                }
                let phase: f64 = (0..d).map(|k| 2.0 * kappa * w[k] * (x.0[k] - xp.0[k])).sum();
                let v = phase.cos();
                sum += v;
                sq += v * v;
                taken += 1;
            }
            let mean = sum / n as f64;
            let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
            let k = kernel_eval(&p, &x, &xp);
            assert!((k - mean).abs() <= 3.0 * se, "{k} vs {mean} ± {se}");
        }
    }
}

#[test]
fn covariant_first_norm_matches_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in profiles() {
        let d = p.dim().get();
        let scale = p.sigma() / (1.0 / (d as f64 + 2.0)).sqrt();
        for _ in 0..20 {
            let mut x = Point::ORIGIN;
            let xp = Point::ORIGIN;
            for k in 0..d {
                x.0[k] = rng.random_range(-3.0..3.0);
            }
            let h = 1e-6;
            let mut g2 = 0.0;
            for k in 0..d {
                let (mut a, mut b) = (x, x);
                a.0[k] += h;
                b.0[k] -= h;
                g2 += ((kernel_eval(&p, &a, &xp) - kernel_eval(&p, &b, &xp)) / (2.0 * h)).powi(2);
            }
            let n = covariant_norms(&p, &x, &xp);
            assert!((n.k10 - scale * g2.sqrt()).abs() <= 1e-5 * n.k10.max(1e-3));
        }
        let c = covariant_norms(&p, &Point::ORIGIN, &Point::ORIGIN);
        assert_eq!(c.k00, 1.0);
    }
}

#[test]
fn region_checks_pass() {
    for p in profiles() {
        let r = check_regions(&p, 200.0, RegionGrid::default()).unwrap();
        assert!(r.passes, "{r:?}");
        assert!(r.min_near_curvature >= 0.6 && r.max_far_value <= 0.93);
        // The far maximum sits at the left end, inside the main lobe; compare with the oracle.
        let d = p.dim().get() as u32;
        let want = oracle_rho_part(d, 0, r.far_start);
        assert_eq!(r.far_argmax, r.far_start);
        assert!((r.max_far_value - want).abs() <= 1e-12, "{} vs {want}", r.max_far_value);
    }
    let p = profiles()[0];
    assert!(check_regions(&p, 5.0, RegionGrid::default()).is_err());
}

#[test]
fn near_curvature_is_one_at_coincidence() {
    for p in profiles() {
        let grid = RegionGrid { near_radii: 2, near_directions: 2, far_points: 2 };
        // Two radii give the grid {0, r_near}; the curvature is 1 at 0 and decreases away from it.
        let r = check_regions(&p, 10.0, grid).unwrap();
        assert!(r.min_near_curvature <= 1.0);
        let n = covariant_norms(&p, &Point::ORIGIN, &Point::ORIGIN);
        assert!((n.k11_upper - 1.0).abs() < 1e-15);
    }
}

#[test]
fn b_estimates_are_finite_and_b00_is_one() {
    for p in profiles() {
        let b = b_estimates(&p, 200.0, 2000).unwrap();
        assert_eq!(b.b00, 1.0);
        assert!(b.b10.is_finite() && b.b11.is_finite() && b.b10 > 0.0 && b.b11 >= 1.0);
    }
}

#[test]
fn advisory_examples() {
    let p1 = KernelProfile::new(Dim::Two, 1.0).unwrap();
    let p2 = KernelProfile::new(Dim::Two, 2.0).unwrap();
    let a = advisory(&p1, 1, 1.0, 1.0, 0.5).unwrap();
    assert_eq!(a.delta_min, 1.0);
    let b = advisory(&p2, 1, 1.0, 1.0, 0.5).unwrap();
    assert_eq!(b.delta_min, 0.5);
    let mut prev = advisory(&p1, 1, 1.0, 1.0, 0.1).unwrap();
    for s in 2..50 {
        let next = advisory(&p1, s, 1.0, 1.0, 0.1).unwrap();
        assert!(next.delta_min >= prev.delta_min && next.m_min_stable >= prev.m_min_stable && next.m_min_support >= prev.m_min_support);
        prev = next;
    }
}

proptest! {
    #[test]
    fn kernel_bounded_by_one_and_distance_scales(x in -5.0..5.0f64, y in -5.0..5.0f64, k in 0.1..5.0f64) {
        let p = KernelProfile::new(Dim::Two, k).unwrap();
        let q = KernelProfile::new(Dim::Two, 2.0 * k).unwrap();
        let a = Point::new2(x, y);
        prop_assert!(kernel_eval(&p, &a, &Point::ORIGIN).abs() <= 1.0 + 1e-15);
        prop_assert_eq!(kernel_eval(&p, &a, &a), 1.0);
        prop_assert_eq!(fisher_distance(&p, &a, &a), 0.0);
        let (d1, d2) = (fisher_distance(&p, &a, &Point::ORIGIN), fisher_distance(&q, &a, &Point::ORIGIN));
        prop_assert!((d2 - 2.0 * d1).abs() <= 1e-12 * d2.max(1.0));
    }
}
