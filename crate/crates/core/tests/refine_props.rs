use pointscat_core::blasso::{DiscreteMeasure, SfwOptions};
use pointscat_core::refine::{
    gradient_foldy, grid_initialization, objective_foldy, refine_measure, run_pipeline, RefineOptions,
};
use pointscat_core::sampling::{build_plan, MeasurementPlan};
use pointscat_core::scatter::{apply_born_at, apply_foldy_operator, raw_sample_scale, ScattererConfig};
use pointscat_core::{BoxDomain, Complex64, Dim, Point};
use pointscat_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_amp(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    let r = rng.random_range(lo..hi);
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, t)
}

/// `s` points in `[−half, half]^d`, pairwise at least `sep` apart.
fn separated_points(rng: &mut ChaCha8Rng, dim: Dim, s: usize, half: f64, sep: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    while out.len() < s {
        let mut p = Point::ORIGIN;
        for v in &mut p.0[..dim.get()] {
            *v = rng.random_range(-half..half);
        }
        if out.iter().all(|q| q.dist(&p) >= sep) {
            out.push(p);
        }
    }
    out
}

fn foldy_data(dim: Dim, amps: &[Complex64], locs: &[Point], plan: &MeasurementPlan) -> Vec<Complex64> {
    let cfg = ScattererConfig::new(dim, amps.to_vec(), locs.to_vec()).unwrap();
    apply_foldy_operator(&cfg, plan).unwrap()
}

/// Gradient flattened as `(Re a, Im a, x)` per atom.
fn flat_gradient(amps: &[Complex64], locs: &[Point], plan: &MeasurementPlan, y: &[Complex64], lambda: f64) -> Vec<f64> {
    let d = plan.dim().get();
    let g = gradient_foldy(amps, locs, plan, y, lambda).unwrap();
    let mut out = Vec::new();
    for (ga, gx) in g.amplitude.iter().zip(&g.position) {
        out.extend(ga);
        out.extend(&gx.0[..d]);
    }
    out
}

fn central_differences(amps: &[Complex64], locs: &[Point], plan: &MeasurementPlan, y: &[Complex64], lambda: f64) -> Vec<f64> {
    let d = plan.dim().get();
    let h = 1e-6;
    let f = |a: &[Complex64], x: &[Point]| objective_foldy(a, x, plan, y, lambda).unwrap();
    let mut out = Vec::new();
    for i in 0..amps.len() {
        for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
            let (mut ap, mut am) = (amps.to_vec(), amps.to_vec());
            ap[i] += dir * h;
            am[i] -= dir * h;
            out.push((f(&ap, locs) - f(&am, locs)) / (2.0 * h));
        }
        for k in 0..d {
            let (mut xp, mut xm) = (locs.to_vec(), locs.to_vec());
            xp[i].0[k] += h;
            xm[i].0[k] -= h;
            out.push((f(amps, &xp) - f(amps, &xm)) / (2.0 * h));
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for dim in [Dim::Two, Dim::Three] {
        for s in [1, 2, 3, 5] {
            for trial in 0..20 {
                let kappa = rng.random_range(0.5..2.0);
                let plan = build_plan(20, kappa, dim, trial).unwrap();
                let amps: Vec<_> = (0..s).map(|_| random_amp(&mut rng, 0.1, 1.5)).collect();
                let locs = separated_points(&mut rng, dim, s, 3.0, 0.5);
                let y: Vec<_> = (0..20).map(|_| random_amp(&mut rng, 0.0, 0.05)).collect();
                let lambda = rng.random_range(0.0..1e-2);
                let g = flat_gradient(&amps, &locs, &plan, &y, lambda);
                let fd = central_differences(&amps, &locs, &plan, &y, lambda);
                let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
                worst = worst.max(norm(&diff) / norm(&g));
            }
        }
    }
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
}

#[test]
fn single_atom_gradient_is_the_born_gradient() {
    // One atom has no interaction: the position gradient is that of ½‖Φ^b a − y‖².
    let plan = build_plan(30, 1.4, Dim::Three, 5).unwrap();
    let a = c(0.7, -0.2);
    let x = Point::new3(0.3, -0.4, 1.1);
    let y: Vec<_> = (0..30).map(|k| c((k as f64).sin() * 0.01, 0.002)).collect();
    let g = gradient_foldy(&[a], &[x], &plan, &y, 0.0).unwrap();
    let born = apply_born_at(&[a], &[x], &plan);
    for k in 0..3 {
        let mut want = 0.0;
        for ((f, w), yk) in born.iter().zip(plan.frequencies()).zip(&y) {
            // ∂/∂x e^{−iω·x} = −iω e^{−iω·x}
            let dphi = f * c(0.0, -w.0[k]);
            want += ((f - yk).conj() * dphi).re;
        }
        assert!((g.position[0].0[k] - want).abs() <= 1e-12 * want.abs().max(1e-3));
    }
}

#[test]
fn objective_matches_neumann_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for dim in [Dim::Two, Dim::Three] {
        for trial in 0..10 {
            let kappa = rng.random_range(0.5..1.5);
            let plan = build_plan(15, kappa, dim, trial).unwrap();
            let amps: Vec<_> = (0..3).map(|_| random_amp(&mut rng, 0.05, 0.4)).collect();
            let locs = separated_points(&mut rng, dim, 3, 2.0, 1.0);
            let y: Vec<_> = (0..15).map(|_| random_amp(&mut rng, 0.0, 0.1)).collect();
            let vlocs: Vec<Vec<f64>> = locs.iter().map(|p| p.0[..dim.get()].to_vec()).collect();
            let scale = raw_sample_scale(kappa, 15) * 4.0 * std::f64::consts::PI / (kappa * kappa);
            let mut data = 0.0;
            for (pair, yk) in plan.pairs().iter().zip(&y) {
                let d = dim.get();
                let u = oracle::foldy_neumann(&amps, &vlocs, kappa, &pair.incident.0[..d], 80);
                let f = oracle::far_field_from_excitations(&amps, &vlocs, &u, kappa, &pair.observation.0[..d]) * scale;
                data += 0.5 * (f - yk).norm_sqr();
            }
            let want = data + 0.2 * amps.iter().map(|a| a.norm()).sum::<f64>();
            let got = objective_foldy(&amps, &locs, &plan, &y, 0.2).unwrap();
            assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn noiseless_truth_is_stationary_without_penalty() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for dim in [Dim::Two, Dim::Three] {
        let plan = build_plan(30, 1.0, dim, 2).unwrap();
        let amps: Vec<_> = (0..3).map(|_| random_amp(&mut rng, 0.5, 1.5)).collect();
        let locs = separated_points(&mut rng, dim, 3, 2.0, 1.0);
        let y = foldy_data(dim, &amps, &locs, &plan);
        let g = flat_gradient(&amps, &locs, &plan, &y, 0.0);
        assert!(g.iter().all(|v| v.abs() <= 1e-8), "{g:?}");
    }
}

#[test]
fn refinement_never_increases_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let dim = Dim::Two;
    let dom = BoxDomain::new(dim, 6.0).unwrap();
    let plan = build_plan(20, 1.0, dim, 7).unwrap();
    let truth_a = [c(1.0, 0.0), c(0.8, 0.3)];
    let truth_x = [Point::new2(-1.0, 0.2), Point::new2(1.0, -0.3)];
    let y = foldy_data(dim, &truth_a, &truth_x, &plan);
    let lambda = 1e-3 * raw_sample_scale(1.0, 20).powi(2);
    let opts = RefineOptions { max_iters: 200, ..RefineOptions::new(lambda) };
    for _ in 0..50 {
        let amps: Vec<_> = truth_a.iter().map(|a| a + random_amp(&mut rng, 0.0, 0.3)).collect();
        let locs: Vec<_> = truth_x
            .iter()
            .map(|x| *x + Point::new2(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
            .collect();
        let before = objective_foldy(&amps, &locs, &plan, &y, lambda).unwrap();
        let out = refine_measure(&DiscreteMeasure::from_parts(dim, &amps, &locs), &plan, &y, &dom, &opts).unwrap();
        let after = objective_foldy(&out.measure.amplitudes(), &out.measure.locations(), &plan, &y, lambda).unwrap();
        assert!(after <= before);
        assert_eq!(after, out.report.final_objective);
    }
}

#[test]
fn stationary_input_is_kept() {
    let dim = Dim::Two;
    let dom = BoxDomain::new(dim, 6.0).unwrap();
    let plan = build_plan(20, 1.0, dim, 1).unwrap();
    let a = [c(1.0, 0.0), c(-0.5, 0.5)];
    let x = [Point::new2(-1.5, 0.0), Point::new2(1.5, 0.5)];
    let y = foldy_data(dim, &a, &x, &plan);
    let out = refine_measure(&DiscreteMeasure::from_parts(dim, &a, &x), &plan, &y, &dom, &RefineOptions::new(0.0)).unwrap();
    assert_eq!(out.measure.len(), 2);
    for (p, q) in out.measure.locations().iter().zip(&x) {
        assert!(p.dist(q) <= 1e-9);
    }
}

#[test]
fn grid_initialization_on_the_truth() {
    // Truth placed on the 2×2 cell-centred grid of a side-4 box.
    let dim = Dim::Two;
    let dom = BoxDomain::new(dim, 4.0).unwrap();
    let plan = build_plan(30, 1.0, dim, 3).unwrap();
    let nodes = dom.grid(2);
    let amps = vec![c(1e-2, 0.0); nodes.len()];
    let y = foldy_data(dim, &amps, &nodes, &plan);
    let out = grid_initialization(&plan, &y, 2, &dom, &RefineOptions { amplitude_floor: 1e-3, ..RefineOptions::new(0.0) }).unwrap();
    assert_eq!(out.measure.len(), 4);
    for (p, q) in out.measure.locations().iter().zip(&nodes) {
        assert!(p.dist(q) <= 1e-9);
    }
    let out = grid_initialization(&plan, &y, 3, &dom, &RefineOptions::new(1e-6)).unwrap();
    assert!(out.measure.len() <= 9);
    assert!(grid_initialization(&plan, &y, 1, &dom, &RefineOptions::new(1e-6)).is_err());
}

#[test]
fn pipeline_on_zero_and_born_data() {
    let dim = Dim::Two;
    let dom = BoxDomain::new(dim, 8.0).unwrap();
    let plan = build_plan(40, 1.0, dim, 11).unwrap();
    let c2 = raw_sample_scale(1.0, 40).powi(2);
    let sfw = SfwOptions::new(0.05 * c2);
    let ref_opts = RefineOptions::new(0.05 * c2);
    let zero = run_pipeline(&plan, &[c(0.0, 0.0); 40], &dom, &sfw, &ref_opts).unwrap();
    assert!(zero.linear.is_empty() && zero.nonlinear.is_empty());

    // Weak, well separated scatterers: Born and Foldy data nearly agree.
    let a = [c(0.01, 0.0), c(0.008, 0.002)];
    let x = [Point::new2(-2.0, 1.0), Point::new2(2.0, -1.5)];
    let y = apply_born_at(&a, &x, &plan);
    let out = run_pipeline(&plan, &y, &dom, &SfwOptions::new(2e-5 * c2), &RefineOptions::new(2e-5 * c2)).unwrap();
    assert_eq!(out.linear.len(), 2, "{:?}", out.linear);
    assert_eq!(out.nonlinear.len(), 2);
    for (p, q) in out.linear.locations().iter().zip(&out.nonlinear.locations()) {
        assert!(p.dist(q) <= 1e-3, "{p:?} {q:?}");
    }
}

#[test]
fn split_atom_is_merged_back() {
    let plan = build_plan(20, 1.0, Dim::Two, 4).unwrap();
    let truth = [Point::new2(-1.0, 0.0), Point::new2(1.0, 0.5)];
    let y = foldy_data(Dim::Two, &[c(1.0, 0.0), c(0.5, 0.2)], &truth, &plan);
    let domain = BoxDomain::new(Dim::Two, 5.0).unwrap();
    // The first scatterer is split over two atoms a thousandth apart.
    let start = DiscreteMeasure::from_parts(
        Dim::Two,
        &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.2)],
        &[Point::new2(-1.0, 0.0), Point::new2(-1.0, 1e-3), truth[1]],
    );
    let opts = RefineOptions::new(1e-3 * raw_sample_scale(1.0, 20).powi(2));
    let out = refine_measure(&start, &plan, &y, &domain, &opts).unwrap();
    assert!(!out.report.unchanged && out.report.merged_atoms >= 1);
    assert_eq!(out.measure.len(), 2);
    for (atom, t) in out.measure.atoms.iter().zip(truth) {
        assert!(atom.location.dist(&t) < 1e-2);
    }
}

#[test]
fn two_scatterer_reference_run() {
    // κ = 1, m = 20, Δ = 2, noiseless Foldy data, λ^b = 0.5 and λ^f = 1e-3 in raw units, seed 0.
    let plan = build_plan(20, 1.0, Dim::Two, 0).unwrap();
    let truth = [Point::new2(-1.0, 0.0), Point::new2(1.0, 0.0)];
    let y = foldy_data(Dim::Two, &[c(1.0, 0.0); 2], &truth, &plan);
    let c2 = raw_sample_scale(1.0, 20).powi(2);
    let domain = BoxDomain::new(Dim::Two, 5.0).unwrap();
    let out = run_pipeline(&plan, &y, &domain, &SfwOptions::new(0.5 * c2), &RefineOptions::new(1e-3 * c2)).unwrap();
    let nl = &out.nonlinear;
    assert_eq!(nl.len(), 2);
    let mut atoms = nl.atoms.clone();
    atoms.sort_by(|a, b| a.location.0[0].total_cmp(&b.location.0[0]));
    for (a, t) in atoms.iter().zip(truth) {
        assert!(a.location.dist(&t) <= 1e-3, "{:?}", a.location);
        assert!((a.amplitude - 1.0).norm() <= 1e-3, "{}", a.amplitude);
    }
}
