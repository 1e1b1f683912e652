use fracorbit::forward::{
    observe_and_perturb, solve_homogeneous_free, solve_moving_source, to_frequency, CoefficientRule, ForwardOptions,
    SpatialField, TraceMeta,
};
use fracorbit::fracops::{caputo_derivative, TimeGrid};
use fracorbit::model::{BoxDomain, DomainSpec, FreeSpace, FrequencyGrid, ObservationSet, Orbit, SourceProfile};
use fracorbit::quadrature::{integrate_real, AdaptiveOptions};
use fracorbit::verify::duhamel;
use fracorbit::FracOrder;

fn order(a: f64) -> FracOrder<f64> {
    FracOrder::new(a).unwrap()
}

fn bounded(g: &SourceProfile<f64>, l: f64) -> DomainSpec<f64> {
    DomainSpec::Bounded(BoxDomain::with_default_modes(vec![l], g).unwrap())
}

fn quad(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let opts = AdaptiveOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    integrate_real(f, &[a, b], opts).unwrap().value
}

#[test]
fn duhamel_matches_stepper_and_converges() {
    let checks = duhamel(1024).unwrap();
    for c in &checks {
        assert!(c.passed, "{c:?}");
    }
    let coarse = duhamel(256).unwrap()[0].value;
    let fine = duhamel(1024).unwrap()[0].value;
    // the stepper is the less accurate side; its error is O(h^{min(1,α)}) or better
    assert!(fine < coarse / 4.0f64.powf(0.3), "{coarse:e} -> {fine:e}");
}

#[test]
fn free_heat_matches_gaussian_convolution() {
    let g = SourceProfile::new(0.5, 1.0, 1).unwrap();
    let grid = FrequencyGrid::for_profile(&g, 24.0, 1e-12).unwrap();
    let space = FreeSpace::laplacian(grid).unwrap();
    let v0 = SpatialField::from_profile(grid, &g);
    let t = 0.1;
    let u = solve_homogeneous_free(&v0, order(1.0), &space, t).unwrap();
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for (k, &val) in u.values.iter().enumerate() {
        let x = SpatialField::axis_node(&grid, k);
        if x.abs() > 3.0 {
            continue;
        }
        let exact = quad(
            |y| (-(x - y) * (x - y) / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt() * g.value(&[y]),
            -0.5,
            0.5,
        );
        worst = worst.max((val - exact).abs());
        peak = peak.max(exact.abs());
    }
    assert!(worst / peak < 1e-6, "relative error {:e}", worst / peak);
}

#[test]
fn free_wave_matches_dalembert() {
    let g = SourceProfile::new(0.5, 1.0, 1).unwrap();
    let grid = FrequencyGrid::for_profile(&g, 24.0, 1e-12).unwrap();
    let space = FreeSpace::laplacian(grid).unwrap();
    let v1 = SpatialField::from_profile(grid, &g);
    let t = 0.7;
    let u = solve_homogeneous_free(&v1, order(2.0), &space, t).unwrap();
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for (k, &val) in u.values.iter().enumerate() {
        let x = SpatialField::axis_node(&grid, k);
        if x.abs() > 3.0 {
            continue;
        }
        let (a, b) = ((x - t).max(-0.5), (x + t).min(0.5));
        let exact = if a < b {
            0.5 * quad(|y| g.value(&[y]), a, b)
        } else {
            0.0
        };
        worst = worst.max((val - exact).abs());
        peak = peak.max(exact.abs());
    }
    assert!(worst / peak < 1e-6, "relative error {:e}", worst / peak);
}

#[test]
fn free_wave_rejects_drift() {
    let grid = FrequencyGrid::new(20.0, 64, 1).unwrap();
    let space = FreeSpace::new(vec![vec![1.0]], vec![0.5], 0.0, grid).unwrap();
    let v = SpatialField::from_fn(grid, |_| 0.0);
    assert!(solve_homogeneous_free(&v, order(2.0), &space, 0.1).is_err());
    let u = solve_homogeneous_free(&v, order(1.0), &space, 0.1).unwrap();
    assert!(u.values.iter().all(|&x| x == 0.0));
}

#[test]
fn zero_profile_gives_zero_traces() {
    let g = SourceProfile::new(0.4, 0.0, 1).unwrap();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let orbit = Orbit::sine(vec![0.05], 2.0 * std::f64::consts::PI, 1.0, 0.4).unwrap();
    let dom = bounded(&SourceProfile::new(0.4, 1.0, 1).unwrap(), 2.0);
    let sol = solve_moving_source(&g, &orbit, order(0.7), &dom, &grid, &ForwardOptions::default()).unwrap();
    let obs = ObservationSet::new(vec![vec![0.1], vec![-0.2]], grid, &dom).unwrap();
    let traces = sol.traces(&obs, TraceMeta::default()).unwrap();
    assert!(traces.traces.iter().all(|t| t.values().iter().all(|&v| v == 0.0)));
}

#[test]
fn stationary_bounded_source_matches_modal_closed_forms() {
    // γ ≡ 0: uₙ(t) = fₙ(1 − e^{−λₙt})/λₙ (α = 1) and fₙ(1 − cos√λₙt)/λₙ (α = 2)
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let dom = BoxDomain::new(vec![2.0], vec![40]).unwrap();
    let spec = DomainSpec::Bounded(dom.clone());
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let orbit = Orbit::stationary(1, 1.0, 1.0).unwrap();
    let quad_g = g.quadrature(400);
    for alpha in [1.0, 2.0] {
        let sol = solve_moving_source(&g, &orbit, order(alpha), &spec, &grid, &ForwardOptions::default()).unwrap();
        for x in [0.0, 0.15, 0.5] {
            let tr = sol.trace(&[x]);
            for (m, t) in grid.nodes().into_iter().enumerate() {
                let exact: f64 = dom
                    .modes()
                    .iter()
                    .map(|md| {
                        let f = quad_g.cosine_moment(&md.wavenumber) * dom.eigenfunction(md, &[0.0]);
                        let l = md.lambda;
                        let time = if alpha == 1.0 {
                            -(-l * t).exp_m1() / l
                        } else {
                            (1.0 - (l.sqrt() * t).cos()) / l
                        };
                        f * time * dom.eigenfunction(md, &[x])
                    })
                    .sum();
                assert!((tr.at(m) - exact).abs() < 1e-12, "alpha {alpha} x {x} m {m}");
            }
        }
    }
}

#[test]
fn solutions_are_linear_in_the_profile_and_start_at_zero() {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let g2 = g.scaled(2.0).unwrap();
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let orbit = Orbit::sine(vec![0.05], 2.0 * std::f64::consts::PI, 1.0, 0.4).unwrap();
    let dom = bounded(&g, 2.0);
    for alpha in [0.6, 1.4] {
        let a = solve_moving_source(&g, &orbit, order(alpha), &dom, &grid, &ForwardOptions::default()).unwrap();
        let b = solve_moving_source(&g2, &orbit, order(alpha), &dom, &grid, &ForwardOptions::default()).unwrap();
        for x in [0.1, 0.3] {
            let (ta, tb) = (a.trace(&[x]), b.trace(&[x]));
            let scale = ta.sup_norm();
            for m in 0..grid.len() {
                assert!((2.0 * ta.at(m) - tb.at(m)).abs() <= 1e-13 * scale, "alpha {alpha}");
            }
            assert_eq!(ta.at(0), 0.0);
            if alpha > 1.0 {
                let first = (ta.at(1) - ta.at(0)).abs();
                assert!(first <= grid.dt() * g.peak(), "first difference {first:e}");
            }
        }
    }
}

#[test]
fn coefficient_rules_give_the_same_field() {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let orbit = Orbit::sine(vec![0.05], 2.0 * std::f64::consts::PI, 1.0, 0.4).unwrap();
    let dom = bounded(&g, 2.0);
    let opts = |c| ForwardOptions {
        coefficients: c,
        ..ForwardOptions::default()
    };
    let a = solve_moving_source(&g, &orbit, order(0.8), &dom, &grid, &opts(CoefficientRule::Direct)).unwrap();
    let b = solve_moving_source(&g, &orbit, order(0.8), &dom, &grid, &opts(CoefficientRule::Factorized)).unwrap();
    let (ta, tb) = (a.trace(&[0.2]), b.trace(&[0.2]));
    assert!(ta.sub(&tb).unwrap().sup_norm() < 1e-12 * ta.sup_norm());
    assert!(a.tail_indicator() < 1e-8, "tail {}", a.tail_indicator());
}

#[test]
fn bounded_and_free_agree_for_short_horizons() {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let t_end = 0.25;
    let grid = TimeGrid::new(t_end, 128).unwrap();
    let orbit = Orbit::sine(vec![0.05], 2.0 * std::f64::consts::PI, t_end, 0.4).unwrap();
    // subdiffusive tails are heavy: the box half-width must be several units
    let bdom = bounded(&g, 8.0);
    let fgrid = FrequencyGrid::for_profile(&g, 16.0, 1e-10).unwrap();
    let fdom = DomainSpec::Free(FreeSpace::laplacian(fgrid).unwrap());
    for alpha in [0.5, 1.0] {
        let a = solve_moving_source(&g, &orbit, order(alpha), &bdom, &grid, &ForwardOptions::default()).unwrap();
        let b = solve_moving_source(&g, &orbit, order(alpha), &fdom, &grid, &ForwardOptions::default()).unwrap();
        for x in [0.0, 0.1, -0.25] {
            let (ta, tb) = (a.trace(&[x]), b.trace(&[x]));
            let rel = ta.sub(&tb).unwrap().sup_norm() / ta.sup_norm();
            assert!(rel < 1e-3, "alpha {alpha} x {x}: {rel:e}");
        }
    }
}

#[test]
fn free_space_intermediates_are_hermitian() {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let grid = TimeGrid::new(0.2, 32).unwrap();
    let orbit = Orbit::linear(vec![0.2], 0.2, 0.5).unwrap();
    let fgrid = FrequencyGrid::for_profile(&g, 8.0, 1e-10).unwrap();
    let space = FreeSpace::new(vec![vec![1.0]], vec![0.3], 0.5, fgrid).unwrap();
    let sol = solve_moving_source(
        &g,
        &orbit,
        order(0.7),
        &DomainSpec::Free(space),
        &grid,
        &ForwardOptions::default(),
    )
    .unwrap();
    let c = sol.coefficients();
    for k in 0..fgrid.len() {
        if let Some(p) = fgrid.mirror(k) {
            for (m, (a, b)) in c[k].iter().zip(&c[p]).enumerate() {
                let err = (a - b.conj()).norm();
                assert!(err <= 1e-15 * a.norm(), "k {k} p {p} m {m}: {err:e} {a}");
            }
        }
    }
    let v0 = SpatialField::from_profile(fgrid, &g);
    let s = to_frequency(&v0);
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for k in 0..fgrid.len() {
        if let Some(p) = fgrid.mirror(k) {
            assert!((s[k] - s[p].conj()).norm() < 1e-12 * scale);
        }
    }
}

fn residual(alpha: f64, n: usize) -> f64 {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let grid = TimeGrid::new(1.0, n).unwrap();
    let orbit = Orbit::sine(vec![0.05], 2.0 * std::f64::consts::PI, 1.0, 0.4).unwrap();
    let dom = bounded(&g, 2.0);
    let sol = solve_moving_source(&g, &orbit, order(alpha), &dom, &grid, &ForwardOptions::default()).unwrap();
    let mut worst = 0.0f64;
    for x in [0.1, 0.25, -0.2] {
        let du = caputo_derivative(&sol.trace(&[x]), alpha).unwrap();
        let lu = sol.operator_trace(&[x]);
        for (m, t) in grid.nodes().into_iter().enumerate() {
            if !(0.1..=0.9).contains(&t) {
                continue;
            }
            let src = g.value(&[x - orbit.position(t)[0]]);
            worst = worst.max((du.at(m) + lu.at(m) - src).abs());
        }
    }
    worst / g.peak()
}

#[test]
fn moving_source_pde_residual_shrinks() {
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let (a, b) = (residual(alpha, 512), residual(alpha, 1024));
        assert!(a <= 5e-3 && b < a, "alpha {alpha}: {a:e} -> {b:e}");
    }
}

#[test]
fn noise_is_seeded_and_scaled() {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let orbit = Orbit::stationary(1, 1.0, 1.0).unwrap();
    let dom = bounded(&g, 2.0);
    let sol = solve_moving_source(&g, &orbit, order(1.0), &dom, &grid, &ForwardOptions::default()).unwrap();
    let pts: Vec<Vec<f64>> = (0..48).map(|j| vec![-0.47 + 0.02 * j as f64]).collect();
    let obs = ObservationSet::new(pts, grid, &dom).unwrap();
    let exact = sol.traces(&obs, TraceMeta::default()).unwrap();
    let same = observe_and_perturb(&exact, 0.0, 9).unwrap();
    assert_eq!(same.traces, exact.traces);
    let a = observe_and_perturb(&exact, 0.01, 9).unwrap();
    let b = observe_and_perturb(&exact, 0.01, 9).unwrap();
    assert_eq!(a, b);
    let c = observe_and_perturb(&exact, 0.01, 10).unwrap();
    assert_ne!(a.traces, c.traces);
    // normalized deviations have unit variance up to ±30%
    let mut z = Vec::new();
    for (noisy, clean) in a.traces.iter().zip(&exact.traces) {
        let s = 0.01 * clean.sup_norm();
        z.extend(noisy.values().iter().zip(clean.values()).map(|(u, v)| (u - v) / s));
    }
    assert!(z.len() >= 10000);
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (z.len() - 1) as f64;
    assert!((var - 1.0).abs() < 0.3, "variance {var}");
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn linear_in_the_profile_and_zero_at_start(
            alpha in 0.2f64..=2.0,
            s in 0.1f64..10.0,
            x in -0.3f64..0.3,
        ) {
            let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
            let gs = g.scaled(s).unwrap();
            let dom = DomainSpec::Bounded(BoxDomain::new(vec![2.0], vec![96]).unwrap());
            let grid = TimeGrid::new(1.0, 32).unwrap();
            let orbit = Orbit::sine(vec![0.05], 2.0 * std::f64::consts::PI, 1.0, 0.4).unwrap();
            let opts = ForwardOptions::default();
            let a = solve_moving_source(&g, &orbit, order(alpha), &dom, &grid, &opts).unwrap().trace(&[x]);
            let b = solve_moving_source(&gs, &orbit, order(alpha), &dom, &grid, &opts).unwrap().trace(&[x]);
            prop_assert_eq!(a.at(0), 0.0);
            let scale = b.sup_norm();
            for m in 0..grid.len() {
                prop_assert!((s * a.at(m) - b.at(m)).abs() <= 1e-12 * scale);
            }
        }
    }
}
