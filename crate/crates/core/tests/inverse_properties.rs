use num_complex::Complex;

use fracorbit::forward::{solve_moving_source, CoefficientRule, ForwardOptions, SpectralProblem};
use fracorbit::fracops::{caputo_derivative, ProductWeights, TimeGrid};
use fracorbit::inverse::{
    assemble_difference_system, memory_term, random_localized_orbits, reconstruct_orbit_global,
    reconstruct_orbit_local, stability_experiment, synthetic_traces, volterra_difference_solve, DifferenceSystem,
    GlobalSettings, KernelTerm, ReconstructionConfig,
};
use fracorbit::linalg::SmallMatrix;
use fracorbit::model::{select_observation_points, BoxDomain, DomainSpec, Orbit, SourceProfile};
use fracorbit::specfun::rgamma;
use fracorbit::{Error, FracOrder};

fn order(a: f64) -> FracOrder<f64> {
    FracOrder::new(a).unwrap()
}

fn profile() -> SourceProfile<f64> {
    SourceProfile::new(0.45, 1.0, 1).unwrap()
}

fn bounded(g: &SourceProfile<f64>, l: f64) -> DomainSpec<f64> {
    DomainSpec::Bounded(BoxDomain::with_default_modes(vec![l], g).unwrap())
}

fn wiggle() -> Orbit<f64> {
    Orbit::sine(vec![0.05], 2.0 * std::f64::consts::PI, 1.0, 1.0).unwrap()
}

const X: f64 = 0.15;

fn local_error(alpha: f64, n: usize) -> (f64, f64) {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, n).unwrap();
    let data = synthetic_traces(&g, &wiggle(), order(alpha), &dom, &[vec![X]], &grid, 4).unwrap();
    let rec = reconstruct_orbit_local(&data, &g, order(alpha), &dom, &ReconstructionConfig::default()).unwrap();
    (rec.max_error(&wiggle()), rec.max_residual())
}

#[test]
fn memory_term_vanishes_at_the_start() {
    let g = profile();
    let problem = SpectralProblem::new(&g, &bounded(&g, 4.0)).unwrap();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let m = memory_term(&problem, order(0.7), &[vec![0.0]], &[vec![0.1]], &grid).unwrap();
    assert_eq!(m, vec![0.0]);
    assert!(memory_term(&problem, order(0.7), &[vec![0.1]], &[vec![0.1]], &grid).is_err());
}

#[test]
fn memory_term_single_mode_closed_form() {
    let g = profile();
    let domain = BoxDomain::new(vec![2.0], vec![1]).unwrap();
    let mode = domain.modes()[0].clone();
    let f1 = domain.eigenfunction(&mode, &[0.0]) * g.cosine_moment(&mode.wavenumber);
    let problem = SpectralProblem::new(&g, &DomainSpec::Bounded(domain.clone())).unwrap();
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let x = 0.3;
    for m in [1, 5, 20] {
        let gammas = vec![vec![0.0]; m + 1];
        let got = memory_term(&problem, order(1.0), &gammas, &[vec![x]], &grid).unwrap()[0];
        let t = grid.node(m);
        let want = f1 * (1.0 - (-mode.lambda * t).exp()) * domain.eigenfunction(&mode, &[x]);
        assert!(
            (got - want).abs() < 1e-13 * want.abs().max(1e-3),
            "m = {m}: {got} vs {want}"
        );
    }
}

#[test]
fn memory_term_matches_forward_operator_trace() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let alpha = order(0.7);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let opts = ForwardOptions {
        coefficients: CoefficientRule::Factorized,
        ..ForwardOptions::default()
    };
    let sol = solve_moving_source(&g, &wiggle(), alpha, &dom, &grid, &opts).unwrap();
    let problem = SpectralProblem::new(&g, &dom).unwrap();
    let gammas = wiggle().sample(&grid);
    let lu = sol.operator_trace(&[X]);
    for m in [1, 7, 32] {
        let got = memory_term(&problem, alpha, &gammas[..=m], &[vec![X]], &grid).unwrap()[0];
        assert!(
            (got - lu.at(m)).abs() < 1e-12 * g.peak(),
            "m = {m}: {got} vs {}",
            lu.at(m)
        );
    }
}

#[test]
fn stationary_source_is_recovered_as_stationary() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let still = Orbit::stationary(1, 1.0, 1.0).unwrap();
    let data = synthetic_traces(&g, &still, order(0.7), &dom, &[vec![X]], &grid, 4).unwrap();
    let rec = reconstruct_orbit_local(&data, &g, order(0.7), &dom, &ReconstructionConfig::default()).unwrap();
    assert!(rec.max_error(&still) < 1e-6, "{:e}", rec.max_error(&still));
}

#[test]
fn local_reconstruction_is_accurate_and_converges() {
    let errs: Vec<f64> = [32, 64, 128].iter().map(|&n| local_error(0.7, n).0).collect();
    assert!(errs.iter().all(|&e| e <= 5e-3), "{errs:?}");
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn accepted_steps_meet_the_newton_tolerance() {
    let (_, res) = local_error(0.5, 32);
    assert!(res <= ReconstructionConfig::default().newton_tol, "{res:e}");
}

#[test]
fn reconstruction_converges_for_all_orders() {
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let errs: Vec<f64> = [32, 64, 128].iter().map(|&n| local_error(alpha, n).0).collect();
        assert!(
            errs[1] < 1.2 * errs[0] && errs[2] < 1.2 * errs[1],
            "alpha {alpha}: {errs:?}"
        );
        assert!(errs[2] < errs[0], "alpha {alpha}: {errs:?}");
    }
}

#[test]
fn local_reconstruction_rejects_wrong_point_count_and_dt() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let data = synthetic_traces(&g, &wiggle(), order(0.7), &dom, &[vec![X], vec![-X]], &grid, 1).unwrap();
    let cfg = ReconstructionConfig::default();
    assert!(matches!(
        reconstruct_orbit_local(&data, &g, order(0.7), &dom, &cfg),
        Err(Error::InvalidParameter { .. })
    ));
    let one = data.select(&[0]);
    let bad = ReconstructionConfig {
        dt: Some(0.1),
        ..ReconstructionConfig::default()
    };
    assert!(matches!(
        reconstruct_orbit_local(&one, &g, order(0.7), &dom, &bad),
        Err(Error::DataMismatch(_))
    ));
}

#[test]
fn unreachable_data_reports_the_failing_step() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let mut data = synthetic_traces(&g, &wiggle(), order(1.0), &dom, &[vec![X]], &grid, 1).unwrap();
    // a trace jump no source position can explain
    let mut v = data.traces[0].values().to_vec();
    for x in v.iter_mut().skip(5) {
        *x += 1.0;
    }
    data.traces[0] = fracorbit::fracops::SampledFunction::new(grid, v).unwrap();
    match reconstruct_orbit_local(&data, &g, order(1.0), &dom, &ReconstructionConfig::default()) {
        Err(Error::NewtonDivergence { step, .. }) => assert!((4..=6).contains(&step), "step {step}"),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn global_scheme_follows_a_long_orbit() {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let layout = select_observation_points(&g, 1.0, 1.0, false).unwrap();
    assert_eq!(layout.count, 14);
    let dom = bounded(&g, 4.0);
    let orbit = Orbit::linear(vec![0.3], 1.0, 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let data = synthetic_traces(&g, &orbit, order(0.7), &dom, &layout.points, &grid, 4).unwrap();
    let settings = GlobalSettings::new(1.0, layout.epsilon);
    let rec =
        reconstruct_orbit_global(&data, &g, order(0.7), &dom, &settings, &ReconstructionConfig::default()).unwrap();
    assert!(rec.max_error(&orbit) <= 1e-2, "{:e}", rec.max_error(&orbit));
    assert!(rec.intervals.len() >= 3);
    let mut subsets: Vec<_> = rec.intervals.iter().map(|iv| iv.points.clone()).collect();
    subsets.dedup();
    assert!(subsets.len() >= 2, "no reselection: {subsets:?}");
    for w in rec.intervals.windows(2) {
        assert_eq!(w[0].end, w[1].start);
    }
}

#[test]
fn global_and_local_agree_inside_one_ball() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let pts = vec![vec![X], vec![-0.3], vec![0.05]];
    let data = synthetic_traces(&g, &wiggle(), order(0.7), &dom, &pts, &grid, 4).unwrap();
    // ε/K > T: one interval
    let settings = GlobalSettings::new(0.04, 0.05);
    let cfg = ReconstructionConfig::default();
    let global = reconstruct_orbit_global(&data, &g, order(0.7), &dom, &settings, &cfg).unwrap();
    assert_eq!(global.intervals.len(), 1);
    let chosen = global.intervals[0].points.clone();
    let local = reconstruct_orbit_local(&data.select(&chosen), &g, order(0.7), &dom, &cfg).unwrap();
    for (a, b) in global.gammas().iter().zip(local.gammas()) {
        assert!((a[0] - b[0]).abs() <= 1e-12);
    }
}

#[test]
fn truncated_data_give_partial_coverage() {
    let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
    let layout = select_observation_points(&g, 1.0, 1.0, false).unwrap();
    let dom = bounded(&g, 4.0);
    let orbit = Orbit::linear(vec![0.3], 1.0, 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let data = synthetic_traces(&g, &orbit, order(1.0), &dom, &layout.points, &grid, 2)
        .unwrap()
        .truncate(2)
        .unwrap();
    let settings = GlobalSettings::new(1.0, layout.epsilon);
    let rec =
        reconstruct_orbit_global(&data, &g, order(1.0), &dom, &settings, &ReconstructionConfig::default()).unwrap();
    assert_eq!(rec.coverage, (0.0, 2.0 / 64.0));
    assert_eq!(rec.steps.len(), 3);
}

fn power_kernel(beta: f64, h: f64, n: usize) -> ProductWeights<Complex<f64>> {
    let c = |v: f64| Complex::new(v, 0.0);
    ProductWeights::from_antiderivatives(
        n,
        c(1.0 / h),
        |k| Ok(c((k as f64 * h).powf(beta) * rgamma(beta + 1.0))),
        |k| Ok(c((k as f64 * h).powf(beta + 1.0) * rgamma(beta + 2.0))),
    )
    .unwrap()
}

/// P(t)ρ = rhs + ∫(t−s)^{β−1}/Γ(β)·U(t)V(s)ᵀρ(s)ds with ρ* = (t², 1 + t³).
fn manufactured(n: usize) -> f64 {
    let beta = 0.6;
    let grid = TimeGrid::new(1.0, n).unwrap();
    let nodes = grid.nodes();
    let p: Vec<SmallMatrix<f64>> = nodes
        .iter()
        .map(|&t| SmallMatrix::from_rows(&[vec![2.0 + t, 0.3], vec![0.1, 1.5]]))
        .collect();
    let rho = |t: f64| [t * t, 1.0 + t * t * t];
    let c = |v: f64| Complex::new(v, 0.0);
    // V(s)·ρ*(s) = s·s² + 1·(1 + s³) = 1 + 2s³, whose J^β is closed-form
    let j = |t: f64| t.powf(beta) * rgamma(beta + 1.0) + 12.0 * t.powf(beta + 3.0) * rgamma(beta + 4.0);
    let rhs = nodes
        .iter()
        .zip(&p)
        .map(|(&t, pm)| {
            let r = pm.matvec(&rho(t));
            vec![r[0] - j(t), r[1] - t * j(t)]
        })
        .collect();
    let term = KernelTerm {
        weights: power_kernel(beta, grid.dt(), n),
        left: nodes.iter().map(|&t| vec![c(1.0), c(t)]).collect(),
        right: nodes.iter().map(|&s| vec![c(s), c(1.0)]).collect(),
    };
    let sys = DifferenceSystem {
        grid,
        p,
        terms: vec![term],
        rhs,
    };
    let sol = volterra_difference_solve(&sys, 1e6).unwrap();
    sol.rho
        .iter()
        .zip(&nodes)
        .map(|(r, &t)| {
            let e = rho(t);
            (r[0] - e[0]).abs().max((r[1] - e[1]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn volterra_solver_is_second_order() {
    let errs: Vec<f64> = [16, 32, 64, 128].iter().map(|&n| manufactured(n)).collect();
    for w in errs.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((p - 2.0).abs() <= 0.3, "observed order {p} from {errs:?}");
    }
}

#[test]
fn volterra_without_memory_is_pointwise() {
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let p: Vec<_> = (0..5)
        .map(|m| SmallMatrix::from_rows(&[vec![1.0 + m as f64, 0.0], vec![1.0, 2.0]]))
        .collect();
    let rhs: Vec<Vec<f64>> = (0..5).map(|m| vec![m as f64, 1.0]).collect();
    let sys = DifferenceSystem {
        grid,
        p: p.clone(),
        terms: vec![],
        rhs: rhs.clone(),
    };
    let sol = volterra_difference_solve(&sys, 1e6).unwrap();
    for m in 0..5 {
        let want = p[m].solve(&rhs[m]).unwrap();
        assert!((sol.rho[m][0] - want[0]).abs() < 1e-15 && (sol.rho[m][1] - want[1]).abs() < 1e-15);
    }
    assert!(matches!(
        volterra_difference_solve(&sys, 0.1),
        Err(Error::Singular { .. })
    ));
}

#[test]
fn difference_system_recovers_orbit_differences() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let alpha = order(0.7);
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let problem = SpectralProblem::new(&g, &dom).unwrap();
    let base = Orbit::stationary(1, 1.0, 1.0).unwrap();
    let other = wiggle();
    let u1 = solve_moving_source(&g, &base, alpha, &dom, &grid, &ForwardOptions::default()).unwrap();
    let mut rel = Vec::new();
    for s in [1.0, 0.5, 0.25] {
        let o2 = base.blend(&other, s, &grid).unwrap();
        let u2 = solve_moving_source(&g, &o2, alpha, &dom, &grid, &ForwardOptions::default()).unwrap();
        let w = u1.trace(&[X]).sub(&u2.trace(&[X])).unwrap();
        let rhs = caputo_derivative(&w, 0.7)
            .unwrap()
            .values()
            .iter()
            .map(|v| vec![*v])
            .collect();
        let (g1, g2) = (base.sample(&grid), o2.sample(&grid));
        let sys = assemble_difference_system(&problem, &g, alpha, &[vec![X]], &g1, &g2, rhs, &grid).unwrap();
        let sol = volterra_difference_solve(&sys, 1e6).unwrap();
        let scale = base.c_distance(&o2, &grid);
        let err = sol
            .rho
            .iter()
            .zip(g1.iter().zip(&g2))
            .skip(1)
            .map(|(r, (a, b))| (r[0] - (b[0] - a[0])).abs())
            .fold(0.0, f64::max);
        rel.push(err / scale);
    }
    assert!(rel[0] < 0.2, "{rel:?}");
    assert!(rel[2] < rel[0], "{rel:?}");
}

#[test]
fn distinct_orbits_give_distinct_traces() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let orbits = random_localized_orbits(6, 1, 0.05, 1.0, 1.0, 3).unwrap();
    for pair in orbits.chunks(2) {
        assert!(pair[0].c_distance(&pair[1], &grid) >= 1e-3);
        let a = synthetic_traces(&g, &pair[0], order(0.7), &dom, &[vec![X]], &grid, 1).unwrap();
        let b = synthetic_traces(&g, &pair[1], order(0.7), &dom, &[vec![X]], &grid, 1).unwrap();
        assert!(a.traces[0].sub(&b.traces[0]).unwrap().sup_norm() > 1e-9);
    }
}

#[test]
fn random_orbits_respect_the_localized_bounds() {
    let grid = TimeGrid::new(1.0, 400).unwrap();
    for o in random_localized_orbits::<f64>(10, 2, 0.05, 1.0, 1.0, 5).unwrap() {
        assert!(o.max_radius(400) <= 0.05);
        for m in 0..=400 {
            let v = o.velocity(grid.node(m));
            assert!((v[0] * v[0] + v[1] * v[1]).sqrt() <= 1.0);
        }
    }
}

#[test]
fn stability_table_is_finite_and_rejects_equal_orbits() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let o = random_localized_orbits(4, 1, 0.05, 1.0, 1.0, 9).unwrap();
    let pairs = vec![(o[0].clone(), o[1].clone()), (o[2].clone(), o[3].clone())];
    let table = stability_experiment(&pairs, &g, &[0.5, 1.0], &dom, &[vec![X]], &grid).unwrap();
    assert_eq!(table.rows.len(), 4);
    assert!(table.max_ratio.is_finite() && table.max_ratio > 0.0);
    let same = vec![(o[0].clone(), o[0].clone())];
    assert!(stability_experiment(&same, &g, &[0.5], &dom, &[vec![X]], &grid).is_err());
}

#[test]
fn stability_ratio_settles_as_orbits_merge() {
    let g = profile();
    let dom = bounded(&g, 4.0);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let o = random_localized_orbits(2, 1, 0.05, 1.0, 1.0, 21).unwrap();
    let ratios: Vec<f64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|&s| {
            let near = o[0].blend(&o[1], s, &grid).unwrap();
            let pairs = vec![(o[0].clone(), near)];
            stability_experiment(&pairs, &g, &[0.7], &dom, &[vec![X]], &grid)
                .unwrap()
                .max_ratio
        })
        .collect();
    let (d1, d2) = ((ratios[1] - ratios[0]).abs(), (ratios[2] - ratios[1]).abs());
    assert!(d2 < d1, "{ratios:?}");
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn distinct_localized_orbits_have_distinct_traces(seed in any::<u64>(), alpha in 0.3f64..=2.0) {
            let g = profile();
            let dom = bounded(&g, 4.0);
            let grid = TimeGrid::new(1.0, 16).unwrap();
            let o = random_localized_orbits(2, 1, 0.05, 1.0, 1.0, seed).unwrap();
            prop_assume!(o[0].c_distance(&o[1], &grid) >= 1e-3);
            let a = synthetic_traces(&g, &o[0], order(alpha), &dom, &[vec![X]], &grid, 1).unwrap();
            let b = synthetic_traces(&g, &o[1], order(alpha), &dom, &[vec![X]], &grid, 1).unwrap();
            prop_assert!(a.traces[0].sub(&b.traces[0]).unwrap().sup_norm() > 0.0);
        }

        #[test]
        fn exact_data_give_zero_residual_steps(
            alpha in 0.3f64..=2.0,
            amp in 0.01f64..0.05,
        ) {
            let g = profile();
            let dom = bounded(&g, 4.0);
            let grid = TimeGrid::new(1.0, 16).unwrap();
            let orbit = Orbit::sine(vec![amp], 2.0 * std::f64::consts::PI, 1.0, 1.0).unwrap();
            let data = synthetic_traces(&g, &orbit, order(alpha), &dom, &[vec![X]], &grid, 1).unwrap();
            let cfg = ReconstructionConfig::default();
            let rec = reconstruct_orbit_local(&data, &g, order(alpha), &dom, &cfg).unwrap();
            prop_assert!(rec.max_residual() <= cfg.newton_tol);
        }
    }
}
