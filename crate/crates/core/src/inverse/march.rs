use serde::{Deserialize, Serialize};

use super::config::ReconstructionConfig;
use super::engine::{stationary_response, MarchEngine, NodeOperator};
use crate::error::{Error, Result};
use crate::forward::{SpectralProblem, TraceSet};
use crate::fracops::{mollify, onset_exponents, FracCalculus, SampledFunction, TimeGrid};
use crate::linalg::SmallMatrix;
use crate::model::{observability_condition, DomainSpec, Orbit, SourceProfile, DEFAULT_OBSERVABILITY_SAMPLES};
use crate::order::FracOrder;
use crate::real::Real;

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub t: T,
    pub gamma: Vec<T>,
    pub residual: T,
    pub jacobian_cond: T,
    pub iterations: usize,
    /// solved through the half-step continuation
    pub bisected: bool,
}

/// One interval [T_{ℓ−1}, T_ℓ] of the global scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalLog<T> {
    pub index: usize,
    pub start: T,
    pub end: T,
    /// y_ℓ = γ̂(T_{ℓ−1})
    pub center: Vec<T>,
    /// indices into the data's points
    pub points: Vec<usize>,
    pub observability_bound: T,
}

/// A reconstructed orbit with per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction<T> {
    pub grid: TimeGrid<T>,
    /// one record per node, starting with the seed γ(0) = 0
    pub steps: Vec<StepRecord<T>>,
    pub intervals: Vec<IntervalLog<T>>,
    /// time span actually reconstructed
    pub coverage: (T, T),
}

impl<T: Real> Reconstruction<T> {
    pub fn gammas(&self) -> Vec<Vec<T>> {
        self.steps.iter().map(|s| s.gamma.clone()).collect()
    }

    /// The reconstruction as a sampled orbit on its covered grid.
    pub fn orbit(&self, speed_bound: T) -> Result<Orbit<T>> {
        let grid = self.grid.prefix(self.steps.len() - 1)?;
        Orbit::sampled(grid, self.gammas(), speed_bound)
    }

    /// max over nodes of |γ̂(tₘ) − γ(tₘ)|.
    pub fn max_error(&self, truth: &Orbit<T>) -> T {
        self.steps
            .iter()
            .map(|s| {
                let g = truth.position(s.t);
                s.gamma
                    .iter()
                    .zip(&g)
                    .map(|(a, b)| (*a - *b) * (*a - *b))
                    .fold(T::zero(), |x, y| x + y)
                    .sqrt()
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn max_residual(&self) -> T {
        self.steps.iter().map(|s| s.residual).fold(T::zero(), |a, b| a.max(b))
    }
}

/// Data prepared for marching: ∂ₜᵅu at every point on the reconstruction grid.
struct MarchData<T> {
    grid: TimeGrid<T>,
    points: Vec<Vec<T>>,
    caputo: Vec<SampledFunction<T>>,
}

fn prepare<T: Real>(
    data: &TraceSet<T>,
    problem: &SpectralProblem<T>,
    alpha: FracOrder<T>,
    config: &ReconstructionConfig,
) -> Result<MarchData<T>> {
    config.validate()?;
    let fine = *data.grid();
    let factor = match config.dt {
        None => 1,
        Some(dt) => {
            let ratio = T::lit(dt) / fine.dt();
            let factor = ratio.round().to_usize().unwrap_or(0);
            if factor == 0 || (ratio - T::from_index(factor)).abs() > T::lit(1e-9) * ratio {
                return Err(Error::DataMismatch(format!(
                    "dt = {dt} is not an integer multiple of the data step {}",
                    fine.dt()
                )));
            }
            factor
        }
    };
    let grid = fine.coarsened(factor)?;
    // the onset is removed and the noise averaged on the data grid; only
    // then are the traces thinned to the reconstruction step
    let onset = if config.subtract_onset {
        Some((
            stationary_response(problem, alpha, &data.points, &fine)?,
            stationary_response(problem, alpha, &data.points, &grid)?,
        ))
    } else {
        None
    };
    let calc = FracCalculus::new();
    let exponents = onset_exponents(alpha.value(), config.onset_correction);
    let caputo = data
        .traces
        .iter()
        .enumerate()
        .map(|(j, trace)| {
            let rest = match &onset {
                Some((on, _)) => trace.sub(&on[j].0)?,
                None => trace.clone(),
            };
            let rest = mollify(&rest, config.mollifier).subsample(factor)?;
            let d = calc.caputo_derivative_corrected(&rest, alpha.value(), &exponents)?;
            match &onset {
                Some((_, on)) => {
                    let v = d.values().iter().zip(on[j].1.values()).map(|(a, b)| *a + *b).collect();
                    Ok(SampledFunction::new(grid, v)?.with_low_accuracy_head(d.low_accuracy_head()))
                }
                None => Ok(d),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarchData {
        grid,
        points: data.points.clone(),
        caputo,
    })
}

/// (γ, residual, Jacobian condition, iterations)
type NewtonSolution<T> = (Vec<T>, T, T, usize);
/// last residual and the error that stopped the iteration, if any
type NewtonFailure<T> = (T, Option<Error>);

/// Solves g(xʲ − γ) − I_j(γ) = target_j for γ by Newton's method, where
/// I_j is the implicit current-node part of ℒu.
fn newton<T: Real>(
    engine: &MarchEngine<T>,
    op: &NodeOperator<T>,
    g: &SourceProfile<T>,
    points: &[Vec<T>],
    target: &[T],
    start: &[T],
    config: &ReconstructionConfig,
) -> std::result::Result<NewtonSolution<T>, NewtonFailure<T>> {
    let d = start.len();
    let tol = T::lit(config.newton_tol);
    let mut gamma = start.to_vec();
    let mut last = T::infinity();
    for it in 0..=config.newton_max_iter {
        let (imp, imp_jac) = engine.implicit_term(op, &gamma);
        let mut f = vec![T::zero(); d];
        let mut rows = Vec::with_capacity(d);
        for j in 0..d {
            let y: Vec<T> = points[j].iter().zip(&gamma).map(|(x, c)| *x - *c).collect();
            f[j] = g.value(&y) - imp[j] - target[j];
            let grad = g.gradient(&y);
            rows.push((0..d).map(|a| -grad[a] - imp_jac[j][a]).collect::<Vec<T>>());
        }
        let res = f.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if !res.is_finite() {
            return Err((res, None));
        }
        let jac = SmallMatrix::from_rows(&rows);
        let cond = jac.cond2();
        if res <= tol {
            return Ok((gamma, res, cond, it));
        }
        if !(cond <= T::lit(config.max_condition)) {
            return Err((
                res,
                Some(Error::Singular {
                    context: format!("Newton Jacobian at gamma = {gamma:?}"),
                    condition: cond.to_f64_lossy(),
                }),
            ));
        }
        let mut step = match jac.solve(&f.iter().map(|v| -*v).collect::<Vec<_>>()) {
            Ok(s) => s,
            Err(e) => return Err((res, Some(e))),
        };
        // trust region: at most δ/4 per iteration
        let len = step.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
        let cap = g.delta() / T::lit(4.0);
        if len > cap {
            for v in step.iter_mut() {
                *v = *v * cap / len;
            }
        }
        for (c, s) in gamma.iter_mut().zip(&step) {
            *c = *c + *s;
        }
        // a point outside supp g(· − γ) carries no information on γ
        let outside = points.iter().any(|x| {
            x.iter()
                .zip(&gamma)
                .fold(T::zero(), |a, (p, c)| a + (*p - *c) * (*p - *c))
                .sqrt()
                >= g.delta()
        });
        if outside {
            return Err((res, None));
        }
        last = res;
    }
    Err((last, None))
}

/// Advances the engine by one node using the traces at `idx`.
fn step<T: Real>(
    engine: &mut MarchEngine<T>,
    g: &SourceProfile<T>,
    data: &MarchData<T>,
    idx: &[usize],
    config: &ReconstructionConfig,
) -> Result<StepRecord<T>> {
    let m = engine.next_node();
    let points: Vec<Vec<T>> = idx.iter().map(|&j| data.points[j].clone()).collect();
    let op = engine.node_operator(&points)?;
    // g(xʲ − γ) − I_j(γ) = ∂ₜᵅu(xʲ, tₘ) + memory_j
    let target: Vec<T> = idx
        .iter()
        .zip(&op.memory)
        .map(|(&j, mem)| data.caputo[j].at(m) + *mem)
        .collect();
    let prev = engine.gammas()[m - 1].clone();
    let t = data.grid.node(m);
    let record = match newton(engine, &op, g, &points, &target, &prev, config) {
        Ok((gamma, residual, cond, iterations)) => StepRecord {
            t,
            gamma,
            residual,
            jacobian_cond: cond,
            iterations,
            bisected: false,
        },
        Err((residual, err)) => {
            if !config.bisect_on_failure {
                return Err(err.unwrap_or(Error::NewtonDivergence {
                    step: m,
                    time: t.to_f64_lossy(),
                    residual: residual.to_f64_lossy(),
                }));
            }
            // half-step continuation: first reach the target midway between
            // the value explained by γ̂(tₘ₋₁) and the data
            let (imp_prev, _) = engine.implicit_term(&op, &prev);
            let at_prev: Vec<T> = points
                .iter()
                .zip(&imp_prev)
                .map(|(x, i)| {
                    let y: Vec<T> = x.iter().zip(&prev).map(|(a, b)| *a - *b).collect();
                    g.value(&y) - *i
                })
                .collect();
            let half: Vec<T> = target
                .iter()
                .zip(&at_prev)
                .map(|(a, b)| (*a + *b) * T::lit(0.5))
                .collect();
            let fail = |res: T, e: Option<Error>| {
                e.unwrap_or(Error::NewtonDivergence {
                    step: m,
                    time: t.to_f64_lossy(),
                    residual: res.to_f64_lossy(),
                })
            };
            let (mid, _, _, i1) = newton(engine, &op, g, &points, &half, &prev, config).map_err(|(r, e)| fail(r, e))?;
            let (gamma, residual, cond, i2) =
                newton(engine, &op, g, &points, &target, &mid, config).map_err(|(r, e)| fail(r, e))?;
            log::debug!("step {m}: recovered through half-step continuation");
            StepRecord {
                t,
                gamma,
                residual,
                jacobian_cond: cond,
                iterations: i1 + i2,
                bisected: true,
            }
        }
    };
    engine.push(record.gamma.clone())?;
    Ok(record)
}

fn seed_record<T: Real>(d: usize) -> StepRecord<T> {
    StepRecord {
        t: T::zero(),
        gamma: vec![T::zero(); d],
        residual: T::zero(),
        jacobian_cond: T::one(),
        iterations: 0,
        bisected: false,
    }
}

/// Marching reconstruction from exactly d traces: at each node the d
/// equations g(xʲ − γ) = ∂ₜᵅu(xʲ, tₘ) + ℒu(xʲ, tₘ) are solved for γ(tₘ),
/// with ℒu carried causally by the memory term.
pub fn reconstruct_orbit_local<T: Real>(
    data: &TraceSet<T>,
    g: &SourceProfile<T>,
    alpha: FracOrder<T>,
    domain: &DomainSpec<T>,
    config: &ReconstructionConfig,
) -> Result<Reconstruction<T>> {
    let d = g.dim();
    if data.len() != d {
        return Err(Error::invalid(
            "points",
            format!("local reconstruction needs d = {d} points, got {}", data.len()),
        ));
    }
    let problem = SpectralProblem::new(g, domain)?;
    let prepared = prepare(data, &problem, alpha, config)?;
    let mut engine = MarchEngine::new(problem, alpha, prepared.grid)?;
    let idx: Vec<usize> = (0..d).collect();
    let mut steps = vec![seed_record(d)];
    for _ in 1..=prepared.grid.n_steps() {
        steps.push(step(&mut engine, g, &prepared, &idx, config)?);
    }
    Ok(Reconstruction {
        grid: prepared.grid,
        steps,
        intervals: Vec::new(),
        coverage: (T::zero(), prepared.grid.t_end()),
    })
}

/// Settings of the interval-by-interval scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalSettings<T> {
    /// velocity bound K
    pub speed_bound: T,
    /// ball radius ε; intervals have length ε/K
    pub epsilon: T,
    pub observability_samples: usize,
    pub seed: u64,
}

impl<T: Real> GlobalSettings<T> {
    pub fn new(speed_bound: T, epsilon: T) -> Self {
        Self {
            speed_bound,
            epsilon,
            observability_samples: DEFAULT_OBSERVABILITY_SAMPLES,
            seed: 0,
        }
    }
}

/// Chooses the d points of X ∩ B_δ(y) whose shifted positions xʲ − y give
/// the smallest sampled observability bound with radius ε.
pub fn select_subset<T: Real>(
    g: &SourceProfile<T>,
    points: &[Vec<T>],
    center: &[T],
    epsilon: T,
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<usize>, T)> {
    let d = g.dim();
    let near: Vec<usize> = (0..points.len())
        .filter(|&j| {
            let r2 = points[j]
                .iter()
                .zip(center)
                .fold(T::zero(), |a, (x, c)| a + (*x - *c) * (*x - *c));
            r2.sqrt() < g.delta()
        })
        .collect();
    let mut best: Option<(Vec<usize>, T)> = None;
    let mut combo: Vec<usize> = (0..d).collect();
    if near.len() >= d {
        loop {
            let subset: Vec<usize> = combo.iter().map(|&c| near[c]).collect();
            let shifted: Vec<Vec<T>> = subset
                .iter()
                .map(|&j| points[j].iter().zip(center).map(|(x, c)| *x - *c).collect())
                .collect();
            if let Ok(b) = observability_condition(g, &shifted, epsilon, n_samples, seed) {
                if best.as_ref().is_none_or(|(_, v)| b.bound < *v) {
                    best = Some((subset, b.bound));
                }
            }
            // next combination in lexicographic order
            let mut i = d;
            while i > 0 && combo[i - 1] == near.len() - d + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for k in i..d {
                combo[k] = combo[k - 1] + 1;
            }
        }
    }
    best.ok_or_else(|| Error::NoAdmissibleSubset {
        center: center.iter().map(|v| v.to_f64_lossy()).collect(),
    })
}

/// Interval-by-interval reconstruction over T_ℓ = εℓ/K: at each T_{ℓ−1} a
/// new d-subset of the observation points is chosen around γ̂(T_{ℓ−1}); the
/// memory term runs on unchanged across intervals.
///
/// If the data end before the horizon, the reconstruction covers the data.
pub fn reconstruct_orbit_global<T: Real>(
    data: &TraceSet<T>,
    g: &SourceProfile<T>,
    alpha: FracOrder<T>,
    domain: &DomainSpec<T>,
    settings: &GlobalSettings<T>,
    config: &ReconstructionConfig,
) -> Result<Reconstruction<T>> {
    if !(settings.speed_bound > T::zero() && settings.epsilon > T::zero()) {
        return Err(Error::invalid("speed_bound", "K and epsilon must be > 0"));
    }
    let d = g.dim();
    let problem = SpectralProblem::new(g, domain)?;
    let prepared = prepare(data, &problem, alpha, config)?;
    let grid = prepared.grid;
    let mut engine = MarchEngine::new(problem, alpha, grid)?;
    let span = settings.epsilon / settings.speed_bound;
    let mut steps = vec![seed_record(d)];
    let mut intervals: Vec<IntervalLog<T>> = Vec::new();
    let mut m = 1;
    let mut ell = T::one();
    while m <= grid.n_steps() {
        let index = intervals.len() + 1;
        let start = grid.node(m - 1);
        let end = (span * ell).min(grid.t_end());
        let center = engine.gammas()[m - 1].clone();
        let (idx, bound) = select_subset(
            g,
            &prepared.points,
            &center,
            settings.epsilon,
            settings.observability_samples,
            settings.seed,
        )?;
        log::info!("interval {index} [{start}, {end}]: centre {center:?}, points {idx:?}");
        intervals.push(IntervalLog {
            index,
            start,
            end,
            center,
            points: idx.clone(),
            observability_bound: bound,
        });
        // all nodes up to T_ℓ, and at least one
        let mut advanced = false;
        while m <= grid.n_steps() && (!advanced || grid.node(m) <= end * (T::one() + T::lit(1e-12))) {
            steps.push(step(&mut engine, g, &prepared, &idx, config)?);
            m += 1;
            advanced = true;
        }
        if let Some(last) = intervals.last_mut() {
            last.end = grid.node(m - 1);
        }
        // next T_ℓ strictly beyond the last node reached
        ell = (ell + T::one()).max((grid.node(m - 1) / span * (T::one() + T::lit(1e-12))).floor() + T::one());
    }
    Ok(Reconstruction {
        grid,
        steps,
        intervals,
        coverage: (T::zero(), grid.t_end()),
    })
}
