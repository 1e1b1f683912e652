use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ReconstructionConfig;
use super::march::reconstruct_orbit_local;
use crate::error::{Error, Result};
use crate::forward::{observe_and_perturb, solve_moving_source, CoefficientRule, ForwardOptions, TraceMeta, TraceSet};
use crate::fracops::{caputo_derivative, TimeGrid};
use crate::model::{DomainSpec, ObservationSet, Orbit, OrbitShape, SineTerm, SourceProfile};
use crate::order::FracOrder;
use crate::real::Real;

/// Exact traces at `points` on `grid`, computed on a grid `refine` times
/// finer with the direct coefficient rule (the reconstruction uses the
/// factorized rule), so that data and inversion share no discretization.
pub fn synthetic_traces<T: Real>(
    g: &SourceProfile<T>,
    orbit: &Orbit<T>,
    alpha: FracOrder<T>,
    domain: &DomainSpec<T>,
    points: &[Vec<T>],
    grid: &TimeGrid<T>,
    refine: usize,
) -> Result<TraceSet<T>> {
    let fine = grid.refined(refine.max(1))?;
    let opts = ForwardOptions {
        coefficients: CoefficientRule::Direct,
        ..ForwardOptions::default()
    };
    let sol = solve_moving_source(g, orbit, alpha, domain, &fine, &opts)?;
    let obs = ObservationSet::new(points.to_vec(), *grid, domain)?;
    let meta = TraceMeta {
        alpha: alpha.value().to_f64_lossy(),
        domain: match domain {
            DomainSpec::Bounded(_) => "bounded".into(),
            DomainSpec::Free(_) => "free".into(),
        },
        orbit: format!("{:?}", orbit.shape()),
        noise_level: 0.0,
        seed: None,
    };
    sol.traces(&obs, meta)
}

/// Random members of U₁: sums of three sine terms with ‖γ‖ ≤ ε and
/// |γ'| ≤ K (amplitudes are scaled to meet both bounds with 10% margin).
pub fn random_localized_orbits<T: Real>(
    count: usize,
    dim: usize,
    epsilon: T,
    speed_bound: T,
    t_end: T,
    seed: u64,
) -> Result<Vec<Orbit<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let terms: Vec<SineTerm<T>> = (0..3)
                .map(|_| SineTerm {
                    amplitude: (0..dim).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect(),
                    omega: T::lit(rng.random_range(1.0..8.0)),
                    phase: T::lit(rng.random_range(0.0..std::f64::consts::TAU)),
                })
                .collect();
            // |Σ a(sin(ωt+φ) − sin φ)| ≤ 2Σ|a|, |γ'| ≤ Σ|a|ω
            let amp: T = terms
                .iter()
                .map(|t| t.amplitude.iter().fold(T::zero(), |a, v| a + v.abs()))
                .fold(T::zero(), |a, b| a + b);
            let speed: T = terms
                .iter()
                .map(|t| t.amplitude.iter().fold(T::zero(), |a, v| a + v.abs()) * t.omega)
                .fold(T::zero(), |a, b| a + b);
            let s = (T::lit(0.9) * epsilon / (T::lit(2.0) * amp)).min(T::lit(0.9) * speed_bound / speed);
            let terms = terms
                .into_iter()
                .map(|t| SineTerm {
                    amplitude: t.amplitude.iter().map(|v| *v * s).collect(),
                    ..t
                })
                .collect();
            Orbit::new(dim, t_end, speed_bound, OrbitShape::SineSum { terms })
        })
        .collect()
}

/// One cell of the stability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub pair_id: usize,
    pub alpha: f64,
    /// ‖γ₁ − γ₂‖ on the grid
    pub c_norm_diff: f64,
    /// Σⱼ ‖∂ₜᵅ(u₁ − u₂)(xʲ, ·)‖ on the grid
    pub trace_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    pub max_ratio: f64,
    /// max over α of the per-α maximum ratio divided by the min over α
    pub alpha_spread: f64,
}

/// Ratios ‖γ₁ − γ₂‖ / Σⱼ‖∂ₜᵅ(u₁ − u₂)(xʲ)‖ for every pair and order; the
/// Caputo derivative's extrapolated first node is excluded from the norm.
pub fn stability_experiment<T: Real>(
    pairs: &[(Orbit<T>, Orbit<T>)],
    g: &SourceProfile<T>,
    alphas: &[T],
    domain: &DomainSpec<T>,
    points: &[Vec<T>],
    grid: &TimeGrid<T>,
) -> Result<StabilityTable> {
    for (k, (a, b)) in pairs.iter().enumerate() {
        if a.c_distance(b, grid) == T::zero() {
            return Err(Error::invalid("orbit_pairs", format!("pair {k} has identical orbits")));
        }
    }
    let cells: Vec<(usize, T)> = (0..pairs.len())
        .flat_map(|p| alphas.iter().map(move |&a| (p, a)))
        .collect();
    let opts = ForwardOptions::default();
    let rows = cells
        .par_iter()
        .map(|&(p, a)| {
            let alpha = FracOrder::new(a)?;
            let (o1, o2) = &pairs[p];
            let s1 = solve_moving_source(g, o1, alpha, domain, grid, &opts)?;
            let s2 = solve_moving_source(g, o2, alpha, domain, grid, &opts)?;
            let mut trace_norm = T::zero();
            for x in points {
                let w = s1.trace(x).sub(&s2.trace(x))?;
                let dw = caputo_derivative(&w, a)?;
                trace_norm = trace_norm + dw.sup_norm_from(dw.low_accuracy_head());
            }
            let c = o1.c_distance(o2, grid);
            Ok(StabilityRow {
                pair_id: p,
                alpha: a.to_f64_lossy(),
                c_norm_diff: c.to_f64_lossy(),
                trace_norm: trace_norm.to_f64_lossy(),
                ratio: (c / trace_norm).to_f64_lossy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let per_alpha: Vec<f64> = alphas
        .iter()
        .map(|a| {
            let a = a.to_f64_lossy();
            rows.iter()
                .filter(|r| r.alpha == a)
                .map(|r| r.ratio)
                .fold(0.0, f64::max)
        })
        .collect();
    let lo = per_alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = per_alpha.iter().copied().fold(0.0, f64::max);
    Ok(StabilityTable {
        rows,
        max_ratio,
        alpha_spread: hi / lo,
    })
}

/// Reconstruction error against noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    pub levels: Vec<f64>,
    pub errors: Vec<f64>,
    /// least-squares slope of error on level through the origin
    pub slope: f64,
    /// 1 − Σ(e − slope·level)² / Σ(e − ē)²
    pub r_squared: f64,
}

/// Reconstructs from `exact` data perturbed at each level with the same
/// seed, so the noise realization is scaled rather than redrawn.
#[allow(clippy::too_many_arguments)]
pub fn noise_sweep<T: Real>(
    exact: &TraceSet<T>,
    truth: &Orbit<T>,
    g: &SourceProfile<T>,
    alpha: FracOrder<T>,
    domain: &DomainSpec<T>,
    config: &ReconstructionConfig,
    levels: &[f64],
    seed: u64,
) -> Result<NoiseSweep> {
    let errors = levels
        .iter()
        .map(|&lvl| {
            let data = observe_and_perturb(exact, lvl, seed)?;
            let rec = reconstruct_orbit_local(&data, g, alpha, domain, config)?;
            Ok(rec.max_error(truth).to_f64_lossy())
        })
        .collect::<Result<Vec<f64>>>()?;
    let sxx: f64 = levels.iter().map(|x| x * x).sum();
    let sxy: f64 = levels.iter().zip(&errors).map(|(x, y)| x * y).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let ss_res: f64 = levels.iter().zip(&errors).map(|(x, y)| (y - slope * x).powi(2)).sum();
    let ss_tot: f64 = errors.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(NoiseSweep {
        levels: levels.to_vec(),
        errors,
        slope,
        r_squared,
    })
}
