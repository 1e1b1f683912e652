use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::duhamel_compose;
use super::spectral::{CoefficientRule, SpectralProblem};
use crate::error::{Error, Result};
use crate::fracops::{SampledFunction, TimeGrid};
use crate::model::{check_admissible, DomainSpec, ObservationSet, Orbit, SourceProfile};
use crate::order::FracOrder;
use crate::real::Real;

/// Settings of [`solve_moving_source`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardOptions {
    pub coefficients: CoefficientRule,
    /// Reject orbits that fail the admissibility check.
    pub check_admissibility: bool,
    /// Tail indicator above which a resolution warning is logged.
    pub tail_warning: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            coefficients: CoefficientRule::Direct,
            check_admissibility: true,
            tail_warning: 1e-8,
        }
    }
}

/// Spectral history of a forward solution: `coefficients[i][m]` is the
/// i-th modal or Fourier coefficient of u(·, tₘ).
#[derive(Debug, Clone)]
pub struct ForwardSolution<T> {
    problem: SpectralProblem<T>,
    alpha: FracOrder<T>,
    grid: TimeGrid<T>,
    coefficients: Vec<Vec<Complex<T>>>,
    tail: T,
}

impl<T: Real> ForwardSolution<T> {
    pub fn problem(&self) -> &SpectralProblem<T> {
        &self.problem
    }

    pub fn alpha(&self) -> FracOrder<T> {
        self.alpha
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Vec<Complex<T>>] {
        &self.coefficients
    }

    /// Tail indicator of the source coefficients, see
    /// [`SpectralProblem::tail_indicator`].
    pub fn tail_indicator(&self) -> T {
        self.tail
    }

    fn contract(&self, row: &[Complex<T>], with_symbol: bool) -> Vec<T> {
        let n = self.grid.len();
        let mut out = vec![T::zero(); n];
        for (i, (r, c)) in row.iter().zip(&self.coefficients).enumerate() {
            let w = if with_symbol { *r * self.problem.symbol(i) } else { *r };
            for (o, v) in out.iter_mut().zip(c) {
                *o = *o + (w * v).re;
            }
        }
        out
    }

    /// u(x, tₘ) for all m.
    pub fn trace(&self, x: &[T]) -> SampledFunction<T> {
        let v = self.contract(&self.problem.observation_row(x), false);
        SampledFunction::new(self.grid, v).expect("one value per node")
    }

    /// ℒu(x, tₘ) for all m, from the same spectral representation.
    pub fn operator_trace(&self, x: &[T]) -> SampledFunction<T> {
        let v = self.contract(&self.problem.observation_row(x), true);
        SampledFunction::new(self.grid, v).expect("one value per node")
    }

    /// u(x, tₘ) at a single node.
    pub fn field_at(&self, x: &[T], m: usize) -> T {
        self.problem
            .observation_row(x)
            .iter()
            .zip(&self.coefficients)
            .fold(T::zero(), |acc, (r, c)| acc + (*r * c[m]).re)
    }

    /// Exact traces at the observation points, on the observation grid
    /// (which must be this solution's grid or a coarsening of it).
    pub fn traces(&self, obs: &ObservationSet<T>, meta: TraceMeta) -> Result<TraceSet<T>> {
        let factor = coarsening_factor(&self.grid, obs.grid())?;
        let traces = obs
            .points()
            .par_iter()
            .map(|x| self.trace(x).subsample(factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceSet {
            points: obs.points().to_vec(),
            traces,
            meta,
        })
    }
}

fn coarsening_factor<T: Real>(fine: &TimeGrid<T>, coarse: &TimeGrid<T>) -> Result<usize> {
    let (nf, nc) = (fine.n_steps(), coarse.n_steps());
    let same_end = (fine.t_end() - coarse.t_end()).abs() <= T::epsilon() * T::lit(16.0) * fine.t_end();
    if !same_end || nc == 0 || nf % nc != 0 {
        return Err(Error::DataMismatch(format!(
            "observation grid ({nc} steps to {}) is not a coarsening of the solver grid ({nf} steps to {})",
            coarse.t_end(),
            fine.t_end()
        )));
    }
    Ok(nf / nc)
}

/// Solves (∂ₜᵅ + ℒ)u = g(x − γ(t)) with zero initial data by the closed
/// kernel Duhamel form per mode or frequency.
pub fn solve_moving_source<T: Real>(
    g: &SourceProfile<T>,
    orbit: &Orbit<T>,
    alpha: FracOrder<T>,
    domain: &DomainSpec<T>,
    grid: &TimeGrid<T>,
    options: &ForwardOptions,
) -> Result<ForwardSolution<T>> {
    if orbit.dim() != domain.dim() {
        return Err(Error::DataMismatch(format!(
            "orbit dim {} vs domain dim {}",
            orbit.dim(),
            domain.dim()
        )));
    }
    if grid.t_end() > orbit.t_end() * (T::one() + T::lit(1e-12)) {
        return Err(Error::DataMismatch(format!(
            "grid horizon {} exceeds orbit horizon {}",
            grid.t_end(),
            orbit.t_end()
        )));
    }
    if let DomainSpec::Free(f) = domain {
        if alpha.is_wave() && alpha.value() == T::lit(2.0) && !f.wave_compatible() {
            return Err(Error::invalid("alpha", "alpha = 2 requires b = 0 and c >= 0"));
        }
    }
    if options.check_admissibility {
        check_admissible(orbit, domain, g, None, grid.n_steps()).into_result()?;
    }
    let problem = SpectralProblem::new(g, domain)?;
    let centres = orbit.sample(grid);
    let sources = problem.source_histories(&centres, options.coefficients);
    let tail = problem.tail_indicator(&sources);
    if tail.to_f64_lossy() > options.tail_warning {
        log::warn!("spectral tail indicator {tail} exceeds {}", options.tail_warning);
    }
    let coefficients = duhamel_compose(problem.basis(), |i| Ok(sources[i].clone()), alpha, grid)?;
    Ok(ForwardSolution {
        problem,
        alpha,
        grid: *grid,
        coefficients,
        tail,
    })
}

/// Provenance carried with a trace set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub alpha: f64,
    pub domain: String,
    pub orbit: String,
    pub noise_level: f64,
    pub seed: Option<u64>,
}

/// Time traces u(xʲ, tₘ) on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet<T> {
    pub points: Vec<Vec<T>>,
    pub traces: Vec<SampledFunction<T>>,
    pub meta: TraceMeta,
}

impl<T: Real> TraceSet<T> {
    pub fn new(points: Vec<Vec<T>>, traces: Vec<SampledFunction<T>>, meta: TraceMeta) -> Result<Self> {
        if points.len() != traces.len() || traces.is_empty() {
            return Err(Error::DataMismatch(format!(
                "{} points for {} traces",
                points.len(),
                traces.len()
            )));
        }
        let grid = *traces[0].grid();
        if traces.iter().any(|t| *t.grid() != grid) {
            return Err(Error::DataMismatch("traces are not on a common grid".into()));
        }
        Ok(Self { points, traces, meta })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.traces[0].grid()
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Keeps the listed points.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&j| self.points[j].clone()).collect(),
            traces: indices.iter().map(|&j| self.traces[j].clone()).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Every `factor`-th sample of each trace.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        Ok(Self {
            points: self.points.clone(),
            traces: self.traces.iter().map(|t| t.subsample(factor)).collect::<Result<_>>()?,
            meta: self.meta.clone(),
        })
    }

    /// Samples tₘ ≤ t_end of a grid prefix.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        let grid = self.grid().prefix(m)?;
        Ok(Self {
            points: self.points.clone(),
            traces: self
                .traces
                .iter()
                .map(|t| SampledFunction::new(grid, t.values()[..=m].to_vec()))
                .collect::<Result<_>>()?,
            meta: self.meta.clone(),
        })
    }
}

/// Adds white Gaussian noise with standard deviation
/// `noise_level · maxₘ|u(xʲ, tₘ)|` to each trace j. Deterministic in `seed`;
/// level 0 returns the traces unchanged.
pub fn observe_and_perturb<T: Real>(data: &TraceSet<T>, noise_level: f64, seed: u64) -> Result<TraceSet<T>> {
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::invalid(
            "noise_level",
            format!("{noise_level} must be finite and >= 0"),
        ));
    }
    let mut out = data.clone();
    out.meta.noise_level = noise_level;
    out.meta.seed = Some(seed);
    if noise_level == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for tr in out.traces.iter_mut() {
        let sigma = noise_level * tr.sup_norm().to_f64_lossy();
        let values = tr
            .values()
            .iter()
            .map(|&v| v + T::lit(sigma * normal.sample(&mut rng)))
            .collect();
        *tr = SampledFunction::new(*tr.grid(), values)?;
    }
    Ok(out)
}
