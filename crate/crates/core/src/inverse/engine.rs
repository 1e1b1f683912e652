use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{KernelFamily, SpectralProblem};
use crate::fracops::{ProductWeights, SampledFunction, TimeGrid};
use crate::order::FracOrder;
use crate::real::Real;

/// Causal evaluator of ℒu(xʲ, tₘ) along a reconstructed orbit.
///
/// ℒu(x, tₘ) = Re Σᵢ rowᵢ(x)σᵢ∫₀^{tₘ} fᵢ(γ(s))Kᵢ(tₘ − s)ds splits into a
/// history part fixed by γ(t₀..tₘ₋₁) and the current node's term
/// w₀ᵢ·fᵢ(γ(tₘ)), which is kept implicit. Only one entry of each conjugate
/// pair is stored; its partner doubles the real part.
#[derive(Debug, Clone)]
pub struct MarchEngine<T> {
    problem: SpectralProblem<T>,
    grid: TimeGrid<T>,
    entries: Vec<usize>,
    /// σᵢ times the multiplicity of entry i
    scaled_symbol: Vec<Complex<T>>,
    weights: Vec<ProductWeights<Complex<T>>>,
    /// fᵢ(γ(t₀..)) per stored entry
    sources: Vec<Vec<Complex<T>>>,
    gammas: Vec<Vec<T>>,
}

/// The split operator at one node for a fixed set of points.
#[derive(Debug, Clone)]
pub struct NodeOperator<T> {
    /// history part per point
    pub memory: Vec<T>,
    /// rowᵢ(xʲ)σᵢw₀ᵢ per point and stored entry
    implicit: Vec<Vec<Complex<T>>>,
}

impl<T: Real> MarchEngine<T> {
    /// Seeds the march with γ(0) = 0.
    pub fn new(problem: SpectralProblem<T>, alpha: FracOrder<T>, grid: TimeGrid<T>) -> Result<Self> {
        let family = KernelFamily::new(alpha)?;
        let basis = problem.basis();
        let entries: Vec<usize> = (0..basis.len())
            .filter(|&i| basis.conjugate_partner(i).is_none_or(|p| p >= i))
            .collect();
        let scaled_symbol = entries
            .iter()
            .map(|&i| {
                let mult = match basis.conjugate_partner(i) {
                    Some(p) if p != i => T::lit(2.0),
                    _ => T::one(),
                };
                basis.symbol(i) * mult
            })
            .collect();
        let (h, n) = (grid.dt(), grid.n_steps());
        let weights = entries
            .par_iter()
            .map(|&i| family.weights(basis.symbol(i), h, n))
            .collect::<Result<Vec<_>>>()?;
        let origin = vec![T::zero(); problem.dim()];
        let f0 = problem.source_coefficients(&origin);
        let sources = entries.iter().map(|&i| vec![f0[i]]).collect();
        Ok(Self {
            problem,
            grid,
            entries,
            scaled_symbol,
            weights,
            sources,
            gammas: vec![origin],
        })
    }

    pub fn problem(&self) -> &SpectralProblem<T> {
        &self.problem
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    /// Index of the next node to be solved.
    pub fn next_node(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[Vec<T>] {
        &self.gammas
    }

    fn stored(&self, all: &[Complex<T>]) -> Vec<Complex<T>> {
        self.entries.iter().map(|&i| all[i]).collect()
    }

    /// Splits ℒu(xʲ, tₘ) at the next node m for the given points.
    pub fn node_operator(&self, points: &[Vec<T>]) -> Result<NodeOperator<T>> {
        let m = self.next_node();
        if m > self.grid.n_steps() {
            return Err(Error::DataMismatch(format!("march already reached node {}", m - 1)));
        }
        let hist: Vec<Complex<T>> = self
            .weights
            .par_iter()
            .zip(&self.sources)
            .zip(&self.scaled_symbol)
            .map(|((w, f), &s)| s * w.history(f, m))
            .collect();
        let mut memory = Vec::with_capacity(points.len());
        let mut implicit = Vec::with_capacity(points.len());
        for x in points {
            let row = self.stored(&self.problem.observation_row(x));
            memory.push(row.iter().zip(&hist).fold(T::zero(), |a, (r, h)| a + (*r * h).re));
            implicit.push(
                row.iter()
                    .zip(&self.scaled_symbol)
                    .zip(&self.weights)
                    .map(|((r, s), w)| *r * s * w.self_weight())
                    .collect(),
            );
        }
        Ok(NodeOperator { memory, implicit })
    }

    /// Current-node term per point for the centre γ, and its γ-gradient
    /// `[j][a]`.
    pub fn implicit_term(&self, op: &NodeOperator<T>, gamma: &[T]) -> (Vec<T>, Vec<Vec<T>>) {
        let f = self.stored(&self.problem.source_coefficients(gamma));
        let grad: Vec<Vec<Complex<T>>> = self
            .problem
            .source_gradient(gamma)
            .iter()
            .map(|g| self.stored(g))
            .collect();
        let values = op
            .implicit
            .iter()
            .map(|c| c.iter().zip(&f).fold(T::zero(), |a, (c, f)| a + (*c * f).re))
            .collect();
        let jac = op
            .implicit
            .iter()
            .map(|c| {
                grad.iter()
                    .map(|ga| c.iter().zip(ga).fold(T::zero(), |a, (c, f)| a + (*c * f).re))
                    .collect()
            })
            .collect();
        (values, jac)
    }

    /// Accepts γ(tₘ) for the next node.
    pub fn push(&mut self, gamma: Vec<T>) -> Result<()> {
        if self.next_node() > self.grid.n_steps() {
            return Err(Error::DataMismatch("march is complete".into()));
        }
        let f = self.stored(&self.problem.source_coefficients(&gamma));
        for (s, v) in self.sources.iter_mut().zip(f) {
            s.push(v);
        }
        self.gammas.push(gamma);
        Ok(())
    }
}

/// ℒu(xʲ, tₘ) for the sampled centres γ̂(t₀..=tₘ) (γ̂(t₀) must be 0), by
/// product integration of the closed-kernel Duhamel form.
pub fn memory_term<T: Real>(
    problem: &SpectralProblem<T>,
    alpha: FracOrder<T>,
    gamma_hat: &[Vec<T>],
    points: &[Vec<T>],
    grid: &TimeGrid<T>,
) -> Result<Vec<T>> {
    if gamma_hat.is_empty() || gamma_hat.len() > grid.len() {
        return Err(Error::DataMismatch(format!(
            "{} centres for a grid of {} nodes",
            gamma_hat.len(),
            grid.len()
        )));
    }
    if gamma_hat[0].iter().any(|&v| v != T::zero()) {
        return Err(Error::invalid("gamma_hat", "orbit must start at the origin"));
    }
    let m = gamma_hat.len() - 1;
    if m == 0 {
        return Ok(vec![T::zero(); points.len()]);
    }
    let mut engine = MarchEngine::new(problem.clone(), alpha, grid.prefix(m.max(2))?)?;
    for g in &gamma_hat[1..m] {
        engine.push(g.clone())?;
    }
    let op = engine.node_operator(points)?;
    let (imp, _) = engine.implicit_term(&op, &gamma_hat[m]);
    Ok(op.memory.iter().zip(&imp).map(|(a, b)| *a + *b).collect())
}

/// Traces of the stationary-source field at `points` (source held at the
/// origin) and their exact Caputo derivatives:
/// u = Re Σᵢ rowᵢfᵢ(0)K₁ᵢ(t), ∂ₜᵅu = Re Σᵢ rowᵢfᵢ(0)(1 − σᵢK₁ᵢ(t)).
pub fn stationary_response<T: Real>(
    problem: &SpectralProblem<T>,
    alpha: FracOrder<T>,
    points: &[Vec<T>],
    grid: &TimeGrid<T>,
) -> Result<Vec<(SampledFunction<T>, SampledFunction<T>)>> {
    let family = KernelFamily::new(alpha)?;
    let basis = problem.basis();
    let f0 = problem.source_coefficients(&vec![T::zero(); problem.dim()]);
    let rows: Vec<Vec<Complex<T>>> = points.iter().map(|x| problem.observation_row(x)).collect();
    let nodes = grid.nodes();
    let width = nodes.len();
    let entries: Vec<usize> = (0..basis.len())
        .filter(|&i| basis.conjugate_partner(i).is_none_or(|p| p >= i))
        .collect();
    // fixed chunks summed in order keep the result independent of the
    // thread count
    let partial = entries
        .par_chunks(32)
        .map(|chunk| -> Result<Vec<T>> {
            let mut acc = vec![T::zero(); 2 * points.len() * width];
            for &i in chunk {
                let mult = match basis.conjugate_partner(i) {
                    Some(p) if p != i => T::lit(2.0),
                    _ => T::one(),
                };
                let s = basis.symbol(i);
                for (m, &t) in nodes.iter().enumerate() {
                    let k1 = family.first_antiderivative(s, t)?;
                    let du = Complex::new(T::one(), T::zero()) - s * k1;
                    for (j, row) in rows.iter().enumerate() {
                        let c = row[i] * f0[i] * mult;
                        acc[2 * j * width + m] = acc[2 * j * width + m] + (c * k1).re;
                        acc[(2 * j + 1) * width + m] = acc[(2 * j + 1) * width + m] + (c * du).re;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = vec![T::zero(); 2 * points.len() * width];
    for part in partial {
        for (x, y) in acc.iter_mut().zip(part) {
            *x = *x + y;
        }
    }
    (0..points.len())
        .map(|j| {
            let u = acc[2 * j * width..(2 * j + 1) * width].to_vec();
            let d = acc[(2 * j + 1) * width..(2 * j + 2) * width].to_vec();
            Ok((SampledFunction::new(*grid, u)?, SampledFunction::new(*grid, d)?))
        })
        .collect()
}
