use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{KernelFamily, SpectralProblem};
use crate::fracops::{ProductWeights, TimeGrid};
use crate::linalg::SmallMatrix;
use crate::model::SourceProfile;
use crate::order::FracOrder;
use crate::real::Real;

/// One separable term U(t)k(t − s)V(s)ᵀ of the kernel Q(t, s), with k
/// given by its product-integration weights. The contribution of the term
/// is the real part of U(t)∫k(t − s)V(s)·ρ(s)ds.
#[derive(Debug, Clone)]
pub struct KernelTerm<T> {
    pub weights: ProductWeights<Complex<T>>,
    /// U(tₘ) ∈ ℂᵈ per node
    pub left: Vec<Vec<Complex<T>>>,
    /// V(sⱼ) ∈ ℂᵈ per node
    pub right: Vec<Vec<Complex<T>>>,
}

/// P(t)ρ(t) = rhs(t) + ∫₀ᵗ Q(t, s)ρ(s)ds on a uniform grid, with
/// Q = Σ_r U_r(t)k_r(t − s)V_r(s)ᵀ.
#[derive(Debug, Clone)]
pub struct DifferenceSystem<T> {
    pub grid: TimeGrid<T>,
    pub p: Vec<SmallMatrix<T>>,
    pub terms: Vec<KernelTerm<T>>,
    pub rhs: Vec<Vec<T>>,
}

/// Solution of a [`DifferenceSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution<T> {
    pub rho: Vec<Vec<T>>,
    /// max over nodes of ‖P(tₘ)⁻¹‖₂
    pub max_inverse_norm: T,
}

/// Forward substitution in time: at each node the current-node part of the
/// product-integrated memory moves to the left-hand side and a d×d system
/// is solved. Aborts when ‖P(tₘ)⁻¹‖ exceeds `max_inverse_norm`.
pub fn volterra_difference_solve<T: Real>(
    sys: &DifferenceSystem<T>,
    max_inverse_norm: T,
) -> Result<VolterraSolution<T>> {
    let n = sys.grid.len();
    if sys.p.len() != n || sys.rhs.len() != n {
        return Err(Error::DataMismatch(format!(
            "P has {} and rhs {} nodes, grid has {n}",
            sys.p.len(),
            sys.rhs.len()
        )));
    }
    let d = sys.p[0].dim();
    for t in &sys.terms {
        if t.left.len() != n || t.right.len() != n || t.weights.max_steps() + 1 < n {
            return Err(Error::DataMismatch("kernel term does not cover the grid".into()));
        }
    }
    let zero = Complex::new(T::zero(), T::zero());
    // V_r(sⱼ)·ρ(sⱼ) per term
    let mut projected: Vec<Vec<Complex<T>>> = vec![Vec::with_capacity(n); sys.terms.len()];
    let mut rho: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut worst = T::zero();
    for m in 0..n {
        let hist: Vec<Complex<T>> = sys
            .terms
            .par_iter()
            .zip(&projected)
            .map(|(term, proj)| if m == 0 { zero } else { term.weights.history(proj, m) })
            .collect();
        let mut a = sys.p[m].clone();
        let mut b = sys.rhs[m].clone();
        for (term, h) in sys.terms.iter().zip(&hist) {
            let w0 = if m == 0 { zero } else { term.weights.self_weight() };
            for j in 0..d {
                let u = term.left[m][j];
                b[j] = b[j] + (u * h).re;
                for k in 0..d {
                    a[(j, k)] = a[(j, k)] - (u * w0 * term.right[m][k]).re;
                }
            }
        }
        let inv = sys.p[m].inverse_norm2();
        worst = worst.max(inv);
        if !(inv <= max_inverse_norm) {
            return Err(Error::Singular {
                context: format!("P(t) at node {m}"),
                condition: sys.p[m].cond2().to_f64_lossy(),
            });
        }
        let r = a.solve(&b)?;
        for (term, proj) in sys.terms.iter().zip(projected.iter_mut()) {
            let v = term.right[m].iter().zip(&r).fold(zero, |acc, (vk, rk)| acc + *vk * *rk);
            proj.push(v);
        }
        rho.push(r);
    }
    Ok(VolterraSolution {
        rho,
        max_inverse_norm: worst,
    })
}

/// Assembles the difference system of two orbits γ₁, γ₂ sampled on `grid`
/// for ρ = γ₂ − γ₁: P(t) = (∂ₖg(xʲ − γ̄(t)))ⱼₖ and, per mode or frequency i,
/// the term U = rowᵢ(xʲ)σᵢ, k = Kᵢ, V = −∇_γ fᵢ(γ̄(s)), with the midpoint
/// γ̄ = (γ₁ + γ₂)/2 standing in for the mean-value point.
#[allow(clippy::too_many_arguments)]
pub fn assemble_difference_system<T: Real>(
    problem: &SpectralProblem<T>,
    g: &SourceProfile<T>,
    alpha: FracOrder<T>,
    points: &[Vec<T>],
    gamma1: &[Vec<T>],
    gamma2: &[Vec<T>],
    rhs: Vec<Vec<T>>,
    grid: &TimeGrid<T>,
) -> Result<DifferenceSystem<T>> {
    let d = g.dim();
    let n = grid.len();
    if points.len() != d || gamma1.len() != n || gamma2.len() != n || rhs.len() != n {
        return Err(Error::DataMismatch(
            "difference system inputs do not match d and the grid".into(),
        ));
    }
    let mid: Vec<Vec<T>> = gamma1
        .iter()
        .zip(gamma2)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x + *y) * T::lit(0.5)).collect())
        .collect();
    let p = mid
        .iter()
        .map(|c| {
            let rows: Vec<Vec<T>> = points
                .iter()
                .map(|x| {
                    let y: Vec<T> = x.iter().zip(c).map(|(a, b)| *a - *b).collect();
                    g.gradient(&y)
                })
                .collect();
            SmallMatrix::from_rows(&rows)
        })
        .collect();
    let family = KernelFamily::new(alpha)?;
    let rows: Vec<Vec<Complex<T>>> = points.iter().map(|x| problem.observation_row(x)).collect();
    let grads: Vec<Vec<Vec<Complex<T>>>> = mid.par_iter().map(|c| problem.source_gradient(c)).collect();
    let terms = (0..problem.len())
        .into_par_iter()
        .map(|i| {
            let s = problem.symbol(i);
            Ok(KernelTerm {
                weights: family.weights(s, grid.dt(), grid.n_steps())?,
                left: vec![rows.iter().map(|r| r[i] * s).collect(); n],
                right: grads.iter().map(|gr| gr.iter().map(|ga| -ga[i]).collect()).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DifferenceSystem {
        grid: *grid,
        p,
        terms,
        rhs,
    })
}
