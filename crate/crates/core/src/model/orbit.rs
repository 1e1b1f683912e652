use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::TimeGrid;
use crate::real::Real;

/// One term a·sin(ωt + φ) − a·sin(φ) of a [`OrbitShape::SineSum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineTerm<T> {
    pub amplitude: Vec<T>,
    pub omega: T,
    pub phase: T,
}

/// Curve shapes; all closed forms start at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitShape<T> {
    Stationary,
    /// γ(t) = v·t
    Linear {
        velocity: Vec<T>,
    },
    /// γ(t) = Σ a(sin(ωt + φ) − sin φ)
    SineSum {
        terms: Vec<SineTerm<T>>,
    },
    /// d = 2: γ(t) = r(cos ωt − 1, sin ωt)
    Circle {
        radius: T,
        omega: T,
    },
    /// Samples γ(tₘ) on a grid, linearly interpolated.
    Sampled {
        grid: TimeGrid<T>,
        points: Vec<Vec<T>>,
    },
}

/// γ: [0, T] → ℝᵈ with velocity bound K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit<T> {
    dim: usize,
    t_end: T,
    speed_bound: T,
    shape: OrbitShape<T>,
}

impl<T: Real> Orbit<T> {
    pub fn new(dim: usize, t_end: T, speed_bound: T, shape: OrbitShape<T>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid("dim", format!("{dim} not in 1..=3")));
        }
        if !(t_end > T::zero()) {
            return Err(Error::invalid("t_end", format!("{t_end} must be > 0")));
        }
        if !(speed_bound >= T::zero()) {
            return Err(Error::invalid("speed_bound", format!("{speed_bound} must be >= 0")));
        }
        let check = |v: &Vec<T>, what: &'static str| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(Error::invalid(what, format!("length {} != dim {dim}", v.len())))
            }
        };
        match &shape {
            OrbitShape::Stationary => {}
            OrbitShape::Linear { velocity } => check(velocity, "velocity")?,
            OrbitShape::SineSum { terms } => {
                for t in terms {
                    check(&t.amplitude, "amplitude")?;
                }
            }
            OrbitShape::Circle { .. } => {
                if dim != 2 {
                    return Err(Error::invalid("kind", "circle orbits need dim = 2".to_string()));
                }
            }
            OrbitShape::Sampled { grid, points } => {
                if points.len() != grid.len() {
                    return Err(Error::invalid(
                        "points",
                        format!("{} samples for {} grid nodes", points.len(), grid.len()),
                    ));
                }
                for p in points {
                    check(p, "points")?;
                }
                if grid.t_end() < t_end {
                    return Err(Error::invalid("points", "samples end before the horizon".to_string()));
                }
            }
        }
        Ok(Self {
            dim,
            t_end,
            speed_bound,
            shape,
        })
    }

    pub fn stationary(dim: usize, t_end: T, speed_bound: T) -> Result<Self> {
        Self::new(dim, t_end, speed_bound, OrbitShape::Stationary)
    }

    pub fn linear(velocity: Vec<T>, t_end: T, speed_bound: T) -> Result<Self> {
        Self::new(velocity.len(), t_end, speed_bound, OrbitShape::Linear { velocity })
    }

    /// γ(t) = a·sin(ωt).
    pub fn sine(amplitude: Vec<T>, omega: T, t_end: T, speed_bound: T) -> Result<Self> {
        Self::new(
            amplitude.len(),
            t_end,
            speed_bound,
            OrbitShape::SineSum {
                terms: vec![SineTerm {
                    amplitude,
                    omega,
                    phase: T::zero(),
                }],
            },
        )
    }

    pub fn sampled(grid: TimeGrid<T>, points: Vec<Vec<T>>, speed_bound: T) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        Self::new(dim, grid.t_end(), speed_bound, OrbitShape::Sampled { grid, points })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn t_end(&self) -> T {
        self.t_end
    }

    #[inline]
    pub fn speed_bound(&self) -> T {
        self.speed_bound
    }

    pub fn shape(&self) -> &OrbitShape<T> {
        &self.shape
    }

    pub fn position(&self, t: T) -> Vec<T> {
        match &self.shape {
            OrbitShape::Stationary => vec![T::zero(); self.dim],
            OrbitShape::Linear { velocity } => velocity.iter().map(|&v| v * t).collect(),
            OrbitShape::SineSum { terms } => {
                let mut p = vec![T::zero(); self.dim];
                for term in terms {
                    let s = (term.omega * t + term.phase).sin() - term.phase.sin();
                    for (pi, &a) in p.iter_mut().zip(&term.amplitude) {
                        *pi = *pi + a * s;
                    }
                }
                p
            }
            OrbitShape::Circle { radius, omega } => {
                let w = *omega * t;
                vec![*radius * (w.cos() - T::one()), *radius * w.sin()]
            }
            OrbitShape::Sampled { grid, points } => {
                let h = grid.dt();
                let n = grid.n_steps();
                let s = (t / h).max(T::zero());
                let m = s.floor().to_usize().unwrap_or(0).min(n - 1);
                let w = (s - T::from_index(m)).min(T::one());
                points[m]
                    .iter()
                    .zip(&points[m + 1])
                    .map(|(&a, &b)| a * (T::one() - w) + b * w)
                    .collect()
            }
        }
    }

    /// γ'(t); finite differences for sampled orbits.
    pub fn velocity(&self, t: T) -> Vec<T> {
        match &self.shape {
            OrbitShape::Stationary => vec![T::zero(); self.dim],
            OrbitShape::Linear { velocity } => velocity.clone(),
            OrbitShape::SineSum { terms } => {
                let mut v = vec![T::zero(); self.dim];
                for term in terms {
                    let c = term.omega * (term.omega * t + term.phase).cos();
                    for (vi, &a) in v.iter_mut().zip(&term.amplitude) {
                        *vi = *vi + a * c;
                    }
                }
                v
            }
            OrbitShape::Circle { radius, omega } => {
                let w = *omega * t;
                vec![-*radius * *omega * w.sin(), *radius * *omega * w.cos()]
            }
            OrbitShape::Sampled { grid, .. } => {
                let h = grid.dt();
                let a = (t - h * T::lit(0.5)).max(T::zero());
                let b = (a + h).min(grid.t_end());
                let a = b - h;
                let pa = self.position(a);
                let pb = self.position(b);
                pa.iter().zip(&pb).map(|(&x, &y)| (y - x) / h).collect()
            }
        }
    }

    /// γ(tₘ) for every node of `grid`.
    pub fn sample(&self, grid: &TimeGrid<T>) -> Vec<Vec<T>> {
        (0..grid.len()).map(|m| self.position(grid.node(m))).collect()
    }

    /// max |γ(tₘ)| over an n-step grid on [0, T].
    pub fn max_radius(&self, n: usize) -> T {
        let grid = TimeGrid::new(self.t_end, n.max(2)).expect("valid horizon");
        self.sample(&grid).iter().map(|p| norm(p)).fold(T::zero(), T::max)
    }

    /// Max over m of |γ(tₘ) − other(tₘ)|.
    pub fn c_distance(&self, other: &Self, grid: &TimeGrid<T>) -> T {
        (0..grid.len())
            .map(|m| {
                let t = grid.node(m);
                let a = self.position(t);
                let b = other.position(t);
                norm(&a.iter().zip(&b).map(|(x, y)| *x - *y).collect::<Vec<_>>())
            })
            .fold(T::zero(), T::max)
    }

    /// The orbit γ₁ + s(γ₂ − γ₁) sampled on `grid`.
    pub fn blend(&self, other: &Self, s: T, grid: &TimeGrid<T>) -> Result<Self> {
        let points = (0..grid.len())
            .map(|m| {
                let t = grid.node(m);
                let a = self.position(t);
                let b = other.position(t);
                a.iter().zip(&b).map(|(&x, &y)| x + s * (y - x)).collect()
            })
            .collect();
        Self::sampled(*grid, points, self.speed_bound.max(other.speed_bound))
    }
}

pub(crate) fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Confinement radius ε of the localized admissible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedOrbitBound<T> {
    epsilon: T,
}

impl<T: Real> LocalizedOrbitBound<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if epsilon > T::zero() {
            Ok(Self { epsilon })
        } else {
            Err(Error::invalid("epsilon", format!("{epsilon} must be > 0")))
        }
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }
}
