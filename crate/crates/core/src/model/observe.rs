use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::domain::DomainSpec;
use super::orbit::{norm, LocalizedOrbitBound, Orbit};
use super::profile::SourceProfile;
use crate::error::{Error, Result};
use crate::fracops::TimeGrid;
use crate::linalg::SmallMatrix;
use crate::real::Real;

/// Default random samples per ball for the observability estimate.
pub const DEFAULT_OBSERVABILITY_SAMPLES: usize = 512;

/// Condition number above which a sampled gradient matrix counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Relative velocity slack of the admissibility check.
pub const VELOCITY_TOLERANCE: f64 = 1e-3;

/// Minimum sampling nodes for [`check_admissible`].
pub const MIN_ADMISSIBILITY_SAMPLES: usize = 64;

/// Observation points {xʲ} and the time grid on which traces are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet<T> {
    points: Vec<Vec<T>>,
    grid: TimeGrid<T>,
}

impl<T: Real> ObservationSet<T> {
    pub fn new(points: Vec<Vec<T>>, grid: TimeGrid<T>, domain: &DomainSpec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "at least one observation point"));
        }
        for (j, p) in points.iter().enumerate() {
            if p.len() != domain.dim() {
                return Err(Error::invalid(
                    "points",
                    format!("point {j} has dim {} != {}", p.len(), domain.dim()),
                ));
            }
            if !domain.is_interior(p) {
                return Err(Error::invalid("points", format!("point {j} = {p:?} is not interior")));
            }
        }
        Ok(Self { points, grid })
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Outcome of one admissibility clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub clauses: Vec<Clause>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn first_violation(&self) -> Option<&Clause> {
        self.clauses.iter().find(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<()> {
        match self.first_violation() {
            None => Ok(()),
            Some(c) => Err(Error::Admissibility(format!("{}: {}", c.name, c.detail))),
        }
    }
}

/// Checks γ(0) = 0, the velocity bound, support containment and, if given,
/// confinement to B_ε on an `n_samples`-step grid (at least 64).
pub fn check_admissible<T: Real>(
    orbit: &Orbit<T>,
    domain: &DomainSpec<T>,
    g: &SourceProfile<T>,
    eps: Option<LocalizedOrbitBound<T>>,
    n_samples: usize,
) -> AdmissibilityReport {
    let n = n_samples.max(MIN_ADMISSIBILITY_SAMPLES);
    let grid = TimeGrid::new(orbit.t_end(), n).expect("orbit horizon is positive");
    let pts = orbit.sample(&grid);
    let mut clauses = Vec::new();

    let r0 = norm(&pts[0]);
    clauses.push(Clause {
        name: "start".into(),
        passed: r0 <= T::epsilon() * T::lit(16.0),
        detail: format!("|gamma(0)| = {r0}"),
    });

    let dt = grid.dt();
    let (vmax, at) = pts
        .windows(2)
        .enumerate()
        .map(|(m, w)| {
            let d: Vec<T> = w[1].iter().zip(&w[0]).map(|(a, b)| *a - *b).collect();
            (norm(&d) / dt, m)
        })
        .fold((T::zero(), 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let k = orbit.speed_bound();
    clauses.push(Clause {
        name: "velocity".into(),
        passed: vmax <= k * (T::one() + T::lit(VELOCITY_TOLERANCE)),
        detail: format!("max |gamma'| ~ {vmax} near t = {} (K = {k})", grid.node(at)),
    });

    let containment = match domain {
        DomainSpec::Bounded(b) => pts
            .iter()
            .enumerate()
            .find(|(_, p)| !b.contains_ball(p, g.delta()))
            .map(|(m, p)| format!("gamma({}) = {p:?}: supp g leaves the box", grid.node(m))),
        DomainSpec::Free(_) => None,
    };
    clauses.push(Clause {
        name: "support".into(),
        passed: containment.is_none(),
        detail: containment.unwrap_or_else(|| "gamma(t) + supp g inside the domain".into()),
    });

    if let Some(e) = eps {
        let rmax = pts.iter().map(|p| norm(p)).fold(T::zero(), T::max);
        clauses.push(Clause {
            name: "localized".into(),
            passed: rmax <= e.epsilon(),
            detail: format!("max |gamma| = {rmax} (epsilon = {})", e.epsilon()),
        });
    }
    AdmissibilityReport { clauses }
}

/// Result of the sampled observability estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityBound<T> {
    /// max over samples of ‖(∇g(y¹) ⋯ ∇g(yᵈ))⁻¹‖₂
    pub bound: T,
    /// the maximizing sample
    pub worst: Vec<Vec<T>>,
    pub max_condition: T,
    pub samples: usize,
}

/// Uniform samples in the closed ball B_ε(center); ChaCha8 seeded.
pub fn sample_ball<T: Real>(center: &[T], eps: T, n: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = center.len();
    (0..n)
        .map(|_| {
            let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
            center
                .iter()
                .zip(&dir)
                .map(|(&c, &u)| c + eps * T::lit(r * u / len))
                .collect()
        })
        .collect()
}

/// Sampled estimate of sup ‖(∇g(y¹) ⋯ ∇g(yᵈ))⁻¹‖ over yʲ ∈ closure(B_ε(xʲ)).
///
/// Each trial draws one point per ball (randomized product sampling). The
/// centers themselves and, in 1D, the ball endpoints are always included.
pub fn observability_condition<T: Real>(
    g: &SourceProfile<T>,
    points: &[Vec<T>],
    eps: T,
    n_samples: usize,
    seed: u64,
) -> Result<ObservabilityBound<T>> {
    let d = g.dim();
    if points.len() != d {
        return Err(Error::invalid(
            "points",
            format!("need exactly d = {d} points, got {}", points.len()),
        ));
    }
    if !(eps > T::zero()) {
        return Err(Error::invalid("epsilon", format!("{eps} must be > 0")));
    }
    let per_ball: Vec<Vec<Vec<T>>> = points
        .iter()
        .enumerate()
        .map(|(j, x)| sample_ball(x, eps, n_samples, seed.wrapping_add(j as u64)))
        .collect();
    let mut tuples: Vec<Vec<Vec<T>>> = vec![points.to_vec()];
    if d == 1 {
        tuples.push(vec![vec![points[0][0] - eps]]);
        tuples.push(vec![vec![points[0][0] + eps]]);
    }
    for s in 0..n_samples {
        tuples.push(per_ball.iter().map(|b| b[s].clone()).collect());
    }
    observability_on_samples(g, &tuples)
}

/// Same estimate over explicit sample tuples (one point per ball each).
pub fn observability_on_samples<T: Real>(
    g: &SourceProfile<T>,
    tuples: &[Vec<Vec<T>>],
) -> Result<ObservabilityBound<T>> {
    let scale = g.amplitude() / g.delta();
    let mut best = ObservabilityBound {
        bound: T::zero(),
        worst: Vec::new(),
        max_condition: T::one(),
        samples: tuples.len(),
    };
    for ys in tuples {
        let cols: Vec<Vec<T>> = ys.iter().map(|y| g.gradient(y)).collect();
        let m = SmallMatrix::from_columns(&cols);
        let s = m.singular_values();
        let (smax, smin) = (s[0], s[s.len() - 1]);
        let cond = if smin > T::zero() { smax / smin } else { T::infinity() };
        if !(smin > scale * T::lit(1e-12)) || cond > T::lit(SINGULAR_CONDITION) {
            return Err(Error::Singular {
                context: format!("gradient matrix at sample {ys:?}"),
                condition: cond.to_f64_lossy(),
            });
        }
        let inv = T::one() / smin;
        best.max_condition = best.max_condition.max(cond);
        if inv > best.bound {
            best.bound = inv;
            best.worst = ys.clone();
        }
    }
    Ok(best)
}

/// Observation layout from the one-dimensional construction:
/// ε = δ/9, xʲ = (−1)ʲ⌊j/2⌋δ/4, N = ⌈4(KT + δ)/δ⌉.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationLayout<T> {
    pub epsilon: T,
    pub points: Vec<Vec<T>>,
    pub count: usize,
    /// true when produced by the multi-dimensional heuristic
    pub heuristic: bool,
}

/// The one-dimensional construction; for d > 1 returns an error unless
/// `allow_heuristic`, in which case the 1D points are laid along each axis.
pub fn select_observation_points<T: Real>(
    g: &SourceProfile<T>,
    speed_bound: T,
    t_end: T,
    allow_heuristic: bool,
) -> Result<ObservationLayout<T>> {
    let delta = g.delta();
    let d = g.dim();
    if d > 1 && !allow_heuristic {
        return Err(Error::invalid(
            "dim",
            format!("observation-point construction is exact only for d = 1 (d = {d}); heuristic-only"),
        ));
    }
    let count = (T::lit(4.0) * (speed_bound * t_end + delta) / delta)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let coord = |j: usize| {
        let sign = if j.is_multiple_of(2) { T::one() } else { -T::one() };
        sign * T::from_index(j / 2) * delta / T::lit(4.0)
    };
    let mut points = Vec::new();
    for axis in 0..d {
        for j in 1..=count {
            if axis > 0 && j == 1 {
                continue;
            }
            let mut p = vec![T::zero(); d];
            p[axis] = coord(j);
            points.push(p);
        }
    }
    Ok(ObservationLayout {
        epsilon: delta / T::lit(9.0),
        count: points.len(),
        points,
        heuristic: d > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::domain::BoxDomain;

    fn box1(l: f64) -> DomainSpec<f64> {
        DomainSpec::Bounded(BoxDomain::new(vec![l], vec![8]).unwrap())
    }

    #[test]
    fn stationary_orbit_is_admissible() {
        let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
        let o = Orbit::stationary(1, 1.0, 1.0).unwrap();
        assert!(check_admissible(&o, &box1(1.0), &g, None, 64).passed());
    }

    #[test]
    fn too_fast_orbit_fails_velocity() {
        let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
        let o = Orbit::linear(vec![2.0 * 0.5], 1.0, 0.5).unwrap();
        let r = check_admissible(&o, &box1(10.0), &g, None, 64);
        assert_eq!(r.first_violation().unwrap().name, "velocity");
    }

    #[test]
    fn localized_sine_orbit_passes() {
        let (delta, eps) = (0.4, 0.05);
        let g = SourceProfile::new(delta, 1.0, 1).unwrap();
        let o = Orbit::sine(vec![eps], 1.0, 1.0, eps).unwrap();
        let dom = box1(2.0 * (delta + eps) + 0.01);
        let r = check_admissible(&o, &dom, &g, Some(LocalizedOrbitBound::new(eps).unwrap()), 256);
        assert!(r.passed(), "{r:?}");
        // box too small: support clause
        let r2 = check_admissible(&o, &box1(2.0 * delta), &g, None, 64);
        assert_eq!(r2.first_violation().unwrap().name, "support");
    }

    #[test]
    fn observability_failures_and_success() {
        let g = SourceProfile::new(1.0f64, 1.0, 1).unwrap();
        assert!(observability_condition(&g, &[vec![0.0]], 0.05, 64, 1).is_err());
        assert!(observability_condition(&g, &[vec![2.0]], 0.05, 64, 1).is_err());
        let b = observability_condition(&g, &[vec![0.5]], 0.05, 512, 1).unwrap();
        assert!(b.bound.is_finite() && b.bound > 0.0);
        assert!(observability_condition(&g, &[vec![0.5], vec![0.1]], 0.05, 8, 1).is_err());
    }

    #[test]
    fn one_dimensional_layout_example() {
        let g = SourceProfile::new(0.4f64, 1.0, 1).unwrap();
        let l = select_observation_points(&g, 1.0, 1.0, false).unwrap();
        assert_eq!(l.count, 14);
        assert!((l.epsilon - 0.4 / 9.0).abs() < 1e-16);
        let xs: Vec<f64> = l.points.iter().map(|p| p[0]).collect();
        for (a, b) in xs.iter().zip([0.0, 0.1, -0.1, 0.2, -0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        let g4 = SourceProfile::new(4.0, 1.0, 1).unwrap();
        assert_eq!(select_observation_points(&g4, 1.0, 1.0, false).unwrap().count, 5);
        let g2 = SourceProfile::new(0.4, 1.0, 2).unwrap();
        assert!(select_observation_points(&g2, 1.0, 1.0, false).is_err());
        let h = select_observation_points(&g2, 1.0, 1.0, true).unwrap();
        assert!(h.heuristic && h.points[0] == vec![0.0, 0.0]);
    }
}
