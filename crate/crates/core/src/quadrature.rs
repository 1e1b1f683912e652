//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    // Newton on P_n in f64, then converted; f64 is accurate enough for both scalars.
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule: `panels` equal panels of `order` nodes on `[a, b]`.
pub fn composite_gauss<T: Real>(a: T, b: T, panels: usize, order: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(order);
    let h = (b - a) / T::from_index(panels);
    let half = h / T::lit(2.0);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + h * (T::from_index(p) + T::lit(0.5));
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * *xi);
            weights.push(half * *wi);
        }
    }
    (nodes, weights)
}

const XGK: [f64; 8] = [
    0.9914553711208126,
    0.9491079123427585,
    0.8648644233597691,
    0.7415311855993944,
    0.5860872354676911,
    0.4058451513773972,
    0.2077849550078985,
    0.0,
];
const WGK: [f64; 8] = [
    0.02293532201052922,
    0.06309209262997855,
    0.10479001032225018,
    0.14065325971552592,
    0.1690047266392679,
    0.1903505780647854,
    0.2044329400752989,
    0.20948214108472783,
];
const WG: [f64; 4] = [
    0.1294849661688697,
    0.2797053914892767,
    0.3818300505051189,
    0.4179591836734694,
];

/// Settings for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for AdaptiveOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::zero(),
            rel_tol: T::lit(1e-12).max(T::epsilon() * T::lit(50.0)),
            max_intervals: 4000,
        }
    }
}

/// Result of an adaptive integration: value and error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<V, T> {
    pub value: V,
    pub error: T,
    pub intervals: usize,
}

struct Segment<T: Real> {
    a: T,
    b: T,
    value: Complex<T>,
    error: T,
}

fn gk15<T: Real, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> (Complex<T>, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        let s = f1 + f2;
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    let value = kron * half;
    let err = ((kron - gauss) * half).norm();
    (value, err)
}

/// Globally adaptive 15-point Gauss–Kronrod integration of a complex-valued
/// integrand over the union of `[breaks[i], breaks[i+1]]`.
pub fn integrate_adaptive<T, F>(mut f: F, breaks: &[T], opts: AdaptiveOptions<T>) -> Result<Quadrature<Complex<T>, T>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    if breaks.len() < 2 {
        return Err(Error::invalid("breaks", "need at least two points"));
    }
    let mut segs: Vec<Segment<T>> = Vec::with_capacity(64);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(&mut f, w[0], w[1]);
            segs.push(Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    loop {
        let total: Complex<T> = segs
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, s| acc + s.value);
        let err: T = segs.iter().fold(T::zero(), |acc, s| acc + s.error);
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= target || segs.is_empty() {
            return Ok(Quadrature {
                value: total,
                error: err,
                intervals: segs.len(),
            });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: format!(
                    "error estimate {:.3e} above target {:.3e} after {} intervals",
                    err.to_f64_lossy(),
                    target.to_f64_lossy(),
                    segs.len()
                ),
            });
        }
        let (idx, _) = segs.iter().enumerate().fold((0, T::neg_infinity()), |best, (i, s)| {
            if s.error > best.1 {
                (i, s.error)
            } else {
                best
            }
        });
        let worst = segs.swap_remove(idx);
        let mid = (worst.a + worst.b) / T::lit(2.0);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution; accept what we have
            segs.push(Segment {
                error: T::zero(),
                ..worst
            });
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        segs.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segs.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
}

/// Real-valued convenience wrapper around [`integrate_adaptive`].
pub fn integrate_real<T, F>(mut f: F, breaks: &[T], opts: AdaptiveOptions<T>) -> Result<Quadrature<T, T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let q = integrate_adaptive(|x| Complex::new(f(x), T::zero()), breaks, opts)?;
    Ok(Quadrature {
        value: q.value.re,
        error: q.error,
        intervals: q.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre::<f64>(6);
        // degree 11 is the highest exact degree
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((approx - 2.0 / 11.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = integrate_real(|x: f64| x.powf(-0.5), &[0.0, 1.0], AdaptiveOptions::default()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-9, "{}", q.value);
    }

    #[test]
    fn adaptive_oscillatory() {
        let q = integrate_real(|x: f64| (30.0 * x).cos(), &[0.0, 2.0], AdaptiveOptions::default()).unwrap();
        assert!((q.value - (60.0f64).sin() / 30.0).abs() < 1e-12);
    }
}
