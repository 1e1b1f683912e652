use num_complex::Complex;
use rustfft::FftPlanner;

use super::kernel::KernelFamily;
use crate::error::{Error, Result};
use crate::model::SourceProfile;
use crate::model::{FreeSpace, FrequencyGrid};
use crate::order::FracOrder;
use crate::real::Real;

/// Multiplies each modal coefficient of the initial datum by
/// t^{⌈α⌉−1}E_{α,⌈α⌉}(−λₙt^α). `v_init` is v₀ for α ≤ 1 and v₁ for α > 1.
pub fn solve_homogeneous_bounded<T: Real>(v_init: &[T], lambdas: &[T], alpha: FracOrder<T>, t: T) -> Result<Vec<T>> {
    if t < T::zero() {
        return Err(Error::invalid("t", format!("{t} must be >= 0")));
    }
    if v_init.len() != lambdas.len() {
        return Err(Error::DataMismatch(format!(
            "{} coefficients for {} modes",
            v_init.len(),
            lambdas.len()
        )));
    }
    let family = KernelFamily::new(alpha)?;
    v_init
        .iter()
        .zip(lambdas)
        .map(|(&v, &l)| {
            if v == T::zero() {
                return Ok(T::zero());
            }
            Ok(v * family.homogeneous(Complex::new(l, T::zero()), t)?.re)
        })
        .collect()
}

/// Real field sampled on the spatial grid dual to a [`FrequencyGrid`]:
/// xⱼ = −L/2 + j·dx per axis with dx = π/Ξ and period L = n·dx.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField<T> {
    pub grid: FrequencyGrid<T>,
    pub values: Vec<T>,
}

impl<T: Real> SpatialField<T> {
    pub fn spacing(grid: &FrequencyGrid<T>) -> T {
        T::PI() / grid.half_width()
    }

    pub fn axis_node(grid: &FrequencyGrid<T>, j: usize) -> T {
        let dx = Self::spacing(grid);
        (T::from_index(j) - T::from_index(grid.points_per_axis() / 2)) * dx
    }

    pub fn node(grid: &FrequencyGrid<T>, flat: usize) -> Vec<T> {
        grid.unflatten(flat)
            .into_iter()
            .map(|j| Self::axis_node(grid, j))
            .collect()
    }

    pub fn from_fn(grid: FrequencyGrid<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.len()).map(|k| f(&Self::node(&grid, k))).collect();
        Self { grid, values }
    }

    /// Samples of a source profile centred at the origin.
    pub fn from_profile(grid: FrequencyGrid<T>, g: &SourceProfile<T>) -> Self {
        Self::from_fn(grid, |x| g.value(x))
    }
}

/// Applies a 1D transform along every axis of a row-major cube.
fn transform_axes<T: Real>(data: &mut [Complex<T>], n: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        for base in 0..total {
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for (i, l) in line.iter_mut().enumerate() {
                *l = data[base + i * stride];
            }
            fft.process(&mut line);
            for (i, l) in line.iter().enumerate() {
                data[base + i * stride] = *l;
            }
        }
    }
}

fn phase_product<T: Real>(grid: &FrequencyGrid<T>, flat: usize, per_axis: impl Fn(usize) -> T) -> T {
    grid.unflatten(flat)
        .into_iter()
        .map(per_axis)
        .fold(T::zero(), |a, b| a + b)
}

/// v̂(ξ) = (2π)^{−d/2} Σ v(x) e^{−ix·ξ} dx^d on the grid nodes.
pub fn to_frequency<T: Real>(field: &SpatialField<T>) -> Vec<Complex<T>> {
    let grid = &field.grid;
    let (n, d) = (grid.points_per_axis(), grid.dim());
    let dx = SpatialField::spacing(grid);
    let xi0 = grid.axis_node(0);
    let x0 = SpatialField::axis_node(grid, 0);
    let mut data: Vec<Complex<T>> = field
        .values
        .iter()
        .enumerate()
        .map(|(flat, &v)| {
            let ph = phase_product(grid, flat, |j| -T::from_index(j) * dx * xi0);
            Complex::from_polar(v, ph)
        })
        .collect();
    transform_axes(&mut data, n, d, false);
    let c = dx.powi(d as i32) * crate::model::two_pi_pow(d, -T::lit(0.5));
    data.iter()
        .enumerate()
        .map(|(flat, &a)| {
            let ph = phase_product(grid, flat, |k| -x0 * grid.axis_node(k));
            a * Complex::from_polar(c, ph)
        })
        .collect()
}

/// Inverse of [`to_frequency`]: v(x) = (2π)^{−d/2} Σ v̂(ξ) e^{ix·ξ} dξ^d.
pub fn to_space<T: Real>(grid: &FrequencyGrid<T>, spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
    let (n, d) = (grid.points_per_axis(), grid.dim());
    let dxi = grid.spacing();
    let xi0 = grid.axis_node(0);
    let x0 = SpatialField::axis_node(grid, 0);
    let mut data: Vec<Complex<T>> = spectrum
        .iter()
        .enumerate()
        .map(|(flat, &v)| {
            let ph = phase_product(grid, flat, |k| x0 * T::from_index(k) * dxi);
            v * Complex::from_polar(T::one(), ph)
        })
        .collect();
    transform_axes(&mut data, n, d, true);
    let c = dxi.powi(d as i32) * crate::model::two_pi_pow(d, -T::lit(0.5));
    data.iter()
        .enumerate()
        .map(|(flat, &a)| {
            let ph = phase_product(grid, flat, |j| SpatialField::axis_node(grid, j) * xi0);
            a * Complex::from_polar(c, ph)
        })
        .collect()
}

/// Free-space homogeneous solution: transform, multiply by
/// t^{⌈α⌉−1}E_{α,⌈α⌉}(−S(ξ)t^α) (S^{−1/2}sin(S^{1/2}t) for α = 2), invert.
pub fn solve_homogeneous_free<T: Real>(
    v_init: &SpatialField<T>,
    alpha: FracOrder<T>,
    space: &FreeSpace<T>,
    t: T,
) -> Result<SpatialField<T>> {
    if t < T::zero() {
        return Err(Error::invalid("t", format!("{t} must be >= 0")));
    }
    if v_init.grid != *space.grid() {
        return Err(Error::DataMismatch(
            "initial datum is not on the operator's grid".into(),
        ));
    }
    if alpha.value() == T::lit(2.0) && !space.wave_compatible() {
        return Err(Error::invalid("alpha", "alpha = 2 requires b = 0 and c >= 0"));
    }
    let grid = *space.grid();
    let family = KernelFamily::new(alpha)?;
    let mut spec = to_frequency(v_init);
    for (k, v) in spec.iter_mut().enumerate() {
        if *v != Complex::new(T::zero(), T::zero()) {
            *v = *v * family.homogeneous(space.symbol(&grid.node(k)), t)?;
        }
    }
    let values = to_space(&grid, &spec).into_iter().map(|z| z.re).collect();
    Ok(SpatialField { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_round_trip() {
        let grid = FrequencyGrid::new(20.0f64, 64, 2).unwrap();
        let f = SpatialField::from_fn(grid, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() * (1.0 + x[0]));
        let back = to_space(&grid, &to_frequency(&f));
        for (a, b) in f.values.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-13 && b.im.abs() < 1e-13, "{a} {b}");
        }
    }

    #[test]
    fn gaussian_transform_is_gaussian() {
        // (2π)^{-1/2}∫e^{-x²/2}e^{-ixξ}dx = e^{-ξ²/2}
        let grid = FrequencyGrid::new(16.0f64, 128, 1).unwrap();
        let f = SpatialField::from_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
        let s = to_frequency(&f);
        for k in 0..128 {
            let xi = grid.axis_node(k);
            assert!((s[k].re - (-xi * xi / 2.0).exp()).abs() < 1e-13, "k {k}");
            assert!(s[k].im.abs() < 1e-13);
        }
    }

    #[test]
    fn bounded_single_mode_closed_forms() {
        let lam = [3.0f64, 7.0];
        let one = FracOrder::new(1.0).unwrap();
        let r = solve_homogeneous_bounded(&[1.0, 0.0], &lam, one, 0.4).unwrap();
        assert!((r[0] - (-1.2f64).exp()).abs() < 1e-15 && r[1] == 0.0);
        let two = FracOrder::new(2.0).unwrap();
        let r = solve_homogeneous_bounded(&[1.0, 0.0], &lam, two, 0.4).unwrap();
        assert!((r[0] - (3.0f64.sqrt() * 0.4).sin() / 3.0f64.sqrt()).abs() < 1e-15);
        assert!(solve_homogeneous_bounded(&[1.0, 0.0], &lam, two, -0.1).is_err());
    }
}
