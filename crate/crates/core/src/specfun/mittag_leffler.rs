//! Two-parameter Mittag-Leffler function E_{β,μ}(z) = Σ_ℓ z^ℓ / Γ(βℓ + μ).
//!
//! Three evaluation routes, chosen by |z|:
//!
//! * Taylor series near the origin (compensated summation, at most
//!   [`SERIES_TERM_CAP`] terms);
//! * the Hankel-contour representation collapsed onto the negative real
//!   axis, plus the residues of the poles s^β = z on the principal sheet,
//!   integrated by adaptive Gauss–Kronrod for the middle range;
//! * the algebraic asymptotic expansion (with the same residues) for large |z|.
//!
//! β = 1 and β = 2 with integer μ reduce to exponential and trigonometric
//! closed forms and skip all three.

use num_complex::Complex;

use super::gamma::{ln_gamma, ln_rgamma_signed, rgamma};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};
use crate::real::{CompensatedSum, Real};

/// Maximum number of Taylor terms before the series reports non-convergence.
pub const SERIES_TERM_CAP: usize = 400;
/// Beyond this modulus only the asymptotic expansion is used.
pub const Z_MAX: f64 = 1e8;
const ASYMPTOTIC_TERM_CAP: usize = 120;
/// Upper cut-off of the collapsed Hankel integral (weight e^{-r}).
const HANKEL_CUTOFF: f64 = 60.0;

/// Order, second parameter and accuracy target of a Mittag-Leffler evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams<T> {
    pub beta: T,
    pub mu: T,
    pub tol: T,
}

impl<T: Real> MLParams<T> {
    /// Parameters with the default accuracy target 1e-13.
    pub fn new(beta: T, mu: T) -> Result<Self> {
        Self::with_tol(beta, mu, T::lit(1e-13))
    }

    pub fn with_tol(beta: T, mu: T, tol: T) -> Result<Self> {
        let p = Self { beta, mu, tol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > T::zero() && self.beta <= T::lit(2.0)) {
            return Err(Error::invalid("beta", format!("{} not in (0, 2]", self.beta)));
        }
        if !(self.mu > T::zero()) || !self.mu.is_finite() {
            return Err(Error::invalid("mu", format!("{} must be > 0", self.mu)));
        }
        if !(self.tol > T::zero() && self.tol <= T::lit(1e-6)) {
            return Err(Error::invalid("tol", format!("{} not in (0, 1e-6]", self.tol)));
        }
        Ok(())
    }
}

/// Which route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    ClosedForm,
    Series,
    Integral,
    Asymptotic,
}

/// Reusable evaluator for fixed (β, μ): caches the Γ tables of both expansions.
#[derive(Debug, Clone)]
pub struct MittagLeffler<T> {
    params: MLParams<T>,
    /// lnΓ(βk + μ), k = 0..SERIES_TERM_CAP
    series_ln_gamma: Vec<T>,
    /// (ln|1/Γ(μ − βk)|, sign, ln of the sine-free envelope), k = 1..=ASYMPTOTIC_TERM_CAP
    asymptotic: Vec<(T, i8, T)>,
    series_radius: T,
    asymptotic_radius: T,
}

fn is_integer<T: Real>(x: T) -> bool {
    x == x.round()
}

impl<T: Real> MittagLeffler<T> {
    pub fn new(params: MLParams<T>) -> Result<Self> {
        params.validate()?;
        let MLParams { beta, mu, tol } = params;
        let series_ln_gamma = (0..SERIES_TERM_CAP)
            .map(|k| ln_gamma(beta * T::from_index(k) + mu))
            .collect();
        let asymptotic = (1..=ASYMPTOTIC_TERM_CAP)
            .map(|k| {
                let y = mu - beta * T::from_index(k);
                let (lg, sign) = ln_rgamma_signed(y);
                // |1/Γ(y)| = |sin πy| Γ(1−y)/π for y < 0; drop the sine for step control
                let envelope = if y > T::zero() {
                    lg
                } else {
                    ln_gamma(T::one() - y) - T::PI().ln()
                };
                (lg, sign, envelope)
            })
            .collect();
        let eps = T::epsilon();
        // Γ-table error (~20 eps) times the peak term must stay below tol
        let budget = (tol.max(eps) / (eps * T::lit(20.0))).ln();
        let series_radius = budget.max(T::one()).powf(beta).min(T::lit(5.0));
        let asymptotic_radius = ((T::one() / tol.max(eps)).ln() + T::lit(5.0)).powf(beta);
        Ok(Self {
            params,
            series_ln_gamma,
            asymptotic,
            series_radius,
            asymptotic_radius,
        })
    }

    pub fn params(&self) -> MLParams<T> {
        self.params
    }

    /// E_{β,μ}(z).
    pub fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.eval_with_branch(z).map(|(v, _)| v)
    }

    /// E_{β,μ}(x) for real `x`; the imaginary part is dropped.
    pub fn eval_real(&self, x: T) -> Result<T> {
        self.eval(Complex::new(x, T::zero())).map(|v| v.re)
    }

    /// E_{β,μ}(z) together with the route that produced it.
    pub fn eval_with_branch(&self, z: Complex<T>) -> Result<(Complex<T>, Branch)> {
        let MLParams { beta, mu, .. } = self.params;
        let r = z.norm();
        if r == T::zero() {
            return Ok((Complex::new(rgamma(mu), T::zero()), Branch::ClosedForm));
        }
        if beta == T::one() && is_integer(mu) && r > T::one() {
            return Ok((exp_closed_form(z, mu), Branch::ClosedForm));
        }
        if beta == T::lit(2.0) && is_integer(mu) && r > T::lit(4.0) {
            return Ok((trig_closed_form(z, mu), Branch::ClosedForm));
        }
        if r > T::lit(Z_MAX) {
            return Ok((self.asymptotic_unchecked(z), Branch::Asymptotic));
        }
        if r <= self.series_radius {
            return self.series(z).map(|v| (v, Branch::Series));
        }
        if beta == T::one() {
            return unit_order_integral(z, mu, self.params.tol).map(|v| (v, Branch::Integral));
        }
        if r >= self.asymptotic_radius {
            if let Some(v) = self.asymptotic(z) {
                return Ok((v, Branch::Asymptotic));
            }
        }
        self.integral(z).map(|v| (v, Branch::Integral))
    }

    /// Taylor series regardless of |z| (loses accuracy to cancellation far out).
    pub fn series(&self, z: Complex<T>) -> Result<Complex<T>> {
        let r = z.norm();
        if r == T::zero() {
            return Ok(Complex::new(rgamma(self.params.mu), T::zero()));
        }
        let ln_r = r.ln();
        let theta = z.arg();
        let real_axis = z.im == T::zero();
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        let stop = T::epsilon() * T::lit(0.25);
        let mut prev_mag = T::infinity();
        for (k, lg) in self.series_ln_gamma.iter().enumerate() {
            let kf = T::from_index(k);
            let mag = (kf * ln_r - *lg).exp();
            if real_axis {
                let sign = if z.re < T::zero() && k % 2 == 1 {
                    -T::one()
                } else {
                    T::one()
                };
                re.add(sign * mag);
            } else {
                let ph = kf * theta;
                re.add(mag * ph.cos());
                im.add(mag * ph.sin());
            }
            let total = Complex::new(re.value(), im.value()).norm();
            if k > 2 && mag <= prev_mag && mag <= stop * total {
                return Ok(Complex::new(re.value(), im.value()));
            }
            if k > 2 && mag == T::zero() {
                return Ok(Complex::new(re.value(), im.value()));
            }
            prev_mag = mag;
        }
        Err(Error::NonConvergence {
            what: "Mittag-Leffler series",
            detail: format!("|z| = {:.3e} needs more than {SERIES_TERM_CAP} terms", r.to_f64_lossy()),
        })
    }

    /// Residues of e^s s^{β−μ}/(s^β − z) at the poles inside the principal sheet.
    fn residues(&self, z: Complex<T>) -> Complex<T> {
        let MLParams { beta, mu, .. } = self.params;
        let pi = T::PI();
        let two_pi = pi + pi;
        let theta = z.arg();
        let rho = z.norm().powf(T::one() / beta);
        let ln_rho = rho.ln();
        let mut acc = Complex::new(T::zero(), T::zero());
        let kmax = 2i32;
        for k in -kmax..=kmax {
            let ang = theta + two_pi * T::from_i32(k).unwrap();
            if ang.abs() >= pi * beta {
                continue;
            }
            let phi = ang / beta;
            let mag = ((T::one() - mu) * ln_rho + rho * phi.cos()).exp() / beta;
            let phase = (T::one() - mu) * phi + rho * phi.sin();
            acc = acc + Complex::from_polar(mag, phase);
        }
        acc
    }

    /// Algebraic asymptotic expansion; `None` if it cannot reach the tolerance.
    pub fn asymptotic(&self, z: Complex<T>) -> Option<Complex<T>> {
        self.asymptotic_terms(z, true)
    }

    fn asymptotic_unchecked(&self, z: Complex<T>) -> Complex<T> {
        self.asymptotic_terms(z, false)
            .expect("unchecked expansion always returns")
    }

    fn asymptotic_terms(&self, z: Complex<T>, checked: bool) -> Option<Complex<T>> {
        let tol = self.params.tol.max(T::epsilon());
        let ln_r = z.norm().ln();
        let theta = z.arg();
        let res = self.residues(z);
        let mut sum = Complex::new(T::zero(), T::zero());
        let mut smallest = T::infinity();
        for (i, (lg, sign, envelope)) in self.asymptotic.iter().enumerate() {
            let k = T::from_index(i + 1);
            let mag = (*envelope - k * ln_r).exp();
            if checked && mag > T::lit(100.0) * smallest {
                return None;
            }
            if *sign != 0 {
                let s = if *sign > 0 { T::one() } else { -T::one() };
                let term = Complex::from_polar((*lg - k * ln_r).exp(), -k * theta) * s;
                sum = sum - term;
            }
            let scale = (sum + res).norm().max(res.norm()).max(sum.norm());
            if mag <= T::lit(0.01) * tol * scale {
                return Some(res + sum);
            }
            smallest = smallest.min(mag);
            if !checked && i >= 8 {
                return Some(res + sum);
            }
        }
        if checked {
            None
        } else {
            Some(res + sum)
        }
    }

    /// Hankel-contour integral route (requires β ≠ 1).
    pub fn integral(&self, z: Complex<T>) -> Result<Complex<T>> {
        let MLParams { beta, mu, tol } = self.params;
        if beta == T::one() {
            return unit_order_integral(z, mu, tol);
        }
        // lower μ by multiples of β until the integrand is integrable at r = 0
        let mut steps = 0usize;
        let mut base_mu = mu;
        while base_mu >= T::one() + beta {
            base_mu = base_mu - beta;
            steps += 1;
        }
        let mut value = if steps == 0 {
            self.hankel(z, mu)?
        } else {
            let base = MittagLeffler::new(MLParams { beta, mu: base_mu, tol })?;
            base.hankel(z, base_mu)?
        };
        let mut m = base_mu;
        for _ in 0..steps {
            value = (value - Complex::new(rgamma(m), T::zero())) / z;
            m = m + beta;
        }
        Ok(value)
    }

    fn hankel(&self, z: Complex<T>, mu: T) -> Result<Complex<T>> {
        let beta = self.params.beta;
        let tol = self.params.tol.max(T::epsilon() * T::lit(10.0));
        let pi = T::PI();
        let p = beta - mu;
        let a_minus = Complex::from_polar(T::one(), -pi * p);
        let a_plus = Complex::from_polar(T::one(), pi * p);
        let b_minus = Complex::from_polar(T::one(), -pi * beta);
        let b_plus = Complex::from_polar(T::one(), pi * beta);
        let two_pi_i = Complex::new(T::zero(), pi + pi);
        let res = self.residues(z);

        let bracket = |r: T| -> Complex<T> {
            let rb = r.powf(beta);
            let t = a_minus / (b_minus * rb - z) - a_plus / (b_plus * rb - z);
            t * (-r).exp() / two_pi_i
        };

        let cutoff = T::lit(HANKEL_CUTOFF);
        let peak = z.norm().powf(T::one() / beta);
        let mut breaks_r = vec![T::zero(), T::one().min(cutoff), cutoff];
        for c in [peak * T::lit(0.5), peak, peak * T::lit(2.0)] {
            if c > T::zero() && c < cutoff {
                breaks_r.push(c);
            }
        }
        breaks_r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks_r.dedup();

        let opts = AdaptiveOptions {
            abs_tol: T::lit(0.05) * tol * res.norm(),
            rel_tol: T::lit(0.05) * tol,
            max_intervals: 4000,
        };
        let integral = if p < T::zero() {
            // r = u^{1/q} absorbs the r^p singularity: r^p dr = du / q
            let q = p + T::one();
            let inv_q = T::one() / q;
            let breaks: Vec<T> = breaks_r.iter().map(|r| r.powf(q)).collect();
            integrate_adaptive(
                |u: T| {
                    let r = u.powf(inv_q);
                    bracket(r) * inv_q
                },
                &breaks,
                opts,
            )?
        } else {
            integrate_adaptive(|r: T| bracket(r) * r.powf(p), &breaks_r, opts)?
        };
        Ok(res + integral.value)
    }
}

/// E_{1,m}(z) for integer m ≥ 1: (e^z − Σ_{j<m−1} z^j/j!) / z^{m−1}.
fn exp_closed_form<T: Real>(z: Complex<T>, mu: T) -> Complex<T> {
    let m = mu.to_usize().unwrap_or(1);
    let mut poly = Complex::new(T::zero(), T::zero());
    let mut term = Complex::new(T::one(), T::zero());
    for j in 0..m.saturating_sub(1) {
        poly = poly + term;
        term = term * z / T::from_index(j + 1);
    }
    let mut v = z.exp() - poly;
    for _ in 1..m {
        v = v / z;
    }
    v
}

/// E_{2,m}(z) for integer m ≥ 1 via cos/sin of w = √(−z) and upward recurrence.
fn trig_closed_form<T: Real>(z: Complex<T>, mu: T) -> Complex<T> {
    let m = mu.to_usize().unwrap_or(1);
    let w = (-z).sqrt();
    let mut even = w.cos(); // E_{2,1}
    let mut odd = w.sin() / w; // E_{2,2}
    let mut order_even = 1usize;
    let mut order_odd = 2usize;
    while order_even + 2 <= m {
        even = (even - Complex::new(rgamma(T::from_index(order_even)), T::zero())) / z;
        order_even += 2;
    }
    while order_odd + 2 <= m {
        odd = (odd - Complex::new(rgamma(T::from_index(order_odd)), T::zero())) / z;
        order_odd += 2;
    }
    if m % 2 == 1 {
        even
    } else {
        odd
    }
}

/// E_{1,μ}(z) for non-integer μ: Euler-type integral for μ > 1, recurrence below.
fn unit_order_integral<T: Real>(z: Complex<T>, mu: T, tol: T) -> Result<Complex<T>> {
    if is_integer(mu) {
        return Ok(exp_closed_form(z, mu));
    }
    if mu < T::one() {
        let up = unit_order_integral(z, mu + T::one(), tol)?;
        return Ok(Complex::new(rgamma(mu), T::zero()) + z * up);
    }
    // E_{1,μ}(z) = (1/Γ(μ−1)) ∫_0^1 e^{z(1−v)} v^{μ−2} dv
    let nu = mu - T::one();
    let scale = rgamma(nu);
    let opts = AdaptiveOptions {
        abs_tol: T::zero(),
        rel_tol: T::lit(0.05) * tol.max(T::epsilon() * T::lit(10.0)),
        max_intervals: 2000,
    };
    let q = if nu < T::one() {
        // v = w^{1/ν}: v^{ν−1} dv = dw / ν
        let inv = T::one() / nu;
        integrate_adaptive(
            |w: T| (z * (T::one() - w.powf(inv))).exp() * inv,
            &[T::zero(), T::lit(0.5), T::one()],
            opts,
        )?
    } else {
        integrate_adaptive(
            |v: T| (z * (T::one() - v)).exp() * v.powf(nu - T::one()),
            &[T::zero(), T::lit(0.5), T::one()],
            opts,
        )?
    };
    Ok(q.value * scale)
}

/// One-shot E_{β,μ}(z).
pub fn mittag_leffler<T: Real>(params: MLParams<T>, z: Complex<T>) -> Result<Complex<T>> {
    MittagLeffler::new(params)?.eval(z)
}

/// One-shot E_{β,μ}(x) for real argument.
pub fn mittag_leffler_real<T: Real>(params: MLParams<T>, x: T) -> Result<T> {
    MittagLeffler::new(params)?.eval_real(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ml(beta: f64, mu: f64) -> MittagLeffler<f64> {
        MittagLeffler::new(MLParams::new(beta, mu).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MLParams::new(0.0, 1.0).is_err());
        assert!(MLParams::new(2.5, 1.0).is_err());
        assert!(MLParams::new(0.5, 0.0).is_err());
        assert!(MLParams::with_tol(0.5, 1.0, 1e-3).is_err());
    }

    #[test]
    fn exponential_case() {
        let e = ml(1.0, 1.0);
        assert!((e.eval_real(-1.0).unwrap() - 0.3678794411714423).abs() < 1e-15);
        for x in [0.1, 0.5, 3.0, 17.0, 45.0] {
            let v = e.eval_real(-x).unwrap();
            assert!(((v - (-x).exp()) / (-x).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_case() {
        let e = ml(2.0, 1.0);
        let h = std::f64::consts::FRAC_PI_2;
        assert!(e.eval_real(-h * h).unwrap().abs() < 1e-13);
    }

    #[test]
    fn zero_argument_is_reciprocal_gamma() {
        for (b, m) in [(0.3, 1.0), (0.7, 0.7), (1.5, 2.0), (1.9, 3.3)] {
            let v = ml(b, m).eval_real(0.0).unwrap();
            assert!((v - rgamma(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn series_and_integral_agree_on_overlap() {
        for beta in [0.3, 0.5, 0.7, 1.3, 1.7] {
            for mu in [1.0, 2.0, beta] {
                let e = ml(beta, mu);
                for x in [0.8, 1.0, 1.4] {
                    let s = e.series(Complex::new(-x, 0.0)).unwrap();
                    let i = e.integral(Complex::new(-x, 0.0)).unwrap();
                    assert!(
                        (s - i).norm() <= 1e-12 * s.norm().max(1e-3),
                        "beta={beta} mu={mu} x={x}: {s} vs {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn integral_and_asymptotic_agree_far_out() {
        for beta in [0.3, 0.5, 0.7, 1.3] {
            for mu in [1.0, 2.0, beta] {
                let e = ml(beta, mu);
                let x = e.asymptotic_radius * 1.5;
                let z = Complex::new(-x, 0.0);
                let a = e.asymptotic(z).expect("asymptotic converges");
                let i = e.integral(z).unwrap();
                assert!((a - i).norm() <= 1e-11 * a.norm(), "beta={beta} mu={mu}: {a} vs {i}");
            }
        }
    }

    #[test]
    fn complex_argument_near_negative_axis() {
        // compare with series at moderate |z| off the axis
        let e = ml(0.6, 1.0);
        let z = Complex::new(-2.0, 0.3);
        let s = e.series(z).unwrap();
        let i = e.integral(z).unwrap();
        assert!((s - i).norm() < 1e-10 * s.norm(), "{s} vs {i}");
    }

    #[test]
    fn unit_order_non_integer_mu() {
        // E_{1,1.5}(z) series vs integral representation
        let e = ml(1.0, 1.5);
        let z = Complex::new(-1.5, 0.0);
        let s = e.series(z).unwrap();
        let i = unit_order_integral(z, 1.5, 1e-13).unwrap();
        assert!((s - i).norm() < 1e-12, "{s} vs {i}");
        let z = Complex::new(-1.2, 0.0);
        let e = ml(1.0, 0.5);
        let s = e.series(z).unwrap();
        let i = unit_order_integral(z, 0.5, 1e-13).unwrap();
        assert!((s - i).norm() < 1e-12, "{s} vs {i}");
    }
}
