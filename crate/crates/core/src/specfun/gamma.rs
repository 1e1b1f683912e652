//! Gamma function via the Lanczos approximation (g = 7, 9 coefficients).

use crate::real::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.9999999999998099,
    676.5203681218851,
    -1259.1392167224028,
    771.3234287776531,
    -176.6150291621406,
    12.507343278686905,
    -0.13857109526572012,
    9.984369578019572e-6,
    1.5056327351493116e-7,
];

fn lanczos_sum<T: Real>(x: T) -> T {
    // x already shifted by -1
    let mut a = T::lit(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + T::lit(*c) / (x + T::from_index(i));
    }
    a
}

/// True when `x` is a non-positive integer (a pole of Γ).
fn is_pole<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.round()
}

/// Γ(x) for real `x`; returns ±∞ at the poles.
pub fn gamma<T: Real>(x: T) -> T {
    if is_pole(x) {
        return T::infinity();
    }
    if x < T::lit(0.5) {
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    if x == x.round() && x <= T::lit(23.0) {
        // exact factorial range for f64
        let n = x.to_usize().unwrap_or(0);
        let mut acc = T::one();
        for k in 2..n {
            acc = acc * T::from_index(k);
        }
        return acc;
    }
    let xm = x - T::one();
    let t = xm + T::lit(LANCZOS_G + 0.5);
    let sqrt_2pi = (T::lit(2.0) * T::PI()).sqrt();
    if x > T::lit(140.0) {
        return ln_gamma(x).exp();
    }
    sqrt_2pi * t.powf(xm + T::lit(0.5)) * (-t).exp() * lanczos_sum(xm)
}

/// ln|Γ(x)|.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if is_pole(x) {
        return T::infinity();
    }
    if x < T::lit(0.5) {
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let xm = x - T::one();
    let t = xm + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (xm + T::lit(0.5)) * t.ln() - t + lanczos_sum(xm).ln()
}

/// 1/Γ(x), entire: zero at the non-positive integers.
pub fn rgamma<T: Real>(x: T) -> T {
    if is_pole(x) {
        return T::zero();
    }
    let (mag, sign) = ln_rgamma_signed(x);
    if sign == 0 {
        T::zero()
    } else {
        let v = (mag).exp();
        if sign < 0 {
            -v
        } else {
            v
        }
    }
}

/// `(ln|1/Γ(x)|, sign(1/Γ(x)))`; sign is 0 at the poles of Γ.
pub fn ln_rgamma_signed<T: Real>(x: T) -> (T, i8) {
    if is_pole(x) {
        return (T::neg_infinity(), 0);
    }
    if x > T::zero() {
        return (-ln_gamma(x), 1);
    }
    // 1/Γ(x) = sin(πx) Γ(1-x) / π
    let s = (T::PI() * x).sin();
    let sign = if s > T::zero() { 1 } else { -1 };
    (s.abs().ln() + ln_gamma(T::one() - x) - T::PI().ln(), sign)
}
