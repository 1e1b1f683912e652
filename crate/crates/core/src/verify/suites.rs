use serde::{Deserialize, Serialize};

use super::stepper::fractional_relaxation_stepper;
use crate::error::Result;
use crate::forward::KernelFamily;
use crate::fracops::{rl_derivative, SampledFunction, TimeGrid};
use crate::order::FracOrder;
use crate::specfun::{mittag_leffler_real, relaxation_kernel, MLParams, MittagLeffler};
use num_complex::Complex;

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// the measured quantity (an error, a spread or an order)
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
            detail,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// E_{1/2,1}(−x) on x = 0, 0.25, …, 10 by high-precision series summation.
pub const HALF_ORDER_REFERENCE: &[(f64, f64)] = &[
    (0.0, 1.0),
    (0.25, 0.7703465477309967439167392),
    (0.5, 0.6156903441929258748707934),
    (0.75, 0.5069376502931448057914318),
    (1.0, 0.4275835761558070044107503),
    (1.25, 0.3678229164523610929260111),
    (1.5, 0.3215854164543175023543226),
    (1.75, 0.2849722347374363892091639),
    (2.0, 0.2553956763105057438650886),
    (2.25, 0.2310872587303918699574999),
    (2.5, 0.210806364061143580647112),
    (2.75, 0.1936620962790686786026835),
    (3.0, 0.1790011511813899504192948),
    (3.25, 0.1663353484268218767633829),
    (3.5, 0.1552936556088942974027265),
    (3.75, 0.1455897212750385390456688),
    (4.0, 0.1369994576250613898894452),
    (4.25, 0.1293452747859879107982713),
    (4.5, 0.1224848042738414175492255),
    (4.75, 0.1163027072102473076653313),
    (5.0, 0.1107046377330686263702121),
    (5.25, 0.1056127354688918024029008),
    (5.5, 0.1009622183994990882327985),
    (5.75, 0.0966987781697139208166082),
    (6.0, 0.09277656780053835438948671),
    (6.25, 0.08915663178727438987334262),
    (6.5, 0.08580567010489460177788759),
    (6.75, 0.08269505677505305952677667),
    (7.0, 0.0798000543291529334898645),
    (7.25, 0.07709918035125990166373285),
    (7.5, 0.07457369306287668300512925),
    (7.75, 0.0722071708146697605081018),
    (8.0, 0.06998516620088092772275225),
    (8.25, 0.06789491988272056268307293),
    (8.5, 0.06592512249998035174081049),
    (8.75, 0.06406571555128014472042602),
    (9.0, 0.06230772403777468414653749),
    (9.25, 0.06064311514114365907922512),
    (9.5, 0.05906467835256389085406461),
    (9.75, 0.05756592336481546651994594),
    (10.0, 0.05614099274382258585751739),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// E_{1,1}(−x) = e^{−x} and E_{2,1}(−x²) = cos x on [0, 50] (relative error,
/// measured away from the zeros of cos), and E_{1/2,1}(−x) against the
/// series table on [0, 10].
pub fn special_values() -> Result<Vec<Check>> {
    let e11 = MittagLeffler::new(MLParams::new(1.0, 1.0)?)?;
    let e21 = MittagLeffler::new(MLParams::new(2.0, 1.0)?)?;
    let eh = MittagLeffler::new(MLParams::new(0.5, 1.0)?)?;
    let (mut w_exp, mut w_cos) = (0.0f64, 0.0f64);
    for i in 0..=2000 {
        let x = 50.0 * i as f64 / 2000.0;
        w_exp = w_exp.max(rel(e11.eval_real(-x)?, (-x).exp()));
        let c = x.cos();
        // relative error of cos is ill-posed at its zeros; use max(|cos|, 1e-3)
        let err = (e21.eval_real(-x * x)? - c).abs() / c.abs().max(1e-3);
        w_cos = w_cos.max(err);
    }
    let mut w_half = 0.0f64;
    for &(x, v) in HALF_ORDER_REFERENCE {
        w_half = w_half.max(rel(eh.eval_real(-x)?, v));
    }
    Ok(vec![
        Check::at_most(
            "ml_exp",
            w_exp,
            1e-10,
            "max relative error of E_{1,1}(-x) vs exp(-x), x in [0,50]".into(),
        ),
        Check::at_most(
            "ml_cos",
            w_cos,
            1e-10,
            "max relative error of E_{2,1}(-x^2) vs cos x, x in [0,50]".into(),
        ),
        Check::at_most(
            "ml_half_series",
            w_half,
            1e-9,
            format!(
                "max relative error of E_{{1/2,1}}(-x) vs series table, {} points in [0,10]",
                HALF_ORDER_REFERENCE.len()
            ),
        ),
    ])
}

/// sup (1+x)|E_{α,μ}(−x)| over x = 0 and `n` log-uniform points in [1e-3, 1e4].
pub fn sector_constant(alpha: f64, mu: f64, n: usize) -> Result<f64> {
    let e = MittagLeffler::new(MLParams::new(alpha, mu)?)?;
    let mut c = e.eval_real(0.0)?.abs();
    for i in 0..n {
        let x = 10f64.powf(-3.0 + 7.0 * i as f64 / (n - 1) as f64);
        c = c.max((1.0 + x) * e.eval_real(-x)?.abs());
    }
    Ok(c)
}

/// The fitted sector constant per (α, μ) and its relative change under
/// grid doubling (400 → 800 points), plus complete monotonicity of
/// E_{α,1}(−x) on [0, 100] for α ≤ 1.
pub fn ml_estimate() -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    let mut table = Vec::new();
    let mut finite = true;
    for alpha in [0.3, 0.7, 1.3, 1.7] {
        for mu in [1.0, 2.0, alpha] {
            let c1 = sector_constant(alpha, mu, 400)?;
            let c2 = sector_constant(alpha, mu, 800)?;
            finite &= c1.is_finite() && c2.is_finite();
            let s = rel(c2, c1);
            worst = worst.max(s);
            table.push(format!("({alpha},{mu}):{c2:.4}"));
        }
    }
    if !finite {
        worst = f64::INFINITY;
    }
    let mut monotone = true;
    for alpha in [0.3, 0.7, 1.0] {
        let e = MittagLeffler::new(MLParams::new(alpha, 1.0)?)?;
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let v = e.eval_real(-0.1 * i as f64)?;
            monotone &= v > 0.0 && v < prev;
            prev = v;
        }
    }
    Ok(vec![
        Check::at_most(
            "ml_sector_constant",
            worst,
            0.05,
            format!(
                "relative change of sup (1+x)|E(-x)| under grid doubling; constants {}",
                table.join(" ")
            ),
        ),
        Check::at_least(
            "ml_complete_monotonicity",
            if monotone { 1.0 } else { 0.0 },
            1.0,
            "E_{a,1}(-x) positive and strictly decreasing on [0,100] for a in {0.3,0.7,1}".into(),
        ),
    ])
}

/// Relaxation kernel identity: the discrete RL derivative of order ⌈α⌉−α applied to
/// t^{⌈α⌉−1}E_{α,⌈α⌉}(−λt^α) against t^{α−1}E_{α,α}(−λt^α), L∞ on [0.1, 1]
/// over n ∈ {512, …, 4096}. Reports the smallest observed order.
pub fn kernel_identity() -> Result<Vec<Check>> {
    let mut min_order = f64::INFINITY;
    let mut lines = Vec::new();
    let mut final_err = 0.0f64;
    for alpha in [0.5, 1.5] {
        let a = FracOrder::new(alpha)?;
        let ca = a.ceil() as f64;
        let params = MLParams::new(alpha, ca)?;
        for lambda in [1.0, 10.0] {
            let mut errs = Vec::new();
            for n in [512usize, 1024, 2048, 4096] {
                let grid = TimeGrid::<f64>::new(1.0, n)?;
                let values = grid
                    .nodes()
                    .into_iter()
                    .map(|t| Ok(t.powf(ca - 1.0) * mittag_leffler_real(params, -lambda * t.powf(alpha))?))
                    .collect::<Result<Vec<f64>>>()?;
                let d = rl_derivative(&SampledFunction::new(grid, values)?, ca - alpha)?;
                let mut e = 0.0f64;
                for (m, t) in grid.nodes().into_iter().enumerate() {
                    if t >= 0.1 - 1e-12 {
                        e = e.max((d.at(m) - relaxation_kernel(a, lambda, t)?).abs());
                    }
                }
                errs.push(e);
            }
            for w in errs.windows(2) {
                min_order = min_order.min((w[0] / w[1]).log2());
            }
            final_err = final_err.max(*errs.last().expect("four levels"));
            lines.push(format!(
                "a={alpha} l={lambda}: {:.2e}",
                errs.last().expect("four levels")
            ));
        }
    }
    Ok(vec![Check::at_least(
        "kernel_identity_order",
        min_order,
        1.0,
        format!(
            "min observed order; finest errors {} (max {final_err:.2e})",
            lines.join(", ")
        ),
    )])
}

/// Closed-kernel Duhamel composition per mode vs the independent stepper
/// (f(s) = s, λ ∈ {1, 10}) at `n_steps`, and vs the exp/cos closed forms
/// (f ≡ 1) for α ∈ {1, 2}.
pub fn duhamel(n_steps: usize) -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, n_steps)?;
    let h = grid.dt();
    let nodes = grid.nodes();
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for alpha in [0.3, 0.7, 1.0, 1.3, 1.7, 2.0] {
        let fam = KernelFamily::new(FracOrder::new(alpha)?)?;
        let mut w_alpha = 0.0f64;
        for lambda in [1.0, 10.0] {
            let f: Vec<f64> = nodes.clone();
            let fc: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
            let u = fam.weights(Complex::new(lambda, 0.0), h, n_steps)?.apply_all(&fc);
            let y = fractional_relaxation_stepper(alpha, lambda, &f, h)?;
            for (a, b) in u.iter().zip(&y) {
                w_alpha = w_alpha.max((a.re - b).abs());
            }
        }
        worst = worst.max(w_alpha);
        lines.push(format!("a={alpha}: {w_alpha:.2e}"));
    }
    let mut w_closed = 0.0f64;
    for alpha in [1.0, 2.0] {
        let fam = KernelFamily::new(FracOrder::new(alpha)?)?;
        for lambda in [1.0, 10.0] {
            let ones = vec![Complex::new(1.0, 0.0); n_steps + 1];
            let u = fam.weights(Complex::new(lambda, 0.0), h, n_steps)?.apply_all(&ones);
            for (m, &t) in nodes.iter().enumerate() {
                let exact = if alpha == 1.0 {
                    -(-lambda * t).exp_m1() / lambda
                } else {
                    (1.0 - (lambda.sqrt() * t).cos()) / lambda
                };
                w_closed = w_closed.max((u[m].re - exact).abs());
            }
        }
    }
    Ok(vec![
        Check::at_most(
            "duhamel_vs_stepper",
            worst,
            1e-4,
            format!("L-inf vs direct stepper at n={n_steps}: {}", lines.join(", ")),
        ),
        Check::at_most(
            "duhamel_closed_forms",
            w_closed,
            1e-8,
            "L-inf vs (1-exp(-lt))/l and (1-cos(sqrt(l)t))/l".into(),
        ),
    ])
}

/// All oracle suites run by the `verify` command.
pub fn run_all() -> Result<VerifyReport> {
    let mut checks = special_values()?;
    checks.extend(ml_estimate()?);
    checks.extend(kernel_identity()?);
    checks.extend(duhamel(1024)?);
    Ok(VerifyReport { checks })
}
