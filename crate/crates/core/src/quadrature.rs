//! Gauss–Legendre rules and an adaptive panel integrator.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

struct PanelRules {
    low: (Vec<f64>, Vec<f64>),
    high: (Vec<f64>, Vec<f64>),
}

fn panel_rules() -> &'static PanelRules {
    static RULES: OnceLock<PanelRules> = OnceLock::new();
    RULES.get_or_init(|| PanelRules {
        low: gauss_legendre(10),
        high: gauss_legendre(21),
    })
}

fn apply_rule<F: FnMut(f64) -> f64>(rule: &(Vec<f64>, Vec<f64>), f: &mut F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(t, w)| w * f(c + h * t))
        .sum::<f64>()
        * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Adaptive bisection with a 10/21-point Gauss pair per panel.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    let rules = panel_rules();
    let mut stack = vec![(a, b, 0u32)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut panels = 0usize;
    let mut failed = false;
    let total_len = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let coarse = apply_rule(&rules.low, &mut f, lo, hi);
        let fine = apply_rule(&rules.high, &mut f, lo, hi);
        let est = (fine - coarse).abs();
        let share = ((hi - lo).abs() / total_len).max(1e-300);
        let allowed = abs_tol.max(rel_tol * fine.abs()) * share.max(1e-3);
        if est <= allowed || est <= 1e-15 * fine.abs() || depth >= 48 {
            if depth >= 48 && est > allowed {
                failed = true;
            }
            value += fine;
            error += est;
            panels += 1;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
        if !value.is_finite() {
            return Err(Error::Quadrature { estimate: f64::NAN });
        }
    }
    if failed && error > abs_tol.max(rel_tol * value.abs()) {
        return Err(Error::Quadrature { estimate: error });
    }
    Ok(QuadResult {
        value,
        error,
        panels,
    })
}

/// Composite Gauss–Legendre nodes and weights over `[a, b]` split into
/// `panels` equal pieces.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (ti, wi) in t.iter().zip(&w) {
            xs.push(c + 0.5 * h * ti);
            ws.push(0.5 * h * wi);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        for n in [1, 2, 5, 10, 21, 40] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((r.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn composite_integrates_smooth_functions() {
        let (x, w) = composite_rule(0.0, 3.0, 6, 8);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert!((q - (1.0 - 3f64.cos())).abs() < 1e-14);
    }
}
