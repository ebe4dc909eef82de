//! Dormand–Prince 5(4) with step clipping at requested output points.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let s = h * c;
        for i in 0..N {
            out[i] += s * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` through every point of `stops` (which
/// must be monotone in the direction of integration), calling `on_stop` at
/// each one. Returns the state at the last stop.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    stops: &[f64],
    opts: &OdeOptions,
    mut on_stop: S,
) -> Result<([f64; N], OdeStats)>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
    S: FnMut(usize, f64, &[f64; N]),
{
    let mut stats = OdeStats::default();
    let Some(&x_end) = stops.last() else {
        return Ok((y0, stats));
    };
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    f(x, &y, &mut k1);
    stats.evaluations += 1;

    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            let sc = |i: usize| opts.atol + opts.rtol * y[i].abs();
            let d0 = (0..N).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
            let d1 = (0..N).map(|i| (k1[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(opts.h_max)
    .min((x_end - x0).abs().max(1e-300));

    let mut next_stop = 0;
    while next_stop < stops.len() && (stops[next_stop] - x) * dir <= 0.0 {
        on_stop(next_stop, x, &y);
        next_stop += 1;
    }
    let mut k2 = [0.0; N];
    let mut k3 = [0.0; N];
    let mut k4 = [0.0; N];
    let mut k5 = [0.0; N];
    let mut k6 = [0.0; N];
    let mut k7 = [0.0; N];
    let mut last_rejected = false;

    while next_stop < stops.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integration(format!(
                "step budget exhausted at x = {x}"
            )));
        }
        let target = stops[next_stop];
        let remaining = (target - x) * dir;
        let mut hs = h;
        let mut hits = false;
        if hs >= remaining {
            hs = remaining;
            hits = true;
        }
        let hd = hs * dir;

        let y2 = combo(&y, hd, &[(A21, &k1)]);
        f(x + C2 * hd, &y2, &mut k2);
        let y3 = combo(&y, hd, &[(A31, &k1), (A32, &k2)]);
        f(x + C3 * hd, &y3, &mut k3);
        let y4 = combo(&y, hd, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(x + C4 * hd, &y4, &mut k4);
        let y5 = combo(&y, hd, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(x + C5 * hd, &y5, &mut k5);
        let y6 = combo(
            &y,
            hd,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let x_new = if hits { target } else { x + hd };
        f(x_new, &y6, &mut k6);
        let y_new = combo(
            &y,
            hd,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        f(x_new, &y_new, &mut k7);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..N {
            let e =
                hd * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration(format!("non-finite state near x = {x}")));
        }

        if err <= 1.0 {
            stats.accepted += 1;
            x = x_new;
            y = y_new;
            k1 = k7;
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let grow = if last_rejected { grow.min(1.0) } else { grow };
            last_rejected = false;
            // A clipped step says nothing about the natural size; keep h.
            if !hits || hs >= h {
                h = (hs * grow).min(opts.h_max);
            }
            if hits {
                while next_stop < stops.len() && (stops[next_stop] - x) * dir <= 0.0 {
                    on_stop(next_stop, x, &y);
                    next_stop += 1;
                }
            }
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 * x.abs().max(1.0) {
                return Err(Error::Integration(format!(
                    "step size underflow at x = {x}"
                )));
            }
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_accurate() {
        let w = 3.0;
        let rhs = |_x: f64, y: &[f64; 2], d: &mut [f64; 2]| {
            d[0] = -w * y[1];
            d[1] = w * y[0];
        };
        let stops: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let opts = OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            ..Default::default()
        };
        let mut worst: f64 = 0.0;
        integrate(rhs, 0.0, [1.0, 0.0], &stops, &opts, |_, x, y| {
            worst = worst
                .max((y[0] - (w * x).cos()).abs())
                .max((y[1] - (w * x).sin()).abs());
        })
        .unwrap();
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn backward_integration() {
        let rhs = |_x: f64, y: &[f64; 1], d: &mut [f64; 1]| d[0] = y[0];
        let (y, _) = integrate(
            rhs,
            1.0,
            [1.0],
            &[0.5, 0.0],
            &OdeOptions::default(),
            |_, _, _| {},
        )
        .unwrap();
        assert!((y[0] - (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence() {
        let rhs = |x: f64, y: &[f64; 1], d: &mut [f64; 1]| d[0] = x.cos() * y[0];
        let run = |h: f64| {
            let opts = OdeOptions {
                rtol: 1.0,
                atol: 1.0,
                h_init: Some(h),
                h_max: h,
                ..Default::default()
            };
            integrate(rhs, 0.0, [1.0], &[2.0], &opts, |_, _, _| {})
                .unwrap()
                .0[0]
        };
        let exact = 2f64.sin().exp();
        let e1 = (run(0.1) - exact).abs();
        let e2 = (run(0.05) - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 5.0).abs() < 0.4, "order {order}");
    }
}
