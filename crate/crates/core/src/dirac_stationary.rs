//! Fixed-energy scattering for `H = Gamma^1 D_x + a_l Gamma^2`.
//!
//! The ODE is integrated in gauged variables `u = e^{-i eta x} alpha`,
//! `v = e^{i eta x} beta`, for which `|alpha|^2 - |beta|^2` is conserved.
//! The radial gap `s = ln(r - r+)` rides along as a fifth real unknown so the
//! potential costs one exponential per evaluation. At the right end the
//! Coulomb tail is matched to third-order Riccati branches, normalised by the
//! closed-form tail integrals, so no long-range truncation error remains.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions, OdeStats};
use crate::potential::{PotentialJet, PotentialProfile, Sign};
use crate::spinor::{SpinorValue, I};

/// `(du/dx, dv/dx)` for the stationary equation at energy `xi`.
pub fn stationary_rhs(
    profile: &PotentialProfile,
    xi: f64,
    x: f64,
    psi: SpinorValue,
) -> Result<SpinorValue> {
    let a = profile.a_l(x)?;
    Ok(stationary_rhs_with(a, xi, psi))
}

pub(crate) fn stationary_rhs_with(a: f64, xi: f64, psi: SpinorValue) -> SpinorValue {
    SpinorValue {
        u: -I * (psi.u * xi + psi.v * a),
        v: I * (psi.v * xi + psi.u * a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    pub rtol: f64,
    pub atol: f64,
    /// `|a_l|` at the left end of the domain.
    pub left_cutoff: f64,
    /// Smallest right end of the domain.
    pub min_right: f64,
    /// Bound on `sup |a_l| / (2 eta)` at the right end, which controls the
    /// truncation of the Riccati matching.
    pub right_smallness: f64,
    pub unitarity_tol: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            left_cutoff: 1e-15,
            min_right: 200.0,
            right_smallness: 2e-4,
            unitarity_tol: 1e-6,
        }
    }
}

impl StationaryOptions {
    pub fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringEntry {
    pub xi: f64,
    /// Amplitude reaching `+inf` for unit amplitude leaving the horizon.
    pub t: C64,
    /// Amplitude sent back into the horizon.
    pub refl: C64,
    pub unitarity_residual: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub stats: OdeStats,
    pub warnings: Vec<String>,
}

impl ScatteringEntry {
    /// Half-width of the integration domain.
    pub fn half_width(&self) -> f64 {
        self.x_left.abs().max(self.x_right.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub left: f64,
    pub right: f64,
}

/// Domain for energy `eta`: the left end where `|a_l|` is below the cutoff,
/// the right end where the Riccati matching is accurate.
pub fn domain_for(
    profile: &PotentialProfile,
    eta: f64,
    opts: &StationaryOptions,
) -> Result<Domain> {
    let Some(map) = profile.map() else {
        return Ok(Domain {
            left: -1.0,
            right: 1.0,
        });
    };
    let h = map.horizons();
    let w = profile.weight();
    // a_l ~ w sqrt(delta * gap) / r+^2 near the horizon.
    let cutoff = opts.left_cutoff * profile.left_decay_rate().min(1.0);
    let delta = (cutoff * h.r_plus * h.r_plus / w).powi(2) / h.gap();
    let left = map.tortoise_from_log_gap(delta.ln());
    let right = opts
        .min_right
        .max(2.0 * w / (2.0 * eta.abs() * opts.right_smallness));
    Ok(Domain { left, right })
}

fn as_state(alpha: C64, beta: C64, s: f64) -> [f64; 5] {
    [alpha.re, alpha.im, beta.re, beta.im, s]
}

fn from_state(y: &[f64; 5]) -> (C64, C64) {
    (C64::new(y[0], y[1]), C64::new(y[2], y[3]))
}

/// Gauged values at one point, with `a_l` there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugedSample {
    pub x: f64,
    pub alpha: C64,
    pub beta: C64,
    pub log_gap: f64,
}

/// Integrates the gauged system from `x0` through `stops`.
pub fn integrate_gauged<S: FnMut(usize, GaugedSample)>(
    profile: &PotentialProfile,
    eta: f64,
    x0: f64,
    start: (C64, C64),
    stops: &[f64],
    opts: &OdeOptions,
    mut on_stop: S,
) -> Result<((C64, C64), OdeStats)> {
    if profile.is_free() {
        for (k, &x) in stops.iter().enumerate() {
            on_stop(
                k,
                GaugedSample {
                    x,
                    alpha: start.0,
                    beta: start.1,
                    log_gap: 0.0,
                },
            );
        }
        return Ok((start, OdeStats::default()));
    }
    let s0 = profile.log_gap(x0)?;
    let rhs = |x: f64, y: &[f64; 5], d: &mut [f64; 5]| {
        let a = profile.a_l_from_log_gap(y[4]);
        let (sn, cs) = (2.0 * eta * x).sin_cos();
        // alpha' = -i a e^{2i eta x} beta, beta' = i a e^{-2i eta x} alpha
        let (br, bi) = (y[2], y[3]);
        let (ar, ai) = (y[0], y[1]);
        let pr = cs * br - sn * bi;
        let pi = sn * br + cs * bi;
        d[0] = a * pi;
        d[1] = -a * pr;
        let qr = cs * ar + sn * ai;
        let qi = cs * ai - sn * ar;
        d[2] = -a * qi;
        d[3] = a * qr;
        d[4] = profile.log_gap_rate(y[4]);
    };
    let (y, stats) = integrate(
        rhs,
        x0,
        as_state(start.0, start.1, s0),
        stops,
        opts,
        |k, x, y| {
            let (alpha, beta) = from_state(y);
            on_stop(
                k,
                GaugedSample {
                    x,
                    alpha,
                    beta,
                    log_gap: y[4],
                },
            );
        },
    )?;
    Ok((from_state(&y), stats))
}

/// Third-order Riccati ratio `e^{-2i eta x} alpha / beta` on the outgoing
/// branch (`sign = Plus`) or `e^{2i eta x} beta / alpha` on the incoming one.
fn riccati_ratio(j: &PotentialJet, eta: f64, sign: Sign) -> C64 {
    let s = sign.as_f64();
    C64::new(
        -j.a / (2.0 * eta) + (j.d2 - j.a.powi(3)) / (8.0 * eta.powi(3)),
        -s * j.d1 / (4.0 * eta * eta),
    )
}

/// Gauged data at `x` of the purely outgoing solution with `beta(+inf) = 1`.
pub fn outgoing_branch(profile: &PotentialProfile, eta: f64, x: f64) -> Result<(C64, C64)> {
    branch(profile, eta, x, Sign::Plus)
}

/// Gauged data at `x` of the purely incoming solution with `alpha(+inf) = 1`.
pub fn incoming_branch(profile: &PotentialProfile, eta: f64, x: f64) -> Result<(C64, C64)> {
    branch(profile, eta, x, Sign::Minus)
}

fn branch(profile: &PotentialProfile, eta: f64, x: f64, sign: Sign) -> Result<(C64, C64)> {
    if profile.is_free() {
        return Ok(match sign {
            Sign::Plus => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
            Sign::Minus => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        });
    }
    let j = profile.jet(x)?;
    let ratio = riccati_ratio(&j, eta, sign);
    let tail_phase = profile.eikonal_primitive(x, Sign::Plus)?;
    let moments = profile.slope_integral(Some(x))? + profile.quartic_integral(Some(x))?;
    let s = sign.as_f64();
    // log of (amplitude at +inf) / (amplitude at x) along the branch
    let log_gain = C64::new(
        -j.a * j.a / (8.0 * eta * eta),
        -s * tail_phase / (2.0 * eta) - s * (j.a * j.d1 + moments) / (8.0 * eta.powi(3)),
    );
    let amp = (-log_gain).exp();
    let osc = C64::from_polar(1.0, 2.0 * eta * x);
    Ok(match sign {
        Sign::Plus => (ratio * osc * amp, amp),
        Sign::Minus => (amp, ratio * osc.conj() * amp),
    })
}

/// Splits gauged data at `x` into `(c_out, c_in)` on the two normalised branches.
pub fn decompose(
    profile: &PotentialProfile,
    eta: f64,
    x: f64,
    alpha: C64,
    beta: C64,
) -> Result<(C64, C64)> {
    let (oa, ob) = outgoing_branch(profile, eta, x)?;
    let (ia, ib) = incoming_branch(profile, eta, x)?;
    let det = oa * ib - ia * ob;
    let c_out = (alpha * ib - ia * beta) / det;
    let c_in = (oa * beta - alpha * ob) / det;
    Ok((c_out, c_in))
}

/// Transmission and reflection for a wave leaving the horizon at energy `xi`.
pub fn scattering_matrix(
    profile: &PotentialProfile,
    xi: f64,
    opts: &StationaryOptions,
) -> Result<ScatteringEntry> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::Domain(format!(
            "energy must be finite and nonzero, got {xi}"
        )));
    }
    let dom = domain_for(profile, xi, opts)?;
    let start = outgoing_branch(profile, xi, dom.right)?;
    let ((alpha, beta), stats) = integrate_gauged(
        profile,
        xi,
        dom.right,
        start,
        &[dom.left],
        &opts.ode(),
        |_, _| {},
    )?;
    let t = beta.inv();
    let refl = alpha / beta;
    let unitarity_residual = (t.norm_sqr() + refl.norm_sqr() - 1.0).abs();
    let mut warnings = Vec::new();
    if !profile.is_free() {
        let a_left = profile.a_l(dom.left)?.abs();
        if a_left > 1e-10 {
            warnings.push(format!("|a_l| = {a_left:e} at left end x = {}", dom.left));
        }
    }
    if unitarity_residual > opts.unitarity_tol {
        warnings.push(format!(
            "unitarity residual {unitarity_residual:e} above tolerance"
        ));
    }
    Ok(ScatteringEntry {
        xi,
        t,
        refl,
        unitarity_residual,
        x_left: dom.left,
        x_right: dom.right,
        stats,
        warnings,
    })
}

/// Transmission and reflection for a wave sent in from `+inf` at energy `xi`.
pub fn scattering_matrix_from_right(
    profile: &PotentialProfile,
    xi: f64,
    opts: &StationaryOptions,
) -> Result<ScatteringEntry> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::Domain(format!(
            "energy must be finite and nonzero, got {xi}"
        )));
    }
    let dom = domain_for(profile, xi, opts)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let ((alpha, beta), stats) = integrate_gauged(
        profile,
        xi,
        dom.left,
        (one, zero),
        &[dom.right],
        &opts.ode(),
        |_, _| {},
    )?;
    let (c_out, c_in) = decompose(profile, xi, dom.right, alpha, beta)?;
    let t = c_in.inv();
    let refl = c_out / c_in;
    let unitarity_residual = (t.norm_sqr() + refl.norm_sqr() - 1.0).abs();
    Ok(ScatteringEntry {
        xi,
        t,
        refl,
        unitarity_residual,
        x_left: dom.left,
        x_right: dom.right,
        stats,
        warnings: Vec::new(),
    })
}

/// One row of a high-energy phase sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub lambda: f64,
    /// Unwrapped `arg t`.
    pub arg_t: f64,
    pub lambda_arg_t: f64,
    /// Forward phase `-arg t`, the phase of the out-channel symbol that enters
    /// the `F_out` quadratic form; tends to `+w^2 / (2 r+) / lambda`.
    pub phase: f64,
    pub lambda_phase: f64,
    pub abs_refl: f64,
    pub unitarity_residual: f64,
}

/// `arg t(lambda)` on a grid, unwrapped continuously from the largest lambda.
pub fn phase_sweep(
    profile: &PotentialProfile,
    lambdas: &[f64],
    opts: &StationaryOptions,
) -> Result<Vec<PhaseSample>> {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&i, &j| {
        lambdas[j]
            .partial_cmp(&lambdas[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = vec![None; lambdas.len()];
    let mut prev: Option<f64> = None;
    for &k in &order {
        let lambda = lambdas[k];
        let e = scattering_matrix(profile, lambda, opts)?;
        let mut arg = e.t.arg();
        if let Some(p) = prev {
            let tau = 2.0 * std::f64::consts::PI;
            arg += tau * ((p - arg) / tau).round();
        }
        prev = Some(arg);
        out[k] = Some(PhaseSample {
            lambda,
            arg_t: arg,
            lambda_arg_t: lambda * arg,
            phase: -arg,
            lambda_phase: -lambda * arg,
            abs_refl: e.refl.norm(),
            unitarity_residual: e.unitarity_residual,
        });
    }
    Ok(out
        .into_iter()
        .map(|s| s.expect("every lambda visited"))
        .collect())
}
