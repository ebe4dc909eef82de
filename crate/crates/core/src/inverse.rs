//! Recovery of the horizon radius, the potential and `(M, Q^2)` from
//! high-energy scattering data.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dirac_stationary::{phase_sweep, PhaseSample, StationaryOptions};
use crate::error::{Error, Result};
use crate::geometry::{BlackHoleParams, CoordinateMap};
use crate::modifiers::ExpansionForm;
use crate::packet::WavePacket;
use crate::potential::{cubic_phase_from_horizon, PotentialProfile};
use crate::wave_images::{SpatialQuadrature, TransmissionInterpolant};

/// Least squares by Householder QR after scaling columns to unit norm.
/// Returns the solution and the condition number of the scaled system's `R`.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    if n == 0 || m < n || rhs.len() != m {
        return Err(Error::Singular(format!("{m} equations for {n} unknowns")));
    }
    let scale: Vec<f64> = (0..n)
        .map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::Singular("zero or non-finite column".into()));
    }
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&scale).map(|(v, s)| v / s).collect())
        .collect();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Singular(format!("column {k} is dependent")));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>();
        if vnorm == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }
    let diag: Vec<f64> = (0..n).map(|k| a[k][k].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmin <= 1e-14 * dmax {
        return Err(Error::Singular(format!(
            "rank deficient, |R| ratio {:e}",
            dmin / dmax
        )));
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok((
        x.iter().zip(&scale).map(|(v, s)| v / s).collect(),
        dmax / dmin,
    ))
}

/// Parts of the second-order coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderParts {
    /// `<psi1, (a_l^2 / 2) psi2>` (absent in the corrected form).
    pub potential: C64,
    /// `+-(w^4 / (8 r+^2)) <psi1, psi2>`.
    pub constant: C64,
    /// `-i (w^2 / (2 r+)) <psi1, D_x psi2>`.
    pub derivative: C64,
}

/// `F_out(lambda) ~ c0 + c1/lambda + c2/lambda^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCoefficients {
    pub c0: C64,
    pub c1: C64,
    pub c2: C64,
    pub parts: SecondOrderParts,
    pub weight: f64,
    /// Infinite for the free background.
    pub r_plus: f64,
    pub form: ExpansionForm,
}

/// Spatial window used for `<psi1, a_l^2 psi2>`.
/// Window holding the bulk of a packet: every component's shift padded by a
/// reach that grows as its Fourier support narrows.
fn packet_window(p: &WavePacket) -> (f64, f64) {
    p.components()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            let reach = (300.0 / (c.xi_max - c.xi_min)).max(40.0);
            (lo.min(c.shift - reach), hi.max(c.shift + reach))
        })
}

fn potential_quadrature(psi1: &WavePacket, psi2: &WavePacket) -> Result<Option<SpatialQuadrature>> {
    let (l1, h1) = packet_window(psi1);
    let (l2, h2) = packet_window(psi2);
    let (lo, hi) = (l1.max(l2), h1.min(h2));
    if lo >= hi {
        return Ok(None);
    }
    SpatialQuadrature::panels(lo, hi, 1.0, 8).map(Some)
}

impl ExpansionCoefficients {
    pub fn compute(
        profile: &PotentialProfile,
        psi1: &WavePacket,
        psi2: &WavePacket,
        form: ExpansionForm,
    ) -> Result<Self> {
        let w = profile.weight();
        let inv_rp = profile.inverse_r_plus();
        // A = int a_l^2 = w^2 / r+
        let big_a = w * w * inv_rp;
        let c0 = psi1.inner(psi2);
        let dx = psi1.spectral_inner(psi2, |xi| C64::new(xi, 0.0));
        let c1 = C64::new(0.0, big_a / 2.0) * c0;
        let derivative = C64::new(0.0, -big_a / 2.0) * dx;
        let (potential, constant) = match form {
            ExpansionForm::Corrected => (C64::new(0.0, 0.0), c0 * (-big_a * big_a / 8.0)),
            ExpansionForm::Printed => {
                let quad = if profile.is_free() {
                    None
                } else {
                    potential_quadrature(psi1, psi2)?
                };
                let potential = if let Some(quad) = quad {
                    let mut s = C64::new(0.0, 0.0);
                    for (&x, &wt) in quad.nodes.iter().zip(&quad.weights) {
                        let a = profile.a_l(x)?;
                        s += psi1.scalar_at(x).conj() * psi2.scalar_at(x) * (wt * a * a / 2.0);
                    }
                    s
                } else {
                    C64::new(0.0, 0.0)
                };
                (potential, c0 * (big_a * big_a / 8.0))
            }
        };
        let parts = SecondOrderParts {
            potential,
            constant,
            derivative,
        };
        let r_plus = if inv_rp > 0.0 {
            1.0 / inv_rp
        } else {
            f64::INFINITY
        };
        Ok(Self {
            c0,
            c1,
            c2: potential + constant + derivative,
            parts,
            weight: w,
            r_plus,
            form,
        })
    }

    pub fn evaluate(&self, lambda: f64) -> C64 {
        self.c0 + self.c1 / lambda + self.c2 / (lambda * lambda)
    }
}

/// `c0 + c1/lambda + c2/lambda^2`.
pub fn f_out_expansion(
    profile: &PotentialProfile,
    psi1: &WavePacket,
    psi2: &WavePacket,
    lambda: f64,
    form: ExpansionForm,
) -> Result<C64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(ExpansionCoefficients::compute(profile, psi1, psi2, form)?.evaluate(lambda))
}

/// Odd-power fit `phase(lambda) ~ sum_k coefficients[k] / lambda^{2k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFit {
    pub coefficients: Vec<f64>,
    pub rms_residual: f64,
    pub condition: f64,
    pub lambda_spread: f64,
}

/// Fits forward phases `(lambda, -arg t)`.
pub fn fit_phase(samples: &[(f64, f64)], terms: usize) -> Result<PhaseFit> {
    if terms == 0 || samples.len() < terms.max(3) {
        return Err(Error::IllConditioned(format!(
            "{} samples for {terms} phase terms",
            samples.len()
        )));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) {
        return Err(Error::Domain("phase samples need lambda > 0".into()));
    }
    let spread = hi / lo;
    if spread < 2.0 {
        return Err(Error::IllConditioned(format!(
            "lambda spread {spread:.3} below a factor 2"
        )));
    }
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|&(l, _)| (0..terms).map(|k| l.powi(-(2 * k as i32 + 1))).collect())
        .collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (coefficients, condition) = least_squares(&rows, &rhs)?;
    let rms = (rows
        .iter()
        .zip(&rhs)
        .map(|(r, y)| (r.iter().zip(&coefficients).map(|(a, c)| a * c).sum::<f64>() - y).powi(2))
        .sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    Ok(PhaseFit {
        coefficients,
        rms_residual: rms,
        condition,
        lambda_spread: spread,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonEstimate {
    pub r_plus: f64,
    pub fit: PhaseFit,
}

/// `r+ = w^2 / (2 C)` from a fit `C/lambda + D/lambda^3` of forward phases.
pub fn recover_rplus(samples: &[(f64, f64)], weight: f64) -> Result<HorizonEstimate> {
    let fit = fit_phase(samples, 2)?;
    let c = fit.coefficients[0];
    if !(c > 0.0) {
        return Err(Error::IllConditioned(format!(
            "leading phase coefficient {c} is not positive"
        )));
    }
    Ok(HorizonEstimate {
        r_plus: weight * weight / (2.0 * c),
        fit,
    })
}

/// Forward phases `(lambda, -arg t)` from a phase sweep.
pub fn forward_phases(samples: &[PhaseSample]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s.lambda, s.phase)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub r_plus_est: f64,
    pub mass_est: f64,
    pub charge_sq_est: f64,
    pub abs_charge_est: f64,
    /// `|r+ - (M + sqrt(M^2 - Q^2))|`.
    pub consistency_residual: f64,
    pub fit_residual: f64,
    pub method: String,
    pub warnings: Vec<String>,
}

impl ReconstructionReport {
    fn assemble(
        r_plus: f64,
        mass: f64,
        charge_sq: f64,
        fit_residual: f64,
        method: &str,
        warnings: Vec<String>,
    ) -> Self {
        let back = mass + (mass * mass - charge_sq).max(0.0).sqrt();
        Self {
            r_plus_est: r_plus,
            mass_est: mass,
            charge_sq_est: charge_sq,
            abs_charge_est: charge_sq.max(0.0).sqrt(),
            consistency_residual: (back - r_plus).abs(),
            fit_residual,
            method: method.into(),
            warnings,
        }
    }
}

/// `(M, Q^2)` from the first two phase moments: `r+` from the `1/lambda`
/// coefficient, then `Q^2` solving `D(r+, Q^2) = D_fit` for the `1/lambda^3`
/// coefficient `D = (1/8) int (a_l'^2 + a_l^4)`, which decreases in `Q^2`.
pub fn recover_from_phase_moments(fit: &PhaseFit, weight: f64) -> Result<ReconstructionReport> {
    if fit.coefficients.len() < 2 {
        return Err(Error::IllConditioned(
            "need the 1/lambda^3 coefficient".into(),
        ));
    }
    let (c, d) = (fit.coefficients[0], fit.coefficients[1]);
    if !(c > 0.0) {
        return Err(Error::IllConditioned(format!(
            "leading phase coefficient {c} is not positive"
        )));
    }
    let rp = weight * weight / (2.0 * c);
    let f = |q2: f64| cubic_phase_from_horizon(rp, q2, weight) - d;
    let mut warnings = Vec::new();
    let (mut lo, mut hi) = (0.0, rp * rp * (1.0 - 1e-12));
    let q2 = if f(lo) <= 0.0 {
        warnings.push(format!(
            "cubic coefficient above the uncharged value by {:e}; Q^2 clamped to 0",
            -f(lo)
        ));
        0.0
    } else if f(hi) >= 0.0 {
        warnings.push("cubic coefficient below the extremal value; Q^2 clamped to r+^2".into());
        hi
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * rp * rp {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let mass = (rp * rp + q2) / (2.0 * rp);
    Ok(ReconstructionReport::assemble(
        rp,
        mass,
        q2,
        fit.rms_residual,
        "phase-moments",
        warnings,
    ))
}

/// One reconstructed potential value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    pub x: f64,
    pub a_l_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialRecovery {
    pub samples: Vec<PotentialSample>,
    /// Standard deviation of the probe's position density.
    pub kernel_width: f64,
    pub warnings: Vec<String>,
}

/// Spatial spread of a packet on a window.
pub fn packet_width(packet: &WavePacket, quad: &SpatialQuadrature) -> f64 {
    let dens: Vec<f64> = quad
        .nodes
        .iter()
        .map(|&x| packet.scalar_at(x).norm_sqr())
        .collect();
    let m0: f64 = dens.iter().zip(&quad.weights).map(|(d, w)| d * w).sum();
    let m1: f64 = dens
        .iter()
        .zip(quad.weights.iter().zip(&quad.nodes))
        .map(|(d, (w, x))| d * w * x)
        .sum();
    let m2: f64 = dens
        .iter()
        .zip(quad.weights.iter().zip(&quad.nodes))
        .map(|(d, (w, x))| d * w * x * x)
        .sum();
    let mean = m1 / m0;
    (m2 / m0 - mean * mean).max(0.0).sqrt()
}

/// Reads `a_l^2` from the real part of a second-order form `psi -> Re c2(psi, psi)`
/// evaluated on translates of a probe, after removing the constant
/// `w^4 / (8 r+^2) ||psi||^2`: `a_l^2(y) ~ 2 (Re c2 - const) / ||psi||^2`,
/// smoothed by the probe's density.
pub fn recover_potential_sq<F: FnMut(&WavePacket) -> Result<f64>>(
    mut second_order_form: F,
    probe: &WavePacket,
    centers: &[f64],
    r_plus: f64,
    weight: f64,
) -> Result<PotentialRecovery> {
    if centers.is_empty() {
        return Err(Error::Domain("no probe centres".into()));
    }
    let (lo, hi) = packet_window(probe);
    let width = packet_width(probe, &SpatialQuadrature::panels(lo, hi, 0.5, 8)?);
    let mut warnings = Vec::new();
    let spacing = centers
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    if spacing.is_finite() && width > spacing {
        warnings.push(format!(
            "probe width {width:.3} exceeds sample spacing {spacing:.3}"
        ));
    }
    let norm = probe.norm_sqr();
    let constant = weight.powi(4) / (8.0 * r_plus * r_plus);
    let mut samples = Vec::with_capacity(centers.len());
    for &y in centers {
        let c2 = second_order_form(&probe.translated(y))?;
        samples.push(PotentialSample {
            x: y,
            a_l_sq: 2.0 * (c2 / norm - constant),
        });
    }
    Ok(PotentialRecovery {
        samples,
        kernel_width: width,
        warnings,
    })
}

/// `psi -> Re c2(psi, psi)` of the written-out expansion for a known profile.
pub fn printed_second_order_form(
    profile: &PotentialProfile,
) -> impl FnMut(&WavePacket) -> Result<f64> + '_ {
    move |psi| {
        Ok(
            ExpansionCoefficients::compute(profile, psi, psi, ExpansionForm::Printed)?
                .c2
                .re,
        )
    }
}

/// `psi -> Re c2(psi, psi)` measured from scattering: `F_out(lambda)` from
/// interpolated transmissions, fitted by `c0 + c1/lambda + c2/lambda^2 + c3/lambda^3`.
pub fn scattering_second_order_form(
    interpolants: &[TransmissionInterpolant],
) -> impl FnMut(&WavePacket) -> Result<f64> + '_ {
    move |psi| {
        if interpolants.len() < 3 {
            return Err(Error::IllConditioned("need three energies".into()));
        }
        let c0 = psi.norm_sqr();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for t in interpolants {
            let l = t.lambda;
            rows.push(vec![1.0 / l, 1.0 / (l * l), 1.0 / (l * l * l)]);
            rhs.push(t.f_out(psi, psi)?.re - c0);
        }
        Ok(least_squares(&rows, &rhs)?.0[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassCharge {
    pub mass: f64,
    pub charge_sq: f64,
    pub rms_residual: f64,
}

/// Linear least squares on `r^2 - r^4 a^2 = 2 M r - Q^2` with `a^2 = F / r^2`.
pub fn recover_mass_charge_r(samples: &[(f64, f64)]) -> Result<MassCharge> {
    if samples.len() < 2 {
        return Err(Error::Singular("need at least two samples".into()));
    }
    let r0 = samples[0].0;
    if samples.iter().all(|s| s.0 == r0) {
        return Err(Error::Singular("all radii are equal".into()));
    }
    // Relative noise on a^2 enters the right side as r^4 a^2 times the noise,
    // so each row is divided by that scale.
    let scale = |r: f64, a2: f64| {
        let s = r.powi(4) * a2.abs();
        if s > 0.0 {
            s
        } else {
            r * r
        }
    };
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|&(r, a2)| vec![r / scale(r, a2), 1.0 / scale(r, a2)])
        .collect();
    let rhs: Vec<f64> = samples
        .iter()
        .map(|&(r, a2)| (r * r - r.powi(4) * a2) / scale(r, a2))
        .collect();
    let (x, _) = least_squares(&rows, &rhs)?;
    let rms = (samples
        .iter()
        .map(|&(r, a2)| (r * x[0] + x[1] - (r * r - r.powi(4) * a2)).powi(2))
        .sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    Ok(MassCharge {
        mass: x[0] / 2.0,
        charge_sq: -x[1],
        rms_residual: rms,
    })
}

/// Multiplies each value by `1 + rel * N(0, 1)` with a seeded generator.
pub fn multiplicative_noise(
    samples: &[(f64, f64)],
    rel: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let normal = Normal::new(0.0, rel).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(samples
        .iter()
        .map(|&(x, y)| (x, y * (1.0 + normal.sample(&mut rng))))
        .collect())
}

/// `a^2(x) = F(r(x)) / r(x)^2` for a geometry.
pub fn geometric_potential_sq(mass: f64, charge_sq: f64, x: f64) -> Result<f64> {
    let map = CoordinateMap::new(BlackHoleParams::from_charge_sq(mass, charge_sq)?);
    let s = map.log_gap_from_tortoise(x)?;
    let h = map.horizons();
    let d = s.exp();
    let r = h.r_plus + d;
    Ok(d * (d + h.gap()) / r.powi(4))
}

#[derive(Debug, Clone, PartialEq)]
pub struct XFit {
    pub mass: f64,
    pub charge_sq: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub rms_residual: f64,
    pub condition: f64,
    pub warnings: Vec<String>,
}

/// Levenberg-Marquardt fit of `(M, Q^2)` to `(x, a^2)` samples. Works in
/// `(M, q = Q^2 / M^2)` with `q` projected onto `[0, 1)`, started from the best
/// point of a coarse grid.
pub fn fit_mass_charge_x(samples: &[(f64, f64)]) -> Result<XFit> {
    if samples.len() < 4 {
        return Err(Error::IllConditioned(format!(
            "need >= 4 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(s.1 > 0.0) || !s.0.is_finite()) {
        return Err(Error::Domain("samples need finite x and a^2 > 0".into()));
    }
    const Q_MAX: f64 = 1.0 - 1e-9;
    let mut data = samples.to_vec();
    data.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let y_max = data.iter().map(|s| s.1).fold(0.0, f64::max);
    // a^2 peaks near 1 / (27 M^2) for small charge
    let m_scale = (1.0 / (27.0 * y_max)).sqrt();

    let residuals = |t: &[f64; 2]| -> Option<Vec<f64>> {
        if !(t[0] > 0.0) || !(0.0..=Q_MAX).contains(&t[1]) {
            return None;
        }
        let q2 = t[1] * t[0] * t[0];
        data.iter()
            .map(|&(x, y)| geometric_potential_sq(t[0], q2, x).ok().map(|m| m - y))
            .collect()
    };
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut best: Option<([f64; 2], Vec<f64>)> = None;
    for i in 0..=40 {
        let m = m_scale * 4f64.powf(i as f64 / 20.0 - 1.0);
        for q in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.97] {
            let t = [m, q];
            if let Some(r) = residuals(&t) {
                if best.as_ref().is_none_or(|b| cost(&r) < cost(&b.1)) {
                    best = Some((t, r));
                }
            }
        }
    }
    let Some((mut theta, mut r)) = best else {
        return Err(Error::FitNotConverged { gradient: f64::NAN });
    };

    let mut mu = 1e-3;
    let mut warnings = Vec::new();
    let mut grad_norm = f64::INFINITY;
    let mut condition = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        let c0 = cost(&r);
        if c0 == 0.0 {
            converged = true;
            break;
        }
        // Jacobian by differences, one-sided next to a bound.
        let col = |k: usize, h: f64| -> Option<Vec<f64>> {
            let mut tp = theta;
            tp[k] += h;
            let mut tm = theta;
            tm[k] -= h;
            match (residuals(&tp), residuals(&tm)) {
                (Some(rp), Some(rm)) => Some(
                    rp.iter()
                        .zip(&rm)
                        .map(|(a, b)| (a - b) / (2.0 * h))
                        .collect(),
                ),
                (Some(rp), None) => Some(rp.iter().zip(&r).map(|(a, b)| (a - b) / h).collect()),
                (None, Some(rm)) => Some(r.iter().zip(&rm).map(|(a, b)| (a - b) / h).collect()),
                (None, None) => None,
            }
        };
        let (Some(jm), Some(jq)) = (col(0, 1e-7 * theta[0]), col(1, 1e-7)) else {
            return Err(Error::FitNotConverged {
                gradient: grad_norm,
            });
        };
        let (a11, a12, a22) = (
            jm.iter().map(|v| v * v).sum::<f64>(),
            jm.iter().zip(&jq).map(|(a, b)| a * b).sum::<f64>(),
            jq.iter().map(|v| v * v).sum::<f64>(),
        );
        let g1: f64 = jm.iter().zip(&r).map(|(a, b)| a * b).sum();
        let g2: f64 = jq.iter().zip(&r).map(|(a, b)| a * b).sum();
        // a bound-active q whose gradient pushes outward stays put
        let frozen = (theta[1] == 0.0 && g2 > 0.0) || (theta[1] == Q_MAX && g2 < 0.0);
        grad_norm = if frozen { g1.abs() } else { g1.hypot(g2) };
        // scale-free stationarity: angle between residual and Jacobian range
        let jnorm = if frozen {
            a11.sqrt()
        } else {
            (a11 + a22).sqrt()
        };
        let grad_cos = grad_norm / (jnorm * c0.sqrt()).max(f64::MIN_POSITIVE);
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a12;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        condition = (tr / 2.0 + disc) / (tr / 2.0 - disc).max(f64::MIN_POSITIVE);
        if grad_cos <= 1e-10 {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let (b11, b22) = (a11 * (1.0 + mu), a22 * (1.0 + mu));
            let step = if frozen {
                [-g1 / b11, 0.0]
            } else {
                let d = b11 * b22 - a12 * a12;
                [-(b22 * g1 - a12 * g2) / d, -(b11 * g2 - a12 * g1) / d]
            };
            let trial = [theta[0] + step[0], (theta[1] + step[1]).clamp(0.0, Q_MAX)];
            if let Some(rt) = residuals(&trial) {
                let ct = cost(&rt);
                if ct < c0 {
                    let tiny = (trial[0] - theta[0]).abs() <= 1e-14 * theta[0]
                        && (trial[1] - theta[1]).abs() <= 1e-14;
                    theta = trial;
                    r = rt;
                    mu = (mu / 3.0).max(1e-12);
                    accepted = true;
                    converged = tiny || ct == 0.0;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !accepted {
            // no descent left at working precision
            converged = grad_cos <= 1e-5;
            break;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::FitNotConverged {
            gradient: grad_norm,
        });
    }
    let charge_sq = theta[1] * theta[0] * theta[0];
    if theta[1] == 0.0 {
        warnings.push("fitted Q^2 reached the bound and was clamped to 0".into());
    }
    if condition > 1e10 {
        warnings.push(format!(
            "normal matrix condition {condition:.3e}: (M, Q^2) weakly separated"
        ));
    }
    let rms = (cost(&r) / r.len() as f64).sqrt();
    Ok(XFit {
        mass: theta[0],
        charge_sq,
        iterations,
        gradient_norm: grad_norm,
        rms_residual: rms,
        condition,
        warnings,
    })
}

/// One row of the limit-formula diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub x: f64,
    pub r: f64,
    /// `(x - x^3 a^2) / 2`, the mass limit written in the tortoise coordinate.
    pub mass_x: f64,
    /// `x^4 a^2 - x^2 + 2 M x`.
    pub charge_x: f64,
    /// `(r - r^3 a^2) / 2 = M - Q^2 / (2r)`.
    pub mass_r: f64,
    /// `r^4 a^2 - r^2 + 2 M r = Q^2`.
    pub charge_r: f64,
}

pub fn x_limit_diagnostics(profile: &PotentialProfile, xs: &[f64]) -> Result<Vec<LimitRow>> {
    let map = profile
        .map()
        .ok_or_else(|| Error::Domain("limit diagnostics need a black-hole background".into()))?;
    let m = map.params().mass();
    xs.iter()
        .map(|&x| {
            let a = profile.a_geom(x)?;
            let a2 = a * a;
            let r = profile.radius(x)?;
            Ok(LimitRow {
                x,
                r,
                mass_x: (x - x.powi(3) * a2) / 2.0,
                charge_x: x.powi(4) * a2 - x * x + 2.0 * m * x,
                mass_r: (r - r.powi(3) * a2) / 2.0,
                charge_r: r.powi(4) * a2 - r * r + 2.0 * m * r,
            })
        })
        .collect()
}

/// Result of the scattering-only reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndReport {
    pub phases: Vec<PhaseSample>,
    pub fit: PhaseFit,
    pub report: ReconstructionReport,
}

/// Phase sweep, three-term odd fit, then the phase-moment inversion.
pub fn end_to_end(
    profile: &PotentialProfile,
    lambdas: &[f64],
    opts: &StationaryOptions,
) -> Result<EndToEndReport> {
    let phases = phase_sweep(profile, lambdas, opts)?;
    let fit = fit_phase(&forward_phases(&phases), 3)?;
    let report = recover_from_phase_moments(&fit, profile.weight())?;
    Ok(EndToEndReport {
        phases,
        fit,
        report,
    })
}

/// Literal route through the second-order coefficient: the potential read off
/// a measured `F_out` on probe translates, then the x-fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderRoute {
    pub recovery: PotentialRecovery,
    /// `max - min` of the recovered samples; zero means no spatial information.
    pub spatial_variation: f64,
    pub fit: Option<XFit>,
    pub fit_error: Option<String>,
}

pub fn second_order_route(
    profile: &PotentialProfile,
    r_plus: f64,
    probe: &WavePacket,
    centers: &[f64],
    lambdas: &[f64],
    opts: &StationaryOptions,
) -> Result<SecondOrderRoute> {
    let window = probe.support();
    let interpolants = lambdas
        .iter()
        .map(|&l| TransmissionInterpolant::new(profile, l, window, 16, opts))
        .collect::<Result<Vec<_>>>()?;
    let recovery = recover_potential_sq(
        scattering_second_order_form(&interpolants),
        probe,
        centers,
        r_plus,
        profile.weight(),
    )?;
    let vals: Vec<f64> = recovery.samples.iter().map(|s| s.a_l_sq).collect();
    let spatial_variation = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let w2 = profile.weight().powi(2);
    let data: Vec<(f64, f64)> = recovery
        .samples
        .iter()
        .map(|s| (s.x, s.a_l_sq / w2))
        .collect();
    let (fit, fit_error) = match fit_mass_charge_x(&data) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SecondOrderRoute {
        recovery,
        spatial_variation,
        fit,
        fit_error,
    })
}
