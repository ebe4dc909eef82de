//! High-energy modifiers: eikonal phase, matrix amplitude with its
//! correcting terms, the defect symbol, and quadrature application.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::packet::{Channel, WavePacket};
use crate::potential::{PotentialJet, PotentialProfile, Sign};
use crate::spinor::{gamma1, gamma2, proj_out, Mat2, SpinorValue, I, ZERO};

/// Threshold `R = 2 sup|a_l| + 1`; for `|xi_eff| >= R` one has `kappa^2 <= 1/2`.
/// Without a potential every frequency is admissible.
pub fn threshold(profile: &PotentialProfile) -> f64 {
    if profile.is_free() {
        return 0.0;
    }
    2.0 * profile.sup_abs_a_l() + 1.0
}

fn check_frequency(profile: &PotentialProfile, xi_eff: f64) -> Result<()> {
    let r = threshold(profile);
    if !(xi_eff.abs() >= r) || xi_eff == 0.0 {
        return Err(Error::Domain(format!(
            "|xi + lambda| = {} below threshold {r}",
            xi_eff.abs()
        )));
    }
    Ok(())
}

/// `phi(x, xi, lambda) = x xi + I(x) / (2 (xi + lambda))`.
pub fn eikonal_phase(
    profile: &PotentialProfile,
    x: f64,
    xi: f64,
    lambda: f64,
    sign: Sign,
) -> Result<f64> {
    let eta = xi + lambda;
    check_frequency(profile, eta)?;
    Ok(x * xi + profile.eikonal_primitive(x, sign)? / (2.0 * eta))
}

/// Both sides of `(d_x phi + lambda)^2 + a_l^2 - eta^2 = a_l^4 / (4 eta^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EikonalResidual {
    pub lhs: f64,
    pub rhs: f64,
    /// Size of the largest term cancelled on the left.
    pub scale: f64,
}

impl EikonalResidual {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.scale
    }
}

pub fn eikonal_residual(
    profile: &PotentialProfile,
    x: f64,
    xi: f64,
    lambda: f64,
) -> Result<EikonalResidual> {
    let eta = xi + lambda;
    check_frequency(profile, eta)?;
    let a = profile.a_l(x)?;
    // d_x I = -a_l^2 for both primitives
    let gradient = eta + (-a * a) / (2.0 * eta);
    let lhs = gradient * gradient + a * a - eta * eta;
    let rhs = a.powi(4) / (4.0 * eta * eta);
    Ok(EikonalResidual {
        lhs,
        rhs,
        scale: eta * eta + a * a,
    })
}

/// Residual of the first-order transport equation `2 eta d_x(phi - x xi) + a_l^2`.
pub fn transport_residual(
    profile: &PotentialProfile,
    x: f64,
    xi: f64,
    lambda: f64,
    sign: Sign,
) -> Result<f64> {
    let eta = xi + lambda;
    check_frequency(profile, eta)?;
    let h = 1e-4 * (1.0 + x.abs());
    let f = |y: f64| profile.eikonal_primitive(y, sign).map(|v| v / (2.0 * eta));
    // fourth-order central difference of the correction
    let d = (8.0 * (f(x + h)? - f(x - h)?) - (f(x + 2.0 * h)? - f(x - 2.0 * h)?)) / (12.0 * h);
    let a = profile.a_l(x)?;
    Ok(2.0 * eta * d + a * a)
}

fn kappa_sq(a: f64, eta: f64) -> f64 {
    (a * a + a.powi(4) / (4.0 * eta * eta)) / (4.0 * eta * eta)
}

fn k_matrix(a: f64, eta: f64) -> Mat2 {
    (gamma1().scale_re(-a * a / (2.0 * eta)) + gamma2().scale_re(a)).scale_re(1.0 / (2.0 * eta))
}

/// `K = (1/(2 xi_eff)) (-(a^2/(2 xi_eff)) Gamma^1 + a Gamma^2)`.
pub fn symbol_k(profile: &PotentialProfile, x: f64, xi_eff: f64) -> Result<Mat2> {
    check_frequency(profile, xi_eff)?;
    Ok(k_matrix(profile.a_l(x)?, xi_eff))
}

/// `kappa^2` with `K^2 = kappa^2 Id`.
pub fn symbol_kappa_sq(profile: &PotentialProfile, x: f64, xi_eff: f64) -> Result<f64> {
    Ok(kappa_sq(profile.a_l(x)?, xi_eff))
}

fn p_matrix(a: f64, eta: f64) -> Result<Mat2> {
    let det = 1.0 - kappa_sq(a, eta);
    if det < 1e-6 {
        return Err(Error::NearSingular(det));
    }
    Ok(((Mat2::identity() + k_matrix(a, eta)) * proj_out()).scale_re(1.0 / det))
}

/// `p = (1 - K)^{-1} P_out = (1 + K) P_out / (1 - kappa^2)`.
pub fn amplitude_p(profile: &PotentialProfile, x: f64, xi_eff: f64) -> Result<Mat2> {
    p_matrix(profile.a_l(x)?, xi_eff)
}

fn b_matrix(a: f64, eta: f64) -> Mat2 {
    gamma1().scale_re(eta - a * a / (2.0 * eta)) + gamma2().scale_re(a)
        - Mat2::identity().scale_re(eta)
}

/// `B = Gamma^1 (d_x phi + lambda) + a Gamma^2 - xi_eff`.
pub fn symbol_b(profile: &PotentialProfile, x: f64, xi_eff: f64) -> Result<Mat2> {
    Ok(b_matrix(profile.a_l(x)?, xi_eff))
}

/// `(1/(2 xi_eff)) (1+K)^{-1} r (1-K)^{-1} P_out` with the scalar eikonal
/// residual `r = a^4 / (4 xi_eff^2)`; equals `B p`.
pub fn defect_q(profile: &PotentialProfile, x: f64, xi_eff: f64) -> Result<Mat2> {
    let a = profile.a_l(x)?;
    let eta = xi_eff;
    let det = 1.0 - kappa_sq(a, eta);
    let k = k_matrix(a, eta);
    let plus_inv = (Mat2::identity() - k).scale_re(1.0 / det);
    let minus_inv = (Mat2::identity() + k).scale_re(1.0 / det);
    let r = a.powi(4) / (4.0 * eta * eta);
    Ok((plus_inv * minus_inv * proj_out()).scale_re(r / (2.0 * eta)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionTerms {
    pub k1: Mat2,
    pub l1: f64,
    pub k2: Mat2,
}

/// `k1 = i a'/4 Gamma^2`, `l1 = a^2/8`, `k2 = (-i xi a'/2 - a''/8) Gamma^2`.
pub fn correction_terms(profile: &PotentialProfile, x: f64, xi: f64) -> Result<CorrectionTerms> {
    let j = profile.jet(x)?;
    Ok(corrections_from(&j, xi))
}

fn corrections_from(j: &PotentialJet, xi: f64) -> CorrectionTerms {
    CorrectionTerms {
        k1: gamma2().scale(I * (j.d1 / 4.0)),
        l1: j.a * j.a / 8.0,
        k2: gamma2().scale(C64::new(-j.d2 / 8.0, -xi * j.d1 / 2.0)),
    }
}

/// Smooth cutoff equal to one on `[lo, hi]` and zero outside `[lo - margin, hi + margin]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub lo: f64,
    pub hi: f64,
    pub margin: f64,
}

fn smooth_step(t: f64) -> f64 {
    let h = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let (p, q) = (h(t), h(1.0 - t));
    p / (p + q)
}

impl Cutoff {
    pub fn around(packet: &WavePacket, margin: f64) -> Self {
        let (lo, hi) = packet.support();
        Self { lo, hi, margin }
    }

    pub fn value(&self, xi: f64) -> f64 {
        if xi >= self.lo && xi <= self.hi {
            return 1.0;
        }
        let m = self.margin;
        smooth_step((xi - self.lo + m) / m) * smooth_step((self.hi + m - xi) / m)
    }

    pub fn covers(&self, packet: &WavePacket) -> bool {
        let (lo, hi) = packet.support();
        lo >= self.lo && hi <= self.hi
    }
}

/// `J(lambda)` data: profile, direction, energy shift and frequency cutoff.
#[derive(Debug, Clone)]
pub struct FioModifier {
    pub profile: PotentialProfile,
    pub sign: Sign,
    pub lambda: f64,
    pub cutoff: Cutoff,
    pub threshold: f64,
    /// Whether the `k1, l1, k2` correcting terms are included.
    pub corrections: bool,
}

impl FioModifier {
    pub fn new(profile: PotentialProfile, sign: Sign, lambda: f64, cutoff: Cutoff) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        let threshold = threshold(&profile);
        Ok(Self {
            profile,
            sign,
            lambda,
            cutoff,
            threshold,
            corrections: true,
        })
    }

    /// Same modifier with the correcting terms removed.
    pub fn without_corrections(mut self) -> Self {
        self.corrections = false;
        self
    }

    fn eta(&self, xi: f64) -> Result<f64> {
        let eta = xi + self.lambda;
        if !(eta.abs() >= self.threshold) || eta == 0.0 {
            return Err(Error::Domain(format!(
                "|xi + lambda| = {} below threshold {}",
                eta.abs(),
                self.threshold
            )));
        }
        Ok(eta)
    }

    fn corrected(&self) -> bool {
        self.corrections && self.lambda > 0.0
    }
}

/// Forward-mode dual number over complex values.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: C64,
    d: C64,
}

impl Dual {
    fn real(v: f64, d: f64) -> Self {
        Self {
            v: v.into(),
            d: d.into(),
        }
    }
    fn constant(v: C64) -> Self {
        Self { v, d: ZERO }
    }
    fn scale(self, s: C64) -> Self {
        Self {
            v: self.v * s,
            d: self.d * s,
        }
    }
    fn recip(self) -> Self {
        let inv = self.v.inv();
        Self {
            v: inv,
            d: -self.d * inv * inv,
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
}

/// Second column of `P` and of `d_x P` (the first column vanishes).
fn amplitude_column(
    j: &PotentialJet,
    xi: f64,
    eta: f64,
    lambda: f64,
    corrected: bool,
) -> ([Dual; 2], f64) {
    let a = Dual::real(j.a, j.d1);
    let a1 = Dual::real(j.d1, j.d2);
    let a2 = Dual::real(j.d2, j.d3);
    let c = |z: f64| Dual::constant(z.into());
    let a_sq = a * a;
    let kappa = (a_sq + a_sq * a_sq * c(1.0 / (4.0 * eta * eta))) * c(1.0 / (4.0 * eta * eta));
    let det = c(1.0) - kappa;
    let inv = det.recip();
    let mut p01 = a * c(-1.0 / (2.0 * eta)) * inv;
    let mut p11 = (c(1.0) - a_sq * c(1.0 / (4.0 * eta * eta))) * inv;
    if corrected {
        let l2 = 1.0 / (lambda * lambda);
        let l3 = l2 / lambda;
        let scalar = c(1.0) + a_sq * c(l2 / 8.0);
        p01 = p01 * scalar
            + a1.scale(C64::new(0.0, -l2 / 4.0))
            + a1.scale(C64::new(0.0, xi * l3 / 2.0))
            + a2.scale((l3 / 8.0).into());
        p11 = p11 * scalar;
    }
    ([p01, p11], det.v.re)
}

fn column_matrix(u: C64, v: C64) -> Mat2 {
    Mat2::new(ZERO, u, ZERO, v)
}

/// Full amplitude `P(x, xi, lambda)`, correction terms written as `Gamma^2 P_out`.
pub fn full_amplitude(modifier: &FioModifier, x: f64, xi: f64) -> Result<Mat2> {
    let j = modifier.profile.jet(x)?;
    full_amplitude_from(modifier, &j, xi)
}

fn full_amplitude_from(modifier: &FioModifier, j: &PotentialJet, xi: f64) -> Result<Mat2> {
    let eta = modifier.eta(xi)?;
    let g = modifier.cutoff.value(xi);
    if g == 0.0 {
        return Ok(Mat2::zero());
    }
    let p = p_matrix(j.a, eta)?;
    if !modifier.corrected() {
        return Ok(p.scale_re(g));
    }
    let lambda = modifier.lambda;
    let l2 = 1.0 / (lambda * lambda);
    let gp = gamma2() * proj_out();
    let second = gp.scale(I * (j.d1 / 4.0)) + p.scale_re(j.a * j.a / 8.0);
    let third = gp.scale(C64::new(-j.d2 / 8.0, -xi * j.d1 / 2.0));
    Ok((p + second.scale_re(l2) + third.scale_re(l2 / lambda)).scale_re(g))
}

/// Same amplitude with the correction terms written as `P_in k`, i.e. with
/// `P_in Gamma^2` on the left.
pub fn full_amplitude_in_left(modifier: &FioModifier, x: f64, xi: f64) -> Result<Mat2> {
    let j = modifier.profile.jet(x)?;
    let eta = modifier.eta(xi)?;
    let g = modifier.cutoff.value(xi);
    let p = p_matrix(j.a, eta)?;
    if !modifier.corrected() {
        return Ok(p.scale_re(g));
    }
    let t = corrections_from(&j, xi);
    let lambda = modifier.lambda;
    let pin = crate::spinor::proj_in();
    let second = pin * t.k1 + p.scale_re(t.l1);
    let third = pin * t.k2;
    Ok(
        (p + second.scale_re(1.0 / (lambda * lambda)) + third.scale_re(1.0 / lambda.powi(3)))
            .scale_re(g),
    )
}

/// `c = B(x, xi + lambda) P - i Gamma^1 d_x P`.
pub fn defect_symbol(modifier: &FioModifier, x: f64, xi: f64) -> Result<Mat2> {
    let j = modifier.profile.jet(x)?;
    let eta = modifier.eta(xi)?;
    let g = modifier.cutoff.value(xi);
    let ([p01, p11], det) = amplitude_column(&j, xi, eta, modifier.lambda, modifier.corrected());
    if det < 1e-6 {
        return Err(Error::NearSingular(det));
    }
    let value = column_matrix(p01.v, p11.v);
    let slope = column_matrix(p01.d, p11.d);
    let b = b_matrix(j.a, eta);
    Ok((b * value - gamma1() * slope.scale(I)).scale_re(g))
}

/// Which second-order scalar term to use in the symbol expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionForm {
    /// `a^2/8`, obtained by expanding the amplitude directly.
    Corrected,
    /// `a^2/2`, as written in the shorthand for the second-order operator.
    Printed,
}

/// `1 + (iI/2 + a/2 Gamma^2)/lambda + R(xi)/lambda^2` with `D_x` replaced by `xi`.
pub fn symbol_expansion(
    profile: &PotentialProfile,
    x: f64,
    xi: f64,
    lambda: f64,
    sign: Sign,
    form: ExpansionForm,
) -> Result<Mat2> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let j = profile.jet(x)?;
    let big_i = profile.eikonal_primitive(x, sign)?;
    let (a, a1) = (j.a, j.d1);
    let a_sq_coeff = match form {
        ExpansionForm::Corrected => 0.125,
        ExpansionForm::Printed => 0.5,
    };
    let first = Mat2::identity().scale(I * (big_i / 2.0)) + gamma2().scale_re(a / 2.0);
    let scalar = C64::new(-big_i * big_i / 8.0 + a_sq_coeff * a * a, -xi * big_i / 2.0);
    let off = C64::new(-xi * a / 2.0, a * big_i / 4.0 + a1 / 4.0);
    let second = Mat2::identity().scale(scalar) + gamma2().scale(off);
    Ok(Mat2::identity() + first.scale_re(1.0 / lambda) + second.scale_re(1.0 / (lambda * lambda)))
}

/// Exact symbol `j = e^{i I / (2 (xi + lambda))} P(x, xi, lambda)` with `g = 1`.
pub fn exact_symbol(
    profile: &PotentialProfile,
    x: f64,
    xi: f64,
    lambda: f64,
    sign: Sign,
) -> Result<Mat2> {
    let eta = xi + lambda;
    let cutoff = Cutoff {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        margin: 1.0,
    };
    let m = FioModifier::new(profile.clone(), sign, lambda, cutoff)?;
    let amp = full_amplitude(&m, x, xi)?;
    let phase = profile.eikonal_primitive(x, sign)? / (2.0 * eta);
    Ok(amp.scale(C64::from_polar(1.0, phase)))
}

/// Spinor values of `J psi` on a set of points with a quadrature error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FioImage {
    pub xs: Vec<f64>,
    pub values: Vec<SpinorValue>,
    /// Largest pointwise change between `n` and `2n` trapezoid nodes.
    pub quadrature_error: f64,
    pub nodes: usize,
}

pub const FIO_QUADRATURE_TOL: f64 = 1e-9;

/// `(2 pi)^{-1/2} int e^{i phi(x, xi, lambda)} P(x, xi, lambda) psi^(xi) dxi` at
/// each point, by the trapezoid rule over the packet's Fourier support.
pub fn apply_fio(modifier: &FioModifier, packet: &WavePacket, xs: &[f64]) -> Result<FioImage> {
    apply_fio_with(modifier, packet, xs, 256)
}

pub fn apply_fio_with(
    modifier: &FioModifier,
    packet: &WavePacket,
    xs: &[f64],
    nodes: usize,
) -> Result<FioImage> {
    if packet.channel() != Channel::Out {
        return Err(Error::Domain("modifiers act on out-channel packets".into()));
    }
    if !modifier.cutoff.covers(packet) {
        return Err(Error::Domain(
            "cutoff is not identically one on the packet support".into(),
        ));
    }
    let (lo, hi) = packet.support();
    let n = nodes.max(8);
    let fine = 2 * n;
    let h = (hi - lo) / fine as f64;
    let xis: Vec<f64> = (1..fine).map(|k| lo + k as f64 * h).collect();
    let profile_values: Vec<C64> = xis.iter().map(|&xi| packet.profile(xi)).collect();
    let etas = xis
        .iter()
        .map(|&xi| modifier.eta(xi))
        .collect::<Result<Vec<f64>>>()?;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut values = Vec::with_capacity(xs.len());
    let mut err: f64 = 0.0;
    for &x in xs {
        let j = if modifier.profile.is_free() {
            PotentialJet::default()
        } else {
            modifier.profile.jet(x)?
        };
        let big_i = modifier.profile.eikonal_primitive(x, modifier.sign)?;
        let (mut coarse, mut full) = (SpinorValue::default(), SpinorValue::default());
        for (k, &xi) in xis.iter().enumerate() {
            let eta = etas[k];
            let ([p01, p11], det) =
                amplitude_column(&j, xi, eta, modifier.lambda, modifier.corrected());
            if det < 1e-6 {
                return Err(Error::NearSingular(det));
            }
            let w = profile_values[k] * C64::from_polar(h * norm, x * xi + big_i / (2.0 * eta));
            let term = SpinorValue::new(p01.v * w, p11.v * w);
            full = full + term;
            if k % 2 == 1 {
                coarse = coarse + term;
            }
        }
        let coarse = coarse.scale(C64::new(2.0, 0.0));
        err = err.max((full - coarse).norm_sqr().sqrt());
        values.push(full);
    }
    if err > FIO_QUADRATURE_TOL {
        return Err(Error::Quadrature { estimate: err });
    }
    Ok(FioImage {
        xs: xs.to_vec(),
        values,
        quadrature_error: err,
        nodes: fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BlackHoleParams, CoordinateMap};
    use crate::potential::AngularMode;
    use crate::spinor::proj_in;

    fn profile(m: f64, q: f64, l: f64) -> PotentialProfile {
        PotentialProfile::new(
            CoordinateMap::new(BlackHoleParams::new(m, q).unwrap()),
            AngularMode::from_l(l).unwrap(),
        )
    }

    fn schwarzschild() -> PotentialProfile {
        profile(1.0, 0.0, 0.5)
    }

    fn modifier(lambda: f64) -> FioModifier {
        let cutoff = Cutoff {
            lo: 0.25,
            hi: 1.0,
            margin: 0.25,
        };
        FioModifier::new(schwarzschild(), Sign::Plus, lambda, cutoff).unwrap()
    }

    #[test]
    fn phase_tail_and_transport() {
        let p = schwarzschild();
        let far = eikonal_phase(&p, 1e6, 0.5, 20.0, Sign::Plus).unwrap() - 1e6 * 0.5;
        assert!(far.abs() < 1e-7);
        let near = eikonal_phase(&p, -1e3, 0.5, 20.0, Sign::Minus).unwrap() + 1e3 * 0.5;
        assert!(near.abs() < 1e-12);
        for x in [-5.0, 0.0, 3.0, 20.0] {
            for s in [Sign::Plus, Sign::Minus] {
                assert!(transport_residual(&p, x, 0.5, 5.0, s).unwrap().abs() < 1e-10);
            }
        }
        assert!(eikonal_phase(&p, 0.0, 0.1, 0.0, Sign::Plus).is_err());
    }

    #[test]
    fn eikonal_identity() {
        let p = profile(1.0, 0.5, 1.5);
        for (x, xi) in [(0.0, 3.0), (2.5, 10.0), (-7.0, 50.0)] {
            let r = eikonal_residual(&p, x, xi, 0.0).unwrap();
            assert!(r.relative_error() < 1e-14);
        }
    }

    #[test]
    fn k_algebra() {
        let p = schwarzschild();
        let k = symbol_k(&p, 0.0, 3.0).unwrap();
        let k2 = symbol_kappa_sq(&p, 0.0, 3.0).unwrap();
        assert!((k * k - Mat2::identity().scale_re(k2)).norm() < 1e-14);
        assert_eq!(k.trace(), ZERO);
        assert!(symbol_k(&p, 1e5, 3.0).unwrap().norm() < 1e-5);
        assert!(symbol_k(&p, 0.0, 0.5).is_err());
    }

    #[test]
    fn amplitude_inverse() {
        let p = schwarzschild();
        for (x, xi) in [(0.0, 3.0), (1.5, 2.0), (-3.0, 7.0)] {
            let k = symbol_k(&p, x, xi).unwrap();
            let amp = amplitude_p(&p, x, xi).unwrap();
            assert!(((Mat2::identity() - k) * amp - proj_out()).norm() < 1e-13);
            let kap = symbol_kappa_sq(&p, x, xi).unwrap();
            let inv = (Mat2::identity() + k).scale_re(1.0 / (1.0 - kap));
            assert!(((Mat2::identity() - k) * inv - Mat2::identity()).norm() < 1e-13);
            let q = symbol_b(&p, x, xi).unwrap() * amp;
            assert!((q - defect_q(&p, x, xi).unwrap()).norm() < 1e-12);
        }
        assert!((amplitude_p(&p, 1e7, 3.0).unwrap() - proj_out()).norm() < 1e-7);
        assert!(matches!(p_matrix(2.0, 1.0), Err(Error::NearSingular(_))));
    }

    #[test]
    fn correcting_terms() {
        let p = schwarzschild();
        let t = correction_terms(&p, 1.0, 0.5).unwrap();
        assert_eq!(t.k1.0[0][0], ZERO);
        assert_eq!(t.k1.0[1][1], ZERO);
        let t2 = correction_terms(&p, 1.0, 1.0).unwrap();
        let a1 = p.jet(1.0).unwrap().d1;
        let diff = t2.k2 - t.k2 - gamma2().scale(C64::new(0.0, -0.5 * a1 / 2.0));
        assert!(diff.norm() < 1e-15);
        let far = correction_terms(&p, 1e6, 0.5).unwrap();
        assert!(far.k1.norm() < 1e-10 && far.l1 < 1e-10 && far.k2.norm() < 1e-10);
    }

    #[test]
    fn printed_forms_agree() {
        let m = modifier(20.0);
        for (x, xi) in [(0.0, 0.5), (3.0, 0.8), (-2.0, 0.3)] {
            let a = full_amplitude(&m, x, xi).unwrap();
            let b = full_amplitude_in_left(&m, x, xi).unwrap();
            assert!((a - b).norm() < 1e-14);
        }
        let g1 = gamma1() * gamma2() * proj_out();
        assert!((g1 + proj_in() * gamma2()).norm() == 0.0);
        assert_eq!(full_amplitude(&m, 0.0, 2.0).unwrap(), Mat2::zero());
        let far = modifier(1e8);
        assert!((full_amplitude(&far, 0.0, 0.5).unwrap() - proj_out()).norm() < 1e-8);
    }

    #[test]
    fn dual_derivative_matches_finite_difference() {
        let m = modifier(20.0);
        let x = 1.3;
        let j = m.profile.jet(x).unwrap();
        let ([p01, p11], _) = amplitude_column(&j, 0.5, 20.5, 20.0, true);
        let h = 1e-5;
        let f = |y: f64| full_amplitude(&m, y, 0.5).unwrap();
        let d = (f(x + h) - f(x - h)).scale_re(1.0 / (2.0 * h));
        assert!((d.0[0][1] - p01.d).norm() < 1e-9);
        assert!((d.0[1][1] - p11.d).norm() < 1e-9);
        assert!((f(x).0[0][1] - p01.v).norm() < 1e-15);
    }

    #[test]
    fn defect_scaling_with_and_without_corrections() {
        let sup = |m: &FioModifier| {
            (0..400)
                .map(|k| -20.0 + 0.15 * k as f64)
                .map(|x| defect_symbol(m, x, 0.5).unwrap().operator_norm())
                .fold(0.0, f64::max)
        };
        let c: Vec<f64> = [20.0, 40.0, 80.0]
            .iter()
            .map(|&l| l * l * l * sup(&modifier(l)))
            .collect();
        assert!(
            c.windows(2).all(|w| (0.5..=2.0).contains(&(w[1] / w[0]))),
            "{c:?}"
        );
        let c0: Vec<f64> = [20.0, 40.0, 80.0]
            .iter()
            .map(|&l| l * l * l * sup(&modifier(l).without_corrections()))
            .collect();
        assert!(c0[2] / c0[0] > 4.0, "{c0:?}");
    }

    #[test]
    fn expansion_remainder_is_cubic() {
        let p = schwarzschild();
        let rem = |l: f64, form| {
            let e = symbol_expansion(&p, 0.0, 0.5, l, Sign::Plus, form).unwrap() * proj_out();
            (exact_symbol(&p, 0.0, 0.5, l, Sign::Plus).unwrap() - e).norm()
        };
        let slope = |form| (rem(500.0, form) / rem(125.0, form)).ln() / 4f64.ln();
        assert!((slope(ExpansionForm::Corrected) + 3.0).abs() < 0.3);
        assert!((slope(ExpansionForm::Printed) + 2.0).abs() < 0.3);
        assert!(rem(1e3, ExpansionForm::Corrected) < 1e-6);
        let far =
            symbol_expansion(&p, 1e8, 0.5, 10.0, Sign::Plus, ExpansionForm::Corrected).unwrap();
        assert!((far - Mat2::identity()).norm() < 1e-6);
    }

    #[test]
    fn fio_reduces_to_fourier_inverse_when_free() {
        let free = PotentialProfile::free(AngularMode::from_l(0.5).unwrap());
        let packet = WavePacket::bump(0.25, 1.0, Channel::Out).unwrap();
        let m = FioModifier::new(free, Sign::Plus, 0.0, Cutoff::around(&packet, 0.1)).unwrap();
        let xs = [-3.0, 0.0, 4.5];
        let img = apply_fio(&m, &packet, &xs).unwrap();
        for (x, v) in xs.iter().zip(&img.values) {
            assert_eq!(v.u, ZERO);
            assert!((v.v - packet.scalar_at(*x)).norm() < 1e-13);
        }
    }
}
