//! The reduced potential `a(x) = sqrt(F(r))/r`, its angular scaling, derivatives
//! and integrals.
//!
//! With `u = 1/r` one has `du/dx = -a^2` and `a^2 = G(u) = u^2 - 2M u^3 + Q^2 u^4`,
//! so every x-derivative of `a` is `a` times a polynomial in `u`, and every
//! integral of a polynomial in `a, a'` over x is a polynomial integral in `u`.

use crate::error::{Error, Result};
use crate::geometry::CoordinateMap;
use crate::poly::Poly;
use crate::quadrature::{integrate, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularMode {
    weight: u32,
}

impl AngularMode {
    /// Accepts `l` with `l - 1/2` a non-negative integer.
    pub fn from_l(l: f64) -> Result<Self> {
        let w = l + 0.5;
        if !(w >= 1.0) || (w - w.round()).abs() > 1e-12 || w > 1e6 {
            return Err(Error::Domain(format!(
                "l = {l} is not a positive half-integer"
            )));
        }
        Ok(Self {
            weight: w.round() as u32,
        })
    }

    pub fn from_weight(weight: u32) -> Result<Self> {
        if weight == 0 {
            return Err(Error::Domain("mode weight must be at least 1".into()));
        }
        Ok(Self { weight })
    }

    pub fn l(&self) -> f64 {
        self.weight as f64 - 0.5
    }

    /// `w = l + 1/2`.
    pub fn weight(&self) -> f64 {
        self.weight as f64
    }
}

/// Direction of the eikonal integral: `+` integrates to `+inf`, `-` to `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    BlackHole(CoordinateMap),
    /// `a_l = 0` identically; bypasses geometry.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Radius beyond which the exact tail `w^2/r` replaces quadrature.
    pub tail_radius: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            tail_radius: 1e6,
        }
    }
}

/// `a_l` and its first three x-derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialJet {
    pub a: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

#[derive(Debug, Clone)]
pub struct PotentialProfile {
    background: Background,
    mode: AngularMode,
    quad: QuadratureSettings,
    /// `a^(k) = a * chain[k](u)` for the geometric potential.
    chain: [Poly; 4],
    g: Poly,
}

impl PotentialProfile {
    pub fn new(map: CoordinateMap, mode: AngularMode) -> Self {
        Self::with_background(Background::BlackHole(map), mode)
    }

    pub fn free(mode: AngularMode) -> Self {
        Self::with_background(Background::Free, mode)
    }

    pub fn with_background(background: Background, mode: AngularMode) -> Self {
        let (m, q2) = match background {
            Background::BlackHole(map) => (map.params().mass(), map.params().charge_sq()),
            Background::Free => (0.0, 0.0),
        };
        let g = Poly::new(vec![0.0, 0.0, 1.0, -2.0 * m, q2]);
        let half_dg = g.derivative().scale(-0.5);
        let minus_g = g.scale(-1.0);
        let mut chain: [Poly; 4] = Default::default();
        chain[0] = Poly::constant(1.0);
        for k in 1..4 {
            chain[k] = chain[k - 1]
                .mul(&half_dg)
                .add(&minus_g.mul(&chain[k - 1].derivative()));
        }
        Self {
            background,
            mode,
            quad: QuadratureSettings::default(),
            chain,
            g,
        }
    }

    pub fn with_quadrature(mut self, quad: QuadratureSettings) -> Self {
        self.quad = quad;
        self
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn map(&self) -> Option<&CoordinateMap> {
        match &self.background {
            Background::BlackHole(m) => Some(m),
            Background::Free => None,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self.background, Background::Free)
    }

    pub fn mode(&self) -> AngularMode {
        self.mode
    }

    pub fn weight(&self) -> f64 {
        self.mode.weight()
    }

    fn require_map(&self) -> Result<&CoordinateMap> {
        self.map()
            .ok_or_else(|| Error::Domain("free background has no radial coordinate".into()))
    }

    /// `1/r+`, or zero for the free background.
    pub fn inverse_r_plus(&self) -> f64 {
        self.map().map_or(0.0, |m| 1.0 / m.horizons().r_plus)
    }

    pub fn r_plus(&self) -> Option<f64> {
        self.map().map(|m| m.horizons().r_plus)
    }

    pub fn radius(&self, x: f64) -> Result<f64> {
        self.require_map()?.radius_from_tortoise(x)
    }

    /// `s = ln(r - r+)` at tortoise position `x`.
    pub fn log_gap(&self, x: f64) -> Result<f64> {
        self.require_map()?.log_gap_from_tortoise(x)
    }

    /// `ds/dx` where `s = ln(r - r+)`.
    pub fn log_gap_rate(&self, s: f64) -> f64 {
        match &self.background {
            Background::BlackHole(map) => {
                let h = map.horizons();
                let d = s.exp();
                let r = h.r_plus + d;
                (d + h.gap()) / (r * r)
            }
            Background::Free => 0.0,
        }
    }

    /// Geometric potential and `u = 1/r` from `s = ln(r - r+)`.
    fn geom_from_log_gap(&self, s: f64) -> (f64, f64) {
        match &self.background {
            Background::BlackHole(map) => {
                let h = map.horizons();
                let d = s.exp();
                let r = h.r_plus + d;
                let u = 1.0 / r;
                ((d * (d + h.gap())).sqrt() * u * u, u)
            }
            Background::Free => (0.0, 0.0),
        }
    }

    pub fn a_l_from_log_gap(&self, s: f64) -> f64 {
        -self.weight() * self.geom_from_log_gap(s).0
    }

    pub fn jet_from_log_gap(&self, s: f64) -> PotentialJet {
        let (a, u) = self.geom_from_log_gap(s);
        let w = -self.weight() * a;
        PotentialJet {
            a: w,
            d1: w * self.chain[1].eval(u),
            d2: w * self.chain[2].eval(u),
            d3: w * self.chain[3].eval(u),
        }
    }

    pub fn a_geom(&self, x: f64) -> Result<f64> {
        if self.is_free() {
            return Ok(0.0);
        }
        Ok(self.geom_from_log_gap(self.log_gap(x)?).0)
    }

    pub fn a_l(&self, x: f64) -> Result<f64> {
        Ok(-self.weight() * self.a_geom(x)?)
    }

    /// Geometric `(a, a', a'')`.
    pub fn a_derivatives(&self, x: f64) -> Result<(f64, f64, f64)> {
        if self.is_free() {
            return Ok((0.0, 0.0, 0.0));
        }
        let (a, u) = self.geom_from_log_gap(self.log_gap(x)?);
        Ok((a, a * self.chain[1].eval(u), a * self.chain[2].eval(u)))
    }

    /// `a_l` with three derivatives.
    pub fn jet(&self, x: f64) -> Result<PotentialJet> {
        if self.is_free() {
            return Ok(PotentialJet::default());
        }
        Ok(self.jet_from_log_gap(self.log_gap(x)?))
    }

    /// Closed form `w^2 / r+`.
    pub fn integral_a2_exact(&self) -> f64 {
        self.weight().powi(2) * self.inverse_r_plus()
    }

    /// Adaptive quadrature of `a_l^2` in x over the bulk, with the exact tails
    /// `w^2/r` beyond the tail radius and `w^2 (1/r+ - 1/r)` below `x_left`.
    pub fn integral_a2(&self) -> Result<QuadResult> {
        let map = match &self.background {
            Background::Free => {
                return Ok(QuadResult {
                    value: 0.0,
                    error: 0.0,
                    panels: 0,
                })
            }
            Background::BlackHole(m) => *m,
        };
        let w2 = self.weight().powi(2);
        let rp = map.horizons().r_plus;
        let x_right = map.tortoise(self.quad.tail_radius.max(2.0 * rp))?;
        let x_left = rp - 40.0 * map.log_coefficients().0;
        let r_left = map.radius_from_tortoise(x_left)?;
        let r_right = map.radius_from_tortoise(x_right)?;
        let mut failure = None;
        let f = |x: f64| match self.a_l(x) {
            Ok(a) => a * a,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        // Split at the barrier and a few decades out so panels see comparable scales.
        let mut cuts = vec![x_left, rp + 2.0, 50.0, 1e3, 3e4, x_right];
        cuts.retain(|c| *c >= x_left && *c <= x_right);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut total = QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
        };
        let mut f = f;
        for pair in cuts.windows(2) {
            let part = integrate(
                &mut f,
                pair[0],
                pair[1],
                self.quad.abs_tol,
                self.quad.rel_tol,
            )?;
            total.value += part.value;
            total.error += part.error;
            total.panels += part.panels;
        }
        if let Some(e) = failure {
            return Err(e);
        }
        total.value += w2 * (1.0 / rp - 1.0 / r_left) + w2 / r_right;
        Ok(total)
    }

    /// `I+(x) = int_x^inf a_l^2 >= 0` and `I-(x) = -int_-inf^x a_l^2 <= 0`, so
    /// that `I+ - I- = int a_l^2` everywhere.
    pub fn eikonal_primitive(&self, x: f64, sign: Sign) -> Result<f64> {
        if self.is_free() {
            return Ok(0.0);
        }
        let (_, u) = self.geom_from_log_gap(self.log_gap(x)?);
        Ok(self.eikonal_from_inverse_radius(u, sign))
    }

    pub(crate) fn eikonal_from_inverse_radius(&self, u: f64, sign: Sign) -> f64 {
        let w2 = self.weight().powi(2);
        match sign {
            Sign::Plus => w2 * u,
            Sign::Minus => -w2 * (self.inverse_r_plus() - u),
        }
    }

    /// Same primitive by adaptive quadrature of `w^2/r^2` in r, with the exact
    /// tail past the tail radius.
    pub fn eikonal_primitive_quadrature(&self, x: f64, sign: Sign) -> Result<f64> {
        let map = match &self.background {
            Background::Free => return Ok(0.0),
            Background::BlackHole(m) => *m,
        };
        let w2 = self.weight().powi(2);
        let r = map.radius_from_tortoise(x)?;
        let rp = map.horizons().r_plus;
        let f = |r: f64| w2 / (r * r);
        let tol = (self.quad.abs_tol, self.quad.rel_tol);
        match sign {
            Sign::Plus => {
                let rt = self.quad.tail_radius;
                if r >= rt {
                    return Ok(w2 / r);
                }
                Ok(integrate(f, r, rt, tol.0, tol.1)?.value + w2 / rt)
            }
            Sign::Minus => Ok(-integrate(f, rp, r, tol.0, tol.1)?.value),
        }
    }

    /// `kappa = F'(r+)/2`, the exponential rate of `a` toward the horizon.
    pub fn left_decay_rate(&self) -> f64 {
        match &self.background {
            Background::BlackHole(map) => {
                let h = map.horizons();
                h.gap() / (2.0 * h.r_plus * h.r_plus)
            }
            Background::Free => 0.0,
        }
    }

    /// `sup |a_l|`, attained at the photon sphere.
    pub fn sup_abs_a_l(&self) -> f64 {
        match &self.background {
            Background::BlackHole(map) => {
                let m = map.params().mass();
                let q2 = map.params().charge_sq();
                // Root of 1 - 3Mu + 2Q^2u^2 nearest zero.
                let u = if q2 == 0.0 {
                    1.0 / (3.0 * m)
                } else {
                    2.0 / (3.0 * m + (9.0 * m * m - 8.0 * q2).sqrt())
                };
                self.weight() * self.g.eval(u).max(0.0).sqrt()
            }
            Background::Free => 0.0,
        }
    }

    /// `int_x^inf a_l^4` (or over the whole line with `x = None`).
    pub fn quartic_integral(&self, x: Option<f64>) -> Result<f64> {
        let u = self.upper_inverse_radius(x)?;
        Ok(self.weight().powi(4) * self.g.integral().eval(u))
    }

    /// `int_x^inf (a_l')^2` (or over the whole line with `x = None`).
    pub fn slope_integral(&self, x: Option<f64>) -> Result<f64> {
        let u = self.upper_inverse_radius(x)?;
        let half_dg = self.g.derivative().scale(0.5);
        Ok(self.weight().powi(2) * half_dg.mul(&half_dg).integral().eval(u))
    }

    fn upper_inverse_radius(&self, x: Option<f64>) -> Result<f64> {
        if self.is_free() {
            return Ok(0.0);
        }
        match x {
            None => Ok(self.inverse_r_plus()),
            Some(x) => Ok(self.geom_from_log_gap(self.log_gap(x)?).1),
        }
    }

    /// Coefficient of `eta^-3` in the forward phase: `(1/8) int (a_l'^2 + a_l^4)`.
    pub fn cubic_phase_coefficient(&self) -> f64 {
        (self.slope_integral(None).unwrap_or(0.0) + self.quartic_integral(None).unwrap_or(0.0))
            / 8.0
    }
}

/// Closed-form `(1/8) int (a_l'^2 + a_l^4)` from `(r+, Q^2)` and the mode weight.
pub fn cubic_phase_from_horizon(r_plus: f64, charge_sq: f64, weight: f64) -> f64 {
    let m = (r_plus * r_plus + charge_sq) / (2.0 * r_plus);
    let u = 1.0 / r_plus;
    let g = Poly::new(vec![0.0, 0.0, 1.0, -2.0 * m, charge_sq]);
    let half_dg = g.derivative().scale(0.5);
    let slope = weight.powi(2) * half_dg.mul(&half_dg).integral().eval(u);
    let quartic = weight.powi(4) * g.integral().eval(u);
    (slope + quartic) / 8.0
}
