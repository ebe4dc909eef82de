//! Reissner–Nordström exterior: metric factor, horizons and the tortoise map.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackHoleParams {
    mass: f64,
    charge: f64,
}

impl BlackHoleParams {
    /// Rejects extremal and naked configurations (`mass <= |charge|`).
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !mass.is_finite() || !charge.is_finite() {
            return Err(Error::InvalidParams("non-finite mass or charge".into()));
        }
        if mass <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if mass <= charge.abs() {
            return Err(Error::InvalidParams(format!(
                "need mass > |charge|, got M = {mass}, Q = {charge}"
            )));
        }
        Ok(Self { mass, charge })
    }

    /// Builds from the squared charge, the only charge data the field sees.
    pub fn from_charge_sq(mass: f64, charge_sq: f64) -> Result<Self> {
        if charge_sq < 0.0 {
            return Err(Error::InvalidParams(format!("negative Q^2 = {charge_sq}")));
        }
        Self::new(mass, charge_sq.sqrt())
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn charge_sq(&self) -> f64 {
        self.charge * self.charge
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizons {
    pub r_plus: f64,
    pub r_minus: f64,
}

impl Horizons {
    pub fn gap(&self) -> f64 {
        self.r_plus - self.r_minus
    }
}

pub fn horizons(params: &BlackHoleParams) -> Horizons {
    let m = params.mass;
    let disc = ((m - params.charge) * (m + params.charge)).sqrt();
    let r_plus = m + disc;
    // r_plus * r_minus = Q^2 avoids the cancellation in m - disc.
    let r_minus = params.charge_sq() / r_plus;
    Horizons { r_plus, r_minus }
}

/// `1 - 2M/r + Q^2/r^2` for any `r > 0`, horizons included.
pub fn metric_factor_unchecked(params: &BlackHoleParams, r: f64) -> f64 {
    let h = horizons(params);
    (r - h.r_plus) * (r - h.r_minus) / (r * r)
}

pub fn metric_factor(params: &BlackHoleParams, r: f64) -> Result<f64> {
    let h = horizons(params);
    if !(r > h.r_plus) {
        return Err(Error::Domain(format!(
            "r = {r} is not outside r+ = {}",
            h.r_plus
        )));
    }
    Ok(metric_factor_unchecked(params, r))
}

pub const DEFAULT_INVERSION_TOL: f64 = 1e-13;

/// Tortoise coordinate `x = r + A ln(r - r+) - B ln(r - r-)` and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateMap {
    params: BlackHoleParams,
    horizons: Horizons,
    log_a: f64,
    log_b: f64,
    tol: f64,
}

impl CoordinateMap {
    pub fn new(params: BlackHoleParams) -> Self {
        Self::with_tolerance(params, DEFAULT_INVERSION_TOL)
    }

    pub fn with_tolerance(params: BlackHoleParams, tol: f64) -> Self {
        let h = horizons(&params);
        let gap = h.gap();
        Self {
            params,
            horizons: h,
            log_a: h.r_plus * h.r_plus / gap,
            log_b: h.r_minus * h.r_minus / gap,
            tol,
        }
    }

    pub fn params(&self) -> &BlackHoleParams {
        &self.params
    }

    pub fn horizons(&self) -> &Horizons {
        &self.horizons
    }

    /// Coefficients `(A, B)` of the two logarithms.
    pub fn log_coefficients(&self) -> (f64, f64) {
        (self.log_a, self.log_b)
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Tortoise coordinate written through `s = ln(r - r+)`.
    pub fn tortoise_from_log_gap(&self, s: f64) -> f64 {
        let d = s.exp();
        let mut x = self.horizons.r_plus + d + self.log_a * s;
        if self.log_b > 0.0 {
            x -= self.log_b * (d + self.horizons.gap()).ln();
        }
        x
    }

    /// `dx/ds = r^2 / (r - r-)`.
    fn tortoise_slope_log_gap(&self, s: f64) -> f64 {
        let d = s.exp();
        let r = self.horizons.r_plus + d;
        r * r / (d + self.horizons.gap())
    }

    /// Solves `tortoise(r) = x` for `s = ln(r - r+)`; this keeps full relative
    /// precision in `r - r+` deep in the near-horizon region.
    pub fn log_gap_from_tortoise(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Inversion {
                x,
                residual: f64::NAN,
            });
        }
        let rp = self.horizons.r_plus;
        let (a, b) = (self.log_a, self.log_b);
        let gap = self.horizons.gap();
        let mut s = if x > 10.0 {
            let r = (x - a * x.max(2.0).ln()).max(rp * (1.0 + 1e-3));
            (r - rp).ln()
        } else if x < -10.0 {
            (x - rp + b * gap.ln()) / a
        } else {
            0.0
        };

        // Bracket the root; the map is strictly increasing in s.
        let g = |s: f64| self.tortoise_from_log_gap(s) - x;
        let mut lo = s - 1.0;
        let mut hi = s + 1.0;
        let mut step = 1.0;
        while g(lo) > 0.0 {
            step *= 2.0;
            lo -= step;
            if step > 1e6 {
                return Err(Error::Inversion { x, residual: g(lo) });
            }
        }
        step = 1.0;
        while g(hi) < 0.0 {
            step *= 2.0;
            hi += step;
            if hi > 800.0 {
                return Err(Error::Inversion { x, residual: g(hi) });
            }
        }
        s = s.clamp(lo, hi);

        let target = self.tol * (1.0 + x.abs());
        for _ in 0..200 {
            let res = g(s);
            if res.abs() <= target {
                return Ok(s);
            }
            if res > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let mut next = s - res / self.tortoise_slope_log_gap(s);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 4.0 * f64::EPSILON * s.abs().max(1.0) {
                let r_next = g(next);
                if r_next.abs() <= target.max(8.0 * f64::EPSILON * (1.0 + x.abs())) {
                    return Ok(next);
                }
                return Err(Error::Inversion {
                    x,
                    residual: r_next,
                });
            }
            s = next;
        }
        Err(Error::Inversion { x, residual: g(s) })
    }

    pub fn tortoise(&self, r: f64) -> Result<f64> {
        let rp = self.horizons.r_plus;
        if !(r > rp) {
            return Err(Error::Domain(format!("r = {r} is not outside r+ = {rp}")));
        }
        let mut x = r + self.log_a * (r - rp).ln();
        if self.log_b > 0.0 {
            x -= self.log_b * (r - self.horizons.r_minus).ln();
        }
        Ok(x)
    }

    pub fn radius_from_tortoise(&self, x: f64) -> Result<f64> {
        let s = self.log_gap_from_tortoise(x)?;
        Ok(self.horizons.r_plus + s.exp())
    }

    /// Coordinate time of a radial null ray from `r0` out to `r1`.
    pub fn null_geodesic_time(&self, r0: f64, r1: f64) -> Result<f64> {
        let h = self.horizons;
        if !(r0 > h.r_plus) || !(r1 > h.r_plus) {
            return Err(Error::Domain(format!(
                "radii ({r0}, {r1}) must lie outside r+ = {}",
                h.r_plus
            )));
        }
        if !(r1 > r0) {
            return Err(Error::Domain(format!(
                "need r1 > r0, got r0 = {r0}, r1 = {r1}"
            )));
        }
        let mut t = (r1 - r0) + self.log_a * ((r1 - h.r_plus) / (r0 - h.r_plus)).ln();
        if self.log_b > 0.0 {
            t -= self.log_b * ((r1 - h.r_minus) / (r0 - h.r_minus)).ln();
        }
        Ok(t)
    }
}

pub fn tortoise(map: &CoordinateMap, r: f64) -> Result<f64> {
    map.tortoise(r)
}

pub fn radius_from_tortoise(map: &CoordinateMap, x: f64) -> Result<f64> {
    map.radius_from_tortoise(x)
}

pub fn null_geodesic_time(map: &CoordinateMap, r0: f64, r1: f64) -> Result<f64> {
    map.null_geodesic_time(r0, r1)
}
