//! Wave packets with compactly supported smooth Fourier profiles.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spinor::SpinorValue;

/// `exp(-1/(1 - s^2))` on `|s| < 1`, zero elsewhere.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// First component, moving toward the horizon.
    In,
    /// Second component, moving toward infinity.
    Out,
}

/// One bump `amplitude * b(xi) * e^{-i xi shift}` supported on `[xi_min, xi_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpComponent {
    pub xi_min: f64,
    pub xi_max: f64,
    pub amplitude: C64,
    /// Spatial translation of this component.
    pub shift: f64,
}

impl BumpComponent {
    pub fn value(&self, xi: f64) -> C64 {
        let s = (2.0 * xi - self.xi_max - self.xi_min) / (self.xi_max - self.xi_min);
        let b = bump(s);
        if b == 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.amplitude * C64::from_polar(b, -xi * self.shift)
    }
}

/// Sum of bump components in one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    components: Vec<BumpComponent>,
    channel: Channel,
}

/// Trapezoid nodes per unit of Fourier support; the rule converges faster than
/// any power for these profiles.
pub const DEFAULT_SPECTRAL_DENSITY: f64 = 1024.0;

impl WavePacket {
    pub fn bump(xi_min: f64, xi_max: f64, channel: Channel) -> Result<Self> {
        Self::from_components(
            vec![BumpComponent {
                xi_min,
                xi_max,
                amplitude: C64::new(1.0, 0.0),
                shift: 0.0,
            }],
            channel,
        )
    }

    pub fn from_components(components: Vec<BumpComponent>, channel: Channel) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("packet needs at least one component".into()));
        }
        for c in &components {
            if !(c.xi_max > c.xi_min) || !c.xi_min.is_finite() || !c.xi_max.is_finite() {
                return Err(Error::Domain(format!(
                    "bad support [{}, {}]",
                    c.xi_min, c.xi_max
                )));
            }
        }
        Ok(Self {
            components,
            channel,
        })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn components(&self) -> &[BumpComponent] {
        &self.components
    }

    /// Convex hull of the Fourier support.
    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .components
            .iter()
            .map(|c| c.xi_min)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.xi_max)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn profile(&self, xi: f64) -> C64 {
        self.components.iter().map(|c| c.value(xi)).sum()
    }

    pub fn translated(&self, y: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| BumpComponent {
                shift: c.shift + y,
                ..*c
            })
            .collect();
        Self {
            components,
            channel: self.channel,
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| BumpComponent {
                amplitude: c.amplitude * s,
                ..*c
            })
            .collect();
        Self {
            components,
            channel: self.channel,
        }
    }

    /// Superposition of two packets in the same channel.
    pub fn plus(&self, other: &WavePacket) -> Result<Self> {
        if self.channel != other.channel {
            return Err(Error::Domain(
                "cannot add packets from different channels".into(),
            ));
        }
        let mut components = self.components.clone();
        components.extend_from_slice(&other.components);
        Ok(Self {
            components,
            channel: self.channel,
        })
    }

    /// Trapezoid nodes and weights over the support hull.
    pub fn spectral_nodes(&self, density: f64) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.support();
        let n = ((hi - lo) * density).ceil().max(16.0) as usize;
        let h = (hi - lo) / n as f64;
        ((1..n).map(|k| lo + k as f64 * h).collect(), vec![h; n - 1])
    }

    pub fn norm_sqr(&self) -> f64 {
        let (xs, ws) = self.spectral_nodes(DEFAULT_SPECTRAL_DENSITY);
        xs.iter()
            .zip(&ws)
            .map(|(x, w)| w * self.profile(*x).norm_sqr())
            .sum()
    }

    pub fn normalized(&self) -> Self {
        self.scaled(C64::new(1.0 / self.norm_sqr().sqrt(), 0.0))
    }

    /// `<self, other>` through Plancherel.
    pub fn inner(&self, other: &WavePacket) -> C64 {
        self.spectral_inner(other, |_| C64::new(1.0, 0.0))
    }

    /// `int conj(psi1^) m(xi) psi2^ dxi` for a Fourier multiplier `m`.
    pub fn spectral_inner<F: Fn(f64) -> C64>(&self, other: &WavePacket, m: F) -> C64 {
        if self.channel != other.channel {
            return C64::new(0.0, 0.0);
        }
        let (a0, a1) = self.support();
        let (b0, b1) = other.support();
        let (lo, hi) = (a0.max(b0), a1.min(b1));
        if !(hi > lo) {
            return C64::new(0.0, 0.0);
        }
        let n = ((hi - lo) * DEFAULT_SPECTRAL_DENSITY).ceil().max(16.0) as usize;
        let h = (hi - lo) / n as f64;
        (1..n)
            .map(|k| {
                let xi = lo + k as f64 * h;
                self.profile(xi).conj() * m(xi) * other.profile(xi) * h
            })
            .sum()
    }

    /// Scalar spatial profile `(2 pi)^{-1/2} int psi^(xi) e^{i xi x} dxi`.
    pub fn scalar_at(&self, x: f64) -> C64 {
        let (xs, ws) = self.spectral_nodes(DEFAULT_SPECTRAL_DENSITY);
        let s: C64 = xs
            .iter()
            .zip(&ws)
            .map(|(xi, w)| self.profile(*xi) * C64::from_polar(*w, xi * x))
            .sum();
        s / (2.0 * PI).sqrt()
    }

    /// Spinor value at `x`, placed in the packet's channel.
    pub fn spinor_at(&self, x: f64) -> SpinorValue {
        self.place(self.scalar_at(x))
    }

    pub fn place(&self, f: C64) -> SpinorValue {
        match self.channel {
            Channel::In => SpinorValue::new(f, C64::new(0.0, 0.0)),
            Channel::Out => SpinorValue::new(C64::new(0.0, 0.0), f),
        }
    }

    /// Closed-form free transport: the out component moves right, the in
    /// component left, at unit speed.
    pub fn free_evolved_at(&self, x: f64, t: f64) -> SpinorValue {
        match self.channel {
            Channel::Out => self.spinor_at(x - t),
            Channel::In => self.spinor_at(x + t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compact_and_flat() {
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
        assert!((bump(0.0) - (-1f64).exp()).abs() < 1e-16);
        assert!(bump(0.999) < 1e-200);
    }

    #[test]
    fn profile_vanishes_off_support() {
        let p = WavePacket::bump(0.25, 1.0, Channel::Out).unwrap();
        assert_eq!(p.profile(0.2), C64::new(0.0, 0.0));
        assert_eq!(p.profile(1.0), C64::new(0.0, 0.0));
        assert!(p.profile(0.6).norm() > 0.0);
        assert_eq!(p.spinor_at(0.3).u, C64::new(0.0, 0.0));
    }

    #[test]
    fn normalisation_and_plancherel() {
        let p = WavePacket::bump(0.25, 1.0, Channel::Out)
            .unwrap()
            .normalized();
        assert!((p.norm_sqr() - 1.0).abs() < 1e-13);
        // spatial norm by brute force
        let mut s = 0.0;
        let h = 0.25;
        let mut x = -400.0;
        while x < 400.0 {
            s += p.scalar_at(x).norm_sqr() * h;
            x += h;
        }
        assert!((s - 1.0).abs() < 1e-8, "{s}");
    }

    #[test]
    fn translation_moves_the_profile() {
        let p = WavePacket::bump(0.25, 1.0, Channel::Out).unwrap();
        let q = p.translated(7.0);
        let d = q.scalar_at(3.0) - p.scalar_at(-4.0);
        assert!(d.norm() < 1e-14);
    }
}
