//! Wave-operator images `W(lambda) psi` assembled from generalized
//! eigenfunctions of the stationary problem.
//!
//! For an out-channel packet,
//! `W psi(x) = (2 pi)^{-1/2} int psi^(xi) e^{i xi x} E(x; xi + lambda) dxi`, where
//! `E = (e^{-2i eta x} alpha, beta)` is the gauged eigenfunction that is a pure
//! free out-wave in the far future (`Plus`) or far past (`Minus`). `E` varies
//! slowly in `eta`, so it is solved at a few Chebyshev energies and
//! interpolated. This reaches accuracies that time stepping cannot afford at
//! large `lambda`.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::dirac_stationary::{
    decompose, domain_for, integrate_gauged, outgoing_branch, scattering_matrix, StationaryOptions,
};
use crate::error::{Error, Result};
use crate::packet::{Channel, WavePacket};
use crate::potential::{PotentialProfile, Sign};
use crate::quadrature::composite_rule;
use crate::spinor::SpinorValue;

/// Gauss-Legendre panels over a bounded window.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpatialQuadrature {
    pub fn panels(lo: f64, hi: f64, width: f64, order: usize) -> Result<Self> {
        if !(hi > lo) || !(width > 0.0) || order == 0 {
            return Err(Error::Grid(format!(
                "bad window [{lo}, {hi}] or panel width {width}"
            )));
        }
        let panels = ((hi - lo) / width).ceil() as usize;
        let (nodes, weights) = composite_rule(lo, hi, panels, order);
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `<f, g>`, conjugate-linear in `f`.
    pub fn inner(&self, f: &[SpinorValue], g: &[SpinorValue]) -> C64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| a.dot(b) * *w)
            .sum()
    }

    pub fn norm_sqr(&self, f: &[SpinorValue]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .map(|(w, a)| w * a.norm_sqr())
            .sum()
    }

    pub fn distance(&self, f: &[SpinorValue], g: &[SpinorValue]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * (*a - *b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Samples a packet pointwise.
    pub fn sample(&self, packet: &WavePacket) -> Vec<SpinorValue> {
        self.nodes.iter().map(|&x| packet.spinor_at(x)).collect()
    }
}

/// Gauged eigenfunction values `(e^{-2i eta x} alpha, beta)` at sorted points.
pub fn eigen_profile(
    profile: &PotentialProfile,
    eta: f64,
    sign: Sign,
    xs: &[f64],
    opts: &StationaryOptions,
) -> Result<Vec<SpinorValue>> {
    if xs.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("evaluation points must be sorted".into()));
    }
    let n = xs.len();
    let mut raw = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); n];
    let dom = domain_for(profile, eta, opts)?;
    let left = dom.left.min(xs.first().copied().unwrap_or(0.0));
    let right = dom.right.max(xs.last().copied().unwrap_or(0.0));
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let scale = match sign {
        Sign::Plus => {
            // nothing enters from the horizon side in the far future
            let mut stops = xs.to_vec();
            stops.push(right);
            let ((alpha, beta), _) = integrate_gauged(
                profile,
                eta,
                left,
                (zero, one),
                &stops,
                &opts.ode(),
                |k, s| {
                    if k < n {
                        raw[k] = (s.alpha, s.beta);
                    }
                },
            )?;
            let (c_out, _) = decompose(profile, eta, right, alpha, beta)?;
            c_out.inv()
        }
        Sign::Minus => {
            let mut stops: Vec<f64> = xs.iter().rev().copied().collect();
            stops.push(left);
            let start = outgoing_branch(profile, eta, right)?;
            let ((_, beta), _) =
                integrate_gauged(profile, eta, right, start, &stops, &opts.ode(), |k, s| {
                    if k < n {
                        raw[n - 1 - k] = (s.alpha, s.beta);
                    }
                })?;
            beta.inv()
        }
    };
    Ok(xs
        .iter()
        .zip(&raw)
        .map(|(&x, &(alpha, beta))| {
            SpinorValue::new(
                alpha * C64::from_polar(1.0, -2.0 * eta * x) * scale,
                beta * scale,
            )
        })
        .collect())
}

/// Chebyshev points of the second kind on `[lo, hi]` with barycentric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid {
    pub nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebyshevGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(hi > lo) {
            return Err(Error::Domain(format!(
                "need >= 2 nodes on a proper interval, got {count} on [{lo}, {hi}]"
            )));
        }
        let m = count - 1;
        let nodes = (0..count)
            .map(|j| 0.5 * (lo + hi) + 0.5 * (hi - lo) * (PI * j as f64 / m as f64).cos())
            .collect();
        let weights = (0..count)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { nodes, weights })
    }

    /// Lagrange basis values at `t`.
    pub fn basis(&self, t: f64) -> Vec<f64> {
        if let Some(j) = self.nodes.iter().position(|&x| x == t) {
            let mut e = vec![0.0; self.nodes.len()];
            e[j] = 1.0;
            return e;
        }
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w / (t - x))
            .collect();
        let total: f64 = terms.iter().sum();
        terms.iter().map(|v| v / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveImageOptions {
    pub chebyshev_nodes: usize,
    /// Trapezoid nodes over the Fourier support.
    pub spectral_nodes: usize,
    pub stationary: StationaryOptions,
}

impl Default for WaveImageOptions {
    fn default() -> Self {
        Self {
            chebyshev_nodes: 16,
            spectral_nodes: 512,
            stationary: StationaryOptions::default(),
        }
    }
}

/// Eigenfunctions for one `(lambda, sign)` on a Fourier window, ready to be
/// applied to any out-channel packet supported in that window.
#[derive(Debug, Clone)]
pub struct WaveImager {
    pub lambda: f64,
    pub sign: Sign,
    pub window: (f64, f64),
    grid: ChebyshevGrid,
    /// `eigen[j][i]`: node `j`, point `i`.
    eigen: Vec<Vec<SpinorValue>>,
    spectral_nodes: usize,
}

impl WaveImager {
    pub fn new(
        profile: &PotentialProfile,
        lambda: f64,
        sign: Sign,
        window: (f64, f64),
        quad: &SpatialQuadrature,
        opts: &WaveImageOptions,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        if window.0 + lambda <= 0.0 {
            return Err(Error::Domain(
                "energies xi + lambda must stay positive on the window".into(),
            ));
        }
        let grid = ChebyshevGrid::new(window.0, window.1, opts.chebyshev_nodes)?;
        let eigen = grid
            .nodes
            .iter()
            .map(|&xi| eigen_profile(profile, xi + lambda, sign, &quad.nodes, &opts.stationary))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda,
            sign,
            window,
            grid,
            eigen,
            spectral_nodes: opts.spectral_nodes,
        })
    }

    pub fn apply(&self, packet: &WavePacket, quad: &SpatialQuadrature) -> Result<Vec<SpinorValue>> {
        if packet.channel() != Channel::Out {
            return Err(Error::Domain(
                "wave operators act on out-channel packets here".into(),
            ));
        }
        let (lo, hi) = packet.support();
        if lo < self.window.0 || hi > self.window.1 {
            return Err(Error::Domain(format!(
                "packet support [{lo}, {hi}] outside window {:?}",
                self.window
            )));
        }
        if quad.len() != self.eigen[0].len() {
            return Err(Error::Grid(
                "spatial quadrature differs from the one used to build the imager".into(),
            ));
        }
        let n = self.spectral_nodes.max(16);
        let h = (hi - lo) / n as f64;
        let norm = h / (2.0 * PI).sqrt();
        let xis: Vec<f64> = (1..n).map(|k| lo + k as f64 * h).collect();
        let amps: Vec<C64> = xis.iter().map(|&xi| packet.profile(xi) * norm).collect();
        let basis: Vec<Vec<f64>> = xis.iter().map(|&xi| self.grid.basis(xi)).collect();
        let mut out = Vec::with_capacity(quad.len());
        for (i, &x) in quad.nodes.iter().enumerate() {
            let mut acc = SpinorValue::default();
            for k in 0..xis.len() {
                let mut e = SpinorValue::default();
                for (j, b) in basis[k].iter().enumerate() {
                    let v = self.eigen[j][i];
                    e.u += v.u * *b;
                    e.v += v.v * *b;
                }
                let w = amps[k] * C64::from_polar(1.0, xis[k] * x);
                acc.u += e.u * w;
                acc.v += e.v * w;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Images of the same packet pair under `W^-` and `W^+`, and their inner
/// product `F_out(lambda) = <W^- psi1, W^+ psi2>`.
pub fn f_out_stationary(
    profile: &PotentialProfile,
    lambda: f64,
    psi1: &WavePacket,
    psi2: &WavePacket,
    quad: &SpatialQuadrature,
    opts: &WaveImageOptions,
) -> Result<C64> {
    let (a0, a1) = psi1.support();
    let (b0, b1) = psi2.support();
    let window = (a0.min(b0), a1.max(b1));
    let minus = WaveImager::new(profile, lambda, Sign::Minus, window, quad, opts)?;
    let plus = WaveImager::new(profile, lambda, Sign::Plus, window, quad, opts)?;
    Ok(quad.inner(&minus.apply(psi1, quad)?, &plus.apply(psi2, quad)?))
}

/// `t(xi + lambda)` interpolated in `xi` over a Fourier window.
#[derive(Debug, Clone)]
pub struct TransmissionInterpolant {
    pub lambda: f64,
    pub window: (f64, f64),
    grid: ChebyshevGrid,
    values: Vec<C64>,
}

impl TransmissionInterpolant {
    pub fn new(
        profile: &PotentialProfile,
        lambda: f64,
        window: (f64, f64),
        nodes: usize,
        opts: &StationaryOptions,
    ) -> Result<Self> {
        if window.0 + lambda <= 0.0 {
            return Err(Error::Domain(
                "energies xi + lambda must stay positive on the window".into(),
            ));
        }
        let grid = ChebyshevGrid::new(window.0, window.1, nodes)?;
        let values = grid
            .nodes
            .iter()
            .map(|&xi| scattering_matrix(profile, xi + lambda, opts).map(|e| e.t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda,
            window,
            grid,
            values,
        })
    }

    pub fn transmission(&self, xi: f64) -> C64 {
        self.grid
            .basis(xi)
            .iter()
            .zip(&self.values)
            .map(|(b, v)| v * *b)
            .sum()
    }

    /// `int conj(psi1^) conj(t(xi + lambda)) psi2^ dxi`, the out-channel
    /// quadratic form written as a Fourier multiplier.
    pub fn f_out(&self, psi1: &WavePacket, psi2: &WavePacket) -> Result<C64> {
        for p in [psi1, psi2] {
            let (lo, hi) = p.support();
            if lo < self.window.0 || hi > self.window.1 {
                return Err(Error::Domain(format!(
                    "packet support [{lo}, {hi}] outside window {:?}",
                    self.window
                )));
            }
        }
        Ok(psi1.spectral_inner(psi2, |xi| self.transmission(xi).conj()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BlackHoleParams, CoordinateMap};
    use crate::potential::AngularMode;

    fn profile() -> PotentialProfile {
        let map = CoordinateMap::new(BlackHoleParams::new(1.0, 0.0).unwrap());
        PotentialProfile::new(map, AngularMode::from_l(0.5).unwrap())
    }

    #[test]
    fn chebyshev_interpolates_polynomials() {
        let g = ChebyshevGrid::new(-1.0, 3.0, 8).unwrap();
        let f = |t: f64| t.powi(5) - 2.0 * t + 1.0;
        let vals: Vec<f64> = g.nodes.iter().map(|&t| f(t)).collect();
        for t in [-0.9, 0.3, 2.7] {
            let v: f64 = g.basis(t).iter().zip(&vals).map(|(b, v)| b * v).sum();
            assert!((v - f(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenfunctions_carry_the_transmission() {
        let p = profile();
        let opts = StationaryOptions::default();
        let xs = [-300.0, -50.0, 0.0, 3.0, 300.0];
        let eta = 4.0;
        let plus = eigen_profile(&p, eta, Sign::Plus, &xs, &opts).unwrap();
        let minus = eigen_profile(&p, eta, Sign::Minus, &xs, &opts).unwrap();
        let t = scattering_matrix(&p, eta, &opts).unwrap().t;
        // far future eigenfunction: pure out-wave of unit size at the right
        assert!(
            (plus[4].v
                - C64::from_polar(
                    1.0,
                    p.eikonal_primitive(300.0, Sign::Plus).unwrap() / (2.0 * eta)
                ))
            .norm()
                < 1e-6
        );
        assert!(plus[0].u.norm() < 1e-12);
        // far past one: unit out-wave at the left, transmitted amplitude on the right
        assert!((minus[0].v - 1.0).norm() < 1e-10);
        assert!((minus[4].v.norm() - t.norm()).abs() < 1e-6);
    }

    #[test]
    fn free_images_are_the_packet() {
        let free = PotentialProfile::free(AngularMode::from_l(0.5).unwrap());
        let quad = SpatialQuadrature::panels(-40.0, 40.0, 1.0, 8).unwrap();
        let packet = WavePacket::bump(-1.0, 3.0, Channel::Out).unwrap();
        let imager = WaveImager::new(
            &free,
            2.0,
            Sign::Plus,
            (-1.0, 3.0),
            &quad,
            &WaveImageOptions::default(),
        )
        .unwrap();
        let img = imager.apply(&packet, &quad).unwrap();
        let direct = quad.sample(&packet);
        assert!(quad.distance(&img, &direct) < 1e-12);
    }

    #[test]
    fn images_are_isometric() {
        let p = profile();
        let quad = SpatialQuadrature::panels(-120.0, 120.0, 1.0, 8).unwrap();
        let packet = WavePacket::bump(-1.0, 3.0, Channel::Out)
            .unwrap()
            .normalized();
        let opts = WaveImageOptions::default();
        for sign in [Sign::Plus, Sign::Minus] {
            let img = WaveImager::new(&p, 3.0, sign, (-1.0, 3.0), &quad, &opts)
                .unwrap()
                .apply(&packet, &quad)
                .unwrap();
            assert!(
                (quad.norm_sqr(&img) - 1.0).abs() < 1e-6,
                "{}",
                quad.norm_sqr(&img)
            );
        }
    }

    #[test]
    fn stationary_and_spectral_forms_agree() {
        let p = profile();
        let quad = SpatialQuadrature::panels(-400.0, 400.0, 1.0, 8).unwrap();
        let psi1 = WavePacket::bump(0.25, 1.0, Channel::Out)
            .unwrap()
            .normalized();
        let psi2 = psi1.translated(3.0);
        let opts = WaveImageOptions::default();
        let f = f_out_stationary(&p, 5.0, &psi1, &psi2, &quad, &opts).unwrap();
        let t = TransmissionInterpolant::new(&p, 5.0, (0.25, 1.0), 16, &opts.stationary).unwrap();
        let g = t.f_out(&psi1, &psi2).unwrap();
        assert!((f - g).norm() < 1e-9, "{f} {g}");
    }
}
