//! Time-domain propagation for `H(lambda) = Gamma^1 (D_x + lambda) + a_l Gamma^2`
//! on a periodic grid: Strang splitting with an exact Fourier free step and an
//! exact pointwise potential step.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::packet::{Channel, WavePacket};
use crate::potential::{PotentialProfile, Sign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
    pub dt: f64,
    /// Mass outside `|x| <= monitor_fraction * half_width` counts as boundary mass.
    pub monitor_fraction: f64,
    pub boundary_limit: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, points: usize, dt: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Grid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::Grid(format!(
                "point count must be a power of two >= 16, got {points}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Grid(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            half_width,
            points,
            dt,
            monitor_fraction: 0.5,
            boundary_limit: 1e-12,
        })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    /// Wavenumber of FFT bin `m`.
    pub fn k(&self, m: usize) -> f64 {
        let n = self.points as i64;
        let m = m as i64;
        let signed = if m < n / 2 { m } else { m - n };
        PI * signed as f64 / self.half_width
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.points as f64 / (2.0 * self.half_width)
    }

    /// Resolution rule `pi N / (2L) >= 4 (xi_max + lambda)`.
    pub fn check_resolution(&self, xi_max: f64, lambda: f64) -> Result<()> {
        let need = 4.0 * (xi_max.abs() + lambda.abs());
        if self.nyquist() < need {
            return Err(Error::Grid(format!(
                "grid resolves |k| <= {:.4}, need {:.4} for xi_max = {xi_max}, lambda = {lambda}",
                self.nyquist(),
                need
            )));
        }
        Ok(())
    }
}

/// Spinor field sampled on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: GridSpec,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
}

impl SpinorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            u: vec![C64::new(0.0, 0.0); grid.points],
            v: vec![C64::new(0.0, 0.0); grid.points],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        let s: f64 = self.u.iter().chain(&self.v).map(|z| z.norm_sqr()).sum();
        s * self.grid.dx()
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &SpinorField) -> C64 {
        let s: C64 = self
            .u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.dx()
    }

    pub fn distance(&self, other: &SpinorField) -> f64 {
        let s: f64 = self
            .u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &SpinorField) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn boundary_mass(&self) -> f64 {
        let edge = self.grid.monitor_fraction * self.grid.half_width;
        let s: f64 = (0..self.grid.points)
            .filter(|&j| self.grid.x(j).abs() > edge)
            .map(|j| self.u[j].norm_sqr() + self.v[j].norm_sqr())
            .sum();
        s * self.grid.dx()
    }

    pub fn check_boundary(&self) -> Result<()> {
        let mass = self.boundary_mass();
        if mass > self.grid.boundary_limit {
            return Err(Error::BoundaryMass {
                mass,
                limit: self.grid.boundary_limit,
            });
        }
        Ok(())
    }

    /// `<x>` over the field divided by its norm.
    pub fn mean_position(&self) -> f64 {
        let s: f64 = (0..self.grid.points)
            .map(|j| self.grid.x(j) * (self.u[j].norm_sqr() + self.v[j].norm_sqr()))
            .sum();
        s * self.grid.dx() / self.norm_sqr()
    }

    /// Samples a packet exactly through its Fourier series on the grid.
    pub fn from_packet(packet: &WavePacket, grid: GridSpec) -> Result<Self> {
        let (lo, hi) = packet.support();
        if hi.abs().max(lo.abs()) > grid.nyquist() {
            return Err(Error::Grid(format!(
                "packet support [{lo}, {hi}] exceeds grid Nyquist {}",
                grid.nyquist()
            )));
        }
        let n = grid.points;
        let scale = (2.0 * PI).sqrt() / (2.0 * grid.half_width);
        let mut coeffs: Vec<C64> = (0..n)
            .map(|m| {
                let k = grid.k(m);
                packet.profile(k) * scale * C64::from_polar(1.0, -k * grid.half_width)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut coeffs);
        let mut field = Self::zeros(grid);
        match packet.channel() {
            Channel::Out => field.v = coeffs,
            Channel::In => field.u = coeffs,
        }
        field.check_boundary()?;
        Ok(field)
    }

    /// Closed-form transport of a packet, evaluated pointwise.
    pub fn free_closed_form(packet: &WavePacket, grid: GridSpec, t: f64) -> Self {
        let mut field = Self::zeros(grid);
        for j in 0..grid.points {
            let s = packet.free_evolved_at(grid.x(j), t);
            field.u[j] = s.u;
            field.v[j] = s.v;
        }
        field
    }
}

struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Applies `exp(-i t Gamma^1 (k + lambda))` to the field.
    fn free_step(&self, field: &mut SpinorField, t: f64, lambda: f64) {
        let grid = field.grid;
        let n = grid.points as f64;
        self.forward.process(&mut field.u);
        self.forward.process(&mut field.v);
        for m in 0..grid.points {
            let ph = C64::from_polar(1.0 / n, t * (grid.k(m) + lambda));
            field.u[m] *= ph;
            field.v[m] *= ph.conj();
        }
        self.inverse.process(&mut field.u);
        self.inverse.process(&mut field.v);
    }
}

/// Exact free evolution `exp(-i t Gamma^1 (D_x + lambda))` by Fourier phases.
pub fn free_evolve_spectral(field: &SpinorField, t: f64, lambda: f64) -> SpinorField {
    let mut out = field.clone();
    Spectral::new(field.grid.points).free_step(&mut out, t, lambda);
    out
}

/// Free transport of a packet: the Fourier route on the packet's grid.
pub fn free_evolve(packet: &WavePacket, grid: GridSpec, t: f64) -> Result<SpinorField> {
    let f = SpinorField::from_packet(packet, grid)?;
    let out = free_evolve_spectral(&f, t, 0.0);
    out.check_boundary()?;
    Ok(out)
}

/// Strang-split propagator for one potential and one `lambda`.
pub struct Propagator {
    grid: GridSpec,
    lambda: f64,
    spectral: Spectral,
    potential: Vec<f64>,
}

impl Propagator {
    pub fn new(profile: &PotentialProfile, lambda: f64, grid: GridSpec) -> Result<Self> {
        let potential = (0..grid.points)
            .map(|j| profile.a_l(grid.x(j)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            grid,
            lambda,
            spectral: Spectral::new(grid.points),
            potential,
        })
    }

    /// `exp(-i h a_l Gamma^2) = cos(h a_l) - i sin(h a_l) Gamma^2`.
    fn potential_step(&self, field: &mut SpinorField, h: f64) {
        for j in 0..self.grid.points {
            let (s, c) = (h * self.potential[j]).sin_cos();
            let (u, v) = (field.u[j], field.v[j]);
            let is = C64::new(0.0, s);
            field.u[j] = u * c + is * v;
            field.v[j] = is * u + v * c;
        }
    }

    /// Approximates `exp(-i t H(lambda)) state`; negative `t` runs backward.
    pub fn evolve(&self, state: &SpinorField, t: f64) -> Result<SpinorField> {
        if state.grid != self.grid {
            return Err(Error::Grid(
                "state grid differs from propagator grid".into(),
            ));
        }
        let steps = (t.abs() / self.grid.dt)
            .round()
            .max(if t == 0.0 { 0.0 } else { 1.0 }) as usize;
        let mut field = state.clone();
        if steps == 0 {
            return Ok(field);
        }
        let h = t / steps as f64;
        self.potential_step(&mut field, 0.5 * h);
        for k in 0..steps {
            self.spectral.free_step(&mut field, h, self.lambda);
            let last = k + 1 == steps;
            self.potential_step(&mut field, if last { 0.5 * h } else { h });
            if k % 64 == 63 || last {
                field.check_boundary()?;
            }
        }
        Ok(field)
    }
}

/// `exp(-i t_total H(lambda)) state` with time step `dt`.
pub fn full_evolve(
    profile: &PotentialProfile,
    lambda: f64,
    state: &SpinorField,
    t_total: f64,
    dt: f64,
) -> Result<SpinorField> {
    let grid = GridSpec { dt, ..state.grid };
    let prop = Propagator::new(profile, lambda, grid)?;
    let s = SpinorField {
        grid,
        ..state.clone()
    };
    let mut out = prop.evolve(&s, t_total)?;
    out.grid = state.grid;
    Ok(out)
}

fn check_packet(packet: &WavePacket, grid: &GridSpec, lambda: f64) -> Result<()> {
    if packet.channel() != Channel::Out {
        return Err(Error::Domain(
            "wave operators act on out-channel packets here".into(),
        ));
    }
    if lambda < 0.0 {
        return Err(Error::Domain(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let (lo, hi) = packet.support();
    grid.check_resolution(lo.abs().max(hi.abs()), lambda)
}

/// `exp(i T H(lambda)) exp(-i T (D_x + lambda)) packet` with `T = +T` for
/// `Sign::Plus` and `-T` for `Sign::Minus`.
pub fn wave_operator_apply(
    profile: &PotentialProfile,
    lambda: f64,
    packet: &WavePacket,
    grid: GridSpec,
    t: f64,
    sign: Sign,
) -> Result<SpinorField> {
    check_packet(packet, &grid, lambda)?;
    let prop = Propagator::new(profile, lambda, grid)?;
    let s = sign.as_f64() * t.abs();
    let start = SpinorField::from_packet(packet, grid)?;
    let freed = free_evolve_spectral(&start, s, lambda);
    freed.check_boundary()?;
    prop.evolve(&freed, -s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergedImage {
    pub field: SpinorField,
    pub t: f64,
    pub cauchy_residual: f64,
}

/// Runs at `T` and `2T` and reports `||W(2T) - W(T)||`; errors above `tol`.
pub fn wave_operator_converged(
    profile: &PotentialProfile,
    lambda: f64,
    packet: &WavePacket,
    grid: GridSpec,
    t: f64,
    sign: Sign,
    tol: f64,
) -> Result<ConvergedImage> {
    let a = wave_operator_apply(profile, lambda, packet, grid, t, sign)?;
    let b = wave_operator_apply(profile, lambda, packet, grid, 2.0 * t, sign)?;
    let residual = a.distance(&b);
    if residual > tol {
        return Err(Error::NotConverged { residual, tol });
    }
    Ok(ConvergedImage {
        field: b,
        t: 2.0 * t,
        cauchy_residual: residual,
    })
}

/// `<x>/t` of `exp(-i t H(lambda)) state` at each requested time.
pub fn asymptotic_velocity_estimate(
    profile: &PotentialProfile,
    lambda: f64,
    state: &SpinorField,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let prop = Propagator::new(profile, lambda, state.grid)?;
    let x0 = state.mean_position();
    let mut field = state.clone();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        field = prop.evolve(&field, t - now)?;
        now = t;
        out.push((t, (field.mean_position() - x0) / t));
    }
    Ok(out)
}

/// `F_out(lambda) = <W^-(lambda) psi1, W^+(lambda) psi2>` from time-domain
/// wave operators at horizon `T`.
pub fn f_out_time_domain(
    profile: &PotentialProfile,
    lambda: f64,
    psi1: &WavePacket,
    psi2: &WavePacket,
    grid: GridSpec,
    t: f64,
) -> Result<C64> {
    let minus = wave_operator_apply(profile, lambda, psi1, grid, t, Sign::Minus)?;
    let plus = wave_operator_apply(profile, lambda, psi2, grid, t, Sign::Plus)?;
    Ok(minus.inner(&plus))
}
