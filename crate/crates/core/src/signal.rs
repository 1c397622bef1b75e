//! Fields, convolution and spectra.
//!
//! Transforms use the `e^{+i w t}` kernel over `t >= 0` with the trapezoid
//! half weight at `t = 0`. A spectrum with range `omega_max` and resolution
//! `delta_omega` needs `N = 2 omega_max / delta_omega` samples at
//! `dt = pi / omega_max`, i.e. a record of length `T = 2 pi / delta_omega`.
//! The frequency axis is `[-omega_max, omega_max)` in steps of
//! `delta_omega / padding`.
//!
//! Absorption is the real part of the transform of `R^(1)`; the overall
//! constant of the perturbation expansion is dropped, so spectra are in
//! arbitrary units.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::catalog::catalog;
use crate::estimator::{response_grid, EstimatorOptions, GridAxis, GridSpec, ResponseGrid};
use crate::model::ModelSystem;
use crate::operator::{Operator, QuantumState};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Envelope {
    Delta,
    /// Unit-area Gaussian with standard deviation `width`.
    Gaussian { width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    Parallel,
    Perpendicular,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    pub center: f64,
    pub envelope: Envelope,
    pub amplitude: f64,
    pub polarization: Polarization,
}

impl Pulse {
    pub fn delta(center: f64, amplitude: f64) -> Self {
        Pulse {
            center,
            envelope: Envelope::Delta,
            amplitude,
            polarization: Polarization::Parallel,
        }
    }

    pub fn gaussian(center: f64, width: f64, amplitude: f64) -> Self {
        Pulse {
            center,
            envelope: Envelope::Gaussian { width },
            amplitude,
            polarization: Polarization::Parallel,
        }
    }
}

/// A sequence of pulses with non-decreasing centers.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    pulses: Vec<Pulse>,
}

impl FieldSpec {
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        for (i, p) in pulses.iter().enumerate() {
            if !p.center.is_finite() || !p.amplitude.is_finite() {
                return Err(Error::param("field", format!("pulse {i} has a non-finite parameter")));
            }
            if let Envelope::Gaussian { width } = p.envelope {
                if !(width > 0.0) || !width.is_finite() {
                    return Err(Error::param("field", format!("pulse {i} width must be positive")));
                }
            }
            if i > 0 && p.center < pulses[i - 1].center {
                return Err(Error::param("field", "pulse centers must be non-decreasing"));
            }
        }
        Ok(FieldSpec { pulses })
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn is_zero(&self) -> bool {
        self.pulses.iter().all(|p| p.amplitude == 0.0)
    }

    /// Smooth part of `E(t)`, zero for `t < 0`. Delta pulses are not included.
    pub fn smooth(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.pulses
            .iter()
            .map(|p| match p.envelope {
                Envelope::Delta => 0.0,
                Envelope::Gaussian { width } => {
                    let s = (t - p.center) / width;
                    p.amplitude * libm::exp(-0.5 * s * s) / (width * libm::sqrt(2.0 * PI))
                }
            })
            .sum()
    }
}

/// Uniformly sampled complex signal starting at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub step: f64,
    pub values: Vec<C64>,
}

impl TimeSeries {
    pub fn new(step: f64, values: Vec<C64>) -> Self {
        TimeSeries { step, values }
    }

    /// A first-order response grid read as a function of its delay.
    pub fn from_grid(grid: &ResponseGrid) -> Result<Self> {
        if grid.order != 1 || grid.axes[0].offset != 0.0 {
            return Err(Error::GridMismatch("need a first-order grid starting at zero delay".into()));
        }
        Ok(TimeSeries::new(grid.axes[0].step, grid.values.clone()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }
}

fn common_step(grid: &ResponseGrid) -> Result<f64> {
    let step = grid
        .axes
        .iter()
        .find(|a| a.count > 1)
        .map(|a| a.step)
        .ok_or_else(|| Error::GridMismatch("convolution needs at least one scanned delay".into()))?;
    for (i, a) in grid.axes.iter().enumerate() {
        if a.offset != 0.0 || (a.count > 1 && (a.step - step).abs() > 1e-12 * step) {
            return Err(Error::GridMismatch(format!(
                "convolution needs every delay axis to start at 0 with step {step} (axis {i})"
            )));
        }
    }
    Ok(step)
}

fn grid_index(x: f64, step: f64) -> Option<usize> {
    let k = libm::round(x / step);
    if k >= 0.0 && (x - k * step).abs() <= 1e-9 * step.max(x.abs()) {
        Some(k as usize)
    } else {
        None
    }
}

/// Nested convolution `P(t) = int R(tau_1..tau_n) prod_j E(t - tau_j - ... - tau_n)`
/// on the grid of `r`, sampled at `t = m dt` for `m` below the length of the
/// last delay axis. Delta-only fields sample `R` directly.
pub fn convolve(r: &ResponseGrid, field: &FieldSpec) -> Result<TimeSeries> {
    let dt = common_step(r)?;
    let n = r.order;
    let out_len = r.axes[n - 1].count;
    let support = (out_len - 1) as f64 * dt;
    for (i, p) in field.pulses().iter().enumerate() {
        if p.center < 0.0 || p.center > support {
            return Err(Error::GridMismatch(format!(
                "pulse {i} at {} lies outside the grid support [0, {support}]",
                p.center
            )));
        }
        if p.envelope == Envelope::Delta && grid_index(p.center, dt).is_none() {
            return Err(Error::GridMismatch(format!("delta pulse {i} at {} is off the time grid", p.center)));
        }
    }
    let shape = r.shape();
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }

    if field.pulses().iter().all(|p| p.envelope == Envelope::Delta) {
        let centers: Vec<(usize, f64)> = field
            .pulses()
            .iter()
            .map(|p| (grid_index(p.center, dt).unwrap(), p.amplitude))
            .collect();
        let mut values = vec![C64::new(0.0, 0.0); out_len];
        // Every time-ordered assignment of pulses to the n interactions.
        let mut choice = vec![0usize; n];
        loop {
            let ordered = choice.windows(2).all(|w| centers[w[0]].0 <= centers[w[1]].0);
            if ordered {
                let amp: f64 = choice.iter().map(|&p| centers[p].1).product();
                let mut base = 0usize;
                let mut inside = true;
                for i in 0..n - 1 {
                    let k = centers[choice[i + 1]].0 - centers[choice[i]].0;
                    if k >= shape[i] {
                        inside = false;
                    }
                    base += k * strides[i];
                }
                let start = centers[choice[n - 1]].0;
                if inside {
                    for (m, v) in values.iter_mut().enumerate().skip(start) {
                        let k = m - start;
                        if k < shape[n - 1] {
                            *v += r.values[base + k] * amp;
                        }
                    }
                }
            }
            let mut i = 0;
            while i < n {
                choice[i] += 1;
                if choice[i] < centers.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == n || centers.is_empty() {
                break;
            }
        }
        return Ok(TimeSeries::new(dt, values));
    }

    // Field on the grid; delta pulses become discrete deltas of height A/dt.
    let mut e: Vec<f64> = (0..out_len).map(|q| field.smooth(q as f64 * dt)).collect();
    for p in field.pulses().iter().filter(|p| p.envelope == Envelope::Delta) {
        e[grid_index(p.center, dt).unwrap()] += p.amplitude / dt;
    }
    let weight = libm::pow(dt, n as f64);
    let values = (0..out_len)
        .map(|m| nested_sum(r, &e, &shape, &strides, n - 1, m, 0, 1.0) * weight)
        .collect();
    Ok(TimeSeries::new(dt, values))
}

// Sums over delays of axes `0..=axis`, with `remaining` grid steps left before
// the interaction of axis `axis + 1` (the output time for the last axis).
#[allow(clippy::too_many_arguments)]
fn nested_sum(r: &ResponseGrid, e: &[f64], shape: &[usize], strides: &[usize], axis: usize, remaining: usize, base: usize, product: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..shape[axis].min(remaining + 1) {
        let at = remaining - k;
        let p = product * e[at];
        if p == 0.0 {
            continue;
        }
        let idx = base + k * strides[axis];
        if axis == 0 {
            acc += r.values[idx] * p;
        } else {
            acc += nested_sum(r, e, shape, strides, axis - 1, at, idx, p);
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    None,
    /// `exp(-t / T_w)` with `T_w = T / 3`.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSpec {
    pub omega_max: f64,
    pub delta_omega: f64,
    pub window: Window,
    /// Frequency oversampling, equivalent to zero padding the record.
    pub padding: usize,
}

impl SpectrumSpec {
    pub fn new(omega_max: f64, delta_omega: f64) -> Result<Self> {
        let spec = SpectrumSpec {
            omega_max,
            delta_omega,
            window: Window::Exponential,
            padding: 1,
        };
        spec.samples()?;
        Ok(spec)
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    pub fn with_padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    /// `N = 2 omega_max / delta_omega`; must be a positive even integer so
    /// that bins sit on multiples of `delta_omega`.
    pub fn samples(&self) -> Result<usize> {
        if !(self.omega_max > 0.0) || !(self.delta_omega > 0.0) || !self.omega_max.is_finite() {
            return Err(Error::param("spectrum", "omega_max and delta_omega must be positive"));
        }
        let ratio = 2.0 * self.omega_max / self.delta_omega;
        let n = libm::round(ratio);
        if (ratio - n).abs() > 1e-9 * ratio || n < 2.0 || !(n as usize).is_multiple_of(2) {
            return Err(Error::param(
                "spectrum",
                format!("2 omega_max / delta_omega = {ratio} must be an even integer"),
            ));
        }
        if self.padding == 0 {
            return Err(Error::param("spectrum", "padding must be at least 1"));
        }
        Ok(n as usize)
    }

    /// `dt = pi / omega_max`.
    pub fn time_step(&self) -> f64 {
        PI / self.omega_max
    }

    /// `T = 2 pi / delta_omega`.
    pub fn duration(&self) -> f64 {
        2.0 * PI / self.delta_omega
    }

    /// Delay axis this spectrum needs.
    pub fn time_axis(&self) -> Result<GridAxis> {
        Ok(GridAxis::scanned(self.time_step(), self.samples()?))
    }

    pub fn frequency_axis(&self) -> Result<FrequencyAxis> {
        self.samples()?;
        Ok(FrequencyAxis {
            omega_max: self.omega_max,
            delta_omega: self.delta_omega,
            padding: self.padding,
        })
    }

    fn check_series(&self, step: f64, len: usize) -> Result<usize> {
        let n = self.samples()?;
        let dt = self.time_step();
        if (step - dt).abs() > 1e-9 * dt {
            return Err(Error::GridMismatch(format!("time step {step} does not match pi/omega_max = {dt}")));
        }
        if len != n {
            return Err(Error::GridMismatch(format!("{len} samples, spectrum needs {n}")));
        }
        Ok(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyAxis {
    pub omega_max: f64,
    pub delta_omega: f64,
    pub padding: usize,
}

impl FrequencyAxis {
    pub fn len(&self) -> usize {
        libm::round(2.0 * self.omega_max / self.delta_omega) as usize * self.padding
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.delta_omega / self.padding as f64
    }

    pub fn value(&self, j: usize) -> f64 {
        -self.omega_max + j as f64 * self.spacing()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.value(j)).collect()
    }

    /// Bin closest to `omega`.
    pub fn index_of(&self, omega: f64) -> usize {
        let j = libm::round((omega + self.omega_max) / self.spacing());
        (j.max(0.0) as usize).min(self.len() - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumKind {
    Absorption,
    TwoD,
    LinearDichroism,
    CircularDichroism,
    MagneticCircularDichroism,
    Transform,
}

/// Spectrum on one or more frequency axes, row-major (last axis fastest).
/// Real-valued spectra keep a zero imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub kind: SpectrumKind,
    pub axes: Vec<FrequencyAxis>,
    pub values: Vec<C64>,
}

impl Spectrum {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn get2(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.axes[1].len() + j]
    }

    /// Index of the largest `|value|` (or real part for real spectra).
    pub fn argmax_by(&self, key: impl Fn(C64) -> f64) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if key(*v) > key(self.values[best]) {
                best = i;
            }
        }
        best
    }
}

/// Window weights with the half weight at `t = 0` folded in.
fn weights(n: usize, dt: f64, window: Window) -> Vec<f64> {
    let tw = n as f64 * dt / 3.0;
    (0..n)
        .map(|k| {
            let w = match window {
                Window::None => 1.0,
                Window::Exponential => libm::exp(-(k as f64) * dt / tw),
            };
            if k == 0 {
                0.5 * w
            } else {
                w
            }
        })
        .collect()
}

// exp(i w_j t_k) = (-1)^k exp(2 pi i j k / (N p)).
struct Kernel {
    twiddle: Vec<C64>,
}

impl Kernel {
    fn new(m: usize) -> Self {
        let twiddle = (0..m)
            .map(|q| {
                let a = 2.0 * PI * q as f64 / m as f64;
                C64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Kernel { twiddle }
    }

    fn transform(&self, x: &[C64], w: &[f64], dt: f64, out: &mut [C64]) {
        let m = self.twiddle.len();
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (k, (&xk, &wk)) in x.iter().zip(w).enumerate() {
                let sign = if k % 2 == 0 { wk } else { -wk };
                acc += xk * self.twiddle[(j * k) % m] * sign;
            }
            *o = acc * dt;
        }
    }
}

/// One-sided transform `dt sum_k w_k x_k e^{i w t_k}` on the spectrum axis.
pub fn one_sided_transform(series: &TimeSeries, spec: &SpectrumSpec) -> Result<Spectrum> {
    let n = spec.check_series(series.step, series.len())?;
    let axis = spec.frequency_axis()?;
    let kernel = Kernel::new(n * spec.padding);
    let w = weights(n, series.step, spec.window);
    let mut out = vec![C64::new(0.0, 0.0); axis.len()];
    kernel.transform(&series.values, &w, series.step, &mut out);
    Ok(Spectrum {
        kind: SpectrumKind::Transform,
        axes: vec![axis],
        values: out,
    })
}

/// Absorption: real part of the one-sided transform of `R^(1)` (or of a
/// polarization series).
pub fn absorption_spectrum(series: &TimeSeries, spec: &SpectrumSpec) -> Result<Spectrum> {
    let mut s = one_sided_transform(series, spec)?;
    s.values.iter_mut().for_each(|v| *v = C64::new(v.re, 0.0));
    s.kind = SpectrumKind::Absorption;
    Ok(s)
}

/// Complex 2D spectrum over `(tau_1, tau_3)` at the `tau2_index`-th value of
/// `tau_2`. Both delays use `spec`. Output rows are `omega_1`, columns
/// `omega_3`.
pub fn twod_spectrum(r3: &ResponseGrid, tau2_index: usize, spec: &SpectrumSpec) -> Result<Spectrum> {
    if r3.order != 3 {
        return Err(Error::GridMismatch(format!("2D spectrum needs a third-order grid, got order {}", r3.order)));
    }
    if tau2_index >= r3.axes[1].count {
        return Err(Error::GridMismatch(format!("tau_2 index {tau2_index} out of range")));
    }
    let (a1, a3) = (r3.axes[0], r3.axes[2]);
    if a1.offset != 0.0 || a3.offset != 0.0 {
        return Err(Error::GridMismatch("tau_1 and tau_3 must start at zero".into()));
    }
    let n1 = spec.check_series(a1.step, a1.count)?;
    let n3 = spec.check_series(a3.step, a3.count)?;
    let axis = spec.frequency_axis()?;
    let m = axis.len();
    let kernel = Kernel::new(n1 * spec.padding);
    let w1 = weights(n1, a1.step, spec.window);
    let w3 = weights(n3, a3.step, spec.window);
    // Transform along tau_3 for every tau_1, then along tau_1.
    let mut half = vec![C64::new(0.0, 0.0); n1 * m];
    for i in 0..n1 {
        let row: Vec<C64> = (0..n3).map(|k| r3.get(&[i, tau2_index, k])).collect();
        kernel.transform(&row, &w3, a3.step, &mut half[i * m..(i + 1) * m]);
    }
    let mut values = vec![C64::new(0.0, 0.0); m * m];
    let mut col = vec![C64::new(0.0, 0.0); n1];
    let mut out = vec![C64::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..n1 {
            col[i] = half[i * m + j];
        }
        kernel.transform(&col, &w1, a1.step, &mut out);
        for (i1, v) in out.iter().enumerate() {
            values[i1 * m + j] = *v;
        }
    }
    Ok(Spectrum {
        kind: SpectrumKind::TwoD,
        axes: vec![axis, axis],
        values,
    })
}

/// Full two-sided DFT `X_j = sum_k x_k e^{-2 pi i jk/N}`.
pub fn dft(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let kernel = Kernel::new(n.max(1));
    (0..n)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(k, &xk)| xk * kernel.twiddle[(j * k) % n].conj())
                .sum()
        })
        .collect()
}

/// `R^(1)` on the time axis of `spec`, then its absorption spectrum.
pub fn linear_absorption(model: &ModelSystem, rho0: &QuantumState, spec: &SpectrumSpec, options: &EstimatorOptions) -> Result<Spectrum> {
    let grid = GridSpec::new(vec![spec.time_axis()?]);
    let r = response_grid(&catalog("linear_absorption")?.set, grid, options, model, rho0)?;
    absorption_spectrum(&TimeSeries::from_grid(&r)?, spec)
}

/// `Im` of the one-sided transform of the rotatory response (catalog `cd`).
pub fn circular_dichroism(series: &TimeSeries, spec: &SpectrumSpec) -> Result<Spectrum> {
    let mut s = one_sided_transform(series, spec)?;
    s.values.iter_mut().for_each(|v| *v = C64::new(v.im, 0.0));
    s.kind = SpectrumKind::CircularDichroism;
    Ok(s)
}

/// Pointwise `a - b` of two spectra on the same axes.
pub fn difference(a: &Spectrum, b: &Spectrum, kind: SpectrumKind) -> Result<Spectrum> {
    if a.axes != b.axes {
        return Err(Error::GridMismatch("spectra live on different frequency axes".into()));
    }
    Ok(Spectrum {
        kind,
        axes: a.axes.clone(),
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Differential {
    /// Parallel minus perpendicular dipole absorption.
    Linear,
    /// `Im` of the transform of `<mu(t)[m(0), rho]> - <m(t)[mu(0), rho]>`.
    Circular,
    /// Circular dichroism with `h0 + field`.
    MagneticCircular { field: Operator },
}

pub fn differential_spectrum(kind: &Differential, model: &ModelSystem, rho0: &QuantumState, spec: &SpectrumSpec, options: &EstimatorOptions) -> Result<Spectrum> {
    match kind {
        Differential::Linear => {
            let perp = model
                .mu_perp()
                .ok_or_else(|| Error::param("mu_perp", "linear dichroism needs a perpendicular dipole"))?
                .clone();
            // Both runs share one scale so the difference is meaningful.
            let opts = options.clone().with_normalize(false);
            let par = linear_absorption(model, rho0, spec, &opts)?;
            let per = linear_absorption(&model.clone().with_electric(perp)?, rho0, spec, &opts)?;
            difference(&par, &per, SpectrumKind::LinearDichroism)
        }
        Differential::Circular | Differential::MagneticCircular { .. } => {
            let (model, out_kind) = match kind {
                Differential::MagneticCircular { field } => (model.with_static_field(field)?, SpectrumKind::MagneticCircularDichroism),
                _ => (model.clone(), SpectrumKind::CircularDichroism),
            };
            model.dipole(crate::diagram::DipoleKind::Magnetic)?;
            let grid = GridSpec::new(vec![spec.time_axis()?]);
            let r = response_grid(&catalog("cd")?.set, grid, options, &model, rho0)?;
            let mut s = circular_dichroism(&TimeSeries::from_grid(&r)?, spec)?;
            s.kind = out_kind;
            Ok(s)
        }
    }
}
