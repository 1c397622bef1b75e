//! Gate-cost accounting: `Cost = C_U N_corr N_samples N_shots N_deriv`.
//!
//! Big-O constants are fixed to 1 except the per-run coefficient, so the
//! breakdown product equals the closed form
//! `2^{2n} / (eps^2 dw) (2 w_max / dw)^n eta^p` times `2 pi coeff` whenever
//! `eps^{-2}` and `2 w_max / dw` are integers.

use alloc::format;
use core::f64::consts::PI;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostParams {
    pub order: usize,
    pub omega_max: f64,
    pub delta_omega: f64,
    pub eps_shot: f64,
    pub eta: f64,
    pub poly_degree: f64,
    pub coeff: f64,
    /// `N_shots ~ 1/eps` instead of `1/eps^2`.
    pub amplitude_estimation: bool,
    /// Adds `ln(1/eps_sim)` to the per-run cost when set.
    pub eps_sim: Option<f64>,
}

impl CostParams {
    pub fn new(order: usize, omega_max: f64, delta_omega: f64, eps_shot: f64) -> Self {
        CostParams {
            order,
            omega_max,
            delta_omega,
            eps_shot,
            eta: 1.0,
            poly_degree: 2.0,
            coeff: 1.0,
            amplitude_estimation: false,
            eps_sim: None,
        }
    }

    pub fn with_system(mut self, eta: f64, poly_degree: f64, coeff: f64) -> Self {
        self.eta = eta;
        self.poly_degree = poly_degree;
        self.coeff = coeff;
        self
    }

    pub fn with_amplitude_estimation(mut self, on: bool) -> Self {
        self.amplitude_estimation = on;
        self
    }

    pub fn with_eps_sim(mut self, eps_sim: f64) -> Self {
        self.eps_sim = Some(eps_sim);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostBreakdown {
    pub n: usize,
    /// Record length `T = 2 pi / dw`.
    pub duration: f64,
    pub c_u: f64,
    pub n_corr: u64,
    pub samples_per_axis: u64,
    pub n_samples: f64,
    pub n_shots: u64,
    pub n_deriv: u64,
    pub total: f64,
    /// The asymptotic expression, for comparison with `total`.
    pub closed_form: f64,
    pub amplitude_estimation: bool,
}

impl CostBreakdown {
    fn recompute(&mut self) {
        self.total = self.c_u * self.n_corr as f64 * self.n_samples * self.n_shots as f64 * self.n_deriv as f64;
    }

    /// `total / closed_form`; `2 pi coeff` for integral grids and shot counts.
    pub fn constant_factor(&self) -> f64 {
        self.total / self.closed_form
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {x}")))
    }
}

pub fn cost_estimate(p: &CostParams) -> Result<CostBreakdown> {
    if p.order == 0 || p.order > 30 {
        return Err(Error::param("n", "order must be between 1 and 30"));
    }
    positive("omega_max", p.omega_max)?;
    positive("delta_omega", p.delta_omega)?;
    positive("eps_shot", p.eps_shot)?;
    positive("eta", p.eta)?;
    positive("coeff", p.coeff)?;
    if !(p.poly_degree >= 0.0) || !p.poly_degree.is_finite() {
        return Err(Error::param("poly_degree", "must be non-negative"));
    }
    if let Some(e) = p.eps_sim {
        positive("eps_sim", e)?;
    }
    let n = p.order;
    let ratio = 2.0 * p.omega_max / p.delta_omega;
    let samples_per_axis = libm::ceil(ratio * (1.0 - 1e-12)).max(1.0) as u64;
    let inv_eps = 1.0 / p.eps_shot;
    let shots_f = if p.amplitude_estimation { inv_eps } else { inv_eps * inv_eps };
    let n_shots = libm::ceil(shots_f * (1.0 - 1e-12)).max(1.0) as u64;
    let duration = 2.0 * PI / p.delta_omega;
    let poly = libm::pow(p.eta, p.poly_degree);
    let log_term = p.eps_sim.map_or(0.0, |e| libm::log(1.0 / e).max(0.0));
    let mut b = CostBreakdown {
        n,
        duration,
        c_u: p.coeff * duration * poly + log_term,
        n_corr: 1u64 << (n - 1),
        samples_per_axis,
        n_samples: libm::pow(samples_per_axis as f64, n as f64),
        n_shots,
        n_deriv: 1u64 << (n + 1),
        total: 0.0,
        closed_form: libm::pow(4.0, n as f64) * shots_f / p.delta_omega * libm::pow(ratio, n as f64) * poly,
        amplitude_estimation: p.amplitude_estimation,
    };
    b.recompute();
    Ok(b)
}

/// Replaces `N_corr` by the number of diagrams left after a filter.
pub fn apply_diagram_filter_count(base: &CostBreakdown, surviving: u64) -> Result<CostBreakdown> {
    if surviving == 0 || surviving > base.n_corr {
        return Err(Error::param(
            "surviving",
            format!("must be between 1 and {}, got {surviving}", base.n_corr),
        ));
    }
    let mut b = *base;
    b.closed_form *= surviving as f64 / base.n_corr as f64;
    b.n_corr = surviving;
    b.recompute();
    Ok(b)
}
