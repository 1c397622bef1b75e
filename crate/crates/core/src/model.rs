//! Benchmark molecular models: Hamiltonian, dipoles and Lindblad jumps.
//!
//! Energies are angular frequencies with hbar = 1. Dipoles are dimensionless.

use alloc::format;
use alloc::vec::Vec;


use crate::diagram::DipoleKind;
use crate::operator::{pauli, Hermitian, Operator, QuantumState, Tensor};
use crate::{CMatrix, CVector, Error, Result, C64};

/// A Lindblad jump operator with its rate.
#[derive(Clone, Debug)]
pub struct Jump {
    pub operator: Operator,
    pub rate: f64,
}

/// Scale factors removed from the dipoles by [`ModelSystem::normalized`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleScale {
    pub electric: f64,
    pub magnetic: f64,
}

impl DipoleScale {
    pub fn of(&self, kind: DipoleKind) -> f64 {
        match kind {
            DipoleKind::Electric => self.electric,
            DipoleKind::Magnetic => self.magnetic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelSystem {
    h0: Hermitian,
    mu: Hermitian,
    mu_perp: Option<Hermitian>,
    m: Option<Hermitian>,
    jumps: Vec<Jump>,
    excited: Operator,
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl ModelSystem {
    /// Generic model. The excited manifold used by [`with_dephasing`] is
    /// everything orthogonal to the ground state of `h0`.
    ///
    /// [`with_dephasing`]: ModelSystem::with_dephasing
    pub fn new(h0: Operator, mu: Operator) -> Result<Self> {
        let h0 = Hermitian::new(h0)?;
        let mu = Hermitian::new(mu)?;
        check_dim(h0.dim(), mu.dim())?;
        let (_, idx) = h0.sorted_spectrum()[0];
        let g = h0.eigenvectors().column(idx).into_owned();
        let excited = Operator::new(CMatrix::identity(h0.dim(), h0.dim()) - &g * g.adjoint())?;
        Ok(ModelSystem {
            h0,
            mu,
            mu_perp: None,
            m: None,
            jumps: Vec::new(),
            excited,
        })
    }

    /// Two-level system `h0 = omega0 |e><e|`, `mu = sigma_x`.
    pub fn two_level(omega0: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::param("omega0", format!("must be positive, got {omega0}")));
        }
        Ok(ModelSystem {
            h0: Hermitian::new(Operator::diagonal(&[0.0, omega0]))?,
            mu: Hermitian::new(pauli::x())?,
            mu_perp: None,
            m: None,
            jumps: Vec::new(),
            excited: Operator::projector(2, 1),
        })
    }

    /// N-level ladder with nearest-neighbour dipoles.
    pub fn ladder(energies: &[f64], dipoles: &[f64]) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::param("energies", "at least one level is required"));
        }
        if dipoles.len() + 1 != energies.len() {
            return Err(Error::param(
                "dipoles",
                format!(
                    "expected {} nearest-level dipoles for {} levels, got {}",
                    energies.len() - 1,
                    energies.len(),
                    dipoles.len()
                ),
            ));
        }
        let n = energies.len();
        let mu = Operator::from_fn(n, |i, j| {
            if j == i + 1 {
                C64::new(dipoles[i], 0.0)
            } else if i == j + 1 {
                C64::new(dipoles[j], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })?;
        Ok(ModelSystem {
            h0: Hermitian::new(Operator::diagonal(energies))?,
            mu: Hermitian::new(mu)?,
            mu_perp: None,
            m: None,
            jumps: Vec::new(),
            excited: &Operator::identity(n) - &Operator::projector(n, 0),
        })
    }

    /// Two electronic states coupled linearly to one truncated harmonic mode.
    ///
    /// Basis ordering is electronic (outer) times vibrational (inner). The
    /// excited surface is displaced by `d` in the dimensionless coordinate
    /// `q = (a + a^dag)/sqrt(2)`, so the Huang-Rhys factor is `d^2/2`.
    pub fn displaced_oscillator(omega_e: f64, omega_v: f64, d: f64, n_fock: usize) -> Result<Self> {
        if n_fock < 2 {
            return Err(Error::param("n_fock", format!("must be at least 2, got {n_fock}")));
        }
        let a = Operator::from_fn(n_fock, |i, j| {
            if j == i + 1 {
                C64::new((j as f64).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })?;
        let number = &a.adjoint() * &a;
        let q = (&a + &a.adjoint()).scale(core::f64::consts::FRAC_1_SQRT_2);
        let pe = Operator::projector(2, 1);
        let vib_id = Operator::identity(n_fock);
        let h0 = &(&pe.scale(omega_e).tensor(&vib_id) + &Operator::identity(2).tensor(&number.scale(omega_v)))
            + &pe.tensor(&q).scale(omega_v * d);
        let mu = pauli::x().tensor(&vib_id);
        Ok(ModelSystem {
            h0: Hermitian::new(h0)?,
            mu: Hermitian::new(mu)?,
            mu_perp: None,
            m: None,
            jumps: Vec::new(),
            excited: pe.tensor(&vib_id),
        })
    }

    /// Ground state `|g>` and a degenerate pair `|+>`, `|->` at `omega0` with
    /// opposite rotatory strengths `+alpha` and `-alpha`.
    ///
    /// Basis order is `(g, +, -)`. Combine with [`ModelSystem::zeeman_field`]
    /// for a magnetic-circular-dichroism model.
    pub fn zeeman_triplet(omega0: f64, alpha: f64) -> Result<Self> {
        if !(omega0 > 0.0) {
            return Err(Error::param("omega0", format!("must be positive, got {omega0}")));
        }
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let zero = C64::new(0.0, 0.0);
        let mu = Operator::from_fn(3, |r, c| match (r, c) {
            (0, 1) | (1, 0) | (0, 2) | (2, 0) => one,
            _ => zero,
        })?;
        let m = Operator::from_fn(3, |r, c| match (r, c) {
            (1, 0) => i * alpha,
            (0, 1) => -i * alpha,
            (2, 0) => -i * alpha,
            (0, 2) => i * alpha,
            _ => zero,
        })?;
        let mut model = ModelSystem::ladder(&[0.0, omega0, omega0], &[0.0, 0.0])?;
        model.mu = Hermitian::new(mu)?;
        model.m = Some(Hermitian::new(m)?);
        Ok(model)
    }

    /// `beta (|+><+| - |-><-|)` for [`ModelSystem::zeeman_triplet`].
    pub fn zeeman_field(beta: f64) -> Operator {
        Operator::diagonal(&[0.0, beta, -beta])
    }

    pub fn with_magnetic(mut self, m: Operator) -> Result<Self> {
        let m = Hermitian::new(m)?;
        check_dim(self.dim(), m.dim())?;
        self.m = Some(m);
        Ok(self)
    }

    /// Dipole projected on the second, perpendicular lab axis.
    pub fn with_perpendicular_dipole(mut self, mu_perp: Operator) -> Result<Self> {
        let mu_perp = Hermitian::new(mu_perp)?;
        check_dim(self.dim(), mu_perp.dim())?;
        self.mu_perp = Some(mu_perp);
        Ok(self)
    }

    pub fn with_electric(mut self, mu: Hermitian) -> Result<Self> {
        check_dim(self.dim(), mu.dim())?;
        self.mu = mu;
        Ok(self)
    }

    pub fn with_jump(mut self, operator: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::param("rate", format!("must be non-negative, got {rate}")));
        }
        check_dim(self.dim(), operator.dim())?;
        self.jumps.push(Jump { operator, rate });
        Ok(self)
    }

    /// `h0 <- h0 + delta_h`.
    pub fn with_static_field(&self, delta_h: &Operator) -> Result<Self> {
        check_dim(self.dim(), delta_h.dim())?;
        let delta = Hermitian::new(delta_h.clone())?;
        let mut out = self.clone();
        out.h0 = self.h0.add(&delta)?;
        Ok(out)
    }

    /// Pure dephasing of electronic coherences: one jump equal to the
    /// projector onto the excited manifold.
    pub fn with_dephasing(&self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::param("gamma", format!("must be non-negative, got {gamma}")));
        }
        self.clone().with_jump(self.excited.clone(), gamma)
    }

    /// Copy with every dipole divided by its spectral norm. Zero dipoles are
    /// left alone (scale 1).
    pub fn normalized(&self) -> (ModelSystem, DipoleScale) {
        let scale_of = |h: &Hermitian| {
            let s = h.spectral_norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        };
        let electric = scale_of(&self.mu);
        let magnetic = self.m.as_ref().map_or(1.0, scale_of);
        let mut out = self.clone();
        out.mu = self.mu.scale(1.0 / electric);
        out.m = self.m.as_ref().map(|m| m.scale(1.0 / magnetic));
        out.mu_perp = self.mu_perp.as_ref().map(|m| m.scale(1.0 / scale_of(m)));
        (out, DipoleScale { electric, magnetic })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &Hermitian {
        &self.h0
    }

    pub fn mu(&self) -> &Hermitian {
        &self.mu
    }

    pub fn mu_perp(&self) -> Option<&Hermitian> {
        self.mu_perp.as_ref()
    }

    pub fn m(&self) -> Option<&Hermitian> {
        self.m.as_ref()
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn excited_projector(&self) -> &Operator {
        &self.excited
    }

    pub fn is_closed(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn dipole(&self, kind: DipoleKind) -> Result<&Hermitian> {
        match kind {
            DipoleKind::Electric => Ok(&self.mu),
            DipoleKind::Magnetic => self.m.as_ref().ok_or(Error::MissingMagneticDipole),
        }
    }

    /// Lowest eigenvector of `h0`.
    pub fn ground_state(&self) -> QuantumState {
        let (_, idx) = self.h0.sorted_spectrum()[0];
        let v: CVector = self.h0.eigenvectors().column(idx).into_owned();
        QuantumState::Pure(v)
    }

    /// Thermal state `exp(-h0/T)/Z` (`T` in the same units as `h0`).
    pub fn thermal_state(&self, temperature: f64) -> Result<QuantumState> {
        if !(temperature > 0.0) {
            return Err(Error::param("temperature", "must be positive"));
        }
        let e0 = self.h0.sorted_spectrum()[0].0;
        let rho = self
            .h0
            .apply_function(|e| C64::new((-(e - e0) / temperature).exp(), 0.0));
        let z = rho.trace();
        QuantumState::density(rho / z)
    }
}
