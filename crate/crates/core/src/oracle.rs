//! Direct operator-product evaluation, independent of the circuit path.
//!
//! Everything here builds explicit Heisenberg operators `U^dag(t) X U(t)` and
//! multiplies them out, so it is slow but shares no code with
//! [`crate::circuit`] beyond the operator layer.

use alloc::vec::Vec;

use crate::circuit::channel_superoperator;
use crate::diagram::{DiagramSet, DipoleKind, FeynmanDiagram, Side};
use crate::model::ModelSystem;
use crate::operator::QuantumState;
use crate::{CMatrix, Error, Result, C64};

fn heisenberg(model: &ModelSystem, x: &CMatrix, t: f64) -> CMatrix {
    let u = model.h0().evolution(t).into_matrix();
    u.adjoint() * x * u
}

fn check(model: &ModelSystem, diagram: &FeynmanDiagram, times: &[f64], rho0: &QuantumState) -> Result<()> {
    if times.len() != diagram.order() + 1 {
        return Err(Error::DimensionMismatch {
            expected: diagram.order() + 1,
            found: times.len(),
        });
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    Ok(())
}

// Tr(X_last ... X_first rho Y_first ... Y_last) for per-slot ket and bra
// operators.
fn sandwich(diagram: &FeynmanDiagram, rho: &CMatrix, mut op: impl FnMut(usize, Side) -> CMatrix) -> C64 {
    let n = rho.nrows();
    let mut left = CMatrix::identity(n, n);
    let mut right = CMatrix::identity(n, n);
    for it in diagram.interactions() {
        let x = op(it.slot, it.side);
        match it.side {
            Side::Ket => left = x * left,
            Side::Bra => right *= x,
        }
    }
    (left * rho * right).trace()
}

/// Diagram correlation function with the dipoles themselves.
pub fn correlation(model: &ModelSystem, diagram: &FeynmanDiagram, times: &[f64], rho0: &QuantumState) -> Result<C64> {
    check(model, diagram, times, rho0)?;
    let ops: Vec<CMatrix> = diagram
        .interactions()
        .iter()
        .map(|it| Ok(heisenberg(model, model.dipole(it.kind)?.matrix(), times[it.slot])))
        .collect::<Result<_>>()?;
    Ok(sandwich(diagram, &rho0.density_matrix(), |slot, _| ops[slot].clone()))
}

/// `Tr(B^dag K rho)` with Heisenberg `M(F)` gates: ket gates multiply from the
/// left, bra gates enter as `M^dag` on the right.
pub fn q_product(model: &ModelSystem, diagram: &FeynmanDiagram, times: &[f64], f: &[f64], rho0: &QuantumState) -> Result<C64> {
    check(model, diagram, times, rho0)?;
    if f.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: f.len(),
        });
    }
    let ops: Vec<CMatrix> = diagram
        .interactions()
        .iter()
        .map(|it| {
            let m = model.dipole(it.kind)?.evolution(f[it.slot]).into_matrix();
            Ok(heisenberg(model, &m, times[it.slot]))
        })
        .collect::<Result<_>>()?;
    Ok(sandwich(diagram, &rho0.density_matrix(), |slot, side| match side {
        Side::Ket => ops[slot].clone(),
        Side::Bra => ops[slot].adjoint(),
    }))
}

/// Same quantity for open dynamics, propagating the operator
/// `M_ket ... rho ... M_bra^dag` forward through the channel in the
/// Schroedinger picture. Reduces to [`q_product`] for closed models.
pub fn q_liouville(model: &ModelSystem, diagram: &FeynmanDiagram, times: &[f64], f: &[f64], rho0: &QuantumState) -> Result<C64> {
    check(model, diagram, times, rho0)?;
    let d = model.dim();
    let mut x = rho0.density_matrix();
    let mut now = 0.0;
    for it in diagram.interactions() {
        let dt = times[it.slot] - now;
        if dt < 0.0 {
            return Err(Error::NonAscendingTimes { slot: it.slot });
        }
        if dt > 0.0 {
            let phi = channel_superoperator(model, dt)?;
            let v = phi * crate::CVector::from_column_slice(x.as_slice());
            x = CMatrix::from_column_slice(d, d, v.as_slice());
        }
        now = times[it.slot];
        let m = model.dipole(it.kind)?.evolution(f[it.slot]).into_matrix();
        x = match it.side {
            Side::Ket => m * x,
            Side::Bra => x * m.adjoint(),
        };
    }
    Ok(x.trace())
}

/// `<X_n(t_n) [X_{n-1}(t_{n-1}), ... [X_0(t_0), rho]]>` evaluated recursively.
pub fn nested_commutator(model: &ModelSystem, kinds: &[DipoleKind], times: &[f64], rho0: &QuantumState) -> Result<C64> {
    if kinds.is_empty() || kinds.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: kinds.len().max(1),
            found: times.len(),
        });
    }
    let n = kinds.len() - 1;
    let mut x = rho0.density_matrix();
    for j in 0..n {
        let a = heisenberg(model, model.dipole(kinds[j])?.matrix(), times[j]);
        x = &a * &x - &x * &a;
    }
    let last = heisenberg(model, model.dipole(kinds[n])?.matrix(), times[n]);
    Ok((last * x).trace())
}

/// Weighted sum of [`correlation`] over a diagram set.
pub fn response(model: &ModelSystem, set: &DiagramSet, times: &[f64], rho0: &QuantumState) -> Result<C64> {
    set.evaluate(|d| correlation(model, d, times, rho0))
}
