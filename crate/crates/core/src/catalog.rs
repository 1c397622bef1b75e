//! Canned diagram sets for common spectroscopies.
//!
//! Delays are `tau_i = t_i - t_{i-1}` for `i = 1..=n`, with `t_0 = 0`. Each
//! entry says which delays are scanned and which are pinned to a value.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagram::{expand_with_kinds, DiagramSet, DipoleKind, FeynmanDiagram, Side};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DelayAxis {
    Scanned,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayStructure {
    pub axes: Vec<DelayAxis>,
}

impl DelayStructure {
    pub fn all_scanned(n: usize) -> Self {
        DelayStructure {
            axes: vec![DelayAxis::Scanned; n],
        }
    }

    pub fn order(&self) -> usize {
        self.axes.len()
    }

    pub fn scanned(&self) -> Vec<usize> {
        (0..self.axes.len())
            .filter(|&i| self.axes[i] == DelayAxis::Scanned)
            .collect()
    }

    /// Interaction times `t_0 = 0, t_1, ..., t_n` from delays.
    pub fn times_from_delays(delays: &[f64]) -> Result<Vec<f64>> {
        let mut times = Vec::with_capacity(delays.len() + 1);
        times.push(0.0);
        for (i, &d) in delays.iter().enumerate() {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::NonAscendingTimes { slot: i + 1 });
            }
            times.push(times[i] + d);
        }
        Ok(times)
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub set: DiagramSet,
    pub delays: DelayStructure,
}

impl CatalogEntry {
    pub fn order(&self) -> usize {
        self.set.order()
    }

    /// The all-ket diagram of the first kind combination in the set.
    pub fn representative(&self) -> &FeynmanDiagram {
        let terms = self.set.terms();
        terms
            .iter()
            .map(|t| &t.diagram)
            .find(|d| d.interactions().iter().all(|i| i.side == Side::Ket))
            .unwrap_or(&terms[0].diagram)
    }
}

pub const CATALOG_NAMES: &[&str] = &[
    "linear_absorption",
    "cd",
    "sum_frequency",
    "pump_probe",
    "twod",
    "raman",
    "twod_cd",
    "four_wave_mixing",
    "fifth_order_raman",
];

fn electric(n: usize) -> DiagramSet {
    expand_with_kinds(&vec![DipoleKind::Electric; n + 1]).unwrap()
}

/// `<mu(t)[m(0), rho]> - <m(t)[mu(0), rho]>`.
fn rotatory() -> DiagramSet {
    use DipoleKind::*;
    let a = expand_with_kinds(&[Magnetic, Electric]).unwrap();
    let b = expand_with_kinds(&[Electric, Magnetic]).unwrap().scaled(C64::new(-1.0, 0.0));
    a.concat(b).unwrap()
}

pub fn catalog(name: &str) -> Result<CatalogEntry> {
    use DelayAxis::*;
    let (description, set, axes) = match name {
        "linear_absorption" => ("linear absorption", electric(1), vec![Scanned]),
        "cd" => ("circular dichroism (MCD with a static-field model)", rotatory(), vec![Scanned]),
        "sum_frequency" => ("sum/difference frequency generation", electric(2), vec![Scanned, Scanned]),
        "pump_probe" => ("pump-probe, first delay collapsed", electric(3), vec![Fixed(0.0), Scanned, Scanned]),
        "twod" => ("2D spectroscopy", electric(3), vec![Scanned, Scanned, Scanned]),
        "raman" => ("Raman, pulse pairs collapsed", electric(3), vec![Fixed(0.0), Scanned, Fixed(0.0)]),
        "twod_cd" => {
            use DipoleKind::*;
            (
                "2D circular dichroism",
                expand_with_kinds(&[Magnetic, Electric, Electric, Electric]).unwrap(),
                vec![Scanned, Scanned, Scanned],
            )
        }
        "four_wave_mixing" => ("four-wave mixing", electric(4), vec![Scanned; 4]),
        "fifth_order_raman" => ("fifth-order Raman", electric(5), vec![Scanned; 5]),
        _ => {
            let available: String = CATALOG_NAMES.join(", ");
            return Err(Error::UnknownSpectroscopy {
                name: name.into(),
                available,
            });
        }
    };
    let name = CATALOG_NAMES.iter().find(|n| **n == name).copied().unwrap();
    Ok(CatalogEntry {
        name,
        description,
        set,
        delays: DelayStructure { axes },
    })
}

pub fn describe_all() -> Vec<String> {
    CATALOG_NAMES
        .iter()
        .map(|n| {
            let e = catalog(n).unwrap();
            format!("{n}: order {}, {}", e.order(), e.representative().correlation_label())
        })
        .collect()
}
