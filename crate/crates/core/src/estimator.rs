//! Response functions from circuit readouts.
//!
//! A diagram's correlation function is a mixed derivative of the circuit
//! readout at `F = 0`. Since `dM/dF = -i mu` at zero, a ket interaction
//! contributes a factor `i` and a bra interaction (which enters as `M^dag`) a
//! factor `-i`:
//!
//! ```text
//! C = i^k (-i)^b d^{n+1} Q / dF_0 ... dF_n
//! ```
//!
//! The derivative is taken with a central-difference stencil over all `n+1`
//! variables.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::{DelayAxis, DelayStructure};
use crate::circuit::{compile, compile_pauli, sample_xy, BathSpec, CircuitSimulator};
use crate::diagram::{DiagramSet, DipoleKind, FeynmanDiagram, Part, Term};
use crate::model::{DipoleScale, ModelSystem};
use crate::operator::QuantumState;
use crate::{Error, Result, C64};

pub const DEFAULT_DELTA_EXACT: f64 = 1e-2;
pub const DEFAULT_DELTA_SHOTS: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilOrder {
    /// `[f(d) - f(-d)] / 2d` per axis.
    Second,
    /// `[-f(2d) + 8 f(d) - 8 f(-d) + f(-2d)] / 12d` per axis.
    Fourth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StencilPoint {
    pub f: Vec<f64>,
    pub weight: f64,
}

/// Tensor-product central-difference stencil for the mixed derivative
/// `d^{n+1} / dF_0 ... dF_n` at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    points: Vec<StencilPoint>,
    delta: f64,
    order: StencilOrder,
}

pub fn build_stencil(n: usize, delta: f64) -> Result<Stencil> {
    build_stencil_with(n, delta, StencilOrder::Second)
}

pub fn build_stencil_with(n: usize, delta: f64, order: StencilOrder) -> Result<Stencil> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("step must be positive, got {delta}")));
    }
    let axis: Vec<(f64, f64)> = match order {
        StencilOrder::Second => vec![(delta, 0.5 / delta), (-delta, -0.5 / delta)],
        StencilOrder::Fourth => {
            let w = 1.0 / (12.0 * delta);
            vec![(2.0 * delta, -w), (delta, 8.0 * w), (-delta, -8.0 * w), (-2.0 * delta, w)]
        }
    };
    let vars = n + 1;
    let per = axis.len();
    let total = per.pow(vars as u32);
    let mut points = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut f = vec![0.0; vars];
        let mut weight = 1.0;
        for fj in f.iter_mut() {
            let (x, w) = axis[idx % per];
            idx /= per;
            *fj = x;
            weight *= w;
        }
        points.push(StencilPoint { f, weight });
    }
    Ok(Stencil { points, delta, order })
}

impl Stencil {
    pub fn points(&self) -> &[StencilPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    /// `sum_k w_k f(F_k)`.
    pub fn apply(&self, mut f: impl FnMut(&[f64]) -> Result<C64>) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for p in &self.points {
            acc += f(&p.f)? * p.weight;
        }
        Ok(acc)
    }

    /// Distinct gate parameters used by the stencil.
    pub fn f_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.points.iter().flat_map(|p| p.f.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// `i^k (-i)^b` for a diagram.
pub fn derivative_prefactor(diagram: &FeynmanDiagram) -> C64 {
    let k = diagram.ket_count() as i64;
    let b = diagram.bra_count() as i64;
    match (k - b).rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorMode {
    /// Exact readout, stencil differentiation.
    Exact,
    /// Shot-sampled readout, stencil differentiation.
    Shots { shots: u64, seed: u64 },
    /// Dipoles inserted directly; requires unitary dipoles.
    Pauli,
}

#[derive(Clone, Debug)]
pub struct EstimatorOptions {
    pub delta: f64,
    pub stencil: StencilOrder,
    pub mode: EstimatorMode,
    /// Divide dipoles by their spectral norm and rescale the result.
    pub normalize: bool,
    /// Evaluate one member per conjugate pair when the set allows it.
    pub reduce: bool,
    /// Explicit environment instead of closed or Lindblad dynamics.
    pub bath: Option<BathSpec>,
}

impl EstimatorOptions {
    pub fn new(mode: EstimatorMode) -> Self {
        let delta = match mode {
            EstimatorMode::Shots { .. } => DEFAULT_DELTA_SHOTS,
            _ => DEFAULT_DELTA_EXACT,
        };
        EstimatorOptions {
            delta,
            stencil: StencilOrder::Second,
            mode,
            normalize: true,
            reduce: true,
            bath: None,
        }
    }

    pub fn exact() -> Self {
        EstimatorOptions::new(EstimatorMode::Exact)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_stencil(mut self, stencil: StencilOrder) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn with_reduce(mut self, reduce: bool) -> Self {
        self.reduce = reduce;
        self
    }

    pub fn with_bath(mut self, bath: BathSpec) -> Self {
        self.bath = Some(bath);
        self
    }
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions::exact()
    }
}

// One diagram at fixed times, on an already built simulator. Shot streams
// start at `stream` and advance by one per stencil point.
fn diagram_value(
    sim: &CircuitSimulator,
    diagram: &FeynmanDiagram,
    times: &[f64],
    stencil: &Stencil,
    mode: EstimatorMode,
    rho0: &QuantumState,
    stream: u64,
) -> Result<C64> {
    match mode {
        EstimatorMode::Pauli => sim.simulate_exact(&compile_pauli(diagram, times)?, rho0),
        EstimatorMode::Exact => {
            let base = compile(diagram, times, &vec![0.0; diagram.order() + 1])?;
            let d = stencil.apply(|f| sim.simulate_exact(&base.with_f(f)?, rho0))?;
            Ok(derivative_prefactor(diagram) * d)
        }
        EstimatorMode::Shots { shots, seed } => {
            if shots == 0 {
                return Err(Error::ZeroShots);
            }
            let base = compile(diagram, times, &vec![0.0; diagram.order() + 1])?;
            let mut k = 0u64;
            let d = stencil.apply(|f| {
                let q = sim.simulate_exact(&base.with_f(f)?, rho0)?;
                let (x, y) = sample_xy(q, shots, seed, stream + k);
                k += 1;
                Ok(C64::new(x, y))
            })?;
            Ok(derivative_prefactor(diagram) * d)
        }
    }
}

fn stencil_for(diagram_order: usize, options: &EstimatorOptions) -> Result<Stencil> {
    build_stencil_with(diagram_order, options.delta, options.stencil)
}

/// Estimate of one diagram's correlation function at interaction times
/// `times`. The model is used as given (no normalization).
pub fn estimate_r(diagram: &FeynmanDiagram, times: &[f64], options: &EstimatorOptions, model: &ModelSystem, rho0: &QuantumState) -> Result<C64> {
    for it in diagram.interactions() {
        model.dipole(it.kind)?;
    }
    let sim = match &options.bath {
        Some(b) => CircuitSimulator::with_bath(model, b)?,
        None => CircuitSimulator::new(model),
    };
    let stencil = stencil_for(diagram.order(), options)?;
    diagram_value(&sim, diagram, times, &stencil, options.mode, rho0, 0)
}

/// Uniform delay axis: values `offset + i * step`, `i < count`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub offset: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn scanned(step: f64, count: usize) -> Self {
        GridAxis { offset: 0.0, step, count }
    }

    pub fn fixed(value: f64) -> Self {
        GridAxis {
            offset: value,
            step: 0.0,
            count: 1,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.offset + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.value(self.count.saturating_sub(1))
    }

    fn validate(&self, axis: usize) -> Result<()> {
        let bad = |why: &str| Err(Error::GridMismatch(format!("delay axis {axis}: {why}")));
        if self.count == 0 {
            return bad("needs at least one point");
        }
        if !(self.offset >= 0.0) || !self.offset.is_finite() {
            return bad("offset must be finite and non-negative");
        }
        if self.count > 1 && (!(self.step > 0.0) || !self.step.is_finite()) {
            return bad("step must be positive");
        }
        Ok(())
    }
}

/// One axis per delay `tau_1..tau_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        GridSpec { axes }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat row-major index (last axis fastest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (i, a) in self.axes.iter().enumerate().rev() {
            idx[i] = flat % a.count;
            flat /= a.count;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    pub fn delays(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.axes).map(|(&i, a)| a.value(i)).collect()
    }

    /// Fixed delays must be single-point axes at the pinned value.
    pub fn check_structure(&self, structure: &DelayStructure) -> Result<()> {
        if structure.order() != self.axes.len() {
            return Err(Error::GridMismatch(format!(
                "spectroscopy has {} delays, grid has {} axes",
                structure.order(),
                self.axes.len()
            )));
        }
        for (i, (s, a)) in structure.axes.iter().zip(&self.axes).enumerate() {
            if let DelayAxis::Fixed(v) = s {
                if a.count != 1 || (a.offset - v).abs() > 1e-12 {
                    return Err(Error::GridMismatch(format!("delay axis {i} is fixed at {v}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridMode {
    Exact,
    Pauli,
    Shots { shots: u64, seed: u64 },
}

/// Samples of `R^(n)` over a delay grid, row-major with the last delay
/// fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseGrid {
    pub order: usize,
    pub axes: Vec<GridAxis>,
    pub values: Vec<C64>,
    pub mode: GridMode,
}

impl ResponseGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        let spec = GridSpec::new(self.axes.clone());
        self.values[spec.flatten(idx)]
    }

    /// Values along one axis with every other index fixed.
    pub fn line(&self, axis: usize, at: &[usize]) -> Vec<C64> {
        let spec = GridSpec::new(self.axes.clone());
        let mut idx = at.to_vec();
        (0..self.axes[axis].count)
            .map(|i| {
                idx[axis] = i;
                self.values[spec.flatten(&idx)]
            })
            .collect()
    }
}

/// Prepared evaluation of a diagram set over a delay grid. Grid points are
/// independent; [`ResponseEvaluator::point`] is safe to call from many
/// threads.
#[derive(Clone, Debug)]
pub struct ResponseEvaluator {
    sim: CircuitSimulator,
    terms: Vec<(Term, f64)>,
    order: usize,
    stencil: Stencil,
    mode: EstimatorMode,
    rho0: QuantumState,
    grid: GridSpec,
    scale: DipoleScale,
}

fn term_scale(diagram: &FeynmanDiagram, scale: &DipoleScale) -> f64 {
    diagram.interactions().iter().map(|i| scale.of(i.kind)).product()
}

impl ResponseEvaluator {
    pub fn new(set: &DiagramSet, grid: GridSpec, options: &EstimatorOptions, model: &ModelSystem, rho0: &QuantumState) -> Result<Self> {
        if grid.axes.len() != set.order() {
            return Err(Error::GridMismatch(format!(
                "order {} needs {} delay axes, got {}",
                set.order(),
                set.order(),
                grid.axes.len()
            )));
        }
        for (i, a) in grid.axes.iter().enumerate() {
            a.validate(i)?;
        }
        if set.uses(DipoleKind::Magnetic) {
            model.dipole(DipoleKind::Magnetic)?;
        }
        if rho0.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: rho0.dim(),
            });
        }
        let (model, scale) = if options.normalize {
            model.normalized()
        } else {
            (
                model.clone(),
                DipoleScale {
                    electric: 1.0,
                    magnetic: 1.0,
                },
            )
        };
        let set = if options.reduce && set.terms().iter().all(|t| t.part == Part::Whole) {
            set.conjugate_reduce().unwrap_or_else(|_| set.clone())
        } else {
            set.clone()
        };
        let mut sim = match &options.bath {
            Some(b) => CircuitSimulator::with_bath(&model, b)?,
            None => CircuitSimulator::new(&model),
        };
        let stencil = stencil_for(set.order(), options)?;
        if options.mode != EstimatorMode::Pauli {
            let fs = stencil.f_values();
            sim.prepare_gates(DipoleKind::Electric, &fs)?;
            if set.uses(DipoleKind::Magnetic) {
                sim.prepare_gates(DipoleKind::Magnetic, &fs)?;
            }
        }
        // Every evolve step is one delay, so a common step makes every
        // duration a multiple of it.
        let scanned: Vec<&GridAxis> = grid.axes.iter().filter(|a| a.count > 1).collect();
        if let Some(first) = scanned.first() {
            let step = first.step;
            let common = scanned.iter().all(|a| (a.step - step).abs() <= 1e-12 * step);
            if common {
                let max_k = grid
                    .axes
                    .iter()
                    .map(|a| libm::round(a.last() / step) as usize)
                    .max()
                    .unwrap_or(0);
                sim.prepare_time_grid(step, max_k)?;
            }
        }
        for a in grid.axes.iter().filter(|a| a.count == 1 && a.offset > 0.0) {
            sim.prepare_duration(a.offset);
        }
        let terms = set
            .terms()
            .iter()
            .map(|t| (t.clone(), term_scale(&t.diagram, &scale)))
            .collect();
        Ok(ResponseEvaluator {
            sim,
            terms,
            order: set.order(),
            stencil,
            mode: options.mode,
            rho0: rho0.clone(),
            grid,
            scale,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn scale(&self) -> DipoleScale {
        self.scale
    }

    /// Number of diagrams evaluated per grid point.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Circuit runs per grid point.
    pub fn circuits_per_point(&self) -> usize {
        match self.mode {
            EstimatorMode::Pauli => self.terms.len(),
            _ => self.terms.len() * self.stencil.len(),
        }
    }

    /// `R` at the grid point with flat index `flat`.
    pub fn point(&self, flat: usize) -> Result<C64> {
        let idx = self.grid.unflatten(flat);
        let times = DelayStructure::times_from_delays(&self.grid.delays(&idx))?;
        let n_terms = self.terms.len() as u64;
        let n_stencil = self.stencil.len() as u64;
        let mut acc = C64::new(0.0, 0.0);
        for (j, (term, scale)) in self.terms.iter().enumerate() {
            let stream = (flat as u64 * n_terms + j as u64) * n_stencil;
            let c = diagram_value(&self.sim, &term.diagram, &times, &self.stencil, self.mode, &self.rho0, stream)?;
            acc += term.contribution(c * *scale);
        }
        Ok(acc)
    }

    pub fn assemble(&self, values: Vec<C64>) -> Result<ResponseGrid> {
        if values.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                self.grid.len(),
                values.len()
            )));
        }
        let mode = match self.mode {
            EstimatorMode::Exact => GridMode::Exact,
            EstimatorMode::Pauli => GridMode::Pauli,
            EstimatorMode::Shots { shots, seed } => GridMode::Shots { shots, seed },
        };
        Ok(ResponseGrid {
            order: self.order,
            axes: self.grid.axes.clone(),
            values,
            mode,
        })
    }

    /// Sequential evaluation of the whole grid.
    pub fn evaluate(&self) -> Result<ResponseGrid> {
        let values = (0..self.grid.len()).map(|i| self.point(i)).collect::<Result<Vec<_>>>()?;
        self.assemble(values)
    }
}

/// Evaluates `set` on every point of `grid`.
pub fn response_grid(set: &DiagramSet, grid: GridSpec, options: &EstimatorOptions, model: &ModelSystem, rho0: &QuantumState) -> Result<ResponseGrid> {
    ResponseEvaluator::new(set, grid, options, model, rho0)?.evaluate()
}

/// [`response_grid`] for a catalog entry, checking the delay layout.
pub fn catalog_response_grid(name: &str, grid: GridSpec, options: &EstimatorOptions, model: &ModelSystem, rho0: &QuantumState) -> Result<ResponseGrid> {
    let entry = crate::catalog::catalog(name)?;
    grid.check_structure(&entry.delays)?;
    response_grid(&entry.set, grid, options, model, rho0)
}
