//! Hadamard-test circuits for a single diagram.
//!
//! The ancilla starts in `|0>` and a Hadamard puts it in superposition. Ket
//! interactions are `M(F) = exp(-i X F)` gates controlled on ancilla `|1>`,
//! bra interactions the same gate controlled on `|0>`. Time evolution between
//! interactions is applied to both branches and is never controlled, so only
//! forward evolution appears. The readout
//!
//! ```text
//! Q = <sigma_x> + i <sigma_y> = 2 Tr rho_{10} = <B^dag K>
//! ```
//!
//! where `K` and `B` are the operator strings of the two branches. Note that
//! the bra-side gates enter `Q` as `M(F)^dag`.
//!
//! The simulator keeps the joint state as 2x2 ancilla blocks over the
//! register (system, or system and bath), so every gate and channel acts on
//! register-sized matrices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::diagram::{DipoleKind, FeynmanDiagram, Side};
use crate::model::ModelSystem;
use crate::operator::{expm, Hermitian, Operator, QuantumState, Tensor, UNITARY_TOL};
use crate::{CMatrix, CVector, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Control {
    Zero,
    One,
}

impl Control {
    pub fn for_side(side: Side) -> Control {
        match side {
            Side::Ket => Control::One,
            Side::Bra => Control::Zero,
        }
    }

    fn index(self) -> usize {
        match self {
            Control::Zero => 0,
            Control::One => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitStep {
    AncillaHadamard,
    /// Uncontrolled forward evolution of the register.
    Evolve { duration: f64 },
    /// Controlled `exp(-i X F)` with `X` the dipole of `kind`.
    ControlledM {
        control_on: Control,
        kind: DipoleKind,
        f_value: f64,
        slot: usize,
    },
    /// Controlled dipole itself; only valid for a unitary dipole.
    ControlledDipole {
        control_on: Control,
        kind: DipoleKind,
        slot: usize,
    },
    MeasureXY,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitPlan {
    steps: Vec<CircuitStep>,
    n_f: usize,
}

fn check_times(diagram: &FeynmanDiagram, times: &[f64]) -> Result<()> {
    let n = diagram.order() + 1;
    if times.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: times.len(),
        });
    }
    if !(times[0] >= 0.0) || !times[0].is_finite() {
        return Err(Error::NonAscendingTimes { slot: 0 });
    }
    for j in 1..n {
        if !(times[j] >= times[j - 1]) || !times[j].is_finite() {
            return Err(Error::NonAscendingTimes { slot: j });
        }
    }
    Ok(())
}

fn build(diagram: &FeynmanDiagram, times: &[f64], mut gate: impl FnMut(Control, DipoleKind, usize) -> CircuitStep) -> Vec<CircuitStep> {
    let mut steps = Vec::with_capacity(2 * times.len() + 2);
    steps.push(CircuitStep::AncillaHadamard);
    let mut now = 0.0;
    for it in diagram.interactions() {
        let dt = times[it.slot] - now;
        if dt > 0.0 {
            steps.push(CircuitStep::Evolve { duration: dt });
        }
        now = times[it.slot];
        steps.push(gate(Control::for_side(it.side), it.kind, it.slot));
    }
    steps.push(CircuitStep::MeasureXY);
    steps
}

/// Compiles a diagram at interaction times `times` (one per slot,
/// non-decreasing) with gate parameters `f` (one per slot).
pub fn compile(diagram: &FeynmanDiagram, times: &[f64], f: &[f64]) -> Result<CircuitPlan> {
    check_times(diagram, times)?;
    let n_f = diagram.order() + 1;
    if f.len() != n_f {
        return Err(Error::DimensionMismatch {
            expected: n_f,
            found: f.len(),
        });
    }
    if let Some(bad) = f.iter().find(|x| !x.is_finite()) {
        return Err(Error::param("f", format!("gate parameter must be finite, got {bad}")));
    }
    let steps = build(diagram, times, |control_on, kind, slot| CircuitStep::ControlledM {
        control_on,
        kind,
        f_value: f[slot],
        slot,
    });
    Ok(CircuitPlan { steps, n_f })
}

/// Compiles with the dipoles inserted directly as controlled gates. The
/// readout is then the dipole correlation function itself.
pub fn compile_pauli(diagram: &FeynmanDiagram, times: &[f64]) -> Result<CircuitPlan> {
    check_times(diagram, times)?;
    let steps = build(diagram, times, |control_on, kind, slot| CircuitStep::ControlledDipole {
        control_on,
        kind,
        slot,
    });
    Ok(CircuitPlan {
        steps,
        n_f: diagram.order() + 1,
    })
}

impl CircuitPlan {
    pub fn steps(&self) -> &[CircuitStep] {
        &self.steps
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn total_time(&self) -> f64 {
        self.evolve_durations().sum()
    }

    pub fn evolve_durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().filter_map(|s| match s {
            CircuitStep::Evolve { duration } => Some(*duration),
            _ => None,
        })
    }

    pub fn is_pauli(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, CircuitStep::ControlledDipole { .. }))
    }

    /// Same plan with new gate parameters.
    pub fn with_f(&self, f: &[f64]) -> Result<CircuitPlan> {
        if f.len() != self.n_f {
            return Err(Error::DimensionMismatch {
                expected: self.n_f,
                found: f.len(),
            });
        }
        let mut plan = self.clone();
        for step in &mut plan.steps {
            if let CircuitStep::ControlledM { f_value, slot, .. } = step {
                *f_value = f[*slot];
            }
        }
        Ok(plan)
    }

    pub fn kinds(&self) -> Vec<DipoleKind> {
        let mut kinds: Vec<DipoleKind> = self
            .steps
            .iter()
            .filter_map(|s| match s {
                CircuitStep::ControlledM { kind, .. } | CircuitStep::ControlledDipole { kind, .. } => Some(*kind),
                _ => None,
            })
            .collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

impl fmt::Display for CircuitStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |c: &Control| c.index();
        match self {
            CircuitStep::AncillaHadamard => write!(f, "H_anc"),
            CircuitStep::Evolve { duration } => write!(f, "Evolve({duration})"),
            CircuitStep::ControlledM {
                control_on,
                kind,
                f_value,
                slot,
            } => write!(f, "CM{kind}({}, F{slot}={f_value})", c(control_on)),
            CircuitStep::ControlledDipole { control_on, kind, slot } => {
                write!(f, "C{kind}({}, t{slot})", c(control_on))
            }
            CircuitStep::MeasureXY => write!(f, "MeasureXY"),
        }
    }
}

impl fmt::Display for CircuitPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

/// Column-stacked Lindblad generator of a model, `d^2 x d^2`.
pub fn lindblad_generator(model: &ModelSystem) -> CMatrix {
    let d = model.dim();
    let id = CMatrix::identity(d, d);
    let h = model.h0().matrix();
    let mi = C64::new(0.0, -1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * mi;
    for jump in model.jumps() {
        let a = jump.operator.matrix();
        let ada = a.adjoint() * a;
        let g = C64::new(jump.rate, 0.0);
        let half = C64::new(0.5, 0.0);
        l += (a.map(|z| z.conj()).kronecker(a) - (id.kronecker(&ada) + ada.transpose().kronecker(&id)) * half) * g;
    }
    l
}

fn vec_cols(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

fn unvec_cols(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// `exp(L t)` as a superoperator on column-stacked `d x d` matrices.
pub fn channel_superoperator(model: &ModelSystem, duration: f64) -> Result<CMatrix> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::param("duration", format!("must be finite and non-negative, got {duration}")));
    }
    let d = model.dim();
    if duration == 0.0 {
        return Ok(CMatrix::identity(d * d, d * d));
    }
    Ok(expm(&(lindblad_generator(model) * C64::new(duration, 0.0))))
}

fn apply_superoperator(phi: &CMatrix, rho: &CMatrix) -> CMatrix {
    unvec_cols(&(phi * vec_cols(rho)), rho.nrows())
}

/// Choi matrix `sum_ij |i><j| (x) Phi(|i><j|)` of the model's channel.
pub fn choi_matrix(model: &ModelSystem, duration: f64) -> Result<CMatrix> {
    let phi = channel_superoperator(model, duration)?;
    let d = model.dim();
    let mut choi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let e = Operator::ket_bra(d, i, j).into_matrix();
            let out = apply_superoperator(&phi, &e);
            choi.view_mut((i * d, j * d), (d, d)).copy_from(&out);
        }
    }
    Ok(choi)
}

// Applies a register map blockwise to a joint density whose last factor has
// dimension `d`.
fn map_blocks(rho: &CMatrix, d: usize, mut f: impl FnMut(&CMatrix) -> CMatrix) -> Result<CMatrix> {
    let dim = rho.nrows();
    if d == 0 || !dim.is_multiple_of(d) {
        return Err(Error::Factorization {
            dim,
            left: dim / d.max(1),
            right: d,
        });
    }
    let k = dim / d;
    let mut out = CMatrix::zeros(dim, dim);
    for a in 0..k {
        for b in 0..k {
            let block = rho.view((a * d, b * d), (d, d)).into_owned();
            out.view_mut((a * d, b * d), (d, d)).copy_from(&f(&block));
        }
    }
    Ok(out)
}

/// Applies `exp(L t)` to the system factor (the last factor) of a joint
/// density, e.g. ancilla (x) system. The other factors are untouched.
pub fn evolve_channel(state: &QuantumState, duration: f64, model: &ModelSystem) -> Result<QuantumState> {
    let phi = channel_superoperator(model, duration)?;
    let rho = map_blocks(&state.density_matrix(), model.dim(), |b| apply_superoperator(&phi, b))?;
    Ok(QuantumState::Density(rho))
}

/// An explicit environment: Hamiltonian, system-bath coupling and initial
/// state.
#[derive(Clone, Debug)]
pub struct BathSpec {
    pub h_bath: Hermitian,
    /// Hermitian coupling on system (x) bath.
    pub coupling: Hermitian,
    pub state: QuantumState,
    /// Largest allowed ancilla (x) system (x) bath dimension.
    pub cap: usize,
}

pub const MAX_BATH_DIM: usize = 8;
pub const DEFAULT_JOINT_CAP: usize = 512;

impl BathSpec {
    pub fn new(h_bath: Hermitian, coupling: Hermitian, state: QuantumState) -> Result<Self> {
        let db = h_bath.dim();
        if db > MAX_BATH_DIM {
            return Err(Error::param("bath", format!("bath dimension {db} exceeds {MAX_BATH_DIM}")));
        }
        if state.dim() != db {
            return Err(Error::DimensionMismatch {
                expected: db,
                found: state.dim(),
            });
        }
        if !coupling.dim().is_multiple_of(db) {
            return Err(Error::Factorization {
                dim: coupling.dim(),
                left: coupling.dim() / db,
                right: db,
            });
        }
        Ok(BathSpec {
            h_bath,
            coupling,
            state,
            cap: DEFAULT_JOINT_CAP,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn dim(&self) -> usize {
        self.h_bath.dim()
    }

    /// `H0 (x) I + I (x) H_B + V` on system (x) bath.
    pub fn joint_hamiltonian(&self, model: &ModelSystem) -> Result<Hermitian> {
        let ds = model.dim();
        let db = self.dim();
        if self.coupling.dim() != ds * db {
            return Err(Error::DimensionMismatch {
                expected: ds * db,
                found: self.coupling.dim(),
            });
        }
        if 2 * ds * db > self.cap {
            return Err(Error::DimensionCap {
                dim: 2 * ds * db,
                cap: self.cap,
            });
        }
        let h = model.h0().operator().tensor(&Operator::identity(db));
        let hb = Operator::identity(ds).tensor(self.h_bath.operator());
        Hermitian::new(&(&h + &hb) + self.coupling.operator())
    }
}

/// Unitary evolution of ancilla (x) system (x) bath under the joint
/// system-bath Hamiltonian. The bath is not traced out.
pub fn evolve_explicit_bath(state: &QuantumState, duration: f64, model: &ModelSystem, bath: &BathSpec) -> Result<QuantumState> {
    let h = bath.joint_hamiltonian(model)?;
    let u = h.evolution(duration).into_matrix();
    let d = h.dim();
    match state {
        QuantumState::Pure(v) => {
            let k = v.len() / d;
            if k * d != v.len() {
                return Err(Error::Factorization { dim: v.len(), left: k, right: d });
            }
            let mut out = v.clone();
            for a in 0..k {
                let seg = u.clone() * v.rows(a * d, d);
                out.rows_mut(a * d, d).copy_from(&seg);
            }
            Ok(QuantumState::Pure(out))
        }
        QuantumState::Density(rho) => {
            let ud = u.adjoint();
            Ok(QuantumState::Density(map_blocks(rho, d, |b| &u * b * &ud)?))
        }
    }
}

#[derive(Clone, Debug)]
enum Dynamics {
    Closed,
    Lindblad { generator: CMatrix },
    Bath { hamiltonian: Hermitian, bath_dim: usize, bath_state: QuantumState },
}

#[derive(Clone, Debug)]
enum Propagator {
    Unitary(CMatrix),
    Channel(CMatrix),
}

/// Joint ancilla-register state as ancilla blocks. `Pure` keeps the two
/// branch vectors `|0>|v0> + |1>|v1>`.
#[derive(Clone, Debug, PartialEq)]
pub enum JointState {
    Pure([CVector; 2]),
    Mixed([[CMatrix; 2]; 2]),
}

impl JointState {
    pub fn register_dim(&self) -> usize {
        match self {
            JointState::Pure(v) => v[0].len(),
            JointState::Mixed(b) => b[0][0].nrows(),
        }
    }

    /// `2 Tr rho_10 = <sigma_x> + i <sigma_y>`.
    pub fn readout(&self) -> C64 {
        match self {
            JointState::Pure([v0, v1]) => v0.dotc(v1) * 2.0,
            JointState::Mixed(b) => b[1][0].trace() * 2.0,
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            JointState::Pure([v0, v1]) => v0.norm_squared() + v1.norm_squared(),
            JointState::Mixed(b) => (b[0][0].trace() + b[1][1].trace()).re,
        }
    }

    /// Full density matrix on ancilla (x) register.
    pub fn to_density(&self) -> QuantumState {
        let d = self.register_dim();
        let mut rho = CMatrix::zeros(2 * d, 2 * d);
        match self {
            JointState::Pure([v0, v1]) => {
                let mut v = CVector::zeros(2 * d);
                v.rows_mut(0, d).copy_from(v0);
                v.rows_mut(d, d).copy_from(v1);
                rho = &v * v.adjoint();
            }
            JointState::Mixed(b) => {
                for a in 0..2 {
                    for c in 0..2 {
                        rho.view_mut((a * d, c * d), (d, d)).copy_from(&b[a][c]);
                    }
                }
            }
        }
        QuantumState::Density(rho)
    }

    fn hadamard(&mut self) {
        let s = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            JointState::Pure([v0, v1]) => {
                let a = (&*v0 + &*v1) * s;
                let b = (&*v0 - &*v1) * s;
                *v0 = a;
                *v1 = b;
            }
            JointState::Mixed(b) => {
                let h = [[1.0, 1.0], [1.0, -1.0]];
                let d = b[0][0].nrows();
                let mut out: [[CMatrix; 2]; 2] = core::array::from_fn(|_| core::array::from_fn(|_| CMatrix::zeros(d, d)));
                for a in 0..2 {
                    for bb in 0..2 {
                        for c in 0..2 {
                            for e in 0..2 {
                                let w = 0.5 * h[a][c] * h[bb][e];
                                out[a][bb] += &b[c][e] * C64::new(w, 0.0);
                            }
                        }
                    }
                }
                *b = out;
            }
        }
    }

    fn controlled(&mut self, control: Control, g: &CMatrix) {
        let c = control.index();
        match self {
            JointState::Pure(v) => v[c] = g * &v[c],
            JointState::Mixed(b) => {
                let gd = g.adjoint();
                for k in 0..2 {
                    b[c][k] = g * &b[c][k];
                }
                for k in 0..2 {
                    b[k][c] = &b[k][c] * &gd;
                }
            }
        }
    }

    fn evolve(&mut self, p: &Propagator) {
        match (self, p) {
            (JointState::Pure(v), Propagator::Unitary(u)) => {
                for x in v.iter_mut() {
                    *x = u * &*x;
                }
            }
            (JointState::Mixed(b), Propagator::Unitary(u)) => {
                let ud = u.adjoint();
                for row in b.iter_mut() {
                    for x in row.iter_mut() {
                        *x = u * &*x * &ud;
                    }
                }
            }
            (JointState::Mixed(b), Propagator::Channel(phi)) => {
                for row in b.iter_mut() {
                    for x in row.iter_mut() {
                        *x = apply_superoperator(phi, x);
                    }
                }
            }
            (JointState::Pure(_), Propagator::Channel(_)) => unreachable!("channels act on mixed blocks"),
        }
    }
}

/// Outcome of a shot-sampled run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub exp_x: f64,
    pub exp_y: f64,
    /// Total shots, split evenly between the two observables. Zero in exact
    /// mode.
    pub shots: u64,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn value(&self) -> C64 {
        C64::new(self.exp_x, self.exp_y)
    }
}

/// Draws `n` outcomes of a +-1 observable with mean `expect` and returns the
/// empirical mean.
pub fn sample_mean(rng: &mut impl RngCore, expect: f64, n: u64) -> f64 {
    let p = ((1.0 + expect) * 0.5).clamp(0.0, 1.0);
    let mut plus = 0u64;
    for _ in 0..n {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u < p {
            plus += 1;
        }
    }
    (2.0 * plus as f64 - n as f64) / n as f64
}

/// Runs circuit plans for one model. Propagators and gates can be prepared up
/// front; lookups that miss are computed on the fly, so a prepared simulator
/// can be shared read-only across threads.
#[derive(Clone, Debug)]
pub struct CircuitSimulator {
    model: ModelSystem,
    dynamics: Dynamics,
    step: Option<f64>,
    propagators: Vec<Propagator>,
    by_duration: BTreeMap<u64, Propagator>,
    gates: BTreeMap<(DipoleKind, u64), CMatrix>,
}

impl CircuitSimulator {
    /// Closed evolution if the model has no jumps, Lindblad otherwise.
    pub fn new(model: &ModelSystem) -> Self {
        let dynamics = if model.is_closed() {
            Dynamics::Closed
        } else {
            Dynamics::Lindblad {
                generator: lindblad_generator(model),
            }
        };
        CircuitSimulator {
            model: model.clone(),
            dynamics,
            step: None,
            propagators: Vec::new(),
            by_duration: BTreeMap::new(),
            gates: BTreeMap::new(),
        }
    }

    /// Unitary evolution of system (x) bath; `M` gates act on the system only
    /// and the bath is traced out at readout.
    pub fn with_bath(model: &ModelSystem, bath: &BathSpec) -> Result<Self> {
        if !model.is_closed() {
            return Err(Error::param("bath", "an explicit bath replaces the Lindblad jumps; the model must have none"));
        }
        let hamiltonian = bath.joint_hamiltonian(model)?;
        let mut sim = CircuitSimulator::new(model);
        sim.dynamics = Dynamics::Bath {
            hamiltonian,
            bath_dim: bath.dim(),
            bath_state: bath.state.clone(),
        };
        Ok(sim)
    }

    pub fn model(&self) -> &ModelSystem {
        &self.model
    }

    pub fn is_open(&self) -> bool {
        !matches!(self.dynamics, Dynamics::Closed)
    }

    fn bath_dim(&self) -> usize {
        match &self.dynamics {
            Dynamics::Bath { bath_dim, .. } => *bath_dim,
            _ => 1,
        }
    }

    pub fn register_dim(&self) -> usize {
        self.model.dim() * self.bath_dim()
    }

    fn compute_propagator(&self, duration: f64) -> Propagator {
        match &self.dynamics {
            Dynamics::Closed => Propagator::Unitary(self.model.h0().evolution(duration).into_matrix()),
            Dynamics::Bath { hamiltonian, .. } => Propagator::Unitary(hamiltonian.evolution(duration).into_matrix()),
            Dynamics::Lindblad { generator } => Propagator::Channel(expm(&(generator * C64::new(duration, 0.0)))),
        }
    }

    /// Precomputes propagators for `k * step`, `k = 0..=max_steps`. For
    /// Lindblad dynamics only `exp(L step)` is exponentiated; longer
    /// durations are its powers.
    pub fn prepare_time_grid(&mut self, step: f64, max_steps: usize) -> Result<()> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::param("step", format!("must be positive, got {step}")));
        }
        let mut props = Vec::with_capacity(max_steps + 1);
        match &self.dynamics {
            Dynamics::Lindblad { .. } => {
                let base = match self.compute_propagator(step) {
                    Propagator::Channel(m) => m,
                    Propagator::Unitary(_) => unreachable!(),
                };
                let d2 = base.nrows();
                let mut acc = CMatrix::identity(d2, d2);
                for k in 0..=max_steps {
                    if k > 0 {
                        acc = &base * &acc;
                    }
                    props.push(Propagator::Channel(acc.clone()));
                }
            }
            _ => {
                for k in 0..=max_steps {
                    props.push(self.compute_propagator(k as f64 * step));
                }
            }
        }
        self.step = Some(step);
        self.propagators = props;
        Ok(())
    }

    /// Precomputes a propagator for an arbitrary duration.
    pub fn prepare_duration(&mut self, duration: f64) {
        let p = self.compute_propagator(duration);
        self.by_duration.insert(duration.to_bits(), p);
    }

    /// Precomputes `M(F)` gates for the given kind and parameter values.
    pub fn prepare_gates(&mut self, kind: DipoleKind, fs: &[f64]) -> Result<()> {
        for &f in fs {
            let g = self.compute_gate(kind, f)?;
            self.gates.insert((kind, f.to_bits()), g);
        }
        Ok(())
    }

    fn lookup_propagator(&self, duration: f64) -> Option<&Propagator> {
        if let Some(p) = self.by_duration.get(&duration.to_bits()) {
            return Some(p);
        }
        let step = self.step?;
        let k = libm::round(duration / step);
        if k < 0.0 || k as usize >= self.propagators.len() {
            return None;
        }
        if (duration - k * step).abs() <= 1e-9 * step.max(duration) {
            Some(&self.propagators[k as usize])
        } else {
            None
        }
    }

    fn lift(&self, g: CMatrix) -> CMatrix {
        let db = self.bath_dim();
        if db == 1 {
            g
        } else {
            g.kronecker(&CMatrix::identity(db, db))
        }
    }

    fn compute_gate(&self, kind: DipoleKind, f: f64) -> Result<CMatrix> {
        if !f.is_finite() {
            return Err(Error::param("f", format!("gate parameter must be finite, got {f}")));
        }
        let x = self.model.dipole(kind)?;
        Ok(self.lift(x.evolution(f).into_matrix()))
    }

    fn dipole_gate(&self, kind: DipoleKind) -> Result<CMatrix> {
        let x = self.model.dipole(kind)?;
        let deviation = x.operator().unitarity_deviation();
        if deviation >= UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(self.lift(x.matrix().clone()))
    }

    fn initial(&self, rho0: &QuantumState) -> Result<JointState> {
        let d = self.model.dim();
        if rho0.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho0.dim(),
            });
        }
        let register = match &self.dynamics {
            Dynamics::Bath { bath_state, .. } => rho0.tensor(bath_state),
            _ => rho0.clone(),
        };
        let dr = register.dim();
        let open = matches!(self.dynamics, Dynamics::Lindblad { .. });
        Ok(match register {
            QuantumState::Pure(v) if !open => JointState::Pure([v, CVector::zeros(dr)]),
            other => {
                let z = || CMatrix::zeros(dr, dr);
                JointState::Mixed([[other.density_matrix(), z()], [z(), z()]])
            }
        })
    }

    /// Final joint state of ancilla (x) register before measurement.
    pub fn final_state(&self, plan: &CircuitPlan, rho0: &QuantumState) -> Result<JointState> {
        let mut state = self.initial(rho0)?;
        for step in plan.steps() {
            match step {
                CircuitStep::AncillaHadamard => state.hadamard(),
                CircuitStep::Evolve { duration } => {
                    if *duration < 0.0 {
                        return Err(Error::param("duration", "negative evolution"));
                    }
                    match self.lookup_propagator(*duration) {
                        Some(p) => state.evolve(p),
                        None => state.evolve(&self.compute_propagator(*duration)),
                    }
                }
                CircuitStep::ControlledM {
                    control_on,
                    kind,
                    f_value,
                    ..
                } => match self.gates.get(&(*kind, f_value.to_bits())) {
                    Some(g) => state.controlled(*control_on, g),
                    None => state.controlled(*control_on, &self.compute_gate(*kind, *f_value)?),
                },
                CircuitStep::ControlledDipole { control_on, kind, .. } => {
                    state.controlled(*control_on, &self.dipole_gate(*kind)?)
                }
                CircuitStep::MeasureXY => {}
            }
        }
        Ok(state)
    }

    /// `Q = <sigma_x> + i <sigma_y>` of the final state.
    pub fn simulate_exact(&self, plan: &CircuitPlan, rho0: &QuantumState) -> Result<C64> {
        Ok(self.final_state(plan, rho0)?.readout())
    }

    pub fn simulate_shots(&self, plan: &CircuitPlan, rho0: &QuantumState, shots: u64, seed: u64) -> Result<MeasurementRecord> {
        self.simulate_shots_on_stream(plan, rho0, shots, seed, 0)
    }

    /// Shot sampling with independent streams `2 stream` for `sigma_x` and
    /// `2 stream + 1` for `sigma_y` of the generator seeded by `seed`.
    pub fn simulate_shots_on_stream(&self, plan: &CircuitPlan, rho0: &QuantumState, shots: u64, seed: u64, stream: u64) -> Result<MeasurementRecord> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let q = self.simulate_exact(plan, rho0)?;
        let (exp_x, exp_y) = sample_xy(q, shots, seed, stream);
        Ok(MeasurementRecord { exp_x, exp_y, shots, seed })
    }
}

/// Samples `sigma_x` and `sigma_y` means for an exact readout `q`.
pub fn sample_xy(q: C64, shots: u64, seed: u64, stream: u64) -> (f64, f64) {
    let per = (shots / 2).max(1);
    let mut rx = ChaCha8Rng::seed_from_u64(seed);
    rx.set_stream(stream.wrapping_mul(2));
    let mut ry = ChaCha8Rng::seed_from_u64(seed);
    ry.set_stream(stream.wrapping_mul(2).wrapping_add(1));
    (sample_mean(&mut rx, q.re, per), sample_mean(&mut ry, q.im, per))
}

/// One-call helpers for a single plan.
pub fn simulate_exact(plan: &CircuitPlan, model: &ModelSystem, rho0: &QuantumState) -> Result<C64> {
    CircuitSimulator::new(model).simulate_exact(plan, rho0)
}

pub fn simulate_shots(plan: &CircuitPlan, model: &ModelSystem, rho0: &QuantumState, shots: u64, seed: u64) -> Result<MeasurementRecord> {
    CircuitSimulator::new(model).simulate_shots(plan, rho0, shots, seed)
}

/// Summary of the circuit as a string, for diagnostics.
pub fn describe(plan: &CircuitPlan) -> String {
    format!("{plan}")
}
