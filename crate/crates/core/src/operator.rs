//! Dense operators and states.
//!
//! Everything is stored as `DMatrix<Complex<f64>>`. A [`Hermitian`] carries its
//! eigendecomposition, computed once at construction, so that `exp(-iHt)` for
//! any `t` is a diagonal phase sandwiched between the cached eigenvectors.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DVector;

use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative tolerance for the Hermitian tag.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute tolerance on `U^dag U - I` for the unitary tag.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on norms and traces of states.
pub const STATE_TOL: f64 = 1e-10;
/// Smallest eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-9;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// A square complex matrix of dimension at least one.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::EmptyOperator);
        }
        Ok(Operator(matrix))
    }

    /// Builds an operator from real entries in row-major order.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Operator::new(CMatrix::from_fn(dim, dim, |i, j| {
            C64::new(entries[i * dim + j], 0.0)
        }))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Operator::new(CMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(CMatrix::zeros(dim, dim))
    }

    /// `|i><j|` in a `dim`-dimensional space.
    pub fn ket_bra(dim: usize, i: usize, j: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, j)] = C64::new(1.0, 0.0);
        Operator(m)
    }

    pub fn projector(dim: usize, i: usize) -> Self {
        Operator::ket_bra(dim, i, i)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Operator(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    /// Entry-wise complex conjugate in the computational basis.
    pub fn conjugate(&self) -> Operator {
        Operator(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, factor: f64) -> Operator {
        Operator(self.0.map(|z| z * factor))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `max |A - A^dag|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs(&(&self.0 - self.0.adjoint()))
    }

    /// `max |U^dag U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.0.adjoint() * &self.0 - CMatrix::identity(n, n)))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL * self.max_abs()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() < UNITARY_TOL
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator(&self.0 * &other.0 - &other.0 * &self.0)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

/// Pauli matrices.
pub mod pauli {
    use super::Operator;
    use crate::C64;

    pub fn x() -> Operator {
        Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> Operator {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        Operator::from_fn(2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => z,
        })
        .unwrap()
    }

    pub fn z() -> Operator {
        Operator::diagonal(&[1.0, -1.0])
    }
}

/// A Hermitian operator together with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct Hermitian {
    op: Operator,
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
}

impl Hermitian {
    pub fn new(op: Operator) -> Result<Self> {
        let deviation = op.hermiticity_deviation();
        if deviation > HERMITIAN_TOL * op.max_abs() {
            return Err(Error::NotHermitian { deviation });
        }
        // Symmetrize so the eigensolver sees an exactly Hermitian matrix.
        let sym = (op.matrix() + op.matrix().adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym.clone());
        Ok(Hermitian {
            op: Operator(sym),
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Hermitian::new(Operator::new(m)?)
    }

    pub fn zeros(dim: usize) -> Self {
        Hermitian::new(Operator::zeros(dim)).unwrap()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Eigenvalues in ascending order, paired with the column index of the
    /// corresponding eigenvector.
    pub fn sorted_spectrum(&self) -> Vec<(f64, usize)> {
        let mut spectrum: Vec<(f64, usize)> = self
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();
        spectrum.sort_by(|a, b| a.0.total_cmp(&b.0));
        spectrum
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// `V f(Lambda) V^dag`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = f(lambda);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * v.adjoint()
    }

    /// `exp(-i H t)`.
    pub fn evolution(&self, t: f64) -> Unitary {
        if t == 0.0 {
            return Unitary(Operator::identity(self.dim()));
        }
        Unitary(Operator(
            self.apply_function(|lambda| C64::new(0.0, -lambda * t).exp()),
        ))
    }

    pub fn add(&self, other: &Hermitian) -> Result<Hermitian> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Hermitian::new(self.operator() + other.operator())
    }

    pub fn scale(&self, factor: f64) -> Hermitian {
        Hermitian {
            op: self.op.scale(factor),
            eigenvalues: self.eigenvalues.map(|e| e * factor),
            eigenvectors: self.eigenvectors.clone(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        self.op.is_unitary()
    }
}

/// A unitary operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary(Operator);

impl Unitary {
    pub fn new(op: Operator) -> Result<Self> {
        let deviation = op.unitarity_deviation();
        if deviation >= UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Unitary(op))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0.into_matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `exp(-i H t)` from the cached eigendecomposition of `H`.
pub fn matexp_skewherm(h: &Hermitian, t: f64) -> Result<Unitary> {
    if !t.is_finite() {
        return Err(Error::param("t", format!("time must be finite, got {t}")));
    }
    Ok(h.evolution(t))
}

/// General matrix exponential by scaling and squaring with a Taylor
/// polynomial. Used for non-normal generators such as Lindblad
/// superoperators; Hermitian generators go through [`Hermitian::evolution`].
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    // Scale until the 1-norm is at most 1/4; degree 12 then leaves a
    // truncation error below 1e-17.
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0u32;
    while norm1 / (1u64 << s) as f64 > 0.25 && s < 60 {
        s += 1;
    }
    let scaled = a * C64::new(1.0 / (1u64 << s) as f64, 0.0);
    let id = CMatrix::identity(n, n);
    let mut acc = id.clone();
    for k in (1..=12).rev() {
        acc = &id + &scaled * acc * C64::new(1.0 / k as f64, 0.0);
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    acc
}

/// Which factor of a bipartite space to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// A pure state vector or a density matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Density(CMatrix),
}

impl QuantumState {
    pub fn pure(v: CVector) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::EmptyOperator);
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("vector norm is {norm}")));
        }
        Ok(QuantumState::Pure(v))
    }

    pub fn density(m: CMatrix) -> Result<Self> {
        let op = Operator::new(m)?;
        let deviation = op.hermiticity_deviation();
        if deviation > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (deviation {deviation:e})"
            )));
        }
        let trace = op.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}")));
        }
        let sym = (op.matrix() + op.matrix().adjoint()) * C64::new(0.5, 0.0);
        let h = Hermitian::new(Operator(sym))?;
        let min = h.eigenvalues.iter().fold(f64::INFINITY, |acc, &e| acc.min(e));
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(QuantumState::Density(h.op.into_matrix()))
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        QuantumState::Pure(v)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        QuantumState::Density(CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Density(m) => m.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn density_matrix(&self) -> CMatrix {
        match self {
            QuantumState::Pure(v) => v * v.adjoint(),
            QuantumState::Density(m) => m.clone(),
        }
    }

    pub fn to_density(&self) -> QuantumState {
        QuantumState::Density(self.density_matrix())
    }

    pub fn trace(&self) -> C64 {
        match self {
            QuantumState::Pure(v) => C64::new(v.norm_squared(), 0.0),
            QuantumState::Density(m) => m.trace(),
        }
    }

    /// `Tr(O rho)`, or `<psi|O|psi>` for a pure state.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(match self {
            QuantumState::Pure(v) => v.dotc(&(op.matrix() * v)),
            QuantumState::Density(rho) => {
                let o = op.matrix();
                let n = rho.nrows();
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    for k in 0..n {
                        acc += o[(i, k)] * rho[(k, i)];
                    }
                }
                acc
            }
        })
    }

    /// Reduced density matrix on one factor of a `dims.0 x dims.1` space.
    pub fn partial_trace(&self, keep: Subsystem, dims: (usize, usize)) -> Result<QuantumState> {
        let (da, db) = dims;
        let dim = self.dim();
        if da == 0 || db == 0 || da * db != dim {
            return Err(Error::Factorization {
                dim,
                left: da,
                right: db,
            });
        }
        let rho = self.density_matrix();
        let reduced = match keep {
            Subsystem::First => CMatrix::from_fn(da, da, |i, j| {
                (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum()
            }),
            Subsystem::Second => CMatrix::from_fn(db, db, |i, j| {
                (0..da).map(|k| rho[(k * db + i, k * db + j)]).sum()
            }),
        };
        Ok(QuantumState::Density(reduced))
    }
}

/// Kronecker product.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for Operator {
    fn tensor(&self, other: &Operator) -> Operator {
        Operator(self.0.kronecker(&other.0))
    }
}

impl Tensor for QuantumState {
    fn tensor(&self, other: &QuantumState) -> QuantumState {
        match (self, other) {
            (QuantumState::Pure(a), QuantumState::Pure(b)) => QuantumState::Pure(a.kronecker(b)),
            _ => QuantumState::Density(self.density_matrix().kronecker(&other.density_matrix())),
        }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

pub fn expectation(state: &QuantumState, op: &Operator) -> Result<C64> {
    state.expectation(op)
}

pub fn partial_trace(state: &QuantumState, keep: Subsystem, dims: (usize, usize)) -> Result<QuantumState> {
    state.partial_trace(keep, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_generator_gives_identity() {
        let h = Hermitian::zeros(4);
        let u = matexp_skewherm(&h, 7.3).unwrap();
        assert!(max_dev(u.matrix(), &CMatrix::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn sigma_z_quarter_period() {
        let h = Hermitian::new(pauli::z()).unwrap();
        let u = matexp_skewherm(&h, PI / 2.0).unwrap();
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        );
        assert!(max_dev(u.matrix(), &expected) < 1e-14);
    }

    #[test]
    fn random_generator_is_unitary() {
        let mut rng = rng(11);
        let h = random_hermitian(&mut rng, 6);
        let u = matexp_skewherm(&h, 0.4).unwrap();
        assert!(u.operator().unitarity_deviation() < 1e-10);
        let v = random_vector(&mut rng, 6);
        let back = u.matrix() * (u.matrix().adjoint() * &v);
        assert!((back - &v).camax() < 1e-10);
        // Compare against a Taylor series of the exponential.
        let mut term = CMatrix::identity(6, 6);
        let mut sum = term.clone();
        let gen = h.matrix() * c(0.0, -0.4);
        for k in 1..60 {
            term = &term * &gen * c(1.0 / k as f64, 0.0);
            sum += &term;
        }
        assert!(max_dev(&sum, u.matrix()) < 1e-12);
    }

    #[test]
    fn general_exponential_matches_eigendecomposition() {
        let mut rng = rng(21);
        let h = random_hermitian(&mut rng, 5);
        for &t in &[0.0, 0.01, 1.3, 25.0] {
            let e = expm(&(h.matrix() * c(0.0, -t)));
            assert!(max_dev(&e, h.evolution(t).matrix()) < 1e-11, "t = {t}");
        }
        // Nilpotent generator: exp(N) = I + N.
        let n = Operator::from_real(2, &[0.0, 3.0, 0.0, 0.0]).unwrap();
        let e = expm(n.matrix());
        assert!(max_dev(&e, &(CMatrix::identity(2, 2) + n.matrix())) < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let op = Operator::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(Hermitian::new(op), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            Operator::new(CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn infinite_time_rejected() {
        let h = Hermitian::new(pauli::x()).unwrap();
        assert!(matexp_skewherm(&h, f64::NAN).is_err());
    }

    #[test]
    fn expectation_examples() {
        let ground = QuantumState::basis(2, 0).to_density();
        assert!((ground.expectation(&pauli::z()).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let mixed = QuantumState::maximally_mixed(2);
        assert!(mixed.expectation(&pauli::x()).unwrap().norm() < 1e-15);
        assert!(matches!(
            mixed.expectation(&Operator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expectation_matches_double_loop() {
        let mut rng = rng(3);
        let rho = random_density(&mut rng, 3);
        let o = random_operator(&mut rng, 3);
        let m = rho.density_matrix();
        let mut oracle = c(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                oracle += o.matrix()[(i, j)] * m[(j, i)];
            }
        }
        assert!((rho.expectation(&o).unwrap() - oracle).norm() < 1e-12);
        let h = random_hermitian(&mut rng, 3);
        let e = rho.expectation(h.operator()).unwrap();
        assert!(e.im.abs() < 1e-10 * e.re.abs() + 1e-12);
    }

    #[test]
    fn tensor_examples() {
        let i6 = Operator::identity(2).tensor(&Operator::identity(3));
        assert_eq!(i6, Operator::identity(6));
        let ket = QuantumState::basis(2, 0).tensor(&QuantumState::basis(2, 1));
        assert_eq!(ket, QuantumState::basis(4, 1));
        let xz = pauli::x().tensor(&pauli::z());
        let out = xz.matrix()
            * match QuantumState::basis(4, 0) {
                QuantumState::Pure(v) => v,
                _ => unreachable!(),
            };
        // sigma_x|0> = |1>, sigma_z|0> = +|0>  =>  |10>, index 2
        let mut expected = CVector::zeros(4);
        expected[2] = c(1.0, 0.0);
        assert!((out - expected).camax() < 1e-15);
    }

    #[test]
    fn mixed_product_property() {
        let mut rng = rng(5);
        let (a, c_) = (random_operator(&mut rng, 2), random_operator(&mut rng, 2));
        let (b, d) = (random_operator(&mut rng, 3), random_operator(&mut rng, 3));
        let lhs = &a.tensor(&b) * &c_.tensor(&d);
        let rhs = (&a * &c_).tensor(&(&b * &d));
        assert!(max_dev(lhs.matrix(), rhs.matrix()) < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = rng(8);
        let ra = random_density(&mut rng, 2);
        let rb = random_density(&mut rng, 3);
        let joint = ra.tensor(&rb);
        let back_a = joint.partial_trace(Subsystem::First, (2, 3)).unwrap();
        assert!(max_dev(&back_a.density_matrix(), &ra.density_matrix()) < 1e-12);

        let s = 1.0 / 2f64.sqrt();
        let bell = QuantumState::pure(CVector::from_vec(alloc::vec![
            c(s, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(s, 0.0)
        ]))
        .unwrap();
        for keep in [Subsystem::First, Subsystem::Second] {
            let r = bell.partial_trace(keep, (2, 2)).unwrap();
            assert!(max_dev(&r.density_matrix(), &(CMatrix::identity(2, 2) * c(0.5, 0.0))) < 1e-15);
        }

        assert!(matches!(
            joint.partial_trace(Subsystem::First, (4, 2)),
            Err(Error::Factorization { .. })
        ));
    }

    #[test]
    fn partial_trace_matches_index_contraction() {
        let mut rng = rng(21);
        let rho = random_density(&mut rng, 6).density_matrix();
        let state = QuantumState::Density(rho.clone());
        let got = state.partial_trace(Subsystem::Second, (2, 3)).unwrap().density_matrix();
        // rho[(a,b),(a',b')] with row index a*3+b
        let mut oracle = CMatrix::zeros(3, 3);
        for b in 0..3 {
            for bp in 0..3 {
                for a in 0..2 {
                    oracle[(b, bp)] += rho[(a * 3 + b, a * 3 + bp)];
                }
            }
        }
        assert!(max_dev(&got, &oracle) < 1e-15);
        assert!((got.trace() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn density_validation() {
        assert!(QuantumState::density(CMatrix::identity(2, 2)).is_err());
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(QuantumState::density(neg).is_err());
        assert!(QuantumState::pure(CVector::from_element(2, c(1.0, 0.0))).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn exp_at_zero_is_identity(seed in any::<u64>(), dim in 1usize..6) {
            let h = random_hermitian(&mut rng(seed), dim);
            let u = matexp_skewherm(&h, 0.0).unwrap();
            prop_assert!(max_dev(u.matrix(), &CMatrix::identity(dim, dim)) < 1e-14);
        }

        #[test]
        fn group_property(seed in any::<u64>(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
            let h = random_hermitian(&mut rng(seed), 4);
            let us = h.evolution(s);
            let ut = h.evolution(t);
            let ust = h.evolution(s + t);
            prop_assert!(max_dev(&(us.matrix() * ut.matrix()), ust.matrix()) < 1e-10);
        }

        #[test]
        fn expectation_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut r = rng(seed);
            let rho1 = random_density(&mut r, 3);
            let rho2 = random_density(&mut r, 3);
            let o1 = random_operator(&mut r, 3);
            let o2 = random_operator(&mut r, 3);
            let combo = Operator::new(o1.matrix() * c(a, 0.0) + o2.matrix() * c(b, 0.0)).unwrap();
            let lhs = rho1.expectation(&combo).unwrap();
            let rhs = rho1.expectation(&o1).unwrap() * a + rho1.expectation(&o2).unwrap() * b;
            prop_assert!((lhs - rhs).norm() < 1e-10);
            let mix = QuantumState::Density(rho1.density_matrix() * c(a, 0.0) + rho2.density_matrix() * c(b, 0.0));
            let lhs = mix.expectation(&o1).unwrap();
            let rhs = rho1.expectation(&o1).unwrap() * a + rho2.expectation(&o1).unwrap() * b;
            prop_assert!((lhs - rhs).norm() < 1e-10);
        }

        #[test]
        fn partial_trace_recovers_factors(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
            let mut r = rng(seed);
            let ra = random_density(&mut r, da);
            let rb = random_density(&mut r, db);
            let joint = ra.tensor(&rb);
            let a = joint.partial_trace(Subsystem::First, (da, db)).unwrap();
            let b = joint.partial_trace(Subsystem::Second, (da, db)).unwrap();
            prop_assert!(max_dev(&a.density_matrix(), &ra.density_matrix()) < 1e-12);
            prop_assert!(max_dev(&b.density_matrix(), &rb.density_matrix()) < 1e-12);
        }
    }
}
