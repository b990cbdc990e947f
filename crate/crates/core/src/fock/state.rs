use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::space::FockSpace;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;

/// Largest elementwise deviation |M - M^dag|.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrized(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Ascending eigenvalues of a Hermitian matrix (symmetrized first).
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrized(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// A normalized state vector on a [`FockSpace`].
#[derive(Clone, Debug)]
pub struct PureState {
    space: FockSpace,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(space: FockSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), actual: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { space, amplitudes })
    }

    /// Normalizes `amplitudes`; fails on a (numerically) zero vector.
    pub fn normalized(space: FockSpace, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(space, amplitudes.unscale(norm))
    }

    pub fn basis(space: FockSpace, occupation: &[usize]) -> Result<Self> {
        let idx = space.index_of(occupation).ok_or_else(|| {
            Error::InvalidParameter(format!("occupation {occupation:?} not in basis"))
        })?;
        let mut v = CVector::zeros(space.dim());
        v[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { space, amplitudes: v })
    }

    pub fn vacuum(space: FockSpace) -> Self {
        let zeros = vec![0; space.num_modes()];
        Self::basis(space, &zeros).expect("vacuum is always in the basis")
    }

    /// Normalized superposition of basis kets.
    pub fn superposition(space: FockSpace, terms: &[(Complex64, &[usize])]) -> Result<Self> {
        let mut v = CVector::zeros(space.dim());
        for (c, occ) in terms {
            let idx = space.index_of(occ).ok_or_else(|| {
                Error::InvalidParameter(format!("occupation {occ:?} not in basis"))
            })?;
            v[idx] += c;
        }
        Self::normalized(space, v)
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Complex64 {
        self.space
            .index_of(occupation)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |⟨self|other⟩|², insensitive to global phase.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn to_density(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator { space: self.space.clone(), matrix: m }
    }
}

/// A Hermitian, unit-trace (or explicitly sub-normalized) operator.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    space: FockSpace,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        Self::with_deficit(space, matrix, 0.0)
    }

    /// Accepts a trace in `[1 - max_deficit, 1]` (plus [`TRACE_TOL`]), for
    /// states whose photon-number tail was truncated.
    pub fn with_deficit(space: FockSpace, matrix: CMatrix, max_deficit: f64) -> Result<Self> {
        check_square(&space, &matrix)?;
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let trace = matrix.trace().re;
        if trace > 1.0 + TRACE_TOL || trace < 1.0 - max_deficit - TRACE_TOL {
            return Err(Error::BadTrace { trace });
        }
        Ok(Self { space, matrix })
    }

    pub fn diagonal(space: FockSpace, weights: &[f64]) -> Result<Self> {
        if weights.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), actual: weights.len() });
        }
        let d = DVector::from_iterator(weights.len(), weights.iter().map(|&w| Complex64::new(w, 0.0)));
        Self::new(space, CMatrix::from_diagonal(&d))
    }

    pub(crate) fn from_parts(space: FockSpace, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { space, matrix }
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Copy rescaled to unit trace.
    pub fn renormalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > 0.0) {
            return Err(Error::BadTrace { trace: t });
        }
        Ok(Self { space: self.space.clone(), matrix: self.matrix.unscale(t) })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// A linear map on a [`FockSpace`].
#[derive(Clone, Debug)]
pub struct LinearOperator {
    space: FockSpace,
    matrix: CMatrix,
}

pub const UNITARY_TOL: f64 = 1e-12;

impl LinearOperator {
    pub fn new(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&space, &matrix)?;
        Ok(Self { space, matrix })
    }

    /// Like [`LinearOperator::new`] but checks U^dag U = 1.
    pub fn unitary(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        let op = Self::new(space, matrix)?;
        let err = op.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Error::NotUnitary(err));
        }
        Ok(op)
    }

    pub fn identity(space: FockSpace) -> Self {
        let d = space.dim();
        Self { space, matrix: CMatrix::identity(d, d) }
    }

    /// Lifts `local`, an operator on `modes` (in the order given), to the
    /// whole space by acting as identity on every other mode.
    pub fn embed<S: AsRef<str>>(space: &FockSpace, modes: &[S], local: &CMatrix) -> Result<Self> {
        let positions = space.positions_of(modes)?;
        let f = space.factor(&positions)?;
        if local.nrows() != f.sub.dim() || local.ncols() != f.sub.dim() {
            return Err(Error::DimensionMismatch { expected: f.sub.dim(), actual: local.nrows() });
        }
        let d = space.dim();
        let mut m = CMatrix::zeros(d, d);
        for r in 0..f.rest_dim() {
            for sj in 0..f.sub.dim() {
                let j = f.join(sj, r);
                for si in 0..f.sub.dim() {
                    let v = local[(si, sj)];
                    if v != Complex64::new(0.0, 0.0) {
                        m[(f.join(si, r), j)] = v;
                    }
                }
            }
        }
        Ok(Self { space: space.clone(), matrix: m })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &LinearOperator) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space: self.space.clone(), matrix: sparse_mul(&self.matrix, &other.matrix) })
    }

    pub fn apply(&self, state: &PureState) -> Result<CVector> {
        if self.space != state.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(&self.matrix * &state.amplitudes)
    }

    pub fn apply_state(&self, state: &PureState) -> Result<PureState> {
        let v = self.apply(state)?;
        PureState::new(self.space.clone(), v)
    }

    /// max |U^dag U - 1| elementwise.
    pub fn unitarity_error(&self) -> f64 {
        let p = sparse_mul(&self.matrix.adjoint(), &self.matrix);
        let mut worst = 0.0f64;
        for j in 0..p.ncols() {
            for i in 0..p.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Dense product that skips zero entries of the left factor. Embedded
/// local operators are mostly zeros, so chains of them compose cheaply.
fn sparse_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let p = b.ncols();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = CMatrix::zeros(n, p);
    for j in 0..p {
        let bcol = b.column(j);
        let mut ocol = out.column_mut(j);
        for k in 0..a.ncols() {
            let bk = bcol[k];
            if bk == zero {
                continue;
            }
            let acol = a.column(k);
            for i in 0..n {
                let aik = acol[i];
                if aik != zero {
                    ocol[i] += aik * bk;
                }
            }
        }
    }
    out
}

fn check_square(space: &FockSpace, m: &CMatrix) -> Result<()> {
    if m.nrows() != space.dim() || m.ncols() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), actual: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

/// Anything with a matrix on a Fock space that observables can be read from.
pub trait Operator {
    fn space(&self) -> &FockSpace;
    fn matrix(&self) -> &CMatrix;
}

impl Operator for DensityOperator {
    fn space(&self) -> &FockSpace {
        &self.space
    }
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl Operator for LinearOperator {
    fn space(&self) -> &FockSpace {
        &self.space
    }
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// A state an expectation value can be taken in.
pub trait State {
    fn space(&self) -> &FockSpace;
    /// ⟨ψ|M|ψ⟩ or Tr(Mρ), unreduced.
    fn raw_expectation(&self, m: &CMatrix) -> Complex64;
}

impl State for PureState {
    fn space(&self) -> &FockSpace {
        &self.space
    }
    fn raw_expectation(&self, m: &CMatrix) -> Complex64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }
}

impl State for DensityOperator {
    fn space(&self) -> &FockSpace {
        &self.space
    }
    fn raw_expectation(&self, m: &CMatrix) -> Complex64 {
        // Tr(M rho) without forming the product
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m.nrows() {
            for k in 0..m.ncols() {
                acc += m[(i, k)] * self.matrix[(k, i)];
            }
        }
        acc
    }
}
