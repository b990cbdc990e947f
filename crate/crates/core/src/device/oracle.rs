//! Dense unitary model of the preparation device.
//!
//! Modes, in basis order: `CL`, `CR` (the two arms of the central
//! interferometer, cutoff 1) and `A1`, `A2`, `B1`, `B2` (cutoff `c`).
//! The single photon enters in `CR`. Both central beam splitters are the
//! symmetric 50:50 coupler with amplitude reflectivity `i/√2`,
//! `a_L† → (a_L† + i a_R†)/√2`, `a_R† → (i a_L† + a_R†)/√2`, so after the
//! first one the photon is in `(|0,1⟩ + i|1,0⟩)/√2`. A photon in `CL` flips
//! A1↔A2, a photon in `CR` flips B1↔B2. After the second coupler a click in
//! `CL` is detector D+ and a click in `CR` is detector D−.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use super::{full_output_space, BranchState};
use crate::error::{Error, Result};
use crate::fock::{annihilation, CMatrix, CVector, FockSpace, LinearOperator, PureState};

/// Largest per-mode cutoff the dense oracle accepts.
pub const MAX_ORACLE_CUTOFF: usize = 4;

pub const ARM_LEFT: &str = "CL";
pub const ARM_RIGHT: &str = "CR";

fn distinct(a: &str, b: &str) -> Result<()> {
    if a == b {
        return Err(Error::DuplicateMode(a.to_owned()));
    }
    Ok(())
}

fn two_mode_ladders(cutoff: usize) -> (CMatrix, CMatrix) {
    let a = annihilation(cutoff);
    let id = CMatrix::identity(cutoff + 1, cutoff + 1);
    (a.kronecker(&id), id.kronecker(&a))
}

/// 50:50 beam splitter `exp[(π/4)(a₂†a₁ − a₁†a₂)]`; maps `|1,0⟩` to
/// `(|1,0⟩ + |0,1⟩)/√2`.
pub fn beamsplitter_unitary(space: &FockSpace, mode1: &str, mode2: &str) -> Result<LinearOperator> {
    distinct(mode1, mode2)?;
    let (c1, c2) = (space.cutoff_of(mode1)?, space.cutoff_of(mode2)?);
    if c1 != c2 {
        return Err(Error::InvalidParameter(format!(
            "beam splitter modes need equal cutoffs, got {c1} and {c2}"
        )));
    }
    let (a1, a2) = two_mode_ladders(c1);
    let gen = (a2.adjoint() * &a1 - a1.adjoint() * &a2) * Complex64::new(FRAC_PI_4, 0.0);
    let local = gen.exp();
    let op = LinearOperator::embed(space, &[mode1, mode2], &local)?;
    LinearOperator::unitary(op.space().clone(), op.matrix().clone())
}

/// Symmetric coupler `exp[i(π/4)(a_L†a_R + a_R†a_L)]` with amplitude
/// reflectivity `i/√2`.
pub fn symmetric_beamsplitter(space: &FockSpace, left: &str, right: &str) -> Result<LinearOperator> {
    distinct(left, right)?;
    let (c1, c2) = (space.cutoff_of(left)?, space.cutoff_of(right)?);
    if c1 != c2 {
        return Err(Error::InvalidParameter(format!(
            "beam splitter modes need equal cutoffs, got {c1} and {c2}"
        )));
    }
    let (al, ar) = two_mode_ladders(c1);
    let gen = (al.adjoint() * &ar + ar.adjoint() * &al) * Complex64::new(0.0, FRAC_PI_4);
    let local = gen.exp();
    let op = LinearOperator::embed(space, &[left, right], &local)?;
    LinearOperator::unitary(op.space().clone(), op.matrix().clone())
}

/// Cross-Kerr phase `exp(i·phase·n_c·n_t)`; `phase = π` is the QND setting.
pub fn kerr_unitary(space: &FockSpace, control: &str, target: &str, phase: f64) -> Result<LinearOperator> {
    distinct(control, target)?;
    let (pc, pt) = (space.position(control)?, space.position(target)?);
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    for (i, occ) in space.basis().enumerate() {
        let k = (occ[pc] * occ[pt]) as f64;
        m[(i, i)] = Complex64::from_polar(1.0, phase * k);
    }
    LinearOperator::new(space.clone(), m)
}

/// `U_BS† U_I U_BS` on (arm, i1, i2): swaps i1 and i2 when the arm holds
/// a photon, identity otherwise.
pub fn device_unitary(space: &FockSpace, arm: &str, i1: &str, i2: &str) -> Result<LinearOperator> {
    device_unitary_with_phase(space, arm, i1, i2, PI)
}

/// [`device_unitary`] with a configurable Kerr phase κτ.
pub fn device_unitary_with_phase(
    space: &FockSpace,
    arm: &str,
    i1: &str,
    i2: &str,
    phase: f64,
) -> Result<LinearOperator> {
    distinct(arm, i1)?;
    distinct(arm, i2)?;
    if space.cutoff_of(arm)? < 1 {
        return Err(Error::InvalidParameter("arm mode needs cutoff >= 1".into()));
    }
    let bs = beamsplitter_unitary(space, i1, i2)?;
    let kerr = kerr_unitary(space, arm, i1, phase)?;
    bs.adjoint().compose(&kerr)?.compose(&bs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Detector {
    #[serde(rename = "D+")]
    Plus,
    #[serde(rename = "D-")]
    Minus,
}

/// Outcome of one heralding detector for a Fock input `|n⟩_{A1}|m⟩_{B1}`.
#[derive(Clone, Debug)]
pub struct DeviceRunRecord {
    pub detector: Detector,
    pub probability: f64,
    /// Normalized conditional state on (A1, A2, B1, B2); `None` when the
    /// detector never fires.
    pub post_state: Option<PureState>,
    pub input_n: usize,
    pub input_m: usize,
}

/// The full device at one cutoff, reusable across inputs.
#[derive(Clone, Debug)]
pub struct DeviceOracle {
    cutoff: usize,
    space: FockSpace,
    first_coupler: LinearOperator,
    interaction: LinearOperator,
    last_coupler: LinearOperator,
}

impl DeviceOracle {
    pub fn new(cutoff: usize) -> Result<Self> {
        Self::with_kerr_phase(cutoff, PI)
    }

    pub fn with_kerr_phase(cutoff: usize, phase: f64) -> Result<Self> {
        if cutoff > MAX_ORACLE_CUTOFF {
            return Err(Error::CutoffExceeded { value: cutoff, cutoff: MAX_ORACLE_CUTOFF });
        }
        let space = FockSpace::new(
            &[ARM_LEFT, ARM_RIGHT, "A1", "A2", "B1", "B2"],
            &[1, 1, cutoff, cutoff, cutoff, cutoff],
        )?;
        let coupler = symmetric_beamsplitter(&space, ARM_LEFT, ARM_RIGHT)?;
        let ua = device_unitary_with_phase(&space, ARM_LEFT, "A1", "A2", phase)?;
        let ub = device_unitary_with_phase(&space, ARM_RIGHT, "B1", "B2", phase)?;
        let interaction = ub.compose(&ua)?;
        Ok(Self {
            cutoff,
            space,
            first_coupler: coupler.clone(),
            interaction,
            last_coupler: coupler,
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    /// The whole device as one operator.
    pub fn chain(&self) -> Result<LinearOperator> {
        self.last_coupler.compose(&self.interaction)?.compose(&self.first_coupler)
    }

    fn input(&self, n: usize, m: usize) -> Result<PureState> {
        for v in [n, m] {
            if v > self.cutoff {
                return Err(Error::CutoffExceeded { value: v, cutoff: self.cutoff });
            }
        }
        PureState::basis(self.space.clone(), &[0, 1, n, 0, m, 0])
    }

    /// State after the Kerr interactions, before the which-way eraser.
    pub fn intermediate_state(&self, n: usize, m: usize) -> Result<PureState> {
        let s = self.first_coupler.apply_state(&self.input(n, m)?)?;
        self.interaction.apply_state(&s)
    }

    pub fn final_state(&self, n: usize, m: usize) -> Result<PureState> {
        let s = self.intermediate_state(n, m)?;
        self.last_coupler.apply_state(&s)
    }

    pub fn run(&self, n: usize, m: usize) -> Result<(DeviceRunRecord, DeviceRunRecord)> {
        let out = self.final_state(n, m)?;
        let plus = self.condition(&out, Detector::Plus, n, m)?;
        let minus = self.condition(&out, Detector::Minus, n, m)?;
        Ok((plus, minus))
    }

    fn condition(&self, out: &PureState, detector: Detector, n: usize, m: usize) -> Result<DeviceRunRecord> {
        let arms = match detector {
            Detector::Plus => [1, 0],
            Detector::Minus => [0, 1],
        };
        let target = full_output_space(self.cutoff)?;
        let mut v = CVector::zeros(target.dim());
        for (i, occ) in self.space.basis().enumerate() {
            if occ[..2] == arms {
                let j = target.index_of(&occ[2..]).expect("same cutoffs");
                v[j] = out.amplitudes()[i];
            }
        }
        let probability = v.norm_squared();
        let post_state = if probability > 1e-24 {
            Some(PureState::normalized(target, v)?)
        } else {
            None
        };
        Ok(DeviceRunRecord { detector, probability, post_state, input_n: n, input_m: m })
    }
}

/// Runs the dense device on `|n⟩_{A1}|m⟩_{B1}` and returns the (D+, D−)
/// records.
pub fn run_device_oracle(n: usize, m: usize, cutoff: usize) -> Result<(DeviceRunRecord, DeviceRunRecord)> {
    DeviceOracle::new(cutoff)?.run(n, m)
}

/// `|⟨ψ_nm|post⟩|²` against the structural singlet branch.
pub fn fidelity_with_singlet(record: &DeviceRunRecord) -> Result<f64> {
    let post = record
        .post_state
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("detector never fires for this input".into()))?;
    let psi = BranchState::singlet(record.input_n, record.input_m)?.to_pure_state(post.space())?;
    psi.fidelity(post)
}
