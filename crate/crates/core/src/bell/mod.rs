//! CHSH analysis of the heralded state.
//!
//! Each observer applies the branch "rotation" to their pair of modes and
//! then reads two yes/no (vacuum vs. non-vacuum) detectors. With `z = 1`
//! for a click, the local result is `X = z_{A1} − z_{A2}` (resp. `Y`), so
//! outcomes live in {−1, 0, +1}. Correlations are evaluated two ways: by
//! enumerating every ensemble entry ([`correlation_enumerated`]) and from
//! the closed form ([`correlation_analytic`]).

pub mod thresholds;

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::{BranchState, ConditionalOutputEnsemble};
use crate::error::{Error, Result};

pub use thresholds::*;

/// Tsirelson's bound 2√2.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;
/// Local-realistic bound on the CHSH value.
pub const LOCAL_BOUND: f64 = 2.0;

/// A local rotation angle, reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationSetting(f64);

impl RotationSetting {
    pub fn new(theta: f64) -> Self {
        let r = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π
        Self(if r >= TAU { 0.0 } else { r })
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// Rotation on the (excitation in mode 1, excitation in mode 2)
    /// coordinates: `|n,0⟩ → cos θ |n,0⟩ + sin θ |0,n⟩`,
    /// `|0,n⟩ → −sin θ |n,0⟩ + cos θ |0,n⟩`.
    pub fn matrix(self) -> [[f64; 2]; 2] {
        let (s, c) = self.0.sin_cos();
        [[c, -s], [s, c]]
    }
}

impl From<f64> for RotationSetting {
    fn from(theta: f64) -> Self {
        Self::new(theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Measurement settings `(θ_A, θ'_A, θ_B, θ'_B)` in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellAngles {
    pub theta_a: f64,
    pub theta_a_prime: f64,
    pub theta_b: f64,
    pub theta_b_prime: f64,
}

impl BellAngles {
    /// `(0, π/4, π/8, −π/8)`, the maximizing settings.
    pub const CANONICAL: BellAngles = BellAngles {
        theta_a: 0.0,
        theta_a_prime: FRAC_PI_4,
        theta_b: FRAC_PI_8,
        theta_b_prime: -FRAC_PI_8,
    };

    pub fn new(theta_a: f64, theta_a_prime: f64, theta_b: f64, theta_b_prime: f64) -> Result<Self> {
        let a = Self { theta_a, theta_a_prime, theta_b, theta_b_prime };
        if a.as_array().iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("Bell angles must be finite".into()));
        }
        Ok(a)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.theta_a, self.theta_a_prime, self.theta_b, self.theta_b_prime]
    }

    /// The four (A, B) setting pairs in CHSH order; the last enters with a
    /// minus sign.
    pub fn settings(&self) -> [(f64, f64); 4] {
        [
            (self.theta_a, self.theta_b),
            (self.theta_a, self.theta_b_prime),
            (self.theta_a_prime, self.theta_b),
            (self.theta_a_prime, self.theta_b_prime),
        ]
    }
}

pub fn canonical_angles() -> BellAngles {
    BellAngles::CANONICAL
}

/// Applies the local rotation on one side. A side carrying no photons is
/// left unchanged.
pub fn rotate_branch(state: &BranchState, side: Side, theta: RotationSetting) -> BranchState {
    let excitation = match side {
        Side::A => state.n,
        Side::B => state.m,
    };
    if excitation == 0 {
        return state.clone();
    }
    let r = theta.matrix();
    let a = state.amplitudes();
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = match side {
                Side::A => a[0][j] * r[i][0] + a[1][j] * r[i][1],
                Side::B => a[i][0] * r[j][0] + a[i][1] * r[j][1],
            };
        }
    }
    BranchState::from_amps(state.n, state.m, out)
}

/// Joint distribution of (X, Y) ∈ {−1, 0, +1}².
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    /// `probs[x + 1][y + 1]`.
    pub probs: [[f64; 3]; 3],
}

pub const OUTCOMES: [i8; 3] = [-1, 0, 1];

impl OutcomeDistribution {
    pub fn prob(&self, x: i8, y: i8) -> f64 {
        self.probs[(x + 1) as usize][(y + 1) as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    /// `Σ X Y p(X, Y)`.
    pub fn correlation(&self) -> f64 {
        let mut c = 0.0;
        for (i, x) in OUTCOMES.iter().enumerate() {
            for (j, y) in OUTCOMES.iter().enumerate() {
                c += f64::from(x * y) * self.probs[i][j];
            }
        }
        c
    }

    fn add_scaled(&mut self, other: &OutcomeDistribution, w: f64) {
        for i in 0..3 {
            for j in 0..3 {
                self.probs[i][j] += w * other.probs[i][j];
            }
        }
    }

    fn scaled(mut self, w: f64) -> Self {
        self.probs.iter_mut().flatten().for_each(|p| *p *= w);
        self
    }
}

fn click_value(first: usize, second: usize) -> i8 {
    i8::from(first > 0) - i8::from(second > 0)
}

/// Outcome distribution of a single branch state after both rotations.
pub fn branch_outcomes(state: &BranchState, theta_a: f64, theta_b: f64) -> OutcomeDistribution {
    let rotated = rotate_branch(
        &rotate_branch(state, Side::A, theta_a.into()),
        Side::B,
        theta_b.into(),
    );
    let mut dist = OutcomeDistribution::default();
    for (ket, c) in rotated.physical_terms() {
        let x = click_value(ket[0], ket[1]);
        let y = click_value(ket[2], ket[3]);
        dist.probs[(x + 1) as usize][(y + 1) as usize] += c.norm_sqr();
    }
    dist
}

/// Ensemble-averaged outcome distribution, renormalized over the entries
/// actually present (the truncated tail is excluded).
pub fn outcome_distribution(ensemble: &ConditionalOutputEnsemble, theta_a: f64, theta_b: f64) -> OutcomeDistribution {
    let mut acc = OutcomeDistribution::default();
    let mut total = 0.0;
    for e in ensemble.entries() {
        acc.add_scaled(&branch_outcomes(&e.branch, theta_a, theta_b), e.weight);
        total += e.weight;
    }
    if total > 0.0 {
        acc.scaled(1.0 / total)
    } else {
        acc
    }
}

/// `C(θ_A, θ_B) = Σ X Y p(X, Y)` by enumeration over the ensemble.
pub fn correlation_enumerated(ensemble: &ConditionalOutputEnsemble, theta_a: f64, theta_b: f64) -> f64 {
    outcome_distribution(ensemble, theta_a, theta_b).correlation()
}

fn check_overlaps(p0: f64, r0: f64) -> Result<()> {
    for v in [p0, r0] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("vacuum overlap {v} outside [0, 1]")));
        }
    }
    if p0 * r0 >= 1.0 {
        return Err(Error::VacuumInputs);
    }
    Ok(())
}

/// `(1 − p_0)(1 − r_0)/(1 − p_0 r_0)`, the visibility of the correlations.
pub fn correlation_prefactor(p0: f64, r0: f64) -> Result<f64> {
    check_overlaps(p0, r0)?;
    Ok((1.0 - p0) * (1.0 - r0) / (1.0 - p0 * r0))
}

/// Closed form `−cos[2(θ_A − θ_B)]·(1 − p_0)(1 − r_0)/(1 − p_0 r_0)`.
pub fn correlation_analytic(p0: f64, r0: f64, theta_a: f64, theta_b: f64) -> Result<f64> {
    Ok(-(2.0 * (theta_a - theta_b)).cos() * correlation_prefactor(p0, r0)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Enumeration,
    Analytic,
    MonteCarlo,
}

/// A CHSH value with the four correlations it was built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BellResult {
    pub bell_value: f64,
    pub correlations: [f64; 4],
    pub method: Method,
}

/// `ℬ = |C(θ_A,θ_B) + C(θ_A,θ'_B) + C(θ'_A,θ_B) − C(θ'_A,θ'_B)|`.
pub fn bell_value<F: Fn(f64, f64) -> f64>(correlation: F, angles: &BellAngles, method: Method) -> BellResult {
    let s = angles.settings();
    let correlations = s.map(|(a, b)| correlation(a, b));
    let bell_value = (correlations[0] + correlations[1] + correlations[2] - correlations[3]).abs();
    BellResult { bell_value, correlations, method }
}

pub fn bell_enumerated(ensemble: &ConditionalOutputEnsemble, angles: &BellAngles) -> BellResult {
    bell_value(|a, b| correlation_enumerated(ensemble, a, b), angles, Method::Enumeration)
}

pub fn bell_analytic(p0: f64, r0: f64, angles: &BellAngles) -> Result<BellResult> {
    let k = correlation_prefactor(p0, r0)?;
    Ok(bell_value(|a, b| -(2.0 * (a - b)).cos() * k, angles, Method::Analytic))
}

/// `ℬ_max = 2√2 (1 − p_0)(1 − r_0)/(1 − p_0 r_0)`.
pub fn bell_max_analytic(p0: f64, r0: f64) -> Result<f64> {
    Ok(TSIRELSON * correlation_prefactor(p0, r0)?)
}

/// Best settings found by [`search_max_bell`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleSearch {
    pub angles: BellAngles,
    pub bell_value: f64,
}

/// Grid search over all four angles on `[0, π)` with spacing `step`,
/// followed by coordinate refinement down to 1e-12 rad.
///
/// The CHSH sum splits into a θ_B term and a θ'_B term that can be
/// maximized independently for fixed (θ_A, θ'_A), so the grid costs
/// O(k³) evaluations of a tabulated correlation rather than O(k⁴).
pub fn search_max_bell<F: Fn(f64, f64) -> f64>(correlation: F, step: f64) -> Result<AngleSearch> {
    if !(step > 0.0) || step > PI {
        return Err(Error::InvalidParameter(format!("angle step {step} must lie in (0, π]")));
    }
    let k = (PI / step).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..k).map(|i| i as f64 * step).collect();
    let table: Vec<Vec<f64>> = grid.iter().map(|&a| grid.iter().map(|&b| correlation(a, b)).collect()).collect();

    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    for a in 0..k {
        for ap in 0..k {
            // extremes of the θ_B and θ'_B brackets, for either overall sign
            let (mut sp, mut sm) = ((f64::NEG_INFINITY, 0), (f64::INFINITY, 0));
            let (mut dp, mut dm) = ((f64::NEG_INFINITY, 0), (f64::INFINITY, 0));
            for b in 0..k {
                let s = table[a][b] + table[ap][b];
                let d = table[a][b] - table[ap][b];
                if s > sp.0 { sp = (s, b); }
                if s < sm.0 { sm = (s, b); }
                if d > dp.0 { dp = (d, b); }
                if d < dm.0 { dm = (d, b); }
            }
            let hi = sp.0 + dp.0;
            let lo = -(sm.0 + dm.0);
            if hi > best.0 {
                best = (hi, [a, ap, sp.1, dp.1]);
            }
            if lo > best.0 {
                best = (lo, [a, ap, sm.1, dm.1]);
            }
        }
    }

    let chsh = |t: &[f64; 4]| {
        let angles = BellAngles { theta_a: t[0], theta_a_prime: t[1], theta_b: t[2], theta_b_prime: t[3] };
        bell_value(&correlation, &angles, Method::Enumeration).bell_value
    };
    let mut t = best.1.map(|i| grid[i]);
    let mut value = chsh(&t);
    let mut h = step;
    while h > 1e-12 {
        let mut improved = false;
        for i in 0..4 {
            for dir in [-1.0, 1.0] {
                let mut trial = t;
                trial[i] += dir * h;
                let v = chsh(&trial);
                if v > value {
                    value = v;
                    t = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok(AngleSearch {
        angles: BellAngles { theta_a: t[0], theta_a_prime: t[1], theta_b: t[2], theta_b_prime: t[3] },
        bell_value: value,
    })
}
