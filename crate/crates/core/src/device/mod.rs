//! The conditional entangling device.
//!
//! Two routes to the heralded output state:
//!
//! * the structural route ([`build_output_ensemble`]) writes the output
//!   directly as a weighted mixture of two-branch states
//!   `(|n,0,0,m⟩ − |0,n,m,0⟩)/√2` on modes (A1, A2, B1, B2);
//! * the unitary route ([`oracle`]) pushes Fock inputs through the beam
//!   splitters, the Kerr cross-phase interaction and the which-way eraser,
//!   then conditions on the detector click.
//!
//! The structural route is the production path; the oracle exists to check
//! it and is limited to small cutoffs.

pub mod oracle;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityOperator, FockSpace, PureState};
use crate::photon::{PhotonNumberDistribution, DEFAULT_TAIL_EPS};

/// Mode labels of the two local systems, in basis order.
pub const OUTPUT_MODES: [&str; 4] = ["A1", "A2", "B1", "B2"];
/// Modes carrying system B, the partially transposed side.
pub const SYSTEM_B: [&str; 2] = ["B1", "B2"];
pub const SYSTEM_A: [&str; 2] = ["A1", "A2"];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A state in the span of `|n⟩|0⟩ ⊗ |m⟩|0⟩`-type kets: side A has its
/// `n` photons in A1 or A2, side B has its `m` photons in B1 or B2.
///
/// `amps[a][b]` is the amplitude with A's excitation in slot `a` and B's in
/// slot `b`. When a side's excitation is 0 both of its slots name the same
/// vacuum ket, and the physical amplitudes add.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchState {
    pub n: usize,
    pub m: usize,
    amps: [[Complex64; 2]; 2],
}

impl BranchState {
    /// `c_unflipped |n,0,0,m⟩ + c_flipped |0,n,m,0⟩`.
    pub fn from_branches(n: usize, m: usize, c_unflipped: Complex64, c_flipped: Complex64) -> Result<Self> {
        let mut amps = [[ZERO; 2]; 2];
        amps[0][1] = c_unflipped;
        amps[1][0] = c_flipped;
        let s = Self { n, m, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm.sqrt()));
        }
        Ok(s)
    }

    /// The heralded singlet analogue `(|n,0,0,m⟩ − |0,n,m,0⟩)/√2`.
    pub fn singlet(n: usize, m: usize) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_branches(n, m, Complex64::new(h, 0.0), Complex64::new(-h, 0.0))
    }

    /// `(|n,0,0,m⟩ + |0,n,m,0⟩)/√2`, or the vacuum for `n = m = 0`.
    pub fn symmetric(n: usize, m: usize) -> Result<Self> {
        if n == 0 && m == 0 {
            return Self::from_branches(0, 0, Complex64::new(1.0, 0.0), ZERO);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_branches(n, m, Complex64::new(h, 0.0), Complex64::new(h, 0.0))
    }

    pub fn amplitudes(&self) -> &[[Complex64; 2]; 2] {
        &self.amps
    }

    pub(crate) fn from_amps(n: usize, m: usize, amps: [[Complex64; 2]; 2]) -> Self {
        Self { n, m, amps }
    }

    pub fn c_unflipped(&self) -> Complex64 {
        self.amps[0][1]
    }

    pub fn c_flipped(&self) -> Complex64 {
        self.amps[1][0]
    }

    fn side_ket(excitation: usize, slot: usize) -> [usize; 2] {
        if slot == 0 { [excitation, 0] } else { [0, excitation] }
    }

    /// Distinct (A1, A2, B1, B2) kets with their merged amplitudes.
    pub fn physical_terms(&self) -> Vec<([usize; 4], Complex64)> {
        let mut terms: Vec<([usize; 4], Complex64)> = Vec::with_capacity(4);
        for a in 0..2 {
            for b in 0..2 {
                let c = self.amps[a][b];
                if c == ZERO {
                    continue;
                }
                let ka = Self::side_ket(self.n, a);
                let kb = Self::side_ket(self.m, b);
                let ket = [ka[0], ka[1], kb[0], kb[1]];
                match terms.iter_mut().find(|(k, _)| *k == ket) {
                    Some((_, acc)) => *acc += c,
                    None => terms.push((ket, c)),
                }
            }
        }
        terms
    }

    pub fn norm_sqr(&self) -> f64 {
        self.physical_terms().iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    /// Dense vector on a space with modes A1, A2, B1, B2.
    pub fn to_pure_state(&self, space: &FockSpace) -> Result<PureState> {
        let positions = space.positions_of(&OUTPUT_MODES)?;
        let mut v = crate::fock::CVector::zeros(space.dim());
        for (ket, c) in self.physical_terms() {
            let mut occ = vec![0; space.num_modes()];
            for (p, k) in positions.iter().zip(ket) {
                occ[*p] = k;
            }
            let idx = space.index_of(&occ).ok_or(Error::CutoffExceeded {
                value: self.n.max(self.m),
                cutoff: *space.cutoffs().iter().min().unwrap_or(&0),
            })?;
            v[idx] += c;
        }
        PureState::new(space.clone(), v)
    }
}

/// One component of the heralded mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEntry {
    pub n: usize,
    pub m: usize,
    pub weight: f64,
    pub branch: BranchState,
}

/// The post-selected output `ρ_out = N Σ p_n r_m |ψ_nm⟩⟨ψ_nm|` over all
/// `(n, m) ≠ (0, 0)`, with `N = 1/(1 − p_0 r_0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalOutputEnsemble {
    entries: Vec<EnsembleEntry>,
    normalization: f64,
    p0: f64,
    r0: f64,
    deficit: f64,
}

/// Builds the heralded output mixture from the two input distributions.
pub fn build_output_ensemble(
    source_a: &PhotonNumberDistribution,
    source_b: &PhotonNumberDistribution,
) -> Result<ConditionalOutputEnsemble> {
    ConditionalOutputEnsemble::from_weights(source_a.weights(), source_b.weights())
}

impl ConditionalOutputEnsemble {
    /// Same as [`build_output_ensemble`] from raw weight lists whose first
    /// entries are the vacuum overlaps.
    pub fn from_weights(pa: &[f64], rb: &[f64]) -> Result<Self> {
        let (p0, r0) = (
            pa.first().copied().unwrap_or(0.0),
            rb.first().copied().unwrap_or(0.0),
        );
        let success = 1.0 - p0 * r0;
        if !(success > 0.0) {
            return Err(Error::VacuumInputs);
        }
        let normalization = 1.0 / success;
        let mut entries = Vec::new();
        for (n, &p) in pa.iter().enumerate() {
            for (m, &r) in rb.iter().enumerate() {
                if (n, m) == (0, 0) || p * r <= 0.0 {
                    continue;
                }
                entries.push(EnsembleEntry {
                    n,
                    m,
                    weight: normalization * p * r,
                    branch: BranchState::singlet(n, m)?,
                });
            }
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        Ok(Self { entries, normalization, p0, r0, deficit: (1.0 - total).max(0.0) })
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    /// `N = (1 − p_0 r_0)^{-1}`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Weight lost to the truncated photon-number tails of the inputs.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn weight_of(&self, n: usize, m: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| e.n == n && e.m == m)
            .map_or(0.0, |e| e.weight)
    }

    pub fn max_excitation(&self) -> usize {
        self.entries.iter().map(|e| e.n.max(e.m)).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EnsembleJson {
            p0: self.p0,
            r0: self.r0,
            normalization: self.normalization,
            entries: self
                .entries
                .iter()
                .map(|e| EntryJson { n: e.n, m: e.m, weight: e.weight })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses `{p0, r0, N, entries: [{n, m, weight}]}`; branch amplitudes
    /// are the singlet analogue for every entry.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnsembleJson = serde_json::from_str(text)?;
        for v in [doc.p0, doc.r0] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parse(format!("vacuum overlap {v} outside [0, 1]")));
            }
        }
        let success = 1.0 - doc.p0 * doc.r0;
        if !(success > 0.0) {
            return Err(Error::VacuumInputs);
        }
        let expected_n = 1.0 / success;
        if !doc.normalization.is_finite() || (doc.normalization - expected_n).abs() > 1e-12 * expected_n {
            return Err(Error::Parse(format!("N = {} but 1/(1 - p0 r0) = {expected_n}", doc.normalization)));
        }
        let mut entries = Vec::with_capacity(doc.entries.len());
        for e in &doc.entries {
            if (e.n, e.m) == (0, 0) {
                return Err(Error::Parse("entry (0, 0) is excluded by post-selection".into()));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::Parse(format!("bad weight {}", e.weight)));
            }
            if entries.iter().any(|x: &EnsembleEntry| x.n == e.n && x.m == e.m) {
                return Err(Error::Parse(format!("duplicate entry ({}, {})", e.n, e.m)));
            }
            entries.push(EnsembleEntry { n: e.n, m: e.m, weight: e.weight, branch: BranchState::singlet(e.n, e.m)? });
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if total > 1.0 + 1e-10 {
            return Err(Error::Parse(format!("weights sum to {total} > 1")));
        }
        Ok(Self {
            entries,
            normalization: doc.normalization,
            p0: doc.p0,
            r0: doc.r0,
            deficit: (1.0 - total).max(0.0),
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleJson {
    p0: f64,
    r0: f64,
    #[serde(rename = "N")]
    normalization: f64,
    entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    n: usize,
    m: usize,
    weight: f64,
}

/// The output sector: modes A1, A2, B1, B2 at a common cutoff, with at most
/// one occupied mode per local pair. ρ_out and its B-partial transpose are
/// supported here.
pub fn output_space(cutoff: usize) -> Result<FockSpace> {
    FockSpace::new(&OUTPUT_MODES, &[cutoff; 4])?
        .with_exclusive_group(&SYSTEM_A)?
        .with_exclusive_group(&SYSTEM_B)
}

/// Unrestricted four-mode space (dimension `(cutoff+1)^4`).
pub fn full_output_space(cutoff: usize) -> Result<FockSpace> {
    FockSpace::new(&OUTPUT_MODES, &[cutoff; 4])
}

/// A dense ρ_out together with the weight missing from it.
#[derive(Clone, Debug)]
pub struct DenseOutput {
    pub density: DensityOperator,
    /// `1 − Tr ρ`: input tails plus entries beyond the cutoff.
    pub deficit: f64,
}

/// Dense ρ_out on [`output_space`], rejecting a deficit above the default
/// tail epsilon.
pub fn ensemble_to_density(ensemble: &ConditionalOutputEnsemble, cutoff: usize) -> Result<DenseOutput> {
    ensemble_to_density_in(ensemble, &output_space(cutoff)?, DEFAULT_TAIL_EPS)
}

/// Dense ρ_out on any space containing modes A1, A2, B1, B2; entries not
/// representable there are dropped and counted in the deficit.
pub fn ensemble_to_density_in(
    ensemble: &ConditionalOutputEnsemble,
    space: &FockSpace,
    max_deficit: f64,
) -> Result<DenseOutput> {
    let positions = space.positions_of(&OUTPUT_MODES)?;
    let d = space.dim();
    let mut rho = CMatrix::zeros(d, d);
    let mut kept = 0.0;
    let mut idx = Vec::with_capacity(2);
    'entries: for e in &ensemble.entries {
        idx.clear();
        for (ket, c) in e.branch.physical_terms() {
            let mut occ = vec![0; space.num_modes()];
            for (p, k) in positions.iter().zip(ket) {
                occ[*p] = k;
            }
            match space.index_of(&occ) {
                Some(i) => idx.push((i, c)),
                None => continue 'entries,
            }
        }
        for &(i, ci) in &idx {
            for &(j, cj) in &idx {
                rho[(i, j)] += ci * cj.conj() * e.weight;
            }
        }
        kept += e.weight;
    }
    let deficit = (1.0 - kept).max(0.0);
    if deficit > max_deficit {
        return Err(Error::DeficitTooLarge { deficit, limit: max_deficit });
    }
    let density = DensityOperator::with_deficit(space.clone(), rho, max_deficit)?;
    Ok(DenseOutput { density, deficit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{partial_transpose, min_eigenvalue};
    use approx::assert_abs_diff_eq;

    fn custom(w: &[f64]) -> PhotonNumberDistribution {
        PhotonNumberDistribution::custom(w.to_vec(), 1e-10).unwrap()
    }

    #[test]
    fn half_half_inputs() {
        let e = build_output_ensemble(&custom(&[0.5, 0.5]), &custom(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(e.normalization(), 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(e.entries().len(), 3);
        for (n, m) in [(0, 1), (1, 0), (1, 1)] {
            assert_abs_diff_eq!(e.weight_of(n, m), 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(e.weight_of(0, 0), 0.0);
    }

    #[test]
    fn no_vacuum_inputs_give_single_singlet() {
        let e = build_output_ensemble(&custom(&[0.0, 1.0]), &custom(&[0.0, 1.0])).unwrap();
        assert_eq!(e.normalization(), 1.0);
        assert_eq!(e.entries().len(), 1);
        assert_eq!((e.entries()[0].n, e.entries()[0].m, e.entries()[0].weight), (1, 1, 1.0));
    }

    #[test]
    fn thermal_unit_mean_normalization() {
        let t = PhotonNumberDistribution::thermal(1.0, 1e-10).unwrap();
        let e = build_output_ensemble(&t, &t).unwrap();
        assert_abs_diff_eq!(e.normalization(), 4.0 / 3.0, epsilon = 1e-12);
        assert!((e.total_weight() + e.deficit() - 1.0).abs() < 1e-12);
        assert!(e.deficit() < 1e-9);
    }

    #[test]
    fn vacuum_inputs_rejected() {
        let v = custom(&[1.0]);
        assert!(matches!(build_output_ensemble(&v, &v), Err(Error::VacuumInputs)));
    }

    #[test]
    fn branch_norms() {
        assert!(BranchState::singlet(0, 0).is_err());
        for (n, m) in [(0, 1), (2, 0), (3, 2)] {
            assert_abs_diff_eq!(BranchState::singlet(n, m).unwrap().norm_sqr(), 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(BranchState::symmetric(0, 0).unwrap().norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_entry_density_is_projector() {
        let e = build_output_ensemble(&custom(&[0.0, 1.0]), &custom(&[0.0, 1.0])).unwrap();
        let out = ensemble_to_density(&e, 1).unwrap();
        let s = output_space(1).unwrap();
        let psi = BranchState::singlet(1, 1).unwrap().to_pure_state(&s).unwrap();
        let proj = psi.to_density();
        assert!((out.density.matrix() - proj.matrix()).norm() < 1e-15);
        assert_eq!(out.deficit, 0.0);
    }

    #[test]
    fn rank_three_mixture() {
        let e = build_output_ensemble(&custom(&[0.5, 0.5]), &custom(&[0.5, 0.5])).unwrap();
        let out = ensemble_to_density(&e, 1).unwrap();
        let ev = out.density.eigenvalues();
        let n = ev.len();
        for &x in &ev[..n - 3] {
            assert_abs_diff_eq!(x, 0.0, epsilon = 1e-14);
        }
        for &x in &ev[n - 3..] {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(out.density.trace() + out.deficit, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncation_deficit_enforced() {
        let t = PhotonNumberDistribution::thermal(1.0, 1e-10).unwrap();
        let e = build_output_ensemble(&t, &t).unwrap();
        assert!(matches!(ensemble_to_density(&e, 3), Err(Error::DeficitTooLarge { .. })));
        let out = ensemble_to_density_in(&e, &output_space(3).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(out.density.trace() + out.deficit, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn restricted_and_full_spaces_agree() {
        let t = PhotonNumberDistribution::thermal(0.5, 1e-10).unwrap();
        let e = build_output_ensemble(&t, &t).unwrap();
        let small = ensemble_to_density_in(&e, &output_space(2).unwrap(), 1.0).unwrap();
        let full = ensemble_to_density_in(&e, &full_output_space(2).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(small.deficit, full.deficit, epsilon = 1e-15);
        let ms = min_eigenvalue(&partial_transpose(&small.density, &SYSTEM_B).unwrap()).unwrap();
        let mf = min_eigenvalue(&partial_transpose(&full.density, &SYSTEM_B).unwrap()).unwrap();
        assert!(ms < 0.0);
        assert_abs_diff_eq!(ms, mf, epsilon = 1e-12);
    }

    #[test]
    fn ensemble_json_round_trip() {
        let t = PhotonNumberDistribution::pseudothermal(0.3, 1e-6).unwrap();
        let e = build_output_ensemble(&t, &t).unwrap();
        let back = ConditionalOutputEnsemble::from_json(&e.to_json().unwrap()).unwrap();
        assert_eq!(back, e);
        assert!(ConditionalOutputEnsemble::from_json(
            r#"{"p0":0.5,"r0":0.5,"N":2.0,"entries":[]}"#
        )
        .is_err());
        assert!(ConditionalOutputEnsemble::from_json(
            r#"{"p0":0.5,"r0":0.5,"N":1.3333333333333333,"entries":[{"n":0,"m":0,"weight":0.1}]}"#
        )
        .is_err());
    }
}
