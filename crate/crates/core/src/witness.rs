//! Partial-transposition witness for the heralded state and the
//! conditional entropy S(ρ_A) − S(ρ).

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::device::{ensemble_to_density_in, output_space, ConditionalOutputEnsemble, SYSTEM_A, SYSTEM_B};
use crate::error::{Error, Result};
use crate::fock::{
    expectation, min_eigenvalue, partial_trace, partial_transpose, von_neumann_entropy, DensityOperator, FockSpace,
    PureState,
};
use crate::photon::DEFAULT_TAIL_EPS;

/// Witness expectation together with its dense cross-check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub m: usize,
    pub n: usize,
    pub analytic_value: f64,
    pub numeric_value: f64,
    pub min_pt_eigenvalue: f64,
    pub entangled: bool,
    pub cutoff: usize,
    pub deficit: f64,
}

impl WitnessReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_indices(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "witness needs photons on both sides, got m = {m}, n = {n}"
        )));
    }
    Ok(())
}

/// `⟨φ_mn|ρ^{T_B}|φ_mn⟩ = −N p_m r_n / 2`.
pub fn witness_value_analytic(ensemble: &ConditionalOutputEnsemble, m: usize, n: usize) -> Result<f64> {
    check_indices(m, n)?;
    Ok(-0.5 * ensemble.weight_of(m, n))
}

/// `|φ_mn⟩ = (|0,m,0,n⟩ + |m,0,n,0⟩)/√2` in the (A1, A2, B1, B2) modes of
/// `space`; any other modes are left empty.
pub fn witness_vector(space: &FockSpace, m: usize, n: usize) -> Result<PureState> {
    check_indices(m, n)?;
    let mut first = vec![0; space.num_modes()];
    let mut second = vec![0; space.num_modes()];
    for (label, (a, b)) in crate::device::OUTPUT_MODES.iter().zip([(0, m), (m, 0), (0, n), (n, 0)]) {
        let p = space.position(label)?;
        first[p] = a;
        second[p] = b;
    }
    for occ in [&first, &second] {
        if space.index_of(occ).is_none() {
            return Err(Error::CutoffExceeded { value: m.max(n), cutoff: space.cutoffs().iter().copied().min().unwrap_or(0) });
        }
    }
    let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
    PureState::superposition(space.clone(), &[(c, &first), (c, &second)])
}

/// Witness expectation for an arbitrary state on the output modes.
pub fn witness_expectation(rho: &DensityOperator, m: usize, n: usize) -> Result<f64> {
    let phi = witness_vector(rho.space(), m, n)?;
    let pt = partial_transpose(rho, &SYSTEM_B)?;
    expectation(&pt, &phi)
}

/// Dense evaluation of the witness on ρ_out at the given cutoff. Only the
/// (m, n) entry contributes, so truncating the ensemble does not bias it.
pub fn witness_value_numeric(ensemble: &ConditionalOutputEnsemble, m: usize, n: usize, cutoff: usize) -> Result<f64> {
    check_indices(m, n)?;
    check_cutoff(m, n, cutoff)?;
    let dense = ensemble_to_density_in(ensemble, &output_space(cutoff)?, 1.0)?;
    witness_expectation(&dense.density, m, n)
}

fn check_cutoff(m: usize, n: usize, cutoff: usize) -> Result<()> {
    if m.max(n) > cutoff {
        return Err(Error::CutoffExceeded { value: m.max(n), cutoff });
    }
    Ok(())
}

/// Analytic and dense witness values plus the smallest eigenvalue of
/// ρ_out^{T_B}.
pub fn witness_report(ensemble: &ConditionalOutputEnsemble, m: usize, n: usize, cutoff: usize) -> Result<WitnessReport> {
    check_indices(m, n)?;
    check_cutoff(m, n, cutoff)?;
    let dense = ensemble_to_density_in(ensemble, &output_space(cutoff)?, 1.0)?;
    let analytic_value = witness_value_analytic(ensemble, m, n)?;
    let numeric_value = witness_expectation(&dense.density, m, n)?;
    let min_pt_eigenvalue = min_eigenvalue(&partial_transpose(&dense.density, &SYSTEM_B)?)?;
    Ok(WitnessReport {
        m,
        n,
        analytic_value,
        numeric_value,
        min_pt_eigenvalue,
        entangled: numeric_value < 0.0,
        cutoff,
        deficit: dense.deficit,
    })
}

/// `S(ρ_A) − S(ρ)` in nats, where ρ_A keeps the modes in `system_a`. The
/// state is renormalized first.
pub fn conditional_entropy_of<S: AsRef<str>>(rho: &DensityOperator, system_a: &[S]) -> Result<f64> {
    let rho = rho.renormalized()?;
    let reduced = partial_trace(&rho, system_a)?;
    Ok(von_neumann_entropy(&reduced)? - von_neumann_entropy(&rho)?)
}

/// Conditional entropy of ρ_out at `cutoff`; the truncated weight must stay
/// below the default tail epsilon.
pub fn conditional_entropy(ensemble: &ConditionalOutputEnsemble, cutoff: usize) -> Result<f64> {
    conditional_entropy_truncated(ensemble, cutoff, DEFAULT_TAIL_EPS)
}

/// As [`conditional_entropy`] but tolerating a deficit up to `max_deficit`;
/// the kept part is renormalized.
pub fn conditional_entropy_truncated(ensemble: &ConditionalOutputEnsemble, cutoff: usize, max_deficit: f64) -> Result<f64> {
    let dense = ensemble_to_density_in(ensemble, &output_space(cutoff)?, max_deficit)?;
    conditional_entropy_of(&dense.density, &SYSTEM_A)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::build_output_ensemble;
    use crate::fock::Tensor;
    use crate::photon::PhotonNumberDistribution;
    use approx::assert_abs_diff_eq;

    fn custom(w: &[f64]) -> PhotonNumberDistribution {
        PhotonNumberDistribution::custom(w.to_vec(), 1e-10).unwrap()
    }

    fn thermal_one() -> ConditionalOutputEnsemble {
        let t = PhotonNumberDistribution::thermal(1.0, 1e-12).unwrap();
        build_output_ensemble(&t, &t).unwrap()
    }

    #[test]
    fn analytic_examples() {
        let half = build_output_ensemble(&custom(&[0.5, 0.5]), &custom(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(witness_value_analytic(&half, 1, 1).unwrap(), -1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(witness_value_analytic(&half, 2, 1).unwrap(), 0.0);
        assert_abs_diff_eq!(witness_value_analytic(&thermal_one(), 1, 1).unwrap(), -1.0 / 24.0, epsilon = 1e-14);
        assert!(witness_value_analytic(&half, 0, 1).is_err());
        assert!(witness_value_analytic(&half, 1, 0).is_err());
    }

    #[test]
    fn numeric_matches_analytic() {
        let half = build_output_ensemble(&custom(&[0.5, 0.5]), &custom(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(witness_value_numeric(&half, 1, 1, 1).unwrap(), -1.0 / 6.0, epsilon = 1e-12);

        let e = thermal_one();
        let expected = -(4.0 / 3.0) * 0.125 * 0.125 / 2.0;
        assert_abs_diff_eq!(witness_value_numeric(&e, 2, 2, 3).unwrap(), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(witness_value_analytic(&e, 2, 2).unwrap(), expected, epsilon = 1e-12);
        assert!(matches!(witness_value_numeric(&e, 4, 1, 3), Err(Error::CutoffExceeded { .. })));
    }

    #[test]
    fn report_is_consistent() {
        let r = witness_report(&thermal_one(), 1, 2, 3).unwrap();
        assert!(r.entangled);
        assert!(r.min_pt_eigenvalue <= r.numeric_value + 1e-12);
        assert_abs_diff_eq!(r.analytic_value, r.numeric_value, epsilon = 1e-10);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["cutoff"], 3);
        assert!(v["deficit"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn product_state_has_nonnegative_witness() {
        let a = FockSpace::new(&SYSTEM_A, &[2, 2]).unwrap();
        let b = FockSpace::new(&SYSTEM_B, &[2, 2]).unwrap();
        let ra = DensityOperator::diagonal(a.clone(), &[0.1, 0.2, 0.0, 0.3, 0.0, 0.1, 0.2, 0.1, 0.0]).unwrap();
        let rb = PureState::superposition(
            b,
            &[(Complex64::new(0.6, 0.0), &[1, 0]), (Complex64::new(0.0, 0.8), &[0, 1])],
        )
        .unwrap()
        .to_density();
        let rho = DensityOperator::tensor(&[&ra, &rb]).unwrap();
        for (m, n) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            assert!(witness_expectation(&rho, m, n).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn pure_singlet_entropy_is_ln2() {
        let e = build_output_ensemble(&custom(&[0.0, 1.0]), &custom(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(conditional_entropy(&e, 1).unwrap(), std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn product_state_entropy_is_minus_entropy_of_b() {
        let a = FockSpace::new(&SYSTEM_A, &[1, 1]).unwrap();
        let b = FockSpace::new(&SYSTEM_B, &[1, 1]).unwrap();
        let ra = DensityOperator::diagonal(a, &[0.5, 0.25, 0.25, 0.0]).unwrap();
        let rb = DensityOperator::diagonal(b, &[0.7, 0.1, 0.2, 0.0]).unwrap();
        let rho = DensityOperator::tensor(&[&ra, &rb]).unwrap();
        let sb = -[0.7f64, 0.1, 0.2].iter().map(|p| p * p.ln()).sum::<f64>();
        assert_abs_diff_eq!(conditional_entropy_of(&rho, &SYSTEM_A).unwrap(), -sb, epsilon = 1e-10);
    }

    /// ρ_out is block diagonal in the excitation numbers (n, m), each block
    /// a pure state, so S(ρ) is the Shannon entropy of the weights. On side
    /// A, entries with m > 0 reduce to the maximally mixed pair
    /// {|n,0⟩, |0,n⟩} while m = 0 entries stay coherent, (|n,0⟩ − |0,n⟩)/√2.
    fn block_oracle(p: &[f64], r: &[f64]) -> f64 {
        let norm = 1.0 / (1.0 - p[0] * r[0]);
        let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
        let mut s_total = 0.0;
        let mut s_a = h(norm * p[0] * (1.0 - r[0]));
        for (n, pn) in p.iter().enumerate() {
            for (m, rm) in r.iter().enumerate() {
                if (n, m) != (0, 0) {
                    s_total += h(norm * pn * rm);
                }
            }
            if n > 0 {
                // 2×2 block [[u + v, −v], [−v, u + v]] with eigenvalues u and u + 2v
                let u = 0.5 * norm * pn * (1.0 - r[0]);
                let v = 0.5 * norm * pn * r[0];
                s_a += h(u) + h(u + 2.0 * v);
            }
        }
        s_a - s_total
    }

    #[test]
    fn thermal_entropy_against_block_oracle() {
        // thermal ⟨n⟩ = 1 cut at 8 photons, renormalized
        let mut w: Vec<f64> = (0..=8).map(|k| 0.5f64.powi(k + 1)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let e = ConditionalOutputEnsemble::from_weights(&w, &w).unwrap();
        let dense = conditional_entropy(&e, 8).unwrap();
        assert_abs_diff_eq!(dense, block_oracle(&w, &w), epsilon = 1e-9);
        // the mixture hides the entanglement from this entropy test
        assert!(dense < 0.0);
        assert_abs_diff_eq!(dense, -0.994_006_866_440_740_2, epsilon = 1e-9);
    }
}
