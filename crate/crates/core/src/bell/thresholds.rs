//! Closed-form maxima for concrete sources and the violation thresholds
//! they imply.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::Serialize;

use super::{bell_max_analytic, LOCAL_BOUND, TSIRELSON};
use crate::error::{Error, Result};
use crate::photon::{SourceKind, VacuumOverlap, HBAR, K_B};

/// Vacuum overlap below which identical inputs violate CHSH:
/// `(√2 − 1)/(√2 + 1) = 3 − 2√2`.
pub const P0_THRESHOLD: f64 = (SQRT_2 - 1.0) / (SQRT_2 + 1.0);

/// Absolute tolerance on the root location used by [`bisect`].
pub const BISECTION_TOL: f64 = 1e-12;

/// `β* = ln((√2 + 1)/2)`: identical thermal sources violate for β < β*.
pub fn thermal_beta_threshold() -> f64 {
    ((SQRT_2 + 1.0) / 2.0).ln()
}

/// `⟨n⟩* = 2(√2 + 1)` for identical thermal sources.
pub fn thermal_mean_threshold() -> f64 {
    2.0 * (SQRT_2 + 1.0)
}

/// `⟨n⟩* = ln((√2 + 1)/(√2 − 1))` for identical pseudo-thermal sources.
pub fn pseudothermal_mean_threshold() -> f64 {
    ((SQRT_2 + 1.0) / (SQRT_2 - 1.0)).ln()
}

/// `2√2/(e^{β_A} + e^{β_B} − 1)`.
pub fn thermal_bell_max(beta_a: f64, beta_b: f64) -> Result<f64> {
    for b in [beta_a, beta_b] {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {b}")));
        }
    }
    Ok(TSIRELSON / (beta_a.exp() + beta_b.exp() - 1.0))
}

/// `2√2/(1 + 1/⟨n⟩_A + 1/⟨n⟩_B)`.
pub fn thermal_bell_max_from_means(mean_a: f64, mean_b: f64) -> Result<f64> {
    check_means(mean_a, mean_b)?;
    Ok(TSIRELSON / (1.0 + mean_a.recip() + mean_b.recip()))
}

/// `2√2 (1 − e^{−⟨n⟩_A})(1 − e^{−⟨n⟩_B})/(1 − e^{−(⟨n⟩_A + ⟨n⟩_B)})`.
pub fn pseudothermal_bell_max(mean_a: f64, mean_b: f64) -> Result<f64> {
    check_means(mean_a, mean_b)?;
    let num = (-mean_a).exp_m1() * (-mean_b).exp_m1();
    let den = -(-(mean_a + mean_b)).exp_m1();
    Ok(TSIRELSON * num / den)
}

fn check_means(mean_a: f64, mean_b: f64) -> Result<()> {
    for m in [mean_a, mean_b] {
        if !(m >= 0.0) || m.is_infinite() {
            return Err(Error::InvalidParameter(format!("mean photon number must be finite and >= 0, got {m}")));
        }
    }
    if mean_a == 0.0 && mean_b == 0.0 {
        return Err(Error::VacuumInputs);
    }
    Ok(())
}

/// `ℬ_max` for a source kind given the two mean photon numbers.
pub fn bell_max_for_kind(kind: SourceKind, mean_a: f64, mean_b: f64) -> Result<f64> {
    match kind {
        SourceKind::Thermal => thermal_bell_max_from_means(mean_a, mean_b),
        SourceKind::Pseudothermal => pseudothermal_bell_max(mean_a, mean_b),
        SourceKind::Custom => Err(Error::InvalidParameter(
            "no closed form for custom distributions; use the ensemble".into(),
        )),
    }
}

/// `ℬ_max` with each side's vacuum overlap taken as the product over its
/// modes.
pub fn multimode_bell_max<A: VacuumOverlap, B: VacuumOverlap>(source_a: &A, source_b: &B) -> Result<f64> {
    bell_max_analytic(source_a.vacuum_overlap(), source_b.vacuum_overlap())
}

/// Smallest number ν ≤ `max_modes` of identical modes (per side, both
/// sides alike) with vacuum overlap `p0_per_mode` for which ℬ_max > 2.
pub fn minimal_mode_count(p0_per_mode: f64, max_modes: usize) -> Result<Option<usize>> {
    if !(0.0..=1.0).contains(&p0_per_mode) {
        return Err(Error::InvalidParameter(format!("vacuum overlap {p0_per_mode} outside [0, 1]")));
    }
    let mut p = 1.0;
    for nu in 1..=max_modes {
        p *= p0_per_mode;
        if p < 1.0 && bell_max_analytic(p, p)? > LOCAL_BOUND {
            return Ok(Some(nu));
        }
    }
    Ok(None)
}

/// Bisection for a sign change of `f` on `[lo, hi]`. Stops once the
/// bracket is narrower than `tol` or `f` vanishes exactly.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bad bisection interval [{lo}, {hi}] or tolerance {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() != fb.signum()) || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    let neg_at_a = fa < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if b - a <= tol || mid <= a || mid >= b {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Symmetric crossing `ℬ_max(⟨n⟩, ⟨n⟩) = 2` found numerically.
pub fn symmetric_threshold(kind: SourceKind, lo: f64, hi: f64) -> Result<f64> {
    bisect(|n| bell_max_for_kind(kind, n, n).unwrap_or(f64::NAN) - LOCAL_BOUND, lo, hi, BISECTION_TOL)
}

/// `T_min = ħω/(k_B β*)`: the lowest temperature at which two identical
/// thermal sources at frequency ω violate CHSH.
pub fn minimum_violating_temperature(omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    Ok(HBAR * omega / (K_B * thermal_beta_threshold()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BorderPoint {
    pub mean_a: f64,
    /// `None` when ℬ_max − 2 does not change sign over the ⟨n⟩_B range.
    pub mean_b: Option<f64>,
}

/// For each ⟨n⟩_A, the ⟨n⟩_B in `[b_lo, b_hi]` at which ℬ_max = 2.
pub fn violation_border(kind: SourceKind, mean_a_axis: &[f64], b_lo: f64, b_hi: f64) -> Result<Vec<BorderPoint>> {
    if !(b_lo > 0.0 && b_lo < b_hi && b_hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad ⟨n⟩_B range [{b_lo}, {b_hi}]")));
    }
    if let Some(bad) = mean_a_axis.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidParameter(format!("⟨n⟩_A axis value {bad} must be positive")));
    }
    bell_max_for_kind(kind, 1.0, 1.0)?;
    Ok(mean_a_axis
        .par_iter()
        .map(|&a| {
            let f = |b: f64| bell_max_for_kind(kind, a, b).unwrap_or(f64::NAN) - LOCAL_BOUND;
            BorderPoint { mean_a: a, mean_b: bisect(f, b_lo, b_hi, BISECTION_TOL).ok() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::{beta_to_mean_n, MultiModeSource, PhotonNumberDistribution};
    use approx::assert_abs_diff_eq;

    #[test]
    fn threshold_constants() {
        assert_abs_diff_eq!(P0_THRESHOLD, 3.0 - 2.0 * SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(P0_THRESHOLD, 0.171_572_875_253_809_9, epsilon = 1e-15);
        assert_abs_diff_eq!(thermal_beta_threshold(), 0.188_226_406_459_597_65, epsilon = 1e-15);
        assert_abs_diff_eq!(thermal_mean_threshold(), 4.828_427_124_746_19, epsilon = 1e-13);
        assert_abs_diff_eq!(pseudothermal_mean_threshold(), 1.762_747_174_039_086, epsilon = 1e-13);
        // the two thermal thresholds describe the same point
        assert_abs_diff_eq!(beta_to_mean_n(thermal_beta_threshold()).unwrap(), thermal_mean_threshold(), epsilon = 1e-12);
    }

    #[test]
    fn thermal_examples() {
        let b = thermal_beta_threshold();
        assert_abs_diff_eq!(thermal_bell_max(b, b).unwrap(), 2.0, epsilon = 1e-12);
        let ln2 = std::f64::consts::LN_2;
        assert_abs_diff_eq!(thermal_bell_max(ln2, ln2).unwrap(), TSIRELSON / 3.0, epsilon = 1e-15);
        let far = thermal_bell_max(10.0, 10.0).unwrap();
        assert!(far < 2.0);
        assert_abs_diff_eq!(far / (TSIRELSON * (-10.0f64).exp() / 2.0), 1.0, epsilon = 1e-4);
        assert!(thermal_bell_max(0.0, 1.0).is_err());
        assert!(thermal_bell_max(-1.0, 1.0).is_err());
    }

    #[test]
    fn thermal_forms_agree() {
        for ba in [0.05, 0.2, 0.7, 1.5, 4.0] {
            for bb in [0.01, 0.3, 1.0, 2.5] {
                let via_beta = thermal_bell_max(ba, bb).unwrap();
                let na = beta_to_mean_n(ba).unwrap();
                let nb = beta_to_mean_n(bb).unwrap();
                assert_abs_diff_eq!(via_beta, thermal_bell_max_from_means(na, nb).unwrap(), epsilon = 1e-12);
                let p = |b: f64| 1.0 - (-b).exp();
                assert_abs_diff_eq!(via_beta, bell_max_analytic(p(ba), p(bb)).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pseudothermal_examples() {
        let t = pseudothermal_mean_threshold();
        assert_abs_diff_eq!(pseudothermal_bell_max(t, t).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pseudothermal_bell_max(60.0, 60.0).unwrap(), TSIRELSON, epsilon = 1e-12);
        // plug-in oracle for ⟨n⟩ = 1 on both sides
        let e = (-1.0f64).exp();
        let oracle = TSIRELSON * (1.0 - e) * (1.0 - e) / (1.0 - e * e);
        let v = pseudothermal_bell_max(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(v, 1.307_064_702_404_812_5, epsilon = 1e-12);
        assert!(v < 2.0);
        assert!(matches!(pseudothermal_bell_max(0.0, 0.0), Err(Error::VacuumInputs)));
        for (a, b) in [(0.1, 3.0), (1.0, 1.0), (2.5, 0.4), (0.0, 2.0)] {
            let via = bell_max_analytic((-a as f64).exp(), (-b as f64).exp()).unwrap();
            assert_abs_diff_eq!(pseudothermal_bell_max(a, b).unwrap(), via, epsilon = 1e-12);
        }
    }

    #[test]
    fn bisection_reproduces_closed_forms() {
        let t = symmetric_threshold(SourceKind::Thermal, 0.1, 100.0).unwrap();
        assert_abs_diff_eq!(t, thermal_mean_threshold(), epsilon = 1e-9);
        let p = symmetric_threshold(SourceKind::Pseudothermal, 0.1, 100.0).unwrap();
        assert_abs_diff_eq!(p, pseudothermal_mean_threshold(), epsilon = 1e-9);
        let root = bisect(|x| bell_max_analytic(x, x).unwrap() - 2.0, 0.0, 0.9, BISECTION_TOL).unwrap();
        assert_abs_diff_eq!(root, P0_THRESHOLD, epsilon = 1e-9);
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn border_examples() {
        let axis = [thermal_mean_threshold(), 10.0, 1e9];
        let pts = violation_border(SourceKind::Thermal, &axis, 0.01, 1e3).unwrap();
        assert_abs_diff_eq!(pts[0].mean_b.unwrap(), thermal_mean_threshold(), epsilon = 1e-9);
        // ⟨n⟩_A → ∞ leaves 1/⟨n⟩_B = √2 − 1
        assert_abs_diff_eq!(pts[2].mean_b.unwrap(), 1.0 / (SQRT_2 - 1.0), epsilon = 1e-6);
        // no border for ⟨n⟩_A below the asymptote
        let none = violation_border(SourceKind::Thermal, &[2.0], 0.01, 1e3).unwrap();
        assert_eq!(none[0].mean_b, None);

        let axis: Vec<f64> = (1..=40).map(|i| 1.0 + 0.5 * i as f64).collect();
        let th = violation_border(SourceKind::Thermal, &axis, 0.01, 1e4).unwrap();
        let ps = violation_border(SourceKind::Pseudothermal, &axis, 0.01, 1e4).unwrap();
        for (t, p) in th.iter().zip(&ps) {
            if let (Some(tb), Some(pb)) = (t.mean_b, p.mean_b) {
                assert!(pb < tb, "⟨n⟩_A = {}: {pb} !< {tb}", t.mean_a);
            }
            if t.mean_b.is_some() {
                assert!(p.mean_b.is_some());
            }
        }
        assert!(violation_border(SourceKind::Custom, &axis, 0.1, 1.0).is_err());
        assert!(violation_border(SourceKind::Thermal, &[-1.0], 0.1, 1.0).is_err());
    }

    #[test]
    fn minimum_temperature_matches_known_values() {
        let visible = minimum_violating_temperature(2.5e15).unwrap();
        assert!((visible / 101_000.0 - 1.0).abs() < 0.03, "{visible}");
        let infrared = minimum_violating_temperature(5e13).unwrap();
        assert!((infrared / 2021.0 - 1.0).abs() < 0.03, "{infrared}");
    }

    #[test]
    fn multimode_examples() {
        let mode = PhotonNumberDistribution::thermal(1.0, 1e-12).unwrap();
        let one = MultiModeSource::identical(mode.clone(), 1).unwrap();
        assert_abs_diff_eq!(multimode_bell_max(&one, &one).unwrap(), TSIRELSON / 3.0, epsilon = 1e-12);
        let three = MultiModeSource::identical(mode.clone(), 3).unwrap();
        let v = multimode_bell_max(&three, &three).unwrap();
        let oracle = TSIRELSON * 0.875 * 0.875 / (1.0 - 0.125 * 0.125);
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 2.199_887_763_691_48, epsilon = 1e-12);
        assert_eq!(minimal_mode_count(0.5, 10).unwrap(), Some(3));
        assert_eq!(minimal_mode_count(1.0, 10).unwrap(), None);

        let mut prev = 0.0;
        for nu in 1..12 {
            let s = MultiModeSource::identical(mode.clone(), nu).unwrap();
            let v = multimode_bell_max(&s, &s).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let weak = PhotonNumberDistribution::thermal(0.1, 1e-12).unwrap();
        let many = MultiModeSource::identical(weak, 400).unwrap();
        assert_abs_diff_eq!(multimode_bell_max(&many, &many).unwrap(), TSIRELSON, epsilon = 1e-9);
    }
}
