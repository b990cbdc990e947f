//! Finite-shot Monte Carlo of the Bell experiment.
//!
//! Every shot first draws an ensemble entry (n, m) by weight and then an
//! outcome pair (X, Y) from that entry's exact outcome distribution. Shots
//! are generated in fixed-size batches, each with its own ChaCha20 stream,
//! so results are reproducible from `(seed, generator_id)` regardless of
//! how batches are scheduled across threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{branch_outcomes, BellAngles, OUTCOMES};
use crate::device::ConditionalOutputEnsemble;
use crate::error::{Error, Result};

/// Shots generated from one generator stream.
pub const BATCH_SIZE: u64 = 1 << 16;

/// Identifies the generator and how streams are assigned; recorded in
/// every exported result.
pub const GENERATOR_ID: &str = "chacha20/seed_from_u64/stream=(setting<<32)|batch/batch=65536";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub shots_per_setting: u64,
    pub angles: BellAngles,
}

impl SampleConfig {
    pub fn new(seed: u64, shots_per_setting: u64, angles: BellAngles) -> Result<Self> {
        if shots_per_setting == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        Ok(Self { seed, shots_per_setting, angles })
    }
}

/// Outcome counts `counts[x + 1][y + 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub counts: [[u64; 3]; 3],
}

impl OutcomeCounts {
    pub fn shots(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn merge(mut self, other: OutcomeCounts) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
        self
    }

    /// Relative frequencies.
    pub fn frequencies(&self) -> [[f64; 3]; 3] {
        let total = self.shots().max(1) as f64;
        self.counts.map(|row| row.map(|c| c as f64 / total))
    }

    /// Mean of X·Y and its plug-in standard error.
    pub fn correlation(&self) -> (f64, f64) {
        let n = self.shots();
        if n == 0 {
            return (0.0, 0.0);
        }
        let f = self.frequencies();
        let (mut mean, mut second) = (0.0, 0.0);
        for (i, x) in OUTCOMES.iter().enumerate() {
            for (j, y) in OUTCOMES.iter().enumerate() {
                let xy = f64::from(x * y);
                mean += xy * f[i][j];
                second += xy * xy * f[i][j];
            }
        }
        let var = (second - mean * mean).max(0.0);
        (mean, (var / n as f64).sqrt())
    }
}

/// Per-entry outcome tables for one (θ_A, θ_B), ready for sampling.
struct SettingSampler {
    entries: WeightedIndex<f64>,
    /// Cumulative outcome probabilities, flattened as `3 (x + 1) + (y + 1)`.
    cumulative: Vec<[f64; 9]>,
}

impl SettingSampler {
    fn new(ensemble: &ConditionalOutputEnsemble, theta_a: f64, theta_b: f64) -> Result<Self> {
        let weights: Vec<f64> = ensemble.entries().iter().map(|e| e.weight).collect();
        let entries = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidParameter(format!("cannot sample ensemble: {e}")))?;
        let cumulative = ensemble
            .entries()
            .iter()
            .map(|e| {
                let d = branch_outcomes(&e.branch, theta_a, theta_b);
                let total = d.total();
                let mut acc = 0.0;
                let mut c = [0.0; 9];
                for (k, p) in d.probs.iter().flatten().enumerate() {
                    acc += p / total;
                    c[k] = acc;
                }
                c
            })
            .collect();
        Ok(Self { entries, cumulative })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (i8, i8) {
        let table = &self.cumulative[self.entries.sample(rng)];
        let u: f64 = rng.random();
        // rounding can leave the last cumulative value just below 1, so
        // fall back to the last outcome that has probability
        let k = table
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| (0..9).rev().find(|&k| k == 0 || table[k] > table[k - 1]).unwrap_or(8));
        ((k / 3) as i8 - 1, (k % 3) as i8 - 1)
    }

    fn batch_rng(seed: u64, setting: u64, batch: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream((setting << 32) | batch);
        rng
    }

    fn batches(shots: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
        let n = shots.div_ceil(BATCH_SIZE) as usize;
        (0..n).into_par_iter().map(move |b| {
            let b = b as u64;
            (b, BATCH_SIZE.min(shots - b * BATCH_SIZE))
        })
    }

    fn sequence(&self, seed: u64, setting: u64, shots: u64) -> Vec<(i8, i8)> {
        Self::batches(shots)
            .flat_map_iter(|(b, len)| {
                let mut rng = Self::batch_rng(seed, setting, b);
                (0..len).map(move |_| self.draw(&mut rng)).collect::<Vec<_>>()
            })
            .collect()
    }

    fn counts(&self, seed: u64, setting: u64, shots: u64) -> OutcomeCounts {
        Self::batches(shots)
            .map(|(b, len)| {
                let mut rng = Self::batch_rng(seed, setting, b);
                let mut c = OutcomeCounts::default();
                for _ in 0..len {
                    let (x, y) = self.draw(&mut rng);
                    c.counts[(x + 1) as usize][(y + 1) as usize] += 1;
                }
                c
            })
            .reduce(OutcomeCounts::default, OutcomeCounts::merge)
    }
}

/// Outcome sequence for a single setting pair. Uses the generator streams
/// of setting index 0.
pub fn sample_shots(
    ensemble: &ConditionalOutputEnsemble,
    theta_a: f64,
    theta_b: f64,
    seed: u64,
    shots: u64,
) -> Result<Vec<(i8, i8)>> {
    Ok(SettingSampler::new(ensemble, theta_a, theta_b)?.sequence(seed, 0, shots))
}

/// Outcome counts for a single setting pair; identical statistics to
/// [`sample_shots`] with the same arguments.
pub fn sample_counts(
    ensemble: &ConditionalOutputEnsemble,
    theta_a: f64,
    theta_b: f64,
    seed: u64,
    shots: u64,
) -> Result<OutcomeCounts> {
    Ok(SettingSampler::new(ensemble, theta_a, theta_b)?.counts(seed, 0, shots))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SettingEstimate {
    pub theta_a: f64,
    pub theta_b: f64,
    pub correlation: f64,
    pub standard_error: f64,
    pub shots: u64,
    pub counts: OutcomeCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimatedBellResult {
    pub bell_estimate: f64,
    /// `sqrt(Σ se_i²)` over the four settings.
    pub standard_error: f64,
    pub per_setting: [SettingEstimate; 4],
}

/// Estimates the four correlations and the CHSH value. Setting `i` (in
/// [`BellAngles::settings`] order) uses generator streams `i << 32 | batch`.
pub fn estimate_bell(ensemble: &ConditionalOutputEnsemble, config: &SampleConfig) -> Result<EstimatedBellResult> {
    if config.shots_per_setting == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let mut per_setting = Vec::with_capacity(4);
    for (i, (a, b)) in config.angles.settings().into_iter().enumerate() {
        let counts = SettingSampler::new(ensemble, a, b)?.counts(config.seed, i as u64, config.shots_per_setting);
        let (correlation, standard_error) = counts.correlation();
        per_setting.push(SettingEstimate {
            theta_a: a,
            theta_b: b,
            correlation,
            standard_error,
            shots: config.shots_per_setting,
            counts,
        });
    }
    let per_setting: [SettingEstimate; 4] = per_setting.try_into().expect("four settings");
    let c = per_setting.map(|s| s.correlation);
    Ok(EstimatedBellResult {
        bell_estimate: (c[0] + c[1] + c[2] - c[3]).abs(),
        standard_error: per_setting.iter().map(|s| s.standard_error.powi(2)).sum::<f64>().sqrt(),
        per_setting,
    })
}

/// Exported form of a Monte Carlo run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub seed: u64,
    pub generator_id: &'static str,
    pub shots: u64,
    pub angles: BellAngles,
    pub estimates: [f64; 4],
    pub stderrs: [f64; 4],
    pub bell_estimate: f64,
    pub standard_error: f64,
}

impl SampleReport {
    pub fn new(config: &SampleConfig, result: &EstimatedBellResult) -> Self {
        Self {
            seed: config.seed,
            generator_id: GENERATOR_ID,
            shots: config.shots_per_setting,
            angles: config.angles,
            estimates: result.per_setting.map(|s| s.correlation),
            stderrs: result.per_setting.map(|s| s.standard_error),
            bell_estimate: result.bell_estimate,
            standard_error: result.standard_error,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{correlation_analytic, outcome_distribution};
    use crate::device::build_output_ensemble;
    use crate::photon::PhotonNumberDistribution;

    fn singlet() -> ConditionalOutputEnsemble {
        let one = PhotonNumberDistribution::custom(vec![0.0, 1.0], 1e-10).unwrap();
        build_output_ensemble(&one, &one).unwrap()
    }

    fn thermal(mean: f64) -> ConditionalOutputEnsemble {
        let t = PhotonNumberDistribution::thermal(mean, 1e-12).unwrap();
        build_output_ensemble(&t, &t).unwrap()
    }

    #[test]
    fn zero_probability_outcomes_never_occur() {
        let shots = sample_shots(&singlet(), 0.0, 0.0, 7, 20_000).unwrap();
        assert_eq!(shots.len(), 20_000);
        assert!(shots.iter().all(|s| *s == (1, -1) || *s == (-1, 1)));
        assert!(shots.contains(&(1, -1)) && shots.contains(&(-1, 1)));
    }

    #[test]
    fn same_seed_same_sequence() {
        let e = thermal(1.0);
        let a = sample_shots(&e, 0.3, 1.1, 99, 150_000).unwrap();
        let b = sample_shots(&e, 0.3, 1.1, 99, 150_000).unwrap();
        assert_eq!(a, b);
        let c = sample_shots(&e, 0.3, 1.1, 100, 150_000).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn counts_agree_with_sequence() {
        let e = thermal(0.7);
        let seq = sample_shots(&e, 0.2, 0.9, 5, 70_000).unwrap();
        let counts = sample_counts(&e, 0.2, 0.9, 5, 70_000).unwrap();
        let mut manual = OutcomeCounts::default();
        for (x, y) in seq {
            manual.counts[(x + 1) as usize][(y + 1) as usize] += 1;
        }
        assert_eq!(manual, counts);
    }

    #[test]
    fn single_shot_estimate_is_integer() {
        let cfg = SampleConfig::new(3, 1, BellAngles::CANONICAL).unwrap();
        for seed in 0..20 {
            let r = estimate_bell(&thermal(2.0), &SampleConfig { seed, ..cfg }).unwrap();
            assert_eq!(r.bell_estimate.fract(), 0.0);
            assert!(r.bell_estimate <= 4.0);
        }
        assert!(SampleConfig::new(0, 0, BellAngles::CANONICAL).is_err());
    }

    #[test]
    fn frequencies_converge_to_exact_distribution() {
        let e = thermal(1.5);
        let shots = 200_000;
        let f = sample_counts(&e, 0.4, 1.3, 11, shots).unwrap().frequencies();
        let exact = outcome_distribution(&e, 0.4, 1.3);
        let tv: f64 = 0.5
            * (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| (f[i][j] - exact.probs[i][j]).abs())
                .sum::<f64>();
        assert!(tv < 5.0 * (9.0 / shots as f64).sqrt(), "tv = {tv}");
    }

    #[test]
    fn estimate_within_band_and_exports() {
        let e = thermal(5.0);
        let cfg = SampleConfig::new(2024, 200_000, BellAngles::CANONICAL).unwrap();
        let r = estimate_bell(&e, &cfg).unwrap();
        for s in &r.per_setting {
            let exact = correlation_analytic(e.p0(), e.r0(), s.theta_a, s.theta_b).unwrap();
            assert!((s.correlation - exact).abs() < 4.0 * s.standard_error);
        }
        let report = SampleReport::new(&cfg, &r);
        let v: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(v["generator_id"], GENERATOR_ID);
        assert_eq!(v["seed"], 2024);
        assert_eq!(v["estimates"].as_array().unwrap().len(), 4);
    }
}
