//! Photon-number distributions of the input sources.
//!
//! Thermal light has Bose–Einstein weights `p_n = ⟨n⟩^n / (1+⟨n⟩)^{n+1}`,
//! pseudo-thermal (phase-randomized laser) light has Poisson weights
//! `p_n = ⟨n⟩^n e^{-⟨n⟩} / n!`. Distributions are truncated at the smallest
//! cutoff whose tail mass falls below `epsilon_tail`; the tail is tracked
//! so that `Σ weights + tail_mass = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact SI).
pub const K_B: f64 = 1.380_649e-23;
/// Default bound on the truncated tail of a distribution.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;
/// Refuse distributions that would need more stored weights than this.
pub const MAX_CUTOFF: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Thermal,
    Pseudothermal,
    Custom,
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceKind::Thermal => "thermal",
            SourceKind::Pseudothermal => "pseudothermal",
            SourceKind::Custom => "custom",
        })
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thermal" => Ok(SourceKind::Thermal),
            "pseudothermal" | "pseudo-thermal" | "poisson" => Ok(SourceKind::Pseudothermal),
            "custom" => Ok(SourceKind::Custom),
            other => Err(Error::Parse(format!("unknown source kind `{other}`"))),
        }
    }
}

/// Diagonal Fock-basis weights of a single-mode source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonNumberDistribution {
    kind: SourceKind,
    mean_n: f64,
    epsilon_tail: f64,
    weights: Vec<f64>,
    tail_mass: f64,
}

fn check_mean(mean_n: f64) -> Result<()> {
    if !mean_n.is_finite() || mean_n < 0.0 {
        return Err(Error::InvalidParameter(format!("mean photon number must be finite and >= 0, got {mean_n}")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon_tail must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

impl PhotonNumberDistribution {
    pub fn thermal(mean_n: f64, epsilon_tail: f64) -> Result<Self> {
        check_mean(mean_n)?;
        check_eps(epsilon_tail)?;
        if mean_n == 0.0 {
            return Ok(Self::vacuum_of(SourceKind::Thermal, epsilon_tail));
        }
        // tail beyond cutoff N is q^{N+1}
        let q = mean_n / (1.0 + mean_n);
        let needed = (epsilon_tail.ln() / q.ln()).floor();
        if !needed.is_finite() || needed > MAX_CUTOFF as f64 {
            return Err(Error::InvalidParameter(format!(
                "thermal mean {mean_n} needs more than {MAX_CUTOFF} weights at epsilon {epsilon_tail}"
            )));
        }
        let mut cutoff = (needed as usize).saturating_sub(1);
        while q.powi(cutoff as i32 + 1) >= epsilon_tail {
            cutoff += 1;
        }
        let p0 = 1.0 / (1.0 + mean_n);
        let mut weights = Vec::with_capacity(cutoff + 1);
        let mut p = p0;
        for _ in 0..=cutoff {
            weights.push(p);
            p *= q;
        }
        let tail_mass = q.powi(cutoff as i32 + 1);
        Ok(Self { kind: SourceKind::Thermal, mean_n, epsilon_tail, weights, tail_mass })
    }

    pub fn pseudothermal(mean_n: f64, epsilon_tail: f64) -> Result<Self> {
        check_mean(mean_n)?;
        check_eps(epsilon_tail)?;
        if mean_n == 0.0 {
            return Ok(Self::vacuum_of(SourceKind::Pseudothermal, epsilon_tail));
        }
        if mean_n > MAX_CUTOFF as f64 / 2.0 {
            return Err(Error::InvalidParameter(format!("pseudothermal mean {mean_n} too large")));
        }
        let ln_mean = mean_n.ln();
        // log-space recursion keeps large means from underflowing at n = 0
        let mut all = Vec::new();
        let mut ln_p = -mean_n;
        let mut n = 0usize;
        loop {
            all.push(ln_p.exp());
            n += 1;
            ln_p += ln_mean - (n as f64).ln();
            if n as f64 > mean_n && ln_p < -745.0 {
                break;
            }
            if n > MAX_CUTOFF {
                return Err(Error::InvalidParameter("pseudothermal distribution too wide".into()));
            }
        }
        if mean_n < 700.0 {
            // exact p_0 and exact ratios where no underflow threatens
            all[0] = (-mean_n).exp();
            for k in 1..all.len() {
                all[k] = all[k - 1] * mean_n / k as f64;
            }
        }
        // suffix sums give each candidate cutoff's tail without cancellation
        let mut tail = 0.0;
        let mut tails = vec![0.0; all.len()];
        for k in (0..all.len()).rev() {
            tails[k] = tail;
            tail += all[k];
        }
        let cutoff = (0..all.len())
            .find(|&k| tails[k] < epsilon_tail)
            .unwrap_or(all.len() - 1);
        let tail_mass = tails[cutoff];
        all.truncate(cutoff + 1);
        Ok(Self { kind: SourceKind::Pseudothermal, mean_n, epsilon_tail, weights: all, tail_mass })
    }

    /// User-supplied weights. A deficit `1 - Σw` up to `epsilon_tail` is
    /// renormalized away; anything larger is rejected.
    pub fn custom(weights: Vec<f64>, epsilon_tail: f64) -> Result<Self> {
        check_eps(epsilon_tail)?;
        if weights.is_empty() {
            return Err(Error::InvalidParameter("custom distribution needs at least one weight".into()));
        }
        if weights.len() > MAX_CUTOFF {
            return Err(Error::InvalidParameter("custom distribution too long".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!("negative or non-finite weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {sum} > 1")));
        }
        let deficit = 1.0 - sum;
        if deficit > epsilon_tail {
            return Err(Error::DeficitTooLarge { deficit, limit: epsilon_tail });
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        let mean_n = weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        Ok(Self { kind: SourceKind::Custom, mean_n, epsilon_tail, weights, tail_mass: 0.0 })
    }

    fn vacuum_of(kind: SourceKind, epsilon_tail: f64) -> Self {
        Self { kind, mean_n: 0.0, epsilon_tail, weights: vec![1.0], tail_mass: 0.0 }
    }

    /// Builds a source of the given kind from its mean photon number.
    pub fn of_kind(kind: SourceKind, mean_n: f64, epsilon_tail: f64) -> Result<Self> {
        match kind {
            SourceKind::Thermal => Self::thermal(mean_n, epsilon_tail),
            SourceKind::Pseudothermal => Self::pseudothermal(mean_n, epsilon_tail),
            SourceKind::Custom => Err(Error::InvalidParameter(
                "custom sources are built from explicit weights".into(),
            )),
        }
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn mean_n(&self) -> f64 {
        self.mean_n
    }

    pub fn epsilon_tail(&self) -> f64 {
        self.epsilon_tail
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of `|n⟩`, zero beyond the cutoff.
    pub fn weight(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(0.0)
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn cutoff(&self) -> usize {
        self.weights.len() - 1
    }

    /// `p_0 = ⟨0|ρ|0⟩`.
    pub fn vacuum(&self) -> f64 {
        self.weights[0]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates `{kind, mean_n, epsilon_tail, weights[], tail_mass}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            kind: SourceKind,
            mean_n: f64,
            epsilon_tail: f64,
            weights: Vec<f64>,
            tail_mass: f64,
        }
        let raw: Raw = serde_json::from_str(text)?;
        check_mean(raw.mean_n)?;
        check_eps(raw.epsilon_tail)?;
        if raw.weights.is_empty() || raw.weights.len() > MAX_CUTOFF {
            return Err(Error::Parse("weights must be a nonempty list".into()));
        }
        if raw.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Parse("weights must be finite and nonnegative".into()));
        }
        if !raw.tail_mass.is_finite() || raw.tail_mass < 0.0 || raw.tail_mass > raw.epsilon_tail {
            return Err(Error::Parse(format!("tail_mass {} outside [0, epsilon_tail]", raw.tail_mass)));
        }
        let sum: f64 = raw.weights.iter().sum();
        if sum > 1.0 + 1e-12 || (sum + raw.tail_mass - 1.0).abs() > 1e-12 {
            return Err(Error::Parse(format!("weights ({sum}) and tail ({}) do not sum to 1", raw.tail_mass)));
        }
        let p0 = raw.weights[0];
        let closed = match raw.kind {
            SourceKind::Thermal => Some(1.0 / (1.0 + raw.mean_n)),
            SourceKind::Pseudothermal => Some((-raw.mean_n).exp()),
            SourceKind::Custom => None,
        };
        if let Some(c) = closed {
            if (p0 - c).abs() > 1e-12 {
                return Err(Error::Parse(format!("p_0 = {p0} disagrees with the {} closed form {c}", raw.kind)));
            }
        }
        Ok(Self {
            kind: raw.kind,
            mean_n: raw.mean_n,
            epsilon_tail: raw.epsilon_tail,
            weights: raw.weights,
            tail_mass: raw.tail_mass,
        })
    }
}

/// `⟨n⟩ = 1/(e^β − 1)`, evaluated without overflow for large β.
pub fn beta_to_mean_n(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(if beta > 1.0 {
        let e = (-beta).exp();
        e / (-(-beta).exp_m1())
    } else {
        1.0 / beta.exp_m1()
    })
}

/// Inverse of [`beta_to_mean_n`]: `β = ln(1 + 1/⟨n⟩)`.
pub fn mean_n_to_beta(mean_n: f64) -> Result<f64> {
    if !(mean_n > 0.0) || !mean_n.is_finite() {
        return Err(Error::InvalidParameter(format!("mean photon number must be positive, got {mean_n}")));
    }
    Ok((1.0 / mean_n).ln_1p())
}

/// `β = ħω / (k_B T)` for angular frequency ω (rad/s) and temperature T (K).
pub fn beta_from_omega_temperature(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) || !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter("omega and temperature must be positive".into()));
    }
    Ok(HBAR * omega / (K_B * temperature))
}

/// Mutually consistent description of a thermal mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParameters {
    pub beta: f64,
    pub omega: Option<f64>,
    pub temperature: Option<f64>,
    pub mean_n: f64,
}

/// Relative disagreement tolerated between over-specified parameters.
pub const CONSISTENCY_TOL: f64 = 1e-9;

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl SourceParameters {
    /// Resolves any consistent combination of (ω, T), β and ⟨n⟩.
    pub fn resolve(
        omega: Option<f64>,
        temperature: Option<f64>,
        beta: Option<f64>,
        mean_n: Option<f64>,
    ) -> Result<Self> {
        let from_ot = match (omega, temperature) {
            (Some(w), Some(t)) => Some(beta_from_omega_temperature(w, t)?),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidParameter(
                    "omega and temperature must be given together".into(),
                ))
            }
        };
        let from_mean = mean_n.map(mean_n_to_beta).transpose()?;
        let candidates: Vec<(&str, f64)> = [("omega/temperature", from_ot), ("beta", beta), ("mean_n", from_mean)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect();
        let Some(&(_, b)) = candidates.first() else {
            return Err(Error::InvalidParameter("need (omega, temperature), beta or mean_n".into()));
        };
        let n = beta_to_mean_n(b)?;
        for &(name, other) in &candidates[1..] {
            if rel_diff(b, other) > CONSISTENCY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} implies beta = {other}, inconsistent with beta = {b}"
                )));
            }
        }
        if let Some(m) = mean_n {
            if rel_diff(m, n) > CONSISTENCY_TOL {
                return Err(Error::InvalidParameter(format!("mean_n {m} inconsistent with beta {b}")));
            }
        }
        Ok(Self { beta: b, omega, temperature, mean_n: mean_n.unwrap_or(n) })
    }
}

/// Independent modes feeding one input port.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiModeSource {
    per_mode: Vec<PhotonNumberDistribution>,
    vacuum: f64,
}

impl MultiModeSource {
    pub fn new(per_mode: Vec<PhotonNumberDistribution>) -> Result<Self> {
        if per_mode.is_empty() {
            return Err(Error::InvalidParameter("multi-mode source needs at least one mode".into()));
        }
        let vacuum = per_mode.iter().map(PhotonNumberDistribution::vacuum).product();
        Ok(Self { per_mode, vacuum })
    }

    pub fn identical(mode: PhotonNumberDistribution, count: usize) -> Result<Self> {
        Self::new(vec![mode; count])
    }

    pub fn modes(&self) -> &[PhotonNumberDistribution] {
        &self.per_mode
    }

    pub fn len(&self) -> usize {
        self.per_mode.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_mode.is_empty()
    }
}

/// Probability weight of the (multi-mode) vacuum.
pub trait VacuumOverlap {
    fn vacuum_overlap(&self) -> f64;
}

impl VacuumOverlap for PhotonNumberDistribution {
    fn vacuum_overlap(&self) -> f64 {
        self.vacuum()
    }
}

impl VacuumOverlap for MultiModeSource {
    fn vacuum_overlap(&self) -> f64 {
        self.vacuum
    }
}

/// Parses `kind:mean[,kind:mean...]`, e.g. `thermal:0.5,pseudothermal:1`.
pub fn parse_mode_list(text: &str, epsilon_tail: f64) -> Result<Vec<PhotonNumberDistribution>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (kind, mean) = item
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected kind:mean, got `{item}`")))?;
        let kind: SourceKind = kind.parse()?;
        let mean: f64 = mean
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad mean photon number `{mean}`")))?;
        if mean > 1e6 {
            return Err(Error::Parse(format!("mean photon number {mean} out of range")));
        }
        out.push(PhotonNumberDistribution::of_kind(kind, mean, epsilon_tail)?);
    }
    if out.is_empty() {
        return Err(Error::Parse("empty mode list".into()));
    }
    Ok(out)
}
