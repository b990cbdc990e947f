//! Single-point and curve reports emitted by the command-line tool.

use serde::Serialize;

use super::{format_sig, Metadata};
use crate::bell::{
    bell_enumerated, bell_max_analytic, minimal_mode_count, minimum_violating_temperature, multimode_bell_max,
    pseudothermal_bell_max, pseudothermal_mean_threshold, search_max_bell, correlation_enumerated,
    thermal_beta_threshold, thermal_bell_max, thermal_mean_threshold, violation_border, BellAngles, BellResult,
    LOCAL_BOUND,
};
use crate::device::build_output_ensemble;
use crate::error::{Error, Result};
use crate::photon::{MultiModeSource, PhotonNumberDistribution, SourceKind, SourceParameters, VacuumOverlap};

/// Renders a report as two-column `key,value` CSV. Arrays of scalars are
/// joined with `;`; nested objects and arrays of objects use dotted keys.
pub fn flat_csv<T: Serialize>(report: &T) -> Result<String> {
    fn scalar(v: &serde_json::Value) -> String {
        match v {
            serde_json::Value::Null => "none".into(),
            serde_json::Value::Number(n) => match n.as_f64() {
                Some(f) if n.is_f64() => format_sig(f),
                _ => n.to_string(),
            },
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Array(a) => a.iter().map(scalar).collect::<Vec<_>>().join(";"),
            other => other.to_string(),
        }
    }
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out);
                }
            }
            serde_json::Value::Array(items) if items.iter().any(|v| v.is_object() || v.is_array()) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), v, out);
                }
            }
            other => out.push((prefix.to_string(), scalar(other))),
        }
    }
    let mut rows = Vec::new();
    walk("", &serde_json::to_value(report)?, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Violation borders for both source kinds over a common ⟨n⟩_A axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BorderReport {
    pub metadata: Metadata,
    pub mean_b_range: (f64, f64),
    pub mean_a: Vec<f64>,
    /// `None` where ℬ_max = 2 has no root in the ⟨n⟩_B range.
    pub thermal_mean_b: Vec<Option<f64>>,
    pub pseudothermal_mean_b: Vec<Option<f64>>,
    pub thermal_symmetric: f64,
    pub pseudothermal_symmetric: f64,
}

pub fn border_report(mean_a: Vec<f64>, b_lo: f64, b_hi: f64, metadata: Metadata) -> Result<BorderReport> {
    let th = violation_border(SourceKind::Thermal, &mean_a, b_lo, b_hi)?;
    let ps = violation_border(SourceKind::Pseudothermal, &mean_a, b_lo, b_hi)?;
    Ok(BorderReport {
        metadata,
        mean_b_range: (b_lo, b_hi),
        mean_a,
        thermal_mean_b: th.into_iter().map(|p| p.mean_b).collect(),
        pseudothermal_mean_b: ps.into_iter().map(|p| p.mean_b).collect(),
        thermal_symmetric: thermal_mean_threshold(),
        pseudothermal_symmetric: pseudothermal_mean_threshold(),
    })
}

impl BorderReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in self.metadata.csv_lines() {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("# mean_b_range: {} {}\n", format_sig(self.mean_b_range.0), format_sig(self.mean_b_range.1)));
        out.push_str(&format!("# thermal_symmetric: {}\n", format_sig(self.thermal_symmetric)));
        out.push_str(&format!("# pseudothermal_symmetric: {}\n", format_sig(self.pseudothermal_symmetric)));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["mean_A", "thermal_mean_B", "pseudothermal_mean_B"])?;
        let cell = |v: Option<f64>| v.map(format_sig).unwrap_or_else(|| "none".into());
        for ((a, t), p) in self.mean_a.iter().zip(&self.thermal_mean_b).zip(&self.pseudothermal_mean_b) {
            w.write_record([format_sig(*a), cell(*t), cell(*p)])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?);
        Ok(out)
    }
}

/// Identical sources on both sides, described by any consistent subset of
/// (ω, T), β and ⟨n⟩.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub kind: SourceKind,
    pub omega: Option<f64>,
    pub temperature: Option<f64>,
    pub beta: Option<f64>,
    pub mean_n: f64,
    pub p0: f64,
    pub bell_max: f64,
    pub violated: bool,
}

pub fn threshold_report(
    kind: SourceKind,
    omega: Option<f64>,
    temperature: Option<f64>,
    beta: Option<f64>,
    mean_n: Option<f64>,
) -> Result<ThresholdReport> {
    let (beta, mean_n, p0, bell_max) = match kind {
        SourceKind::Thermal => {
            let s = SourceParameters::resolve(omega, temperature, beta, mean_n)?;
            let p0 = -(-s.beta).exp_m1();
            (Some(s.beta), s.mean_n, p0, thermal_bell_max(s.beta, s.beta)?)
        }
        SourceKind::Pseudothermal => {
            if omega.is_some() || temperature.is_some() || beta.is_some() {
                return Err(Error::InvalidParameter(
                    "pseudothermal light is described by mean_n only".into(),
                ));
            }
            let n = mean_n.ok_or_else(|| Error::InvalidParameter("pseudothermal needs mean_n".into()))?;
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::InvalidParameter(format!("mean_n must be positive, got {n}")));
            }
            (None, n, (-n).exp(), pseudothermal_bell_max(n, n)?)
        }
        SourceKind::Custom => {
            return Err(Error::InvalidParameter("threshold reports cover thermal and pseudothermal light".into()))
        }
    };
    Ok(ThresholdReport { kind, omega, temperature, beta, mean_n, p0, bell_max, violated: bell_max > LOCAL_BOUND })
}

/// Lowest temperature giving a violation at frequency ω.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InverseThresholdReport {
    pub omega: f64,
    pub minimal_temperature: f64,
    pub beta_threshold: f64,
    pub mean_n_threshold: f64,
}

pub fn inverse_threshold_report(omega: f64) -> Result<InverseThresholdReport> {
    Ok(InverseThresholdReport {
        omega,
        minimal_temperature: minimum_violating_temperature(omega)?,
        beta_threshold: thermal_beta_threshold(),
        mean_n_threshold: thermal_mean_threshold(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSummary {
    pub kind: SourceKind,
    pub mean_n: f64,
    pub p0: f64,
}

/// The same multi-mode source on both sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultimodeReport {
    pub modes: Vec<ModeSummary>,
    pub effective_p0: f64,
    pub bell_max: f64,
    pub violated: bool,
    /// Smallest number of copies of the first mode that violates, if the
    /// modes are all identical.
    pub minimal_identical_modes: Option<usize>,
}

/// Largest mode count searched by [`multimode_report`].
pub const MAX_MODE_SEARCH: usize = 10_000;

pub fn multimode_report(modes: Vec<PhotonNumberDistribution>) -> Result<MultimodeReport> {
    let source = MultiModeSource::new(modes)?;
    let effective_p0 = source.vacuum_overlap();
    let bell_max = multimode_bell_max(&source, &source)?;
    let first = &source.modes()[0];
    let identical = source.modes().iter().all(|m| m.kind() == first.kind() && m.mean_n() == first.mean_n());
    let minimal_identical_modes = if identical { minimal_mode_count(first.vacuum(), MAX_MODE_SEARCH)? } else { None };
    Ok(MultimodeReport {
        modes: source
            .modes()
            .iter()
            .map(|m| ModeSummary { kind: m.kind(), mean_n: m.mean_n(), p0: m.vacuum() })
            .collect(),
        effective_p0,
        bell_max,
        violated: bell_max > LOCAL_BOUND,
        minimal_identical_modes,
    })
}

/// Enumerated and closed-form CHSH values for one pair of sources.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellPointReport {
    pub kind_a: SourceKind,
    pub mean_a: f64,
    pub kind_b: SourceKind,
    pub mean_b: f64,
    pub tail_eps: f64,
    pub p0: f64,
    pub r0: f64,
    pub normalization: f64,
    pub entries: usize,
    pub deficit: f64,
    pub angles: BellAngles,
    pub enumerated: BellResult,
    pub bell_max_analytic: f64,
    pub violated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub searched: Option<SearchSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchSummary {
    pub step: f64,
    pub angles: BellAngles,
    pub bell_value: f64,
}

pub fn bell_point_report(
    source_a: &PhotonNumberDistribution,
    source_b: &PhotonNumberDistribution,
    angles: BellAngles,
    search_step: Option<f64>,
) -> Result<BellPointReport> {
    let ens = build_output_ensemble(source_a, source_b)?;
    let enumerated = bell_enumerated(&ens, &angles);
    let bell_max = bell_max_analytic(ens.p0(), ens.r0())?;
    let searched = match search_step {
        Some(step) => {
            let found = search_max_bell(|a, b| correlation_enumerated(&ens, a, b), step)?;
            Some(SearchSummary { step, angles: found.angles, bell_value: found.bell_value })
        }
        None => None,
    };
    Ok(BellPointReport {
        kind_a: source_a.kind(),
        mean_a: source_a.mean_n(),
        kind_b: source_b.kind(),
        mean_b: source_b.mean_n(),
        tail_eps: source_a.epsilon_tail().max(source_b.epsilon_tail()),
        p0: ens.p0(),
        r0: ens.r0(),
        normalization: ens.normalization(),
        entries: ens.entries().len(),
        deficit: ens.deficit(),
        angles,
        enumerated,
        bell_max_analytic: bell_max,
        violated: enumerated.bell_value > LOCAL_BOUND,
        searched,
    })
}
