//! Parameter sweeps and the file formats behind the command-line tool.
//!
//! Grid CSV layout: `# key: value` metadata lines, then a header row whose
//! first cell names the axes and whose remaining cells are the B axis, then
//! one row per A-axis value. Numbers are written with 12 significant digits
//! and axis values are rounded to that precision *before* evaluation, so a
//! re-read grid can be re-evaluated exactly.

pub mod config;
pub mod reports;
pub mod verify;

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{pseudothermal_bell_max, thermal_bell_max, thermal_bell_max_from_means, LOCAL_BOUND};
use crate::error::{Error, Result};
use crate::photon::{SourceKind, HBAR, K_B};

pub use config::{parse_config, ConfigEntry};
pub use reports::*;
pub use verify::{run_verification, Check, VerifyOptions, VerifyReport};

/// Most points allowed on one axis.
pub const MAX_AXIS_POINTS: usize = 100_000;

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// 12-significant-digit text that parses back to [`round_sig`]`(x)`.
pub fn format_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 || !r.is_finite() || (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// `start, start + step, …` up to `stop` (inclusive within 1e-9 steps),
/// each rounded to 12 significant digits.
pub fn axis_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if ![start, stop, step].iter().all(|v| v.is_finite()) || !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("bad range {start}..{stop} step {step}")));
    }
    if stop < start {
        return Err(Error::InvalidParameter(format!("empty range {start}..{stop}")));
    }
    let span = (stop - start) / step + 1e-9;
    if span >= MAX_AXIS_POINTS as f64 {
        return Err(Error::InvalidParameter(format!("range has more than {MAX_AXIS_POINTS} points")));
    }
    let n = span.floor() as usize + 1;
    Ok((0..n).map(|i| round_sig(start + i as f64 * step)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Beta,
    MeanN,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Beta => "beta",
            AxisKind::MeanN => "mean_n",
        }
    }
}

impl std::str::FromStr for AxisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "beta" => Ok(AxisKind::Beta),
            "mean_n" => Ok(AxisKind::MeanN),
            other => Err(Error::Parse(format!("unknown axis kind `{other}`"))),
        }
    }
}

/// Closed-form ℬ_max for one grid cell.
pub fn cell_value(axis: AxisKind, kind: SourceKind, a: f64, b: f64) -> Result<f64> {
    match (axis, kind) {
        (AxisKind::Beta, SourceKind::Thermal) => thermal_bell_max(a, b),
        (AxisKind::MeanN, SourceKind::Thermal) => thermal_bell_max_from_means(a, b),
        (AxisKind::MeanN, SourceKind::Pseudothermal) => pseudothermal_bell_max(a, b),
        _ => Err(Error::InvalidParameter(format!("no {} grid for {kind} light", axis.name()))),
    }
}

/// Run metadata written into every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command_line: String,
    pub timestamp_unix: u64,
    pub hbar: f64,
    pub k_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Metadata {
    pub fn new(command_line: impl Into<String>) -> Self {
        Self {
            tool: "thermal-bell".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command_line: command_line.into().replace(['\n', '\r'], " "),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            hbar: HBAR,
            k_b: K_B,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn csv_lines(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("tool".into(), self.tool.clone()),
            ("version".into(), self.version.clone()),
            ("command_line".into(), self.command_line.clone()),
            ("timestamp_unix".into(), self.timestamp_unix.to_string()),
            ("hbar".into(), format!("{:e}", self.hbar)),
            ("k_b".into(), format!("{:e}", self.k_b)),
        ];
        if let Some(s) = self.seed {
            v.push(("seed".into(), s.to_string()));
        }
        v
    }
}

/// ℬ_max evaluated on a rectangular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub source_kind: SourceKind,
    pub axis_kind: AxisKind,
    pub axis_a: Vec<f64>,
    pub axis_b: Vec<f64>,
    /// `cells[i][j]` belongs to `(axis_a[i], axis_b[j])`.
    pub cells: Vec<Vec<f64>>,
    #[serde(default)]
    pub violated: Vec<Vec<bool>>,
    pub metadata: Metadata,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} axis is empty")));
    }
    if axis.len() > MAX_AXIS_POINTS {
        return Err(Error::InvalidParameter(format!("{name} axis has more than {MAX_AXIS_POINTS} points")));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

impl SweepGrid {
    /// Evaluates every cell; rows run in parallel.
    pub fn evaluate(
        axis_kind: AxisKind,
        source_kind: SourceKind,
        axis_a: Vec<f64>,
        axis_b: Vec<f64>,
        metadata: Metadata,
    ) -> Result<Self> {
        check_axis("A", &axis_a)?;
        check_axis("B", &axis_b)?;
        let cells = axis_a
            .par_iter()
            .map(|&a| axis_b.iter().map(|&b| cell_value(axis_kind, source_kind, a, b)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let violated = cells.iter().map(|r| r.iter().map(|&v| v > LOCAL_BOUND).collect()).collect();
        Ok(Self { source_kind, axis_kind, axis_a, axis_b, cells, violated, metadata })
    }

    pub fn violating_cells(&self) -> usize {
        self.violated.iter().flatten().filter(|v| **v).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: SweepGrid = serde_json::from_str(text)?;
        check_axis("A", &g.axis_a)?;
        check_axis("B", &g.axis_b)?;
        if g.cells.len() != g.axis_a.len() || g.cells.iter().any(|r| r.len() != g.axis_b.len()) {
            return Err(Error::Parse("grid cells do not match the axes".into()));
        }
        Ok(g)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in self.metadata.csv_lines() {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("# source_kind: {}\n", self.source_kind));
        out.push_str(&format!("# axis_kind: {}\n", self.axis_kind.name()));
        out.push_str(&format!("# violating_cells: {}\n", self.violating_cells()));
        let mut w = csv::Writer::from_writer(Vec::new());
        let corner = format!("{0}_A\\{0}_B", self.axis_kind.name());
        w.write_record(std::iter::once(corner).chain(self.axis_b.iter().map(|&b| format_sig(b))))?;
        for (a, row) in self.axis_a.iter().zip(&self.cells) {
            w.write_record(std::iter::once(format_sig(*a)).chain(row.iter().map(|&c| format_sig(c))))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?);
        Ok(out)
    }

    /// True when every cell equals a fresh closed-form evaluation at the
    /// stored axis values, bit for bit.
    pub fn reevaluates_exactly(&self) -> Result<bool> {
        for (a, row) in self.axis_a.iter().zip(&self.cells) {
            for (b, c) in self.axis_b.iter().zip(row) {
                if cell_value(self.axis_kind, self.source_kind, *a, *b)?.to_bits() != c.to_bits() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Thermal ℬ_max over a β_A × β_B grid.
pub fn fig2_grid(beta_a: Vec<f64>, beta_b: Vec<f64>, metadata: Metadata) -> Result<SweepGrid> {
    SweepGrid::evaluate(AxisKind::Beta, SourceKind::Thermal, beta_a, beta_b, metadata)
}

/// Default β axis: 0.01 to 1.0 in steps of 0.01.
pub fn default_beta_axis() -> Vec<f64> {
    axis_range(0.01, 1.0, 0.01).expect("static range")
}

/// A grid read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedGrid {
    pub metadata: BTreeMap<String, String>,
    pub axis_a: Vec<f64>,
    pub axis_b: Vec<f64>,
    pub cells: Vec<Vec<f64>>,
}

fn parse_number(field: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse(format!("not a number: `{field}`")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite value `{field}`")));
    }
    Ok(v)
}

/// Parses the grid CSV layout written by [`SweepGrid::to_csv`].
pub fn parse_grid_csv(text: &str) -> Result<ParsedGrid> {
    let mut metadata = BTreeMap::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records.next().ok_or_else(|| Error::Parse("grid has no header row".into()))??;
    if header.len() < 2 {
        return Err(Error::Parse("header row has no B-axis values".into()));
    }
    let axis_b = header.iter().skip(1).map(parse_number).collect::<Result<Vec<_>>>()?;
    let mut axis_a = Vec::new();
    let mut cells = Vec::new();
    for rec in records {
        let rec = rec?;
        if rec.len() != axis_b.len() + 1 {
            return Err(Error::Parse(format!("row {} has {} fields, expected {}", axis_a.len() + 1, rec.len(), axis_b.len() + 1)));
        }
        let mut it = rec.iter().map(parse_number);
        axis_a.push(it.next().expect("nonempty record")?);
        cells.push(it.collect::<Result<Vec<_>>>()?);
    }
    check_axis("A", &axis_a).map_err(|e| Error::Parse(e.to_string()))?;
    check_axis("B", &axis_b).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(ParsedGrid { metadata, axis_a, axis_b, cells })
}

impl ParsedGrid {
    fn kinds(&self) -> Result<(AxisKind, SourceKind)> {
        let get = |k: &str| self.metadata.get(k).ok_or_else(|| Error::Parse(format!("missing `{k}` metadata")));
        Ok((get("axis_kind")?.parse()?, get("source_kind")?.parse()?))
    }

    /// Re-evaluates every cell from the parsed axes and compares after the
    /// same 12-digit rounding the writer applies.
    pub fn reevaluates_exactly(&self) -> Result<bool> {
        let (axis, kind) = self.kinds()?;
        for (a, row) in self.axis_a.iter().zip(&self.cells) {
            for (b, c) in self.axis_b.iter().zip(row) {
                if round_sig(cell_value(axis, kind, *a, *b)?).to_bits() != c.to_bits() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{thermal_beta_threshold, TSIRELSON};
    use approx::assert_abs_diff_eq;

    fn meta() -> Metadata {
        Metadata::new("thermal-bell fig2")
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.01), "0.01");
        assert_eq!(format_sig(2.0 * std::f64::consts::SQRT_2), "2.82842712475");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(1.7235e-7), "1.7235e-7");
        assert_eq!(format_sig(0.0), "0");
        for x in [0.1 + 0.2, 123456.789012345, 9.99999999999951e-3, 6.02e23] {
            assert_eq!(format_sig(x).parse::<f64>().unwrap(), round_sig(x));
        }
    }

    #[test]
    fn ranges() {
        let a = default_beta_axis();
        assert_eq!(a.len(), 100);
        assert_eq!(a[0], 0.01);
        assert_eq!(a[18], 0.19);
        assert_eq!(*a.last().unwrap(), 1.0);
        assert!(axis_range(1.0, 0.5, 0.1).is_err());
        assert!(axis_range(0.0, 1.0, 0.0).is_err());
        assert!(axis_range(0.0, 1e9, 1e-3).is_err());
        assert_eq!(axis_range(2.0, 2.0, 0.5).unwrap(), vec![2.0]);
    }

    #[test]
    fn fig2_cells() {
        let t = thermal_beta_threshold();
        let ln2 = std::f64::consts::LN_2;
        let g = fig2_grid(vec![0.1, t, ln2], vec![0.1, t, ln2], meta()).unwrap();
        assert_abs_diff_eq!(g.cells[1][1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.cells[2][2], TSIRELSON / 3.0, epsilon = 1e-15);
        assert!(g.violated[0][0]);
        assert!(!g.violated[2][2]);
        let full = fig2_grid(default_beta_axis(), default_beta_axis(), meta()).unwrap();
        assert!(full.cells.iter().flatten().all(|&c| c <= TSIRELSON));
        assert!(full.reevaluates_exactly().unwrap());
        assert!(full.violating_cells() > 0);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = fig2_grid(default_beta_axis(), axis_range(0.05, 0.5, 0.05).unwrap(), meta()).unwrap();
        let text = g.to_csv().unwrap();
        assert!(text.starts_with("# tool: thermal-bell\n"));
        let p = parse_grid_csv(&text).unwrap();
        assert_eq!(p.axis_a, g.axis_a);
        assert_eq!(p.axis_b, g.axis_b);
        assert_eq!(p.metadata["source_kind"], "thermal");
        assert_eq!(p.metadata["violating_cells"], g.violating_cells().to_string());
        assert!(p.reevaluates_exactly().unwrap());
        let mut tampered = p.clone();
        tampered.cells[3][4] = f64::from_bits(tampered.cells[3][4].to_bits() + 1);
        assert!(!tampered.reevaluates_exactly().unwrap());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = SweepGrid::evaluate(
            AxisKind::MeanN,
            SourceKind::Pseudothermal,
            axis_range(0.1, 3.0, 0.1).unwrap(),
            axis_range(0.2, 2.0, 0.3).unwrap(),
            meta().with_seed(4),
        )
        .unwrap();
        let back = SweepGrid::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(back.reevaluates_exactly().unwrap());
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(parse_grid_csv("").is_err());
        assert!(parse_grid_csv("x,1,2\n0.1,1\n").is_err());
        assert!(parse_grid_csv("x,1,2\n0.1,1,nan\n").is_err());
        assert!(parse_grid_csv("x,2,1\n0.1,1,1\n").is_err());
        assert!(SweepGrid::evaluate(AxisKind::Beta, SourceKind::Pseudothermal, vec![1.0], vec![1.0], meta()).is_err());
        assert!(fig2_grid(vec![], vec![1.0], meta()).is_err());
        assert!(fig2_grid(vec![-1.0], vec![1.0], meta()).is_err());
    }
}
