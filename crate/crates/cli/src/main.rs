mod args;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use serde::Serialize;
use thermal_bell::bell::BellAngles;
use thermal_bell::device::build_output_ensemble;
use thermal_bell::photon::{parse_mode_list, PhotonNumberDistribution, SourceKind};
use thermal_bell::sampler::{estimate_bell, SampleConfig, SampleReport};
use thermal_bell::sweeps::{
    axis_range, bell_point_report, border_report, fig2_grid, flat_csv, inverse_threshold_report, multimode_report,
    parse_config, run_verification, threshold_report, Metadata, VerifyOptions,
};
use thermal_bell::Error;

use args::{Cli, Command, Common, Format, Sources};

const EXIT_COMPUTE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VERIFY: u8 = 3;

const DEFAULT_SHOTS: u64 = 100_000;

enum Failure {
    Usage(String),
    Verification(usize),
    Compute(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        // errors raised by the library while validating inputs count as
        // usage errors
        match e.downcast_ref::<Error>() {
            Some(
                Error::InvalidParameter(_)
                | Error::Parse(_)
                | Error::VacuumInputs
                | Error::NoBracket { .. }
                | Error::CutoffExceeded { .. },
            ) => Failure::Usage(format!("{e:#}")),
            _ => Failure::Compute(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

/// Finds `--config PATH` and splices the file's entries in right after the
/// subcommand name, so later command-line flags override them.
fn expand_config(raw: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut path = None;
    for (i, a) in raw.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = raw.get(i + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        }
    }
    let Some(path) = path else { return Ok(raw) };
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let entries = parse_config(&text).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    if let Some(e) = entries.iter().find(|e| e.key == "config") {
        return Err(Failure::Usage(format!("config files cannot include other configs ({})", e.value)));
    }
    let Some(sub) = raw.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(raw);
    };
    let mut out: Vec<OsString> = raw[..=sub].to_vec();
    out.extend(entries.iter().flat_map(|e| e.to_args()).map(OsString::from));
    out.extend(raw[sub + 1..].iter().cloned());
    Ok(out)
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).context("writing stdout")?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n").context("writing stdout")?;
            }
        }
    }
    Ok(())
}

fn report<T: Serialize>(common: &Common, value: &T) -> Result<(), Failure> {
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(value).context("serializing report")?,
        Format::Csv => flat_csv(value)?,
    };
    emit(common, &text)
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn distribution(kind: SourceKind, mean: f64, eps: f64) -> Result<PhotonNumberDistribution, Failure> {
    Ok(PhotonNumberDistribution::of_kind(kind, mean, eps)?)
}

fn sources(s: &Sources, eps: f64) -> Result<(PhotonNumberDistribution, PhotonNumberDistribution, BellAngles), Failure> {
    let a = distribution(s.kind_a.into(), s.mean_a, eps)?;
    let b = distribution(s.kind_b.unwrap_or(s.kind_a).into(), s.mean_b.unwrap_or(s.mean_a), eps)?;
    let angles = match &s.angles {
        None => BellAngles::CANONICAL,
        Some(v) if v.len() == 4 => BellAngles::new(v[0], v[1], v[2], v[3])?,
        Some(v) => return Err(usage(format!("--angles needs 4 values, got {}", v.len()))),
    };
    Ok((a, b, angles))
}

fn run(cli: Cli, command_line: String) -> Result<(), Failure> {
    let meta = || Metadata::new(command_line.clone());
    match &cli.command {
        Command::Fig2 { a_min, a_max, b_min, b_max, step, common } => {
            let a = axis_range(*a_min, *a_max, *step)?;
            let b = axis_range(b_min.unwrap_or(*a_min), b_max.unwrap_or(*a_max), *step)?;
            let grid = fig2_grid(a, b, meta())?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Csv => grid.to_csv()?,
                Format::Json => grid.to_json()?,
            };
            emit(common, &text)
        }
        Command::Border { a_min, a_max, a_step, b_min, b_max, common } => {
            let axis = axis_range(*a_min, *a_max, *a_step)?;
            let r = border_report(axis, *b_min, *b_max, meta())?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Csv => r.to_csv()?,
                Format::Json => r.to_json()?,
            };
            emit(common, &text)
        }
        Command::Threshold { kind, omega, temperature, beta, mean_n, common } => {
            if let (Some(w), None, None, None) = (omega, temperature, beta, mean_n) {
                if *kind != args::Kind::Thermal {
                    return Err(usage("the minimal temperature applies to thermal light"));
                }
                return report(common, &inverse_threshold_report(*w)?);
            }
            report(common, &threshold_report((*kind).into(), *omega, *temperature, *beta, *mean_n)?)
        }
        Command::Verify { tolerance, kerr_phase, common } => {
            let opts = VerifyOptions {
                cutoff: common.cutoff.unwrap_or(3),
                tail_eps: common.tail_eps,
                kerr_phase: kerr_phase * std::f64::consts::PI,
                tolerance_override: *tolerance,
            };
            let r = run_verification(opts)?;
            match common.format.unwrap_or(Format::Json) {
                Format::Json => emit(common, &r.to_json()?)?,
                Format::Csv => {
                    let mut w = String::from("name,measured,tolerance,passed\n");
                    for c in &r.checks {
                        w.push_str(&format!("{},{:e},{:e},{}\n", c.name, c.measured, c.tolerance, c.passed));
                    }
                    emit(common, &w)?
                }
            }
            for c in r.failures() {
                eprintln!("FAIL {}: measured {:e} > tolerance {:e} {}", c.name, c.measured, c.tolerance, c.note);
            }
            if r.all_passed {
                Ok(())
            } else {
                Err(Failure::Verification(r.failed))
            }
        }
        Command::Multimode { modes, kind, mean_n, count, common } => {
            let list = match modes {
                Some(text) => parse_mode_list(text, common.tail_eps)?,
                None => {
                    let mean = mean_n.ok_or_else(|| usage("give --modes or --mean-n (with optional --count)"))?;
                    let kind = kind.unwrap_or(args::Kind::Thermal).into();
                    let count = count.unwrap_or(1);
                    if count == 0 {
                        return Err(usage("--count must be at least 1"));
                    }
                    vec![PhotonNumberDistribution::of_kind(kind, mean, common.tail_eps)?; count]
                }
            };
            report(common, &multimode_report(list)?)
        }
        Command::Bell { sources: s, search_step, common } => {
            let (a, b, angles) = sources(s, common.tail_eps)?;
            let step = search_step.map(f64::to_radians);
            report(common, &bell_point_report(&a, &b, angles, step)?)
        }
        Command::Sample { sources: s, common } => {
            let (a, b, angles) = sources(s, common.tail_eps)?;
            let ens = build_output_ensemble(&a, &b)?;
            let config = SampleConfig::new(common.seed.unwrap_or(0), common.shots.unwrap_or(DEFAULT_SHOTS), angles)?;
            let r = estimate_bell(&ens, &config)?;
            report(common, &SampleReport::new(&config, &r))
        }
    }
}

fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let command_line = raw.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>().join(" ");
    let result = expand_config(raw).and_then(|argv| {
        let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
        run(cli, command_line)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verification(n)) => {
            eprintln!("verification failed: {n} check(s)");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_COMPUTE)
        }
    }
}
