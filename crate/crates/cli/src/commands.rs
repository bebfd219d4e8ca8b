use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use teflow::market::{garman_klass_volatility, load_ohlc_csv, log_returns, parkinson_volatility};
use teflow::pipeline::{run_analysis, AnalysisSpec, PairSpec, WindowScheme};
use teflow::report::AnalysisReport;
use teflow::synth::{default_start, generate, ProcessKind, ProcessSpec};
use teflow::trends::{build_composite, first_difference, keyword_slug, load_trend_csv, KeywordSet};
use teflow::DatedSeries;

use crate::settings::{RunRecord, Settings};

pub struct RunContext {
    pub out: PathBuf,
    pub settings: Settings,
    pub plot_data: bool,
}

/// `Label=path`, or a bare path labelled by its file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPath {
    pub label: String,
    pub path: PathBuf,
}

impl std::str::FromStr for LabeledPath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some((label, path)) = s.split_once('=') {
            if label.trim().is_empty() || path.is_empty() {
                return Err(format!("expected LABEL=PATH, got '{s}'"));
            }
            return Ok(Self {
                label: label.trim().to_string(),
                path: PathBuf::from(path),
            });
        }
        let path = PathBuf::from(s);
        let label = path
            .file_stem()
            .map(|stem| stem.to_string_lossy().into_owned())
            .filter(|stem| !stem.is_empty())
            .ok_or_else(|| format!("cannot derive a label from '{s}'"))?;
        Ok(Self { label, path })
    }
}

fn write_series(
    ctx: &RunContext,
    record: &mut RunRecord,
    name: &str,
    series: &DatedSeries,
) -> Result<PathBuf> {
    let path = ctx.out.join(name);
    series.write_csv(&path)?;
    record.output(&path);
    Ok(path)
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Serialize)]
struct IngestSummary {
    input: String,
    output: String,
    kind: &'static str,
    rows: usize,
    first_date: Option<String>,
    last_date: Option<String>,
    missing: usize,
}

pub fn ingest(ctx: &RunContext, ohlc: &[PathBuf], trends: &[PathBuf]) -> Result<()> {
    if ohlc.is_empty() && trends.is_empty() {
        bail!("nothing to ingest: pass --ohlc and/or --trends");
    }
    let mut record = RunRecord::new("ingest", &ctx.out, &ctx.settings);
    let mut summary = Vec::new();
    for path in ohlc {
        let series = load_ohlc_csv(path)?;
        let stem = path
            .file_stem()
            .map_or("ohlc".into(), |s| s.to_string_lossy().into_owned());
        let target = ctx.out.join(format!("{stem}.csv"));
        series.write_csv(&target)?;
        record.input(format!("ohlc.{stem}"), path);
        record.output(&target);
        let bars = series.bars();
        summary.push(IngestSummary {
            input: path.display().to_string(),
            output: target.display().to_string(),
            kind: "ohlc",
            rows: bars.len(),
            first_date: bars.first().map(|b| b.date.to_string()),
            last_date: bars.last().map(|b| b.date.to_string()),
            missing: 0,
        });
    }
    for entry in trends {
        let files = if entry.is_dir() {
            csv_files(entry)?
        } else {
            vec![entry.clone()]
        };
        for path in files {
            let keyword = path
                .file_stem()
                .map_or(String::new(), |s| s.to_string_lossy().into_owned());
            let series = load_trend_csv(&path, &keyword, true)?;
            let slug = keyword_slug(&keyword);
            let target = write_series(ctx, &mut record, &format!("{slug}.csv"), &series)?;
            record.input(format!("trends.{slug}"), &path);
            summary.push(IngestSummary {
                input: path.display().to_string(),
                output: target.display().to_string(),
                kind: "trends",
                rows: series.len(),
                first_date: series.first_date().map(|d| d.to_string()),
                last_date: series.last_date().map(|d| d.to_string()),
                missing: series.values().iter().filter(|v| v.is_nan()).count(),
            });
        }
    }
    for s in &summary {
        println!(
            "{} -> {}: {} rows, {}..{}",
            s.input,
            s.output,
            s.rows,
            s.first_date.as_deref().unwrap_or("-"),
            s.last_date.as_deref().unwrap_or("-")
        );
    }
    let summary_path = ctx.out.join("ingest_summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    record.output(&summary_path);
    record.write()?;
    Ok(())
}

pub fn index(
    ctx: &RunContext,
    set: Option<&str>,
    keywords_file: Option<&Path>,
    input_dir: &Path,
    name: Option<&str>,
) -> Result<()> {
    let keywords = match (set, keywords_file) {
        (Some(set), None) => KeywordSet::preset(set)?,
        (None, Some(file)) => KeywordSet::from_file(file)?,
        _ => bail!("pass exactly one of --set and --keywords-file"),
    };
    let mut record = RunRecord::new("index", &ctx.out, &ctx.settings);
    record.input("input_dir", input_dir);
    record.parameter("keyword_set", keywords.name.clone());
    if let Some(file) = keywords_file {
        record.input("keywords_file", file);
    }

    let mut series = BTreeMap::new();
    for keyword in keywords.keywords() {
        let path = input_dir.join(format!("{}.csv", keyword_slug(keyword)));
        if path.is_file() {
            series.insert(keyword.clone(), load_trend_csv(&path, keyword, true)?);
        }
    }
    let composite = build_composite(&series, &keywords)?;
    let name = name.unwrap_or(&keywords.name);
    let levels = composite.levels.clone().with_label(name);
    write_series(ctx, &mut record, &format!("{name}.csv"), &levels)?;
    write_series(
        ctx,
        &mut record,
        &format!("{name}_diff.csv"),
        &first_difference(&levels)?,
    )?;

    let coverage_path = ctx.out.join(format!("{name}_coverage.csv"));
    let mut coverage = String::from("date,coverage\n");
    for (date, count) in levels.dates().iter().zip(&composite.coverage) {
        coverage.push_str(&format!("{date},{count}\n"));
    }
    fs::write(&coverage_path, coverage)
        .with_context(|| format!("writing {}", coverage_path.display()))?;
    record.output(&coverage_path);
    record.parameter(
        "missing_keywords",
        toml::Value::Array(
            composite
                .missing_keywords
                .iter()
                .cloned()
                .map(Into::into)
                .collect(),
        ),
    );
    println!(
        "{name}: {} of {} keywords, {} dates",
        keywords.len() - composite.missing_keywords.len(),
        keywords.len(),
        levels.len()
    );
    record.write()?;
    Ok(())
}

pub fn returns(ctx: &RunContext, ohlc: &Path) -> Result<()> {
    let mut record = RunRecord::new("returns", &ctx.out, &ctx.settings);
    record.input("ohlc", ohlc);
    let series = log_returns(&load_ohlc_csv(ohlc)?)?;
    write_series(ctx, &mut record, "returns.csv", &series)?;
    record.write()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VolMethod {
    Parkinson,
    Gk,
}

pub fn vol(ctx: &RunContext, ohlc: &Path, method: VolMethod) -> Result<()> {
    let mut record = RunRecord::new("vol", &ctx.out, &ctx.settings);
    record.input("ohlc", ohlc);
    let bars = load_ohlc_csv(ohlc)?;
    let series = match method {
        VolMethod::Parkinson => parkinson_volatility(&bars)?,
        VolMethod::Gk => garman_klass_volatility(&bars)?,
    };
    let undefined = series.values().iter().filter(|v| v.is_nan()).count();
    if undefined > 0 {
        log::warn!("{undefined} bars have no defined Garman-Klass value; written as missing");
    }
    record.parameter(
        "method",
        match method {
            VolMethod::Parkinson => "parkinson",
            VolMethod::Gk => "gk",
        },
    );
    write_series(ctx, &mut record, "volatility.csv", &series)?;
    record.write()?;
    Ok(())
}

/// Inputs shared by the three analysis commands.
pub struct PairInputs<'a> {
    pub source: &'a LabeledPath,
    pub targets: &'a [LabeledPath],
    pub one_way: bool,
}

pub enum Analysis {
    FullSample,
    Lags { min: usize, max: usize },
    Windows(WindowScheme),
}

impl Analysis {
    fn command(&self) -> &'static str {
        match self {
            Analysis::FullSample => "te",
            Analysis::Lags { .. } => "lagsweep",
            Analysis::Windows(_) => "windows",
        }
    }
}

/// File-name form of a direction label: `GTC → Return` becomes `gtc_to_return`.
pub fn direction_slug(direction: &str) -> String {
    direction
        .replace('→', " to ")
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

pub fn analyse(
    ctx: &RunContext,
    inputs: &PairInputs,
    analysis: Analysis,
) -> Result<AnalysisReport> {
    let command = analysis.command();
    let mut record = RunRecord::new(command, &ctx.out, &ctx.settings);
    let mut series = BTreeMap::new();
    let mut transforms = BTreeMap::new();
    let source_transform = ctx.settings.source_transform.unwrap_or_default();
    let target_transform = ctx.settings.target_transform.unwrap_or_default();

    let source = inputs.source;
    series.insert(
        source.label.clone(),
        DatedSeries::read_csv(&source.path, &source.label)?,
    );
    transforms.insert(source.label.clone(), source_transform);
    record.input(format!("source.{}", source.label), &source.path);
    let mut pairs = Vec::new();
    for target in inputs.targets {
        if series.contains_key(&target.label) {
            bail!("duplicate series label '{}'", target.label);
        }
        series.insert(
            target.label.clone(),
            DatedSeries::read_csv(&target.path, &target.label)?,
        );
        transforms.insert(target.label.clone(), target_transform);
        record.input(format!("target.{}", target.label), &target.path);
        pairs.push(PairSpec {
            source: source.label.clone(),
            target: target.label.clone(),
            both_ways: !inputs.one_way,
        });
    }

    let mut spec = AnalysisSpec {
        pairs,
        te_config: ctx.settings.te_config(),
        full_sample: false,
        lag_range: None,
        lag_mode: ctx.settings.lag_mode.unwrap_or_default(),
        window_scheme: None,
        transforms,
    };
    match analysis {
        Analysis::FullSample => spec.full_sample = true,
        Analysis::Lags { min, max } => {
            spec.lag_range = Some((min, max));
            record.parameter("min_lag", min as i64);
            record.parameter("max_lag", max as i64);
        }
        Analysis::Windows(scheme) => {
            spec.window_scheme = Some(scheme);
            match scheme {
                WindowScheme::Count(n) => record.parameter("window_count", n as i64),
                WindowScheme::Size(n) => record.parameter("window_size", n as i64),
            }
        }
    }
    record.parameter("both_ways", !inputs.one_way);

    let report = run_analysis(&spec, &series)?;
    let stem = format!("{command}_report");
    report.write(&ctx.out, &stem)?;
    record.output(&ctx.out.join(format!("{stem}.csv")));
    record.output(&ctx.out.join(format!("{stem}.json")));

    if ctx.plot_data {
        for curve in &report.lag_curves {
            let path = ctx
                .out
                .join(format!("lag_{}.csv", direction_slug(&curve.direction)));
            fs::write(&path, AnalysisReport::lag_plot_csv(curve))
                .with_context(|| format!("writing {}", path.display()))?;
            record.output(&path);
        }
        for curve in &report.window_results {
            let path = ctx
                .out
                .join(format!("windows_{}.csv", direction_slug(&curve.direction)));
            fs::write(&path, AnalysisReport::window_plot_csv(curve))
                .with_context(|| format!("writing {}", path.display()))?;
            record.output(&path);
        }
    }
    if report.dropped_observations > 0 {
        record.parameter("dropped_observations", report.dropped_observations as i64);
    }
    for r in report.records() {
        println!(
            "{}\tlag {}\tTE {:.4}\tETE {:.4}\tp {}",
            r.direction,
            r.lag,
            r.te,
            r.ete,
            r.p_value
                .map_or_else(|| "NA".to_string(), |p| format!("{p:.4}"))
        );
    }
    record.write()?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Iid,
    Copy,
    GaussianAr1,
}

pub struct SynthArgs<'a> {
    pub kind: Option<KindArg>,
    pub spec: Option<&'a Path>,
    pub length: usize,
    pub delay: usize,
    pub noise: f64,
    pub phi: f64,
    pub coupling: f64,
    pub seed_given: bool,
}

pub fn synthgen(ctx: &RunContext, args: &SynthArgs) -> Result<()> {
    let seed = ctx.settings.seed.unwrap_or_default();
    let spec = match (args.spec, args.kind) {
        (Some(path), None) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut spec: ProcessSpec =
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if args.seed_given {
                spec.seed = seed;
            }
            spec
        }
        (None, Some(kind)) => {
            let kind = match kind {
                KindArg::Iid => ProcessKind::IidBinary,
                KindArg::Copy => ProcessKind::Copy {
                    delay: args.delay,
                    noise: args.noise,
                },
                KindArg::GaussianAr1 => ProcessKind::GaussianAr1 {
                    phi: args.phi,
                    coupling: args.coupling,
                },
            };
            ProcessSpec::new(kind, args.length, seed)
        }
        _ => bail!("pass exactly one of --kind and --spec"),
    };
    let mut record = RunRecord::new("synthgen", &ctx.out, &ctx.settings);
    if let Some(path) = args.spec {
        record.input("spec", path);
    }
    record.parameter(
        "process",
        toml::Value::try_from(&spec).context("serializing process spec")?,
    );
    let (source, target) = generate(&spec)?.to_series(default_start())?;
    write_series(ctx, &mut record, "source.csv", &source)?;
    write_series(ctx, &mut record, "target.csv", &target)?;
    record.write()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labeled_paths() {
        let p: LabeledPath = "GTC=out/gtc_diff.csv".parse().unwrap();
        assert_eq!(p.label, "GTC");
        assert_eq!(p.path, PathBuf::from("out/gtc_diff.csv"));
        let p: LabeledPath = "data/returns.csv".parse().unwrap();
        assert_eq!(p.label, "returns");
        assert!("=x.csv".parse::<LabeledPath>().is_err());
    }

    #[test]
    fn slugs() {
        assert_eq!(direction_slug("GTC → Return"), "gtc_to_return");
        assert_eq!(direction_slug("a b → c"), "a_b_to_c");
    }
}
