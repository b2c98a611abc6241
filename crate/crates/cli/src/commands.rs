use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::Serialize;
use skilldecomp_core::dataset::{write_jsonl, DatasetSummary};
use skilldecomp_core::evalcmp::{fit_full, verdict, Components, VerdictOptions};
use skilldecomp_core::features::EncodedMatch;
use skilldecomp_core::synth::{bayes_accuracy, calibrate_scale};
use skilldecomp_core::{
    anonymize as anonymize_dataset, build_index, encode, evaluate_chronological, generate_matches,
    ingest as ingest_records, run_comparison, sample_ground_truth, ComparisonReport, CvResult,
    EncodingScheme, Format, IndexedDataset, IngestOptions, ModelKind, Scheme, TrueSkillParams,
    WorldConfig,
};

use crate::config::{ConjunctionArg, EvaluateArgs, ModeArg, RatingArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn write_file(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_dataset(path: &Path) -> anyhow::Result<IndexedDataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    IndexedDataset::from_json(&text).with_context(|| format!("loading dataset {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw matches, JSON Lines or CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: FormatArg,
    /// Where to write the indexed dataset (JSON).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 5, env = "SKILLDECOMP_TEAM_SIZE")]
    pub team_size: usize,
    /// Skip invalid records instead of aborting on the first one.
    #[arg(long)]
    pub skip_bad: bool,
}

#[derive(Serialize)]
struct IngestSummary {
    #[serde(flatten)]
    dataset: DatasetSummary,
    skipped: usize,
}

pub fn ingest(args: IngestArgs) -> anyhow::Result<()> {
    let format = match args.format {
        FormatArg::Jsonl => Format::JsonLines,
        FormatArg::Csv => Format::Csv,
    };
    let options = IngestOptions {
        team_size: args.team_size,
        strict: !args.skip_bad,
    };
    let ingested = ingest_records(open(&args.input)?, format, options)?;
    for e in &ingested.skipped {
        eprintln!("skipped: {e}");
    }
    let dataset = build_index(&ingested.records)?;
    write_file(&args.output, dataset.to_json().as_bytes())?;
    print_json(&IngestSummary {
        dataset: dataset.summary(),
        skipped: ingested.skipped.len(),
    })
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// LR-P, LR-C, LR-PC, LR-P-C or LR-P-C-PC.
    #[arg(long)]
    pub scheme: String,
    /// JSON Lines output, one encoded match per line.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn featurize(args: FeaturizeArgs) -> anyhow::Result<()> {
    let kind: Scheme = args.scheme.parse()?;
    let dataset = load_dataset(&args.dataset)?;
    let scheme = EncodingScheme::for_dataset(kind, &dataset);
    let mut out = Vec::new();
    for (z, m) in dataset.matches().iter().enumerate() {
        serde_json::to_writer(&mut out, &EncodedMatch::new(z, kind, encode(m, &scheme)?))?;
        out.push(b'\n');
    }
    write_file(&args.output, &out)
}

pub fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let effective = args.resolve()?;
    let dataset = load_dataset(&effective.dataset)?;
    let mut report = run_comparison(&dataset, &effective.comparison)?;
    report.config = serde_json::to_value(&effective)?;

    // everything is computed before the first file is written
    let mut outputs: Vec<(PathBuf, Vec<u8>)> = vec![
        (effective.out_dir.join("report.json"), report.to_json().into_bytes()),
        (effective.out_dir.join("report.txt"), report.to_text().into_bytes()),
    ];
    if effective.fold_csv {
        outputs.push((effective.out_dir.join("folds.csv"), report.fold_csv().into_bytes()));
    }
    if effective.save_models {
        for kind in &effective.comparison.models {
            let (ModelKind::Lr(scheme), Some(c)) = (kind, report.result(kind.name()).and_then(|r| r.best_c))
            else {
                continue;
            };
            let model = fit_full(&dataset, *scheme, c, &effective.comparison.optimizer)?;
            let path = effective.out_dir.join("models").join(format!("{}.json", kind.name()));
            outputs.push((path, model.to_json().into_bytes()));
        }
    }
    for (path, bytes) in &outputs {
        write_file(path, bytes)?;
    }
    print!("{}", report.to_text());
    Ok(())
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// `LABEL=PATH` of a report written by `evaluate`; repeat for each dataset.
    #[arg(long = "report", required = true)]
    pub reports: Vec<String>,
    /// Re-run the verdict with this significance test instead of the stored one.
    #[arg(long, value_enum)]
    pub significance: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub conjunction: Option<ConjunctionArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Also write the combined comparison as JSON here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct CompareEntry {
    label: String,
    components: Option<Components>,
    hypothesis: Option<String>,
}

const TABLE_ORDER: [&str; 7] = ["LR-P", "LR-C", "LR-P-C", "LR-PC", "LR-P-C-PC", "TrueSkill", "BL-MC"];

fn cell(r: Option<&CvResult>) -> String {
    r.map(|r| format!("{:.2}% ± {:.2}%", 100.0 * r.mean, 100.0 * r.std))
        .unwrap_or_else(|| "-".into())
}

/// Flags first, then the settings the report was produced with.
fn verdict_options(args: &CompareArgs, report: &ComparisonReport) -> VerdictOptions {
    let stored = |key: &str| report.config.get(key).cloned();
    let defaults = VerdictOptions::default();
    VerdictOptions {
        mode: args
            .significance
            .map(Into::into)
            .or_else(|| stored("significance").and_then(|v| serde_json::from_value(v).ok()))
            .unwrap_or(defaults.mode),
        conjunction: args
            .conjunction
            .map(Into::into)
            .or_else(|| stored("conjunction").and_then(|v| serde_json::from_value(v).ok()))
            .unwrap_or(defaults.conjunction),
        alpha: args
            .alpha
            .or_else(|| stored("alpha").and_then(|v| v.as_f64()))
            .unwrap_or(defaults.alpha),
    }
}

pub fn compare(args: CompareArgs) -> anyhow::Result<()> {
    let mut loaded: Vec<(String, ComparisonReport)> = Vec::new();
    for spec in &args.reports {
        let (label, path) = spec
            .split_once('=')
            .map(|(l, p)| (l.to_string(), PathBuf::from(p)))
            .unwrap_or_else(|| {
                let p = PathBuf::from(spec);
                let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (label, p)
            });
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let report = ComparisonReport::from_json(&text)
            .with_context(|| format!("parsing report {}", path.display()))?;
        loaded.push((label, report));
    }
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("Model".to_string())
        .chain(loaded.iter().map(|(l, _)| l.clone()))
        .collect()];
    for name in TABLE_ORDER {
        if loaded.iter().all(|(_, r)| r.result(name).is_none()) {
            continue;
        }
        rows.push(
            std::iter::once(name.to_string())
                .chain(loaded.iter().map(|(_, r)| cell(r.result(name))))
                .collect(),
        );
    }
    let mut entries = Vec::new();
    for (label, report) in &loaded {
        let options = verdict_options(&args, report);
        let v = verdict(&report.results, &options).ok();
        entries.push(CompareEntry {
            label: label.clone(),
            components: v.as_ref().map(|v| v.components),
            hypothesis: v.map(|v| v.hypothesis.to_string()),
        });
    }
    rows.push(
        std::iter::once("Verdict".to_string())
            .chain(entries.iter().map(|e| e.hypothesis.clone().unwrap_or_else(|| "-".into())))
            .collect(),
    );
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|k| rows.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
        .collect();
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        println!("{}", line.join("  ").trim_end());
    }
    if let Some(path) = &args.output {
        let mut text = serde_json::to_string_pretty(&entries)?;
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub players: usize,
    #[arg(long, default_value_t = 30)]
    pub champions: usize,
    #[arg(long, default_value_t = 5)]
    pub team_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub s_p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s_c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s_pc: f64,
    /// Multiplier on the skill gap inside the logistic link.
    #[arg(long, default_value_t = 1.0, conflicts_with = "target_bayes")]
    pub scale: f64,
    /// Choose the scale so the Bayes accuracy hits this value.
    #[arg(long)]
    pub target_bayes: Option<f64>,
    #[arg(long, default_value_t = 20000)]
    pub matches: usize,
    #[arg(long, env = "SKILLDECOMP_SEED")]
    pub seed: u64,
    /// Directory for matches.jsonl and truth.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Print a Monte Carlo estimate of the Bayes accuracy.
    #[arg(long)]
    pub calibrate: bool,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
}

#[derive(Serialize)]
struct SynthSummary {
    matches: usize,
    scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bayes_accuracy: Option<f64>,
}

pub fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let config = WorldConfig {
        players: args.players,
        champions: args.champions,
        team_size: args.team_size,
        s_p: args.s_p,
        s_c: args.s_c,
        s_pc: args.s_pc,
        scale: args.scale,
    };
    // independent streams for skills, matches and Monte Carlo draws
    let mut truth = sample_ground_truth(&config, args.seed)?;
    if let Some(target) = args.target_bayes {
        let scale = calibrate_scale(&truth, target, args.mc_samples, args.seed.wrapping_add(2))?;
        truth = truth.with_scale(scale);
    }
    let records = generate_matches(&truth, args.matches, args.seed.wrapping_add(1))?;
    let bayes = if args.calibrate || args.target_bayes.is_some() {
        Some(bayes_accuracy(&truth, args.mc_samples, args.seed.wrapping_add(2))?)
    } else {
        None
    };
    let mut jsonl = Vec::new();
    write_jsonl(&records, &mut jsonl)?;
    write_file(&args.out_dir.join("matches.jsonl"), &jsonl)?;
    write_file(&args.out_dir.join("truth.json"), truth.to_json().as_bytes())?;
    print_json(&SynthSummary {
        matches: records.len(),
        scale: truth.scale,
        bayes_accuracy: bayes,
    })
}

#[derive(Debug, Args)]
pub struct AnonymizeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Share of named players to hide.
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, env = "SKILLDECOMP_SEED")]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn anonymize(args: AnonymizeArgs) -> anyhow::Result<()> {
    let dataset = load_dataset(&args.dataset)?;
    let hidden = anonymize_dataset(&dataset, args.fraction, args.seed)?;
    write_file(&args.output, hidden.to_json().as_bytes())?;
    print_json(&hidden.summary())
}

#[derive(Debug, Args)]
pub struct TrueSkillArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    #[command(flatten)]
    pub rating: RatingArgs,
    /// Final ratings as JSON, highest mean first.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Bootstrap resamples for the accuracy's standard deviation.
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0, env = "SKILLDECOMP_SEED")]
    pub seed: u64,
}

#[derive(Serialize)]
struct TrueSkillSummary {
    train_matches: usize,
    test_matches: usize,
    accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap_std: Option<f64>,
}

pub fn trueskill(args: TrueSkillArgs) -> anyhow::Result<()> {
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        bail!("--train-fraction must lie strictly between 0 and 1");
    }
    let params = args.rating.apply(TrueSkillParams::default());
    let dataset = load_dataset(&args.dataset)?;
    let report = evaluate_chronological(&dataset, &params, args.train_fraction)?;
    if let Some(path) = &args.ratings {
        let mut text = serde_json::to_string_pretty(&report.ratings)?;
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    print_json(&TrueSkillSummary {
        train_matches: report.train_matches,
        test_matches: report.test_matches,
        accuracy: report.accuracy,
        bootstrap_std: (args.bootstrap > 1).then(|| report.bootstrap_std(args.bootstrap, args.seed)),
    })
}
