//! The four subcommands: run, ppa, compare, fixture.

use std::fs;
use std::path::{Path, PathBuf};

use amsc_core::backend::{build_prompt, QuestionSource};
use amsc_core::data::{save_dataset, symptom_view};
use amsc_core::eval::{
    emit_report, paired_t_test, ppa, Comparison, EvalResult, PpaMode, PpaReport, ReportFormat, ReportMeta,
    MAX_EXHAUSTIVE_OPTIONS,
};
use amsc_core::fixture::{synthesize, unrelated_profiles, FixtureSpec};
use amsc_core::fusion::save_model;
use amsc_core::knowledge::save_knowledge;

use crate::config::{RunConfig, SymptomSource};
use crate::error::{CliError, Stage};
use crate::pipeline::{RunOutcome, Session};

/// What the paired t-tests in a comparison report pair up.
pub const PAIRING: &str = "per-record correctness on the shared test split";

pub fn report_meta(config: &RunConfig, backend_id: String) -> ReportMeta {
    ReportMeta {
        seed: config.seed,
        backend: backend_id,
        template_id: config.fusion.template_id.clone(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        pairing: None,
    }
}

/// Runs one configured system end to end and writes its report.
pub fn cmd_run(config: &RunConfig, cache_dir: Option<&Path>) -> Result<RunOutcome, CliError> {
    let mut session = Session::new(config, cache_dir)?;
    let outcome = session.run()?;
    if let (Some(path), Some(model)) = (&config.output.model_path, &outcome.model) {
        save_model(model, path).map_err(|e| CliError::new(Stage::Output, e.to_string()))?;
    }
    let meta = report_meta(config, session.backend.id());
    emit_report(
        std::slice::from_ref(&outcome.result),
        &meta,
        config.output.format,
        &config.output.path,
    )?;
    Ok(outcome)
}

/// Order-robustness of the backend over prompts built from the test split.
pub fn cmd_ppa(config: &RunConfig, cache_dir: Option<&Path>) -> Result<PpaReport, CliError> {
    let session = Session::new(config, cache_dir)?;
    let diseases = &session.dataset.diseases;
    let mode = if diseases.len() <= MAX_EXHAUSTIVE_OPTIONS {
        PpaMode::Exhaustive
    } else {
        PpaMode::Sampled {
            k: config.ppa.samples,
            seed: config.seed,
        }
    };
    let limit = config.ppa.max_prompts.unwrap_or(usize::MAX);
    let mut results = Vec::new();
    for record in session.split.test.records.iter().take(limit) {
        let view = symptom_view(record, config.dataset.source.view_mode());
        let source = match (&record.complaint_text, config.dataset.source) {
            (Some(t), SymptomSource::Text) => QuestionSource::Text(t),
            _ => QuestionSource::Symptoms(&view),
        };
        let prompt = build_prompt(source, diseases, None, &config.fusion.template_id)?;
        results.push(ppa(session.backend.as_ref(), &prompt, mode)?);
    }
    let report = PpaReport::from_prompts(&results);
    let meta = report_meta(config, session.backend.id());
    emit_report(std::slice::from_ref(&report), &meta, config.output.format, &config.output.path)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub results: Vec<EvalResult>,
    pub comparisons: Vec<Comparison>,
    pub comparisons_path: PathBuf,
}

/// Sibling file for the t-test table: `report.json` → `report.ttest.json`.
pub fn comparisons_path(out: &Path, format: ReportFormat) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    out.with_file_name(format!("{stem}.ttest.{ext}"))
}

/// Evaluates each config on the same test split and t-tests the requested pairs.
/// With no pairs given, every config is compared against the first.
pub fn cmd_compare(
    configs: &[RunConfig],
    pairs: &[(usize, usize)],
    cache_dir: Option<&Path>,
) -> Result<CompareOutcome, CliError> {
    if configs.len() < 2 {
        return Err(CliError::new(Stage::Config, "compare needs at least two configs"));
    }
    let pairs: Vec<(usize, usize)> = if pairs.is_empty() {
        (1..configs.len()).map(|j| (0, j)).collect()
    } else {
        pairs.to_vec()
    };
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= configs.len() || b >= configs.len()) {
        return Err(CliError::new(
            Stage::Config,
            format!("pair ({a}, {b}) refers to a config that was not given"),
        ));
    }

    let mut outcomes: Vec<RunOutcome> = Vec::with_capacity(configs.len());
    let mut backend_id = String::new();
    for (i, cfg) in configs.iter().enumerate() {
        let mut session = Session::new(cfg, cache_dir)?;
        let out = session.run()?;
        if let Some(first) = outcomes.first() {
            if first.test_ids != out.test_ids {
                return Err(CliError::new(
                    Stage::Eval,
                    format!("config {i} evaluates a different test split than config 0"),
                ));
            }
        } else {
            backend_id = session.backend.id();
        }
        outcomes.push(out);
    }

    let mut comparisons = Vec::with_capacity(pairs.len());
    for &(a, b) in &pairs {
        let test = paired_t_test(&outcomes[a].correctness, &outcomes[b].correctness)?;
        comparisons.push(Comparison {
            system_a: outcomes[a].result.system.clone(),
            system_b: outcomes[b].result.system.clone(),
            accuracy_a: outcomes[a].result.accuracy,
            accuracy_b: outcomes[b].result.accuracy,
            test,
        });
    }

    let first = &configs[0];
    let mut meta = report_meta(first, backend_id);
    meta.pairing = Some(PAIRING.to_string());
    let results: Vec<EvalResult> = outcomes.into_iter().map(|o| o.result).collect();
    emit_report(&results, &meta, first.output.format, &first.output.path)?;
    let cpath = comparisons_path(&first.output.path, first.output.format);
    emit_report(&comparisons, &meta, first.output.format, &cpath)?;
    Ok(CompareOutcome {
        results,
        comparisons,
        comparisons_path: cpath,
    })
}

/// Paths written by [`cmd_fixture`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureFiles {
    pub dataset: PathBuf,
    pub knowledge: PathBuf,
    pub pool: PathBuf,
}

/// Writes `dataset.json`, `knowledge.json` and an unrelated-knowledge `pool.json` into `dir`.
pub fn cmd_fixture(spec: &FixtureSpec, dir: &Path) -> Result<FixtureFiles, CliError> {
    let (dataset, profiles) = synthesize(spec)?;
    fs::create_dir_all(dir).map_err(|e| CliError::new(Stage::Output, format!("{}: {e}", dir.display())))?;
    let files = FixtureFiles {
        dataset: dir.join("dataset.json"),
        knowledge: dir.join("knowledge.json"),
        pool: dir.join("pool.json"),
    };
    let out = |e: amsc_core::error::DataError| CliError::new(Stage::Output, e.to_string());
    save_dataset(&dataset, &files.dataset).map_err(out)?;
    save_knowledge(&profiles, &files.knowledge).map_err(out)?;
    save_knowledge(&unrelated_profiles(profiles.len()), &files.pool).map_err(out)?;
    Ok(files)
}
