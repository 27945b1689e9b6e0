//! Split, panel distributions, fusion and test evaluation for one config.

use std::path::Path;
use std::sync::Arc;

use amsc_core::backend::{
    build_backend, load_taxonomy, CachedBackend, DiagnosticDistribution, QuestionSource, ScoreBackend, ScoreCache,
};
use amsc_core::data::{load_dataset, split_dataset, symptom_view, Dataset, Split, SymptomView};
use amsc_core::eval::{accuracy, avg_turns, correctness, EvalResult};
use amsc_core::fixture::{synthesize, unrelated_profiles};
use amsc_core::fusion::{
    apdf_forward, apdf_init, apdf_train, build_matrix, fuse_majority, fuse_mean, linear_fusion_apply,
    linear_fusion_train, ApdfModel, DistributionMatrix,
};
use amsc_core::knowledge::{load_knowledge, KnowledgeProfile};
use amsc_core::specialist::{
    default_derangement, distributions_for, irrelevant_knowledge, make_ablation_panel, make_panel,
    per_disease_recall, reorder_knowledge, Panel, Prediction, PromptPlan, Specialist,
};

use crate::config::{Ablation, FusionMethod, RunConfig, SymptomSource};
use crate::error::{CliError, Stage};

/// Counts every distribution the pipeline produces and records any that
/// break the probability-vector invariants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistributionAudit {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl DistributionAudit {
    fn observe(&mut self, what: &str, d: &DiagnosticDistribution) {
        self.checked += 1;
        if let Err(e) = d.check() {
            self.violations.push(format!("{what}: {e}"));
        }
    }
}

/// Questions for one half of the split, in record order.
struct Questions {
    views: Vec<SymptomView>,
    texts: Vec<Option<String>>,
}

impl Questions {
    fn new(ds: &Dataset, source: SymptomSource) -> Self {
        let views = ds.records.iter().map(|r| symptom_view(r, source.view_mode())).collect();
        let texts = ds
            .records
            .iter()
            .map(|r| match source {
                SymptomSource::Text => r.complaint_text.clone(),
                _ => None,
            })
            .collect();
        Questions { views, texts }
    }

    fn sources(&self) -> Vec<QuestionSource<'_>> {
        self.views
            .iter()
            .zip(&self.texts)
            .map(|(v, t)| match t {
                Some(t) => QuestionSource::Text(t),
                None => QuestionSource::Symptoms(v),
            })
            .collect()
    }

    fn text_fallbacks(&self) -> usize {
        self.texts.iter().filter(|t| t.is_none()).count()
    }
}

/// Everything a run needs before any backend call.
pub struct Session {
    pub config: RunConfig,
    pub dataset: Dataset,
    /// Matched knowledge, one profile per disease.
    pub profiles: Vec<KnowledgeProfile>,
    pub split: Split,
    pub backend: Arc<dyn ScoreBackend>,
    pub panel: Panel,
    pub plan: PromptPlan,
    pub audit: DistributionAudit,
    warnings: Vec<String>,
    train_q: Questions,
    test_q: Questions,
    panel_train: Option<Vec<Vec<DiagnosticDistribution>>>,
    panel_test: Option<Vec<Vec<DiagnosticDistribution>>>,
    gp_test: Option<Vec<DiagnosticDistribution>>,
    cache: Option<Arc<ScoreCache>>,
}

/// Output of one evaluated system.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: EvalResult,
    pub predictions: Vec<Prediction>,
    /// Per test record, in test order.
    pub correctness: Vec<f64>,
    pub test_ids: Vec<String>,
    pub model: Option<ApdfModel>,
    pub train_losses: Vec<f64>,
}

pub fn load_inputs(config: &RunConfig) -> Result<(Dataset, Vec<KnowledgeProfile>), CliError> {
    let ds = &config.dataset;
    let (dataset, mut profiles) = match (&ds.path, &ds.fixture) {
        (Some(path), None) => (load_dataset(path)?, Vec::new()),
        (None, Some(spec)) => synthesize(spec)?,
        _ => return Err(CliError::new(Stage::Config, "dataset: exactly one of path or fixture")),
    };
    if let Some(k) = &ds.knowledge {
        profiles = load_knowledge(k)?;
    }
    Ok((dataset, profiles))
}

fn panel_knowledge(config: &RunConfig, profiles: &[KnowledgeProfile]) -> Result<Vec<KnowledgeProfile>, CliError> {
    Ok(match config.panel.ablation {
        Ablation::None => profiles.to_vec(),
        Ablation::Reordered => {
            let perm = config
                .panel
                .permutation
                .clone()
                .unwrap_or_else(|| default_derangement(profiles.len()));
            reorder_knowledge(profiles, &perm)?
        }
        Ablation::Irrelevant => {
            let diseases: Vec<String> = profiles.iter().map(|p| p.disease.clone()).collect();
            let pool = match &config.panel.pool {
                Some(path) => load_knowledge(path)?,
                None => unrelated_profiles(profiles.len()),
            };
            irrelevant_knowledge(&diseases, &pool)?
        }
    })
}

impl Session {
    pub fn new(config: &RunConfig, cache_dir: Option<&Path>) -> Result<Self, CliError> {
        config.validate()?;
        let (dataset, profiles) = load_inputs(config)?;
        let split = split_dataset(&dataset, config.dataset.train_fraction, config.seed)?;
        let mut warnings = Vec::new();
        if split.unstratified {
            warnings.push("split is unstratified: some disease has fewer than two records".to_string());
        }

        let raw = build_backend(&config.backend_config(), &profiles)?;
        let (backend, cache): (Arc<dyn ScoreBackend>, _) = match cache_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::new(Stage::Backend, format!("cache dir {}: {e}", dir.display())))?;
                let cache = Arc::new(ScoreCache::open(&dir.join("scores.jsonl"))?);
                warnings.extend(cache.warnings());
                (Arc::new(CachedBackend::new(raw, cache.clone())), Some(cache))
            }
            None => (raw, None),
        };

        let knowledge = panel_knowledge(config, &profiles)?;
        let panel = match config.panel.ablation {
            Ablation::Irrelevant => make_ablation_panel(backend.clone(), &knowledge, &dataset.diseases)?,
            _ => make_panel(backend.clone(), &knowledge, &dataset.diseases)?,
        };
        let plan = PromptPlan {
            template_id: config.fusion.template_id.clone(),
            taxonomy: match &config.dataset.taxonomy {
                Some(p) => Some(load_taxonomy(p)?),
                None => None,
            },
        };

        let train_q = Questions::new(&split.train, config.dataset.source);
        let test_q = Questions::new(&split.test, config.dataset.source);
        if config.dataset.source == SymptomSource::Text {
            let n = train_q.text_fallbacks() + test_q.text_fallbacks();
            if n > 0 {
                warnings.push(format!("{n} records have no complaint text; used explicit symptoms"));
            }
        }

        Ok(Session {
            config: config.clone(),
            dataset,
            profiles,
            split,
            backend,
            panel,
            plan,
            audit: DistributionAudit::default(),
            warnings,
            train_q,
            test_q,
            panel_train: None,
            panel_test: None,
            gp_test: None,
            cache,
        })
    }

    fn collect_panel(&mut self, train: bool) -> Result<&Vec<Vec<DiagnosticDistribution>>, CliError> {
        let slot_empty = if train { self.panel_train.is_none() } else { self.panel_test.is_none() };
        if slot_empty {
            let q = if train { &self.train_q } else { &self.test_q };
            let rows = self.panel.distributions(&q.sources(), &self.plan)?;
            for (r, row) in rows.iter().enumerate() {
                for (a, d) in row.iter().enumerate() {
                    self.audit.observe(&format!("panel[{r}][{a}]"), d);
                }
            }
            if train {
                self.panel_train = Some(rows);
            } else {
                self.panel_test = Some(rows);
            }
        }
        Ok(if train {
            self.panel_train.as_ref().expect("filled")
        } else {
            self.panel_test.as_ref().expect("filled")
        })
    }

    fn collect_gp(&mut self) -> Result<&Vec<DiagnosticDistribution>, CliError> {
        if self.gp_test.is_none() {
            let gp = Specialist::general_practitioner(self.backend.clone());
            let rows = distributions_for(&gp, &self.test_q.sources(), &self.dataset.diseases, &self.plan)?;
            for (r, d) in rows.iter().enumerate() {
                self.audit.observe(&format!("gp[{r}]"), d);
            }
            self.gp_test = Some(rows);
        }
        Ok(self.gp_test.as_ref().expect("filled"))
    }

    fn matrices(&mut self, train: bool) -> Result<Vec<DistributionMatrix>, CliError> {
        let rows = self.collect_panel(train)?;
        rows.iter().map(|r| build_matrix(r).map_err(CliError::from)).collect()
    }

    fn targets(&self, ds: &Dataset) -> Vec<usize> {
        ds.records
            .iter()
            .map(|r| self.dataset.disease_index(&r.target).expect("validated target"))
            .collect()
    }

    /// Evaluates the configured fusion method.
    pub fn run(&mut self) -> Result<RunOutcome, CliError> {
        let (method, agent) = (self.config.fusion.method, self.config.fusion.agent);
        self.evaluate(method, agent)
    }

    /// Evaluates any fusion method on this session's panel and split.
    pub fn evaluate(&mut self, method: FusionMethod, agent: Option<usize>) -> Result<RunOutcome, CliError> {
        let labels = self.dataset.diseases.clone();
        let mut train_seconds = 0.0;
        let mut param_count = 0;
        let mut model = None;
        let mut train_losses = Vec::new();

        let picks: Vec<usize> = match method {
            FusionMethod::Gp => self.collect_gp()?.iter().map(|d| d.argmax()).collect(),
            FusionMethod::Single => {
                let i = agent.ok_or_else(|| CliError::new(Stage::Config, "single needs an agent index"))?;
                let n = self.panel.specialists.len();
                if i >= n {
                    return Err(CliError::new(
                        Stage::Config,
                        format!("agent {i} is out of range for a panel of {n}"),
                    ));
                }
                self.collect_panel(false)?.iter().map(|row| row[i].argmax()).collect()
            }
            FusionMethod::Mean => {
                let mut picks = Vec::new();
                for (r, m) in self.matrices(false)?.iter().enumerate() {
                    let fused = fuse_mean(m);
                    self.audit.observe(&format!("mean[{r}]"), &fused);
                    picks.push(fused.argmax());
                }
                picks
            }
            FusionMethod::Majority => self.matrices(false)?.iter().map(fuse_majority).collect(),
            FusionMethod::Apdf | FusionMethod::Linear => {
                let train_m = self.matrices(true)?;
                let train_t = self.targets(&self.split.train.clone());
                let data: Vec<(DistributionMatrix, usize)> = train_m.into_iter().zip(train_t).collect();
                let cfg = self.config.train.resolve(self.config.seed);
                let test_m = self.matrices(false)?;
                let mut fused = Vec::with_capacity(test_m.len());
                if method == FusionMethod::Apdf {
                    let (n_a, n_d) = (self.panel.specialists.len(), labels.len());
                    let init = apdf_init(n_d, n_a, cfg.seed, cfg.init_scale);
                    let (trained, log) = apdf_train(&init, &data, &cfg)?;
                    for m in &test_m {
                        fused.push(apdf_forward(&trained, m)?);
                    }
                    train_seconds = log.seconds;
                    param_count = log.param_count;
                    train_losses = log.losses;
                    model = Some(trained);
                } else {
                    let (trained, log) = linear_fusion_train(&data, &cfg)?;
                    for m in &test_m {
                        fused.push(linear_fusion_apply(&trained, m)?);
                    }
                    train_seconds = log.seconds;
                    param_count = log.param_count;
                    train_losses = log.losses;
                }
                for (r, d) in fused.iter().enumerate() {
                    self.audit.observe(&format!("{}[{r}]", method.tag()), d);
                }
                fused.iter().map(|d| d.argmax()).collect()
            }
        };

        let test = &self.split.test;
        let predictions: Vec<Prediction> = test
            .records
            .iter()
            .zip(&picks)
            .map(|(r, &p)| Prediction {
                record_id: r.id.clone(),
                disease: labels[p].clone(),
            })
            .collect();
        let acc = accuracy(&predictions, test)?;
        let corr = correctness(&predictions, test)?;
        let recall = per_disease_recall(&predictions, test)?;

        let mut warnings = self.warnings.clone();
        if let Some(c) = &self.cache {
            for w in c.warnings() {
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
            }
        }
        if !self.audit.violations.is_empty() {
            warnings.push(format!("{} invalid distributions", self.audit.violations.len()));
        }
        let mut cfg = self.config.clone();
        cfg.fusion.method = method;
        cfg.fusion.agent = agent;
        let avg = avg_turns(cfg.dataset.source.view_mode(), test);

        Ok(RunOutcome {
            result: EvalResult {
                system: cfg.system_name(),
                accuracy: acc,
                avg_turns: avg,
                train_seconds,
                param_count,
                per_disease_recall: recall,
                warnings,
            },
            predictions,
            correctness: corr,
            test_ids: test.records.iter().map(|r| r.id.clone()).collect(),
            model,
            train_losses,
        })
    }

    /// Recall on each disease for every panel member and the general practitioner.
    pub fn recall_table(&mut self) -> Result<Vec<(String, EvalResult)>, CliError> {
        let mut rows = Vec::new();
        let gp = self.evaluate(FusionMethod::Gp, None)?;
        rows.push((gp.result.system.clone(), gp.result));
        for i in 0..self.panel.specialists.len() {
            let id = self.panel.specialists[i].id.clone();
            let r = self.evaluate(FusionMethod::Single, Some(i))?;
            rows.push((id, r.result));
        }
        Ok(rows)
    }
}
