use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation in record '{record}', field '{field}': {detail}")]
    Schema {
        record: String,
        field: String,
        detail: String,
    },
    #[error("record '{record}' targets '{target}', which is not in the disease vocabulary")]
    UnknownTarget { record: String, target: String },
    #[error("duplicate disease '{0}' in vocabulary")]
    DuplicateDisease(String),
    #[error("symptom name is empty after normalization")]
    EmptySymptom,
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("train fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("need at least 2 records to split, got {0}")]
    TooFewRecords(usize),
    #[error("knowledge profile for '{0}' is invalid: {1}")]
    Knowledge(String, String),
    #[error("no knowledge profiles given")]
    NoProfiles,
    #[error("fixture parameter out of range: {0}")]
    FixtureParam(String),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("unknown prompt template '{0}'")]
    UnknownTemplate(String),
    #[error("template '{template}' cannot render this input: {detail}")]
    TemplateInput { template: String, detail: String },
    #[error("{0} options exceed the 26-letter limit; use the hierarchical path")]
    TooManyOptions(usize),
    #[error("need at least 2 options, got {0}")]
    TooFewOptions(usize),
    #[error("duplicate option label '{0}'")]
    DuplicateOption(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("transport failure after {attempts} attempts: {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("malformed backend response: {0}")]
    Response(String),
    #[error("backend returned {got} scores for {expected} options")]
    ScoreLength { expected: usize, got: usize },
    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),
    #[error("cache I/O failure: {0}")]
    Cache(String),
}

#[derive(Debug, Error)]
pub enum SpecialistError {
    #[error("panel needs at least one knowledge profile")]
    EmptyPanel,
    #[error("duplicate profile disease '{0}'")]
    DuplicateProfile(String),
    #[error("profile disease '{0}' is not a panel option")]
    ProfileNotInOptions(String),
    #[error("permutation invalid: {0}")]
    Permutation(String),
    #[error("knowledge pool overlaps target disease '{0}'")]
    PoolOverlap(String),
    #[error("knowledge pool has {pool} profiles, need {needed}")]
    PoolTooSmall { pool: usize, needed: usize },
    #[error("prediction for unknown record '{0}'")]
    UnknownRecord(String),
    #[error("record '{0}' predicted more than once")]
    DuplicatePrediction(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("distribution matrix needs at least one row")]
    EmptyMatrix,
    #[error("row {row} labels differ from row 0")]
    LabelMismatch { row: usize },
    #[error("row {row} is not a probability distribution: {detail}")]
    InvalidRow { row: usize, detail: String },
    #[error("shape mismatch: model expects {expected_agents}x{expected_diseases}, got {agents}x{diseases}")]
    Shape {
        expected_agents: usize,
        expected_diseases: usize,
        agents: usize,
        diseases: usize,
    },
    #[error("target index {target} out of range for {n_d} diseases")]
    Target { target: usize, n_d: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("learning rate {0} outside [1e-3, 1e-1]; set allow_unsafe_lr to override")]
    LearningRate(f64),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("loss became non-finite at epoch {epoch}; last finite loss {last_finite_loss}")]
    Diverged { epoch: usize, last_finite_loss: f64 },
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no prediction for record '{0}'")]
    MissingPrediction(String),
    #[error("record '{0}' predicted more than once")]
    DuplicatePrediction(String),
    #[error("prediction for unknown record '{0}'")]
    UnknownRecord(String),
    #[error("{0} options give too many permutations for exhaustive PPA; use sampled mode")]
    ExhaustiveTooLarge(usize),
    #[error("paired samples must have equal length >= 2 (got {a} and {b})")]
    PairedLength { a: usize, b: usize },
    #[error("report has no rows")]
    EmptyReport,
    #[error("report rows have inconsistent columns")]
    RaggedReport,
    #[error("cannot write report {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Backend(#[from] BackendError),
}
