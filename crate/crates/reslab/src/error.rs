//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation produced a non-finite value at r = {r}: {what}")]
    Evaluation { r: f64, what: String },

    #[error("stale input: {0}")]
    StaleInput(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("decay assumption violated: {0}")]
    DecayAssumption(String),

    #[error("node count non-monotone on the energy mesh near E = {energy}; refine the mesh")]
    MeshRefinement { energy: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certificate search exhausted M in [{m_min}, {m_max}] without both margins turning non-negative")]
    Inconclusive {
        m_min: u32,
        m_max: u32,
        trace: Vec<MarginTraceEntry>,
    },

    #[error("iteration is not contractive (D = {d:.6}); increments grew over {steps} steps")]
    NonContractive {
        d: f64,
        steps: usize,
        trace: Vec<f64>,
    },

    #[error("shooting bracket not found in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("target value {target} outside the attained range [{lo}, {hi}]")]
    Range { target: f64, lo: f64, hi: f64 },

    #[error("fit window too short: {0}")]
    FitWindow(String),

    #[error("kernel envelope {envelope:.3e} not below {threshold:.3e} at truncation radius {r_q}")]
    Truncation {
        r_q: f64,
        envelope: f64,
        threshold: f64,
    },

    #[error("scan resolution too coarse: {0}")]
    Resolution(String),

    #[error("cross-module inconsistency: {0}")]
    Consistency(String),

    #[error("CFL condition violated: dt = {dt} exceeds {limit} for the requested mesh")]
    Stability { dt: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One (M, middle margin, large margin) row of a certificate search.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MarginTraceEntry {
    pub m: u32,
    pub middle_margin: f64,
    pub large_margin: f64,
}

pub type Result<T> = std::result::Result<T, Error>;
