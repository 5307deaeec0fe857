//! Crate-wide error type with a coarse classification used by the CLI
//! to pick exit codes.

use thiserror::Error;

/// How a failure should be treated by a caller that has to pick an exit
/// status: bad input, a methodological problem with the measurement
/// itself, or a bug/environment failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or inconsistent input (files, notations, plans).
    Input,
    /// The data is well-formed but the measurement method rejects it
    /// (non-monotone characterization, Q outside the characterized range).
    Methodological,
    /// Anything else.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    // -- signal-quality arithmetic -------------------------------------
    #[error("empty combination: no GOSNR component present")]
    EmptyCombination,
    #[error("non-positive GOSNR component {name} = {value}")]
    NonPositiveComponent { name: &'static str, value: f64 },
    #[error("non-positive bandwidth {0} GHz")]
    NonPositiveBandwidth(f64),
    #[error("non-positive linear ratio {0}")]
    NonPositiveRatio(f64),
    #[error("noise exceeds measured power: p_tot = {p_tot} mW, noise over signal bandwidth = {noise_in_band} mW")]
    NoiseExceedsPower { p_tot: f64, noise_in_band: f64 },
    #[error("invalid signal spec: {0}")]
    InvalidSignalSpec(String),

    // -- characterization ----------------------------------------------
    #[error("too few characterization samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("characterization data not monotone: {0}")]
    NotMonotone(String),
    #[error("duplicate OSNR value {0} dB in characterization samples")]
    DuplicateOsnr(f64),
    #[error("sample out of instrument-plausible range: osnr = {0} dB")]
    ImplausibleOsnr(f64),
    #[error("non-finite characterization sample ({osnr}, {q})")]
    NonFiniteSample { osnr: f64, q: f64 },
    #[error("Q = {q} dB out of characterized range (curve max {max} dB) — switch to a more demanding format")]
    AboveCharacterizedRange { q: f64, max: f64 },
    #[error("Q = {q} dB below characterized range (curve min {min} dB)")]
    BelowCharacterizedRange { q: f64, min: f64 },
    #[error("OSNR {osnr} dB outside curve domain [{min}, {max}] dB")]
    OutsideDomain { osnr: f64, min: f64, max: f64 },
    #[error("OSNR {0} dB on the domain boundary; sensitivity needs an interior point")]
    BoundarySensitivity(f64),
    #[error("curves cross — select per measurement (crossing near Q in [{q_lo:.2}, {q_hi:.2}] dB between {a} and {b})")]
    CurvesCross {
        q_lo: f64,
        q_hi: f64,
        a: String,
        b: String,
    },
    #[error("profiles have mismatched signal specs: {0}")]
    MismatchedSpecs(String),
    #[error("need at least {need} profiles, got {got}")]
    TooFewProfiles { got: usize, need: usize },
    #[error("no overlap between curve domains")]
    NoSharedDomain,

    // -- line-system model ----------------------------------------------
    #[error("load notation error at position {position}: {reason}")]
    LoadNotation { position: usize, reason: String },
    #[error("invalid link: {0}")]
    InvalidLink(String),
    #[error("invalid media channel: {0}")]
    InvalidMediaChannel(String),
    #[error("no carrier at {0} THz in media channel")]
    NoSuchCarrier(f64),

    // -- probing / margins -----------------------------------------------
    #[error("invalid probe plan: {0}")]
    InvalidPlan(String),
    #[error("unknown profile id {0:?}")]
    UnknownProfile(String),
    #[error("no in-range estimate to consolidate")]
    NothingToConsolidate,
    #[error("probe results cover mismatched conditions: {0}")]
    MismatchedConditions(String),
    #[error("missing load conditions in paired results: {0}")]
    MissingLoads(String),
    #[error("end-of-life margin needs at least two load conditions")]
    SingleLoadCondition,
    #[error("reference load {0} not present in the probed set")]
    MissingReferenceLoad(String),
    #[error("pre-FEC threshold unreachable within ±{span} dB power swing")]
    ThresholdUnreachable { span: f64 },
    #[error("missing measurement for plan point: {0}")]
    MissingMeasurement(String),
    #[error("no gsnr_req entry for {modulation} at {symbol_rate_gbd} GBd")]
    MissingRequirement {
        modulation: String,
        symbol_rate_gbd: f64,
    },

    // -- files and formats -----------------------------------------------
    #[error("parse error in {file} line {line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NotMonotone(_)
            | AboveCharacterizedRange { .. }
            | BelowCharacterizedRange { .. }
            | CurvesCross { .. }
            | NoiseExceedsPower { .. }
            | ThresholdUnreachable { .. }
            | NothingToConsolidate => ErrorClass::Methodological,
            _ => ErrorClass::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
