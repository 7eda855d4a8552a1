//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("unknown config key `{key}` at line {line}")]
    UnknownConfigKey { key: String, line: usize },

    #[error("missing required config key `{key}`")]
    MissingConfigKey { key: String },

    #[error("invalid parameters: {}", violations.join("; "))]
    InvalidParams { violations: Vec<String> },

    #[error("negative pump power ({power} W)")]
    NegativePower { power: f64 },

    #[error("wavelength must be positive ({wavelength} m)")]
    NonPositiveWavelength { wavelength: f64 },

    #[error("degenerate steady state: {detail}")]
    DegenerateSteadyState { detail: String },

    #[error("singular steady-state assembly")]
    SingularAssembly,

    #[error("steady-state residual {residual:.3e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },

    #[error("all MECSEL rates vanish; the two-level populations are undefined")]
    UndefinedMecselState,

    #[error("runaway gain — check parameters (net gain still positive at {limit:.3e} photons)")]
    RunawayGain { limit: f64 },

    #[error("net gain is non-monotone in photon number: roots near {first:.6e} and {second:.6e}")]
    NonMonotoneGain { first: f64, second: f64 },

    #[error("family weights must sum to 1 (got {sum})")]
    InvalidFamilyWeights { sum: f64 },

    #[error("family list is empty")]
    EmptyFamilyList,

    #[error("pump grid must be non-empty, non-negative and strictly ascending")]
    InvalidPumpGrid,

    #[error("frequency grid must be non-empty and strictly ascending")]
    InvalidFrequencyGrid,

    #[error("resonance center {center_hz:.6e} Hz lies far outside the frequency grid")]
    ResonanceOutsideGrid { center_hz: f64 },

    #[error("sweep failed at grid point {pump_w} W: {source}")]
    SweepPoint { pump_w: f64, source: Box<Error> },

    #[error("need {needed} lasing points for the threshold fit, found {found}")]
    TooFewLasingPoints { needed: usize, found: usize },

    #[error("negative fitted slope on a rising power curve")]
    NegativeSlope,

    #[error("fitted slope efficiency {slope} outside [0, 1]")]
    NonPhysicalSlope { slope: f64 },

    #[error("threshold fit is degenerate (flat or collinear pump values)")]
    DegenerateThresholdFit,

    #[error("spectrum needs at least {needed} points, got {found}")]
    TooFewSpectrumPoints { needed: usize, found: usize },

    #[error("requested {requested} resonances but only {detected} peaks detected; pass explicit guesses")]
    TooFewPeaks { requested: usize, detected: usize },

    #[error("least-squares fit did not converge after {iterations} iterations")]
    FitDidNotConverge { iterations: usize },

    #[error("fit has no resonances")]
    EmptyFit,

    #[error("contrast must lie in (0, 1], got {contrast}")]
    ContrastOutOfRange { contrast: f64 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("calibration curve is not a {expected} sweep")]
    WrongSweepAxis { expected: &'static str },

    #[error("fitted gain coupling {g_eg:.3e} Hz does not exceed the cavity loss {kappa:.3e} Hz")]
    GainBelowLoss { g_eg: f64, kappa: f64 },

    #[error("optimization did not converge after {iterations} iterations")]
    OptimizerDidNotConverge { iterations: usize },

    #[error("all sensor points carry boost flags; nothing to fit the trend on")]
    AllSensorsFlagged,

    #[error("need at least two unflagged sensor points, got {found}")]
    TooFewSensors { found: usize },

    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
