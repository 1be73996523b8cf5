//! Error type shared by every module of the crate.

/// Categories used by callers (the CLI maps them to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input: radius outside the potential's domain, malformed parameters.
    InvalidInput,
    /// A validated-window or action-domain precondition failed.
    Validation,
    /// An iterative numeric procedure failed to converge or lost its bracket.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("radius {r} outside the potential's domain ({lo}, {hi})")]
    DomainViolation { r: f64, lo: f64, hi: f64 },

    #[error("degenerate potential parameters: {0}")]
    DegeneratePotential(String),

    #[error("window rejected at node r = {r}: condition {condition} violated (value {value})")]
    WindowRejected {
        r: f64,
        condition: &'static str,
        value: f64,
    },

    #[error("window produced non-increasing angular-momentum bounds: gamma({r_lo}) = {gamma_lo} >= gamma({r_hi}) = {gamma_hi}")]
    WindowNotMonotone {
        r_lo: f64,
        r_hi: f64,
        gamma_lo: f64,
        gamma_hi: f64,
    },

    #[error("I2 = {i2} outside the admissible range ({gamma_lo}, {gamma_hi})")]
    OutOfWindow {
        i2: f64,
        gamma_lo: f64,
        gamma_hi: f64,
    },

    #[error("degenerate minimum of the effective potential at r0 = {r0}: curvature {curvature} <= 0")]
    DegenerateMinimum { r0: f64, curvature: f64 },

    #[error("singular configuration at r0 = {r0}: {what} vanishes")]
    SingularConfiguration { r0: f64, what: &'static str },

    #[error("energy {e} at or below the effective-potential minimum {e_min}")]
    BelowMinimum { e: f64, e_min: f64 },

    #[error("energy {e} at or above the bounded-motion limit {e_max}")]
    UnboundedOrbit { e: f64, e_max: f64 },

    #[error("radial action {i1} outside the bounded-motion range [0, {f_max})")]
    ActionOutOfRange { i1: f64, f_max: f64 },

    #[error("insufficient margin around (I1, I2) = ({i1}, {i2}) for finite differences")]
    InsufficientMargin { i1: f64, i2: f64 },

    #[error("critical point of h0: frequency vector vanishes, test undefined")]
    CriticalPoint,

    #[error("trajectory aborted at t = {t}: |q| = {r} below guard radius {r_guard}")]
    CloseApproach { t: f64, r: f64, r_guard: f64 },

    #[error("initial actions inside the excluded neighborhood: distance {distance} to an exceptional I2 value is below rho = {rho}")]
    InsideExceptionalSet { distance: f64, rho: f64 },

    #[error("root solver lost its bracket on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            DomainViolation { .. } | DegeneratePotential(_) | InvalidConfig(_) | Io(_) => {
                ErrorCategory::InvalidInput
            }
            WindowRejected { .. }
            | WindowNotMonotone { .. }
            | OutOfWindow { .. }
            | DegenerateMinimum { .. }
            | SingularConfiguration { .. }
            | BelowMinimum { .. }
            | UnboundedOrbit { .. }
            | ActionOutOfRange { .. }
            | InsufficientMargin { .. }
            | CriticalPoint
            | InsideExceptionalSet { .. } => ErrorCategory::Validation,
            CloseApproach { .. } | NoBracket { .. } | NotConverged { .. } => ErrorCategory::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
