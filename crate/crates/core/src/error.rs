use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Coarse grouping of errors, used by front ends to pick exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    /// The inputs violate an operation's precondition.
    Precondition,
    /// A numerical procedure failed to converge or verify.
    Numerical,
    /// The computation finished but could not decide.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid angle: {0}")]
    InvalidAngle(String),
    #[error("precision exhausted after {terms} partial quotients; raise the working precision")]
    PrecisionExhausted { terms: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no fixed point found: Newton did not converge in {steps} steps")]
    NoFixedPointFound { steps: usize },
    #[error("degenerate differential: eigenvalues {gap:e} apart")]
    DegenerateDifferential { gap: f64 },
    #[error("fixed point is not semi-indifferent (|lambda| = {lambda_modulus}, |mu| = {mu_modulus})")]
    NotSemiIndifferent { lambda_modulus: f64, mu_modulus: f64 },
    #[error("no nonlinear term found in the jet up to degree {degree}")]
    JetDegreeInsufficient { degree: usize },
    #[error("first nonlinear term has order {order}, not 1 + a multiple of q = {q}")]
    ResonanceViolation { order: usize, q: u64 },
    #[error("convergent index {index} out of range (expansion has {available})")]
    IndexOutOfRange { index: usize, available: usize },
    #[error("grid too coarse: certified slack {slack:e} below Lipschitz allowance {required:e}")]
    GridTooCoarse { slack: f64, required: f64 },
    #[error("inverse map unavailable")]
    InverseUnavailable,
    #[error("small divisor breakdown at degree {degree}: |divisor| = {divisor:e}")]
    SmallDivisor { degree: usize, divisor: f64 },
    #[error("jet residual tolerance {tolerance:e} unmet at every tested radius (best {best:e})")]
    ResidualToleranceUnmet { tolerance: f64, best: f64 },
    #[error("orbit escapes the validity region at step {step}")]
    OrbitEscapes { step: usize },
    #[error("forward trapping unverifiable after retries; worst escaping sample at |x| = {worst_modulus:e}")]
    TrappingUnverifiable { worst_modulus: f64 },
    #[error("graph transform diverges")]
    GraphTransformDivergence,
    #[error("found {found} petal components, expected {expected}")]
    ComponentCountMismatch { found: usize, expected: usize },
    #[error("ambiguous tracking of component {component}")]
    AmbiguousTracking { component: usize },
    #[error("chart mismatch between compact sets")]
    ChartMismatch,
    #[error("jet coefficients lost precision at degree {degree} (double and double-double differ by {discrepancy:e})")]
    JetPrecisionLoss { degree: usize, discrepancy: f64 },
    #[error("orbit cap {cap} cannot resolve the petals: the fastest transit needs about {needed:e} iterations")]
    OrbitCapInsufficient { needed: f64, cap: usize },
    #[error("semi-parabolic multiplicity {nu} > 1 is not supported")]
    MultiplicityUnsupported { nu: usize },
    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: Box<Error> },
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        use Error::*;
        match self {
            InvalidAngle(_)
            | Precondition(_)
            | NotSemiIndifferent { .. }
            | IndexOutOfRange { .. }
            | InverseUnavailable
            | ChartMismatch
            | MultiplicityUnsupported { .. } => ErrorFamily::Precondition,
            ComponentCountMismatch { .. } | AmbiguousTracking { .. } => ErrorFamily::Inconclusive,
            Stage { source, .. } => source.family(),
            _ => ErrorFamily::Numerical,
        }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn at_stage(self, stage: usize) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}
