use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Budget,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial is not monic")]
    NonMonic,
    #[error("polynomial degree must be at least {min}, got {got}")]
    DegreeTooSmall { min: usize, got: usize },
    #[error("constant term of the polynomial is zero")]
    ZeroConstantTerm,
    #[error("polynomial has the rational root {0} and is reducible")]
    RationalRootFound(i64),
    #[error("root finder did not converge after {iterations} iterations")]
    RootFindingDiverged { iterations: usize },
    #[error("no real root of strictly maximal modulus")]
    NoDominantRealRoot,
    #[error("elements belong to different number-field contexts")]
    ContextMismatch,
    #[error("operation requires a Pisot number")]
    NotPv,
    #[error("element is not an algebraic integer in Z[lambda]")]
    NotIntegral,
    #[error("operation requires |c_0| = 1")]
    NotUnitConstant,
    #[error("inadmissible window: {0}")]
    InadmissibleWindow(String),
    #[error("enumeration box has {cells} cells, budget is {budget}")]
    WindowTooLarge { cells: f64, budget: f64 },
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("gap alphabet changed when the probe range was doubled ({before} -> {after} letters)")]
    AlphabetUnstable { before: usize, after: usize },
    #[error("inflated tiles decompose differently at different occurrences: {0}")]
    OccurrenceInconsistent(String),
    #[error("tile type {tile} has only {found} usable occurrences, need {needed}")]
    TooFewOccurrences { tile: usize, found: usize, needed: usize },
    #[error("point count {count} exceeds budget {budget}")]
    Overflow { count: usize, budget: usize },
    #[error("mask coefficients sum to {sum}, expected |lambda| = {expected}")]
    SumRuleViolated { sum: String, expected: f64 },
    #[error("mask coefficient {0} is zero")]
    ZeroCoefficient(usize),
    #[error("translations are not strictly increasing at index {0}")]
    NonIncreasingTranslations(usize),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("torus quadrature did not converge: last change {change:e} at {points} points")]
    QuadratureNonconvergent { change: f64, points: usize },
    #[error("every sample of ln|A| was clipped")]
    AllSamplesClipped,
    #[error("mask vanishes at lambda^{j} * alpha")]
    ZeroHit { j: i64 },
    #[error("orbit state {index} is a zero of the trigonometric polynomial")]
    ZeroOnOrbit { index: usize },
    #[error("orbit did not close within {0} steps")]
    OrbitBudgetExceeded(usize),
    #[error("breakpoint grid [{lo}, {hi}] does not cover the sample range [{min}, {max}]")]
    GridDoesNotCover { lo: f64, hi: f64, min: f64, max: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::RootFindingDiverged { .. }
            | Error::QuadratureNonconvergent { .. }
            | Error::AllSamplesClipped
            | Error::ZeroHit { .. }
            | Error::ZeroOnOrbit { .. } => ErrorClass::Numerical,
            Error::WindowTooLarge { .. } | Error::Overflow { .. } | Error::OrbitBudgetExceeded(_) => {
                ErrorClass::Budget
            }
            _ => ErrorClass::Validation,
        }
    }

    /// Stable snake_case identifier for machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonMonic => "non_monic",
            Error::DegreeTooSmall { .. } => "degree_too_small",
            Error::ZeroConstantTerm => "zero_constant_term",
            Error::RationalRootFound(_) => "rational_root_found",
            Error::RootFindingDiverged { .. } => "root_finding_diverged",
            Error::NoDominantRealRoot => "no_dominant_real_root",
            Error::ContextMismatch => "context_mismatch",
            Error::NotPv => "not_pv",
            Error::NotIntegral => "not_integral",
            Error::NotUnitConstant => "not_unit_constant",
            Error::InadmissibleWindow(_) => "inadmissible_window",
            Error::WindowTooLarge { .. } => "window_too_large",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::AlphabetUnstable { .. } => "alphabet_unstable",
            Error::OccurrenceInconsistent(_) => "occurrence_inconsistent",
            Error::TooFewOccurrences { .. } => "too_few_occurrences",
            Error::Overflow { .. } => "overflow",
            Error::SumRuleViolated { .. } => "sum_rule_violated",
            Error::ZeroCoefficient(_) => "zero_coefficient",
            Error::NonIncreasingTranslations(_) => "non_increasing_translations",
            Error::ZeroPolynomial => "zero_polynomial",
            Error::QuadratureNonconvergent { .. } => "quadrature_nonconvergent",
            Error::AllSamplesClipped => "all_samples_clipped",
            Error::ZeroHit { .. } => "zero_hit",
            Error::ZeroOnOrbit { .. } => "zero_on_orbit",
            Error::OrbitBudgetExceeded(_) => "orbit_budget_exceeded",
            Error::GridDoesNotCover { .. } => "grid_does_not_cover",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}
