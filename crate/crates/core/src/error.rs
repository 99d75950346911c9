use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("population of {0} agents is too small to interact (need at least 2)")]
    PopulationTooSmall(u64),
    #[error("stubbornness {0} is outside [0, 1]")]
    InvalidStubbornness(f64),
    #[error("configurations have different population sizes ({0} vs {1})")]
    PopulationMismatch(u64, u64),
    #[error("configuration {0} has no productive interaction")]
    NotProductive(crate::Configuration),
    #[error("closed-form drifts assume the self-pair scheduler (n^2 denominators)")]
    DistinctPairScheduler,
    #[error("gap drift undefined at {config}: {reason}")]
    GapPole {
        config: crate::Configuration,
        reason: &'static str,
    },
    #[error("population size {n} exceeds the exact solver cap {cap}")]
    AboveSolverCap { n: u64, cap: u64 },
    #[error("coupling precondition violated: {0}")]
    CouplingPrecondition(&'static str),
    #[error("max_interactions must be at least 1")]
    ZeroBudget,
    #[error("agent label {label} out of range for population of {n}")]
    LabelOutOfRange { label: usize, n: usize },
    #[error("r = {0} is outside (0, 1]")]
    InvalidUniform(f64),
}
