use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// DC-link voltage at or below zero where the model divides by it.
    #[error("DC-link singularity: v_dc = {v_dc} V")]
    Singularity { v_dc: f64 },

    #[error("simulation diverged at plant step {step}: v_dc = {v_dc} V")]
    SimulationDiverged { step: u64, v_dc: f64 },

    #[error("grid lost: |v_g| = {v_norm} V is below the floor {floor} V")]
    GridLost { v_norm: f64, floor: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("no contraction: eps_max = {eps_max} must be < 1")]
    NoContraction { eps_max: f64 },

    #[error("insufficient time-scale separation: C1*exp(-C2*m) = {value} must be < 1")]
    InsufficientTimescaleSeparation { value: f64 },
}
