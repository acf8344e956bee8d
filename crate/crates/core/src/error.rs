use thiserror::Error;

use crate::agents::AgentError;
use crate::inventory::InventoryError;
use crate::knowledge::KnowledgeError;
use crate::orchestrator::OrchestratorError;
use crate::policy::PolicyError;
use crate::risk_model::DomainError;
use crate::scenario::ScenarioError;

/// Crate-level error; each module keeps its own error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
