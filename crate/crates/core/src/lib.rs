//! Memory-augmented actor-critic lab: grid simulator, value-iteration
//! planner, differentiable memory, agent, and training harness.

pub mod agent;
pub mod config;
pub mod error;
pub mod gridsim;
pub mod layers;
pub mod memory;
pub mod metrics;
pub mod report;
pub mod trainer;
pub mod vin;
