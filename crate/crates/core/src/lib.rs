//! Scheduling DAG applications on solar-powered IoT networks to minimize the
//! worst time-average age of service.

pub mod config;
pub mod decision;
pub mod dynamics;
pub mod energy;
pub mod environment;
pub mod error;
pub mod experiment;
pub mod forecast;
pub mod milp;
pub mod schedulers;
pub mod simulator;
pub mod solvers;
pub mod substrate;
pub mod workload;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use environment::Environment;
pub use milp::{build_model, InstanceSnapshot, MilpModel};
pub use simulator::{run_episode, EpisodeResult};
pub use substrate::SubstrateNetwork;
pub use workload::DagRequest;
