//! Simulation core for a UAV-carried STAR surface serving reflect-side and
//! transmit-side users: geometry, fading channels, surface coefficients,
//! link budget, flight energy, fairness and the episodic environment.

pub mod channel;
pub mod energy;
pub mod environment;
pub mod fairness;
pub mod link_budget;
pub mod numerics;
pub mod scenario;
pub mod star_surface;

pub use environment::{
    ActionLayout, Deployment, EnvConfig, EnvError, Environment, HybridAction, StepInfo, StepOutcome,
};
pub use numerics::SimRng;
pub use star_surface::{CouplingSign, RisKind};
