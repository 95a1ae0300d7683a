//! Linear-pendulum walking with a Kalman-filtered LQR tracker and online
//! footstep adjustment.

pub mod controller;
pub mod error;
pub mod estimator;
pub mod io;
pub mod model;
pub mod planner;
pub mod sim;
pub mod step_adjust;

pub use error::{AdjustError, ControlError, EstimatorError, IoError, ModelError, PlanError, SimError};
pub use model::{natural_frequency, AxisState, RobotParams};
pub use planner::{FootstepPlan, StepParams};
pub use sim::{run_scenario, ScenarioConfig, SimulationResult};
