//! Path tracking for four-wheel-steering vehicles.
//!
//! * [`vehicle_model`]: kinematic bicycle model with front and rear steering.
//! * [`path`]: reference paths, projection and path-relative dynamics.
//! * [`controller`]: feedforward plus proportional feedback steering law.
//! * [`stability`]: linearized closed loop, stability regions, pole placement.
//! * [`sim`]: fixed-step closed-loop simulation and metrics.
//!
//! All models are generic over the scalar type ([`Real`]); the aliases at the
//! crate root fix it to `f64`.

pub mod controller;
pub mod error;
pub mod path;
pub mod scalar;
pub mod sim;
pub mod stability;
pub mod vehicle_model;

pub use controller::{ControlGains, ControllerConfig};
pub use error::{Error, Result};
pub use path::{PathFrameState, PathPoint, PiecewiseBuilder, ReferencePath, TurnDirection};
pub use scalar::Real;
pub use sim::{Frame, Metrics, Scenario, SteeringLaw, Trace, TraceSample};
pub use stability::{CharPoly, PolePlacementSpec, Stability, StabilityGrid};
pub use vehicle_model::{GlobalState, SteeringInput, VehicleParams, DELTA_GUARD};

pub type VehicleParams64 = VehicleParams<f64>;
pub type GlobalState64 = GlobalState<f64>;
pub type SteeringInput64 = SteeringInput<f64>;
pub type ControlGains64 = ControlGains<f64>;
pub type ReferencePath64 = ReferencePath<f64>;
pub type Scenario64 = Scenario<f64>;
pub type Trace64 = Trace<f64>;
pub type Metrics64 = Metrics<f64>;
pub type StabilityGrid64 = StabilityGrid<f64>;

pub type VehicleParams32 = VehicleParams<f32>;
pub type ControlGains32 = ControlGains<f32>;
pub type Scenario32 = Scenario<f32>;
