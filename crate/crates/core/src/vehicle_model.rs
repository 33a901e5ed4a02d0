//! Kinematic four-wheel-steering bicycle model in the Earth-fixed frame.
//!
//! The rear axle center `R` is the reference point. Its velocity is aligned
//! with the rear wheel, the front axle center `F` moves along the front wheel,
//! and the speed of `R` is held at the commanded `V`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest admissible front steering angle magnitude [rad].
pub const DELTA_GUARD: f64 = 1.4;

/// `|cos delta_f|` below this is treated as the model singularity.
pub const COS_SINGULARITY: f64 = 1e-6;

/// Geometric constants of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams<T = f64> {
    wheelbase: T,
    cg_offset: T,
}

impl<T: Real> VehicleParams<T> {
    /// `wheelbase` is the axle distance `f`, `cg_offset` the distance `d`
    /// from the rear axle center to the center of gravity.
    pub fn new(wheelbase: T, cg_offset: T) -> Result<Self> {
        if !(wheelbase.is_finite() && wheelbase > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "wheelbase must be positive and finite, got {wheelbase}"
            )));
        }
        if !(cg_offset.is_finite() && cg_offset >= T::zero() && cg_offset <= wheelbase) {
            return Err(Error::InvalidParameter(format!(
                "cg offset must lie in [0, wheelbase], got {cg_offset}"
            )));
        }
        Ok(Self {
            wheelbase,
            cg_offset,
        })
    }

    pub fn wheelbase(&self) -> T {
        self.wheelbase
    }

    pub fn cg_offset(&self) -> T {
        self.cg_offset
    }
}

/// Pose of the rear axle center. `psi` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalState<T = f64> {
    pub x: T,
    pub y: T,
    pub psi: T,
}

impl<T: Real> GlobalState<T> {
    pub fn new(x: T, y: T, psi: T) -> Self {
        Self { x, y, psi }
    }
}

/// Front and rear steering angles [rad].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SteeringInput<T = f64> {
    pub delta_f: T,
    pub delta_r: T,
}

impl<T: Real> SteeringInput<T> {
    pub fn new(delta_f: T, delta_r: T) -> Self {
        Self { delta_f, delta_r }
    }

    /// Checks finiteness and the front steering guard.
    pub fn check_guard(&self) -> Result<()> {
        if !(self.delta_f.is_finite() && self.delta_r.is_finite()) {
            return Err(Error::Singularity(format!(
                "non-finite steering command ({}, {})",
                self.delta_f, self.delta_r
            )));
        }
        if self.delta_f.abs() > T::lit(DELTA_GUARD) {
            return Err(Error::SteeringGuard {
                delta_f: self.delta_f.as_f64(),
                limit: DELTA_GUARD,
            });
        }
        Ok(())
    }
}

/// Time derivative of a [`GlobalState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalDerivative<T = f64> {
    pub dx: T,
    pub dy: T,
    pub dpsi: T,
}

impl<T: Real> GlobalDerivative<T> {
    pub fn scaled(self, k: T) -> Self {
        Self {
            dx: self.dx * k,
            dy: self.dy * k,
            dpsi: self.dpsi * k,
        }
    }
}

pub(crate) fn check_speed<T: Real>(speed: T) -> Result<()> {
    if speed.is_finite() && speed > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "speed must be positive and finite, got {speed}"
        )))
    }
}

/// Yaw rate `V sin(delta_f - delta_r) / (f cos delta_f)`.
pub fn yaw_rate<T: Real>(
    input: SteeringInput<T>,
    params: &VehicleParams<T>,
    speed: T,
) -> Result<T> {
    let cos_f = input.delta_f.cos();
    if cos_f.abs() < T::lit(COS_SINGULARITY) {
        return Err(Error::Singularity(format!(
            "cos(delta_f) = {cos_f} at delta_f = {}",
            input.delta_f
        )));
    }
    Ok(speed * (input.delta_f - input.delta_r).sin() / (params.wheelbase * cos_f))
}

/// State derivatives of the rear axle center pose.
pub fn global_derivatives<T: Real>(
    state: &GlobalState<T>,
    input: SteeringInput<T>,
    params: &VehicleParams<T>,
    speed: T,
) -> Result<GlobalDerivative<T>> {
    check_speed(speed)?;
    input.check_guard()?;
    let heading = state.psi + input.delta_r;
    Ok(GlobalDerivative {
        dx: speed * heading.cos(),
        dy: speed * heading.sin(),
        dpsi: yaw_rate(input, params, speed)?,
    })
}

/// Residuals of the three kinematic constraints: front wheel no-slip, rear
/// wheel no-slip and rear speed. A derivative that satisfies the model gives
/// zeros.
pub fn constraint_residuals<T: Real>(
    state: &GlobalState<T>,
    deriv: &GlobalDerivative<T>,
    input: SteeringInput<T>,
    speed: T,
    params: &VehicleParams<T>,
) -> (T, T, T) {
    let f = params.wheelbase;
    let (sin_psi, cos_psi) = state.psi.sin_cos();
    let (sin_front, cos_front) = (state.psi + input.delta_f).sin_cos();
    let (sin_rear, cos_rear) = (state.psi + input.delta_r).sin_cos();

    // velocity of the front axle center
    let vfx = deriv.dx - f * deriv.dpsi * sin_psi;
    let vfy = deriv.dy + f * deriv.dpsi * cos_psi;

    let front = vfx * sin_front - vfy * cos_front;
    let rear = deriv.dx * sin_rear - deriv.dy * cos_rear;
    let along = deriv.dx * cos_rear + deriv.dy * sin_rear - speed;
    (front, rear, along)
}

/// Lateral acceleration of the center of gravity in the body frame.
pub fn lateral_acceleration<T: Real>(
    psi_dot: T,
    psi_ddot: T,
    delta_r: T,
    delta_r_dot: T,
    speed: T,
    params: &VehicleParams<T>,
) -> T {
    speed * (psi_dot + delta_r_dot) * delta_r.cos() + params.cg_offset * psi_ddot
}

/// Position of the center of gravity for a rear-axle pose.
pub fn cg_position<T: Real>(state: &GlobalState<T>, params: &VehicleParams<T>) -> (T, T) {
    let (s, c) = state.psi.sin_cos();
    (
        state.x + params.cg_offset * c,
        state.y + params.cg_offset * s,
    )
}
