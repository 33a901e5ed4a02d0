//! Steering law: curvature feedforward plus proportional feedback on the
//! lateral and heading errors, with the rear axle steered in proportion `a`
//! to the front feedback.

use crate::error::Result;
use crate::path::PathFrameState;
use crate::scalar::Real;
use crate::vehicle_model::{SteeringInput, VehicleParams};

/// Front feedback gains `(k1, k2)` and rear coupling `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains<T = f64> {
    pub k1: T,
    pub k2: T,
    pub a: T,
}

impl<T: Real> ControlGains<T> {
    pub fn new(k1: T, k2: T, a: T) -> Self {
        Self { k1, k2, a }
    }

    /// Rear lateral-error gain.
    pub fn k3(&self) -> T {
        self.a * self.k1
    }

    /// Rear heading-error gain.
    pub fn k4(&self) -> T {
        self.a * self.k2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig<T = f64> {
    pub gains: ControlGains<T>,
    pub feedforward: bool,
}

impl<T: Real> ControllerConfig<T> {
    pub fn new(gains: ControlGains<T>, feedforward: bool) -> Self {
        Self { gains, feedforward }
    }

    /// Steering command for the given path-relative state.
    ///
    /// Fails when the front angle leaves the admissible range instead of
    /// clamping it.
    pub fn command(
        &self,
        pf: &PathFrameState<T>,
        kappa: T,
        params: &VehicleParams<T>,
    ) -> Result<SteeringInput<T>> {
        command(pf, kappa, self, params)
    }
}

/// Steady-state steering that holds the rear axle on a path of curvature
/// `kappa`.
pub fn feedforward<T: Real>(kappa: T, params: &VehicleParams<T>) -> SteeringInput<T> {
    SteeringInput {
        delta_f: (kappa * params.wheelbase()).atan(),
        delta_r: T::zero(),
    }
}

pub fn feedback<T: Real>(e: T, theta: T, gains: &ControlGains<T>) -> SteeringInput<T> {
    let front = -gains.k1 * e - gains.k2 * theta;
    SteeringInput {
        delta_f: front,
        delta_r: gains.a * front,
    }
}

pub fn command<T: Real>(
    pf: &PathFrameState<T>,
    kappa: T,
    config: &ControllerConfig<T>,
    params: &VehicleParams<T>,
) -> Result<SteeringInput<T>> {
    let fb = feedback(pf.e, pf.theta, &config.gains);
    let ff = if config.feedforward {
        feedforward(kappa, params)
    } else {
        SteeringInput::default()
    };
    let u = SteeringInput {
        delta_f: ff.delta_f + fb.delta_f,
        delta_r: ff.delta_r + fb.delta_r,
    };
    u.check_guard()?;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::path::path_frame_derivatives;
    use approx::assert_abs_diff_eq;

    fn params() -> VehicleParams {
        VehicleParams::new(2.7, 1.35).unwrap()
    }

    #[test]
    fn feedforward_values() {
        let p = params();
        assert_eq!(feedforward(0.0, &p), SteeringInput::new(0.0, 0.0));
        assert_abs_diff_eq!(feedforward(0.1, &p).delta_f, 0.263712, epsilon = 1e-6);
        assert_abs_diff_eq!(feedforward(0.01, &p).delta_f, 0.026993, epsilon = 1e-6);
        assert_eq!(feedforward(0.1, &p).delta_r, 0.0);
    }

    #[test]
    fn feedback_values() {
        let g = ControlGains::new(0.00675, 0.27, 0.5);
        assert_eq!(feedback(0.0, 0.0, &g), SteeringInput::new(0.0, 0.0));
        let u = feedback(2.0, 0.0, &g);
        assert_abs_diff_eq!(u.delta_f, -0.0135, epsilon = 1e-15);
        assert_abs_diff_eq!(u.delta_r, -0.00675, epsilon = 1e-15);
        let u = feedback(0.0, 0.1, &ControlGains::new(0.00675, 0.27, -1.0));
        assert_abs_diff_eq!(u.delta_f, -0.027, epsilon = 1e-15);
        assert_abs_diff_eq!(u.delta_r, 0.027, epsilon = 1e-15);
        assert_abs_diff_eq!(g.k3(), 0.003375, epsilon = 1e-18);
        assert_abs_diff_eq!(g.k4(), 0.135, epsilon = 1e-16);
    }

    #[test]
    fn command_sums_parts() {
        let p = params();
        let on = ControllerConfig::new(ControlGains::new(0.1, 0.2, 0.5), true);
        let off = ControllerConfig {
            feedforward: false,
            ..on
        };
        let eq = PathFrameState::default();
        assert_abs_diff_eq!(
            on.command(&eq, 0.1, &p).unwrap().delta_f,
            0.263712,
            epsilon = 1e-6
        );
        assert_eq!(
            off.command(&eq, 0.1, &p).unwrap(),
            SteeringInput::new(0.0, 0.0)
        );

        let pf = PathFrameState::new(0.0, -5.0, 0.0);
        let u = on.command(&pf, 0.1, &p).unwrap();
        assert_abs_diff_eq!(u.delta_f, 0.27_f64.atan() + 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(u.delta_r, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn command_guard_aborts() {
        let p = params();
        let cfg = ControllerConfig::new(ControlGains::new(0.4, -3.0, 1.0), true);
        let err = cfg
            .command(&PathFrameState::new(0.0, -5.0, 0.0), 0.1, &p)
            .unwrap_err();
        assert!(matches!(err, Error::SteeringGuard { .. }));
    }

    #[test]
    fn equilibrium_tracks_exactly() {
        let p = params();
        for &kappa in &[0.0, 0.01, 0.1, -0.1] {
            let cfg = ControllerConfig::new(ControlGains::new(0.2, 0.7, -0.5), true);
            let u = cfg.command(&PathFrameState::default(), kappa, &p).unwrap();
            let d = path_frame_derivatives(&PathFrameState::default(), kappa, u, &p, 5.0).unwrap();
            assert!(d.ds > 0.0);
            assert_eq!(d.de, 0.0);
            assert_abs_diff_eq!(d.dtheta, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_coupling_is_front_steering() {
        let g = ControlGains::new(0.3, 0.9, 0.0);
        for &(e, th) in &[(1.0, 0.2), (-4.0, 0.0), (0.0, -0.3)] {
            assert_eq!(feedback(e, th, &g).delta_r, 0.0);
        }
    }
}
