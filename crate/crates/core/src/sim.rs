//! Fixed-step closed-loop simulation, trace recording and comfort/tracking
//! metrics.

use rayon::prelude::*;

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::path::{
    from_path_frame, path_frame_derivatives, to_path_frame, PathFrameState, ReferencePath,
};
use crate::scalar::{unwrap_near, wrap_angle, Real};
use crate::vehicle_model::{
    check_speed, global_derivatives, lateral_acceleration, GlobalState, SteeringInput,
    VehicleParams,
};

/// Default lateral band for the settle time [m].
pub const SETTLE_BAND: f64 = 0.05;

/// One classical fourth-order Runge-Kutta step of `x' = f(x)`.
pub fn rk4_step<T, const N: usize, F>(mut f: F, x: &[T; N], dt: T) -> Result<[T; N]>
where
    T: Real,
    F: FnMut(&[T; N]) -> Result<[T; N]>,
{
    let half = dt / T::lit(2.0);
    let axpy = |h: T, k: &[T; N]| {
        let mut y = *x;
        for i in 0..N {
            y[i] = y[i] + h * k[i];
        }
        y
    };
    let k1 = f(x)?;
    let k2 = f(&axpy(half, &k1))?;
    let k3 = f(&axpy(half, &k2))?;
    let k4 = f(&axpy(dt, &k3))?;
    let two = T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    let mut out = *x;
    for i in 0..N {
        out[i] = out[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Coordinates the ODE is integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// `(x_R, y_R, psi)`, projecting onto the path at every stage.
    Global,
    /// `(s_C, e_C, theta_C)` directly.
    Path,
}

/// Source of the steering command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteeringLaw<T = f64> {
    Tracking(ControllerConfig<T>),
    /// Fixed front angle with the rear at `a * delta_f`.
    OpenLoop {
        delta_f: T,
        a: T,
    },
}

impl<T: Real> SteeringLaw<T> {
    pub fn command(
        &self,
        pf: &PathFrameState<T>,
        kappa: T,
        params: &VehicleParams<T>,
    ) -> Result<SteeringInput<T>> {
        match self {
            SteeringLaw::Tracking(c) => c.command(pf, kappa, params),
            SteeringLaw::OpenLoop { delta_f, a } => {
                let u = SteeringInput::new(*delta_f, *a * *delta_f);
                u.check_guard()?;
                Ok(u)
            }
        }
    }

    pub fn coupling(&self) -> T {
        match self {
            SteeringLaw::Tracking(c) => c.gains.a,
            SteeringLaw::OpenLoop { a, .. } => *a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T = f64> {
    pub params: VehicleParams<T>,
    pub path: ReferencePath<T>,
    pub speed: T,
    pub steering: SteeringLaw<T>,
    pub initial: GlobalState<T>,
    pub dt: T,
    pub duration: T,
    pub frame: Frame,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        check_speed(self.speed)?;
        if !(self.dt.is_finite() && self.dt > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "duration {} must be at least one time step {}",
                self.duration, self.dt
            )));
        }
        let GlobalState { x, y, psi } = self.initial;
        if !(x.is_finite() && y.is_finite() && psi.is_finite()) {
            return Err(Error::InvalidParameter(
                "initial state must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Number of integration steps, `floor(duration / dt)`.
    pub fn steps(&self) -> usize {
        let ratio = (self.duration / self.dt).as_f64();
        (ratio * (1.0 + 1e-12)).floor() as usize
    }
}

/// Quantities obtained by differentiating the stored trace.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derived<T = f64> {
    pub psi_dot: T,
    pub psi_ddot: T,
    pub delta_r_dot: T,
    pub a_lat: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample<T = f64> {
    pub t: T,
    pub global: GlobalState<T>,
    pub pf: PathFrameState<T>,
    pub kappa: T,
    pub input: SteeringInput<T>,
    pub derived: Derived<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T = f64> {
    pub speed: T,
    pub params: VehicleParams<T>,
    pub dt: T,
    pub samples: Vec<TraceSample<T>>,
}

impl<T: Real> Trace<T> {
    pub fn last(&self) -> &TraceSample<T> {
        self.samples.last().expect("trace is never empty")
    }

    /// Recomputes the derived fields from the stored samples.
    pub fn fill_derived(&mut self) {
        let psi: Vec<T> = self.samples.iter().map(|s| s.global.psi).collect();
        let delta_r: Vec<T> = self.samples.iter().map(|s| s.input.delta_r).collect();
        let psi_dot = first_derivative(&psi, self.dt);
        let psi_ddot = second_derivative(&psi, self.dt);
        let delta_r_dot = first_derivative(&delta_r, self.dt);
        for (i, s) in self.samples.iter_mut().enumerate() {
            s.derived = Derived {
                psi_dot: psi_dot[i],
                psi_ddot: psi_ddot[i],
                delta_r_dot: delta_r_dot[i],
                a_lat: lateral_acceleration(
                    psi_dot[i],
                    psi_ddot[i],
                    s.input.delta_r,
                    delta_r_dot[i],
                    self.speed,
                    &self.params,
                ),
            };
        }
    }
}

/// Second-order finite-difference first derivative of uniformly sampled data.
pub fn first_derivative<T: Real>(y: &[T], h: T) -> Vec<T> {
    let n = y.len();
    let two = T::lit(2.0);
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        2 => {
            let d = (y[1] - y[0]) / h;
            vec![d, d]
        }
        _ => {
            let mut d = Vec::with_capacity(n);
            d.push((-T::lit(3.0) * y[0] + T::lit(4.0) * y[1] - y[2]) / (two * h));
            for i in 1..n - 1 {
                d.push((y[i + 1] - y[i - 1]) / (two * h));
            }
            d.push((T::lit(3.0) * y[n - 1] - T::lit(4.0) * y[n - 2] + y[n - 3]) / (two * h));
            d
        }
    }
}

/// Second-order finite-difference second derivative of uniformly sampled data.
pub fn second_derivative<T: Real>(y: &[T], h: T) -> Vec<T> {
    let n = y.len();
    let h2 = h * h;
    let two = T::lit(2.0);
    match n {
        0 => Vec::new(),
        1 | 2 => vec![T::zero(); n],
        3 => vec![(y[0] - two * y[1] + y[2]) / h2; 3],
        _ => {
            let (c2, c5, c4) = (two, T::lit(5.0), T::lit(4.0));
            let mut d = Vec::with_capacity(n);
            d.push((c2 * y[0] - c5 * y[1] + c4 * y[2] - y[3]) / h2);
            for i in 1..n - 1 {
                d.push((y[i + 1] - two * y[i] + y[i - 1]) / h2);
            }
            d.push((c2 * y[n - 1] - c5 * y[n - 2] + c4 * y[n - 3] - y[n - 4]) / h2);
            d
        }
    }
}

/// Everything needed to record one sample, evaluated at a state.
struct Snapshot<T> {
    global: GlobalState<T>,
    pf: PathFrameState<T>,
    kappa: T,
    input: SteeringInput<T>,
}

struct Simulator<'a, T> {
    sc: &'a Scenario<T>,
}

impl<'a, T: Real> Simulator<'a, T> {
    fn global_rhs(&self, x: &[T; 3]) -> Result<[T; 3]> {
        let state = GlobalState::new(x[0], x[1], x[2]);
        let (pf, kappa) = to_path_frame(&state, &self.sc.path)?;
        let u = self.sc.steering.command(&pf, kappa, &self.sc.params)?;
        let d = global_derivatives(&state, u, &self.sc.params, self.sc.speed)?;
        Ok([d.dx, d.dy, d.dpsi])
    }

    fn path_rhs(&self, x: &[T; 3]) -> Result<[T; 3]> {
        let pf = PathFrameState::new(x[0], x[1], x[2]);
        let kappa = self.sc.path.pose_at(pf.s)?.kappa;
        let u = self.sc.steering.command(&pf, kappa, &self.sc.params)?;
        let d = path_frame_derivatives(&pf, kappa, u, &self.sc.params, self.sc.speed)?;
        Ok([d.ds, d.de, d.dtheta])
    }

    fn rhs(&self, x: &[T; 3]) -> Result<[T; 3]> {
        match self.sc.frame {
            Frame::Global => self.global_rhs(x),
            Frame::Path => self.path_rhs(x),
        }
    }

    fn initial_state(&self) -> Result<[T; 3]> {
        let g = self.sc.initial;
        match self.sc.frame {
            Frame::Global => Ok([g.x, g.y, g.psi]),
            Frame::Path => {
                let (pf, _) = to_path_frame(&g, &self.sc.path)?;
                Ok([pf.s, pf.e, pf.theta])
            }
        }
    }

    fn snapshot(&self, x: &[T; 3], prev: Option<&Snapshot<T>>) -> Result<Snapshot<T>> {
        let (global, mut pf, kappa) = match self.sc.frame {
            Frame::Global => {
                let global = GlobalState::new(x[0], x[1], x[2]);
                let (pf, kappa) = to_path_frame(&global, &self.sc.path)?;
                (global, pf, kappa)
            }
            Frame::Path => {
                let pf = PathFrameState::new(x[0], x[1], wrap_angle(x[2]));
                let kappa = self.sc.path.pose_at(pf.s)?.kappa;
                let mut global = from_path_frame(&pf, &self.sc.path)?;
                global.psi = match prev {
                    Some(p) => unwrap_near(global.psi, p.global.psi),
                    None => unwrap_near(global.psi, self.sc.initial.psi),
                };
                (global, pf, kappa)
            }
        };
        // keep arclength continuous on closed paths
        if let (Some(period), Some(p)) = (self.sc.path.period(), prev) {
            let laps = ((p.pf.s - pf.s) / period).round();
            pf.s = pf.s + laps * period;
        }
        let input = self.sc.steering.command(&pf, kappa, &self.sc.params)?;
        Ok(Snapshot {
            global,
            pf,
            kappa,
            input,
        })
    }
}

/// Simulates the closed loop and returns the full trace with derived
/// quantities filled in.
pub fn run<T: Real>(scenario: &Scenario<T>) -> Result<Trace<T>> {
    scenario.validate()?;
    let sim = Simulator { sc: scenario };
    let steps = scenario.steps();
    let dt = scenario.dt;
    let abort = |i: usize| {
        let t = (T::lit(i as f64) * dt).as_f64();
        move |e: Error| Error::Aborted {
            t,
            source: Box::new(e),
        }
    };

    let mut x = sim.initial_state().map_err(abort(0))?;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut snap = sim.snapshot(&x, None).map_err(abort(0))?;
    for i in 0..=steps {
        if i > 0 {
            x = rk4_step(|s| sim.rhs(s), &x, dt).map_err(abort(i - 1))?;
            snap = sim.snapshot(&x, Some(&snap)).map_err(abort(i))?;
        }
        samples.push(TraceSample {
            t: T::lit(i as f64) * dt,
            global: snap.global,
            pf: snap.pf,
            kappa: snap.kappa,
            input: snap.input,
            derived: Derived::default(),
        });
    }
    let mut trace = Trace {
        speed: scenario.speed,
        params: scenario.params,
        dt,
        samples,
    };
    trace.fill_derived();
    Ok(trace)
}

/// Runs independent scenarios in parallel; results keep the input order.
pub fn run_batch<T: Real>(scenarios: &[Scenario<T>]) -> Vec<Result<Trace<T>>> {
    scenarios.par_iter().map(run).collect()
}

/// Scalar summaries of a trace. Undefined quantities are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T = f64> {
    pub max_abs_lat_accel: T,
    pub max_abs_lat_error: T,
    /// Mean `|e_C|` over the final 10% of the trace.
    pub steady_state_error: T,
    /// First time after which `|e_C|` stays inside the band.
    pub settle_time: Option<T>,
    /// `V / |psi_dot|` averaged over the final 10%, when the yaw rate is
    /// steady there.
    pub turning_radius: Option<T>,
}

pub fn compute_metrics<T: Real>(trace: &Trace<T>, band: T) -> Metrics<T> {
    let samples = &trace.samples;
    let n = samples.len();
    let tail = &samples[n - (n / 10).max(1)..];
    let tail_len = T::lit(tail.len() as f64);

    let max_abs = |f: &dyn Fn(&TraceSample<T>) -> T| {
        samples.iter().map(|s| f(s).abs()).fold(T::zero(), T::max)
    };
    let max_abs_lat_accel = max_abs(&|s| s.derived.a_lat);
    let max_abs_lat_error = max_abs(&|s| s.pf.e);
    let steady_state_error = tail.iter().map(|s| s.pf.e.abs()).sum::<T>() / tail_len;

    let settle_time = match samples.iter().rposition(|s| !(s.pf.e.abs() < band)) {
        None => Some(samples[0].t),
        Some(i) if i + 1 < n => Some(samples[i + 1].t),
        Some(_) => None,
    };

    let rates: Vec<T> = tail.iter().map(|s| s.derived.psi_dot).collect();
    let mean_abs = rates.iter().map(|r| r.abs()).sum::<T>() / tail_len;
    let (lo, hi) = rates
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    let one_sign = lo > T::zero() || hi < T::zero();
    let steady = one_sign && mean_abs > T::lit(1e-9) && (hi - lo) < T::lit(0.01) * mean_abs;
    let turning_radius =
        steady.then(|| rates.iter().map(|r| trace.speed / r.abs()).sum::<T>() / tail_len);

    Metrics {
        max_abs_lat_accel,
        max_abs_lat_error,
        steady_state_error,
        settle_time,
        turning_radius,
    }
}
