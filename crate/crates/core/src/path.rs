//! Reference paths, closest-point projection and the path-relative form of
//! the vehicle dynamics.
//!
//! Sign conventions: a positive lateral error means the vehicle is left of
//! the path, positive curvature means the path turns left.

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Real};
use crate::vehicle_model::{check_speed, yaw_rate, GlobalState, SteeringInput, VehicleParams};

/// Continuity tolerance between consecutive piecewise segments.
pub const JOIN_TOLERANCE: f64 = 1e-9;

/// Points closer than this fraction of the radius to an arc center have no
/// unique projection.
const CENTER_TOLERANCE: f64 = 1e-9;

/// `1 - kappa * e` must stay above this margin.
const TUBE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnDirection {
    Left,
    Right,
}

/// Point on a reference path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint<T = f64> {
    pub s: T,
    pub x: T,
    pub y: T,
    /// Tangent heading in `(-pi, pi]`.
    pub psi_c: T,
    pub kappa: T,
}

impl<T: Real> PathPoint<T> {
    /// Signed lateral offset of `(x, y)` from this point, positive to the left.
    pub fn lateral_offset(&self, x: T, y: T) -> T {
        let (s, c) = self.psi_c.sin_cos();
        -(x - self.x) * s + (y - self.y) * c
    }

    /// Point displaced by `e` along the left normal.
    pub fn offset(&self, e: T) -> (T, T) {
        let (s, c) = self.psi_c.sin_cos();
        (self.x - e * s, self.y + e * c)
    }
}

/// Vehicle pose relative to the path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathFrameState<T = f64> {
    pub s: T,
    pub e: T,
    pub theta: T,
}

impl<T: Real> PathFrameState<T> {
    pub fn new(s: T, e: T, theta: T) -> Self {
        Self { s, e, theta }
    }
}

/// Time derivative of a [`PathFrameState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathFrameDerivative<T = f64> {
    pub ds: T,
    pub de: T,
    pub dtheta: T,
}

/// Unbounded straight line through `origin` with constant `heading`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraightLine<T = f64> {
    pub origin: (T, T),
    pub heading: T,
}

/// Circle traversed from `start_angle` (polar angle of the starting point
/// about `center`) in the given direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularArc<T = f64> {
    center: (T, T),
    radius: T,
    start_angle: T,
    turn: TurnDirection,
}

impl<T: Real> CircularArc<T> {
    pub fn new(center: (T, T), radius: T, start_angle: T, turn: TurnDirection) -> Result<Self> {
        if !(radius.is_finite() && radius > T::zero()) {
            return Err(Error::InvalidPath(format!(
                "arc radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            center,
            radius,
            start_angle,
            turn,
        })
    }

    /// Arc through `(x, y)` with tangent `heading` and signed `curvature`.
    pub fn from_start(x: T, y: T, heading: T, curvature: T) -> Result<Self> {
        if !(curvature.is_finite() && curvature != T::zero()) {
            return Err(Error::InvalidPath(format!(
                "arc curvature must be nonzero and finite, got {curvature}"
            )));
        }
        let radius = curvature.abs().recip();
        let (s, c) = heading.sin_cos();
        let half_pi = T::FRAC_PI_2();
        if curvature > T::zero() {
            Self::new(
                (x - radius * s, y + radius * c),
                radius,
                heading - half_pi,
                TurnDirection::Left,
            )
        } else {
            Self::new(
                (x + radius * s, y - radius * c),
                radius,
                heading + half_pi,
                TurnDirection::Right,
            )
        }
    }

    pub fn center(&self) -> (T, T) {
        self.center
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn turn(&self) -> TurnDirection {
        self.turn
    }

    pub fn curvature(&self) -> T {
        match self.turn {
            TurnDirection::Left => self.radius.recip(),
            TurnDirection::Right => -self.radius.recip(),
        }
    }

    pub fn circumference(&self) -> T {
        T::TAU() * self.radius
    }

    fn sign(&self) -> T {
        match self.turn {
            TurnDirection::Left => T::one(),
            TurnDirection::Right => -T::one(),
        }
    }

    fn pose_at(&self, s: T) -> PathPoint<T> {
        let sign = self.sign();
        let phi = self.start_angle + sign * s / self.radius;
        let (sp, cp) = phi.sin_cos();
        PathPoint {
            s,
            x: self.center.0 + self.radius * cp,
            y: self.center.1 + self.radius * sp,
            psi_c: wrap_angle(phi + sign * T::FRAC_PI_2()),
            kappa: self.curvature(),
        }
    }

    /// Arclength in `[0, circumference)` of the radial projection.
    fn local_arclength(&self, x: T, y: T) -> Result<T> {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        if dx.hypot(dy) <= self.radius * T::lit(CENTER_TOLERANCE) {
            return Err(Error::AmbiguousProjection {
                x: x.as_f64(),
                y: y.as_f64(),
            });
        }
        let phi = dy.atan2(dx);
        let sweep = self.sign() * (phi - self.start_angle);
        let tau = T::TAU();
        let mut wrapped = sweep - tau * (sweep / tau).floor();
        if wrapped >= tau {
            wrapped = wrapped - tau;
        }
        Ok(wrapped * self.radius)
    }
}

impl<T: Real> StraightLine<T> {
    pub fn new(origin: (T, T), heading: T) -> Self {
        Self { origin, heading }
    }

    fn pose_at(&self, s: T) -> PathPoint<T> {
        let (sh, ch) = self.heading.sin_cos();
        PathPoint {
            s,
            x: self.origin.0 + s * ch,
            y: self.origin.1 + s * sh,
            psi_c: wrap_angle(self.heading),
            kappa: T::zero(),
        }
    }

    fn local_arclength(&self, x: T, y: T) -> T {
        let (sh, ch) = self.heading.sin_cos();
        (x - self.origin.0) * ch + (y - self.origin.1) * sh
    }
}

/// Geometry of one bounded piece of a [`Piecewise`] path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive<T = f64> {
    Line(StraightLine<T>),
    Arc(CircularArc<T>),
}

impl<T: Real> Primitive<T> {
    fn pose_at(&self, s: T) -> PathPoint<T> {
        match self {
            Primitive::Line(l) => l.pose_at(s),
            Primitive::Arc(a) => a.pose_at(s),
        }
    }

    fn curvature(&self) -> T {
        match self {
            Primitive::Line(_) => T::zero(),
            Primitive::Arc(a) => a.curvature(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T = f64> {
    pub primitive: Primitive<T>,
    pub length: T,
}

/// Closest point candidate on a bounded segment, in local arclength.
struct Candidate<T> {
    s: T,
    distance: T,
}

impl<T: Real> Segment<T> {
    fn candidate(&self, x: T, y: T) -> Result<Candidate<T>> {
        let dist = |s: T| {
            let p = self.primitive.pose_at(s);
            (x - p.x).hypot(y - p.y)
        };
        match &self.primitive {
            Primitive::Line(l) => {
                let s = l.local_arclength(x, y).max(T::zero()).min(self.length);
                Ok(Candidate {
                    s,
                    distance: dist(s),
                })
            }
            Primitive::Arc(a) => {
                let s = a.local_arclength(x, y)?;
                if s <= self.length {
                    return Ok(Candidate {
                        s,
                        distance: dist(s),
                    });
                }
                let (d0, d1) = (dist(T::zero()), dist(self.length));
                if d1 < d0 {
                    Ok(Candidate {
                        s: self.length,
                        distance: d1,
                    })
                } else {
                    Ok(Candidate {
                        s: T::zero(),
                        distance: d0,
                    })
                }
            }
        }
    }
}

/// Ordered chain of line and arc segments joined in position and heading.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise<T = f64> {
    segments: Vec<Segment<T>>,
    starts: Vec<T>,
    total: T,
}

impl<T: Real> Piecewise<T> {
    pub fn new(segments: Vec<Segment<T>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidPath(
                "piecewise path needs at least one segment".into(),
            ));
        }
        let tol = T::lit(JOIN_TOLERANCE);
        let mut starts = Vec::with_capacity(segments.len());
        let mut total = T::zero();
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.length.is_finite() && seg.length > T::zero()) {
                return Err(Error::InvalidPath(format!(
                    "segment {i} has non-positive length {}",
                    seg.length
                )));
            }
            if i > 0 {
                let end = segments[i - 1].primitive.pose_at(segments[i - 1].length);
                let start = seg.primitive.pose_at(T::zero());
                let gap = (end.x - start.x).hypot(end.y - start.y);
                let turn = wrap_angle(end.psi_c - start.psi_c).abs();
                if gap > tol || turn > tol {
                    return Err(Error::InvalidPath(format!(
                        "segments {} and {i} do not join (gap {gap} m, heading jump {turn} rad)",
                        i - 1
                    )));
                }
            }
            starts.push(total);
            total = total + seg.length;
        }
        Ok(Self {
            segments,
            starts,
            total,
        })
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn length(&self) -> T {
        self.total
    }

    fn locate(&self, s: T) -> usize {
        // last segment whose start is <= s
        self.starts.partition_point(|&st| st <= s).saturating_sub(1)
    }
}

/// Incrementally builds a [`Piecewise`] path that is continuous by
/// construction.
#[derive(Debug, Clone)]
pub struct PiecewiseBuilder<T = f64> {
    x: T,
    y: T,
    heading: T,
    segments: Vec<Segment<T>>,
}

impl<T: Real> PiecewiseBuilder<T> {
    pub fn new(x: T, y: T, heading: T) -> Self {
        Self {
            x,
            y,
            heading,
            segments: Vec::new(),
        }
    }

    pub fn line(mut self, length: T) -> Self {
        let prim = Primitive::Line(StraightLine::new((self.x, self.y), self.heading));
        self.push(prim, length);
        self
    }

    /// Appends an arc of signed `curvature`; a zero curvature appends a line.
    pub fn arc(mut self, curvature: T, length: T) -> Result<Self> {
        if curvature == T::zero() {
            return Ok(self.line(length));
        }
        let arc = CircularArc::from_start(self.x, self.y, self.heading, curvature)?;
        self.push(Primitive::Arc(arc), length);
        Ok(self)
    }

    fn push(&mut self, primitive: Primitive<T>, length: T) {
        let end = primitive.pose_at(length);
        self.x = end.x;
        self.y = end.y;
        // keep the heading unwrapped so later arcs start exactly tangent
        self.heading = self.heading + primitive.curvature() * length;
        self.segments.push(Segment { primitive, length });
    }

    pub fn build(self) -> Result<Piecewise<T>> {
        Piecewise::new(self.segments)
    }
}

/// Path the vehicle is asked to follow.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePath<T = f64> {
    Straight(StraightLine<T>),
    Arc(CircularArc<T>),
    Piecewise(Piecewise<T>),
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T = f64> {
    pub point: PathPoint<T>,
    /// Signed lateral error, positive left of the path.
    pub lateral_error: T,
    /// The query point lies beyond an end of a bounded path.
    pub clamped: bool,
}

impl<T: Real> ReferencePath<T> {
    pub fn straight(x: T, y: T, heading: T) -> Self {
        ReferencePath::Straight(StraightLine::new((x, y), heading))
    }

    /// Full circle starting at `(x, y)` with tangent `heading`.
    pub fn arc_from_start(x: T, y: T, heading: T, curvature: T) -> Result<Self> {
        CircularArc::from_start(x, y, heading, curvature).map(ReferencePath::Arc)
    }

    /// Total arclength for bounded paths.
    pub fn length(&self) -> Option<T> {
        match self {
            ReferencePath::Piecewise(p) => Some(p.length()),
            _ => None,
        }
    }

    /// Arclength after which the path repeats itself.
    pub fn period(&self) -> Option<T> {
        match self {
            ReferencePath::Arc(a) => Some(a.circumference()),
            _ => None,
        }
    }

    /// Largest curvature magnitude along the path.
    pub fn max_curvature(&self) -> T {
        match self {
            ReferencePath::Straight(_) => T::zero(),
            ReferencePath::Arc(a) => a.radius.recip(),
            ReferencePath::Piecewise(p) => p
                .segments
                .iter()
                .map(|s| s.primitive.curvature().abs())
                .fold(T::zero(), T::max),
        }
    }

    pub fn pose_at(&self, s: T) -> Result<PathPoint<T>> {
        match self {
            ReferencePath::Straight(l) => Ok(l.pose_at(s)),
            ReferencePath::Arc(a) => Ok(a.pose_at(s)),
            ReferencePath::Piecewise(p) => {
                if !(s >= T::zero() && s <= p.total) {
                    return Err(Error::OutOfRange {
                        s: s.as_f64(),
                        length: p.total.as_f64(),
                    });
                }
                let i = p.locate(s);
                let start = p.starts[i];
                let local = (s - start).min(p.segments[i].length);
                let mut point = p.segments[i].primitive.pose_at(local);
                point.s = s;
                Ok(point)
            }
        }
    }

    /// Closest point of the path to `(x, y)`.
    pub fn project(&self, x: T, y: T) -> Result<Projection<T>> {
        let (point, clamped) = match self {
            ReferencePath::Straight(l) => (l.pose_at(l.local_arclength(x, y)), false),
            ReferencePath::Arc(a) => (a.pose_at(a.local_arclength(x, y)?), false),
            ReferencePath::Piecewise(p) => {
                // strict improvement only: ties go to the smaller arclength
                let mut best: Option<(usize, Candidate<T>)> = None;
                let mut ambiguous: Option<(usize, T)> = None;
                for (i, seg) in p.segments.iter().enumerate() {
                    match seg.candidate(x, y) {
                        Ok(c) => {
                            if best.as_ref().is_none_or(|(_, b)| c.distance < b.distance) {
                                best = Some((i, c));
                            }
                        }
                        Err(_) => {
                            if let Primitive::Arc(a) = seg.primitive {
                                if ambiguous.is_none_or(|(_, r)| a.radius < r) {
                                    ambiguous = Some((i, a.radius));
                                }
                            }
                        }
                    }
                }
                if let Some((_, r)) = ambiguous {
                    if best.as_ref().is_none_or(|(_, b)| r <= b.distance) {
                        return Err(Error::AmbiguousProjection {
                            x: x.as_f64(),
                            y: y.as_f64(),
                        });
                    }
                }
                let (i, c) = best.expect("piecewise path has segments");
                let seg = &p.segments[i];
                let mut point = seg.primitive.pose_at(c.s);
                point.s = p.starts[i] + c.s;
                let at_start = i == 0 && c.s == T::zero();
                let at_end = i + 1 == p.segments.len() && c.s == seg.length;
                let outside = {
                    let (sh, ch) = point.psi_c.sin_cos();
                    let along = (x - point.x) * ch + (y - point.y) * sh;
                    (at_start && along < T::zero()) || (at_end && along > T::zero())
                };
                (point, outside)
            }
        };
        Ok(Projection {
            lateral_error: point.lateral_offset(x, y),
            point,
            clamped,
        })
    }
}

/// Path-relative dynamics of the rear axle center.
pub fn path_frame_derivatives<T: Real>(
    pf: &PathFrameState<T>,
    kappa: T,
    input: SteeringInput<T>,
    params: &VehicleParams<T>,
    speed: T,
) -> Result<PathFrameDerivative<T>> {
    check_speed(speed)?;
    let tube = T::one() - kappa * pf.e;
    if tube <= T::lit(TUBE_MARGIN) {
        return Err(Error::Singularity(format!(
            "outside projection tube: 1 - kappa*e = {tube} (kappa = {kappa}, e = {})",
            pf.e
        )));
    }
    let heading = pf.theta + input.delta_r;
    let along = speed * heading.cos() / tube;
    Ok(PathFrameDerivative {
        ds: along,
        de: speed * heading.sin(),
        dtheta: -kappa * along + yaw_rate(input, params, speed)?,
    })
}

/// Converts a global pose into path coordinates; returns the curvature at
/// the closest point as well.
pub fn to_path_frame<T: Real>(
    state: &GlobalState<T>,
    path: &ReferencePath<T>,
) -> Result<(PathFrameState<T>, T)> {
    let proj = path.project(state.x, state.y)?;
    Ok((
        PathFrameState {
            s: proj.point.s,
            e: proj.lateral_error,
            theta: wrap_angle(state.psi - proj.point.psi_c),
        },
        proj.point.kappa,
    ))
}

/// Inverse of [`to_path_frame`]; the returned yaw is `psi_c + theta`.
pub fn from_path_frame<T: Real>(
    pf: &PathFrameState<T>,
    path: &ReferencePath<T>,
) -> Result<GlobalState<T>> {
    let p = path.pose_at(pf.s)?;
    let (x, y) = p.offset(pf.e);
    Ok(GlobalState {
        x,
        y,
        psi: p.psi_c + pf.theta,
    })
}
