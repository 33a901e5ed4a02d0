//! Flat `key = value` scenario files.
//!
//! ```text
//! # curved road, low speed
//! path.kind = arc
//! path.curvature = 0.1
//! run.speed = 5
//! controller.a = -0.5
//! controller.lambda0 = -1
//! initial.e = -5
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once; unknown keys are rejected. Units are SI, angles in radians.

use std::fmt;

use fourws_core::path::PathPoint;
use fourws_core::stability::{crab_gains, place_double_pole};
use fourws_core::{
    ControlGains, ControllerConfig, Frame, GlobalState, PiecewiseBuilder, PolePlacementSpec,
    ReferencePath, Scenario, SteeringLaw, VehicleParams,
};

pub const KEYS: &[&str] = &[
    "vehicle.wheelbase",
    "vehicle.cg_offset",
    "path.kind",
    "path.x0",
    "path.y0",
    "path.heading",
    "path.curvature",
    "path.segments",
    "run.speed",
    "run.dt",
    "run.duration",
    "run.frame",
    "controller.a",
    "controller.lambda0",
    "controller.k1",
    "controller.k2",
    "controller.feedforward",
    "controller.design_curvature",
    "controller.delta_f",
    "initial.x",
    "initial.y",
    "initial.psi",
    "initial.s",
    "initial.e",
    "initial.theta",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, key `{}`: {}", self.key, self.message),
            None => write!(f, "key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Straight,
    Arc,
    Piecewise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentSpec {
    Line { length: f64 },
    Arc { curvature: f64, length: f64 },
}

/// Raw settings; `None` means "use the default".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioConfig {
    pub wheelbase: Option<f64>,
    pub cg_offset: Option<f64>,
    pub path_kind: Option<PathKind>,
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub heading: Option<f64>,
    pub curvature: Option<f64>,
    pub segments: Option<Vec<SegmentSpec>>,
    pub speed: Option<f64>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub frame: Option<Frame>,
    pub a: Option<f64>,
    pub lambda0: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub feedforward: Option<bool>,
    pub design_curvature: Option<f64>,
    pub delta_f: Option<f64>,
    pub initial_x: Option<f64>,
    pub initial_y: Option<f64>,
    pub initial_psi: Option<f64>,
    pub initial_s: Option<f64>,
    pub initial_e: Option<f64>,
    pub initial_theta: Option<f64>,
}

/// Values echoed into CSV metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunInfo {
    pub a: f64,
    pub speed: f64,
    pub wheelbase: f64,
    pub cg_offset: f64,
    pub kappa: f64,
    pub lambda0: Option<f64>,
    pub dt: f64,
    pub feedforward: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub scenario: Scenario,
    pub info: RunInfo,
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value
        .parse()
        .map_err(|_| ConfigError::new(key, format!("expected a number, got `{value}`")))?;
    if !x.is_finite() {
        return Err(ConfigError::new(
            key,
            format!("expected a finite number, got `{value}`"),
        ));
    }
    Ok(x)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(ConfigError::new(
            key,
            format!("expected true or false, got `{value}`"),
        )),
    }
}

/// Parses `line:20; arc:0.1:15.7`.
pub fn parse_segments(key: &str, value: &str) -> Result<Vec<SegmentSpec>, ConfigError> {
    let mut out = Vec::new();
    for item in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        let seg = match parts.as_slice() {
            ["line", len] => SegmentSpec::Line {
                length: parse_f64(key, len)?,
            },
            ["arc", k, len] => SegmentSpec::Arc {
                curvature: parse_f64(key, k)?,
                length: parse_f64(key, len)?,
            },
            _ => {
                return Err(ConfigError::new(
                    key,
                    format!(
                        "bad segment `{item}`, expected `line:LENGTH` or `arc:CURVATURE:LENGTH`"
                    ),
                ))
            }
        };
        out.push(seg);
    }
    if out.is_empty() {
        return Err(ConfigError::new(key, "at least one segment is required"));
    }
    Ok(out)
}

fn set_once<V>(slot: &mut Option<V>, key: &str, v: V) -> Result<(), ConfigError> {
    if slot.is_some() {
        return Err(ConfigError::new(key, "given more than once"));
    }
    *slot = Some(v);
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let with_line = |mut e: ConfigError| {
                e.line = Some(i + 1);
                e
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| with_line(ConfigError::new(line, "expected `key = value`")))?;
            cfg.set(key.trim(), value.trim()).map_err(with_line)?;
        }
        Ok(cfg)
    }

    /// Sets one key. Fails on unknown keys, bad values and repeats.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let num = || parse_f64(key, value);
        match key {
            "vehicle.wheelbase" => set_once(&mut self.wheelbase, key, num()?),
            "vehicle.cg_offset" => set_once(&mut self.cg_offset, key, num()?),
            "path.kind" => {
                let kind = match value {
                    "straight" => PathKind::Straight,
                    "arc" => PathKind::Arc,
                    "piecewise" => PathKind::Piecewise,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected straight, arc or piecewise, got `{value}`"),
                        ))
                    }
                };
                set_once(&mut self.path_kind, key, kind)
            }
            "path.x0" => set_once(&mut self.x0, key, num()?),
            "path.y0" => set_once(&mut self.y0, key, num()?),
            "path.heading" => set_once(&mut self.heading, key, num()?),
            "path.curvature" => set_once(&mut self.curvature, key, num()?),
            "path.segments" => set_once(&mut self.segments, key, parse_segments(key, value)?),
            "run.speed" => set_once(&mut self.speed, key, num()?),
            "run.dt" => set_once(&mut self.dt, key, num()?),
            "run.duration" => set_once(&mut self.duration, key, num()?),
            "run.frame" => {
                let frame = match value {
                    "global" => Frame::Global,
                    "path" => Frame::Path,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected global or path, got `{value}`"),
                        ))
                    }
                };
                set_once(&mut self.frame, key, frame)
            }
            "controller.a" => set_once(&mut self.a, key, num()?),
            "controller.lambda0" => set_once(&mut self.lambda0, key, num()?),
            "controller.k1" => set_once(&mut self.k1, key, num()?),
            "controller.k2" => set_once(&mut self.k2, key, num()?),
            "controller.feedforward" => {
                set_once(&mut self.feedforward, key, parse_bool(key, value)?)
            }
            "controller.design_curvature" => set_once(&mut self.design_curvature, key, num()?),
            "controller.delta_f" => set_once(&mut self.delta_f, key, num()?),
            "initial.x" => set_once(&mut self.initial_x, key, num()?),
            "initial.y" => set_once(&mut self.initial_y, key, num()?),
            "initial.psi" => set_once(&mut self.initial_psi, key, num()?),
            "initial.s" => set_once(&mut self.initial_s, key, num()?),
            "initial.e" => set_once(&mut self.initial_e, key, num()?),
            "initial.theta" => set_once(&mut self.initial_theta, key, num()?),
            _ => Err(ConfigError::new(key, "unknown key")),
        }
    }

    /// Like [`set`](Self::set) but replaces an existing value.
    pub fn set_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let mut fresh = ScenarioConfig::default();
        fresh.set(key, value)?;
        self.merge(fresh);
        Ok(())
    }

    fn merge(&mut self, o: ScenarioConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if o.$f.is_some() { self.$f = o.$f; } )* };
        }
        take!(
            wheelbase,
            cg_offset,
            path_kind,
            x0,
            y0,
            heading,
            curvature,
            segments,
            speed,
            dt,
            duration,
            frame,
            a,
            lambda0,
            k1,
            k2,
            feedforward,
            design_curvature,
            delta_f,
            initial_x,
            initial_y,
            initial_psi,
            initial_s,
            initial_e,
            initial_theta
        );
        // switching gain source drops the other one
        if o.lambda0.is_some() {
            self.k1 = None;
            self.k2 = None;
        }
        if o.k1.is_some() || o.k2.is_some() {
            self.lambda0 = None;
        }
        if o.initial_x.is_some() || o.initial_y.is_some() || o.initial_psi.is_some() {
            self.initial_s = None;
            self.initial_e = None;
            self.initial_theta = None;
        }
        if o.initial_s.is_some() || o.initial_e.is_some() || o.initial_theta.is_some() {
            self.initial_x = None;
            self.initial_y = None;
            self.initial_psi = None;
        }
    }

    fn path(&self) -> Result<ReferencePath, ConfigError> {
        let (x0, y0, h) = (
            self.x0.unwrap_or(0.0),
            self.y0.unwrap_or(0.0),
            self.heading.unwrap_or(0.0),
        );
        let kind = self.path_kind.unwrap_or(PathKind::Straight);
        if kind != PathKind::Arc && self.curvature.is_some() {
            return Err(ConfigError::new(
                "path.curvature",
                "only valid with path.kind = arc",
            ));
        }
        if kind != PathKind::Piecewise && self.segments.is_some() {
            return Err(ConfigError::new(
                "path.segments",
                "only valid with path.kind = piecewise",
            ));
        }
        match kind {
            PathKind::Straight => Ok(ReferencePath::straight(x0, y0, h)),
            PathKind::Arc => {
                let k = self
                    .curvature
                    .ok_or_else(|| ConfigError::new("path.curvature", "required for an arc"))?;
                ReferencePath::arc_from_start(x0, y0, h, k)
                    .map_err(|e| ConfigError::new("path.curvature", e.to_string()))
            }
            PathKind::Piecewise => {
                let segs = self.segments.as_ref().ok_or_else(|| {
                    ConfigError::new("path.segments", "required for a piecewise path")
                })?;
                let mut b = PiecewiseBuilder::new(x0, y0, h);
                for s in segs {
                    b = match *s {
                        SegmentSpec::Line { length } => b.line(length),
                        SegmentSpec::Arc { curvature, length } => b
                            .arc(curvature, length)
                            .map_err(|e| ConfigError::new("path.segments", e.to_string()))?,
                    };
                }
                b.build()
                    .map(ReferencePath::Piecewise)
                    .map_err(|e| ConfigError::new("path.segments", e.to_string()))
            }
        }
    }

    fn initial(&self, path: &ReferencePath) -> Result<GlobalState<f64>, ConfigError> {
        let relative =
            self.initial_s.is_some() || self.initial_e.is_some() || self.initial_theta.is_some();
        let absolute =
            self.initial_x.is_some() || self.initial_y.is_some() || self.initial_psi.is_some();
        if relative && absolute {
            return Err(ConfigError::new(
                "initial.e",
                "give either initial.{x, y, psi} or initial.{s, e, theta}",
            ));
        }
        if !relative {
            return Ok(GlobalState::new(
                self.initial_x.unwrap_or(0.0),
                self.initial_y.unwrap_or(0.0),
                self.initial_psi.unwrap_or(0.0),
            ));
        }
        let s = self.initial_s.unwrap_or(0.0);
        let p: PathPoint = path
            .pose_at(s)
            .map_err(|e| ConfigError::new("initial.s", e.to_string()))?;
        let (x, y) = p.offset(self.initial_e.unwrap_or(0.0));
        Ok(GlobalState::new(
            x,
            y,
            p.psi_c + self.initial_theta.unwrap_or(0.0),
        ))
    }

    /// Validates the settings and assembles the simulation scenario.
    pub fn resolve(&self) -> Result<ResolvedScenario, ConfigError> {
        let wheelbase = self.wheelbase.unwrap_or(2.7);
        let cg_offset = self.cg_offset.unwrap_or(1.35);
        let params = VehicleParams::new(wheelbase, cg_offset)
            .map_err(|e| ConfigError::new("vehicle.wheelbase", e.to_string()))?;
        let path = self.path()?;

        let speed = self.speed.unwrap_or(5.0);
        if speed <= 0.0 {
            return Err(ConfigError::new("run.speed", "must be positive"));
        }
        let dt = self.dt.unwrap_or(1e-3);
        if dt <= 0.0 {
            return Err(ConfigError::new("run.dt", "must be positive"));
        }
        let duration = self
            .duration
            .unwrap_or(if speed < 10.0 { 30.0 } else { 20.0 });
        if duration < dt {
            return Err(ConfigError::new(
                "run.duration",
                format!("must be at least one time step, got {duration}"),
            ));
        }

        let a = self.a.unwrap_or(0.0);
        let feedforward = self.feedforward.unwrap_or(true);
        let kappa = match self.design_curvature {
            Some(k) => k,
            None => path.pose_at(0.0).map(|p| p.kappa).unwrap_or(0.0),
        };
        let (steering, lambda0) = if let Some(delta_f) = self.delta_f {
            for (k, given) in [
                ("controller.lambda0", self.lambda0.is_some()),
                ("controller.k1", self.k1.is_some()),
                ("controller.k2", self.k2.is_some()),
            ] {
                if given {
                    return Err(ConfigError::new(
                        k,
                        "not used with a constant controller.delta_f",
                    ));
                }
            }
            (SteeringLaw::OpenLoop { delta_f, a }, None)
        } else {
            let (gains, lambda0) = self.gains(a, speed, &params, kappa)?;
            (
                SteeringLaw::Tracking(ControllerConfig::new(gains, feedforward)),
                lambda0,
            )
        };

        let initial = self.initial(&path)?;
        let scenario = Scenario {
            params,
            path,
            speed,
            steering,
            initial,
            dt,
            duration,
            frame: self.frame.unwrap_or(Frame::Global),
        };
        scenario
            .validate()
            .map_err(|e| ConfigError::new("run", e.to_string()))?;
        Ok(ResolvedScenario {
            scenario,
            info: RunInfo {
                a,
                speed,
                wheelbase,
                cg_offset,
                kappa,
                lambda0,
                dt,
                feedforward,
            },
        })
    }

    fn gains(
        &self,
        a: f64,
        speed: f64,
        params: &VehicleParams,
        kappa: f64,
    ) -> Result<(ControlGains, Option<f64>), ConfigError> {
        match (self.lambda0, self.k1, self.k2) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(ConfigError::new(
                "controller.lambda0",
                "give either controller.lambda0 or controller.k1/k2, not both",
            )),
            (None, Some(k1), Some(k2)) => Ok((ControlGains::new(k1, k2, a), None)),
            (None, Some(_), None) => Err(ConfigError::new(
                "controller.k2",
                "required together with controller.k1",
            )),
            (None, None, Some(_)) => Err(ConfigError::new(
                "controller.k1",
                "required together with controller.k2",
            )),
            (l, None, None) => {
                let l = l.unwrap_or(-1.0);
                let spec = PolePlacementSpec::new(l)
                    .map_err(|e| ConfigError::new("controller.lambda0", e.to_string()))?;
                let g = if a == 1.0 && kappa == 0.0 {
                    crab_gains(&spec, speed)
                } else {
                    place_double_pole(&spec, a, speed, params, kappa)
                };
                g.map(|g| (g, Some(l)))
                    .map_err(|e| ConfigError::new("controller.lambda0", e.to_string()))
            }
        }
    }

    /// Serializes the set keys back into the file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        let num = |x: f64| format!("{x:?}");
        macro_rules! nums {
            ($($f:ident => $k:literal),* $(,)?) => { $( if let Some(x) = self.$f { put($k, num(x)); } )* };
        }
        nums!(wheelbase => "vehicle.wheelbase", cg_offset => "vehicle.cg_offset");
        if let Some(k) = self.path_kind {
            let v = match k {
                PathKind::Straight => "straight",
                PathKind::Arc => "arc",
                PathKind::Piecewise => "piecewise",
            };
            put("path.kind", v.into());
        }
        nums!(x0 => "path.x0", y0 => "path.y0", heading => "path.heading", curvature => "path.curvature");
        if let Some(segs) = &self.segments {
            let items: Vec<String> = segs
                .iter()
                .map(|s| match *s {
                    SegmentSpec::Line { length } => format!("line:{length:?}"),
                    SegmentSpec::Arc { curvature, length } => {
                        format!("arc:{curvature:?}:{length:?}")
                    }
                })
                .collect();
            put("path.segments", items.join("; "));
        }
        nums!(speed => "run.speed", dt => "run.dt", duration => "run.duration");
        if let Some(f) = self.frame {
            put(
                "run.frame",
                if f == Frame::Global { "global" } else { "path" }.into(),
            );
        }
        nums!(a => "controller.a", lambda0 => "controller.lambda0", k1 => "controller.k1", k2 => "controller.k2");
        if let Some(ff) = self.feedforward {
            put("controller.feedforward", ff.to_string());
        }
        nums!(
            design_curvature => "controller.design_curvature",
            delta_f => "controller.delta_f",
            initial_x => "initial.x",
            initial_y => "initial.y",
            initial_psi => "initial.psi",
            initial_s => "initial.s",
            initial_e => "initial.e",
            initial_theta => "initial.theta",
        );
        out
    }
}
