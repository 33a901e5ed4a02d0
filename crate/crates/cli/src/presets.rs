//! Scenarios behind the published figures.
//!
//! Vehicle: wheelbase 2.7 m, CG 1.35 m ahead of the rear axle. Straight
//! roads start at `(0, 2)`, curved roads at `e = -5` (5 m/s, curvature 0.1)
//! or `e = -10` (20 m/s, curvature 0.01), all with zero heading error.

use crate::config::{PathKind, ScenarioConfig};

pub const NAMES: [&str; 8] = [
    "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9",
];
/// Rear-steering ratios simulated in the time-domain figures.
pub const COUPLINGS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
pub const CHART_COUPLINGS: [f64; 7] = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
/// Curvatures charted next to the straight road.
pub const CHART_CURVATURES: [f64; 3] = [0.0, 0.01, 0.1];
pub const GAIN_LIMIT: f64 = 1.0;
pub const RESOLUTION: usize = 401;

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPanel {
    pub label: String,
    pub a: f64,
    pub speed: f64,
    pub kappa: f64,
    /// Double roots whose placed gains are marked.
    pub lambda0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPreset {
    pub panels: Vec<ChartPanel>,
    pub k1_range: (f64, f64),
    pub k2_range: (f64, f64),
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPanel {
    pub label: String,
    pub base: ScenarioConfig,
    pub a: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub feedforward: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Chart(ChartPreset),
    Sweep(Vec<SweepPanel>),
    /// Labelled scenarios, one trace each.
    Simulate(Vec<(String, ScenarioConfig)>),
}

fn tag(x: f64) -> String {
    format!("{x}")
}

/// Straight road from the origin, vehicle displaced 2 m to the left.
pub fn straight_road(speed: f64) -> ScenarioConfig {
    ScenarioConfig {
        path_kind: Some(PathKind::Straight),
        speed: Some(speed),
        duration: Some(if speed < 10.0 { 30.0 } else { 20.0 }),
        feedforward: Some(false),
        initial_x: Some(0.0),
        initial_y: Some(2.0),
        initial_psi: Some(0.0),
        ..Default::default()
    }
}

/// Left-turning circle entered from the origin, vehicle displaced to the
/// outside of the turn.
pub fn curved_road(speed: f64) -> ScenarioConfig {
    let (kappa, e0) = if speed < 10.0 {
        (0.1, -5.0)
    } else {
        (0.01, -10.0)
    };
    ScenarioConfig {
        path_kind: Some(PathKind::Arc),
        curvature: Some(kappa),
        speed: Some(speed),
        duration: Some(if speed < 10.0 { 30.0 } else { 20.0 }),
        feedforward: Some(true),
        initial_x: Some(0.0),
        initial_y: Some(e0),
        initial_psi: Some(0.0),
        ..Default::default()
    }
}

fn lambda_set(speed: f64) -> Vec<f64> {
    if speed < 10.0 {
        vec![-1.0, -2.0]
    } else {
        vec![-1.0, -2.0, -3.0]
    }
}

fn chart(panels: Vec<ChartPanel>) -> Preset {
    Preset::Chart(ChartPreset {
        panels,
        k1_range: (-GAIN_LIMIT, GAIN_LIMIT),
        k2_range: (-GAIN_LIMIT, GAIN_LIMIT),
        resolution: RESOLUTION,
    })
}

fn time_domain(name: &str, base: ScenarioConfig) -> Preset {
    Preset::Simulate(
        COUPLINGS
            .iter()
            .map(|&a| {
                let cfg = ScenarioConfig {
                    a: Some(a),
                    lambda0: Some(-1.0),
                    ..base.clone()
                };
                (format!("{name}_a{}", tag(a)), cfg)
            })
            .collect(),
    )
}

pub fn preset(name: &str) -> Option<Preset> {
    let p = match name {
        "fig2" => {
            let panel = |label: &str, speed: f64, a: f64| ChartPanel {
                label: format!("fig2{label}_a{}", tag(a)),
                a,
                speed,
                kappa: 0.0,
                lambda0: if a == 1.0 { vec![] } else { vec![-1.0] },
            };
            let mut panels: Vec<ChartPanel> = [-1.5, -1.0, -0.5, 0.0]
                .iter()
                .map(|&a| panel("a", 5.0, a))
                .collect();
            panels.extend([-1.5, -1.0, -0.5].iter().map(|&a| panel("b", 20.0, a)));
            panels.extend([0.0, 0.5, 1.0, 1.5].iter().map(|&a| panel("c", 20.0, a)));
            chart(panels)
        }
        "fig3" | "fig4" => {
            let speed = if name == "fig3" { 5.0 } else { 20.0 };
            let panels = CHART_COUPLINGS
                .iter()
                .flat_map(|&a| {
                    CHART_CURVATURES.iter().map(move |&kappa| ChartPanel {
                        label: format!("{name}_a{}_k{}", tag(a), tag(kappa)),
                        a,
                        speed,
                        kappa,
                        lambda0: if a == 1.0 && kappa == 0.0 {
                            vec![]
                        } else {
                            lambda_set(speed)
                        },
                    })
                })
                .collect();
            chart(panels)
        }
        "fig5" => {
            let panel = |label: &str, base: ScenarioConfig, speed: f64| SweepPanel {
                label: label.to_string(),
                feedforward: vec![base.feedforward.unwrap_or(true)],
                base,
                a: COUPLINGS.to_vec(),
                lambda0: lambda_set(speed),
            };
            Preset::Sweep(vec![
                panel("fig5a", straight_road(5.0), 5.0),
                panel("fig5b", curved_road(5.0), 5.0),
                panel("fig5c", straight_road(20.0), 20.0),
                panel("fig5d", curved_road(20.0), 20.0),
            ])
        }
        "fig6" => time_domain(name, straight_road(5.0)),
        "fig7" => time_domain(name, curved_road(5.0)),
        "fig8" => time_domain(name, straight_road(20.0)),
        "fig9" => time_domain(name, curved_road(20.0)),
        _ => return None,
    };
    Some(p)
}
