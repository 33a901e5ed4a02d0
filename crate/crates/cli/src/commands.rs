//! Subcommand bodies. Each returns the files it would write; nothing touches
//! the disk until [`Output::write`] runs after all computation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use fourws_core::sim::{compute_metrics, run_batch, SETTLE_BAND};
use fourws_core::stability::{
    boundary_curves, char_coeffs, closed_loop_matrix, eigenvalues, place_double_pole_detailed,
    sample_region, GridRange,
};
use fourws_core::{PolePlacementSpec, SteeringLaw, Trace, VehicleParams};

use crate::config::{ResolvedScenario, ScenarioConfig};
use crate::csv_io::{self, fmt_f64, Metadata, MetricsRow};
use crate::error::{CliError, CliResult};
use crate::plot::{self, Series};
use crate::presets::{ChartPanel, SweepPanel};

#[derive(Debug, Default)]
pub struct Output {
    /// Relative file names and contents.
    pub files: Vec<(PathBuf, String)>,
    pub report: String,
    /// Runs that aborted; their rows are flagged in the metrics table.
    pub failures: usize,
}

impl Output {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        if self.files.is_empty() {
            return Ok(());
        }
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, text) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        }
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(p, _)| p == Path::new(name))
            .map(|(_, t)| t.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartSettings {
    pub k1_range: (f64, f64),
    pub k2_range: (f64, f64),
    pub resolution: usize,
    pub wheelbase: f64,
    pub cg_offset: f64,
    pub svg: bool,
}

pub fn chart(panels: &[ChartPanel], s: &ChartSettings) -> CliResult<Output> {
    let params = VehicleParams::new(s.wheelbase, s.cg_offset)?;
    let k1 = GridRange::new(s.k1_range.0, s.k1_range.1, s.resolution)?;
    let k2 = GridRange::new(s.k2_range.0, s.k2_range.1, s.resolution)?;
    let mut out = Output::default();
    for p in panels {
        let grid = sample_region(k1, k2, p.a, p.speed, &params, p.kappa);
        let curves = boundary_curves(p.a, &params, p.kappa, s.k1_range, s.k2_range);
        let placed = p
            .lambda0
            .iter()
            .map(|&l| {
                let spec = PolePlacementSpec::new(l)?;
                Ok((
                    l,
                    place_double_pole_detailed(&spec, p.a, p.speed, &params, p.kappa)?.gains,
                ))
            })
            .collect::<fourws_core::Result<Vec<_>>>()?;
        let meta: Metadata = vec![
            ("a".into(), fmt_f64(p.a)),
            ("V".into(), fmt_f64(p.speed)),
            ("f".into(), fmt_f64(s.wheelbase)),
            ("d".into(), fmt_f64(s.cg_offset)),
            ("kappa".into(), fmt_f64(p.kappa)),
        ];
        out.files.push((
            format!("{}_chart.csv", p.label).into(),
            csv_io::chart_csv(&grid, &meta)?,
        ));
        out.files.push((
            format!("{}_boundary.csv", p.label).into(),
            csv_io::boundary_csv(&curves, &meta)?,
        ));
        out.files.push((
            format!("{}_gains.csv", p.label).into(),
            csv_io::gains_csv(&placed, &meta)?,
        ));
        if s.svg {
            let title = format!(
                "a = {}, V = {} m/s, curvature = {} 1/m",
                p.a, p.speed, p.kappa
            );
            let marks: Vec<(f64, f64, f64)> =
                placed.iter().map(|(l, g)| (*l, g.k1, g.k2)).collect();
            out.files.push((
                format!("{}.svg", p.label).into(),
                plot::chart_plot(&title, &grid, &curves, &marks)?,
            ));
        }
        let stable = grid
            .cells
            .iter()
            .filter(|c| **c == fourws_core::Stability::Stable)
            .count();
        let _ = writeln!(
            out.report,
            "{}: {stable} of {} cells stable",
            p.label,
            grid.cells.len()
        );
    }
    Ok(out)
}

/// Placed gains with a check of the resulting closed loop.
pub fn gains(
    a: f64,
    speed: f64,
    kappa: f64,
    lambda0: f64,
    params: &VehicleParams,
) -> CliResult<String> {
    let spec = PolePlacementSpec::new(lambda0)?;
    let placed = place_double_pole_detailed(&spec, a, speed, params, kappa)?;
    let g = placed.gains;
    let c = char_coeffs(&g, speed, params, kappa);
    let roots = eigenvalues(&closed_loop_matrix(&g, speed, params, kappa));
    let residual = (c.c1 + 2.0 * lambda0).abs() + (c.c0 - lambda0 * lambda0).abs();
    let mut s = String::new();
    let _ = writeln!(s, "k1 = {}", fmt_f64(g.k1));
    let _ = writeln!(s, "k2 = {}", fmt_f64(g.k2));
    let _ = writeln!(s, "k3 = {}", fmt_f64(g.k3()));
    let _ = writeln!(s, "k4 = {}", fmt_f64(g.k4()));
    for (i, r) in roots.iter().enumerate() {
        let _ = writeln!(s, "eigenvalue {} = {} {:+}i", i + 1, fmt_f64(r.re), r.im);
    }
    let _ = writeln!(s, "residual = {residual:e}");
    let _ = writeln!(s, "route = {:?}", placed.route);
    Ok(s)
}

fn metrics_meta(info: &crate::config::RunInfo) -> Metadata {
    csv_io::run_metadata(info)
        .into_iter()
        .filter(|(k, _)| k != "a" && k != "lambda0")
        .collect()
}

fn row(label: &str, r: &ResolvedScenario, result: &fourws_core::Result<Trace>) -> MetricsRow {
    MetricsRow {
        label: label.to_string(),
        a: r.info.a,
        lambda0: r.info.lambda0,
        feedforward: matches!(r.scenario.steering, SteeringLaw::Tracking(c) if c.feedforward),
        outcome: match result {
            Ok(t) => Ok(compute_metrics(t, SETTLE_BAND)),
            Err(e) => Err(e.to_string()),
        },
    }
}

fn trace_plots(name: &str, runs: &[(String, Trace)]) -> CliResult<Vec<(PathBuf, String)>> {
    let quantity = |f: &dyn Fn(&fourws_core::TraceSample) -> f64| -> Vec<Series> {
        runs.iter()
            .map(|(label, t)| Series {
                label: label.clone(),
                points: t.samples.iter().step_by(10).map(|s| (s.t, f(s))).collect(),
            })
            .collect()
    };
    let mut files = Vec::new();
    let mut add = |suffix: &str, title: &str, y: &str, series: Vec<Series>| -> CliResult<()> {
        files.push((
            format!("{name}_{suffix}.svg").into(),
            plot::line_plot(title, "t [s]", y, &series)?,
        ));
        Ok(())
    };
    add(
        "lateral_error",
        "lateral error",
        "e_C [m]",
        quantity(&|s| s.pf.e),
    )?;
    add(
        "yaw_error",
        "relative yaw angle",
        "theta_C [rad]",
        quantity(&|s| s.pf.theta),
    )?;
    add(
        "lateral_acceleration",
        "lateral acceleration at G",
        "a_lat [m/s^2]",
        quantity(&|s| s.derived.a_lat),
    )?;
    add(
        "front_steering",
        "front steering angle",
        "delta_f [rad]",
        quantity(&|s| s.input.delta_f),
    )?;
    add(
        "rear_steering",
        "rear steering angle",
        "delta_r [rad]",
        quantity(&|s| s.input.delta_r),
    )?;
    let paths = runs
        .iter()
        .map(|(label, t)| Series {
            label: label.clone(),
            points: t
                .samples
                .iter()
                .step_by(10)
                .map(|s| (s.global.x, s.global.y))
                .collect(),
        })
        .collect::<Vec<_>>();
    files.push((
        format!("{name}_trajectory.svg").into(),
        plot::line_plot("trajectory", "x_R [m]", "y_R [m]", &paths)?,
    ));
    Ok(files)
}

/// Runs labelled scenarios. A lone scenario that aborts is an error; in a
/// batch, aborted runs become flagged metrics rows.
pub fn simulate(name: &str, runs: &[(String, ScenarioConfig)], svg: bool) -> CliResult<Output> {
    let resolved = runs
        .iter()
        .map(|(_, c)| c.resolve())
        .collect::<Result<Vec<_>, _>>()?;
    let scenarios: Vec<_> = resolved.iter().map(|r| r.scenario.clone()).collect();
    let results = run_batch(&scenarios);
    if let [Err(e)] = results.as_slice() {
        return Err(CliError::Model(e.clone()));
    }
    let mut out = Output::default();
    let mut rows = Vec::new();
    let mut done = Vec::new();
    for (((label, _), r), result) in runs.iter().zip(&resolved).zip(results) {
        rows.push(row(label, r, &result));
        match result {
            Ok(trace) => {
                let meta = csv_io::run_metadata(&r.info);
                out.files.push((
                    format!("{label}_trace.csv").into(),
                    csv_io::trace_csv(&trace, &meta)?,
                ));
                done.push((label.clone(), trace));
            }
            Err(e) => {
                out.failures += 1;
                let _ = writeln!(out.report, "{label}: {e}");
            }
        }
    }
    out.files.push((
        format!("{name}_metrics.csv").into(),
        csv_io::metrics_csv(&rows, &metrics_meta(&resolved[0].info))?,
    ));
    if svg && !done.is_empty() {
        out.files.extend(trace_plots(name, &done)?);
    }
    let _ = writeln!(
        out.report,
        "{name}: {} of {} runs completed",
        done.len(),
        runs.len()
    );
    Ok(out)
}

/// Metrics for every combination of the panel's lists; rows ordered by
/// `a`, then `lambda0`, then feedforward. Failed runs are flagged rows and
/// do not count as failures of the sweep.
pub fn sweep(panels: &[SweepPanel], svg: bool) -> CliResult<Output> {
    let mut out = Output::default();
    for p in panels {
        if p.a.is_empty() || p.lambda0.is_empty() || p.feedforward.is_empty() {
            return Err(CliError::Usage(format!(
                "{}: sweep lists must be nonempty",
                p.label
            )));
        }
        let meta_info = p.base.resolve()?.info;
        let mut combos = Vec::new();
        for &a in &p.a {
            for &l in &p.lambda0 {
                for &ff in &p.feedforward {
                    let mut cfg = p.base.clone();
                    cfg.a = Some(a);
                    cfg.lambda0 = Some(l);
                    cfg.k1 = None;
                    cfg.k2 = None;
                    cfg.feedforward = Some(ff);
                    let label =
                        format!("{}_a{a}_l{l}_ff{}", p.label, if ff { "on" } else { "off" });
                    combos.push((label, a, l, ff, cfg));
                }
            }
        }
        let rows: Vec<MetricsRow> = combos
            .par_iter()
            .map(|(label, a, l, ff, cfg)| match cfg.resolve() {
                Ok(r) => row(label, &r, &fourws_core::sim::run(&r.scenario)),
                Err(e) => MetricsRow {
                    label: label.clone(),
                    a: *a,
                    lambda0: Some(*l),
                    feedforward: *ff,
                    outcome: Err(e.to_string()),
                },
            })
            .collect();
        let meta = metrics_meta(&meta_info);
        out.files.push((
            format!("{}_metrics.csv", p.label).into(),
            csv_io::metrics_csv(&rows, &meta)?,
        ));
        if svg {
            let series: Vec<Series> = p
                .lambda0
                .iter()
                .map(|&l| Series {
                    label: format!("lambda0 = {l}"),
                    points: rows
                        .iter()
                        .filter(|r| r.lambda0 == Some(l))
                        .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.a, m.max_abs_lat_accel)))
                        .collect(),
                })
                .collect();
            let svg = plot::line_plot(
                "maximum lateral acceleration",
                "a",
                "max |a_lat| [m/s^2]",
                &series,
            )?;
            out.files.push((format!("{}.svg", p.label).into(), svg));
        }
        let _ = writeln!(
            out.report,
            "{}: {} rows, {} failed",
            p.label,
            rows.len(),
            rows.iter().filter(|r| r.outcome.is_err()).count()
        );
    }
    Ok(out)
}
