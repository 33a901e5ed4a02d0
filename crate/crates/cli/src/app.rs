//! Argument handling for the `fourws` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use fourws_core::VehicleParams;

use crate::commands::{self, ChartSettings, Output};
use crate::config::{ScenarioConfig, KEYS};
use crate::error::{CliError, CliResult};
use crate::presets::{self, ChartPanel, Preset, SweepPanel};

fn num(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .long(name)
        .value_parser(value_parser!(f64))
        .allow_negative_numbers(true)
        .help(help)
}

fn out_args(cmd: Command) -> Command {
    cmd.arg(
        Arg::new("out")
            .long("out")
            .value_parser(value_parser!(PathBuf))
            .default_value("out")
            .help("Output directory"),
    )
    .arg(
        Arg::new("svg")
            .long("svg")
            .action(ArgAction::SetTrue)
            .help("Also render SVG plots"),
    )
}

fn key_args(mut cmd: Command) -> Command {
    for key in KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(*key)
                .allow_negative_numbers(true)
                .help_heading("Scenario keys"),
        );
    }
    cmd
}

fn list(name: &'static str, help: &'static str) -> Arg {
    // "-1,-2" is not a single number, so negative-number detection alone rejects it
    Arg::new(name)
        .long(name)
        .value_delimiter(',')
        .allow_hyphen_values(true)
        .help(help)
}

pub fn command() -> Command {
    let chart = out_args(
        Command::new("chart")
            .about("Classify a grid of feedback gains and draw the stability boundaries")
            .arg(Arg::new("preset").long("preset").help("fig2, fig3 or fig4"))
            .arg(num("a", "Rear-to-front steering ratio"))
            .arg(num("speed", "Speed [m/s]").default_value("5"))
            .arg(num("kappa", "Path curvature [1/m]").default_value("0"))
            .arg(num("k1-min", "Lower k1 bound").default_value("-1"))
            .arg(num("k1-max", "Upper k1 bound").default_value("1"))
            .arg(num("k2-min", "Lower k2 bound").default_value("-1"))
            .arg(num("k2-max", "Upper k2 bound").default_value("1"))
            .arg(
                Arg::new("resolution")
                    .long("resolution")
                    .value_parser(value_parser!(usize))
                    .help("Cells per axis"),
            )
            .arg(
                list(
                    "lambda0",
                    "Double roots whose gains are marked, comma separated",
                )
                .value_parser(value_parser!(f64)),
            )
            .arg(num("wheelbase", "Wheelbase [m]").default_value("2.7"))
            .arg(num("cg-offset", "Rear axle to centre of gravity [m]").default_value("1.35")),
    );
    let gains = Command::new("gains")
        .about("Feedback gains that place a double closed-loop root")
        .arg(num("a", "Rear-to-front steering ratio").required(true))
        .arg(num("speed", "Speed [m/s]").required(true))
        .arg(num("kappa", "Path curvature [1/m]").default_value("0"))
        .arg(num("lambda0", "Double root (negative)").required(true))
        .arg(num("wheelbase", "Wheelbase [m]").default_value("2.7"))
        .arg(num("cg-offset", "Rear axle to centre of gravity [m]").default_value("1.35"));
    let simulate = key_args(out_args(
        Command::new("simulate")
            .about("Simulate the closed loop and write traces and metrics")
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_parser(value_parser!(PathBuf))
                    .help("Scenario file"),
            )
            .arg(
                Arg::new("preset")
                    .long("preset")
                    .help("fig6, fig7, fig8 or fig9"),
            ),
    ));
    let sweep = key_args(out_args(
        Command::new("sweep")
            .about("Metrics table over steering ratios, double roots and feedforward settings")
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_parser(value_parser!(PathBuf))
                    .help("Base scenario file"),
            )
            .arg(Arg::new("preset").long("preset").help("fig5"))
            .arg(list("a-list", "Steering ratios").value_parser(value_parser!(f64)))
            .arg(list("lambda0-list", "Double roots").value_parser(value_parser!(f64)))
            .arg(
                list("feedforward-list", "Feedforward settings").value_parser(value_parser!(bool)),
            ),
    ));
    Command::new("fourws")
        .about("Path tracking with four-wheel steering: stability charts, gains and simulations")
        .subcommand_required(true)
        .subcommands([chart, gains, simulate, sweep])
}

fn get(m: &ArgMatches, id: &str) -> f64 {
    *m.get_one::<f64>(id).expect("argument has a default")
}

fn unknown_preset(name: &str, expected: &str) -> CliError {
    CliError::Usage(format!(
        "unknown preset `{name}` for this command, expected {expected}"
    ))
}

fn chart_cmd(m: &ArgMatches) -> CliResult<Output> {
    let mut settings = ChartSettings {
        k1_range: (get(m, "k1-min"), get(m, "k1-max")),
        k2_range: (get(m, "k2-min"), get(m, "k2-max")),
        resolution: presets::RESOLUTION,
        wheelbase: get(m, "wheelbase"),
        cg_offset: get(m, "cg-offset"),
        svg: m.get_flag("svg"),
    };
    let panels = match m.get_one::<String>("preset") {
        Some(name) => match presets::preset(name) {
            Some(Preset::Chart(c)) => {
                settings.k1_range = c.k1_range;
                settings.k2_range = c.k2_range;
                settings.resolution = c.resolution;
                c.panels
            }
            _ => return Err(unknown_preset(name, "fig2, fig3 or fig4")),
        },
        None => {
            let a = *m
                .get_one::<f64>("a")
                .ok_or_else(|| CliError::Usage("--a is required without --preset".into()))?;
            let lambda0 = m
                .get_many::<f64>("lambda0")
                .map(|v| v.copied().collect())
                .unwrap_or_default();
            vec![ChartPanel {
                label: "chart".into(),
                a,
                speed: get(m, "speed"),
                kappa: get(m, "kappa"),
                lambda0,
            }]
        }
    };
    if let Some(&r) = m.get_one::<usize>("resolution") {
        settings.resolution = r;
    }
    commands::chart(&panels, &settings)
}

fn overrides(m: &ArgMatches, cfg: &mut ScenarioConfig) -> CliResult<()> {
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set_override(key, v)?;
        }
    }
    Ok(())
}

fn read_config(m: &ArgMatches) -> CliResult<Option<ScenarioConfig>> {
    match m.get_one::<PathBuf>("config") {
        None => Ok(None),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(Some(ScenarioConfig::parse(&text)?))
        }
    }
}

fn simulate_cmd(m: &ArgMatches) -> CliResult<Output> {
    let (name, mut runs) = match (m.get_one::<String>("preset"), read_config(m)?) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either --config or --preset".into()))
        }
        (Some(name), None) => match presets::preset(name) {
            Some(Preset::Simulate(runs)) => (name.clone(), runs),
            _ => return Err(unknown_preset(name, "fig6, fig7, fig8 or fig9")),
        },
        (None, cfg) => (
            "run".to_string(),
            vec![("run".to_string(), cfg.unwrap_or_default())],
        ),
    };
    for (_, cfg) in &mut runs {
        overrides(m, cfg)?;
    }
    commands::simulate(&name, &runs, m.get_flag("svg"))
}

fn sweep_cmd(m: &ArgMatches) -> CliResult<Output> {
    let mut panels = match (m.get_one::<String>("preset"), read_config(m)?) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either --config or --preset".into()))
        }
        (Some(name), None) => match presets::preset(name) {
            Some(Preset::Sweep(p)) => p,
            _ => return Err(unknown_preset(name, "fig5")),
        },
        (None, cfg) => {
            let base = cfg.unwrap_or_default();
            vec![SweepPanel {
                label: "sweep".into(),
                a: vec![base.a.unwrap_or(0.0)],
                lambda0: vec![base.lambda0.unwrap_or(-1.0)],
                feedforward: vec![base.feedforward.unwrap_or(true)],
                base,
            }]
        }
    };
    for p in &mut panels {
        overrides(m, &mut p.base)?;
        if let Some(v) = m.get_many::<f64>("a-list") {
            p.a = v.copied().collect();
        }
        if let Some(v) = m.get_many::<f64>("lambda0-list") {
            p.lambda0 = v.copied().collect();
        }
        if let Some(v) = m.get_many::<bool>("feedforward-list") {
            p.feedforward = v.copied().collect();
        }
    }
    commands::sweep(&panels, m.get_flag("svg"))
}

fn dispatch(m: &ArgMatches) -> CliResult<(Output, Option<PathBuf>)> {
    let out_dir = |sub: &ArgMatches| sub.get_one::<PathBuf>("out").cloned();
    match m.subcommand() {
        Some(("chart", sub)) => Ok((chart_cmd(sub)?, out_dir(sub))),
        Some(("gains", sub)) => {
            let params = VehicleParams::new(get(sub, "wheelbase"), get(sub, "cg-offset"))?;
            let report = commands::gains(
                get(sub, "a"),
                get(sub, "speed"),
                get(sub, "kappa"),
                get(sub, "lambda0"),
                &params,
            )?;
            Ok((
                Output {
                    report,
                    ..Default::default()
                },
                None,
            ))
        }
        Some(("simulate", sub)) => Ok((simulate_cmd(sub)?, out_dir(sub))),
        Some(("sweep", sub)) => Ok((sweep_cmd(sub)?, out_dir(sub))),
        _ => unreachable!("subcommand is required"),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = dispatch(&matches).and_then(|(out, dir)| {
        if let Some(dir) = dir {
            out.write(&dir)?;
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            print!("{}", out.report);
            if out.failures > 0 {
                3
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
