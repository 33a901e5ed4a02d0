//! CSV encodings. Floats use the shortest representation that parses back
//! to the same value, so every table round-trips exactly.

use fourws_core::path::PathFrameState;
use fourws_core::sim::{Derived, Metrics, TraceSample};
use fourws_core::stability::BoundaryCurve;
use fourws_core::{GlobalState, StabilityGrid, SteeringInput, Trace, VehicleParams};

use crate::config::RunInfo;
use crate::error::{CliError, CliResult};

pub const TRACE_HEADER: [&str; 14] = [
    "t",
    "x_R",
    "y_R",
    "psi",
    "s_C",
    "e_C",
    "theta_C",
    "kappa_C",
    "delta_f",
    "delta_r",
    "psi_dot",
    "psi_ddot",
    "delta_r_dot",
    "a_lat",
];
pub const CHART_HEADER: [&str; 3] = ["k1", "k2", "class"];
pub const BOUNDARY_HEADER: [&str; 3] = ["curve_id", "k1", "k2"];
pub const GAINS_HEADER: [&str; 5] = ["lambda0", "k1", "k2", "k3", "k4"];
pub const METRICS_HEADER: [&str; 11] = [
    "label",
    "a",
    "lambda0",
    "feedforward",
    "status",
    "max_abs_lat_accel",
    "max_abs_lat_error",
    "steady_state_error",
    "settle_time",
    "turning_radius",
    "detail",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `# key = value` lines preceding the header.
pub type Metadata = Vec<(String, String)>;

pub fn run_metadata(info: &RunInfo) -> Metadata {
    let mut m = vec![
        ("a".to_string(), fmt_f64(info.a)),
        ("V".to_string(), fmt_f64(info.speed)),
        ("f".to_string(), fmt_f64(info.wheelbase)),
        ("d".to_string(), fmt_f64(info.cg_offset)),
        ("kappa".to_string(), fmt_f64(info.kappa)),
    ];
    if let Some(l) = info.lambda0 {
        m.push(("lambda0".to_string(), fmt_f64(l)));
    }
    m.push(("dt".to_string(), fmt_f64(info.dt)));
    m
}

fn encode<R: AsRef<[String]>>(
    meta: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> CliResult<String> {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.as_ref())?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?;
    out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// Splits metadata lines from the table and checks the header.
fn decode(text: &str, header: &[&str]) -> CliResult<(Metadata, Vec<csv::StringRecord>)> {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(CliError::Csv(format!(
            "expected header {}, found {}",
            header.join(","),
            found.join(",")
        )));
    }
    let rows = r.records().collect::<Result<Vec<_>, _>>()?;
    Ok((meta, rows))
}

fn meta_f64(meta: &Metadata, key: &str) -> CliResult<f64> {
    let v = meta
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| CliError::Csv(format!("missing metadata `{key}`")))?;
    v.1.parse()
        .map_err(|_| CliError::Csv(format!("metadata `{key}` is not a number: {}", v.1)))
}

fn field(rec: &csv::StringRecord, i: usize) -> CliResult<f64> {
    let s = rec
        .get(i)
        .ok_or_else(|| CliError::Csv(format!("row too short: {rec:?}")))?;
    s.parse()
        .map_err(|_| CliError::Csv(format!("not a number: `{s}`")))
}

pub fn trace_csv(trace: &Trace, meta: &Metadata) -> CliResult<String> {
    let rows = trace.samples.iter().map(|s| {
        [
            s.t,
            s.global.x,
            s.global.y,
            s.global.psi,
            s.pf.s,
            s.pf.e,
            s.pf.theta,
            s.kappa,
            s.input.delta_f,
            s.input.delta_r,
            s.derived.psi_dot,
            s.derived.psi_ddot,
            s.derived.delta_r_dot,
            s.derived.a_lat,
        ]
        .map(fmt_f64)
    });
    encode(meta, &TRACE_HEADER, rows)
}

/// Inverse of [`trace_csv`]; needs `V`, `f`, `d` and `dt` in the metadata.
pub fn parse_trace_csv(text: &str) -> CliResult<(Trace, Metadata)> {
    let (meta, rows) = decode(text, &TRACE_HEADER)?;
    let params = VehicleParams::new(meta_f64(&meta, "f")?, meta_f64(&meta, "d")?)?;
    let mut samples = Vec::with_capacity(rows.len());
    for rec in &rows {
        let v: Vec<f64> = (0..TRACE_HEADER.len())
            .map(|i| field(rec, i))
            .collect::<CliResult<_>>()?;
        samples.push(TraceSample {
            t: v[0],
            global: GlobalState::new(v[1], v[2], v[3]),
            pf: PathFrameState::new(v[4], v[5], v[6]),
            kappa: v[7],
            input: SteeringInput::new(v[8], v[9]),
            derived: Derived {
                psi_dot: v[10],
                psi_ddot: v[11],
                delta_r_dot: v[12],
                a_lat: v[13],
            },
        });
    }
    if samples.is_empty() {
        return Err(CliError::Csv("trace has no rows".into()));
    }
    let trace = Trace {
        speed: meta_f64(&meta, "V")?,
        params,
        dt: meta_f64(&meta, "dt")?,
        samples,
    };
    Ok((trace, meta))
}

pub fn chart_csv(grid: &StabilityGrid, meta: &Metadata) -> CliResult<String> {
    let rows = grid
        .iter()
        .map(|(k1, k2, s)| [fmt_f64(k1), fmt_f64(k2), s.code().to_string()]);
    encode(meta, &CHART_HEADER, rows)
}

/// Rows of `(k1, k2, class)`.
pub fn parse_chart_csv(text: &str) -> CliResult<Vec<(f64, f64, u8)>> {
    let (_, rows) = decode(text, &CHART_HEADER)?;
    rows.iter()
        .map(|r| {
            let class = r
                .get(2)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| CliError::Csv(format!("bad class in {r:?}")))?;
            Ok((field(r, 0)?, field(r, 1)?, class))
        })
        .collect()
}

pub fn boundary_csv(curves: &[BoundaryCurve], meta: &Metadata) -> CliResult<String> {
    let rows = curves.iter().flat_map(|c| {
        c.points
            .iter()
            .map(move |&(k1, k2)| [c.kind.id().to_string(), fmt_f64(k1), fmt_f64(k2)])
    });
    encode(meta, &BOUNDARY_HEADER, rows)
}

/// One row per requested `lambda0`: the placed gains.
pub fn gains_csv(rows: &[(f64, fourws_core::ControlGains)], meta: &Metadata) -> CliResult<String> {
    let rows = rows
        .iter()
        .map(|(l, g)| [*l, g.k1, g.k2, g.k3(), g.k4()].map(fmt_f64));
    encode(meta, &GAINS_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub label: String,
    pub a: f64,
    pub lambda0: Option<f64>,
    pub feedforward: bool,
    /// Metrics of a completed run, or the reason it failed.
    pub outcome: Result<Metrics, String>,
}

pub fn metrics_csv(rows: &[MetricsRow], meta: &Metadata) -> CliResult<String> {
    let records = rows.iter().map(|r| {
        let mut rec = vec![
            r.label.clone(),
            fmt_f64(r.a),
            fmt_opt(r.lambda0),
            r.feedforward.to_string(),
        ];
        match &r.outcome {
            Ok(m) => rec.extend([
                "ok".to_string(),
                fmt_f64(m.max_abs_lat_accel),
                fmt_f64(m.max_abs_lat_error),
                fmt_f64(m.steady_state_error),
                fmt_opt(m.settle_time),
                fmt_opt(m.turning_radius),
                String::new(),
            ]),
            Err(msg) => {
                rec.push("failed".to_string());
                rec.extend(std::iter::repeat_n(String::new(), 5));
                rec.push(msg.clone());
            }
        }
        rec
    });
    encode(meta, &METRICS_HEADER, records)
}

pub fn parse_metrics_csv(text: &str) -> CliResult<Vec<MetricsRow>> {
    let (_, rows) = decode(text, &METRICS_HEADER)?;
    let opt = |r: &csv::StringRecord, i: usize| -> CliResult<Option<f64>> {
        match r.get(i) {
            Some("") | None => Ok(None),
            Some(_) => field(r, i).map(Some),
        }
    };
    rows.iter()
        .map(|r| {
            let outcome = match r.get(4) {
                Some("ok") => Ok(Metrics {
                    max_abs_lat_accel: field(r, 5)?,
                    max_abs_lat_error: field(r, 6)?,
                    steady_state_error: field(r, 7)?,
                    settle_time: opt(r, 8)?,
                    turning_radius: opt(r, 9)?,
                }),
                Some("failed") => Err(r.get(10).unwrap_or("").to_string()),
                other => return Err(CliError::Csv(format!("unknown status {other:?}"))),
            };
            Ok(MetricsRow {
                label: r.get(0).unwrap_or("").to_string(),
                a: field(r, 1)?,
                lambda0: opt(r, 2)?,
                feedforward: r.get(3) == Some("true"),
                outcome,
            })
        })
        .collect()
}
