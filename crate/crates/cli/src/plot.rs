//! Static SVG renderings of the CSV outputs.

use plotters::prelude::*;

use fourws_core::stability::BoundaryCurve;
use fourws_core::{Stability, StabilityGrid};

use crate::error::{CliError, CliResult};

const SIZE: (u32, u32) = (720, 480);
const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn draw_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Csv(format!("plot rendering failed: {e:?}"))
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Overlaid line plot; one colour per series.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> CliResult<String> {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (x0, x1, y0, y1) = all.fold(
        (f64::MAX, f64::MIN, f64::MAX, f64::MIN),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc(x_label)
            .y_desc(y_label)
            .draw()
            .map_err(draw_err)?;
        for (i, s) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(
                    s.points.iter().copied(),
                    color.stroke_width(2),
                ))
                .map_err(draw_err)?
                .label(s.label.clone())
                .legend(move |(x, y)| {
                    PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2))
                });
        }
        if series.len() > 1 {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(draw_err)?;
        }
        root.present().map_err(draw_err)?;
    }
    Ok(out)
}

/// Stability region raster with boundary lines and placed-gain markers.
pub fn chart_plot(
    title: &str,
    grid: &StabilityGrid,
    curves: &[BoundaryCurve],
    gains: &[(f64, f64, f64)],
) -> CliResult<String> {
    let (k1a, k1b) = (grid.k1.min, grid.k1.max);
    let (k2a, k2b) = (grid.k2.min, grid.k2.max);
    let h1 = (k1b - k1a) / (grid.k1.count - 1) as f64;
    let h2 = (k2b - k2a) / (grid.k2.count - 1) as f64;
    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(48)
            .build_cartesian_2d(
                k1a - h1 / 2.0..k1b + h1 / 2.0,
                k2a - h2 / 2.0..k2b + h2 / 2.0,
            )
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc("k1")
            .y_desc("k2")
            .draw()
            .map_err(draw_err)?;
        let stable = RGBColor(170, 210, 240);
        let marginal = RGBColor(90, 90, 90);
        chart
            .draw_series(
                grid.iter()
                    .filter(|(_, _, s)| *s != Stability::Unstable)
                    .map(|(x, y, s)| {
                        let c = if s == Stability::Stable {
                            stable
                        } else {
                            marginal
                        };
                        Rectangle::new(
                            [(x - h1 / 2.0, y - h2 / 2.0), (x + h1 / 2.0, y + h2 / 2.0)],
                            c.filled(),
                        )
                    }),
            )
            .map_err(draw_err)?;
        for c in curves {
            chart
                .draw_series(LineSeries::new(
                    c.points.iter().copied(),
                    RED.stroke_width(2),
                ))
                .map_err(draw_err)?;
        }
        chart
            .draw_series(
                gains
                    .iter()
                    .map(|&(_, k1, k2)| Circle::new((k1, k2), 5, BLACK.filled())),
            )
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(out)
}
