//! SVG figures from sweep and trace CSVs.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::CliError;
use crate::output::{atomic_write, out_path, read_csv, CsvData};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];
const SHADE: RGBColor = RGBColor(200, 200, 200);

struct IndexSeries {
    name: String,
    omega: Vec<f64>,
    mag: Vec<f64>,
    phase: Vec<f64>,
}

struct TraceSeries {
    name: String,
    time: Vec<f64>,
    v: Vec<f64>,
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "series".into(), |s| s.to_string_lossy().into_owned())
}

fn draw_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Input(format!("plot failed: {e:?}"))
}

fn span(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Magnitude (with the unit line) over phase, shaded above `omega_bi`.
fn index_figure(series: &[IndexSeries], omega_bi: Option<f64>) -> Result<String, CliError> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (900, 700)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let (top, bottom) = root.split_vertically(370);
        let w_lo = series.iter().flat_map(|s| s.omega.iter().copied()).fold(f64::INFINITY, f64::min);
        let w_hi = series.iter().flat_map(|s| s.omega.iter().copied()).fold(0.0, f64::max);
        let m_lo = series
            .iter()
            .flat_map(|s| s.mag.iter().copied())
            .filter(|m| *m > 0.0)
            .fold(1.0f64, f64::min)
            * 0.8;
        let m_hi = series.iter().flat_map(|s| s.mag.iter().copied()).fold(1.0f64, f64::max) * 1.25;
        let (p_lo, p_hi) = span(series.iter().flat_map(|s| s.phase.iter().copied()));

        let mut mag = ChartBuilder::on(&top)
            .margin(10)
            .x_label_area_size(30)
            .y_label_area_size(60)
            .build_cartesian_2d((w_lo..w_hi).log_scale(), (m_lo..m_hi).log_scale())
            .map_err(draw_err)?;
        mag.configure_mesh().y_desc("|index|").draw().map_err(draw_err)?;
        if let Some(wb) = omega_bi.filter(|w| *w < w_hi) {
            mag.draw_series(std::iter::once(Rectangle::new(
                [(wb.max(w_lo), m_lo), (w_hi, m_hi)],
                SHADE.mix(0.5).filled(),
            )))
            .map_err(draw_err)?;
        }
        mag.draw_series(LineSeries::new([(w_lo, 1.0), (w_hi, 1.0)], BLACK.stroke_width(1)))
            .map_err(draw_err)?;
        for (k, s) in series.iter().enumerate() {
            let c = PALETTE[k % PALETTE.len()];
            mag.draw_series(LineSeries::new(
                s.omega.iter().zip(&s.mag).filter(|(_, m)| **m > 0.0).map(|(&w, &m)| (w, m)),
                c.stroke_width(2),
            ))
            .map_err(draw_err)?
            .label(s.name.clone())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], c.stroke_width(2)));
        }
        mag.configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;

        let mut ph = ChartBuilder::on(&bottom)
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d((w_lo..w_hi).log_scale(), p_lo..p_hi)
            .map_err(draw_err)?;
        ph.configure_mesh()
            .x_desc("omega (rad/s)")
            .y_desc("phase (deg)")
            .draw()
            .map_err(draw_err)?;
        if let Some(wb) = omega_bi.filter(|w| *w < w_hi) {
            ph.draw_series(std::iter::once(Rectangle::new(
                [(wb.max(w_lo), p_lo), (w_hi, p_hi)],
                SHADE.mix(0.5).filled(),
            )))
            .map_err(draw_err)?;
        }
        for (k, s) in series.iter().enumerate() {
            let c = PALETTE[k % PALETTE.len()];
            ph.draw_series(LineSeries::new(
                s.omega.iter().zip(&s.phase).map(|(&w, &p)| (w, p)),
                c.stroke_width(2),
            ))
            .map_err(draw_err)?;
        }
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

fn trace_figure(series: &[TraceSeries]) -> Result<String, CliError> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (900, 450)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let (t_lo, t_hi) = span(series.iter().flat_map(|s| s.time.iter().copied()));
        let (v_lo, v_hi) = span(series.iter().flat_map(|s| s.v.iter().copied()));
        let mut chart = ChartBuilder::on(&root)
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(t_lo..t_hi, v_lo..v_hi)
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc("time (s)")
            .y_desc("v_dc (V)")
            .draw()
            .map_err(draw_err)?;
        for (k, s) in series.iter().enumerate() {
            let c = PALETTE[k % PALETTE.len()];
            // Thin long traces to at most a few thousand vertices per series.
            let step = (s.time.len() / 4000).max(1);
            chart
                .draw_series(LineSeries::new(
                    s.time.iter().zip(&s.v).step_by(step).map(|(&t, &v)| (t, v)),
                    c.stroke_width(2),
                ))
                .map_err(draw_err)?
                .label(s.name.clone())
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], c.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

/// One figure per input, plus overlays when several inputs of a kind are given.
pub fn plot(inputs: &[PathBuf], omega_bi: Option<f64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut idx = Vec::new();
    let mut traces = Vec::new();
    for p in inputs {
        match read_csv(p)? {
            CsvData::Index { omega, mag, phase_deg } => idx.push(IndexSeries {
                name: stem(p),
                omega,
                mag,
                phase: phase_deg,
            }),
            CsvData::Trace { time, v_dc } => traces.push(TraceSeries {
                name: stem(p),
                time,
                v: v_dc,
            }),
        }
    }
    let mut written = Vec::new();
    let mut emit = |name: String, svg: String| -> Result<(), CliError> {
        let path = out_path(out, &name);
        atomic_write(&path, svg.as_bytes())?;
        written.push(path);
        Ok(())
    };
    for s in &idx {
        emit(format!("{}.svg", s.name), index_figure(std::slice::from_ref(s), omega_bi)?)?;
    }
    for s in &traces {
        emit(format!("{}.svg", s.name), trace_figure(std::slice::from_ref(s))?)?;
    }
    if idx.len() > 1 {
        emit("comparison_index.svg".into(), index_figure(&idx, omega_bi)?)?;
    }
    if traces.len() > 1 {
        emit("comparison_trace.svg".into(), trace_figure(&traces)?)?;
    }
    Ok(written)
}
