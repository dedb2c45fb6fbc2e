//! Log-log SVG charts from experiment CSVs: one polyline per series, circle
//! markers, no external renderer needed.

use std::collections::BTreeMap;
use std::path::Path;

use crate::csvio::CsvTable;
use crate::BenchError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct PlotInfo {
    pub series: usize,
    pub points: usize,
}

/// Reads a timing or variance-estimates CSV and writes a log-log SVG next
/// to it (or at `output`). Timing files plot mean wall time per N and
/// mode; estimate files plot the variance of the estimates per N and
/// engine.
pub fn plot_csv(input: &Path, output: &Path) -> Result<PlotInfo, BenchError> {
    let table = CsvTable::read(input)?;
    let series = extract_series(&table, input)?;
    if series.is_empty() || series.values().all(|v| v.is_empty()) {
        return Err(BenchError::Usage(format!(
            "{}: no data rows to plot",
            input.display()
        )));
    }
    let (svg, points) = render(&series, input)?;
    std::fs::write(output, svg)
        .map_err(|e| BenchError::Runtime(format!("writing {}: {e}", output.display())))?;
    Ok(PlotInfo {
        series: series.len(),
        points,
    })
}

type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn extract_series(table: &CsvTable, origin: &Path) -> Result<Series, BenchError> {
    let mut out: Series = BTreeMap::new();
    if let (Some(mode), Some(n), Some(wall)) = (
        table.column("mode"),
        table.column("n"),
        table.column("wall_time_ms"),
    ) {
        // timing.csv: average wall time over replicates per (mode, n).
        let mut sums: BTreeMap<(String, u64), (f64, usize)> = BTreeMap::new();
        for row in 0..table.rows.len() {
            let key = (
                table.rows[row][mode].clone(),
                table.f64_at(row, n, origin)? as u64,
            );
            let v = table.f64_at(row, wall, origin)?;
            let slot = sums.entry(key).or_insert((0.0, 0));
            slot.0 += v;
            slot.1 += 1;
        }
        for ((mode, n), (sum, count)) in sums {
            out.entry(mode)
                .or_default()
                .push((n as f64, sum / count as f64));
        }
    } else if let (Some(engine), Some(n), Some(estimate)) = (
        table.column("engine"),
        table.column("n"),
        table.column("estimate"),
    ) {
        // variance_estimates.csv: variance of estimates per (engine, n).
        let mut groups: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
        for row in 0..table.rows.len() {
            if table.rows[row][estimate].is_empty() {
                continue;
            }
            let key = (
                table.rows[row][engine].clone(),
                table.f64_at(row, n, origin)? as u64,
            );
            groups
                .entry(key)
                .or_default()
                .push(table.f64_at(row, estimate, origin)?);
        }
        for ((engine, n), values) in groups {
            if values.len() >= 2 {
                out.entry(engine)
                    .or_default()
                    .push((n as f64, sqmc_core::stats::sample_variance(&values)));
            }
        }
    } else {
        return Err(BenchError::Usage(format!(
            "{}: unrecognized CSV layout (want timing or variance-estimates columns)",
            origin.display()
        )));
    }
    for points in out.values_mut() {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    Ok(out)
}

fn render(series: &Series, origin: &Path) -> Result<(String, usize), BenchError> {
    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    if all.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(BenchError::Usage(format!(
            "{}: log-log plot needs positive values",
            origin.display()
        )));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN_L + (x.log10() - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y.log10() - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // Decade ticks
    for d in (x0.floor() as i64)..=(x1.ceil() as i64) {
        let v = 10f64.powi(d as i32);
        if v.log10() < x0 - 1e-9 || v.log10() > x1 + 1e-9 {
            continue;
        }
        let x = px(v);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#999\"/>\n<text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">1e{d}</text>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0,
            HEIGHT - MARGIN_B + 18.0
        ));
    }
    for d in (y0.floor() as i64)..=(y1.ceil() as i64) {
        let v = 10f64.powi(d as i32);
        if v.log10() < y0 - 1e-9 || v.log10() > y1 + 1e-9 {
            continue;
        }
        let y = py(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"#999\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">1e{d}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L - 8.0,
            y + 4.0
        ));
    }

    let mut total_points = 0;
    for (index, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        for &(x, y) in points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            ));
            total_points += 1;
        }
        let ly = MARGIN_T + 16.0 * index as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"12\">{name}</text>\n",
            WIDTH - MARGIN_R + 10.0,
            ly,
            WIDTH - MARGIN_R + 25.0,
            ly + 9.0
        ));
    }
    svg.push_str("</svg>\n");
    Ok((svg, total_points))
}
