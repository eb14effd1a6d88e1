//! Campaign outputs: per-step CSV traces, aggregate tables, a JSON summary
//! and SVG time-series charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Mode, OutputConfig, OutputFormat};
use crate::error::{Error, Result};
use crate::simulator::{Campaign, Cell, RunFailure};

/// Column order of the trace CSV.
pub const CSV_HEADER: &str = "run,step,ospa,card_est,card_true,pd,sigma_eps,seed";

/// One row per run and step, cells in campaign order. Steps are 1-based.
/// Floats use the shortest representation that round-trips.
pub fn trace_csv(campaign: &Campaign) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for cell in &campaign.cells {
        let Cell { p_detect, noise_std } = cell.cell;
        for run in &cell.runs {
            for (k, d) in run.ospa.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    run.run,
                    k + 1,
                    d,
                    run.card_est[k],
                    run.card_true[k],
                    p_detect,
                    noise_std,
                    run.seed
                );
            }
        }
    }
    out
}

/// The swept parameter of a campaign, used for column headers.
fn sweep_axis(mode: Mode) -> (&'static str, fn(&Cell) -> f64) {
    match mode {
        Mode::SweepNoise => ("sigma_eps", |c| c.noise_std),
        _ => ("p_D", |c| c.p_detect),
    }
}

/// Mean OSPA per cell in a one-row table, one column per sweep value.
pub fn aggregate_table(campaign: &Campaign, mode: Mode) -> String {
    let (axis, value) = sweep_axis(mode);
    let label_width = 10;
    let mut header = format!("{axis:<label_width$}");
    let mut row = format!("{:<label_width$}", "MM-PMBM");
    for cell in &campaign.cells {
        let _ = write!(header, " {:>8.2}", value(&cell.cell));
        let _ = write!(row, " {:>8.2}", cell.mean_ospa);
    }
    let rule = "-".repeat(header.len());
    format!("Mean OSPA (m)\n{header}\n{rule}\n{row}\n")
}

#[derive(Serialize)]
struct CellSummary<'a> {
    p_detect: f64,
    noise_std: f64,
    runs_completed: usize,
    mean_ospa: f64,
    ospa_per_step: &'a [f64],
    mean_cardinality: Vec<f64>,
    true_cardinality: Vec<usize>,
    failures: &'a [RunFailure],
}

#[derive(Serialize)]
struct Summary<'a> {
    mode: Mode,
    cells: Vec<CellSummary<'a>>,
    wall_clock_secs: f64,
    mean_run_secs: f64,
    max_run_secs: f64,
}

/// Aggregates, failures and timing. Non-finite means serialize as `null`.
pub fn summary_json(campaign: &Campaign, mode: Mode) -> String {
    let summary = Summary {
        mode,
        cells: campaign
            .cells
            .iter()
            .map(|c| CellSummary {
                p_detect: c.cell.p_detect,
                noise_std: c.cell.noise_std,
                runs_completed: c.runs.len(),
                mean_ospa: c.mean_ospa,
                ospa_per_step: &c.ospa_per_step,
                mean_cardinality: c.cardinality.iter().map(|s| s.mean_estimated).collect(),
                true_cardinality: c.cardinality.iter().map(|s| s.truth).collect(),
                failures: &c.failures,
            })
            .collect(),
        wall_clock_secs: campaign.wall_clock_secs,
        mean_run_secs: campaign.mean_run_secs,
        max_run_secs: campaign.max_run_secs,
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes")
}

/// A named series for [`line_chart`]; `values[k]` is plotted at step `k + 1`.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    /// Drawn as a stepped line.
    pub stepped: bool,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Self-contained SVG line chart of per-step values.
pub fn line_chart(title: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let steps = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(1);
    let finite = series.iter().flat_map(|s| &s.values).copied().filter(|v| v.is_finite());
    let y_max = finite.fold(0.0f64, f64::max);
    let y_step = nice_step(if y_max > 0.0 { y_max } else { 1.0 });
    let y_top = (y_max / y_step).ceil().max(1.0) * y_step;
    let sx = |k: f64| left + (k - 1.0) / ((steps - 1).max(1) as f64) * pw;
    let sy = |v: f64| top + ph - v / y_top * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );

    let mut tick = 0.0;
    while tick <= y_top + 1e-9 * y_top {
        let y = sy(tick);
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0,
            fmt_tick(tick)
        );
        tick += y_step;
    }
    let x_step = nice_step(steps as f64).max(1.0);
    let mut k = x_step;
    while k <= steps as f64 {
        let x = sx(k);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + ph + 18.0,
            fmt_tick(k)
        );
        k += x_step;
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">Time step k</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = Vec::new();
        for (k, v) in s.values.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let (x, y) = (sx(k as f64 + 1.0), sy(*v));
            if s.stepped {
                if let Some(&(_, py)) = points.last() {
                    points.push((x, py));
                }
            }
            points.push((x, y));
        }
        let path: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
            path.join(" ")
        );
        let ly = top + 12.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round())
    } else {
        format!("{v:.1}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn cell_label(mode: Mode, cell: &Cell) -> String {
    match mode {
        Mode::SweepNoise => format!("sigma = {}", cell.noise_std),
        _ => format!("p_D = {}", cell.p_detect),
    }
}

/// OSPA chart with one series per cell.
pub fn ospa_chart(campaign: &Campaign, mode: Mode) -> String {
    let series: Vec<Series> = campaign
        .cells
        .iter()
        .map(|c| Series {
            label: cell_label(mode, &c.cell),
            values: c.ospa_per_step.clone(),
            stepped: false,
        })
        .collect();
    line_chart("Mean OSPA", "OSPA (m)", &series)
}

/// Estimated cardinality per cell against the true count.
pub fn cardinality_chart(campaign: &Campaign, mode: Mode) -> String {
    let mut series: Vec<Series> = Vec::new();
    if let Some(first) = campaign.cells.first() {
        series.push(Series {
            label: "truth".into(),
            values: first.cardinality.iter().map(|s| s.truth as f64).collect(),
            stepped: true,
        });
    }
    series.extend(campaign.cells.iter().map(|c| Series {
        label: cell_label(mode, &c.cell),
        values: c.cardinality.iter().map(|s| s.mean_estimated).collect(),
        stepped: false,
    }));
    line_chart("Mean estimated cardinality", "Number of targets", &series)
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Writes the requested formats into `dir` and returns the created paths.
pub fn write_outputs(campaign: &Campaign, mode: Mode, output: &OutputConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    if output.wants(OutputFormat::Csv) {
        written.push(write_file(dir.join("traces.csv"), &trace_csv(campaign))?);
        written.push(write_file(dir.join("aggregate.txt"), &aggregate_table(campaign, mode))?);
    }
    if output.wants(OutputFormat::Json) {
        written.push(write_file(dir.join("summary.json"), &summary_json(campaign, mode))?);
    }
    if output.wants(OutputFormat::Svg) {
        written.push(write_file(dir.join("ospa.svg"), &ospa_chart(campaign, mode))?);
        written.push(write_file(dir.join("cardinality.svg"), &cardinality_chart(campaign, mode))?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::CardinalityStep;
    use crate::simulator::{CellResult, RunTrace};

    fn campaign() -> Campaign {
        let run = |r: usize| RunTrace {
            run: r,
            seed: 7 + r as u64,
            ospa: vec![10.0, 2.5],
            card_est: vec![1, 2],
            card_true: vec![1, 2],
            elapsed_secs: 0.1,
        };
        let cell = |p: f64| CellResult {
            cell: Cell {
                p_detect: p,
                noise_std: 10.0,
            },
            runs: vec![run(0), run(1)],
            failures: vec![],
            mean_ospa: 6.25,
            ospa_per_step: vec![10.0, 2.5],
            cardinality: vec![
                CardinalityStep {
                    mean_estimated: 1.0,
                    truth: 1,
                },
                CardinalityStep {
                    mean_estimated: 2.0,
                    truth: 2,
                },
            ],
        };
        Campaign {
            cells: vec![cell(0.6), cell(0.95)],
            wall_clock_secs: 1.0,
            mean_run_secs: 0.1,
            max_run_secs: 0.1,
        }
    }

    #[test]
    fn csv_rows() {
        let csv = trace_csv(&campaign());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 2 * 2 * 2);
        assert_eq!(lines[1], "0,1,10,1,1,0.6,10,7");
        assert_eq!(lines[8], "1,2,2.5,2,2,0.95,10,8");
    }

    #[test]
    fn table_has_one_column_per_cell() {
        let t = aggregate_table(&campaign(), Mode::SweepPd);
        assert!(t.contains("p_D"));
        assert!(t.contains("0.60") && t.contains("0.95"));
        assert_eq!(t.lines().last().unwrap().matches("6.25").count(), 2);
    }

    #[test]
    fn json_summary_lists_failures() {
        let mut c = campaign();
        c.cells[0].failures.push(RunFailure {
            run: 3,
            seed: 10,
            step: 4,
            message: "boom".into(),
        });
        c.cells[1].mean_ospa = f64::NAN;
        let v: serde_json::Value = serde_json::from_str(&summary_json(&c, Mode::SweepPd)).unwrap();
        assert_eq!(v["mode"], "sweep-pd");
        assert_eq!(v["cells"][0]["failures"][0]["seed"], 10);
        assert!(v["cells"][1]["mean_ospa"].is_null());
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = cardinality_chart(&campaign(), Mode::SweepPd);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        let empty = line_chart("t", "y", &[]);
        assert!(empty.contains("</svg>"));
    }

    #[test]
    fn writes_requested_formats() {
        let dir = tempfile::tempdir().unwrap();
        let output = OutputConfig {
            dir: dir.path().into(),
            formats: vec![OutputFormat::Json],
        };
        let files = write_outputs(&campaign(), Mode::Single, &output, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        assert!(files[0].ends_with("summary.json"));
    }
}
