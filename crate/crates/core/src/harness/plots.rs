//! Boxplot SVG emission and the metrics CSV table.

use crate::error::{CtflowError, Result};
use crate::harness::metrics::MetricsRecord;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

const METRICS: [(&str, &str); 6] = [
    ("conc_rmse", "Concentration RMSE"),
    ("vel_rmse_ms", "Inlet velocity RMSE [m/s]"),
    ("vel_range_err_ms", "Velocity range error [m/s]"),
    ("high_vel_err_ms", "High velocity error [m/s]"),
    ("low_vel_err_ms", "Low velocity error [m/s]"),
    ("outlet_ratio", "Outlet ratio"),
];

fn metric_value(r: &MetricsRecord, key: &str) -> f64 {
    match key {
        "conc_rmse" => r.conc_rmse,
        "vel_rmse_ms" => r.vel_rmse_ms,
        "vel_range_err_ms" => r.vel_range_err_ms,
        "high_vel_err_ms" => r.high_vel_err_ms,
        "low_vel_err_ms" => r.low_vel_err_ms,
        "outlet_ratio" => r.outlet_ratio,
        _ => f64::NAN,
    }
}

/// Condition label on the category axis.
fn condition_label(r: &MetricsRecord) -> String {
    if let (Some(pw), Some(d)) = (r.pulse_width, r.duty_cycle) {
        return format!("pw{pw}@{:.0}%", d * 100.0);
    }
    if let Some(i0) = r.i0 {
        return format!("i0={i0:.0e}");
    }
    format!("{}Hz", r.grs_hz)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CtflowError + '_ {
    move |e| CtflowError::StoreIo {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Write one row per record. Floats use shortest round-trip formatting.
pub fn write_metrics_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    if let Some(first) = records.first() {
        writeln!(f, "# config_hash={}", first.config_hash).map_err(io_err(path))?;
    }
    writeln!(
        f,
        "grs_hz,theta0_deg,i0,duty_cycle,pulse_width,method,conc_rmse,vel_rmse_ms,vel_range_err_ms,high_vel_err_ms,low_vel_err_ms,outlet_ratio,config_hash"
    )
    .map_err(io_err(path))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.grs_hz,
            r.theta0_deg,
            opt(r.i0),
            opt(r.duty_cycle),
            r.pulse_width.map(|x| x.to_string()).unwrap_or_default(),
            r.method,
            r.conc_rmse,
            r.vel_rmse_ms,
            r.vel_range_err_ms,
            r.high_vel_err_ms,
            r.low_vel_err_ms,
            r.outlet_ratio,
            r.config_hash
        )
        .map_err(io_err(path))?;
    }
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(CtflowError::Store(format!(
                "metrics csv row has {} columns",
                cols.len()
            )));
        }
        let opt = |s: &str| -> Option<f64> {
            if s.is_empty() {
                None
            } else {
                s.parse().ok()
            }
        };
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| CtflowError::Store(format!("csv number {s}: {e}")))
        };
        out.push(MetricsRecord {
            grs_hz: parse(cols[0])?,
            theta0_deg: parse(cols[1])?,
            i0: opt(cols[2]),
            duty_cycle: opt(cols[3]),
            pulse_width: if cols[4].is_empty() {
                None
            } else {
                cols[4].parse().ok()
            },
            method: cols[5].to_string(),
            cnr: None,
            conc_rmse: parse(cols[6])?,
            vel_rmse_ms: parse(cols[7])?,
            vel_range_err_ms: parse(cols[8])?,
            high_vel_err_ms: parse(cols[9])?,
            low_vel_err_ms: parse(cols[10])?,
            outlet_ratio: parse(cols[11])?,
            config_hash: cols[12].to_string(),
        });
    }
    Ok(out)
}

struct BoxStats {
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

fn box_stats(values: &mut Vec<f64>) -> BoxStats {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let q = |p: f64| -> f64 {
        let idx = p * (values.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        let t = idx - lo as f64;
        values[lo] * (1.0 - t) + values[hi] * t
    };
    BoxStats {
        min: values[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: *values.last().expect("non-empty"),
    }
}

/// One boxplot per metric, grouped by condition and method. Returns the
/// written file paths (metric plots plus the CSV table).
pub fn emit_plots(records: &[MetricsRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(CtflowError::Metrics("no records to plot".into()));
    }
    crate::store::ensure_dir(out_dir)?;
    let mut written = Vec::new();
    let csv_path = out_dir.join("metrics.csv");
    write_metrics_csv(records, &csv_path)?;
    written.push(csv_path);

    for (key, title) in METRICS {
        // (condition, method) -> values, insertion-ordered by BTreeMap key
        let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for r in records {
            let v = metric_value(r, key);
            if v.is_finite() {
                groups
                    .entry((condition_label(r), r.method.clone()))
                    .or_default()
                    .push(v);
            }
        }
        if groups.is_empty() {
            eprintln!("warning: metric {key} has no finite values; plot omitted");
            continue;
        }
        let path = out_dir.join(format!("boxplot_{key}.svg"));
        let svg = render_boxplot_svg(&groups, title, &records[0].config_hash);
        std::fs::write(&path, svg).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn render_boxplot_svg(
    groups: &BTreeMap<(String, String), Vec<f64>>,
    title: &str,
    config_hash: &str,
) -> String {
    let (w, h) = (120 + groups.len() * 70, 360usize);
    let (top, bottom, left) = (40.0, 40.0, 70.0);
    let plot_h = h as f64 - top - bottom;
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for vals in groups.values() {
        for &v in vals {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if (hi - lo).abs() < 1e-12 {
        hi = lo + 1.0;
    }
    let pad = 0.08 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| top + (hi - v) / (hi - lo) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n<!-- config_hash={config_hash} -->\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        w / 2
    ));
    // y axis with 5 ticks
    s.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h
    ));
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let yy = y(v);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yy}\" x2=\"{left}\" y2=\"{yy}\" stroke=\"black\"/>\n",
            left - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\">{v:.3}</text>\n",
            left - 8.0,
            yy + 3.0
        ));
    }
    for (k, ((cond, method), vals)) in groups.iter().enumerate() {
        let mut vals = vals.clone();
        let st = box_stats(&mut vals);
        let cx = left + 40.0 + k as f64 * 70.0;
        let bw = 36.0;
        let color = if method == "imageflow" { "#4878cf" } else { "#d65f5f" };
        s.push_str(&format!(
            "<line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"black\"/>\n",
            y(st.min),
            y(st.max)
        ));
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{bw}\" height=\"{}\" fill=\"{color}\" fill-opacity=\"0.6\" stroke=\"black\"/>\n",
            cx - bw / 2.0,
            y(st.q3),
            (y(st.q1) - y(st.q3)).max(0.5)
        ));
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"2\"/>\n",
            cx - bw / 2.0,
            y(st.median),
            cx + bw / 2.0,
            y(st.median)
        ));
        s.push_str(&format!(
            "<text x=\"{cx}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{cond}</text>\n",
            top + plot_h + 14.0
        ));
        s.push_str(&format!(
            "<text x=\"{cx}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\">{method}</text>\n",
            top + plot_h + 26.0
        ));
    }
    s.push_str("</svg>\n");
    s
}
