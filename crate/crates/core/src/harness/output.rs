use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::simulate::EcdfTable;
use crate::metrics::MetricsRecord;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "snr_db",
    "n_pilots",
    "nmse_emp",
    "nmse_floor",
    "nmse_noise",
    "se_bps_hz",
    "trials",
];

/// Rounds to 9 significant digits and prints the shortest exponent form
/// that reads back to the rounded value.
pub fn format_float(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn sorted(records: &[MetricsRecord]) -> Vec<&MetricsRecord> {
    let mut rows: Vec<&MetricsRecord> = records.iter().collect();
    rows.sort_by(|a, b| {
        a.method
            .as_str()
            .cmp(b.method.as_str())
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.n_pilots.cmp(&b.n_pilots))
    });
    rows
}

/// CSV text, rows ordered by method tag, SNR and pilot count.
pub fn render_csv(records: &[MetricsRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<memory>".into(),
        source: e,
    };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in sorted(records) {
        let a = r.nmse_analytic;
        w.write_record([
            r.method.as_str().to_string(),
            format_float(r.snr_db),
            r.n_pilots.to_string(),
            opt(r.nmse_empirical),
            opt(a.map(|b| b.subspace_floor)),
            opt(a.map(|b| b.noise_term)),
            opt(r.spectral_efficiency),
            r.trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes records as CSV. An empty record list is an error and leaves no file.
pub fn emit_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no records to write to {}",
            path.display()
        )));
    }
    write_file(path, &render_csv(records)?)
}

/// Number of quantile points written per ECDF table.
pub const ECDF_POINTS: usize = 200;

/// ECDF tables as `method,snr_db,snr_out,fraction`, sampled at
/// [`ECDF_POINTS`] evenly spaced fractions.
pub fn emit_ecdf_csv(tables: &[EcdfTable], path: &Path) -> Result<()> {
    if tables.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no ECDF tables to write to {}",
            path.display()
        )));
    }
    let mut text = String::from("method,snr_db,snr_out,fraction\n");
    let mut order: Vec<&EcdfTable> = tables.iter().collect();
    order.sort_by(|a, b| {
        a.method
            .as_str()
            .cmp(b.method.as_str())
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    for t in order {
        for i in 1..=ECDF_POINTS {
            let p = i as f64 / ECDF_POINTS as f64;
            let x = t.ecdf.quantile(p);
            writeln!(
                text,
                "{},{},{},{}",
                t.method,
                format_float(t.snr_db),
                format_float(x),
                format_float(t.ecdf.eval(x))
            )
            .expect("writing to a String");
        }
    }
    write_file(path, &text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMetric {
    /// `10·log₁₀(NMSE)` against SNR.
    NmseDb,
    /// SE against SNR.
    SpectralEfficiency,
    /// SE against pilot count, one line per (method, SNR).
    SeVsPilots,
    /// `10·log₁₀(NMSE)` against pilot count.
    NmseVsPilots,
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Minimal SVG line chart of the records.
pub fn emit_plot(records: &[MetricsRecord], metric: PlotMetric, path: &Path) -> Result<()> {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in sorted(records) {
        let (label, x) = match metric {
            PlotMetric::NmseDb | PlotMetric::SpectralEfficiency => (r.method.to_string(), r.snr_db),
            PlotMetric::SeVsPilots | PlotMetric::NmseVsPilots => {
                (format!("{} @ {} dB", r.method, r.snr_db), r.n_pilots as f64)
            }
        };
        let y = match metric {
            PlotMetric::NmseDb | PlotMetric::NmseVsPilots => {
                r.nmse_empirical.map(|v| 10.0 * v.log10())
            }
            _ => r.spectral_efficiency,
        };
        let Some(y) = y.filter(|y| y.is_finite()) else {
            continue;
        };
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push((x, y)),
            None => series.push((label, vec![(x, y)])),
        }
    }
    if series.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "nothing to plot in {}",
            path.display()
        )));
    }
    for (_, pts) in series.iter_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let (x_label, y_label) = match metric {
        PlotMetric::NmseDb => ("SNR [dB]", "NMSE [dB]"),
        PlotMetric::SpectralEfficiency => ("SNR [dB]", "SE [bit/s/Hz]"),
        PlotMetric::SeVsPilots => ("pilots", "SE [bit/s/Hz]"),
        PlotMetric::NmseVsPilots => ("pilots", "NMSE [dB]"),
    };
    write_file(path, &svg(&series, x_label, y_label))
}

fn svg(series: &[(String, Vec<(f64, f64)>)], x_label: &str, y_label: &str) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<polyline points="{m},{m} {m},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = h - m,
        r = w - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{c}" text-anchor="middle" transform="rotate(-90 15 {c})">{y_label}</text>"#,
        c = h / 2.0
    );
    for (v, pos) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(
            s,
            r#"<text x="{pos:.1}" y="{}" text-anchor="middle">{v:.3}</text>"#,
            h - m + 16.0
        );
    }
    for (v, pos) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{pos:.1}" text-anchor="end">{v:.3}</text>"#,
            m - 4.0
        );
    }
    for (i, (label, p)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = p
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            w - m - 120.0,
            m + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}
