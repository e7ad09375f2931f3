//! Artifacts: sweep curves, cluster profiles and PCA scatter plots as
//! JSON, CSV or hand-written SVG. Output is a pure function of the input.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::Partition;
use crate::linalg::Matrix;
use crate::metrics::KSweepReport;
use crate::pca::Projection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Svg => "svg",
        }
    }

    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| Error::invalid(format!("{} has no extension", path.display())))?
            .parse()
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            _ => Err(Error::invalid(format!("unknown output format `{s}`"))),
        }
    }
}

/// Ten-colour categorical palette; label `l` uses entry `l % 10`.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn label_color(label: usize) -> &'static str {
    PALETTE[label % PALETTE.len()]
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_string(records: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn emit_sweep(sweep: &KSweepReport, format: Format) -> Result<String> {
    if sweep.rows.is_empty() {
        return Err(Error::invalid("cannot emit an empty sweep"));
    }
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(sweep)? + "\n"),
        Format::Csv => {
            let mut records = vec![["k", "silhouette", "sse", "stability_mean", "stability_sd"]
                .map(String::from)
                .to_vec()];
            for r in &sweep.rows {
                records.push(vec![
                    r.k.to_string(),
                    r.silhouette.to_string(),
                    r.sse.to_string(),
                    opt(r.stability_mean),
                    opt(r.stability_sd),
                ]);
            }
            csv_string(records)
        }
        Format::Svg => Ok(sweep_svg(sweep)),
    }
}

/// Maps data coordinates into a pixel rectangle.
struct Panel {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Panel {
    fn new(left: f64, top: f64, width: f64, height: f64, xs: &[f64], ys: &[f64]) -> Self {
        Panel {
            left,
            top,
            width,
            height,
            x_range: padded_range(xs),
            y_range: padded_range(ys),
        }
    }

    fn x(&self, v: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.left + (v - lo) / (hi - lo) * self.width
    }

    fn y(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.top + self.height - (v - lo) / (hi - lo) * self.height
    }

    fn frame(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(
            out,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            l + w / 2.0,
            t - 10.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            l + w / 2.0,
            t + h + 34.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            l - 48.0,
            t + h / 2.0,
            l - 48.0,
            t + h / 2.0,
            escape(y_label)
        );
        for (v, anchor_y) in [(self.y_range.0, t + h), (self.y_range.1, t)] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
                l - 4.0,
                anchor_y + 3.0,
                tick(v)
            );
        }
    }
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span > 0.0 {
        0.05 * span
    } else {
        0.5f64.max(lo.abs() * 0.05)
    };
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    format!("{:.3}", v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn svg_open(width: f64, height: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    out
}

fn sweep_svg(sweep: &KSweepReport) -> String {
    let ks: Vec<f64> = sweep.rows.iter().map(|r| r.k as f64).collect();
    let sil: Vec<f64> = sweep.rows.iter().map(|r| r.silhouette).collect();
    let sse: Vec<f64> = sweep.rows.iter().map(|r| r.sse).collect();
    let mut out = svg_open(900.0, 380.0);
    let panels = [
        (
            Panel::new(80.0, 40.0, 340.0, 280.0, &ks, &sil),
            &sil,
            format!("Silhouette ({})", sweep.distance),
            "silhouette",
            "#1f77b4",
        ),
        (
            Panel::new(530.0, 40.0, 340.0, 280.0, &ks, &sse),
            &sse,
            "SSE (L2)".to_string(),
            "sse",
            "#d62728",
        ),
    ];
    for (panel, ys, title, class, color) in &panels {
        panel.frame(&mut out, title, "k", title);
        for (k, label) in [(Some(sweep.best_k), "best"), (sweep.elbow_k, "elbow")] {
            let Some(k) = k else { continue };
            let x = panel.x(k as f64);
            let dash = if label == "best" { "4 3" } else { "1 3" };
            let _ = writeln!(
                out,
                r##"<line class="marker-{label}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="{dash}"/>"##,
                panel.top,
                panel.top + panel.height
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10">{label} k={k}</text>"#,
                x + 3.0,
                panel.top + if label == "best" { 12.0 } else { 24.0 }
            );
        }
        let points: Vec<String> = ks
            .iter()
            .zip(ys.iter())
            .map(|(&k, &y)| format!("{:.2},{:.2}", panel.x(k), panel.y(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for (&k, &y) in ks.iter().zip(ys.iter()) {
            let _ = writeln!(
                out,
                r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"><title>k={k} {class}={y}</title></circle>"#,
                panel.x(k),
                panel.y(y)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{k}</text>"#,
                panel.x(k),
                panel.top + panel.height + 14.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub cluster: usize,
    pub size: usize,
    /// Share of all rows, in percent.
    pub pct: f64,
    /// Cluster mean of each feature in standardized units.
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<ProfileRow>,
}

/// Cluster sizes and per-feature cluster means of the standardized matrix
/// `z`, sorted by cluster id. Empty clusters are left out.
pub fn emit_profile(
    z: &Matrix,
    partition: &Partition,
    feature_names: &[String],
) -> Result<ProfileTable> {
    if partition.n() != z.rows() || feature_names.len() != z.cols() {
        return Err(Error::invalid(
            "partition, names and data dimensions differ",
        ));
    }
    let k = partition.k();
    let mut sums = Matrix::zeros(k, z.cols());
    let sizes = partition.sizes();
    for (row, &l) in z.row_iter().zip(partition.labels()) {
        for (s, v) in sums.row_mut(l).iter_mut().zip(row) {
            *s += v;
        }
    }
    let n = z.rows() as f64;
    let rows = (0..k)
        .filter(|&j| sizes[j] > 0)
        .map(|j| ProfileRow {
            cluster: j,
            size: sizes[j],
            pct: 100.0 * sizes[j] as f64 / n,
            centroid: sums.row(j).iter().map(|s| s / sizes[j] as f64).collect(),
        })
        .collect();
    Ok(ProfileTable {
        feature_names: feature_names.to_vec(),
        rows,
    })
}

impl ProfileTable {
    /// Header `cluster,size,pct,<feature...>`.
    pub fn to_csv(&self) -> Result<String> {
        let mut header = vec!["cluster".to_string(), "size".into(), "pct".into()];
        header.extend(self.feature_names.iter().cloned());
        let mut records = vec![header];
        for r in &self.rows {
            let mut rec = vec![r.cluster.to_string(), r.size.to_string(), r.pct.to_string()];
            rec.extend(r.centroid.iter().map(|v| v.to_string()));
            records.push(rec);
        }
        csv_string(records)
    }

    /// One line per cluster across the features.
    pub fn to_svg(&self) -> String {
        let d = self.feature_names.len();
        let xs: Vec<f64> = (0..d).map(|j| j as f64).collect();
        let mut ys: Vec<f64> = self
            .rows
            .iter()
            .flat_map(|r| r.centroid.iter().copied())
            .collect();
        ys.push(0.0);
        let width = 160.0 + 90.0 * d.max(2) as f64;
        let mut out = svg_open(width, 400.0);
        let panel = Panel::new(80.0, 40.0, width - 220.0, 280.0, &xs, &ys);
        panel.frame(
            &mut out,
            "Cluster profile",
            "feature",
            "mean (standardized)",
        );
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#bbb"/>"##,
            panel.left,
            panel.left + panel.width,
            y = panel.y(0.0)
        );
        for (j, name) in self.feature_names.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
                panel.x(j as f64),
                panel.top + panel.height + 14.0,
                escape(name)
            );
        }
        for (idx, r) in self.rows.iter().enumerate() {
            let color = label_color(r.cluster);
            let points: Vec<String> = r
                .centroid
                .iter()
                .enumerate()
                .map(|(j, &v)| format!("{:.2},{:.2}", panel.x(j as f64), panel.y(v)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="cluster-{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                r.cluster,
                points.join(" ")
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">cluster {} (n={}, {:.1}%)</text>"#,
                panel.left + panel.width + 10.0,
                panel.top + 14.0 + 16.0 * idx as f64,
                r.cluster,
                r.size,
                r.pct
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Scatter points as CSV (`pc1,pc2[,pc3],label`) or SVG. A 3-D projection is
/// drawn as three pairwise panels.
pub fn emit_scatter(projection: &Projection, format: Format) -> Result<String> {
    let m = projection.dims();
    if !(m == 2 || m == 3) {
        return Err(Error::invalid(format!(
            "scatter needs 2 or 3 dimensions, got {m}"
        )));
    }
    if projection.labels.len() != projection.coords.rows() {
        return Err(Error::invalid(
            "projection labels and coordinates differ in length",
        ));
    }
    match format {
        Format::Csv => {
            let mut header: Vec<String> = (1..=m).map(|j| format!("pc{j}")).collect();
            header.push("label".into());
            let mut records = vec![header];
            for (row, l) in projection.coords.row_iter().zip(&projection.labels) {
                let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                rec.push(l.to_string());
                records.push(rec);
            }
            csv_string(records)
        }
        Format::Svg => Ok(scatter_svg(projection)),
        Format::Json => Err(Error::invalid("scatter plots are emitted as csv or svg")),
    }
}

fn scatter_svg(projection: &Projection) -> String {
    let pairs: &[(usize, usize)] = if projection.dims() == 2 {
        &[(0, 1)]
    } else {
        &[(0, 1), (0, 2), (1, 2)]
    };
    let size = 360.0;
    let width = 40.0 + pairs.len() as f64 * (size + 90.0);
    let mut out = svg_open(width, size + 110.0);
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let xs = projection.coords.column(a);
        let ys = projection.coords.column(b);
        let panel = Panel::new(80.0 + p as f64 * (size + 90.0), 40.0, size, size, &xs, &ys);
        let ratio = |j: usize| {
            projection
                .explained_ratio
                .get(j)
                .map(|r| format!(" ({:.1}%)", 100.0 * r))
                .unwrap_or_default()
        };
        panel.frame(
            &mut out,
            &format!("PC{} vs PC{}", a + 1, b + 1),
            &format!("PC{}{}", a + 1, ratio(a)),
            &format!("PC{}{}", b + 1, ratio(b)),
        );
        for ((x, y), &l) in xs.iter().zip(&ys).zip(&projection.labels) {
            let _ = writeln!(
                out,
                r#"<circle class="c{l}" cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.7"/>"#,
                panel.x(*x),
                panel.y(*y),
                label_color(l)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::Io(e)
    })
}
