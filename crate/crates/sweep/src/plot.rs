//! Self-contained SVG line charts of sweep records.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Method;
use crate::error::{Result, SweepError};
use crate::record::SweepRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

fn color(method: Method) -> &'static str {
    match method {
        Method::Full => "#d62728",
        Method::RandomTrunc => "#7f7f7f",
        Method::LieTrunc => "#1f77b4",
    }
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else if v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Expands a degenerate range so single points still get an axis.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else if lo == 0.0 {
        (-1.0, 1.0)
    } else {
        (lo - 0.5 * lo.abs(), hi + 0.5 * hi.abs())
    }
}

impl Chart {
    fn transform(&self, y: f64) -> Option<f64> {
        if self.log_y {
            (y > 0.0 && y.is_finite()).then(|| y.log10())
        } else {
            y.is_finite().then_some(y)
        }
    }

    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().filter_map(|&(x, y)| self.transform(y).map(|ty| (x, ty))))
            .collect();
        let (x0, x1) = padded(
            pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        );
        let (mut y0, mut y1) = padded(
            pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        );
        if pts.is_empty() {
            (y0, y1) = (0.0, 1.0);
        }
        if self.log_y {
            y0 = y0.floor();
            y1 = y1.ceil().max(y0 + 1.0);
        } else {
            let pad = 0.05 * (y1 - y0);
            y0 -= pad;
            y1 += pad;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
        );

        // y ticks
        let y_ticks: Vec<f64> = if self.log_y {
            let step = ((y1 - y0) / 8.0).ceil().max(1.0);
            let mut v = Vec::new();
            let mut t = y0;
            while t <= y1 + 1e-9 {
                v.push(t);
                t += step;
            }
            v
        } else {
            (0..=5).map(|i| y0 + (y1 - y0) * i as f64 / 5.0).collect()
        };
        for t in y_ticks {
            let y = sy(t);
            let label = if self.log_y { format!("1e{t:.0}") } else { fmt_tick(t) };
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
        }
        // x ticks at the distinct x values, or five even ticks when there are many
        let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if xs.len() > 12 {
            xs = (0..=5).map(|i| x0 + (x1 - x0) * i as f64 / 5.0).collect();
        }
        for t in xs {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 20.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let coords: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter_map(|&(x, y)| self.transform(y).map(|ty| (sx(x), sy(ty))))
                .collect();
            if coords.len() > 1 {
                let path: Vec<String> = coords.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                    series.color,
                    path.join(" ")
                );
            }
            for (x, y) in &coords {
                let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3.5" fill="{}"/>"#, series.color);
            }
            let ly = TOP + 10.0 + 20.0 * k as f64;
            let lx = LEFT + pw + 15.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                series.color,
                lx + 26.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        for (k, note) in self.notes.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11">{}</text>"#,
                LEFT + pw + 15.0,
                TOP + 20.0 * (self.series.len() as f64 + 1.0) + 16.0 * k as f64,
                escape(note)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn methods_present(records: &[SweepRecord]) -> Vec<Method> {
    let mut m: Vec<Method> = records.iter().map(|r| r.method).collect();
    m.sort();
    m.dedup();
    m
}

fn per_method(records: &[SweepRecord], f: impl Fn(&SweepRecord) -> f64) -> Vec<Series> {
    methods_present(records)
        .into_iter()
        .map(|m| {
            let mut points: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.method == m)
                .map(|r| (r.n as f64, f(r)))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                name: m.to_string(),
                color: color(m).to_string(),
                points,
            }
        })
        .collect()
}

fn max_min_ratio(points: &[(f64, f64)]) -> f64 {
    let ys = points.iter().map(|p| p.1);
    let hi = ys.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = ys.fold(f64::INFINITY, f64::min);
    hi / lo
}

/// The five sweep charts, keyed by file name.
pub fn charts(records: &[SweepRecord]) -> Result<Vec<(String, Chart)>> {
    if records.is_empty() {
        return Err(SweepError::EmptyRecords);
    }
    let chart = |title: &str, y_label: &str, log_y: bool, series: Vec<Series>| Chart {
        title: title.into(),
        x_label: "qubits n".into(),
        y_label: y_label.into(),
        log_y,
        series,
        notes: Vec::new(),
    };
    let variance = chart("Gradient variance", "mean Var(dL/dθ_k)", true, per_method(records, |r| r.var_grad_mean));
    let deff = chart("Effective dimension", "d_eff", false, per_method(records, |r| r.d_eff));
    let mut product = chart(
        "Gradient variance times effective dimension",
        "Var · d_eff",
        true,
        per_method(records, |r| r.product_var_deff),
    );
    product.notes = product
        .series
        .iter()
        .map(|s| format!("{}: max/min {:.3}", s.name, max_min_ratio(&s.points)))
        .collect();
    let loss = chart("Final task loss", "loss after optimization", false, per_method(records, |r| r.loss_final));

    let n_max = records.iter().map(|r| r.n).max().expect("nonempty");
    let spectra: Vec<Series> = methods_present(records)
        .into_iter()
        .filter_map(|m| {
            let r = records.iter().find(|r| r.method == m && r.n == n_max)?;
            Some(Series {
                name: m.to_string(),
                color: color(m).to_string(),
                points: r.spectrum.iter().enumerate().map(|(i, &l)| (i as f64, l)).collect(),
            })
        })
        .collect();
    let spectrum = Chart {
        title: format!("Metric spectrum at n = {n_max}"),
        x_label: "eigenvalue index".into(),
        y_label: "eigenvalue".into(),
        log_y: true,
        series: spectra,
        notes: Vec::new(),
    };
    Ok(vec![
        ("variance_vs_n.svg".into(), variance),
        ("deff_vs_n.svg".into(), deff),
        ("product_vs_n.svg".into(), product),
        ("spectrum.svg".into(), spectrum),
        ("loss_vs_n.svg".into(), loss),
    ])
}

pub fn emit_plots(records: &[SweepRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let charts = charts(records)?;
    fs::create_dir_all(out_dir).map_err(|e| SweepError::io(out_dir, e))?;
    let mut written = Vec::with_capacity(charts.len());
    for (name, chart) in charts {
        let path = out_dir.join(name);
        fs::write(&path, chart.render()).map_err(|e| SweepError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, method: Method, v: f64) -> SweepRecord {
        SweepRecord {
            n,
            method,
            seed: 0,
            d_eff: 2.0 * n as f64,
            rank: 2 * n,
            kappa: 3.0,
            var_grad_mean: v,
            var_grad_first: v,
            product_var_deff: v * 2.0 * n as f64,
            loss_final: -0.5,
            closure_dim: 10,
            truncated_dim: 4,
            closure_defect: 0.0,
            closure_converged: true,
            n_params: 4,
            wall_time: 0.0,
            spectrum: vec![1.0, 0.5, 1e-3],
            loss_trajectory: vec![],
            jacobian_mean_sq_opnorm: 1.0,
        }
    }

    #[test]
    fn empty_records_error() {
        assert!(matches!(charts(&[]), Err(SweepError::EmptyRecords)));
    }

    #[test]
    fn single_record_still_renders() {
        let c = charts(&[record(2, Method::Full, 0.3)]).unwrap();
        assert_eq!(c.len(), 5);
        for (_, chart) in &c {
            let svg = chart.render();
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(svg.contains("<circle"));
            assert!(!svg.contains("NaN"));
        }
    }

    #[test]
    fn product_chart_annotates_ratio() {
        let recs = vec![record(2, Method::LieTrunc, 0.5), record(3, Method::LieTrunc, 0.25)];
        let c = charts(&recs).unwrap();
        let product = &c[2].1;
        assert_eq!(product.notes, vec!["lie_trunc: max/min 1.333".to_string()]);
    }

    #[test]
    fn zero_values_are_skipped_on_log_axes() {
        let recs = vec![record(2, Method::RandomTrunc, 0.0), record(3, Method::RandomTrunc, 1e-3)];
        let svg = charts(&recs).unwrap()[0].1.render();
        assert_eq!(svg.matches("<circle").count(), 1);
    }
}
