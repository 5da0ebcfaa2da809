//! Writers for the experiment artifacts: pretty JSON, RFC 4180 CSV, SVG
//! charts and binary map files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use quasidim::{BeltramiField, QcMap};
use serde::Serialize;

use crate::experiments::SweepRow;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_map(path: &Path, map: &QcMap) -> Result<()> {
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    map.write_to(BufWriter::new(f))?;
    Ok(())
}

pub fn write_field(path: &Path, field: &BeltramiField) -> Result<()> {
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    field.write_to(BufWriter::new(f))?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Line chart of the mean estimated dimension against `k`, with the three
/// bound curves `1 + k`, `min(1 + 37 k^2, 2)` and `1 + k^2`.
pub fn sweep_chart(rows: &[SweepRow]) -> String {
    // one point per k: rows repeat for every rho and seed
    let mut by_k: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for r in rows {
        if !seen.insert((r.k.to_bits(), r.seed)) {
            continue;
        }
        let e = by_k.entry(r.k.to_bits()).or_insert((r.k, 0.0, 0.0, 0));
        e.1 += r.dim_box;
        e.2 += r.dim_cover;
        e.3 += 1;
    }
    let points: Vec<(f64, f64, f64)> = by_k
        .values()
        .map(|(k, b, c, n)| (*k, b / *n as f64, c / *n as f64))
        .collect();
    let k_max = points.iter().map(|p| p.0).fold(0.1, f64::max);
    let sx = |k: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * k / k_max;
    let sy = |d: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (d - 1.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    // axes and ticks
    let (x0, y0, x1, y1) = (sx(0.0), sy(1.0), sx(k_max), sy(2.0));
    let _ = writeln!(svg, r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" stroke="black" fill="none"/>"#);
    for t in 0..=5 {
        let d = 1.0 + 0.2 * t as f64;
        let y = sy(d);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{d:.1}</text>"#, x0 - 6.0, y + 4.0);
        let _ = writeln!(svg, r##"<path d="M{x0:.1} {y:.1} L{x1:.1} {y:.1}" stroke="#ddd"/>"##);
    }
    for t in 0..=4 {
        let k = k_max * t as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{k:.2}</text>"#, sx(k), y0 + 18.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">k</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0);
    let _ = writeln!(svg, r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">dimension</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);

    let curve = |f: &dyn Fn(f64) -> f64| {
        (0..=100)
            .map(|i| {
                let k = k_max * i as f64 / 100.0;
                format!("{}{:.1} {:.1}", if i == 0 { "M" } else { " L" }, sx(k), sy(f(k).min(2.0)))
            })
            .collect::<String>()
    };
    type Bound<'a> = (&'a str, &'a str, &'a dyn Fn(f64) -> f64);
    let bounds: [Bound; 3] = [
        ("1 + k", "#1f77b4", &|k| 1.0 + k),
        ("1 + 37 k^2", "#ff7f0e", &|k| 1.0 + 37.0 * k * k),
        ("1 + k^2", "#2ca02c", &|k| 1.0 + k * k),
    ];
    for (i, (label, color, f)) in bounds.iter().enumerate() {
        let _ = writeln!(svg, r#"<path d="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, curve(*f));
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<path d="M{:.1} {ly:.1} L{:.1} {ly:.1}" stroke="{color}" stroke-width="1.5"/>"#, x0 + 10.0, x0 + 30.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{label}</text>"#, x0 + 36.0, ly + 4.0);
    }
    let series: [(&str, &str, usize); 2] = [("box counting", "#d62728", 1), ("covering exponent", "#9467bd", 2)];
    for (i, (label, color, col)) in series.iter().enumerate() {
        let value = |p: &(f64, f64, f64)| if *col == 1 { p.1 } else { p.2 };
        let path: String = points
            .iter()
            .enumerate()
            .map(|(j, p)| format!("{}{:.1} {:.1}", if j == 0 { "M" } else { " L" }, sx(p.0), sy(value(p))))
            .collect();
        let _ = writeln!(svg, r#"<path d="{path}" stroke="{color}" stroke-width="2" fill="none"/>"#);
        for p in &points {
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(p.0), sy(value(p)));
        }
        let ly = MARGIN + 16.0 * (3 + i) as f64;
        let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{ly:.1}" r="3" fill="{color}"/>"#, x0 + 20.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{label}</text>"#, x0 + 36.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: f64, seed: u64, d: f64) -> SweepRow {
        SweepRow {
            k,
            rho: 0.9,
            dim_box: d,
            dim_cover: d,
            bound_1k: 1.0 + k,
            bound_37k2: (1.0 + 37.0 * k * k).min(2.0),
            bound_k2: 1.0 + k * k,
            n_grid: 256,
            seed,
            p_rho: 1.0,
            log_cover_sum: 0.0,
            log_c: 0.0,
        }
    }

    #[test]
    fn chart_is_well_formed_and_deterministic() {
        let rows = vec![row(0.0, 0, 1.0), row(0.1, 0, 1.01), row(0.1, 1, 1.02)];
        let a = sweep_chart(&rows);
        assert_eq!(a, sweep_chart(&rows));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<circle").count(), 2 * 2 + 2);
    }

    #[test]
    fn csv_has_the_documented_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_csv(&p, &[row(0.2, 3, 1.0)]).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with(
            "k,rho,dim_box,dim_cover,bound_1k,bound_37k2,bound_k2,n_grid,seed,p_rho,log_cover_sum,log_c\n"
        ));
    }
}
