//! CSV, JSON and SVG writers for spectra and response grids.
//!
//! Floats are written in shortest round-trip form, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use qspec_core::estimator::ResponseGrid;
use qspec_core::signal::{Spectrum, SpectrumKind};

pub fn kind_name(kind: SpectrumKind) -> &'static str {
    match kind {
        SpectrumKind::Absorption => "absorption",
        SpectrumKind::TwoD => "twod",
        SpectrumKind::LinearDichroism => "linear_dichroism",
        SpectrumKind::CircularDichroism => "circular_dichroism",
        SpectrumKind::MagneticCircularDichroism => "magnetic_circular_dichroism",
        SpectrumKind::Transform => "transform",
    }
}

fn axis_names(n: usize) -> Vec<String> {
    match n {
        1 => vec!["omega".into()],
        2 => vec!["omega1".into(), "omega3".into()],
        _ => (1..=n).map(|i| format!("omega{i}")).collect(),
    }
}

/// Coordinates of every flat index, row-major.
fn coordinates(axes: &[Vec<f64>]) -> impl Iterator<Item = Vec<f64>> + '_ {
    let total: usize = axes.iter().map(|a| a.len()).product();
    (0..total).map(move |mut flat| {
        let mut c = vec![0.0; axes.len()];
        for (i, a) in axes.iter().enumerate().rev() {
            c[i] = a[flat % a.len()];
            flat /= a.len();
        }
        c
    })
}

fn write_table<W: Write>(out: W, names: &[String], axes: &[Vec<f64>], re: impl Iterator<Item = (f64, f64)>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = names.to_vec();
    header.push("real".into());
    header.push("imag".into());
    w.write_record(&header)?;
    for (coords, (r, i)) in coordinates(axes).zip(re) {
        let mut row: Vec<String> = coords.iter().map(|v| v.to_string()).collect();
        row.push(r.to_string());
        row.push(i.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn spectrum_axes(s: &Spectrum) -> Vec<Vec<f64>> {
    s.axes.iter().map(|a| a.values()).collect()
}

pub fn spectrum_csv<W: Write>(s: &Spectrum, out: W) -> anyhow::Result<()> {
    write_table(out, &axis_names(s.axes.len()), &spectrum_axes(s), s.values.iter().map(|v| (v.re, v.im)))
}

fn grid_axes(r: &ResponseGrid) -> Vec<Vec<f64>> {
    r.axes.iter().map(|a| (0..a.count).map(|i| a.value(i)).collect()).collect()
}

pub fn response_csv<W: Write>(r: &ResponseGrid, out: W) -> anyhow::Result<()> {
    let names: Vec<String> = (1..=r.order).map(|i| format!("tau{i}")).collect();
    write_table(out, &names, &grid_axes(r), r.values.iter().map(|v| (v.re, v.im)))
}

#[derive(Serialize)]
struct AxisJson {
    name: String,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct TableJson {
    kind: String,
    axes: Vec<AxisJson>,
    shape: Vec<usize>,
    real: Vec<f64>,
    imag: Vec<f64>,
}

fn table_json(kind: &str, names: Vec<String>, axes: Vec<Vec<f64>>, values: &[qspec_core::C64]) -> TableJson {
    TableJson {
        kind: kind.into(),
        shape: axes.iter().map(|a| a.len()).collect(),
        axes: names.into_iter().zip(axes).map(|(name, values)| AxisJson { name, values }).collect(),
        real: values.iter().map(|v| v.re).collect(),
        imag: values.iter().map(|v| v.im).collect(),
    }
}

pub fn spectrum_json<W: Write>(s: &Spectrum, out: W) -> anyhow::Result<()> {
    let t = table_json(kind_name(s.kind), axis_names(s.axes.len()), spectrum_axes(s), &s.values);
    serde_json::to_writer_pretty(out, &t)?;
    Ok(())
}

pub fn response_json<W: Write>(r: &ResponseGrid, out: W) -> anyhow::Result<()> {
    let names = (1..=r.order).map(|i| format!("tau{i}")).collect();
    let t = table_json("response", names, grid_axes(r), &r.values);
    serde_json::to_writer_pretty(out, &t)?;
    Ok(())
}

/// Reads back the `real`/`imag` payload of a JSON table.
pub fn read_json_values(text: &str) -> anyhow::Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    #[derive(serde::Deserialize)]
    struct Back {
        shape: Vec<usize>,
        real: Vec<f64>,
        imag: Vec<f64>,
    }
    let b: Back = serde_json::from_str(text)?;
    Ok((b.shape, b.real, b.imag))
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    s
}

fn svg_frame(s: &mut String, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) {
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN / 2.0, H - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, (x0 + x1) / 2.0, H - 15.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{ylabel}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" text-anchor="middle">{:.3}</text>"#, y0 + 16.0, x.0);
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="middle">{:.3}</text>"#, y0 + 16.0, x.1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, x0 - 4.0, y0, y.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, x0 - 4.0, y1 + 10.0, y.1);
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() || hi - lo <= 0.0 {
        (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0)
    } else {
        (lo, hi)
    }
}

/// Line plot of a 1D spectrum or heat map (of `|value|`) of a 2D one.
pub fn spectrum_svg(s: &Spectrum) -> String {
    let title = kind_name(s.kind);
    let mut out = svg_open(title);
    let (px0, px1, py0, py1) = (MARGIN, W - MARGIN / 2.0, H - MARGIN, MARGIN);
    match s.axes.len() {
        1 => {
            let xs = s.axes[0].values();
            let complex = s.kind == SpectrumKind::Transform;
            let ys: Vec<f64> = s.values.iter().map(|v| if complex { v.norm() } else { v.re }).collect();
            let xr = range(xs.iter().copied());
            let yr = range(ys.iter().copied());
            svg_frame(&mut out, "frequency", if complex { "|S|" } else { "signal" }, xr, yr);
            let mut pts = String::new();
            for (x, y) in xs.iter().zip(&ys) {
                let px = px0 + (x - xr.0) / (xr.1 - xr.0) * (px1 - px0);
                let py = py0 - (y - yr.0) / (yr.1 - yr.0) * (py0 - py1);
                let _ = write!(pts, "{px:.2},{py:.2} ");
            }
            let _ = writeln!(out, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, pts.trim_end());
        }
        _ => {
            let (a1, a3) = (s.axes[0], s.axes[1]);
            let (n1, n3) = (a1.len(), a3.len());
            let mags: Vec<f64> = s.values.iter().map(|v| v.norm()).collect();
            let top = mags.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            svg_frame(&mut out, "omega3", "omega1", (a3.value(0), a3.value(n3 - 1)), (a1.value(0), a1.value(n1 - 1)));
            let (cw, ch) = ((px1 - px0) / n3 as f64, (py0 - py1) / n1 as f64);
            for i in 0..n1 {
                for j in 0..n3 {
                    let level = (255.0 * (1.0 - mags[i * n3 + j] / top)).round() as u8;
                    let x = px0 + j as f64 * cw;
                    let y = py0 - (i + 1) as f64 * ch;
                    let _ = writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({level},{level},255)"/>"#, cw + 0.05, ch + 0.05);
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Response magnitude along the first delay (other delays at index 0).
pub fn response_svg(r: &ResponseGrid) -> String {
    let mut out = svg_open("response");
    let line = r.line(0, &vec![0; r.order]);
    let xs: Vec<f64> = (0..r.axes[0].count).map(|i| r.axes[0].value(i)).collect();
    let xr = range(xs.iter().copied());
    let yr = range(line.iter().flat_map(|v| [v.re, v.im]));
    svg_frame(&mut out, "tau1", "R", xr, yr);
    for (part, colour) in [(0, "steelblue"), (1, "firebrick")] {
        let mut pts = String::new();
        for (x, v) in xs.iter().zip(&line) {
            let y = if part == 0 { v.re } else { v.im };
            let px = MARGIN + (x - xr.0) / (xr.1 - xr.0) * (W - 1.5 * MARGIN);
            let py = H - MARGIN - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * MARGIN);
            let _ = write!(pts, "{px:.2},{py:.2} ");
        }
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{colour}" points="{}"/>"#, pts.trim_end());
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use qspec_core::signal::SpectrumSpec;
    use qspec_core::C64;

    fn small() -> Spectrum {
        let spec = SpectrumSpec::new(1.0, 0.5).unwrap();
        let ax = spec.frequency_axis().unwrap();
        Spectrum {
            kind: SpectrumKind::TwoD,
            axes: vec![ax, ax],
            values: (0..16).map(|k| C64::new(k as f64, -(k as f64) / 2.0)).collect(),
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        spectrum_csv(&small(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "omega1,omega3,real,imag");
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[1], "-1,-1,0,-0");
        assert_eq!(lines[2], "-1,-0.5,1,-0.5");
        assert_eq!(lines[5], "-0.5,-1,4,-2");
    }

    #[test]
    fn json_round_trip() {
        let s = small();
        let mut buf = Vec::new();
        spectrum_json(&s, &mut buf).unwrap();
        let (shape, re, im) = read_json_values(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(shape, vec![4, 4]);
        for (k, v) in s.values.iter().enumerate() {
            assert_eq!((re[k], im[k]), (v.re, v.im));
        }
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = spectrum_svg(&small());
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 2 + 16);
    }
}
