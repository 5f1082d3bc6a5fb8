//! CSV, SVG and field-dump writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bloch_nitsche::mesh::Topology;
use bloch_nitsche::workflows::{BandInterval, ConvergenceTable, EdgeSweep, KSample};
use bloch_nitsche::{BandStructure64, Cx, Discretization64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed band table: {0}")]
    Malformed(String),
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    fs::write(path, text).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Band table as CSV: `sample, kx, ky | kpar, label, E1..Enev`.
///
/// Values use the shortest round-trip representation, so reading the table
/// back reproduces the eigenvalues bit for bit.
pub fn bands_csv(bs: &BandStructure64) -> String {
    let dims = bs.samples.first().map_or(2, |s| s.coords.len());
    let mut out = String::from("sample");
    if dims == 1 {
        out.push_str(",kpar");
    } else {
        out.push_str(",kx,ky");
    }
    out.push_str(",label");
    for m in 1..=bs.nev() {
        let _ = write!(out, ",E{m}");
    }
    out.push('\n');
    for (i, (s, row)) in bs.samples.iter().zip(&bs.bands).enumerate() {
        let _ = write!(out, "{i}");
        for c in &s.coords {
            let _ = write!(out, ",{c}");
        }
        let _ = write!(out, ",{}", s.label);
        for e in row {
            let _ = write!(out, ",{e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_bands_csv(bs: &BandStructure64, path: &Path) -> Result<(), OutputError> {
    write_text(path, &bands_csv(bs))
}

/// Inverse of [`bands_csv`]; `arc` is rebuilt from the coordinates.
pub fn parse_bands_csv(text: &str) -> Result<BandStructure64, OutputError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| OutputError::Malformed("empty table".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let dims = match cols.get(1) {
        Some(&"kpar") => 1,
        Some(&"kx") => 2,
        _ => return Err(OutputError::Malformed(format!("unexpected header `{header}`"))),
    };
    let nev = cols.len() - 2 - dims;
    let num = |s: &str| -> Result<f64, OutputError> {
        s.parse()
            .map_err(|_| OutputError::Malformed(format!("cannot parse `{s}`")))
    };
    let mut samples: Vec<KSample<f64>> = Vec::new();
    let mut bands = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(OutputError::Malformed(format!("row `{line}` has {} fields", f.len())));
        }
        let coords = f[1..=dims].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
        let arc = match (dims, samples.last()) {
            (1, _) => coords[0],
            (_, None) => 0.0,
            (_, Some(prev)) => {
                prev.arc + ((coords[0] - prev.coords[0]).powi(2) + (coords[1] - prev.coords[1]).powi(2)).sqrt()
            }
        };
        samples.push(KSample {
            coords,
            arc,
            label: f[dims + 1].to_string(),
        });
        bands.push(f[dims + 2..].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?);
    }
    debug_assert!(bands.iter().all(|r: &Vec<f64>| r.len() == nev));
    Ok(BandStructure64 {
        samples,
        bands,
        metadata: Vec::new(),
    })
}

pub fn read_bands_csv(path: &Path) -> Result<BandStructure64, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_bands_csv(&text)
}

/// Per-mode classification of an edge sweep.
pub fn edge_modes_csv(sw: &EdgeSweep<f64>) -> String {
    let mut out = String::from("sample,kpar,mode,E,center,boundary,middle,tag,in_gap\n");
    for modes in &sw.modes {
        for m in modes {
            let l = m.localization;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                m.sample,
                sw.bands.samples[m.sample].coords[0],
                m.mode + 1,
                m.eigenvalue,
                l.center,
                l.boundary,
                l.middle,
                m.tag.as_str(),
                m.in_gap
            );
        }
    }
    out
}

/// Union envelope per sample and band.
pub fn envelope_csv(sw: &EdgeSweep<f64>) -> String {
    let mut out = String::from("sample,kpar,band,min,max\n");
    for (i, env) in sw.envelopes.iter().enumerate() {
        for (b, iv) in env.union.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{}",
                sw.bands.samples[i].coords[0],
                b + 1,
                iv.min,
                iv.max
            );
        }
    }
    out
}

/// Eigenvalues per mesh, errors per refinement and fitted slopes.
pub fn convergence_csv(t: &ConvergenceTable<f64>) -> String {
    let nev = t.slopes.len();
    let mut out = String::from("N,h");
    for m in 1..=nev {
        let _ = write!(out, ",E{m}");
    }
    for m in 1..=nev {
        let _ = write!(out, ",err{m}");
    }
    out.push('\n');
    for (j, n) in t.n_list.iter().enumerate() {
        let _ = write!(out, "{n},{}", 1.0 / *n as f64);
        for e in &t.eigenvalues[j] {
            let _ = write!(out, ",{e}");
        }
        for m in 0..nev {
            match t.errors.get(j) {
                Some(row) => {
                    let _ = write!(out, ",{}", row[m]);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out.push_str("slope,");
    for _ in 0..nev {
        out.push(',');
    }
    for s in &t.slopes {
        let _ = write!(out, ",{s}");
    }
    out.push('\n');
    out
}

/// Extra layers drawn under or over the band polylines.
#[derive(Clone, Debug, Default)]
pub struct SvgLayers<'a> {
    /// `envelope[s][b]`: shaded band intervals per sample.
    pub envelope: Option<&'a [Vec<BandInterval<f64>>]>,
    /// `(arc, eigenvalue)` of modes drawn with edge markers.
    pub edge_marks: &'a [(f64, f64)],
    pub title: &'a str,
}

const W: f64 = 800.0;
const H: f64 = 500.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

/// Rounds an axis span to 1, 2 or 5 times a power of ten.
fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Band diagram; output depends only on the inputs.
pub fn render_bands_svg(bs: &BandStructure64, layers: &SvgLayers) -> String {
    let xs: Vec<f64> = bs.samples.iter().map(|s| s.arc).collect();
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for v in bs.bands.iter().flatten() {
        ymin = ymin.min(*v);
        ymax = ymax.max(*v);
    }
    if let Some(env) = layers.envelope {
        for iv in env.iter().flatten() {
            ymin = ymin.min(iv.min);
            ymax = ymax.max(iv.max);
        }
    }
    if !ymin.is_finite() {
        ymin = 0.0;
        ymax = 1.0;
    }
    ymin = ymin.min(0.0);
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let (xmin, xmax) = match (xs.first(), xs.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        (Some(a), _) => (*a, *a + 1.0),
        _ => (0.0, 1.0),
    };
    let px = |x: f64| ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if !layers.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle">{}</text>"#,
            W / 2.0,
            layers.title
        );
    }
    if let Some(env) = layers.envelope {
        let nb = env.iter().map(|r| r.len()).min().unwrap_or(0);
        for b in 0..nb {
            let mut pts = String::new();
            for (x, row) in xs.iter().zip(env) {
                let _ = write!(pts, "{:.2},{:.2} ", px(*x), py(row[b].max));
            }
            for (x, row) in xs.iter().zip(env).rev() {
                let _ = write!(pts, "{:.2},{:.2} ", px(*x), py(row[b].min));
            }
            let _ = writeln!(
                s,
                r##"<polygon class="envelope" points="{}" fill="#bbbbbb" fill-opacity="0.5" stroke="none"/>"##,
                pts.trim_end()
            );
        }
    }
    // Axes and ticks.
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        H - MB,
        W - MR,
        H - MB
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{:.2}" stroke="black"/>"#,
        H - MB
    );
    let step = nice_step(ymax - ymin, 6);
    let mut t = (ymin / step).ceil() * step;
    while t <= ymax + 1e-9 * step {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{ML}" y2="{y:.2}" stroke="black"/>"#,
            ML - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ML - 8.0,
            y + 4.0,
            trim_float(t)
        );
        t += step;
    }
    let labelled: Vec<(f64, &str)> = bs
        .samples
        .iter()
        .filter(|k| !k.label.is_empty())
        .map(|k| (k.arc, k.label.as_str()))
        .collect();
    if labelled.is_empty() {
        let step = nice_step(xmax - xmin, 6);
        let mut t = (xmin / step).ceil() * step;
        while t <= xmax + 1e-9 * step {
            x_tick(&mut s, px(t), &trim_float(t));
            t += step;
        }
    } else {
        for (x, label) in labelled {
            x_tick(&mut s, px(x), label);
        }
    }
    for m in 0..bs.nev() {
        let mut pts = String::new();
        for (x, row) in xs.iter().zip(&bs.bands) {
            let _ = write!(pts, "{:.2},{:.2} ", px(*x), py(row[m]));
        }
        let _ = writeln!(
            s,
            r#"<polyline class="band" points="{}" fill="none" stroke="black" stroke-width="1.2"/>"#,
            pts.trim_end()
        );
    }
    for (x, y) in layers.edge_marks {
        let _ = writeln!(
            s,
            r##"<circle class="edge-mode" cx="{:.2}" cy="{:.2}" r="3.5" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
            px(*x),
            py(*y)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn x_tick(s: &mut String, x: f64, label: &str) {
    let _ = writeln!(
        s,
        r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
        H - MB,
        H - MB + 5.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
        H - MB + 20.0
    );
}

fn trim_float(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

/// `|psi|` at the centers of a `grid_res x grid_res` grid in lattice
/// coordinates over the whole domain, as `(x, y, |psi|)` rows.
pub fn mode_field_samples(disc: &Discretization64, v: &[Cx<f64>], grid_res: usize) -> Vec<(f64, f64, f64)> {
    let (t2_lo, t2_span) = tau2_extent(disc);
    let g = grid_res as f64;
    let mut out = Vec::with_capacity(grid_res * grid_res);
    for j in 0..grid_res {
        let t2 = t2_lo + (j as f64 + 0.5) / g * t2_span;
        for i in 0..grid_res {
            let t1 = (i as f64 + 0.5) / g;
            let p = disc.mesh.lattice.from_fractional(t1, t2);
            let val = disc.evaluate_at(v, p).map_or(0.0, |c| c.norm());
            out.push((p.x, p.y, val));
        }
    }
    out
}

fn tau2_extent(disc: &Discretization64) -> (f64, f64) {
    match disc.mesh.topology {
        Topology::Torus => (0.0, 1.0),
        Topology::Cylinder { l } => (-(l as f64), 2.0 * l as f64),
    }
}

/// Physical area of one sample of [`mode_field_samples`].
pub fn mode_field_cell_area(disc: &Discretization64, grid_res: usize) -> f64 {
    let (_, span) = tau2_extent(disc);
    disc.mesh.lattice.cell_area * span / (grid_res * grid_res) as f64
}

pub fn mode_field_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("x,y,abs_psi\n");
    for (x, y, a) in rows {
        let _ = writeln!(out, "{x},{y},{a}");
    }
    out
}

/// Writes `gridRes^2` rows of `(x, y, |psi|)` for one mode.
pub fn dump_mode_field(
    disc: &Discretization64,
    v: &[Cx<f64>],
    grid_res: usize,
    path: &Path,
) -> Result<(), OutputError> {
    write_text(path, &mode_field_csv(&mode_field_samples(disc, v, grid_res)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(10.0, 5), 2.0);
        assert_eq!(nice_step(1.0, 6), 0.2);
        assert_eq!(nice_step(37.0, 6), 5.0);
    }

    #[test]
    fn trims_rounding_noise() {
        assert_eq!(trim_float(0.30000000000000004), "0.3");
        assert_eq!(trim_float(-0.0), "0");
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(parse_bands_csv("").is_err());
        assert!(parse_bands_csv("sample,foo,label,E1\n").is_err());
        assert!(parse_bands_csv("sample,kpar,label,E1\n0,1.0,,x\n").is_err());
        assert!(parse_bands_csv("sample,kpar,label,E1\n0,1.0,\n").is_err());
    }
}
