//! Static SVG figures from the CSV reports of a run directory.

use super::run::{refresh_inventory, MANIFEST};
use crate::error::{Error, Result};
use crate::ns::fit_slope;
use crate::numerics::Field2D;
use std::fmt::Write as _;
use std::path::Path;

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, Default)]
pub struct PlotReport {
    pub written: Vec<String>,
    /// Report kinds that were not found.
    pub missing: Vec<String>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            lo -= 1.0;
            hi += 1.0;
        }
        Self { lo, hi, log }
    }

    fn map(&self, v: f64, a: f64, b: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        a + (t - self.lo) / (self.hi - self.lo) * (b - a)
    }

    fn label(&self, t: f64) -> String {
        let v = self.lo + t * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.2}")
        } else {
            format!("{v:.3e}")
        }
    }
}

fn frame(title: &str, xl: &str, yl: &str, ax: &Axis, ay: &Axis) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n\
         <rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W / 2.0,
        W - 2.0 * M,
        H - 2.0 * M
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let x = M + t * (W - 2.0 * M);
        let y = H - M - t * (H - 2.0 * M);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{}</text>", H - M + 14.0, ax.label(t));
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"10\" text-anchor=\"end\">{}</text>", M - 4.0, ay.label(t));
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{xl}</text>", W / 2.0, H - 16.0);
    let _ = writeln!(s, "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{yl}</text>", H / 2.0, H / 2.0);
    s
}

/// Polyline plot of several series; `note` is printed in the upper left corner.
pub fn line_plot(title: &str, xl: &str, yl: &str, series: &[(String, Vec<(f64, f64)>)], log: bool, note: Option<&str>) -> String {
    let ax = Axis::new(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)), log);
    let ay = Axis::new(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)), log);
    let mut s = frame(title, xl, yl, &ax, &ay);
    for (k, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite() && (!log || (p.0 > 0.0 && p.1 > 0.0)))
            .map(|p| format!("{:.2},{:.2}", ax.map(p.0, M, W - M), ay.map(p.1, H - M, M)))
            .collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        if log {
            for p in &path {
                let (x, y) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{c}\"/>");
            }
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"{c}\">{name}</text>", W - M - 90.0, M + 16.0 + 14.0 * k as f64);
    }
    if let Some(n) = note {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{n}</text>", M + 8.0, M + 18.0);
    }
    s.push_str("</svg>\n");
    s
}

fn color(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Diverging heatmap, averaged down to at most 64 cells per direction.
pub fn heatmap(title: &str, f: &Field2D) -> String {
    let (nx, ny) = (f.nx() + 1, f.n2() + 1);
    let (cx, cy) = (nx.min(64), ny.min(64));
    let mut cells = vec![0.0; cx * cy];
    for (c, cell) in cells.iter_mut().enumerate() {
        let (a, b) = (c % cx, c / cx);
        let (i0, i1) = (a * nx / cx, ((a + 1) * nx / cx).max(a * nx / cx + 1));
        let (j0, j1) = (b * ny / cy, ((b + 1) * ny / cy).max(b * ny / cy + 1));
        let mut sum = 0.0;
        for j in j0..j1 {
            for i in i0..i1 {
                sum += f.at(i, j);
            }
        }
        *cell = sum / ((i1 - i0) * (j1 - j0)) as f64;
    }
    let scale = cells.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let ax = Axis::new([0.0, f.grid.length()].into_iter(), false);
    let ay = Axis::new([f.grid.coord2(0), f.grid.coord2(f.n2())].into_iter(), false);
    let mut s = frame(&format!("{title} (max |.| = {scale:.3e})"), "x", "y", &ax, &ay);
    let (dw, dh) = ((W - 2.0 * M) / cx as f64, (H - 2.0 * M) / cy as f64);
    for (c, v) in cells.iter().enumerate() {
        let (a, b) = (c % cx, c / cx);
        let t = if scale > 0.0 { v / scale } else { 0.0 };
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            M + a as f64 * dw,
            H - M - (b + 1) as f64 * dh,
            dw + 0.05,
            dh + 0.05,
            color(t)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Numeric rows of a CSV with a header line; `#` lines are skipped.
fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?.split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number in `{l}`")))).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((header, rows))
}

/// Slope text shown on the rate figure.
pub fn slope_annotation(slope: f64) -> String {
    if slope.is_finite() {
        format!("fitted slope = {slope:.9}")
    } else {
        "fitted slope = n/a (errors vanish)".into()
    }
}

pub fn rate_plot(csv: &str) -> Result<(String, f64)> {
    let (_, rows) = read_table(csv)?;
    let eps: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let err: Vec<f64> = rows.iter().map(|r| r[1] + r[2]).collect();
    let slope = fit_slope(&eps, &err);
    let series = vec![("sup|u-mu| + sup|v|".to_string(), eps.iter().copied().zip(err.iter().copied()).collect())];
    Ok((line_plot("rate study", "epsilon", "sup error", &series, true, Some(&slope_annotation(slope))), slope))
}

fn with_prefix(dir: &Path, prefix: &str) -> Result<Vec<(String, String)>> {
    let mut v: Vec<(String, String)> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with(prefix) && n.ends_with(".csv"))
        .map(|n| {
            let tag = n[prefix.len()..n.len() - 4].to_string();
            (n, tag)
        })
        .collect();
    v.sort();
    Ok(v)
}

/// Write every figure whose source report is present in `dir`.
pub fn plot(dir: &Path) -> Result<PlotReport> {
    if !dir.is_dir() {
        return Err(Error::MissingInput(format!("{} is not a directory", dir.display())));
    }
    let mut rep = PlotReport::default();
    let put = |name: String, svg: String, rep: &mut PlotReport| -> Result<()> {
        std::fs::write(dir.join(&name), svg)?;
        rep.written.push(name);
        Ok(())
    };
    let layers = with_prefix(dir, "layers_")?;
    for (file, tag) in &layers {
        let (header, rows) = read_table(&std::fs::read_to_string(dir.join(file))?)?;
        let series = (1..header.len()).map(|c| (header[c].clone(), rows.iter().map(|r| (r[0], r[c])).collect())).collect::<Vec<_>>();
        put(format!("layers_{tag}.svg"), line_plot(&format!("bottom layers at x0, epsilon {tag}"), "Y", "value", &series, false, None), &mut rep)?;
    }
    let comps = with_prefix(dir, "composite_u_")?;
    for (file, tag) in &comps {
        let f = Field2D::read_csv(std::io::BufReader::new(std::fs::File::open(dir.join(file))?))?;
        let i = f.nx() / 2;
        let pts = (0..=f.n2()).map(|j| (f.grid.coord2(j), f.at(i, j))).collect();
        let title = format!("u_s(x0, y), x0 = {:.3}, epsilon {tag}", f.grid.coord1(i));
        put(format!("us_slice_{tag}.svg"), line_plot(&title, "y", "u_s", &[("u_s".into(), pts)], false, None), &mut rep)?;
    }
    let mut heat = 0;
    for name in ["t1", "t2"] {
        for (file, tag) in with_prefix(dir, &format!("{name}_"))? {
            let f = Field2D::read_csv(std::io::BufReader::new(std::fs::File::open(dir.join(&file))?))?;
            put(format!("{name}_{tag}.svg"), heatmap(&format!("{} epsilon {tag}", name.to_uppercase()), &f), &mut rep)?;
            heat += 1;
        }
    }
    let rate = dir.join("rate_study.csv");
    if rate.is_file() {
        let (svg, _) = rate_plot(&std::fs::read_to_string(rate)?)?;
        put("rate_study.svg".into(), svg, &mut rep)?;
    } else {
        rep.missing.push("rate_study.csv".into());
    }
    for (n, found) in [("layers_*.csv", !layers.is_empty()), ("composite_u_*.csv", !comps.is_empty()), ("t1_*/t2_*.csv", heat > 0)] {
        if !found {
            rep.missing.push(n.into());
        }
    }
    rep.missing.sort();
    for m in &rep.missing {
        log::warn!("no {m} in {}, skipped", dir.display());
    }
    if dir.join(MANIFEST).is_file() {
        refresh_inventory(dir)?;
    }
    Ok(rep)
}
