//! Static SVG output for embeddings and optimization trajectories.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Ten-colour categorical palette (Tableau 10).
pub const TABLEAU10: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub width: u32,
    pub height: u32,
    pub point_radius: f64,
    pub palette: Vec<String>,
    /// Fractional margin added around the data bounding box.
    pub margin: f64,
    pub title: Option<String>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            width: 640,
            height: 520,
            point_radius: 2.5,
            palette: TABLEAU10.iter().map(|s| s.to_string()).collect(),
            margin: 0.05,
            title: None,
        }
    }
}

impl PlotSpec {
    fn validate(&self, classes: usize) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.point_radius > 0.0) {
            return Err(Error::InvalidArgument("plot dimensions must be positive".into()));
        }
        if self.palette.len() < classes {
            return Err(Error::InvalidArgument(format!(
                "palette has {} colours for {classes} classes",
                self.palette.len()
            )));
        }
        Ok(())
    }
}

const LEGEND_WIDTH: f64 = 130.0;
const PAD: f64 = 16.0;

/// Maps data coordinates into the plot area (left part of the canvas; the
/// legend occupies the right strip).
struct Viewport {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    left: f64,
    bottom: f64,
}

impl Viewport {
    fn fit(points: &[[f64; 2]], spec: &PlotSpec) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        for k in 0..2 {
            let span = hi[k] - lo[k];
            let pad = if span > 0.0 { span * spec.margin } else { 0.5 };
            lo[k] -= pad;
            hi[k] += pad;
        }
        let plot_w = (spec.width as f64 - LEGEND_WIDTH - 2.0 * PAD).max(1.0);
        let plot_h = (spec.height as f64 - 2.0 * PAD - if spec.title.is_some() { 20.0 } else { 0.0 }).max(1.0);
        Viewport {
            x0: lo[0],
            y0: lo[1],
            sx: plot_w / (hi[0] - lo[0]),
            sy: plot_h / (hi[1] - lo[1]),
            left: PAD,
            bottom: spec.height as f64 - PAD,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            self.left + (p[0] - self.x0) * self.sx,
            self.bottom - (p[1] - self.y0) * self.sy,
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(spec: &PlotSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = spec.width,
        h = spec.height
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        spec.width, spec.height
    );
    if let Some(t) = &spec.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="18" font-family="sans-serif" font-size="14">{}</text>"#,
            PAD,
            escape(t)
        );
    }
    s
}

fn legend_entry(s: &mut String, spec: &PlotSpec, row: usize, colour: &str, text: &str) {
    let x = spec.width as f64 - LEGEND_WIDTH + 8.0;
    let y = PAD + 18.0 * row as f64 + 12.0;
    let _ = writeln!(
        s,
        r#"<g class="legend"><rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{colour}"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text></g>"#,
        y - 9.0,
        x + 16.0,
        y,
        escape(text)
    );
}

fn check_points(points: &[[f64; 2]]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("plot coordinates".into()));
    }
    Ok(())
}

/// Scatter plot of a 2-D embedding, coloured by label, one legend entry per class.
pub fn scatter_svg(y: ArrayView2<'_, f64>, labels: &[i64], spec: &PlotSpec) -> Result<String> {
    if y.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: y.ncols(),
            context: "scatter plots need 2-D coordinates",
        });
    }
    if labels.len() != y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: y.nrows(),
            actual: labels.len(),
            context: "labels vs points",
        });
    }
    let points: Vec<[f64; 2]> = y.rows().into_iter().map(|r| [r[0], r[1]]).collect();
    check_points(&points)?;
    let classes: Vec<i64> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    spec.validate(classes.len())?;
    let colour = |l: i64| &spec.palette[classes.binary_search(&l).expect("collected above")];

    let vp = Viewport::fit(&points, spec);
    let mut s = header(spec);
    s.push_str("<g class=\"points\">\n");
    for (p, &l) in points.iter().zip(labels) {
        let (cx, cy) = vp.map(*p);
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="{}" fill-opacity="0.8"/>"#,
            spec.point_radius,
            colour(l)
        );
    }
    s.push_str("</g>\n");
    for (row, &l) in classes.iter().enumerate() {
        legend_entry(&mut s, spec, row, colour(l), &l.to_string());
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// One named polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<[f64; 2]>,
}

/// A named reference location drawn as a star.
#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub name: String,
    pub point: [f64; 2],
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    let mut pts = String::new();
    for k in 0..10 {
        let radius = if k % 2 == 0 { r } else { r * 0.45 };
        let a = std::f64::consts::PI * (k as f64) / 5.0 - std::f64::consts::FRAC_PI_2;
        let _ = write!(pts, "{:.2},{:.2} ", cx + radius * a.cos(), cy + radius * a.sin());
    }
    pts.trim_end().to_string()
}

/// Trajectories as ordered polylines with a start marker each, plus star
/// markers for reference states.
pub fn trajectory_svg(series: &[Series], references: &[Marker], spec: &PlotSpec) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("no trajectories".into()));
    }
    if let Some(bad) = series.iter().find(|t| t.points.len() < 2) {
        return Err(Error::InvalidArgument(format!(
            "trajectory '{}' has fewer than 2 points",
            bad.name
        )));
    }
    spec.validate(series.len())?;
    let all: Vec<[f64; 2]> = series
        .iter()
        .flat_map(|t| t.points.iter().copied())
        .chain(references.iter().map(|m| m.point))
        .collect();
    check_points(&all)?;

    let vp = Viewport::fit(&all, spec);
    let mut s = header(spec);
    for (i, t) in series.iter().enumerate() {
        let colour = &spec.palette[i];
        let mut d = String::new();
        for (k, p) in t.points.iter().enumerate() {
            let (x, y) = vp.map(*p);
            let _ = write!(d, "{}{x:.2} {y:.2}", if k == 0 { "M " } else { " L " });
        }
        let _ = writeln!(
            s,
            r#"<path class="trajectory" d="{d}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#
        );
        let (x, y) = vp.map(t.points[0]);
        let _ = writeln!(
            s,
            r#"<circle class="start" cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="{colour}"/>"#,
            spec.point_radius * 1.6
        );
    }
    for m in references {
        let (x, y) = vp.map(m.point);
        let _ = writeln!(
            s,
            r#"<polygon class="star" points="{}" fill="black"><title>{}</title></polygon>"#,
            star(x, y, 7.0),
            escape(&m.name)
        );
    }
    for (i, t) in series.iter().enumerate() {
        legend_entry(&mut s, spec, i, &spec.palette[i], &t.name);
    }
    for (k, m) in references.iter().enumerate() {
        legend_entry(&mut s, spec, series.len() + k, "black", &m.name);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Companion table of plotted coordinates: `id,y0,y1,<tag_column>`.
pub fn points_csv<T: std::fmt::Display>(
    y: ArrayView2<'_, f64>,
    tags: &[T],
    tag_column: &str,
) -> Result<String> {
    if y.ncols() != 2 || tags.len() != y.nrows() {
        return Err(Error::InvalidArgument(format!(
            "points table needs N x 2 coordinates and N tags, got {:?} and {}",
            y.dim(),
            tags.len()
        )));
    }
    let mut s = format!("id,y0,y1,{tag_column}\n");
    for (i, (row, tag)) in y.rows().into_iter().zip(tags).enumerate() {
        let _ = writeln!(s, "{i},{:.16e},{:.16e},{tag}", row[0], row[1]);
    }
    Ok(s)
}
