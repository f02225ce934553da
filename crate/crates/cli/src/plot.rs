//! `qktsne plot`: render a points table as a scatter or trajectory SVG.
//!
//! Scatter input is `id,y0,y1,label`. Trajectory input is
//! `id,y0,y1,series`, rows grouped by series in path order; series whose
//! name starts with `ref:` are drawn as reference stars.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ndarray::Array2;
use serde::Serialize;

use qktsne_core::io::read_embedding_csv;
use qktsne_core::plotting::{scatter_svg, trajectory_svg, Marker, PlotSpec, Series};

use crate::meta::{write_text, Metadata};
use crate::{CliError, CliResult, GlobalArgs};

pub const REFERENCE_PREFIX: &str = "ref:";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    #[default]
    Scatter,
    Trajectory,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = PlotKind::Scatter)]
    pub kind: PlotKind,
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    #[arg(long, default_value_t = 520)]
    pub height: u32,
    #[arg(long)]
    pub title: Option<String>,
}

/// Groups `(series, point)` rows into polylines and reference markers.
pub fn split_series(rows: &[(String, [f64; 2])]) -> (Vec<Series>, Vec<Marker>) {
    let mut series: Vec<Series> = Vec::new();
    let mut markers = Vec::new();
    for (name, p) in rows {
        if let Some(r) = name.strip_prefix(REFERENCE_PREFIX) {
            markers.push(Marker {
                name: r.to_string(),
                point: *p,
            });
            continue;
        }
        match series.last_mut() {
            Some(s) if &s.name == name => s.points.push(*p),
            _ => series.push(Series {
                name: name.clone(),
                points: vec![*p],
            }),
        }
    }
    (series, markers)
}

fn read_series_csv(path: &PathBuf) -> CliResult<Vec<(String, [f64; 2])>> {
    let text = std::fs::read_to_string(path).map_err(|e| qktsne_core::Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("id,y0,y1,series") {
        return Err(CliError::Data(format!("{}: expected header id,y0,y1,series", path.display())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CliError::Data(format!("{}:{}: malformed row", path.display(), i + 2));
        let f: Vec<&str> = line.splitn(4, ',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let y0: f64 = f[1].trim().parse().map_err(|_| bad())?;
        let y1: f64 = f[2].trim().parse().map_err(|_| bad())?;
        rows.push((f[3].to_string(), [y0, y1]));
    }
    Ok(rows)
}

pub fn run_plot(global: &GlobalArgs, args: &PlotArgs) -> CliResult<()> {
    let spec = PlotSpec {
        width: args.width,
        height: args.height,
        title: args.title.clone(),
        ..PlotSpec::default()
    };
    let stem = args
        .input
        .file_stem()
        .map_or_else(|| "plot".into(), |s| s.to_string_lossy().into_owned());
    let svg = match args.kind {
        PlotKind::Scatter => {
            let table = read_embedding_csv(&args.input)?;
            let labels = table
                .labels
                .unwrap_or_else(|| vec![0; table.embedding.n()]);
            scatter_svg(table.embedding.view(), &labels, &spec)?
        }
        PlotKind::Trajectory => {
            let rows = read_series_csv(&args.input)?;
            let (series, markers) = split_series(&rows);
            trajectory_svg(&series, &markers, &spec)?
        }
    };
    write_text(&global.out.join(format!("{stem}.svg")), &svg)?;
    Metadata::new("plot", global, args, ()).write(&global.out)?;
    Ok(())
}

/// Builds the trajectory points table for `split_series`-compatible output.
pub fn series_table(y: &Array2<f64>, names: &[String]) -> qktsne_core::Result<String> {
    qktsne_core::plotting::points_csv(y.view(), names, "series")
}
