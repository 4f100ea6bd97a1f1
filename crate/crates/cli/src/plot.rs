//! Figures as SVG plus the CSV of every plotted point.

use std::f64::consts::PI;
use std::fmt::Write;

use mensura_core::data::Dataset;
use mensura_core::pi::groups_for_trees;
use mensura_core::propagate::{variance_grid, CrossTerm, ErrorModel, GridAxis, GridCell, VarianceGrid};
use mensura_core::regress::{ellipsoid_slice, fit_through_origin};

use crate::error::CliError;
use crate::report::{formulation_points, log_fit, ELLIPSOID_LEVEL};
use crate::svg::{padded_range, Frame, Segment, Svg};

/// Points on the boundary of the confidence-ellipse slice.
pub const ELLIPSE_POINTS: usize = 360;
/// Contour levels per panel.
pub const CONTOUR_LEVELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotOutput {
    /// File stem, e.g. `pi-scatter-a`.
    pub name: String,
    pub svg: String,
    pub csv: String,
}

const COLORS: [&str; 4] = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad"];

fn series_csv(header: &str, series: &[(&str, &[(f64, f64)])]) -> String {
    let mut s = format!("{header}\n");
    for (name, pts) in series {
        for (x, y) in pts.iter() {
            let _ = writeln!(s, "{name},{x},{y}");
        }
    }
    s
}

fn single_frame(xs: impl IntoIterator<Item = f64>, ys: impl IntoIterator<Item = f64>) -> Frame {
    Frame { x: padded_range(xs), y: padded_range(ys), left: 70.0, top: 40.0, width: 540.0, height: 380.0 }
}

/// Scatter matrix of dbh, height and volume.
pub fn pairs(ds: &Dataset) -> PlotOutput {
    let cols = [("d (ft)", ds.dbh()), ("h (ft)", ds.heights()), ("V (ft3)", ds.volumes())];
    let mut svg = Svg::new(760.0, 760.0);
    svg.text(380.0, 24.0, &format!("{}: pairwise scatter", ds.name()), "middle", 14.0);
    let size = 190.0;
    for (row, (ylabel, ys)) in cols.iter().enumerate() {
        for (col, (xlabel, xs)) in cols.iter().enumerate() {
            let frame = Frame {
                x: padded_range(xs.iter().copied()),
                y: padded_range(ys.iter().copied()),
                left: 90.0 + col as f64 * (size + 40.0),
                top: 50.0 + row as f64 * (size + 40.0),
                width: size,
                height: size,
            };
            if row == col {
                svg.axes(&frame, "", "");
                svg.text(frame.left + size / 2.0, frame.top + size / 2.0, xlabel, "middle", 14.0);
                continue;
            }
            svg.axes(&frame, if row == 2 { xlabel } else { "" }, if col == 0 { ylabel } else { "" });
            let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
            svg.points(&frame, &pts, COLORS[0], 2.5);
        }
    }
    let mut csv = String::from("id,d_ft,h_ft,V_ft3\n");
    for r in ds.records() {
        let _ = writeln!(csv, "{},{},{},{}", r.id, r.dbh, r.height, r.volume);
    }
    PlotOutput { name: "pairs".into(), svg: svg.finish(), csv }
}

/// π₀ against π₁ for one formulation; (a) and (c) get cone and cylinder
/// reference lines.
pub fn pi_scatter(ds: &Dataset, label: char) -> Result<PlotOutput, CliError> {
    let forms = groups_for_trees();
    let f = forms
        .iter()
        .find(|f| f.label == label)
        .ok_or_else(|| CliError::usage(format!("unknown formulation '{label}' (expected a, b, c or d)")))?;
    let pts = formulation_points(ds, f)?;
    let xmax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let with_lines = matches!(label, 'a' | 'c');
    let cone = [(0.0, 0.0), (xmax, PI / 12.0 * xmax)];
    let cylinder = [(0.0, 0.0), (xmax, PI / 4.0 * xmax)];

    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    if with_lines {
        xs.push(0.0);
        ys.extend([0.0, PI / 4.0 * xmax]);
    }
    let frame = single_frame(xs, ys);
    let mut svg = Svg::new(640.0, 480.0);
    svg.text(340.0, 24.0, &format!("{}: formulation ({label})", ds.name()), "middle", 14.0);
    svg.axes(&frame, &f.pi1().to_string(), &f.pi0().to_string());
    let mut series: Vec<(&str, &[(f64, f64)])> = vec![("tree", &pts)];
    if with_lines {
        svg.polyline(&frame, &cone, "black", false);
        svg.polyline(&frame, &cylinder, "black", true);
        series.push(("cone", &cone));
        series.push(("cylinder", &cylinder));
    }
    svg.points(&frame, &pts, COLORS[0], 3.0);
    Ok(PlotOutput {
        name: format!("pi-scatter-{label}"),
        svg: svg.finish(),
        csv: series_csv("series,x,y", &series),
    })
}

/// The (b0, b2) slice of the joint confidence ellipsoid through b1 = 2, with
/// the cylinder, cone and fitted-frustum points.
pub fn ellipse(ds: &Dataset) -> Result<PlotOutput, CliError> {
    let fit = log_fit(ds)?;
    let forms = groups_for_trees();
    let (x, y): (Vec<f64>, Vec<f64>) = formulation_points(ds, &forms[0])?.into_iter().unzip();
    let gamma = fit_through_origin(&x, &y)?.gamma0;
    let slice = ellipsoid_slice(&fit, (0, 2), &[0.0, 2.0, 0.0], ELLIPSOID_LEVEL, ELLIPSE_POINTS)?;
    let markers = [
        ("cylinder", ((PI / 4.0).ln(), 1.0)),
        ("cone", ((PI / 12.0).ln(), 1.0)),
        ("da", (gamma.ln(), 1.0)),
    ];
    let frame = single_frame(
        slice.boundary.iter().map(|p| p.0).chain(markers.iter().map(|m| m.1 .0)),
        slice.boundary.iter().map(|p| p.1).chain(markers.iter().map(|m| m.1 .1)),
    );
    let mut svg = Svg::new(640.0, 480.0);
    svg.text(
        340.0,
        24.0,
        &format!("{}: {}% region for (b0, b2) at b1 = 2", ds.name(), ELLIPSOID_LEVEL * 100.0),
        "middle",
        14.0,
    );
    svg.axes(&frame, "b0", "b2");
    svg.polyline(&frame, &slice.boundary, COLORS[0], false);
    for (i, (name, at)) in markers.iter().enumerate() {
        svg.marker(&frame, *at, name, COLORS[1 + i % 3]);
    }
    let marker_pts: Vec<[(f64, f64); 1]> = markers.iter().map(|m| [m.1]).collect();
    let mut series: Vec<(&str, &[(f64, f64)])> = vec![("boundary", &slice.boundary)];
    for (m, p) in markers.iter().zip(&marker_pts) {
        series.push((m.0, p));
    }
    Ok(PlotOutput { name: "ellipse".into(), svg: svg.finish(), csv: series_csv("series,b0,b2", &series) })
}

/// Marching squares over a rectangular grid; `z(i, j)` is the value at
/// `(xs[i], ys[j])`.
pub fn contour_segments(xs: &[f64], ys: &[f64], z: impl Fn(usize, usize) -> f64, level: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let cross = |p: (f64, f64), q: (f64, f64), zp: f64, zq: f64| {
        let t = (level - zp) / (zq - zp);
        (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
    };
    for j in 0..ys.len().saturating_sub(1) {
        for i in 0..xs.len().saturating_sub(1) {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let p: Vec<(f64, f64)> = c.iter().map(|&(a, b)| (xs[a], ys[b])).collect();
            let v: Vec<f64> = c.iter().map(|&(a, b)| z(a, b)).collect();
            let above: Vec<bool> = v.iter().map(|&x| x >= level).collect();
            // edges: bottom, right, top, left
            let mut hits: [Option<(f64, f64)>; 4] = [None; 4];
            for (a, hit) in hits.iter_mut().enumerate() {
                let b = (a + 1) % 4;
                if above[a] != above[b] {
                    *hit = Some(cross(p[a], p[b], v[a], v[b]));
                }
            }
            let found: Vec<usize> = (0..4).filter(|&e| hits[e].is_some()).collect();
            match found.len() {
                2 => out.push((hits[found[0]].unwrap(), hits[found[1]].unwrap())),
                4 => {
                    let center = v.iter().sum::<f64>() / 4.0 >= level;
                    let pairs = if center == above[0] { [(0, 1), (2, 3)] } else { [(3, 0), (1, 2)] };
                    for (a, b) in pairs {
                        out.push((hits[a].unwrap(), hits[b].unwrap()));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

fn levels(values: impl Iterator<Item = f64> + Clone, n: usize) -> Vec<f64> {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

/// Grid spanning the observed diameters and heights.
pub fn dataset_grid(
    ds: &Dataset,
    gamma0: f64,
    em: &ErrorModel,
    cross: CrossTerm,
    steps: usize,
) -> Result<VarianceGrid, CliError> {
    let span = |v: Vec<f64>| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(0.0, f64::max));
    let (d0, d1) = span(ds.dbh());
    let (h0, h1) = span(ds.heights());
    let axis = |lo: f64, hi: f64| {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo * 0.9, hi * 1.1) };
        GridAxis::new(lo, hi, steps).map_err(CliError::usage)
    };
    variance_grid(gamma0, axis(d0, d1)?, axis(h0, h1)?, em, cross).map_err(CliError::numerical)
}

/// Contours of `V` and of its transmitted variance over (d, h).
pub fn contours(grid: &VarianceGrid, name: &str) -> Result<PlotOutput, CliError> {
    let xs: Vec<f64> = grid.d_axis.values().collect();
    let ys: Vec<f64> = grid.h_axis.values().collect();
    let mut svg = Svg::new(1000.0, 480.0);
    type Field = fn(&GridCell) -> f64;
    let panels: [(&str, Field); 2] = [("V (ft3)", |c| c.volume), ("var V (ft6)", |c| c.var_v)];
    for (k, (title, get)) in panels.iter().enumerate() {
        let frame = Frame {
            x: (grid.d_axis.lo, grid.d_axis.hi),
            y: (grid.h_axis.lo, grid.h_axis.hi),
            left: 80.0 + k as f64 * 490.0,
            top: 50.0,
            width: 400.0,
            height: 370.0,
        };
        svg.text(frame.left + 200.0, 34.0, &format!("{name}: {title}"), "middle", 14.0);
        svg.axes(&frame, "d (ft)", "h (ft)");
        for level in levels(grid.cells.iter().map(get), CONTOUR_LEVELS) {
            let segs = contour_segments(&xs, &ys, |i, j| get(grid.cell(i, j)), level);
            svg.segments(&frame, &segs, COLORS[k]);
        }
    }
    let mut csv = Vec::new();
    grid.write_csv(&mut csv).map_err(CliError::data)?;
    Ok(PlotOutput {
        name: "contours".into(),
        svg: svg.finish(),
        csv: String::from_utf8(csv).map_err(CliError::data)?,
    })
}

/// Formulation (a) for two datasets on shared axes, each with its
/// through-origin fit.
pub fn species_compare(first: &Dataset, second: &Dataset) -> Result<PlotOutput, CliError> {
    let f = &groups_for_trees()[0];
    let sets = [first, second];
    let mut pts = Vec::new();
    let mut lines = Vec::new();
    for ds in sets {
        let p = formulation_points(ds, f)?;
        let (x, y): (Vec<f64>, Vec<f64>) = p.iter().copied().unzip();
        let g = fit_through_origin(&x, &y)?.gamma0;
        let xmax = x.iter().copied().fold(0.0, f64::max);
        lines.push([(0.0, 0.0), (xmax, g * xmax)]);
        pts.push(p);
    }
    let frame = single_frame(
        pts.iter().flatten().map(|p| p.0).chain([0.0]),
        pts.iter().flatten().map(|p| p.1).chain(lines.iter().map(|l| l[1].1)),
    );
    let mut svg = Svg::new(640.0, 480.0);
    svg.text(340.0, 24.0, &format!("{} vs {}", first.name(), second.name()), "middle", 14.0);
    svg.axes(&frame, &f.pi1().to_string(), &f.pi0().to_string());
    let fit_names: Vec<String> = sets.iter().map(|d| format!("{}-fit", d.name())).collect();
    let mut series: Vec<(&str, &[(f64, f64)])> = Vec::new();
    for (k, ds) in sets.iter().enumerate() {
        svg.polyline(&frame, &lines[k], COLORS[k], k == 1);
        svg.points(&frame, &pts[k], COLORS[k], 3.0);
        svg.text(frame.left + 10.0, frame.top + 16.0 + 16.0 * k as f64, ds.name(), "start", 12.0);
        series.push((ds.name(), &pts[k]));
        series.push((&fit_names[k], &lines[k]));
    }
    Ok(PlotOutput { name: "species-compare".into(), svg: svg.finish(), csv: series_csv("series,x,y", &series) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_of_plane_is_straight() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let ys = xs.clone();
        let segs = contour_segments(&xs, &ys, |i, j| xs[i] + ys[j], 3.5);
        assert!(!segs.is_empty());
        for (a, b) in segs {
            assert!((a.0 + a.1 - 3.5).abs() < 1e-12);
            assert!((b.0 + b.1 - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn saddle_gives_two_segments() {
        let xs = [0.0, 1.0];
        let v = [[1.0, -1.0], [-1.0, 1.0]];
        let segs = contour_segments(&xs, &xs, |i, j| v[j][i], 0.0);
        assert_eq!(segs.len(), 2);
    }
}
