//! CSV and SVG output for scenario reports.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::numerics::{dot, unit_directions};
use crate::scenario::{Figure, RunReport};

pub const CSV_HEADER: [&str; 6] = ["scenario", "operation", "pass", "hausdorff_error", "flags", "millis"];

fn fmt_error(h: f64) -> String {
    if h.is_finite() {
        format!("{h:.3e}")
    } else {
        "inf".into()
    }
}

/// One row per report in the given order. Without `timing` the millis
/// column is left empty so that reruns are byte-identical.
pub fn write_csv<W: Write>(out: W, reports: &[RunReport], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        let millis = if timing { r.millis.to_string() } else { String::new() };
        w.write_record([
            r.scenario.as_str(),
            r.operation.as_str(),
            if r.pass { "true" } else { "false" },
            &fmt_error(r.hausdorff_error),
            &r.flags.join(";"),
            &millis,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

const PIXELS: f64 = 480.0;

/// Membership raster of the computed set at the grid resolution, with the
/// support lines of the expected set drawn on top.
pub fn figure_svg(fig: &Figure) -> String {
    let axes = fig.grid.axes();
    let (xa, ya) = (&axes[0], &axes[1]);
    let (nx, ny) = (xa.len(), ya.len());
    let cw = PIXELS / nx as f64;
    let ch = PIXELS / ny as f64;
    let px = |x: f64| (x - xa.lo) / (xa.hi - xa.lo) * PIXELS;
    let py = |y: f64| PIXELS - (y - ya.lo) / (ya.hi - ya.lo) * PIXELS;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{p}" height="{p}" viewBox="0 0 {p} {p}">"#,
        p = PIXELS
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&fig.name));
    let _ = writeln!(s, r##"<rect width="{PIXELS}" height="{PIXELS}" fill="#ffffff"/>"##);
    let member = fig.set.raster(&fig.grid);
    // runs of members along each row
    for j in 0..ny {
        let mut i = 0;
        while i < nx {
            if !member[fig.grid.flat_index(&[i, j])] {
                i += 1;
                continue;
            }
            let start = i;
            while i < nx && member[fig.grid.flat_index(&[i, j])] {
                i += 1;
            }
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#7aa6d8"/>"##,
                start as f64 * cw,
                PIXELS - (j + 1) as f64 * ch,
                (i - start) as f64 * cw,
                ch
            );
        }
    }
    if let Some(e) = &fig.expected {
        let pts: Vec<Vec<f64>> = fig.grid.points().zip(e.raster(&fig.grid)).filter(|(_, m)| *m).map(|(p, _)| p).collect();
        if !pts.is_empty() {
            for d in unit_directions(2, 48) {
                let h = pts.iter().map(|p| dot(p, &d)).fold(f64::NEG_INFINITY, f64::max);
                if let Some((a, b)) = clip_line(&d, h, xa.lo, xa.hi, ya.lo, ya.hi) {
                    let _ = writeln!(
                        s,
                        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="1"/>"##,
                        px(a[0]),
                        py(a[1]),
                        px(b[0]),
                        py(b[1])
                    );
                }
            }
        }
    }
    // coordinate axes
    if xa.lo < 0.0 && xa.hi > 0.0 {
        let _ = writeln!(s, r##"<line x1="{0:.2}" y1="0" x2="{0:.2}" y2="{PIXELS}" stroke="#333333" stroke-width="0.5"/>"##, px(0.0));
    }
    if ya.lo < 0.0 && ya.hi > 0.0 {
        let _ = writeln!(s, r##"<line x1="0" y1="{0:.2}" x2="{PIXELS}" y2="{0:.2}" stroke="#333333" stroke-width="0.5"/>"##, py(0.0));
    }
    s.push_str("</svg>\n");
    s
}

/// Segment of the line `<d, x> = h` inside the box, if any.
fn clip_line(d: &[f64], h: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> Option<([f64; 2], [f64; 2])> {
    let mut hits: Vec<[f64; 2]> = Vec::new();
    if d[1].abs() > 1e-12 {
        for x in [x0, x1] {
            let y = (h - d[0] * x) / d[1];
            if y >= y0 - 1e-9 && y <= y1 + 1e-9 {
                hits.push([x, y]);
            }
        }
    }
    if d[0].abs() > 1e-12 {
        for y in [y0, y1] {
            let x = (h - d[1] * y) / d[0];
            if x >= x0 - 1e-9 && x <= x1 + 1e-9 {
                hits.push([x, y]);
            }
        }
    }
    let a = *hits.first()?;
    let b = hits.iter().copied().max_by(|p, q| {
        let dp = (p[0] - a[0]).hypot(p[1] - a[1]);
        let dq = (q[0] - a[0]).hypot(q[1] - a[1]);
        dp.total_cmp(&dq)
    })?;
    ((b[0] - a[0]).hypot(b[1] - a[1]) > 1e-9).then_some((a, b))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn file_stem(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Writes one SVG per figure of the report into `dir`.
pub fn write_svgs(dir: &Path, report: &RunReport) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (i, fig) in report.figures.iter().enumerate() {
        let path = dir.join(format!("{}_{}_{}.svg", report.scenario, i, file_stem(&fig.name)));
        std::fs::write(&path, figure_svg(fig))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_line_spans_the_box() {
        let (a, b) = clip_line(&[0.0, 1.0], 0.5, -1.0, 1.0, -1.0, 1.0).unwrap();
        assert_eq!((a[1], b[1]), (0.5, 0.5));
        assert_eq!((a[0] - b[0]).abs(), 2.0);
        assert!(clip_line(&[0.0, 1.0], 3.0, -1.0, 1.0, -1.0, 1.0).is_none());
    }

    #[test]
    fn stems_are_file_safe() {
        assert_eq!(file_stem("graph normals at [0.0, 0.0] gamma=0.5"), "graph_normals_at_0.0_0.0_gamma_0.5");
    }
}
