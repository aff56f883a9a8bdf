//! Atomic file output and SVG line charts.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use chiralflow::dynamics::Trajectory;

/// Writes the bytes produced by `fill` to `path` through a sibling temp file.
///
/// Nothing appears at `path` unless `fill` and the flush both succeed.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Population-versus-time line chart, one series per site.
pub fn trajectory_svg(traj: &Trajectory, title: &str) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (64.0, 150.0, 36.0, 52.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let t_max = traj.times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let y_max = traj
        .populations
        .iter()
        .flatten()
        .fold(1.0f64, |a, &p| a.max(p))
        .ceil();
    let x = |t: f64| left + pw * t / t_max;
    let y = |p: f64| top + ph * (1.0 - p / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    for i in 0..=5 {
        let p = y_max * i as f64 / 5.0;
        let yy = y(p);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left + pw,
            left - 6.0,
            yy + 4.0,
            tick(p)
        );
    }
    for i in 0..=5 {
        let t = t_max * i as f64 / 5.0;
        let xx = x(t);
        let _ = writeln!(
            s,
            r##"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}" stroke="#000"/><text x="{xx:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 5.0,
            top + ph + 19.0,
            tick(t)
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>"##
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">J₀t</text>"#, left + pw / 2.0, h - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">population</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for j in 0..traj.n_sites() {
        let colour = PALETTE[j % PALETTE.len()];
        let points: Vec<String> = traj
            .times
            .iter()
            .zip(&traj.populations)
            .map(|(&t, row)| format!("{:.2},{:.2}", x(t), y(row[j])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * j as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&traj.labels[j])
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    format!("{r}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
