//! Minimal SVG rendering of an excursion, optionally with a star overlay.
//!
//! The output is a fixed 800x400 canvas with a baseline, one polyline,
//! and circle markers, formatted with two decimals so identical inputs
//! produce identical bytes.

use std::fmt::Write;

use starry::io::StarReport;
use starry::ExcursionGrid;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;
/// Polyline vertex cap; denser grids are strided down for plotting only.
const MAX_POINTS: usize = 2048;

pub fn plot_excursion(grid: &ExcursionGrid, star: Option<&StarReport>) -> String {
    let f = grid.values();
    let n = grid.n_cells();
    let top = f.iter().fold(f64::MIN_POSITIVE, |a, &b| a.max(b));
    let x = |t: f64| MARGIN + t * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v / top) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-width="1"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0)
    );

    let stride = n.div_ceil(MAX_POINTS).max(1);
    let mut pts = String::new();
    for i in (0..=n).step_by(stride) {
        let _ = write!(pts, "{:.2},{:.2} ", x(i as f64 / n as f64), y(f[i]));
    }
    if n % stride != 0 {
        let _ = write!(pts, "{:.2},{:.2} ", x(1.0), y(f[n]));
    }
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        pts.trim_end()
    );

    if let Some(rep) = star {
        let value_at = |t: f64| f[((t * n as f64).round() as usize).min(n)];
        for &t in &rep.satellite_ts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
                x(t),
                y(value_at(t))
            );
        }
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="crimson"/>"#,
            x(rep.center_t),
            y(value_at(rep.center_t))
        );
        let _ = writeln!(
            svg,
            r#"<text x="{MARGIN}" y="{:.2}" font-size="12" fill="black">{}-satellite star, {} metric</text>"#,
            MARGIN - 14.0,
            rep.n,
            rep.metric
        );
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use starry::zigzag_grid;
    use starry::ZigZagParams;

    #[test]
    fn zigzag_plot_is_well_formed() {
        let grid = zigzag_grid(ZigZagParams::new(3).unwrap(), 64).unwrap();
        let svg = plot_excursion(&grid, None);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<svg").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
        // 65 grid points, all below the vertex cap; the only commas in
        // the document are the polyline vertex separators.
        assert_eq!(svg.matches(',').count(), 65);
        assert!(!svg.contains("circle"));
    }

    #[test]
    fn star_overlay_draws_center_and_satellites() {
        let grid = zigzag_grid(ZigZagParams::new(4).unwrap(), 64).unwrap();
        let rep = StarReport {
            metric: "tree".to_string(),
            n: 5,
            center_t: 0.125,
            satellite_ts: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            a: 3.0,
            eta: 2.0 / 3.0,
            rho: 0.375,
            distances: starry::io::StarDistances {
                center: vec![0.375; 5],
                pairs: vec![vec![0.0; 5]; 5],
            },
        };
        let svg = plot_excursion(&grid, Some(&rep));
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("5-satellite star, tree metric"));
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let grid = zigzag_grid(ZigZagParams::new(3).unwrap(), 4096).unwrap();
        let a = plot_excursion(&grid, None);
        let b = plot_excursion(&grid, None);
        assert_eq!(a, b);
        // 4096 cells stride down to at most the cap plus endpoints.
        assert!(a.matches(',').count() <= MAX_POINTS + 4);
    }
}
