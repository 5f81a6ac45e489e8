//! Static SVG renderings: a pairwise scatter matrix coloured by cluster and
//! an allocation map showing which points a blinded subset misallocates.

use std::fmt::Write as _;

use clustersift::data::DataMatrix;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#d62728",
];
const MAX_MATRIX_VARS: usize = 8;
const CELL: f64 = 150.0;
const PAD: f64 = 12.0;

fn color(label: usize) -> &'static str {
    PALETTE[label % PALETTE.len()]
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn scale(v: f64, (lo, hi): (f64, f64), start: f64, len: f64) -> f64 {
    start + (v - lo) / (hi - lo) * len
}

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

/// Pairwise scatter of (at most) the first eight variables.
pub fn scatter_matrix(data: &DataMatrix, labels: &[usize]) -> String {
    let vars = data.p().min(MAX_MATRIX_VARS);
    let size = vars as f64 * CELL;
    let mut out = String::new();
    header(&mut out, size, size + 24.0);
    let ranges: Vec<(f64, f64)> = (0..vars).map(|i| range(data.column(i).into_iter())).collect();
    for row in 0..vars {
        for col in 0..vars {
            let (x0, y0) = (col as f64 * CELL, row as f64 * CELL);
            let _ = writeln!(
                out,
                r##"<rect x="{x0}" y="{y0}" width="{CELL}" height="{CELL}" fill="none" stroke="#999"/>"##
            );
            if row == col {
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{}" text-anchor="middle" font-size="18">X{}</text>"#,
                    x0 + CELL / 2.0,
                    y0 + CELL / 2.0,
                    row + 1
                );
                continue;
            }
            let inner = CELL - 2.0 * PAD;
            for (j, r) in data.rows().enumerate() {
                let x = scale(r[col], ranges[col], x0 + PAD, inner);
                let y = y0 + CELL - PAD - (scale(r[row], ranges[row], 0.0, inner));
                let _ = writeln!(
                    out,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#,
                    color(labels[j])
                );
            }
        }
    }
    if data.p() > vars {
        let _ = writeln!(
            out,
            r#"<text x="4" y="{}" font-size="12">showing {vars} of {} variables</text>"#,
            size + 16.0,
            data.p()
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Retained coordinates of a solution, with points whose allocation
/// changes under blinding drawn as crosses. `retained` is 0-based.
pub fn allocation_map(data: &DataMatrix, labels: &[usize], retained: &[usize], kept: &[bool], title: &str) -> String {
    let (w, h) = (480.0, 420.0);
    let mut out = String::new();
    header(&mut out, w, h);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    if retained.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="16">no solution to display</text>"#,
            w / 2.0,
            h / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }
    let (x0, y0, pw, ph) = (50.0, 40.0, w - 70.0, h - 80.0);
    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>"##
    );
    let xs: Vec<f64>;
    let ys: Vec<f64>;
    let (xlabel, ylabel);
    if retained.len() >= 2 {
        xs = data.column(retained[0]);
        ys = data.column(retained[1]);
        xlabel = format!("X{}", retained[0] + 1);
        ylabel = format!("X{}", retained[1] + 1);
    } else {
        xs = (0..data.n()).map(|j| (j + 1) as f64).collect();
        ys = data.column(retained[0]);
        xlabel = "observation".to_string();
        ylabel = format!("X{}", retained[0] + 1);
    }
    let rx = range(xs.iter().copied());
    let ry = range(ys.iter().copied());
    for j in 0..data.n() {
        let x = scale(xs[j], rx, x0 + PAD, pw - 2.0 * PAD);
        let y = y0 + ph - PAD - scale(ys[j], ry, 0.0, ph - 2.0 * PAD);
        let c = color(labels[j]);
        if kept[j] {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}"/>"#);
        } else {
            let _ = writeln!(
                out,
                r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{c}" stroke-width="2.5"/>"#,
                x - 5.0,
                y - 5.0,
                x + 5.0,
                y + 5.0,
                x - 5.0,
                y + 5.0,
                x + 5.0,
                y - 5.0
            );
        }
    }
    let moved = kept.iter().filter(|k| !**k).count();
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#,
        x0 + pw / 2.0,
        h - 22.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">{ylabel}</text>"#,
        y0 + ph / 2.0,
        y0 + ph / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{moved} of {} misallocated (crosses)</text>"#,
        w - 20.0,
        h - 6.0,
        data.n()
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_matrix_uses_one_colour_per_cluster() {
        let data = DataMatrix::from_row_major(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let svg = scatter_matrix(&data, &[0, 1, 2]);
        assert!(svg.starts_with("<svg"));
        for c in &PALETTE[..3] {
            assert!(svg.contains(c));
        }
        assert_eq!(svg.matches("<circle").count(), 6);
    }

    #[test]
    fn empty_solution_is_annotated() {
        let data = DataMatrix::from_row_major(2, 1, vec![0.0, 1.0]).unwrap();
        let svg = allocation_map(&data, &[0, 0], &[], &[true, true], "t");
        assert!(svg.contains("no solution"));
    }

    #[test]
    fn misallocated_points_are_crosses() {
        let data = DataMatrix::from_row_major(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let svg = allocation_map(&data, &[0, 0, 1], &[1], &[true, false, false], "t");
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("2 of 3 misallocated"));
    }
}
