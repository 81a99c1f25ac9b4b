//! SVG rendering of a heptagon and its adjoint in the affine chart `z = 1`.
//!
//! The quartic is traced by marching squares on a sign grid, so no root
//! finding is involved. Coordinates are written with 9 significant digits.

use std::fmt::Write as _;

use heptad::exactfield::{Approx, FieldElement};
use heptad::heptagon::{residual, Heptagon};
use heptad::projgeom::QuarticForm;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct Style {
    pub stroke: &'static str,
    pub fill: &'static str,
    pub width: f64,
}

#[derive(Clone, Debug)]
pub struct PlotSpec {
    /// `[xmin, xmax, ymin, ymax]`
    pub bounds: [f64; 4],
    /// Grid cells per side for the sign grid.
    pub resolution: usize,
    pub size_px: f64,
    pub line: Style,
    pub curve: Style,
    pub vertex: Style,
    pub inner: Style,
    pub outer: Style,
}

impl PlotSpec {
    pub fn new(bounds: [f64; 4], resolution: usize) -> Result<Self, String> {
        if resolution < 64 {
            return Err(format!("resolution {resolution} is below 64"));
        }
        if bounds.iter().any(|b| !b.is_finite()) || bounds[0] >= bounds[1] || bounds[2] >= bounds[3] {
            return Err(format!("bad viewport {bounds:?}"));
        }
        Ok(PlotSpec {
            bounds,
            resolution,
            size_px: 800.0,
            line: Style { stroke: "#555555", fill: "none", width: 1.0 },
            curve: Style { stroke: "#c0392b", fill: "none", width: 1.5 },
            vertex: Style { stroke: "#1f4e9c", fill: "#1f77b4", width: 1.0 },
            inner: Style { stroke: "#000000", fill: "#ffffff", width: 1.0 },
            outer: Style { stroke: "#000000", fill: "#2ca02c", width: 1.0 },
        })
    }
}

/// `x` rounded to 9 significant digits, printed in shortest form.
pub fn sig9(x: f64) -> String {
    let r: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn real_point(c: &[FieldElement; 3]) -> Option<[f64; 2]> {
    let v: Vec<Complex64> = c.iter().map(|x| Approx::of(x).0).collect();
    if v[2].norm() < 1e-12 {
        return None;
    }
    let (x, y) = (v[0] / v[2], v[1] / v[2]);
    Some([x.re, y.re])
}

/// A viewport containing every vertex and residual point, with a margin.
pub fn auto_bounds(h: &Heptagon<FieldElement>) -> [f64; 4] {
    let mut pts: Vec<[f64; 2]> = residual(h).points().values().filter_map(|p| real_point(p.coords())).collect();
    pts.extend((1..=7).filter_map(|i| real_point(h.meet(i, i % 7 + 1).coords())));
    let fold = |k: usize, init: f64, f: fn(f64, f64) -> f64| pts.iter().map(|p| p[k]).fold(init, f);
    let (x0, x1) = (fold(0, f64::INFINITY, f64::min), fold(0, f64::NEG_INFINITY, f64::max));
    let (y0, y1) = (fold(1, f64::INFINITY, f64::min), fold(1, f64::NEG_INFINITY, f64::max));
    if !(x0.is_finite() && y0.is_finite()) {
        return [-1.0, 1.0, -1.0, 1.0];
    }
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let half = ((x1 - x0).max(y1 - y0) / 2.0).max(1e-6) * 1.15;
    [cx - half, cx + half, cy - half, cy + half]
}

/// Segments of the zero set of `f` sampled on an `n × n` grid over `bounds`.
pub fn marching_squares(f: impl Fn(f64, f64) -> f64, bounds: [f64; 4], n: usize) -> Vec<[[f64; 2]; 2]> {
    let [x0, x1, y0, y1] = bounds;
    let (dx, dy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let at = |i: usize, j: usize| [x0 + i as f64 * dx, y0 + j as f64 * dy];
    let grid: Vec<Vec<f64>> = (0..=n).map(|i| (0..=n).map(|j| {
        let p = at(i, j);
        f(p[0], p[1])
    }).collect()).collect();
    let lerp = |p: [f64; 2], q: [f64; 2], a: f64, b: f64| {
        let t = if a == b { 0.5 } else { a / (a - b) };
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    };
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // corners counter-clockwise from bottom-left
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let v = [grid[i][j], grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]];
            let edge = |k: usize| lerp(c[k], c[(k + 1) % 4], v[k], v[(k + 1) % 4]);
            let case = (0..4).fold(0, |acc, k| acc | (((v[k] > 0.0) as usize) << k));
            let pairs: &[(usize, usize)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(2, 3)],
                5 | 10 => {
                    let centre = f(c[0][0] + dx / 2.0, c[0][1] + dy / 2.0) > 0.0;
                    // saddle: connect so that the centre's sign region stays joined
                    if centre == (case == 5) {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            out.extend(pairs.iter().map(|&(a, b)| [edge(a), edge(b)]));
        }
    }
    out
}

/// The visible part of `a x + b y + c = 0`.
fn clip_line(l: [f64; 3], b: [f64; 4]) -> Option<[[f64; 2]; 2]> {
    let [p, q, r] = l;
    let mut hits = Vec::new();
    for x in [b[0], b[1]] {
        if q.abs() > 1e-15 {
            let y = -(p * x + r) / q;
            if (b[2]..=b[3]).contains(&y) {
                hits.push([x, y]);
            }
        }
    }
    for y in [b[2], b[3]] {
        if p.abs() > 1e-15 {
            let x = -(q * y + r) / p;
            if (b[0]..=b[1]).contains(&x) {
                hits.push([x, y]);
            }
        }
    }
    hits.sort_by(|u, v| u.partial_cmp(v).expect("finite"));
    hits.dedup();
    (hits.len() >= 2).then(|| [hits[0], hits[hits.len() - 1]])
}

pub struct Svg {
    pub text: String,
    pub segments: usize,
}

pub fn render(h: &Heptagon<FieldElement>, adjoint: &QuarticForm<FieldElement>, spec: &PlotSpec) -> Svg {
    let [x0, x1, y0, y1] = spec.bounds;
    let s = spec.size_px;
    let sx = |x: f64| sig9((x - x0) / (x1 - x0) * s);
    let sy = |y: f64| sig9((y1 - y) / (y1 - y0) * s);
    let q = adjoint.map(Approx::of);
    let f = |x: f64, y: f64| {
        let v = [Approx(Complex64::new(x, 0.0)), Approx(Complex64::new(y, 0.0)), Approx(Complex64::new(1.0, 0.0))];
        q.eval_vec(&v).0.re
    };
    let attrs = |st: &Style| format!("stroke=\"{}\" fill=\"{}\" stroke-width=\"{}\"", st.stroke, st.fill, sig9(st.width));
    let mut t = String::new();
    writeln!(t, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>").unwrap();
    writeln!(
        t,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">",
        sig9(s)
    )
    .unwrap();
    writeln!(t, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>").unwrap();

    writeln!(t, "<g class=\"lines\" {}>", attrs(&spec.line)).unwrap();
    for (k, l) in h.lines().iter().enumerate() {
        let c: Vec<f64> = l.coeffs().iter().map(|x| Approx::of(x).0.re).collect();
        if let Some([a, b]) = clip_line([c[0], c[1], c[2]], spec.bounds) {
            writeln!(
                t,
                "<line class=\"line\" data-label=\"{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                k + 1,
                sx(a[0]),
                sy(a[1]),
                sx(b[0]),
                sy(b[1])
            )
            .unwrap();
        }
    }
    writeln!(t, "</g>").unwrap();

    let segs = marching_squares(f, spec.bounds, spec.resolution);
    let mut d = String::new();
    for [a, b] in &segs {
        write!(d, "M{} {}L{} {}", sx(a[0]), sy(a[1]), sx(b[0]), sy(b[1])).unwrap();
    }
    writeln!(t, "<path class=\"adjoint\" {} d=\"{d}\"/>", attrs(&spec.curve)).unwrap();

    let r = s / 150.0;
    let mut marker = |class: &str, label: String, p: Option<[f64; 2]>, st: &Style| {
        if let Some([x, y]) = p {
            writeln!(
                t,
                "<circle class=\"{class}\" data-label=\"{label}\" cx=\"{}\" cy=\"{}\" r=\"{}\" {}/>",
                sx(x),
                sy(y),
                sig9(r),
                attrs(st)
            )
            .unwrap();
        }
    };
    let res = residual(h);
    for ((i, j), p) in res.inner() {
        marker("inner", format!("p{i}{j}"), real_point(p.coords()), &spec.inner);
    }
    for ((i, j), p) in res.outer() {
        marker("outer", format!("p{i}{j}"), real_point(p.coords()), &spec.outer);
    }
    for i in 1..=7 {
        let j = i % 7 + 1;
        marker("vertex", format!("p{i}{j}"), real_point(h.meet(i, j).coords()), &spec.vertex);
    }
    writeln!(t, "</svg>").unwrap();
    Svg { text: t, segments: segs.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(123456789012.0), "123456789000");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(-2.5), "-2.5");
    }

    #[test]
    fn circle_is_traced() {
        let segs = marching_squares(|x, y| x * x + y * y - 1.0, [-2.0, 2.0, -2.0, 2.0], 64);
        assert!(!segs.is_empty());
        for [a, b] in segs {
            for p in [a, b] {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                assert!((r - 1.0).abs() < 0.01, "{p:?}");
            }
        }
    }

    #[test]
    fn clipping() {
        let seg = clip_line([1.0, -1.0, 0.0], [-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(seg, [[-1.0, -1.0], [1.0, 1.0]]);
        assert!(clip_line([1.0, 0.0, -5.0], [-1.0, 1.0, -1.0, 1.0]).is_none());
    }

    #[test]
    fn small_grids_rejected() {
        assert!(PlotSpec::new([-1.0, 1.0, -1.0, 1.0], 63).is_err());
        assert!(PlotSpec::new([1.0, -1.0, -1.0, 1.0], 64).is_err());
    }
}
