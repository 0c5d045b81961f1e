//! Exact slice measures and areas of the polygonal regions.
//!
//! Every boundary of every region is the zero set of a continuous expression
//! that is affine on each of the eight triangles cut out of the unit square by
//! `u = ½`, `v = ½`, `u = v` and `u + v = 1`. On a slice, those triangles
//! become at most four intervals, so boundary crossings are found exactly by
//! linear interpolation and membership is constant between them. Slice length
//! is linear in the slice coordinate between consecutive x-coordinates of
//! boundary-line intersections, so areas follow exactly from one midpoint
//! evaluation per segment.

use serde::Serialize;

use super::{
    asq_contains_levels, asq_levels, in_d1, in_d2, in_s1, in_s3, m, ps_contains_unchecked,
    ps_pvalue_unchecked, s_contains_unchecked, ALPHA_MAX,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slice {
    /// Fix `u` and measure over `v`.
    U(f64),
    /// Fix `v` and measure over `u`.
    V(f64),
}

/// A measurable subset of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Shape {
    S { alpha: f64 },
    Ps { alpha: f64, lambda: f64 },
    /// `{p_PS ≤ α}`.
    PsEffective { alpha: f64, lambda: f64 },
    Asq { alpha: f64, lambda: f64, omit_center: bool },
    S1 { alpha: f64 },
    /// `D1 ∪ D2`.
    Bands { alpha: f64 },
    /// `D1 ∩ D2`.
    Crossing { alpha: f64 },
    S3 { alpha: f64 },
    /// Effective PS region minus `R_PS`.
    PsExtra { alpha: f64, lambda: f64 },
}

impl Shape {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        match *self {
            Shape::S { alpha } => s_contains_unchecked(u, v, alpha),
            Shape::Ps { alpha, lambda } => ps_contains_unchecked(u, v, alpha, lambda),
            Shape::PsEffective { alpha, lambda } => ps_pvalue_unchecked(u, v, lambda) <= alpha,
            Shape::Asq { alpha, lambda, omit_center } => match asq_levels(alpha, lambda) {
                Ok((k, kept)) => asq_contains_levels(u, v, k, kept, omit_center),
                Err(_) => false,
            },
            Shape::S1 { alpha } => in_s1(u, v, alpha),
            Shape::Bands { alpha } => in_d1(u, v, alpha) || in_d2(u, v, alpha),
            Shape::Crossing { alpha } => in_d1(u, v, alpha) && in_d2(u, v, alpha),
            Shape::S3 { alpha } => in_s3(u, v, alpha),
            Shape::PsExtra { alpha, lambda } => {
                ps_pvalue_unchecked(u, v, lambda) <= alpha && !ps_contains_unchecked(u, v, alpha, lambda)
            }
        }
    }

    /// Values of all boundary expressions at `(u, v)`.
    fn boundaries(&self, u: f64, v: f64, out: &mut Vec<f64>) {
        out.clear();
        let (mu, mv) = (m(u), m(v));
        let a = (u - v).abs();
        let b = (u + v - 1.0).abs();
        let w1 = (u + v).min(2.0 - u - v);
        let w2 = 1.0 - (v - u).abs();
        let corners = |out: &mut Vec<f64>, alpha: f64| {
            out.push(mu - 0.5 * alpha);
            out.push(mv - 0.5 * alpha);
        };
        let bands = |out: &mut Vec<f64>, alpha: f64| {
            out.push(4.0 * a - alpha);
            out.push(4.0 * b - alpha);
        };
        let cone = |out: &mut Vec<f64>| {
            out.push(a - 2.0 * b);
            out.push(b - 2.0 * a);
        };
        match *self {
            Shape::S { alpha } => {
                corners(out, alpha);
                bands(out, alpha);
                out.push((v - 0.5).abs() + mu - 0.75 * alpha);
                out.push((u - 0.5).abs() + mv - 0.75 * alpha);
            }
            Shape::S1 { alpha } => corners(out, alpha),
            Shape::Bands { alpha } | Shape::Crossing { alpha } => {
                corners(out, alpha);
                bands(out, alpha);
            }
            Shape::S3 { alpha } => {
                corners(out, alpha);
                out.push((v - 0.5).abs() + mu - 0.75 * alpha);
                out.push((u - 0.5).abs() + mv - 0.75 * alpha);
            }
            Shape::Ps { alpha, lambda } => ps_raw_boundaries(out, alpha, lambda, mu, mv, a, b, w1, w2),
            Shape::PsEffective { alpha, lambda } => ps_eff_boundaries(out, alpha, lambda, mu, mv, a, b, w1, w2),
            Shape::PsExtra { alpha, lambda } => {
                ps_raw_boundaries(out, alpha, lambda, mu, mv, a, b, w1, w2);
                let mut more = Vec::new();
                ps_eff_boundaries(&mut more, alpha, lambda, mu, mv, a, b, w1, w2);
                out.extend(more);
            }
            Shape::Asq { alpha, .. } => {
                let k = (1.0 / alpha).round() as usize;
                for j in 1..=k {
                    let level = j as f64 * 0.5 * alpha;
                    out.push(mu - level);
                    out.push(mv - level);
                }
            }
        }
        if matches!(self, Shape::Ps { .. } | Shape::PsEffective { .. } | Shape::PsExtra { .. }) {
            cone(out);
        }
    }

    /// Candidate x-coordinates where the slice-length profile may kink or jump.
    fn kink_candidates(&self) -> Vec<f64> {
        if let Shape::Asq { alpha, .. } = *self {
            let k = (1.0 / alpha).round() as usize;
            let mut xs: Vec<f64> = (0..=k).flat_map(|j| [j as f64 * 0.5 * alpha, 1.0 - j as f64 * 0.5 * alpha]).collect();
            xs.extend([0.0, 0.5, 1.0]);
            return finalize_candidates(xs);
        }
        line_intersection_candidates(self)
    }
}

#[allow(clippy::too_many_arguments)]
fn ps_raw_boundaries(out: &mut Vec<f64>, alpha: f64, lambda: f64, mu: f64, mv: f64, a: f64, b: f64, w1: f64, w2: f64) {
    out.push(mu - 0.5 * alpha);
    out.push(mv - 0.5 * alpha);
    out.push(4.0 * a - alpha);
    out.push(4.0 * b - alpha);
    let limit = alpha + lambda * (1.0 - alpha);
    out.push(w1 - limit);
    out.push(w2 - limit);
}

#[allow(clippy::too_many_arguments)]
fn ps_eff_boundaries(out: &mut Vec<f64>, alpha: f64, lambda: f64, mu: f64, mv: f64, a: f64, b: f64, w1: f64, w2: f64) {
    out.push(mu - 0.5 * alpha);
    out.push(mv - 0.5 * alpha);
    for (dist, w) in [(a, w1), (b, w2)] {
        // Every lower bound of the band route against α and against every upper bound.
        out.push(4.0 * dist - alpha);
        out.push(4.0 * dist - 2.0 * mu);
        out.push(4.0 * dist - 2.0 * mv);
        out.push(4.0 * dist - ALPHA_MAX);
        if lambda < 1.0 {
            let s = 1.0 - lambda;
            out.push(w - lambda - alpha * s);
            out.push(w - lambda - 2.0 * mu * s);
            out.push(w - lambda - 2.0 * mv * s);
            out.push(w - lambda - ALPHA_MAX * s);
        }
    }
}

/// Exact one-dimensional measure of a slice of `shape`.
pub fn slice_measure(shape: &Shape, slice: Slice) -> f64 {
    let (x, point): (f64, Box<dyn Fn(f64) -> (f64, f64)>) = match slice {
        Slice::U(x) => (x, Box::new(move |t| (x, t))),
        Slice::V(y) => (y, Box::new(move |t| (t, y))),
    };
    let mut cuts = vec![0.0, 1.0, 0.5, x.clamp(0.0, 1.0), (1.0 - x).clamp(0.0, 1.0)];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pts = cuts.clone();
    let mut ea = Vec::new();
    let mut eb = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ua, va) = point(a);
        let (ub, vb) = point(b);
        shape.boundaries(ua, va, &mut ea);
        shape.boundaries(ub, vb, &mut eb);
        for (&fa, &fb) in ea.iter().zip(&eb) {
            if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
                let t = a + (b - a) * fa / (fa - fb);
                pts.push(t.clamp(a, b));
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        if len > 0.0 {
            let (u, v) = point(0.5 * (w[0] + w[1]));
            if shape.contains(u, v) {
                total += len;
            }
        }
    }
    total
}

/// One piece of a piecewise-linear slice profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    /// Profile value at the segment midpoint.
    pub mid: f64,
    pub slope: f64,
}

impl Segment {
    pub fn value_at(&self, x: f64) -> f64 {
        self.mid + self.slope * (x - 0.5 * (self.a + self.b))
    }
}

/// The map `x ↦ slice_measure(shape, U(x))` as exact linear pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub segments: Vec<Segment>,
}

impl Profile {
    pub fn area(&self) -> f64 {
        self.segments.iter().map(|s| (s.b - s.a) * s.mid).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.value_at(s.a), s.value_at(s.b)])
            .fold(0.0, f64::max)
    }

    /// Value just inside the right end of the unit interval.
    pub fn right_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.value_at(s.b))
    }
}

pub fn profile(shape: &Shape) -> Profile {
    let xs = shape.kink_candidates();
    let segments = xs
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            let g1 = slice_measure(shape, Slice::U(a + 0.25 * len));
            let g3 = slice_measure(shape, Slice::U(a + 0.75 * len));
            Segment { a, b, mid: 0.5 * (g1 + g3), slope: (g3 - g1) / (0.5 * len) }
        })
        .collect();
    Profile { segments }
}

pub fn shape_area(shape: &Shape) -> f64 {
    profile(shape).area()
}

fn finalize_candidates(mut xs: Vec<f64>) -> Vec<f64> {
    xs.retain(|x| x.is_finite() && (0.0..=1.0).contains(x));
    xs.extend([0.0, 1.0]);
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        match out.last() {
            Some(&last) if x - last <= 1e-13 => {}
            _ => out.push(x),
        }
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

type Line = [f64; 3];

const FAN: [[(f64, f64); 3]; 8] = [
    [(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)],
    [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5)],
    [(1.0, 0.0), (0.5, 0.0), (0.5, 0.5)],
    [(1.0, 0.0), (1.0, 0.5), (0.5, 0.5)],
    [(0.0, 1.0), (0.0, 0.5), (0.5, 0.5)],
    [(0.0, 1.0), (0.5, 1.0), (0.5, 0.5)],
    [(1.0, 1.0), (0.5, 1.0), (0.5, 0.5)],
    [(1.0, 1.0), (1.0, 0.5), (0.5, 0.5)],
];

/// x-coordinates of all pairwise intersections of boundary lines inside each fan triangle.
fn line_intersection_candidates(shape: &Shape) -> Vec<f64> {
    let fixed: [Line; 8] = [
        [1.0, 0.0, 0.0],
        [1.0, 0.0, -0.5],
        [1.0, 0.0, -1.0],
        [0.0, 1.0, 0.0],
        [0.0, 1.0, -0.5],
        [0.0, 1.0, -1.0],
        [1.0, -1.0, 0.0],
        [1.0, 1.0, -1.0],
    ];
    let mut xs = vec![0.0, 0.5, 1.0];
    let mut e0 = Vec::new();
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    for tri in FAN {
        let pick = |w: [f64; 3]| {
            (
                w[0] * tri[0].0 + w[1] * tri[1].0 + w[2] * tri[2].0,
                w[0] * tri[0].1 + w[1] * tri[1].1 + w[2] * tri[2].1,
            )
        };
        let q = [pick([0.6, 0.2, 0.2]), pick([0.2, 0.6, 0.2]), pick([0.2, 0.2, 0.6])];
        shape.boundaries(q[0].0, q[0].1, &mut e0);
        shape.boundaries(q[1].0, q[1].1, &mut e1);
        shape.boundaries(q[2].0, q[2].1, &mut e2);
        let mut lines: Vec<Line> = fixed.to_vec();
        for i in 0..e0.len() {
            if let Some(line) = fit_affine(q, [e0[i], e1[i], e2[i]]) {
                lines.push(line);
            }
        }
        let (xmin, xmax) = tri.iter().fold((1.0f64, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
        let (ymin, ymax) = tri.iter().fold((1.0f64, 0.0f64), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
        let inside = |x: f64, y: f64| {
            let eps = 1e-9;
            x >= xmin - eps && x <= xmax + eps && y >= ymin - eps && y <= ymax + eps
        };
        for (i, l1) in lines.iter().enumerate() {
            if l1[1].abs() < 1e-14 && l1[0].abs() > 1e-14 {
                let x = -l1[2] / l1[0];
                if x >= xmin - 1e-9 && x <= xmax + 1e-9 {
                    xs.push(x);
                }
            }
            for l2 in &lines[i + 1..] {
                let det = l1[0] * l2[1] - l1[1] * l2[0];
                if det.abs() < 1e-14 {
                    continue;
                }
                let x = (l1[1] * l2[2] - l1[2] * l2[1]) / det;
                let y = (l1[2] * l2[0] - l1[0] * l2[2]) / det;
                if inside(x, y) {
                    xs.push(x);
                }
            }
        }
    }
    finalize_candidates(xs)
}

/// Coefficients `[a, b, c]` of `a u + b v + c` through three samples, or `None` if constant.
fn fit_affine(q: [(f64, f64); 3], e: [f64; 3]) -> Option<Line> {
    let (x0, y0) = q[0];
    let (dx1, dy1, de1) = (q[1].0 - x0, q[1].1 - y0, e[1] - e[0]);
    let (dx2, dy2, de2) = (q[2].0 - x0, q[2].1 - y0, e[2] - e[0]);
    let det = dx1 * dy2 - dx2 * dy1;
    let a = (de1 * dy2 - de2 * dy1) / det;
    let b = (dx1 * de2 - dx2 * de1) / det;
    if a.abs() < 1e-12 && b.abs() < 1e-12 {
        return None;
    }
    Some([a, b, e[0] - a * x0 - b * y0])
}
