//! Quadrature rules and adaptive integration over triangles clipped by disks.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use crate::Point;

/// Seven-point degree-5 rule on the reference triangle (barycentric, weights sum to 1).
pub const TRI7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_1;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Integrates `f` over a triangle with the seven-point rule.
pub fn tri7<T, F>(v: &[Point; 3], f: &F) -> T
where
    T: Add<Output = T> + Mul<f64, Output = T> + Default,
    F: Fn(Point) -> T,
{
    let area = triangle_area(v);
    let mut acc = T::default();
    for (l, w) in TRI7 {
        let p = [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ];
        acc = acc + f(p) * (w * area);
    }
    acc
}

pub fn triangle_area(v: &[Point; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs()
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from `p` to the closed triangle.
pub fn point_triangle_distance(v: &[Point; 3], p: Point) -> f64 {
    let l = crate::mesh::barycentric(v, p);
    if l.iter().all(|&x| x >= 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|i| point_segment_distance(v[i], v[(i + 1) % 3], p))
        .fold(f64::INFINITY, f64::min)
}

fn point_segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist([a[0] + t * d[0], a[1] + t * d[1]], p)
}

/// Region of integration inside a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clip {
    /// Whole triangle.
    All,
    /// Part inside the closed disk.
    Inside { center: Point, radius: f64 },
    /// Part outside the open disk.
    Outside { center: Point, radius: f64 },
}

impl Clip {
    fn accepts(&self, p: Point) -> bool {
        match *self {
            Clip::All => true,
            Clip::Inside { center, radius } => dist(p, center) <= radius,
            Clip::Outside { center, radius } => dist(p, center) >= radius,
        }
    }

    /// `Some(true)` fully accepted, `Some(false)` fully rejected, `None` straddling.
    fn classify(&self, v: &[Point; 3]) -> Option<bool> {
        match *self {
            Clip::All => Some(true),
            Clip::Inside { center, radius } => {
                if v.iter().all(|&p| dist(p, center) <= radius) {
                    Some(true)
                } else if point_triangle_distance(v, center) >= radius {
                    Some(false)
                } else {
                    None
                }
            }
            Clip::Outside { center, radius } => {
                if point_triangle_distance(v, center) >= radius {
                    Some(true)
                } else if v.iter().all(|&p| dist(p, center) <= radius) {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

/// Options for [`integrate_triangle`].
#[derive(Debug, Clone)]
pub struct Adaptive {
    /// Maximum number of 4-way subdivisions.
    pub max_depth: u32,
    /// Points near which the integrand is nearly singular.
    pub singular: Vec<Point>,
    /// Subdivide while `diameter > ratio · distance` to a singular point.
    pub ratio: f64,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            max_depth: 8,
            singular: Vec::new(),
            ratio: 0.5,
        }
    }
}

/// Adaptive seven-point integration of `f` over the part of triangle `v` selected by `clip`.
///
/// Triangles straddling the clip circle, or too close to a singular point,
/// are split into four until `max_depth`; at the deepest level quadrature
/// points outside the clip region are dropped.
pub fn integrate_triangle<T, F>(v: &[Point; 3], clip: &Clip, opts: &Adaptive, f: &F) -> T
where
    T: Add<Output = T> + Mul<f64, Output = T> + Default,
    F: Fn(Point) -> T,
{
    integrate_rec(v, clip, opts, f, 0)
}

fn integrate_rec<T, F>(v: &[Point; 3], clip: &Clip, opts: &Adaptive, f: &F, depth: u32) -> T
where
    T: Add<Output = T> + Mul<f64, Output = T> + Default,
    F: Fn(Point) -> T,
{
    let class = clip.classify(v);
    if class == Some(false) {
        return T::default();
    }
    let diam = dist(v[0], v[1]).max(dist(v[1], v[2])).max(dist(v[2], v[0]));
    let near_singular = opts
        .singular
        .iter()
        .any(|&s| diam > opts.ratio * point_triangle_distance(v, s));
    if depth < opts.max_depth && (class.is_none() || near_singular) {
        let m = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let (m01, m12, m20) = (m(v[0], v[1]), m(v[1], v[2]), m(v[2], v[0]));
        return [
            [v[0], m01, m20],
            [m01, v[1], m12],
            [m20, m12, v[2]],
            [m01, m12, m20],
        ]
        .iter()
        .fold(T::default(), |acc, t| acc + integrate_rec(t, clip, opts, f, depth + 1));
    }
    if class == Some(true) {
        tri7(v, f)
    } else {
        tri7(v, &|p| if clip.accepts(p) { f(p) } else { T::default() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 8, 16] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn tri7_is_degree_five() {
        let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // ∫ x^a y^b over the unit simplex = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let q: f64 = tri7(&v, &|p: Point| p[0].powi(a as i32) * p[1].powi(b as i32));
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn disk_area_by_clipping() {
        let square = [
            [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0]],
            [[-1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        ];
        let clip = Clip::Inside {
            center: [0.1, 0.0],
            radius: 0.5,
        };
        let opts = Adaptive {
            max_depth: 12,
            ..Default::default()
        };
        let area: f64 = square
            .iter()
            .map(|t| integrate_triangle(t, &clip, &opts, &|_| 1.0))
            .sum();
        assert!((area - PI * 0.25).abs() < 1e-4, "{area}");
        let out = Clip::Outside {
            center: [0.1, 0.0],
            radius: 0.5,
        };
        let rest: f64 = square
            .iter()
            .map(|t| integrate_triangle(t, &out, &opts, &|_| 1.0))
            .sum();
        assert!((area + rest - 4.0).abs() < 1e-12);
    }
}
