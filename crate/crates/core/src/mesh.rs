//! Interface-conforming triangulations.
//!
//! Two generators are provided: a structured grid over a strip partition
//! (interfaces always fall on grid lines) and a ring mesh of a polygonal
//! disk. Boundary nodes are listed counterclockwise; that order is the
//! boundary trace basis used by the DtN module.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::geometry::Partition;
use crate::{Error, Point, Result};

/// Smallest admissible interior angle, in degrees.
pub const MIN_ANGLE_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub region: usize,
}

/// Edge shared by two triangles of different regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceEdge {
    pub nodes: [usize; 2],
    /// Region tags on the two sides, smaller first.
    pub regions: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<Triangle>,
    /// Closed counterclockwise loop; edge `i` joins `boundary_nodes[i]` and `boundary_nodes[i+1]`.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Boundary trace basis ordering.
    pub boundary_nodes: Vec<usize>,
    pub interface_edges: Vec<InterfaceEdge>,
    pub h: f64,
}

/// Generates a structured mesh of the (extended) partition with spacing at most `h`.
pub fn generate_mesh(p: &Partition, h: f64) -> Result<Mesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("mesh size h = {h} must be positive")));
    }
    let mut strips: Vec<_> = p.regions.iter().collect();
    strips.sort_by(|a, b| a.bounds.y0.total_cmp(&b.bounds.y0));
    for s in &strips {
        let t = s.bounds.height();
        if h > t * (1.0 + 1e-12) {
            return Err(Error::TooCoarse { h, thickness: t });
        }
    }
    let ext = p.extended_domain();
    let cells = |len: f64| ((len / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let nx = cells(ext.width());

    // y levels and the region of each cell row
    let mut ys = vec![strips[0].bounds.y0];
    let mut row_region = Vec::new();
    for s in &strips {
        let ny = cells(s.bounds.height());
        for i in 1..=ny {
            let y = if i == ny {
                s.bounds.y1
            } else {
                s.bounds.y0 + s.bounds.height() * i as f64 / ny as f64
            };
            ys.push(y);
            row_region.push(s.index);
        }
    }
    let xs: Vec<f64> = (0..=nx)
        .map(|i| {
            if i == nx {
                ext.x1
            } else {
                ext.x0 + ext.width() * i as f64 / nx as f64
            }
        })
        .collect();
    let ny = ys.len() - 1;
    let id = |i: usize, j: usize| j * (nx + 1) + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            nodes.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let region = row_region[j];
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push(Triangle { nodes: [a, b, c], region });
            triangles.push(Triangle { nodes: [a, c, d], region });
        }
    }

    let mut boundary_nodes = Vec::with_capacity(2 * (nx + ny));
    boundary_nodes.extend((0..nx).map(|i| id(i, 0)));
    boundary_nodes.extend((0..ny).map(|j| id(nx, j)));
    boundary_nodes.extend((1..=nx).rev().map(|i| id(i, ny)));
    boundary_nodes.extend((1..=ny).rev().map(|j| id(0, j)));

    Mesh::from_parts(nodes, triangles, boundary_nodes, h)
}

/// Ring mesh of the polygonal disk of the given radius, region tag 1.
///
/// Ring `i` has `6i` nodes on the circle of radius `i·radius/m`, `m = ⌈radius/h⌉`.
pub fn disk_mesh(center: Point, radius: f64, h: f64) -> Result<Mesh> {
    if !(radius > 0.0) || !(h > 0.0) || h > radius {
        return Err(Error::InvalidArgument(format!(
            "disk mesh needs 0 < h <= radius, got h = {h}, radius = {radius}"
        )));
    }
    let m = ((radius / h) * (1.0 - 1e-12)).ceil() as usize;
    let mut nodes = vec![center];
    let mut ring_start = vec![0usize];
    for i in 1..=m {
        ring_start.push(nodes.len());
        let r = radius * i as f64 / m as f64;
        let n = 6 * i;
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            nodes.push([center[0] + r * t.cos(), center[1] + r * t.sin()]);
        }
    }
    let ring_len = |i: usize| if i == 0 { 1 } else { 6 * i };
    let angle = |i: usize, j: usize| 2.0 * PI * j as f64 / ring_len(i) as f64;

    let mut triangles = Vec::new();
    for i in 1..=m {
        let (inner, outer) = (ring_start[i - 1], ring_start[i]);
        let (ni, no) = (ring_len(i - 1), ring_len(i));
        if i == 1 {
            for j in 0..no {
                triangles.push(Triangle {
                    nodes: [inner, outer + j, outer + (j + 1) % no],
                    region: 1,
                });
            }
            continue;
        }
        // Merge the two rings by angle.
        let (mut a, mut b) = (0usize, 0usize);
        while a < ni || b < no {
            let next_a = if a < ni { angle(i - 1, a + 1) } else { f64::INFINITY };
            let next_b = if b < no { angle(i, b + 1) } else { f64::INFINITY };
            let pa = inner + a % ni;
            let pb = outer + b % no;
            if next_b <= next_a + 1e-12 {
                triangles.push(Triangle {
                    nodes: [pa, pb, outer + (b + 1) % no],
                    region: 1,
                });
                b += 1;
            } else {
                triangles.push(Triangle {
                    nodes: [pa, pb, inner + (a + 1) % ni],
                    region: 1,
                });
                a += 1;
            }
        }
    }
    let boundary_nodes = (ring_start[m]..nodes.len()).collect();
    Mesh::from_parts(nodes, triangles, boundary_nodes, h)
}

impl Mesh {
    fn from_parts(
        nodes: Vec<Point>,
        mut triangles: Vec<Triangle>,
        boundary_nodes: Vec<usize>,
        h: f64,
    ) -> Result<Self> {
        for t in triangles.iter_mut() {
            if signed_area(&nodes, t.nodes) < 0.0 {
                t.nodes.swap(1, 2);
            }
        }
        let nb = boundary_nodes.len();
        let boundary_edges = (0..nb)
            .map(|i| [boundary_nodes[i], boundary_nodes[(i + 1) % nb]])
            .collect();
        let mut mesh = Mesh {
            nodes,
            triangles,
            boundary_edges,
            boundary_nodes,
            interface_edges: Vec::new(),
            h,
        };
        mesh.interface_edges = mesh.find_interface_edges();
        mesh.check()?;
        Ok(mesh)
    }

    fn find_interface_edges(&self) -> Vec<InterfaceEdge> {
        let mut owner: HashMap<[usize; 2], usize> = HashMap::new();
        let mut out = Vec::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t.nodes[e], t.nodes[(e + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                match owner.get(&key) {
                    Some(&r) if r != t.region => out.push(InterfaceEdge {
                        nodes: key,
                        regions: [r.min(t.region), r.max(t.region)],
                    }),
                    Some(_) => {}
                    None => {
                        owner.insert(key, t.region);
                    }
                }
            }
        }
        out.sort_by_key(|e| e.nodes);
        out
    }

    /// Positive areas, minimum angle and a closed counterclockwise boundary loop.
    pub fn check(&self) -> Result<()> {
        let floor = MIN_ANGLE_DEG.to_radians();
        for (i, t) in self.triangles.iter().enumerate() {
            if t.nodes.iter().any(|&n| n >= self.nodes.len()) {
                return Err(Error::MeshQuality(format!("triangle {i} references a missing node")));
            }
            if !(signed_area(&self.nodes, t.nodes) > 0.0) {
                return Err(Error::MeshQuality(format!("triangle {i} has zero area")));
            }
            let ang = self.min_angle(i);
            if ang < floor {
                return Err(Error::MeshQuality(format!(
                    "triangle {i} has minimum angle {:.2} deg below {MIN_ANGLE_DEG}",
                    ang.to_degrees()
                )));
            }
        }
        // Each boundary edge must belong to exactly one triangle.
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t.nodes[e], t.nodes[(e + 1) % 3]);
                *count.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        let open: usize = count.values().filter(|&&c| c == 1).count();
        if open != self.boundary_edges.len() {
            return Err(Error::MeshQuality(format!(
                "{open} boundary edges in the triangulation, {} listed",
                self.boundary_edges.len()
            )));
        }
        for e in &self.boundary_edges {
            if count.get(&[e[0].min(e[1]), e[0].max(e[1])]) != Some(&1) {
                return Err(Error::MeshQuality(format!("listed edge {e:?} is not on the boundary")));
            }
        }
        let loop_area: f64 = self
            .boundary_edges
            .iter()
            .map(|e| {
                let (a, b) = (self.nodes[e[0]], self.nodes[e[1]]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            * 0.5;
        if !(loop_area > 0.0) {
            return Err(Error::MeshQuality("boundary loop is not counterclockwise".into()));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_nodes.len()
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        let n = self.triangles[t].nodes;
        [self.nodes[n[0]], self.nodes[n[1]], self.nodes[n[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.nodes, self.triangles[t].nodes)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let v = self.vertices(t);
        [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ]
    }

    /// Gradients of the three P1 hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.vertices(t);
        let two_area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    /// Real P1 element stiffness `area · ∇φ_a · ∇φ_b`.
    pub fn element_stiffness(&self, t: usize) -> [[f64; 3]; 3] {
        let g = self.hat_gradients(t);
        let area = self.area(t);
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                k[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        k
    }

    fn min_angle(&self, t: usize) -> f64 {
        let v = self.vertices(t);
        (0..3)
            .map(|i| {
                let (p, q, r) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
                let u = [q[0] - p[0], q[1] - p[1]];
                let w = [r[0] - p[0], r[1] - p[1]];
                let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.min_angle(t))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    /// Whether node `n` is a vertex of some triangle tagged `region`.
    pub fn node_regions(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for t in &self.triangles {
            for &n in &t.nodes {
                if !out[n].contains(&t.region) {
                    out[n].push(t.region);
                }
            }
        }
        out
    }

    /// Largest region tag in use.
    pub fn max_region(&self) -> usize {
        self.triangles.iter().map(|t| t.region).max().unwrap_or(0)
    }

    /// Position of each node in the boundary trace basis, if on the boundary.
    pub fn boundary_position(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.nodes.len()];
        for (i, &n) in self.boundary_nodes.iter().enumerate() {
            pos[n] = Some(i);
        }
        pos
    }

    /// Evaluates `f` at the boundary nodes, in trace order.
    pub fn trace_of<T>(&self, f: impl Fn(Point) -> T) -> Vec<T> {
        self.boundary_nodes.iter().map(|&n| f(self.nodes[n])).collect()
    }

    /// Plain-text serialisation:
    /// `mesh v1 <nnodes> <ntris> <nbedges>`, then `x y`, `i j k region`, `i j` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "mesh v1 {} {} {}",
            self.nodes.len(),
            self.triangles.len(),
            self.boundary_edges.len()
        );
        for p in &self.nodes {
            let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {} {}", t.nodes[0], t.nodes[1], t.nodes[2], t.region);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {}", e[0], e[1]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| Error::MeshParse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| bad(0, "empty input"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 5 || head[0] != "mesh" || head[1] != "v1" {
            return Err(bad(hl, "expected `mesh v1 <nnodes> <ntris> <nbedges>`"));
        }
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad(hl, "bad count"));
        let (nn, nt, ne) = (count(head[2])?, count(head[3])?, count(head[4])?);

        fn fields<T: std::str::FromStr>(
            line: usize,
            l: &str,
            n: usize,
        ) -> std::result::Result<Vec<T>, Error> {
            let v: std::result::Result<Vec<T>, _> = l.split_whitespace().map(str::parse).collect();
            match v {
                Ok(v) if v.len() == n => Ok(v),
                _ => Err(Error::MeshParse {
                    line: line + 1,
                    msg: format!("expected {n} fields"),
                }),
            }
        }
        let mut nodes = Vec::with_capacity(nn);
        for _ in 0..nn {
            let (i, l) = lines.next().ok_or_else(|| bad(hl, "missing node lines"))?;
            let v: Vec<f64> = fields(i, l, 2)?;
            nodes.push([v[0], v[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (i, l) = lines.next().ok_or_else(|| bad(hl, "missing triangle lines"))?;
            let v: Vec<usize> = fields(i, l, 4)?;
            triangles.push(Triangle {
                nodes: [v[0], v[1], v[2]],
                region: v[3],
            });
        }
        let mut edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (i, l) = lines.next().ok_or_else(|| bad(hl, "missing boundary edge lines"))?;
            let v: Vec<usize> = fields(i, l, 2)?;
            edges.push([v[0], v[1]]);
        }
        if let Some((i, _)) = lines.next() {
            return Err(bad(i, "trailing data"));
        }
        for (k, e) in edges.iter().enumerate() {
            let next = edges[(k + 1) % edges.len()];
            if e[1] != next[0] {
                return Err(bad(hl, "boundary edges do not form a closed loop in order"));
            }
        }
        let boundary_nodes = edges.iter().map(|e| e[0]).collect();
        let h = triangles
            .iter()
            .flat_map(|t| {
                let n = t.nodes;
                (0..3).map(move |e| (n[e], n[(e + 1) % 3]))
            })
            .filter(|&(a, b)| a < nodes.len() && b < nodes.len())
            .map(|(a, b)| {
                let (p, q): (Point, Point) = (nodes[a], nodes[b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(0.0, f64::max);
        Mesh::from_parts(nodes, triangles, boundary_nodes, h)
    }

    /// SHA-256 of the text serialisation, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

fn signed_area(nodes: &[Point], t: [usize; 3]) -> f64 {
    let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Barycentric coordinates of `p` in triangle `v`.
pub fn barycentric(v: &[Point; 3], p: Point) -> [f64; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let l1 = ((p[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (p[1] - v[0][1])) / det;
    let l2 = ((v[1][0] - v[0][0]) * (p[1] - v[0][1]) - (p[0] - v[0][0]) * (v[1][1] - v[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Bucket grid for point location.
#[derive(Debug, Clone)]
pub struct PointLocator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let cell = (mesh.h * 2.0).max(1e-12);
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.triangles.len() {
            let v = mesh.vertices(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in &v {
                for d in 0..2 {
                    a[d] = a[d].min(p[d]);
                    b[d] = b[d].max(p[d]);
                }
            }
            let ix = |x: f64| (((x - lo[0]) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let iy = |y: f64| (((y - lo[1]) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            for j in iy(a[1])..=iy(b[1]) {
                for i in ix(a[0])..=ix(b[0]) {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, mesh: &Mesh, p: Point) -> Option<(usize, [f64; 3])> {
        let i = ((p[0] - self.origin[0]) / self.cell).floor();
        let j = ((p[1] - self.origin[1]) / self.cell).floor();
        let tol = 1e-10;
        if i < -1.0 || j < -1.0 || i > self.nx as f64 || j > self.ny as f64 {
            return None;
        }
        let i = (i.max(0.0) as usize).min(self.nx - 1);
        let j = (j.max(0.0) as usize).min(self.ny - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let l = barycentric(&mesh.vertices(t), p);
            let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= -tol && best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t, l, worst));
            }
        }
        best.map(|(t, l, _)| (t, l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_partition, Rect};

    #[test]
    fn conformity_two_strips() {
        let p = build_partition(2, Rect::unit(), false).unwrap();
        let m = generate_mesh(&p, 0.5).unwrap();
        for (t, tri) in m.triangles.iter().enumerate() {
            let r = p.region(tri.region).unwrap();
            let c = m.centroid(t);
            assert!(r.bounds.contains(c));
            for v in m.vertices(t) {
                assert!(r.bounds.contains(v));
            }
        }
    }

    #[test]
    fn node_count_structured() {
        for m in [4usize, 8, 12] {
            let p = build_partition(2, Rect::unit(), false).unwrap();
            let mesh = generate_mesh(&p, 1.0 / m as f64).unwrap();
            assert_eq!(mesh.node_count(), (m + 1) * (m + 1));
            assert_eq!(mesh.boundary_count(), 4 * m);
            assert_eq!(mesh.triangles.len(), 2 * m * m);
        }
    }

    #[test]
    fn too_coarse() {
        let p = build_partition(2, Rect::unit(), false).unwrap();
        assert!(matches!(generate_mesh(&p, 0.6), Err(Error::TooCoarse { .. })));
    }

    #[test]
    fn interface_edges_on_interface_lines() {
        let p = build_partition(3, Rect::unit(), false).unwrap();
        let m = generate_mesh(&p, 1.0 / 12.0).unwrap();
        assert_eq!(m.interface_edges.len(), 2 * 12);
        for e in &m.interface_edges {
            let y = m.nodes[e.nodes[0]][1];
            assert!((m.nodes[e.nodes[1]][1] - y).abs() < 1e-15);
            let k = e.regions[1];
            assert!((p.interface(k).unwrap().height - y).abs() < 1e-15);
        }
    }

    #[test]
    fn refinement_nests() {
        let p = build_partition(3, Rect::unit(), true).unwrap();
        let coarse = generate_mesh(&p, 1.0 / 6.0).unwrap();
        let fine = generate_mesh(&p, 1.0 / 12.0).unwrap();
        for q in &coarse.nodes {
            assert!(fine
                .nodes
                .iter()
                .any(|f| (f[0] - q[0]).abs() < 1e-13 && (f[1] - q[1]).abs() < 1e-13));
        }
    }

    #[test]
    fn extension_is_meshed() {
        let p = build_partition(2, Rect::unit(), true).unwrap();
        let m = generate_mesh(&p, 0.125).unwrap();
        assert!(m.triangles.iter().any(|t| t.region == 0));
        assert!(m.nodes.iter().any(|q| (q[1] + 0.5).abs() < 1e-15));
    }

    #[test]
    fn disk_mesh_quality() {
        let m = disk_mesh([0.0, 0.0], 1.0, 1.0 / 8.0).unwrap();
        assert_eq!(m.boundary_count(), 48);
        assert_eq!(m.node_count(), 1 + 3 * 8 * 9);
        let area: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
        let polygon = 0.5 * 48.0 * (2.0 * PI / 48.0).sin();
        assert!((area - polygon).abs() < 1e-12);
        assert!(m.min_angle_deg() > MIN_ANGLE_DEG);
        for &n in &m.boundary_nodes {
            let q = m.nodes[n];
            assert!((q[0].hypot(q[1]) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn text_round_trip_and_hash() {
        let p = build_partition(2, Rect::unit(), false).unwrap();
        let m = generate_mesh(&p, 0.25).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_nodes, m.boundary_nodes);
        assert_eq!(back.interface_edges, m.interface_edges);
        assert_eq!(back.hash(), m.hash());
        assert!(Mesh::from_text("mesh v2 1 0 0").is_err());
        let err = Mesh::from_text("mesh v1 1 0 0\n0.0 zz\n").unwrap_err();
        assert!(matches!(err, Error::MeshParse { line: 2, .. }));
    }

    #[test]
    fn locate_points() {
        let m = disk_mesh([0.0, 0.0], 1.0, 0.1).unwrap();
        let loc = PointLocator::new(&m);
        let (t, l) = loc.locate(&m, [0.3, -0.2]).unwrap();
        let v = m.vertices(t);
        let x = l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0];
        assert!((x - 0.3).abs() < 1e-12);
        assert!(loc.locate(&m, [2.0, 0.0]).is_none());
    }
}
