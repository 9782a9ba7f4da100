//! Layered partitions of a rectangle into horizontal strips.
//!
//! Regions are numbered bottom to top, `D_1 … D_N`. Interface `Σ_k` is the
//! flat segment below `D_k`; `Σ_1` is the bottom edge of the domain. When the
//! extension is requested an extra strip `D_0` of thickness `r0` is appended
//! below `Σ_1`, which then becomes an interior interface of the extended
//! domain.

use std::collections::VecDeque;

use crate::{Error, Point, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    /// Euclidean distance from `p` to the closed rectangle (0 inside).
    pub fn distance(&self, p: Point) -> f64 {
        let dx = (self.x0 - p[0]).max(0.0).max(p[0] - self.x1);
        let dy = (self.y0 - p[1]).max(0.0).max(p[1] - self.y1);
        dx.hypot(dy)
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

/// One region `D_j` of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub index: usize,
    pub bounds: Rect,
}

/// Flat interface `Σ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub index: usize,
    /// Height of the horizontal segment.
    pub height: f64,
    pub x0: f64,
    pub x1: f64,
    /// Region below, `None` when `Σ_k` lies on the outer boundary.
    pub lower: Option<usize>,
    pub upper: usize,
    /// Marked interior point `P_k`.
    pub marked: Point,
}

impl Interface {
    pub fn is_interior(&self) -> bool {
        self.lower.is_some()
    }

    pub fn length(&self) -> f64 {
        self.x1 - self.x0
    }

    /// Unit normal pointing from the lower into the upper region.
    pub fn normal(&self) -> Point {
        [0.0, 1.0]
    }
}

/// Known decomposition of the domain into strips.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub domain: Rect,
    /// Regions ordered by index; `regions[0]` is `D_0` when the extension is on.
    pub regions: Vec<Region>,
    pub interfaces: Vec<Interface>,
    pub r0: f64,
    /// Lipschitz constant of the boundary pieces (flat, hence zero).
    pub lipschitz: f64,
    /// Area bound `|Ω| / r0²`.
    pub area_bound: f64,
    pub with_extension: bool,
}

/// Chain of regions `D_{j_1}, …, D_{j_M}` linked through flat interfaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub regions: Vec<usize>,
    /// `links[i]` is the interface shared by `regions[i]` and `regions[i + 1]`.
    pub links: Vec<usize>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn target(&self) -> usize {
        *self.regions.last().expect("chains are never empty")
    }
}

/// Splits `domain` into `strips` horizontal strips of equal thickness.
pub fn build_partition(strips: usize, domain: Rect, with_extension: bool) -> Result<Partition> {
    if strips == 0 {
        return Err(Error::InvalidSpec("strip count must be at least 1".into()));
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0)
        || !domain.width().is_finite()
        || !domain.height().is_finite()
    {
        return Err(Error::InvalidSpec(format!(
            "rectangle [{}, {}] x [{}, {}] is degenerate",
            domain.x0, domain.x1, domain.y0, domain.y1
        )));
    }
    let thickness = domain.height() / strips as f64;
    let r0 = thickness;
    if domain.width() < 2.0 * r0 / 3.0 {
        return Err(Error::InvalidSpec(format!(
            "width {} cannot hold a flat portion of radius r0/3 = {}",
            domain.width(),
            r0 / 3.0
        )));
    }
    let level = |k: usize| {
        if k == strips {
            domain.y1
        } else {
            domain.y0 + k as f64 * thickness
        }
    };
    let mid_x = 0.5 * (domain.x0 + domain.x1);

    let mut regions = Vec::with_capacity(strips + 1);
    if with_extension {
        regions.push(Region {
            index: 0,
            bounds: Rect::new(domain.x0, domain.y0 - r0, domain.x1, domain.y0),
        });
    }
    for j in 1..=strips {
        regions.push(Region {
            index: j,
            bounds: Rect::new(domain.x0, level(j - 1), domain.x1, level(j)),
        });
    }
    let interfaces = (1..=strips)
        .map(|k| {
            let height = level(k - 1);
            Interface {
                index: k,
                height,
                x0: domain.x0,
                x1: domain.x1,
                lower: if k == 1 && !with_extension {
                    None
                } else {
                    Some(k - 1)
                },
                upper: k,
                marked: [mid_x, height],
            }
        })
        .collect();

    Ok(Partition {
        domain,
        regions,
        interfaces,
        r0,
        lipschitz: 0.0,
        area_bound: domain.area() / (r0 * r0),
        with_extension,
    })
}

impl Partition {
    /// Number of regions of the original domain, `N` (excludes `D_0`).
    pub fn strip_count(&self) -> usize {
        self.regions.iter().filter(|r| r.index >= 1).count()
    }

    pub fn region(&self, index: usize) -> Option<&Region> {
        self.regions.iter().find(|r| r.index == index)
    }

    pub fn interface(&self, index: usize) -> Option<&Interface> {
        self.interfaces.iter().find(|s| s.index == index)
    }

    pub fn interior_interfaces(&self) -> impl Iterator<Item = &Interface> {
        self.interfaces.iter().filter(|s| s.is_interior())
    }

    /// First region of every chain: `D_0` with the extension, `D_1` otherwise.
    pub fn first_region(&self) -> usize {
        if self.with_extension {
            0
        } else {
            1
        }
    }

    /// Bounding box of all regions, including the extension.
    pub fn extended_domain(&self) -> Rect {
        let mut r = self.domain;
        for reg in &self.regions {
            r.x0 = r.x0.min(reg.bounds.x0);
            r.y0 = r.y0.min(reg.bounds.y0);
            r.x1 = r.x1.max(reg.bounds.x1);
            r.y1 = r.y1.max(reg.bounds.y1);
        }
        r
    }

    /// Region index containing `p`; points on an interface go to the upper region.
    pub fn region_of(&self, p: Point) -> Option<usize> {
        self.regions
            .iter()
            .rev()
            .find(|r| r.bounds.contains(p))
            .map(|r| r.index)
    }

    /// `W_k = ∪_{1≤j≤k} D_j` as a membership test on region indices.
    pub fn in_explored(&self, k: usize, region: usize) -> bool {
        region >= 1 && region <= k
    }

    /// `U_k = Ω ∖ W_k`.
    pub fn in_unexplored(&self, k: usize, region: usize) -> bool {
        region >= 1 && region > k && region <= self.strip_count()
    }

    /// Middle third (in x) of the domain, the horizontal extent of `K`.
    fn k_x_range(&self) -> (f64, f64) {
        let w = self.domain.width();
        (self.domain.x0 + w / 3.0, self.domain.x1 - w / 3.0)
    }

    /// `K_0 = { x ∈ D_0 : dist(x, Σ_1) ≥ r0/2 }`; `None` without the extension.
    pub fn k0(&self) -> Option<Rect> {
        let d0 = self.region(0)?;
        Some(Rect::new(
            d0.bounds.x0,
            d0.bounds.y0,
            d0.bounds.x1,
            self.domain.y0 - 0.5 * self.r0,
        ))
    }

    /// Membership in the set `K` built along `chain`: the middle thirds of
    /// the chain strips plus `K_0`.
    pub fn contains_k(&self, chain: &Chain, p: Point) -> bool {
        if let Some(k0) = self.k0() {
            if k0.contains(p) {
                return true;
            }
        }
        let (xa, xb) = self.k_x_range();
        if p[0] < xa || p[0] > xb {
            return false;
        }
        chain
            .regions
            .iter()
            .filter(|&&j| j != 0)
            .filter_map(|&j| self.region(j))
            .any(|r| r.bounds.contains(p))
    }

    /// Checks the structural invariants of the partition.
    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.regions.iter().enumerate() {
            for b in &self.regions[i + 1..] {
                if a.bounds.overlaps(&b.bounds) {
                    return Err(Error::InvalidSpec(format!(
                        "regions {} and {} overlap",
                        a.index, b.index
                    )));
                }
            }
        }
        let covered: f64 = self
            .regions
            .iter()
            .filter(|r| r.index >= 1)
            .map(|r| r.bounds.area())
            .sum();
        if (covered - self.domain.area()).abs() > 1e-12 * self.domain.area() {
            return Err(Error::InvalidSpec("regions do not cover the domain".into()));
        }
        for s in &self.interfaces {
            if s.length() < 2.0 * self.r0 / 3.0 {
                return Err(Error::InvalidSpec(format!(
                    "interface {} too short for a flat portion of radius r0/3",
                    s.index
                )));
            }
            let upper = self.region(s.upper).ok_or_else(|| {
                Error::InvalidSpec(format!("interface {} has no upper region", s.index))
            })?;
            let touches = |r: &Region| {
                (r.bounds.y0 - s.height).abs() < 1e-12 || (r.bounds.y1 - s.height).abs() < 1e-12
            };
            if !touches(upper) {
                return Err(Error::InvalidSpec(format!(
                    "interface {} is not on the boundary of region {}",
                    s.index, s.upper
                )));
            }
            if let Some(lower) = s.lower {
                let lower = self.region(lower).ok_or_else(|| {
                    Error::InvalidSpec(format!("interface {} has no lower region", s.index))
                })?;
                if !touches(lower) {
                    return Err(Error::InvalidSpec(format!(
                        "interface {} is not on the boundary of region {}",
                        s.index, lower.index
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Shortest chain from the first region to `target` through listed interfaces.
pub fn build_chain(p: &Partition, target: usize) -> Result<Chain> {
    if p.region(target).is_none() {
        return Err(Error::NoChain(target));
    }
    let start = p.first_region();
    let max_index = p.regions.iter().map(|r| r.index).max().unwrap_or(0);
    // back[j] = (previous region, interface used)
    let mut back: Vec<Option<(usize, usize)>> = vec![None; max_index + 1];
    let mut seen = vec![false; max_index + 1];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(j) = queue.pop_front() {
        if j == target {
            break;
        }
        for s in p.interior_interfaces() {
            let lower = s.lower.expect("interior interface");
            let next = if lower == j {
                s.upper
            } else if s.upper == j {
                lower
            } else {
                continue;
            };
            if !seen[next] {
                seen[next] = true;
                back[next] = Some((j, s.index));
                queue.push_back(next);
            }
        }
    }
    if !seen[target] {
        return Err(Error::NoChain(target));
    }
    let mut regions = vec![target];
    let mut links = Vec::new();
    let mut cur = target;
    while let Some((prev, link)) = back[cur] {
        regions.push(prev);
        links.push(link);
        cur = prev;
    }
    regions.reverse();
    links.reverse();
    Ok(Chain { regions, links })
}
