//! Planar domains discretized on a uniform grid.
//!
//! A [`GridDomain`] is a set of open cells of a rectangular grid together with
//! a set of blocked edges. A blocked edge is a wall of zero width: it separates
//! two open cells without removing any area. Cell measure is `w(c) h^2`.

mod builder;
mod exponents;
pub mod gallery;
pub mod json;

pub use builder::DomainBuilder;
pub use exponents::{estimate_mass_exponents, MassExponents};
pub use gallery::{build_gallery, disk_domain, rectangle, GalleryParams, GALLERY};

use crate::error::{Error, Result};
use crate::geom::{Point, Segment};
use crate::regions::RegionSet;
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

/// Grid geometry: `nx * ny` square cells of side `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: Point,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, h: f64, origin: Point) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidDomain(format!("grid {nx}x{ny} is too small")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidDomain(format!("spacing {h} must be positive")));
        }
        Ok(GridSpec { nx, ny, h, origin })
    }

    /// Smallest grid with spacing `h` covering `[x0,x1] x [y0,y1]`, with the
    /// origin at `(x0, y0)`.
    pub fn covering(x0: f64, y0: f64, x1: f64, y1: f64, h: f64) -> Result<Self> {
        let nx = ((x1 - x0) / h - 1e-9).ceil().max(1.0) as usize;
        let ny = ((y1 - y0) / h - 1e-9).ceil().max(1.0) as usize;
        GridSpec::new(nx, ny, h, Point::new(x0, y0))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    #[inline]
    pub fn center(&self, c: usize) -> Point {
        let (i, j) = self.coords(c);
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// Cell whose closed square contains `p` (ties go to the upper-right cell).
    pub fn cell_at(&self, p: Point) -> Option<usize> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        (i < self.nx && j < self.ny).then(|| self.index(i, j))
    }

    /// Continuous grid coordinates of a point, in units of `h`.
    #[inline]
    pub fn to_grid(&self, p: Point) -> (f64, f64) {
        ((p.x - self.origin.x) / self.h, (p.y - self.origin.y) / self.h)
    }

    /// Index range of cells whose centers may lie within `r` of `p`.
    pub fn window(&self, p: Point, r: f64) -> (usize, usize, usize, usize) {
        let (gx, gy) = self.to_grid(p);
        let rr = r / self.h;
        let clamp = |v: f64, n: usize| v.max(0.0).min(n as f64 - 1.0) as usize;
        (
            clamp((gx - rr - 0.5).floor(), self.nx),
            clamp((gx + rr - 0.5).ceil(), self.nx),
            clamp((gy - rr - 0.5).floor(), self.ny),
            clamp((gy + rr - 0.5).ceil(), self.ny),
        )
    }
}

/// Cell weight function, sampled at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum WeightKind {
    Const { value: f64 },
    /// `|x - center|^alpha`.
    AbsAlpha { alpha: f64, center: Point },
    /// `max(1, log(1/|x - center|))`.
    Log { center: Point },
}

impl Default for WeightKind {
    fn default() -> Self {
        WeightKind::Const { value: 1.0 }
    }
}

impl WeightKind {
    pub fn eval(&self, p: Point) -> f64 {
        match *self {
            WeightKind::Const { value } => value,
            WeightKind::AbsAlpha { alpha, center } => p.dist(center).powf(alpha),
            WeightKind::Log { center } => {
                let r = p.dist(center);
                if r <= 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 / r).ln().max(1.0)
                }
            }
        }
    }
}

/// A boundary point, optionally with a hint selecting one side of a wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: Point,
    pub side_hint: Option<Point>,
}

impl BoundaryPoint {
    pub fn new(x: f64, y: f64) -> Self {
        BoundaryPoint { position: Point::new(x, y), side_hint: None }
    }

    pub fn with_side(mut self, dx: f64, dy: f64) -> Self {
        let n = dx.hypot(dy);
        self.side_hint = (n > 0.0).then(|| Point::new(dx / n, dy / n));
        self
    }
}

/// Bounded planar domain on a grid.
#[derive(Debug)]
pub struct GridDomain {
    spec: GridSpec,
    open: FixedBitSet,
    block_e: FixedBitSet,
    block_n: FixedBitSet,
    weight: Vec<f64>,
    weight_kind: WeightKind,
    name: String,
    open_count: usize,
    fingerprint: u64,
    faces: OnceLock<FaceField>,
}

#[derive(Debug)]
struct FaceField {
    faces: Vec<Segment>,
    /// Faces bordering each cell, as a CSR list.
    cell_faces_start: Vec<u32>,
    cell_faces: Vec<u32>,
    /// Index of the nearest face found by propagation, per cell.
    nearest: Vec<u32>,
    delta: Vec<f64>,
}

const NONE: u32 = u32::MAX;

impl GridDomain {
    /// Validating constructor. Weights default to the weight kind sampled at centers.
    pub fn new(
        spec: GridSpec,
        open: FixedBitSet,
        block_e: FixedBitSet,
        block_n: FixedBitSet,
        weight_kind: WeightKind,
        name: impl Into<String>,
    ) -> Result<Self> {
        let n = spec.len();
        if open.len() != n || block_e.len() != n || block_n.len() != n {
            return Err(Error::InvalidDomain("bitset sizes do not match the grid".into()));
        }
        let open_count = open.count_ones(..);
        if open_count == 0 {
            return Err(Error::InvalidDomain("no open cells".into()));
        }
        for c in block_e.ones() {
            let (i, j) = spec.coords(c);
            if i + 1 >= spec.nx || !open[c] || !open[spec.index(i + 1, j)] {
                return Err(Error::InvalidDomain(format!("blocked east edge at ({i},{j}) is dangling")));
            }
        }
        for c in block_n.ones() {
            let (i, j) = spec.coords(c);
            if j + 1 >= spec.ny || !open[c] || !open[spec.index(i, j + 1)] {
                return Err(Error::InvalidDomain(format!("blocked north edge at ({i},{j}) is dangling")));
            }
        }
        let mut weight = vec![0.0; n];
        for c in open.ones() {
            let w = weight_kind.eval(spec.center(c));
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidDomain(format!("weight {w} at cell {c} is not positive and finite")));
            }
            weight[c] = w;
        }
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        spec.nx.hash(&mut hasher);
        spec.ny.hash(&mut hasher);
        spec.h.to_bits().hash(&mut hasher);
        spec.origin.x.to_bits().hash(&mut hasher);
        spec.origin.y.to_bits().hash(&mut hasher);
        open.as_slice().hash(&mut hasher);
        block_e.as_slice().hash(&mut hasher);
        block_n.as_slice().hash(&mut hasher);
        for w in &weight {
            w.to_bits().hash(&mut hasher);
        }
        let dom = GridDomain {
            spec,
            open,
            block_e,
            block_n,
            weight,
            weight_kind,
            name: name.into(),
            open_count,
            fingerprint: hasher.finish(),
            faces: OnceLock::new(),
        };
        if dom.flood(dom.first_cell()).len() != open_count {
            return Err(Error::InvalidDomain("open cells are not connected".into()));
        }
        Ok(dom)
    }

    pub fn into_shared(self) -> Arc<GridDomain> {
        Arc::new(self)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weight_kind(&self) -> &WeightKind {
        &self.weight_kind
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn open_cells(&self) -> &FixedBitSet {
        &self.open
    }

    pub fn blocked_east(&self) -> &FixedBitSet {
        &self.block_e
    }

    pub fn blocked_north(&self) -> &FixedBitSet {
        &self.block_n
    }

    pub fn blocked_edge_count(&self) -> usize {
        self.block_e.count_ones(..) + self.block_n.count_ones(..)
    }

    #[inline]
    pub fn open_count(&self) -> usize {
        self.open_count
    }

    #[inline]
    pub fn is_open(&self, c: usize) -> bool {
        c < self.open.len() && self.open[c]
    }

    #[inline]
    pub fn center(&self, c: usize) -> Point {
        self.spec.center(c)
    }

    #[inline]
    pub fn weight(&self, c: usize) -> f64 {
        self.weight[c]
    }

    /// Measure of a cell, `w(c) h^2`.
    #[inline]
    pub fn mu(&self, c: usize) -> f64 {
        self.weight[c] * self.spec.h * self.spec.h
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.open.ones()
    }

    pub fn first_cell(&self) -> usize {
        self.open.ones().next().expect("domain has open cells")
    }

    /// Whether `a` and `b` are open 4-neighbours not separated by a wall.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).any(|n| n == b)
    }

    /// The up to four cells reachable from `c` without crossing a wall.
    #[inline]
    pub fn neighbors(&self, c: usize) -> impl Iterator<Item = usize> {
        let mut out = [None; 4];
        if self.open[c] {
            let (i, j) = self.spec.coords(c);
            let nx = self.spec.nx;
            if i + 1 < nx && !self.block_e[c] && self.open[c + 1] {
                out[0] = Some(c + 1);
            }
            if i > 0 && !self.block_e[c - 1] && self.open[c - 1] {
                out[1] = Some(c - 1);
            }
            if j + 1 < self.spec.ny && !self.block_n[c] && self.open[c + nx] {
                out[2] = Some(c + nx);
            }
            if j > 0 && !self.block_n[c - nx] && self.open[c - nx] {
                out[3] = Some(c - nx);
            }
        }
        out.into_iter().flatten()
    }

    /// Number of wall or complement faces of a cell.
    pub fn boundary_face_count(&self, c: usize) -> usize {
        if !self.is_open(c) {
            return 0;
        }
        4 - self.neighbors(c).count()
    }

    /// Whether a cell borders the complement or a wall.
    #[inline]
    pub fn touches_boundary(&self, c: usize) -> bool {
        self.boundary_face_count(c) > 0
    }

    /// Cells reachable from `start`.
    pub fn flood(&self, start: usize) -> Vec<usize> {
        let mut seen = FixedBitSet::with_capacity(self.spec.len());
        let mut out = vec![start];
        seen.insert(start);
        let mut k = 0;
        while k < out.len() {
            let c = out[k];
            k += 1;
            for n in self.neighbors(c) {
                if !seen.put(n) {
                    out.push(n);
                }
            }
        }
        out
    }

    fn face_field(&self) -> &FaceField {
        self.faces.get_or_init(|| self.build_faces())
    }

    /// All wall and complement faces as segments.
    pub fn boundary_faces(&self) -> &[Segment] {
        &self.face_field().faces
    }

    fn cell_face_ids(&self, c: usize) -> &[u32] {
        let f = self.face_field();
        &f.cell_faces[f.cell_faces_start[c] as usize..f.cell_faces_start[c + 1] as usize]
    }

    fn build_faces(&self) -> FaceField {
        let s = self.spec;
        let h = s.h;
        let n = s.len();
        let mut faces = Vec::new();
        let mut per_cell: Vec<Vec<u32>> = vec![Vec::new(); n];
        for c in self.open.ones() {
            let (i, j) = s.coords(c);
            let x0 = s.origin.x + i as f64 * h;
            let y0 = s.origin.y + j as f64 * h;
            let (x1, y1) = (x0 + h, y0 + h);
            // East.
            let east_open = i + 1 < s.nx && self.open[c + 1];
            if !east_open || self.block_e[c] {
                let id = faces.len() as u32;
                faces.push(Segment::new(Point::new(x1, y0), Point::new(x1, y1)));
                per_cell[c].push(id);
                if east_open {
                    per_cell[c + 1].push(id);
                }
            }
            if i == 0 || !self.open[c - 1] {
                let id = faces.len() as u32;
                faces.push(Segment::new(Point::new(x0, y0), Point::new(x0, y1)));
                per_cell[c].push(id);
            }
            let north_open = j + 1 < s.ny && self.open[c + s.nx];
            if !north_open || self.block_n[c] {
                let id = faces.len() as u32;
                faces.push(Segment::new(Point::new(x0, y1), Point::new(x1, y1)));
                per_cell[c].push(id);
                if north_open {
                    per_cell[c + s.nx].push(id);
                }
            }
            if j == 0 || !self.open[c - s.nx] {
                let id = faces.len() as u32;
                faces.push(Segment::new(Point::new(x0, y0), Point::new(x1, y0)));
                per_cell[c].push(id);
            }
        }
        let mut cell_faces_start = Vec::with_capacity(n + 1);
        let mut cell_faces = Vec::new();
        cell_faces_start.push(0u32);
        for list in &per_cell {
            cell_faces.extend_from_slice(list);
            cell_faces_start.push(cell_faces.len() as u32);
        }

        // Nearest-face propagation over 8-neighbours, Dijkstra order.
        let mut nearest = vec![NONE; n];
        let mut delta = vec![0.0f64; n];
        for c in self.open.ones() {
            delta[c] = f64::INFINITY;
        }
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
            }
        }
        let mut heap = BinaryHeap::new();
        for c in self.open.ones() {
            let p = s.center(c);
            for &f in &per_cell[c] {
                let d = faces[f as usize].dist(p);
                if d < delta[c] {
                    delta[c] = d;
                    nearest[c] = f;
                }
            }
            if nearest[c] != NONE {
                heap.push(Item(delta[c], c));
            }
        }
        while let Some(Item(d, c)) = heap.pop() {
            if d > delta[c] {
                continue;
            }
            let f = nearest[c];
            let (i, j) = s.coords(c);
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= s.nx as i64 || nj >= s.ny as i64 {
                        continue;
                    }
                    let m = s.index(ni as usize, nj as usize);
                    if !self.open[m] {
                        continue;
                    }
                    let cand = faces[f as usize].dist(s.center(m));
                    if cand < delta[m] {
                        delta[m] = cand;
                        nearest[m] = f;
                        heap.push(Item(cand, m));
                    }
                }
            }
        }
        FaceField { faces, cell_faces_start, cell_faces, nearest, delta }
    }

    /// Distance from a cell center to the boundary (walls and complement).
    #[inline]
    pub fn delta(&self, c: usize) -> f64 {
        self.face_field().delta[c]
    }

    /// Distance from an arbitrary point to the boundary; zero outside the domain.
    pub fn delta_at(&self, p: Point) -> f64 {
        match self.spec.cell_at(p) {
            Some(c) if self.open[c] => {
                let near = self.nearest_face_near(p, 2);
                near.map(|(d, _)| d).unwrap_or(0.0)
            }
            _ => 0.0,
        }
    }

    /// Nearest boundary face to `p` among faces recorded in a window of cells.
    fn nearest_face_near(&self, p: Point, radius_cells: usize) -> Option<(f64, u32)> {
        let s = self.spec;
        let f = self.face_field();
        let (gx, gy) = s.to_grid(p);
        let ci = gx.floor() as i64;
        let cj = gy.floor() as i64;
        let r = radius_cells as i64;
        let mut best: Option<(f64, u32)> = None;
        let mut consider = |id: u32| {
            if id == NONE {
                return;
            }
            let d = f.faces[id as usize].dist(p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, id));
            }
        };
        for j in (cj - r)..=(cj + r) {
            for i in (ci - r)..=(ci + r) {
                if i < 0 || j < 0 || i >= s.nx as i64 || j >= s.ny as i64 {
                    continue;
                }
                let c = s.index(i as usize, j as usize);
                if !self.open[c] {
                    continue;
                }
                consider(f.nearest[c]);
                for &id in self.cell_face_ids(c) {
                    consider(id);
                }
            }
        }
        best
    }

    /// Closest point on the discrete boundary to `p`, searching outward.
    pub fn nearest_boundary_point(&self, p: Point) -> Option<Point> {
        let f = self.face_field();
        if f.faces.is_empty() {
            return None;
        }
        let mut r = 2;
        let max_r = self.spec.nx.max(self.spec.ny);
        loop {
            if let Some((d, id)) = self.nearest_face_near(p, r) {
                if d <= (r as f64 - 1.0) * self.spec.h || r >= max_r {
                    return Some(f.faces[id as usize].closest_point(p));
                }
            }
            if r >= max_r {
                break;
            }
            r *= 2;
        }
        f.faces
            .iter()
            .min_by(|a, b| a.dist(p).total_cmp(&b.dist(p)))
            .map(|s| s.closest_point(p))
    }

    /// Distance from `p` to the nearest open cell center.
    pub fn dist_to_cells(&self, p: Point) -> f64 {
        let h = self.spec.h;
        let mut r = 2.0 * h;
        loop {
            let (i0, i1, j0, j1) = self.spec.window(p, r);
            let mut best = f64::INFINITY;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let c = self.spec.index(i, j);
                    if self.open[c] {
                        best = best.min(self.center(c).dist(p));
                    }
                }
            }
            if best <= r || r > 4.0 * (self.spec.nx + self.spec.ny) as f64 * h {
                return best;
            }
            r *= 2.0;
        }
    }

    /// Whether `p` lies in the interior of the discrete domain.
    fn is_interior_point(&self, p: Point) -> bool {
        let s = self.spec;
        let (gx, gy) = s.to_grid(p);
        let eps = 1e-9;
        let on_vx = (gx - gx.round()).abs() < eps;
        let on_hy = (gy - gy.round()).abs() < eps;
        let cell = |i: i64, j: i64| -> Option<usize> {
            (i >= 0 && j >= 0 && i < s.nx as i64 && j < s.ny as i64)
                .then(|| s.index(i as usize, j as usize))
                .filter(|&c| self.open[c])
        };
        match (on_vx, on_hy) {
            (false, false) => cell(gx.floor() as i64, gy.floor() as i64).is_some(),
            (true, false) => {
                let (i, j) = (gx.round() as i64, gy.floor() as i64);
                match (cell(i - 1, j), cell(i, j)) {
                    (Some(a), Some(_)) => !self.block_e[a],
                    _ => false,
                }
            }
            (false, true) => {
                let (i, j) = (gx.floor() as i64, gy.round() as i64);
                match (cell(i, j - 1), cell(i, j)) {
                    (Some(a), Some(_)) => !self.block_n[a],
                    _ => false,
                }
            }
            (true, true) => {
                let (i, j) = (gx.round() as i64, gy.round() as i64);
                let (Some(sw), Some(se), Some(nw), Some(_)) =
                    (cell(i - 1, j - 1), cell(i, j - 1), cell(i - 1, j), cell(i, j))
                else {
                    return false;
                };
                !(self.block_e[sw] || self.block_e[nw] || self.block_n[sw] || self.block_n[se])
            }
        }
    }

    /// Checks that `x` is a boundary point: outside the discrete interior and
    /// within `2h` of an open cell center.
    pub fn check_boundary_point(&self, x: &BoundaryPoint) -> Result<()> {
        let p = x.position;
        if self.is_interior_point(p) || self.dist_to_cells(p) > 2.0 * self.spec.h + 1e-12 {
            return Err(Error::NotABoundaryPoint(p.x, p.y));
        }
        Ok(())
    }

    /// Moves `p` onto the nearest point of the discrete boundary.
    pub fn snap_boundary_point(&self, p: Point) -> Result<BoundaryPoint> {
        self.nearest_boundary_point(p)
            .map(|q| BoundaryPoint { position: q, side_hint: None })
            .ok_or(Error::NotABoundaryPoint(p.x, p.y))
    }

    /// Total measure of the domain.
    pub fn measure(&self) -> f64 {
        self.open.ones().map(|c| self.mu(c)).sum()
    }

    /// Euclidean diameter of the set of open cell centers.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Point> = self.open.ones().map(|c| self.center(c)).collect();
        crate::geom::diameter(&pts)
    }

    /// Multi-source breadth-first hop distances inside `allowed`.
    pub fn bfs_hops(&self, sources: &[usize], allowed: Option<&FixedBitSet>) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.spec.len()];
        let mut q = VecDeque::new();
        for &s in sources {
            if dist[s] == u32::MAX {
                dist[s] = 0;
                q.push_back(s);
            }
        }
        while let Some(c) = q.pop_front() {
            for n in self.neighbors(c) {
                if dist[n] == u32::MAX && allowed.is_none_or(|a| a[n]) {
                    dist[n] = dist[c] + 1;
                    q.push_back(n);
                }
            }
        }
        dist
    }
}

/// Open cells whose centers lie strictly within distance `r` of `center`.
pub fn ball(domain: &Arc<GridDomain>, center: Point, r: f64) -> RegionSet {
    let mut set = FixedBitSet::with_capacity(domain.spec.len());
    if r > 0.0 {
        let (i0, i1, j0, j1) = domain.spec.window(center, r);
        let r2 = r * r;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = domain.spec.index(i, j);
                if domain.open[c] && domain.center(c).dist2(center) < r2 {
                    set.insert(c);
                }
            }
        }
    }
    RegionSet::from_bits(domain.clone(), set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Arc<GridDomain> {
        let spec = GridSpec::new(n, n, 1.0 / n as f64, Point::new(0.0, 0.0)).unwrap();
        DomainBuilder::new(spec).fill().build("square").unwrap().into_shared()
    }

    #[test]
    fn centers_and_lookup_roundtrip() {
        let s = GridSpec::new(10, 5, 0.1, Point::new(-1.0, 0.0)).unwrap();
        for c in 0..s.len() {
            assert_eq!(s.cell_at(s.center(c)), Some(c));
        }
        assert_eq!(s.cell_at(Point::new(-1.5, 0.2)), None);
    }

    #[test]
    fn square_delta_matches_distance_to_edges() {
        let d = square(20);
        for c in d.cells() {
            let p = d.center(c);
            let exact = p.x.min(p.y).min(1.0 - p.x).min(1.0 - p.y);
            assert!((d.delta(c) - exact).abs() < 1e-12, "cell {c}");
        }
        assert!((d.delta_at(Point::new(0.3, 0.01)) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn ball_is_monotone() {
        let d = square(32);
        let x = Point::new(0.4, 0.3);
        let mut prev = ball(&d, x, 0.01);
        for k in 1..20 {
            let b = ball(&d, x, 0.01 + 0.03 * k as f64);
            assert!(prev.is_subset(&b));
            prev = b;
        }
        assert_eq!(ball(&d, Point::new(0.5, 0.5), 1.0).len(), 32 * 32);
    }

    #[test]
    fn boundary_point_checks() {
        let d = square(16);
        assert!(d.check_boundary_point(&BoundaryPoint::new(0.5, 0.0)).is_ok());
        assert!(d.check_boundary_point(&BoundaryPoint::new(0.0, 0.0)).is_ok());
        assert!(d.check_boundary_point(&BoundaryPoint::new(0.5, 0.5)).is_err());
        assert!(d.check_boundary_point(&BoundaryPoint::new(0.5, -0.5)).is_err());
    }

    #[test]
    fn disconnected_domain_is_rejected() {
        let spec = GridSpec::new(4, 4, 0.25, Point::default()).unwrap();
        let mut open = FixedBitSet::with_capacity(16);
        open.insert(0);
        open.insert(15);
        let e = FixedBitSet::with_capacity(16);
        let r = GridDomain::new(spec, open, e.clone(), e, WeightKind::default(), "x");
        assert!(matches!(r, Err(Error::InvalidDomain(_))));
    }
}
