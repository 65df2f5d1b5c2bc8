use super::{GridDomain, GridSpec, WeightKind};
use crate::error::{Error, Result};
use crate::geom::Point;
use fixedbitset::FixedBitSet;

/// Incremental construction of a [`GridDomain`] from shapes and walls.
#[derive(Debug, Clone)]
pub struct DomainBuilder {
    spec: GridSpec,
    open: FixedBitSet,
    block_e: FixedBitSet,
    block_n: FixedBitSet,
    weight: WeightKind,
}

impl DomainBuilder {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.len();
        DomainBuilder {
            spec,
            open: FixedBitSet::with_capacity(n),
            block_e: FixedBitSet::with_capacity(n),
            block_n: FixedBitSet::with_capacity(n),
            weight: WeightKind::default(),
        }
    }

    /// Starts from an existing domain's cells, walls and weight.
    pub fn from_domain(d: &GridDomain) -> Self {
        DomainBuilder {
            spec: *d.spec(),
            open: d.open_cells().clone(),
            block_e: d.blocked_east().clone(),
            block_n: d.blocked_north().clone(),
            weight: *d.weight_kind(),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn fill(mut self) -> Self {
        self.open.insert_range(..);
        self
    }

    /// Opens every cell whose center satisfies `pred`.
    pub fn open_where(mut self, pred: impl Fn(Point) -> bool) -> Self {
        for c in 0..self.spec.len() {
            if pred(self.spec.center(c)) {
                self.open.insert(c);
            }
        }
        self
    }

    /// Closes every cell whose center satisfies `pred`.
    pub fn close_where(mut self, pred: impl Fn(Point) -> bool) -> Self {
        for c in 0..self.spec.len() {
            if pred(self.spec.center(c)) {
                self.open.set(c, false);
            }
        }
        self
    }

    pub fn set_open(&mut self, c: usize, open: bool) {
        self.open.set(c, open);
    }

    pub fn weight(mut self, kind: WeightKind) -> Self {
        self.weight = kind;
        self
    }

    /// Grid line index nearest to `y`, or an error if it lies on the grid border.
    pub fn row_line(&self, y: f64) -> Result<usize> {
        let j = ((y - self.spec.origin.y) / self.spec.h).round();
        if j <= 0.0 || j >= self.spec.ny as f64 {
            return Err(Error::ResolutionTooCoarse(format!("wall at y={y} falls on the grid border")));
        }
        Ok(j as usize)
    }

    pub fn col_line(&self, x: f64) -> Result<usize> {
        let i = ((x - self.spec.origin.x) / self.spec.h).round();
        if i <= 0.0 || i >= self.spec.nx as f64 {
            return Err(Error::ResolutionTooCoarse(format!("wall at x={x} falls on the grid border")));
        }
        Ok(i as usize)
    }

    /// Horizontal wall on the grid line `j`, blocking the edges of all columns
    /// whose centers lie in `[x0, x1]`. Returns the number of edges blocked.
    pub fn hwall_line(&mut self, j: usize, x0: f64, x1: f64) -> usize {
        let mut count = 0;
        for i in 0..self.spec.nx {
            let cx = self.spec.origin.x + (i as f64 + 0.5) * self.spec.h;
            if cx >= x0 && cx <= x1 {
                self.block_n.insert(self.spec.index(i, j - 1));
                count += 1;
            }
        }
        count
    }

    /// Vertical wall on the grid line `i`, over rows with centers in `[y0, y1]`.
    pub fn vwall_line(&mut self, i: usize, y0: f64, y1: f64) -> usize {
        let mut count = 0;
        for j in 0..self.spec.ny {
            let cy = self.spec.origin.y + (j as f64 + 0.5) * self.spec.h;
            if cy >= y0 && cy <= y1 {
                self.block_e.insert(self.spec.index(i - 1, j));
                count += 1;
            }
        }
        count
    }

    /// Horizontal slit `[x0, x1] x {y}`, snapped to the nearest grid line.
    pub fn hwall(mut self, y: f64, x0: f64, x1: f64) -> Result<Self> {
        let j = self.row_line(y)?;
        if self.hwall_line(j, x0, x1) < 2 {
            return Err(Error::ResolutionTooCoarse(format!("slit [{x0},{x1}]x{{{y}}} is shorter than 2h")));
        }
        Ok(self)
    }

    /// Vertical slit `{x} x [y0, y1]`, snapped to the nearest grid line.
    pub fn vwall(mut self, x: f64, y0: f64, y1: f64) -> Result<Self> {
        let i = self.col_line(x)?;
        if self.vwall_line(i, y0, y1) < 2 {
            return Err(Error::ResolutionTooCoarse(format!("slit {{{x}}}x[{y0},{y1}] is shorter than 2h")));
        }
        Ok(self)
    }

    /// Oblique slit from `a` to `b`, rasterized as a staircase of blocked edges:
    /// an edge is blocked when the two cell centers lie on opposite sides of
    /// the line through the segment and the crossing point projects inside it.
    pub fn segment_wall(mut self, a: Point, b: Point) -> Result<Self> {
        let d = b - a;
        let len = d.norm();
        if len < 2.0 * self.spec.h {
            return Err(Error::ResolutionTooCoarse(format!(
                "slit from ({},{}) to ({},{}) is shorter than 2h",
                a.x, a.y, b.x, b.y
            )));
        }
        let side = |p: Point| d.x * (p.y - a.y) - d.y * (p.x - a.x);
        let crosses = |p: Point, q: Point| -> bool {
            let (sp, sq) = (side(p), side(q));
            if (sp > 0.0) == (sq > 0.0) {
                return false;
            }
            let t = sp / (sp - sq);
            let x = p + (q - p) * t;
            let s = (x - a).dot(d) / (len * len);
            (0.0..=1.0).contains(&s)
        };
        let (i0, i1, j0, j1) = {
            let lo = Point::new(a.x.min(b.x), a.y.min(b.y));
            let hi = Point::new(a.x.max(b.x), a.y.max(b.y));
            let (w0, _, v0, _) = self.spec.window(lo, 2.0 * self.spec.h);
            let (_, w1, _, v1) = self.spec.window(hi, 2.0 * self.spec.h);
            (w0, w1, v0, v1)
        };
        let mut count = 0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = self.spec.index(i, j);
                let p = self.spec.center(c);
                if i + 1 < self.spec.nx && crosses(p, self.spec.center(c + 1)) {
                    self.block_e.insert(c);
                    count += 1;
                }
                if j + 1 < self.spec.ny && crosses(p, self.spec.center(c + self.spec.nx)) {
                    self.block_n.insert(c);
                    count += 1;
                }
            }
        }
        if count < 2 {
            return Err(Error::ResolutionTooCoarse("oblique slit blocks fewer than two edges".into()));
        }
        Ok(self)
    }

    fn neighbors(&self, c: usize) -> impl Iterator<Item = usize> {
        let s = &self.spec;
        let (i, j) = s.coords(c);
        let mut out = [None; 4];
        if i + 1 < s.nx && !self.block_e[c] && self.open[c + 1] {
            out[0] = Some(c + 1);
        }
        if i > 0 && !self.block_e[c - 1] && self.open[c - 1] {
            out[1] = Some(c - 1);
        }
        if j + 1 < s.ny && !self.block_n[c] && self.open[c + s.nx] {
            out[2] = Some(c + s.nx);
        }
        if j > 0 && !self.block_n[c - s.nx] && self.open[c - s.nx] {
            out[3] = Some(c - s.nx);
        }
        out.into_iter().flatten()
    }

    /// Keeps only the largest connected component (ties: smallest first cell),
    /// drops walls that no longer separate two open cells, and validates.
    pub fn build(mut self, name: &str) -> Result<GridDomain> {
        let n = self.spec.len();
        let mut label = vec![u32::MAX; n];
        let mut best: Option<(usize, u32)> = None;
        let mut next = 0u32;
        let mut stack = Vec::new();
        for s in self.open.ones() {
            if label[s] != u32::MAX {
                continue;
            }
            let mut size = 0usize;
            label[s] = next;
            stack.push(s);
            while let Some(c) = stack.pop() {
                size += 1;
                let nbrs: Vec<usize> = self.neighbors(c).collect();
                for m in nbrs {
                    if label[m] == u32::MAX {
                        label[m] = next;
                        stack.push(m);
                    }
                }
            }
            if best.is_none_or(|(bs, _)| size > bs) {
                best = Some((size, next));
            }
            next += 1;
        }
        let Some((_, keep)) = best else {
            return Err(Error::InvalidDomain(format!("{name}: no open cells")));
        };
        for (c, &l) in label.iter().enumerate() {
            if l != keep {
                self.open.set(c, false);
            }
        }
        let s = self.spec;
        for c in 0..n {
            let (i, j) = s.coords(c);
            if self.block_e[c] && !(i + 1 < s.nx && self.open[c] && self.open[c + 1]) {
                self.block_e.set(c, false);
            }
            if self.block_n[c] && !(j + 1 < s.ny && self.open[c] && self.open[c + s.nx]) {
                self.block_n.set(c, false);
            }
        }
        GridDomain::new(s, self.open, self.block_e, self.block_n, self.weight, name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oblique_wall_stays_near_segment() {
        let spec = GridSpec::new(64, 64, 1.0 / 64.0, Point::default()).unwrap();
        let a = Point::new(0.1, 0.1);
        let b = Point::new(0.6, 0.85);
        let dom = DomainBuilder::new(spec).fill().segment_wall(a, b).unwrap().build("w").unwrap();
        let seg = crate::geom::Segment::new(a, b);
        let h = spec.h;
        assert!(dom.blocked_edge_count() > 0);
        for c in dom.blocked_east().ones() {
            let mid = spec.center(c) + Point::new(h / 2.0, 0.0);
            assert!(seg.dist(mid) <= h, "east edge at {c}");
        }
        for c in dom.blocked_north().ones() {
            let mid = spec.center(c) + Point::new(0.0, h / 2.0);
            assert!(seg.dist(mid) <= h, "north edge at {c}");
        }
    }

    #[test]
    fn enclosing_walls_drop_the_small_piece() {
        let spec = GridSpec::new(8, 8, 0.125, Point::default()).unwrap();
        let mut b = DomainBuilder::new(spec).fill();
        let j = b.row_line(0.25).unwrap();
        b.hwall_line(j, 0.0, 0.25);
        let i = b.col_line(0.25).unwrap();
        b.vwall_line(i, 0.0, 0.25);
        let dom = b.build("corner").unwrap();
        assert_eq!(dom.open_count(), 60);
        assert_eq!(dom.blocked_edge_count(), 0);
    }
}
