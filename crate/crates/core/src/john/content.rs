//! Bounds on the Hausdorff content `inf sum r_j^s` of a cell set, each cell a closed square.

use crate::geom::Point;
use crate::regions::RegionSet;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub upper: f64,
    pub lower: f64,
}

/// Smallest radius about the bounding-box center covering every cell square.
fn enclosing_radius(pts: &[Point], h: f64) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let c = Point::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let half = 0.5 * h;
    pts.iter()
        .map(|p| {
            let dx = (p.x - c.x).abs() + half;
            let dy = (p.y - c.y).abs() + half;
            (dx * dx + dy * dy).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Best cover over a quadtree: each node is either one enclosing ball or its children's covers.
fn quadtree_cover(pts: &[Point], origin: Point, side: f64, h: f64, s: f64) -> f64 {
    let own = enclosing_radius(pts, h).powf(s);
    if pts.len() <= 1 || side <= h {
        return own;
    }
    let half = 0.5 * side;
    let mut quads: [Vec<Point>; 4] = Default::default();
    for &p in pts {
        let qx = usize::from(p.x >= origin.x + half);
        let qy = usize::from(p.y >= origin.y + half);
        quads[qx + 2 * qy].push(p);
    }
    let mut split = 0.0;
    for (k, q) in quads.iter().enumerate() {
        if q.is_empty() {
            continue;
        }
        let o = Point::new(origin.x + half * (k % 2) as f64, origin.y + half * (k / 2) as f64);
        split += quadtree_cover(q, o, half, h, s);
        if split >= own {
            return own;
        }
    }
    own.min(split)
}

/// Upper bound from quadtree covers at three shifted origins; lower bound from the
/// diameter (connected sets, `s <= 1`), the axis projections (`s = 1`) and the area (`s <= 2`).
pub fn hausdorff_content(cells: &RegionSet, s: f64) -> ContentEstimate {
    assert!(s > 0.0, "content exponent must be positive");
    let pts = cells.centers();
    if pts.is_empty() {
        return ContentEstimate { upper: 0.0, lower: 0.0 };
    }
    let h = cells.domain().h();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        x0 = x0.min(p.x - 0.5 * h);
        y0 = y0.min(p.y - 0.5 * h);
        x1 = x1.max(p.x + 0.5 * h);
        y1 = y1.max(p.y + 0.5 * h);
    }
    let side = (x1 - x0).max(y1 - y0);
    let mut upper = enclosing_radius(&pts, h).powf(s);
    for k in 0..3 {
        let shift = side * k as f64 / 3.0;
        let o = Point::new(x0 - shift, y0 - shift);
        upper = upper.min(quadtree_cover(&pts, o, 2.0 * side, h, s));
    }
    let mut lower: f64 = 0.0;
    if s <= 1.0 && cells.is_connected() {
        // A union of squares whose centers are `D` apart has diameter at least `D + h`.
        lower = lower.max((0.5 * (cells.diameter() + h)).powf(s));
    }
    if s == 1.0 {
        let proj = |v: &mut Vec<f64>| -> f64 {
            v.sort_by(f64::total_cmp);
            v.dedup();
            let mut total = 0.0;
            let mut run_start = v[0];
            for w in v.windows(2) {
                if w[1] - w[0] > 1.5 * h {
                    total += w[0] - run_start + h;
                    run_start = w[1];
                }
            }
            total + v.last().expect("nonempty") - run_start + h
        };
        let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let mut ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        lower = lower.max(0.5 * proj(&mut xs).max(proj(&mut ys)));
    }
    if s <= 2.0 {
        let area = pts.len() as f64 * h * h;
        lower = lower.max((area / std::f64::consts::PI).powf(0.5 * s));
    }
    ContentEstimate { upper: upper.max(lower), lower }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};

    #[test]
    fn single_cell() {
        let h = 1.0 / 32.0;
        let d = build_gallery("unit_square", h, &GalleryParams::default()).unwrap().into_shared();
        let e = hausdorff_content(&RegionSet::from_cells(d, [100]), 1.0);
        assert!(e.upper <= h && e.lower >= h / 4.0 && e.lower <= e.upper);
    }

    #[test]
    fn strip_is_close_to_half_length() {
        let h = 1.0 / 128.0;
        let d = build_gallery("unit_square", h, &GalleryParams::default()).unwrap().into_shared();
        let strip = RegionSet::from_predicate(d, |p| p.x > 0.25 && p.x < 0.75 && p.y < h);
        let e = hausdorff_content(&strip, 1.0);
        assert!((e.upper - 0.25).abs() <= 0.05, "{e:?}");
        assert!(e.lower >= 0.24 && e.lower <= e.upper);
    }

    #[test]
    fn two_far_cells_use_two_balls() {
        let h = 1.0 / 64.0;
        let d = build_gallery("unit_square", h, &GalleryParams::default()).unwrap().into_shared();
        let a = d.spec().cell_at(Point::new(0.01, 0.01)).unwrap();
        let b = d.spec().cell_at(Point::new(0.99, 0.99)).unwrap();
        let e = hausdorff_content(&RegionSet::from_cells(d, [a, b]), 1.0);
        assert!(e.upper <= 2.0 * h, "{e:?}");
    }
}
