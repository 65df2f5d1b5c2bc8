//! Reproducible builds of the example domains.
//!
//! Families with infinitely many removed segments are truncated at a finite
//! depth (default 7); below the finest segment the domain is left as is,
//! except where noted on the individual builder.

use super::{DomainBuilder, GridDomain, GridSpec, WeightKind};
use crate::error::{Error, Result};
use crate::geom::Point;
use serde::{Deserialize, Serialize};

pub const DEFAULT_DEPTH: usize = 7;

/// Gallery identifiers with a short description.
pub const GALLERY: &[(&str, &str)] = &[
    ("unit_square", "the unit square (0,1)^2"),
    ("slit_disk", "unit disk minus the slit (-1,0] x {0}"),
    ("topologist_comb", "unit square minus [1/2,1) x {2^-k}"),
    ("double_equilateral_comb", "unit square minus (0,3/4] x {2^-n} and [1/4,1) x {3 2^-n-2}"),
    ("shrinking_pins", "unit square minus the pins y = kx, 0 < x <= 1/(2k^2)"),
    ("accumulating_pins", "(-1,1) x (0,1) minus {1/2, 1/4, ...} x (0,1/2]"),
    ("jana_two_limits", "(-1,1) x (0,1) minus three families of horizontal slits"),
    ("double_comb", "unit square minus (0,1-2^-n] x {2^-n} and [2^-n,1) x {3 2^-n-2}"),
    ("cubic_cusp", "outward cusp 0 < y < x^3 < 1"),
    ("inward_cusp", "unit disk minus the inward cusp 0 <= y <= x^3 < 1"),
    ("disk", "the unit disk"),
];

/// Optional build parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GalleryParams {
    /// Truncation depth of segment families.
    pub depth: Option<usize>,
    /// Cell weight; defaults to the constant 1.
    pub weight: Option<WeightKind>,
}

impl GalleryParams {
    pub fn depth(depth: usize) -> Self {
        GalleryParams { depth: Some(depth), weight: None }
    }

    pub fn weighted(weight: WeightKind) -> Self {
        GalleryParams { depth: None, weight: Some(weight) }
    }
}

/// Builds a gallery domain at spacing `h`.
pub fn build_gallery(name: &str, h: f64, params: &GalleryParams) -> Result<GridDomain> {
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::InvalidArgument(format!("spacing {h} out of range")));
    }
    let depth = params.depth.unwrap_or(DEFAULT_DEPTH);
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let weight = params.weight.unwrap_or_default();
    let b = match name {
        "unit_square" => square(h)?,
        "disk" => disk(1.0, h)?,
        "slit_disk" => disk(1.0, h)?.hwall(0.0, -1.0, 0.0)?,
        "topologist_comb" => topologist_comb(h, depth)?,
        "double_equilateral_comb" => double_comb(h, depth, |_| 0.75, |_| 0.25)?,
        "double_comb" => double_comb(h, depth, |n| 1.0 - pow2(n), pow2)?,
        "shrinking_pins" => shrinking_pins(h, depth)?,
        "accumulating_pins" => accumulating_pins(h)?,
        "jana_two_limits" => jana_two_limits(h, depth)?,
        "cubic_cusp" => {
            DomainBuilder::new(GridSpec::covering(0.0, 0.0, 1.0, 1.0, h)?)
                .open_where(|p| p.y > 0.0 && p.y < p.x.powi(3) && p.x < 1.0)
        }
        "inward_cusp" => {
            let b = disk(1.0, h)?.close_where(|p| p.y >= 0.0 && p.y <= p.x.powi(3) && p.x >= 0.0);
            b.hwall(0.0, 0.0, 1.0)?
        }
        _ => return Err(Error::UnknownGallery(name.to_string())),
    };
    b.weight(weight).build(name)
}

fn pow2(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

/// Open rectangle `(x0,x1) x (y0,y1)`; corners must be grid aligned.
pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64, h: f64) -> Result<GridDomain> {
    DomainBuilder::new(GridSpec::covering(x0, y0, x1, y1, h)?).fill().build("rectangle")
}

/// Disk of radius `r` about the origin.
pub fn disk_domain(r: f64, h: f64) -> Result<GridDomain> {
    disk(r, h)?.build("disk")
}

fn square(h: f64) -> Result<DomainBuilder> {
    Ok(DomainBuilder::new(GridSpec::covering(0.0, 0.0, 1.0, 1.0, h)?).fill())
}

fn disk(r: f64, h: f64) -> Result<DomainBuilder> {
    let spec = GridSpec::covering(-r, -r, r, r, h)?;
    Ok(DomainBuilder::new(spec).open_where(|p| p.norm() < r))
}

/// Distinct interior grid lines for the given heights, or `ResolutionTooCoarse`.
fn distinct_rows(b: &DomainBuilder, ys: &[f64]) -> Result<Vec<usize>> {
    let mut rows = Vec::with_capacity(ys.len());
    for &y in ys {
        let j = b.row_line(y)?;
        if (j as f64 * b.spec().h + b.spec().origin.y - y).abs() > 0.25 * b.spec().h {
            return Err(Error::ResolutionTooCoarse(format!("wall at y={y} is not resolved by the grid")));
        }
        if rows.contains(&j) {
            return Err(Error::ResolutionTooCoarse(format!("walls merge at y={y}")));
        }
        rows.push(j);
    }
    Ok(rows)
}

/// Walls `[1/2,1) x {2^-k}`. Below the finest wall the strip `x >= 1/2` is cut
/// into one-cell channels open to the left, with the bottom row removed, so
/// that the segment `(1/2,1] x {0}` stays unreachable at grid resolution.
fn topologist_comb(h: f64, depth: usize) -> Result<DomainBuilder> {
    let mut b = square(h)?;
    let ys: Vec<f64> = (1..=depth).map(pow2).collect();
    let rows = distinct_rows(&b, &ys)?;
    for &j in &rows {
        b.hwall_line(j, 0.5, 1.0);
    }
    let finest = *rows.last().expect("depth >= 1");
    for j in 1..finest {
        b.hwall_line(j, 0.5, 1.0);
    }
    Ok(b.close_where(|p| p.x > 0.5 && p.y < h))
}

/// Walls `(0, a(n)] x {2^-n}` and `[b(n), 1) x {3 2^-n-2}`.
fn double_comb(
    h: f64,
    depth: usize,
    a: impl Fn(usize) -> f64,
    bstart: impl Fn(usize) -> f64,
) -> Result<DomainBuilder> {
    let mut b = square(h)?;
    let mut ys = Vec::new();
    for n in 1..=depth {
        ys.push(pow2(n));
        ys.push(3.0 * pow2(n + 2));
    }
    let rows = distinct_rows(&b, &ys)?;
    for n in 1..=depth {
        let (lo, hi) = (rows[2 * (n - 1)], rows[2 * (n - 1) + 1]);
        let (an, bn) = (a(n), bstart(n));
        if an < 2.0 * h || 1.0 - bn < 2.0 * h {
            return Err(Error::ResolutionTooCoarse(format!("level {n} slit shorter than 2h")));
        }
        b.hwall_line(lo, 0.0, an);
        b.hwall_line(hi, bn, 1.0);
    }
    Ok(b)
}

/// Pins `S_k = {y = kx, 0 < x <= 1/(2k^2)}` rasterized as staircases.
fn shrinking_pins(h: f64, depth: usize) -> Result<DomainBuilder> {
    let mut b = square(h)?;
    for k in 1..=depth {
        let kf = k as f64;
        let end = Point::new(1.0 / (2.0 * kf * kf), 1.0 / (2.0 * kf));
        b = b.segment_wall(Point::new(0.0, 0.0), end)?;
    }
    Ok(b)
}

/// Vertical walls `{2^-k} x (0,1/2]` for every `k` with `2^-k >= h`. The wall
/// at `x = 0` is omitted: at grid resolution the strip next to it would touch
/// the origin as a second component.
fn accumulating_pins(h: f64) -> Result<DomainBuilder> {
    let mut b = DomainBuilder::new(GridSpec::covering(-1.0, 0.0, 1.0, 1.0, h)?).fill();
    let mut k = 1;
    let mut last = usize::MAX;
    while pow2(k) >= h * (1.0 - 1e-9) {
        let i = b.col_line(pow2(k))?;
        if i == last {
            break;
        }
        b.vwall_line(i, 0.0, 0.5);
        last = i;
        k += 1;
    }
    if k <= 3 {
        return Err(Error::ResolutionTooCoarse("fewer than three walls resolved".into()));
    }
    Ok(b)
}

/// Walls `(-1,-2^-k] x {2^-k}`, `[2^-k,1) x {2^-k}` and `[-1+2^-k, 1-2^-k] x {3 2^-k-1}`.
fn jana_two_limits(h: f64, depth: usize) -> Result<DomainBuilder> {
    let mut b = DomainBuilder::new(GridSpec::covering(-1.0, 0.0, 1.0, 1.0, h)?).fill();
    let mut ys = Vec::new();
    for k in 1..=depth {
        ys.push(pow2(k));
        ys.push(3.0 * pow2(k + 1));
    }
    let rows = distinct_rows(&b, &ys)?;
    for k in 1..=depth {
        let t = pow2(k);
        if 1.0 - t < 2.0 * h || 2.0 - 2.0 * t < 2.0 * h {
            return Err(Error::ResolutionTooCoarse(format!("level {k} slit shorter than 2h")));
        }
        let (lo, mid) = (rows[2 * (k - 1)], rows[2 * (k - 1) + 1]);
        b.hwall_line(lo, -1.0, -t);
        b.hwall_line(lo, t, 1.0);
        b.hwall_line(mid, -1.0 + t, 1.0 - t);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_gallery_entry_builds_connected() {
        for (name, _) in GALLERY {
            let d = build_gallery(name, 1.0 / 256.0, &GalleryParams::depth(5))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(d.flood(d.first_cell()).len(), d.open_count(), "{name}");
        }
    }

    #[test]
    fn unit_square_has_no_walls() {
        let d = build_gallery("unit_square", 0.01, &GalleryParams::default()).unwrap();
        assert_eq!(d.open_count(), 100 * 100);
        assert_eq!(d.blocked_edge_count(), 0);
    }

    #[test]
    fn slit_disk_area_and_slit() {
        let h = 0.01;
        let d = build_gallery("slit_disk", h, &GalleryParams::default()).unwrap();
        let area = d.open_count() as f64 * h * h;
        assert!((area - std::f64::consts::PI).abs() < 0.05 * std::f64::consts::PI);
        for c in d.blocked_north().ones() {
            let p = d.center(c);
            assert!((p.y + h / 2.0).abs() < 1e-9 && p.x < 0.0 && p.x > -1.0);
        }
        assert!(d.blocked_east().count_ones(..) == 0);
        // Every column of the slit is blocked.
        assert_eq!(d.blocked_north().count_ones(..), 100);
    }

    #[test]
    fn topologist_comb_tooth_rows() {
        let h = 0.5f64.powi(9);
        let d = build_gallery("topologist_comb", h, &GalleryParams::depth(7)).unwrap();
        let mut rows = std::collections::BTreeSet::new();
        for c in d.blocked_north().ones() {
            let p = d.center(c);
            assert!(p.x > 0.5);
            rows.insert(((p.y + h / 2.0) / h).round() as i64);
        }
        for k in 1..=7 {
            assert!(rows.contains(&(512 >> k)), "tooth {k}");
        }
    }

    #[test]
    fn unknown_and_coarse_inputs() {
        assert!(matches!(
            build_gallery("moebius", 0.01, &GalleryParams::default()),
            Err(Error::UnknownGallery(_))
        ));
        assert!(matches!(
            build_gallery("topologist_comb", 1.0 / 32.0, &GalleryParams::depth(7)),
            Err(Error::ResolutionTooCoarse(_))
        ));
    }

    #[test]
    fn builds_are_bit_exact() {
        let a = build_gallery("shrinking_pins", 1.0 / 128.0, &GalleryParams::depth(4)).unwrap();
        let b = build_gallery("shrinking_pins", 1.0 / 128.0, &GalleryParams::depth(4)).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
