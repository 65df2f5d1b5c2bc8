//! File output: atomic writes, JSON, CSV and SVG renderings.

use crate::domain::json::{decode_bits, encode_bits};
use crate::domain::{ball, GridDomain};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::regions::RegionSet;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

/// CSV with a header row; floats use Rust's shortest round-trip formatting.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(header).map_err(fmt)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(fmt)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// A cell set in a file: explicit encoded cells or a shape intersected with the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSpec {
    Cells(String),
    Disk { center: Point, r: f64 },
    Rect { min: Point, max: Point },
    /// Cells adjacent to the boundary.
    Boundary,
}

impl RegionSpec {
    pub fn resolve(&self, domain: &Arc<GridDomain>) -> Result<RegionSet> {
        Ok(match self {
            RegionSpec::Cells(s) => {
                let bits = decode_bits(s, domain.spec().len())?;
                if bits.ones().any(|c| !domain.is_open(c)) {
                    return Err(Error::InvalidArgument("region contains cells outside the domain".into()));
                }
                RegionSet::from_bits(domain.clone(), bits)
            }
            RegionSpec::Disk { center, r } => ball(domain, *center, *r),
            RegionSpec::Rect { min, max } => RegionSet::from_predicate(domain.clone(), |p| {
                p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y
            }),
            RegionSpec::Boundary => {
                RegionSet::from_cells(domain.clone(), domain.cells().filter(|&c| domain.touches_boundary(c)))
            }
        })
    }

    pub fn from_region(region: &RegionSet) -> Self {
        RegionSpec::Cells(encode_bits(region.bits()))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// A colored cell set drawn over the domain.
pub struct Overlay<'a> {
    pub cells: &'a RegionSet,
    pub color: &'a str,
}

/// SVG of the open cells, blocked edges, overlays and marked points, in domain coordinates
/// scaled to `px` pixels per unit with `y` pointing up.
pub fn domain_svg(domain: &GridDomain, overlays: &[Overlay], points: &[Point], px: f64) -> String {
    let s = domain.spec();
    let (w, hgt) = (s.nx as f64 * s.h * px, s.ny as f64 * s.h * px);
    let tx = |x: f64| (x - s.origin.x) * px;
    let ty = |y: f64| hgt - (y - s.origin.y) * px;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{hgt:.0}" viewBox="0 0 {w:.2} {hgt:.2}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#333"/>"##);
    let runs = |is_in: &dyn Fn(usize) -> bool, color: &str, out: &mut String| {
        for j in 0..s.ny {
            let mut i = 0;
            while i < s.nx {
                if !is_in(s.index(i, j)) {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < s.nx && is_in(s.index(i, j)) {
                    i += 1;
                }
                let x = s.origin.x + start as f64 * s.h;
                let y = s.origin.y + (j + 1) as f64 * s.h;
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                    tx(x),
                    ty(y),
                    (i - start) as f64 * s.h * px,
                    s.h * px
                );
            }
        }
    };
    runs(&|c| domain.is_open(c), "#fff", &mut out);
    for o in overlays {
        runs(&|c| o.cells.contains(c), o.color, &mut out);
    }
    let mut path = String::new();
    for c in domain.blocked_east().ones() {
        let (i, j) = s.coords(c);
        let x = s.origin.x + (i + 1) as f64 * s.h;
        let y = s.origin.y + j as f64 * s.h;
        let _ = write!(path, "M{:.2} {:.2}V{:.2}", tx(x), ty(y), ty(y + s.h));
    }
    for c in domain.blocked_north().ones() {
        let (i, j) = s.coords(c);
        let x = s.origin.x + i as f64 * s.h;
        let y = s.origin.y + (j + 1) as f64 * s.h;
        let _ = write!(path, "M{:.2} {:.2}H{:.2}", tx(x), ty(y), tx(x + s.h));
    }
    if !path.is_empty() {
        let _ = writeln!(out, r##"<path d="{path}" stroke="#c00" stroke-width="1.5" fill="none"/>"##);
    }
    for p in points {
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#06c"/>"##, tx(p.x), ty(p.y));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_csv(&p, &["k", "v"], &[vec![1.0, 0.5], vec![2.0, 0.25]]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "k,v\n1,0.5\n2,0.25\n");
    }

    #[test]
    fn region_spec_roundtrip() {
        let d = build_gallery("unit_square", 1.0 / 16.0, &GalleryParams::default()).unwrap().into_shared();
        let disk = RegionSpec::Disk { center: Point::new(0.5, 0.5), r: 0.2 }.resolve(&d).unwrap();
        let text = serde_json::to_string(&RegionSpec::from_region(&disk)).unwrap();
        let back: RegionSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.resolve(&d).unwrap().bits(), disk.bits());
        assert!(RegionSpec::Boundary.resolve(&d).unwrap().len() == 60);
    }

    #[test]
    fn svg_draws_walls() {
        let d = build_gallery("slit_disk", 1.0 / 32.0, &GalleryParams::default()).unwrap();
        let svg = domain_svg(&d, &[], &[Point::new(0.0, 0.0)], 100.0);
        assert!(svg.starts_with("<svg") && svg.contains("<path") && svg.contains("<circle"));
        assert_eq!(svg, domain_svg(&d, &[], &[Point::new(0.0, 0.0)], 100.0));
    }
}
