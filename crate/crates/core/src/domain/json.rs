//! Domain JSON format.
//!
//! Cell sets are stored as run lengths over the row-major cell order, starting
//! with a run of absent cells, each length as an unsigned LEB128 varint, and
//! the byte string base64 encoded (standard alphabet, padded).

use super::{GridDomain, GridSpec, WeightKind};
use crate::error::{Error, Result};
use crate::geom::Point;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridJson {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainJson {
    pub grid: GridJson,
    pub open_cells: String,
    pub blocked_edges: Vec<(usize, usize, String)>,
    pub weight: WeightKind,
    pub name: String,
}

pub fn encode_bits(bits: &FixedBitSet) -> String {
    let mut out = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for k in 0..bits.len() {
        if bits[k] == current {
            run += 1;
        } else {
            push_varint(&mut out, run);
            current = !current;
            run = 1;
        }
    }
    push_varint(&mut out, run);
    STANDARD.encode(out)
}

pub fn decode_bits(s: &str, len: usize) -> Result<FixedBitSet> {
    let bytes = STANDARD.decode(s).map_err(|e| Error::Format(format!("bad base64: {e}")))?;
    let mut bits = FixedBitSet::with_capacity(len);
    let mut pos = 0usize;
    let mut k = 0usize;
    let mut current = false;
    while pos < bytes.len() {
        let run = read_varint(&bytes, &mut pos)? as usize;
        if k + run > len {
            return Err(Error::Format("run lengths exceed the grid".into()));
        }
        if current {
            bits.insert_range(k..k + run);
        }
        k += run;
        current = !current;
    }
    if k != len {
        return Err(Error::Format(format!("run lengths cover {k} of {len} cells")));
    }
    Ok(bits)
}

fn push_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let b = *bytes.get(*pos).ok_or_else(|| Error::Format("truncated varint".into()))?;
        *pos += 1;
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
        if shift > 63 {
            return Err(Error::Format("varint overflow".into()));
        }
    }
}

impl GridDomain {
    pub fn to_json(&self) -> DomainJson {
        let s = self.spec();
        let mut blocked_edges = Vec::new();
        for c in 0..s.len() {
            let (i, j) = s.coords(c);
            if self.blocked_east()[c] {
                blocked_edges.push((i, j, "E".to_string()));
            }
            if self.blocked_north()[c] {
                blocked_edges.push((i, j, "N".to_string()));
            }
        }
        DomainJson {
            grid: GridJson { nx: s.nx, ny: s.ny, h: s.h, origin: [s.origin.x, s.origin.y] },
            open_cells: encode_bits(self.open_cells()),
            blocked_edges,
            weight: *self.weight_kind(),
            name: self.name().to_string(),
        }
    }

    pub fn from_json(j: &DomainJson) -> Result<GridDomain> {
        let spec = GridSpec::new(j.grid.nx, j.grid.ny, j.grid.h, Point::new(j.grid.origin[0], j.grid.origin[1]))?;
        let open = decode_bits(&j.open_cells, spec.len())?;
        let mut e = FixedBitSet::with_capacity(spec.len());
        let mut n = FixedBitSet::with_capacity(spec.len());
        for (i, jj, dir) in &j.blocked_edges {
            if *i >= spec.nx || *jj >= spec.ny {
                return Err(Error::Format(format!("edge ({i},{jj}) outside the grid")));
            }
            let c = spec.index(*i, *jj);
            match dir.as_str() {
                "E" => e.insert(c),
                "N" => n.insert(c),
                other => return Err(Error::Format(format!("edge direction {other:?}"))),
            }
        }
        GridDomain::new(spec, open, e, n, j.weight, j.name.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bits_roundtrip(v in proptest::collection::vec(any::<bool>(), 0..600)) {
            let mut b = FixedBitSet::with_capacity(v.len());
            for (k, &x) in v.iter().enumerate() {
                b.set(k, x);
            }
            let s = encode_bits(&b);
            prop_assert_eq!(decode_bits(&s, v.len()).unwrap(), b);
        }
    }

    #[test]
    fn domain_roundtrip() {
        let d = build_gallery("slit_disk", 1.0 / 64.0, &GalleryParams::default()).unwrap();
        let j = serde_json::to_string(&d.to_json()).unwrap();
        let back = GridDomain::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back.fingerprint(), d.fingerprint());
    }

    #[test]
    fn bad_runs_are_rejected() {
        let mut b = FixedBitSet::with_capacity(10);
        b.insert(3);
        let s = encode_bits(&b);
        assert!(decode_bits(&s, 9).is_err());
        assert!(decode_bits("@@", 10).is_err());
    }
}
