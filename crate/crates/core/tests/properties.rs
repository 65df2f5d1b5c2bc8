use primeend::domain::json::{decode_bits, encode_bits};
use primeend::domain::{build_gallery, GalleryParams, GridDomain};
use primeend::geom::Point;
use primeend::john::hausdorff_content;
use primeend::mazurkiewicz::{maz_distance_with, MazOptions};
use primeend::modulus::{capacity, CapacityProblem};
use primeend::regions::RegionSet;
use fixedbitset::FixedBitSet;
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn square() -> Arc<GridDomain> {
    static D: OnceLock<Arc<GridDomain>> = OnceLock::new();
    D.get_or_init(|| build_gallery("unit_square", 1.0 / 16.0, &GalleryParams::default()).unwrap().into_shared()).clone()
}

fn slit() -> Arc<GridDomain> {
    static D: OnceLock<Arc<GridDomain>> = OnceLock::new();
    D.get_or_init(|| build_gallery("slit_disk", 1.0 / 16.0, &GalleryParams::default()).unwrap().into_shared()).clone()
}

fn rect(d: &Arc<GridDomain>, x0: f64, y0: f64, w: f64, t: f64) -> RegionSet {
    RegionSet::from_predicate(d.clone(), |p| p.x > x0 && p.x < x0 + w && p.y > y0 && p.y < y0 + t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bits_roundtrip(v in proptest::collection::vec(any::<bool>(), 0..300)) {
        let mut b = FixedBitSet::with_capacity(v.len());
        for (i, &x) in v.iter().enumerate() {
            b.set(i, x);
        }
        prop_assert_eq!(decode_bits(&encode_bits(&b), v.len()).unwrap(), b);
    }

    #[test]
    fn content_bounds_are_ordered(x0 in 0.0..0.8f64, y0 in 0.0..0.8f64, w in 0.07..0.2f64, t in 0.07..0.2f64) {
        let r = rect(&square(), x0, y0, w, t);
        prop_assume!(!r.is_empty());
        let c = hausdorff_content(&r, 1.0);
        prop_assert!(c.lower <= c.upper + 1e-12);
        prop_assert!(c.lower >= r.diameter() / 2.0 - 1e-12);
    }

    #[test]
    fn capacity_is_symmetric_and_positive(a in 0.0..0.3f64, b in 0.6..0.85f64, p in 1.5..3.0f64) {
        let d = square();
        let (e, f) = (rect(&d, a, 0.2, 0.15, 0.3), rect(&d, b, 0.5, 0.15, 0.3));
        let x = capacity(&CapacityProblem::new(e.clone(), f.clone(), p), 1e-9).unwrap().value;
        let y = capacity(&CapacityProblem::new(f, e, p), 1e-9).unwrap().value;
        prop_assert!(x > 0.0);
        prop_assert!((x - y).abs() <= 1e-5 * x.max(y));
    }

    #[test]
    fn maz_distance_dominates_euclidean(i in 0usize..10_000, j in 0usize..10_000) {
        let d = slit();
        let cells: Vec<usize> = d.cells().collect();
        let (a, b) = (cells[i % cells.len()], cells[j % cells.len()]);
        let r = maz_distance_with(&d, a, b, &MazOptions { refine_centers: 2 }).unwrap();
        prop_assert!(r.lower_bound <= r.value + 1e-12);
        prop_assert!(r.value + 1e-12 >= d.center(a).dist(d.center(b)));
        let back = maz_distance_with(&d, b, a, &MazOptions { refine_centers: 2 }).unwrap();
        prop_assert_eq!(r.value, back.value);
    }
}

#[test]
fn triangle_inequality_with_slack() {
    let d = slit();
    let at = |x: f64, y: f64| d.spec().cell_at(Point::new(x, y)).unwrap();
    let (a, b, c) = (at(-0.5, 0.03), at(-0.5, -0.03), at(0.5, 0.5));
    let o = MazOptions::default();
    let ab = maz_distance_with(&d, a, b, &o).unwrap().value;
    let bc = maz_distance_with(&d, b, c, &o).unwrap().value;
    let ac = maz_distance_with(&d, a, c, &o).unwrap().value;
    assert!(ab <= ac + bc + 4.0 * d.h());
    assert!(ab >= 0.45);
}
