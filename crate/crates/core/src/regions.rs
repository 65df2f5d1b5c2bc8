//! Cell sets, connected components, relative boundaries and the component
//! counts `N(r)` used for finite connectedness and accessibility.

use crate::domain::{ball, BoundaryPoint, GridDomain};
use crate::error::{Error, Result};
use crate::geom::{diameter, Point};
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::sync::Arc;

/// A subset of the open cells of a domain.
#[derive(Clone)]
pub struct RegionSet {
    domain: Arc<GridDomain>,
    cells: FixedBitSet,
}

impl std::fmt::Debug for RegionSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegionSet")
            .field("domain", &self.domain.name())
            .field("len", &self.len())
            .finish()
    }
}

impl PartialEq for RegionSet {
    fn eq(&self, other: &Self) -> bool {
        same_domain(&self.domain, &other.domain) && self.cells == other.cells
    }
}

pub(crate) fn same_domain(a: &Arc<GridDomain>, b: &Arc<GridDomain>) -> bool {
    Arc::ptr_eq(a, b) || a.fingerprint() == b.fingerprint()
}

impl RegionSet {
    /// Builds a region from a bitset, dropping cells that are not open.
    pub fn from_bits(domain: Arc<GridDomain>, mut cells: FixedBitSet) -> Self {
        cells.grow(domain.spec().len());
        cells.intersect_with(domain.open_cells());
        RegionSet { domain, cells }
    }

    pub fn from_cells(domain: Arc<GridDomain>, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = FixedBitSet::with_capacity(domain.spec().len());
        for c in cells {
            if c < bits.len() {
                bits.insert(c);
            }
        }
        Self::from_bits(domain, bits)
    }

    /// Open cells whose centers satisfy `pred`.
    pub fn from_predicate(domain: Arc<GridDomain>, pred: impl Fn(Point) -> bool) -> Self {
        let cells: Vec<usize> = domain.cells().filter(|&c| pred(domain.center(c))).collect();
        Self::from_cells(domain, cells)
    }

    pub fn empty(domain: Arc<GridDomain>) -> Self {
        let n = domain.spec().len();
        RegionSet { domain, cells: FixedBitSet::with_capacity(n) }
    }

    pub fn full(domain: Arc<GridDomain>) -> Self {
        let cells = domain.open_cells().clone();
        RegionSet { domain, cells }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_clear()
    }

    #[inline]
    pub fn contains(&self, c: usize) -> bool {
        c < self.cells.len() && self.cells[c]
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.ones()
    }

    pub fn first(&self) -> Option<usize> {
        self.cells.ones().next()
    }

    pub fn check_same_domain(&self, other: &RegionSet) -> Result<()> {
        if same_domain(&self.domain, &other.domain) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn is_subset(&self, other: &RegionSet) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn is_disjoint(&self, other: &RegionSet) -> bool {
        self.cells.is_disjoint(&other.cells)
    }

    pub fn intersection(&self, other: &RegionSet) -> RegionSet {
        let mut cells = self.cells.clone();
        cells.intersect_with(&other.cells);
        RegionSet { domain: self.domain.clone(), cells }
    }

    pub fn union(&self, other: &RegionSet) -> RegionSet {
        let mut cells = self.cells.clone();
        cells.union_with(&other.cells);
        RegionSet { domain: self.domain.clone(), cells }
    }

    pub fn difference(&self, other: &RegionSet) -> RegionSet {
        let mut cells = self.cells.clone();
        cells.difference_with(&other.cells);
        RegionSet { domain: self.domain.clone(), cells }
    }

    pub fn centers(&self) -> Vec<Point> {
        self.iter().map(|c| self.domain.center(c)).collect()
    }

    /// Diameter of the set of cell centers.
    pub fn diameter(&self) -> f64 {
        diameter(&self.centers())
    }

    pub fn measure(&self) -> f64 {
        self.iter().map(|c| self.domain.mu(c)).sum()
    }

    /// Cells bordering a wall or the complement.
    pub fn boundary_adjacent(&self) -> RegionSet {
        let cells: Vec<usize> = self.iter().filter(|&c| self.domain.touches_boundary(c)).collect();
        RegionSet::from_cells(self.domain.clone(), cells)
    }

    /// Smallest distance from `p` to a cell center of the region.
    pub fn dist_to_point(&self, p: Point) -> f64 {
        self.iter().map(|c| self.domain.center(c).dist(p)).fold(f64::INFINITY, f64::min)
    }

    /// Cell of the region nearest to `p` (smallest index on ties).
    pub fn nearest_cell(&self, p: Point) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for c in self.iter() {
            let d = self.domain.center(c).dist2(p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
        best.map(|b| b.1)
    }

    pub fn is_connected(&self) -> bool {
        match self.first() {
            None => true,
            Some(s) => flood_within(&self.domain, s, &self.cells).len() == self.len(),
        }
    }
}

/// Cells reachable from `start` without leaving `allowed`.
pub(crate) fn flood_within(domain: &GridDomain, start: usize, allowed: &FixedBitSet) -> Vec<usize> {
    let mut seen = FixedBitSet::with_capacity(allowed.len());
    seen.insert(start);
    let mut out = vec![start];
    let mut k = 0;
    while k < out.len() {
        let c = out[k];
        k += 1;
        for n in domain.neighbors(c) {
            if allowed[n] && !seen.put(n) {
                out.push(n);
            }
        }
    }
    out
}

/// Maximal connected subsets, ordered by smallest cell index.
pub fn components(region: &RegionSet) -> Vec<RegionSet> {
    let mut left = region.cells.clone();
    let mut out = Vec::new();
    while let Some(s) = left.ones().next() {
        let comp = flood_within(&region.domain, s, &left);
        let mut bits = FixedBitSet::with_capacity(left.len());
        for &c in &comp {
            bits.insert(c);
            left.set(c, false);
        }
        out.push(RegionSet { domain: region.domain.clone(), cells: bits });
    }
    out
}

/// Cells outside the region that are adjacent to it.
pub fn relative_boundary(region: &RegionSet) -> RegionSet {
    let mut bits = FixedBitSet::with_capacity(region.cells.len());
    for c in region.iter() {
        for n in region.domain.neighbors(c) {
            if !region.cells[n] {
                bits.insert(n);
            }
        }
    }
    RegionSet { domain: region.domain.clone(), cells: bits }
}

/// Smallest center distance between the relative boundaries; `+inf` if either is empty.
pub fn boundary_separation(a: &RegionSet, b: &RegionSet) -> f64 {
    let ra = relative_boundary(a).centers();
    let rb = relative_boundary(b).centers();
    min_pair_distance(&ra, &rb)
}

pub(crate) fn min_pair_distance(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let mut bs = b.to_vec();
    bs.sort_by(|p, q| p.x.total_cmp(&q.x));
    let mut best = f64::INFINITY;
    for p in a {
        let start = bs.partition_point(|q| q.x < p.x);
        for q in bs[start..].iter() {
            if q.x - p.x >= best {
                break;
            }
            best = best.min(p.dist(*q));
        }
        for q in bs[..start].iter().rev() {
            if p.x - q.x >= best {
                break;
            }
            best = best.min(p.dist(*q));
        }
        if best == 0.0 {
            break;
        }
    }
    best
}

/// Tolerances for deciding closure membership at grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// A component touches the center when one of its cell centers is this close.
    pub touch_tol: Option<f64>,
    /// The remainder accumulates at the center when it comes this close.
    pub accumulate_tol: Option<f64>,
    /// Largest `N(r)` accepted as finite.
    pub n_cap: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { touch_tol: None, accumulate_tol: None, n_cap: 64 }
    }
}

impl ReportOptions {
    pub fn touch(&self, h: f64) -> f64 {
        self.touch_tol.unwrap_or(std::f64::consts::SQRT_2 * h) + 1e-12
    }

    pub fn accumulate(&self, h: f64) -> f64 {
        self.accumulate_tol.unwrap_or(2.0 * h)
    }

    pub fn with_touch_tol(mut self, t: f64) -> Self {
        self.touch_tol = Some(t);
        self
    }
}

/// Components of `B(x, r) ∩ Ω` touching `x`, and the remainder `H(r)`.
#[derive(Debug, Clone)]
pub struct ComponentReport {
    pub center: BoundaryPoint,
    pub radius: f64,
    pub touching: Vec<RegionSet>,
    pub remainder: RegionSet,
    pub n: usize,
    pub remainder_accumulates: bool,
    /// Distance from the center to the remainder (`+inf` when empty).
    pub remainder_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReportSummary {
    pub center: Point,
    pub radius: f64,
    pub n: usize,
    pub touching_sizes: Vec<usize>,
    pub remainder_size: usize,
    pub remainder_accumulates: bool,
    pub remainder_distance: Option<f64>,
}

impl ComponentReport {
    pub fn summary(&self) -> ComponentReportSummary {
        ComponentReportSummary {
            center: self.center.position,
            radius: self.radius,
            n: self.n,
            touching_sizes: self.touching.iter().map(|r| r.len()).collect(),
            remainder_size: self.remainder.len(),
            remainder_accumulates: self.remainder_accumulates,
            remainder_distance: self.remainder_distance.is_finite().then_some(self.remainder_distance),
        }
    }
}

pub fn component_report(domain: &Arc<GridDomain>, x: &BoundaryPoint, r: f64) -> Result<ComponentReport> {
    component_report_with(domain, x, r, &ReportOptions::default())
}

pub fn component_report_with(
    domain: &Arc<GridDomain>,
    x: &BoundaryPoint,
    r: f64,
    opts: &ReportOptions,
) -> Result<ComponentReport> {
    let h = domain.h();
    if r < 4.0 * h * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!("radius {r} is below 4h")));
    }
    let b = ball(domain, x.position, r);
    if b.is_empty() {
        return Err(Error::EmptyBall { x: x.position.x, y: x.position.y, r });
    }
    let touch = opts.touch(h);
    let mut touching = Vec::new();
    let mut remainder = RegionSet::empty(domain.clone());
    for comp in components(&b) {
        if comp.dist_to_point(x.position) <= touch {
            touching.push(comp);
        } else {
            remainder = remainder.union(&comp);
        }
    }
    let remainder_distance = remainder.dist_to_point(x.position);
    Ok(ComponentReport {
        center: *x,
        radius: r,
        n: touching.len(),
        touching,
        remainder,
        remainder_accumulates: remainder_distance < opts.accumulate(h),
        remainder_distance,
    })
}

/// Dyadic ladder `r_max 2^-k`, down to the smallest value not below `4h`.
pub fn dyadic_ladder(r_max: f64, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= 4.0 * h * (1.0 - 1e-9) {
        out.push(r);
        r *= 0.5;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    FinitelyConnected,
    NotFinitelyConnected,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityVerdict {
    pub verdict: Connectivity,
    pub levels: Vec<ComponentReportSummary>,
    /// `N` at the finest level when it agrees with the level before.
    pub stabilized_n: Option<usize>,
}

impl ConnectivityVerdict {
    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.n).collect()
    }
}

pub fn finitely_connected_at(
    domain: &Arc<GridDomain>,
    x: &BoundaryPoint,
    radii: &[f64],
    opts: &ReportOptions,
) -> Result<ConnectivityVerdict> {
    if radii.is_empty() {
        return Err(Error::RadiusLadderEmpty);
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("radii must descend".into()));
    }
    let mut levels = Vec::with_capacity(radii.len());
    for &r in radii {
        levels.push(component_report_with(domain, x, r, opts)?.summary());
    }
    let all_acc = levels.iter().all(|l| l.remainder_accumulates);
    let none_acc = levels.iter().all(|l| !l.remainder_accumulates);
    let over_cap = levels.iter().any(|l| l.n > opts.n_cap);
    let all_touch = levels.iter().all(|l| l.n >= 1);
    let verdict = if all_acc || over_cap {
        Connectivity::NotFinitelyConnected
    } else if none_acc && all_touch {
        Connectivity::FinitelyConnected
    } else {
        Connectivity::Unresolved
    };
    let stabilized_n = match levels.as_slice() {
        [.., a, b] if a.n == b.n => Some(b.n),
        [a] => Some(a.n),
        _ => None,
    };
    Ok(ConnectivityVerdict { verdict, levels, stabilized_n })
}

/// A discrete curve approaching a boundary point through nested components.
#[derive(Debug, Clone)]
pub struct AccessibilityWitness {
    pub target: BoundaryPoint,
    pub path: Vec<usize>,
    pub radii: Vec<f64>,
    /// The component of `B(x, r_k) ∩ Ω` followed at each radius.
    pub components: Vec<RegionSet>,
}

#[derive(Debug, Clone)]
pub enum Accessibility {
    Accessible(AccessibilityWitness),
    /// No touching component nested in the previous one at this radius.
    Inaccessible { radius: f64 },
}

impl Accessibility {
    pub fn witness(&self) -> Option<&AccessibilityWitness> {
        match self {
            Accessibility::Accessible(w) => Some(w),
            Accessibility::Inaccessible { .. } => None,
        }
    }

    pub fn is_accessible(&self) -> bool {
        self.witness().is_some()
    }
}

/// Index of the component best aligned with the side hint (first if none).
fn pick_by_hint(domain: &GridDomain, x: &BoundaryPoint, cands: &[RegionSet], touch: f64) -> usize {
    let Some(hint) = x.side_hint else { return 0 };
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, comp) in cands.iter().enumerate() {
        let near: Vec<Point> = comp
            .iter()
            .map(|c| domain.center(c))
            .filter(|p| p.dist(x.position) <= touch.max(2.0 * domain.h()))
            .collect();
        let pts = if near.is_empty() { comp.centers() } else { near };
        let n = pts.len() as f64;
        let mean = pts.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n);
        let score = (mean - x.position).dot(hint);
        if score > best.0 {
            best = (score, k);
        }
    }
    best.1
}

/// Follows nested touching components down the ladder and joins them by a path.
pub fn accessibility(
    domain: &Arc<GridDomain>,
    x: &BoundaryPoint,
    ladder: &[f64],
    opts: &ReportOptions,
) -> Result<Accessibility> {
    domain.check_boundary_point(x)?;
    if ladder.is_empty() {
        return Err(Error::RadiusLadderEmpty);
    }
    let touch = opts.touch(domain.h());
    let mut chosen: Vec<RegionSet> = Vec::with_capacity(ladder.len());
    for &r in ladder {
        let rep = component_report_with(domain, x, r, opts)?;
        let cands: Vec<RegionSet> = match chosen.last() {
            None => rep.touching,
            Some(prev) => rep.touching.into_iter().filter(|c| c.is_subset(prev)).collect(),
        };
        if cands.is_empty() {
            return Ok(Accessibility::Inaccessible { radius: r });
        }
        let k = pick_by_hint(domain, x, &cands, touch);
        chosen.push(cands[k].clone());
    }
    let path = path_through(domain, x.position, &chosen, ladder[0])?;
    Ok(Accessibility::Accessible(AccessibilityWitness {
        target: *x,
        path,
        radii: ladder.to_vec(),
        components: chosen,
    }))
}

/// A path starting near distance `r0 / 2` from `x` in the first component and
/// entering each nested component in turn, ending at the cell nearest to `x`.
pub fn path_through(domain: &GridDomain, x: Point, chosen: &[RegionSet], r0: f64) -> Result<Vec<usize>> {
    let first = chosen.first().ok_or(Error::RadiusLadderEmpty)?;
    let start = first
        .iter()
        .min_by(|&a, &b| {
            let da = (domain.center(a).dist(x) - 0.5 * r0).abs();
            let db = (domain.center(b).dist(x) - 0.5 * r0).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .ok_or_else(|| Error::InvalidArgument("empty component".into()))?;
    let mut path = vec![start];
    for k in 0..chosen.len() {
        let cur = *path.last().expect("path nonempty");
        let target_bits = if k + 1 < chosen.len() {
            chosen[k + 1].bits().clone()
        } else {
            let end = chosen[k].nearest_cell(x).expect("nonempty");
            let mut b = FixedBitSet::with_capacity(chosen[k].bits().len());
            b.insert(end);
            b
        };
        let seg = bfs_path(domain, cur, &target_bits, chosen[k].bits())
            .ok_or_else(|| Error::InvalidDomain("nested component unreachable".into()))?;
        path.extend_from_slice(&seg[1..]);
    }
    Ok(path)
}

/// Shortest path (in hops) from `start` to any cell of `targets`, inside `allowed`.
pub fn bfs_path(domain: &GridDomain, start: usize, targets: &FixedBitSet, allowed: &FixedBitSet) -> Option<Vec<usize>> {
    if targets[start] {
        return Some(vec![start]);
    }
    let n = allowed.len();
    let mut prev = vec![usize::MAX; n];
    prev[start] = start;
    let mut q = VecDeque::from([start]);
    while let Some(c) = q.pop_front() {
        for m in domain.neighbors(c) {
            if allowed[m] && prev[m] == usize::MAX {
                prev[m] = c;
                if targets[m] {
                    let mut out = vec![m];
                    let mut cur = m;
                    while cur != start {
                        cur = prev[cur];
                        out.push(cur);
                    }
                    out.reverse();
                    return Some(out);
                }
                q.push_back(m);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};
    use proptest::prelude::*;

    fn gallery(name: &str, h: f64) -> Arc<GridDomain> {
        build_gallery(name, h, &GalleryParams::default()).unwrap().into_shared()
    }

    #[test]
    fn components_of_whole_and_empty() {
        let d = gallery("unit_square", 1.0 / 32.0);
        assert_eq!(components(&RegionSet::full(d.clone())).len(), 1);
        assert!(components(&RegionSet::empty(d)).is_empty());
    }

    #[test]
    fn slit_splits_a_ball() {
        let d = gallery("slit_disk", 1.0 / 128.0);
        let b = ball(&d, Point::new(-0.5, 0.0), 0.2);
        assert_eq!(components(&b).len(), 2);
    }

    #[test]
    fn relative_boundary_of_left_half() {
        let n = 32;
        let d = gallery("unit_square", 1.0 / n as f64);
        let left = RegionSet::from_predicate(d.clone(), |p| p.x < 0.5);
        let rb = relative_boundary(&left);
        assert_eq!(rb.len(), n);
        assert!(rb.centers().iter().all(|p| (p.x - (0.5 + 0.5 / n as f64)).abs() < 1e-12));
        assert!(relative_boundary(&RegionSet::full(d)).is_empty());
    }

    #[test]
    fn concentric_ball_separation() {
        let h = 1.0 / 128.0;
        let d = gallery("unit_square", h);
        let x = Point::new(0.5, 0.5);
        let s = boundary_separation(&ball(&d, x, 0.1), &ball(&d, x, 0.2));
        assert!((s - 0.1).abs() <= 2.0 * h, "{s}");
        let a = ball(&d, x, 0.1);
        assert_eq!(boundary_separation(&a, &a), 0.0);
    }

    #[test]
    fn square_edge_report() {
        let d = gallery("unit_square", 1.0 / 64.0);
        let rep = component_report(&d, &BoundaryPoint::new(0.5, 0.0), 0.25).unwrap();
        assert_eq!(rep.n, 1);
        assert!(rep.remainder.is_empty());
    }

    #[test]
    fn slit_report_has_two_sides() {
        let d = gallery("slit_disk", 1.0 / 128.0);
        let x = BoundaryPoint::new(-0.5, 0.0).with_side(0.0, 1.0);
        let rep = component_report(&d, &x, 0.2).unwrap();
        assert_eq!(rep.n, 2);
        let acc = accessibility(&d, &x, &dyadic_ladder(0.2, d.h()), &ReportOptions::default()).unwrap();
        let w = acc.witness().unwrap();
        assert!(d.center(*w.path.last().unwrap()).y > 0.0);
        for pair in w.path.windows(2) {
            assert!(d.adjacent(pair[0], pair[1]));
        }
    }

    #[test]
    fn empty_ball_is_an_error() {
        let d = gallery("unit_square", 1.0 / 32.0);
        let r = component_report(&d, &BoundaryPoint::new(3.0, 3.0), 0.2);
        assert!(matches!(r, Err(Error::EmptyBall { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn components_partition(cx in 0.1f64..0.9, cy in 0.1f64..0.9, r in 0.05f64..0.5) {
            let d = gallery("topologist_comb", 1.0 / 128.0);
            let b = ball(&d, Point::new(cx, cy), r);
            let comps = components(&b);
            let mut total = 0;
            for (k, c) in comps.iter().enumerate() {
                prop_assert!(c.is_connected());
                prop_assert!(c.is_subset(&b));
                total += c.len();
                for o in &comps[k + 1..] {
                    prop_assert!(c.is_disjoint(o));
                    // Maximality: no edge joins two components.
                    for cell in c.iter() {
                        prop_assert!(d.neighbors(cell).all(|n| !o.contains(n)));
                    }
                }
            }
            prop_assert_eq!(total, b.len());
        }
    }
}
