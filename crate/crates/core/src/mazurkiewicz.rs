//! Inner-diameter (Mazurkiewicz) distance, the boundary atlas it induces,
//! and its correspondence with prime ends.

use crate::domain::{ball, BoundaryPoint, GridDomain};
use crate::ends::{DiscreteChain, PrimeEndRecord};
use crate::error::{Error, Result};
use crate::geom::{diameter, Point};
use crate::regions::{components, flood_within, RegionSet};
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct MazDistanceResult {
    pub value: f64,
    /// Certified: every connected set containing both cells has at least this diameter.
    pub lower_bound: f64,
    /// A connecting path whose diameter is `value`.
    pub witness: RegionSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MazOptions {
    /// Extra ball-centred searches used to tighten the upper bound.
    pub refine_centers: usize,
}

impl Default for MazOptions {
    fn default() -> Self {
        MazOptions { refine_centers: 8 }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Path from `x` to `y` minimizing the largest `cost` along it.
fn minimax_path(domain: &GridDomain, x: usize, y: usize, cost: impl Fn(usize) -> f64) -> (f64, Vec<usize>) {
    let n = domain.spec().len();
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = FixedBitSet::with_capacity(n);
    let mut heap = BinaryHeap::new();
    best[x] = cost(x);
    heap.push(Item(best[x], x));
    while let Some(Item(b, c)) = heap.pop() {
        if done[c] {
            continue;
        }
        done.insert(c);
        if c == y {
            break;
        }
        for m in domain.neighbors(c) {
            let v = b.max(cost(m));
            if v < best[m] {
                best[m] = v;
                parent[m] = c;
                heap.push(Item(v, m));
            }
        }
    }
    let mut path = vec![y];
    let mut c = y;
    while c != x {
        c = parent[c];
        path.push(c);
    }
    path.reverse();
    (best[y], path)
}

fn path_diameter(domain: &GridDomain, path: &[usize]) -> f64 {
    let pts: Vec<Point> = path.iter().map(|&c| domain.center(c)).collect();
    diameter(&pts)
}

pub fn maz_distance(domain: &Arc<GridDomain>, x: usize, y: usize) -> Result<MazDistanceResult> {
    maz_distance_with(domain, x, y, &MazOptions::default())
}

pub fn maz_distance_with(domain: &Arc<GridDomain>, x: usize, y: usize, opts: &MazOptions) -> Result<MazDistanceResult> {
    for c in [x, y] {
        if c >= domain.spec().len() || !domain.is_open(c) {
            return Err(Error::NotInDomain(c));
        }
    }
    // Canonical order makes the result exactly symmetric.
    let (x, y) = (x.min(y), x.max(y));
    if x == y {
        return Ok(MazDistanceResult { value: 0.0, lower_bound: 0.0, witness: RegionSet::from_cells(domain.clone(), [x]) });
    }
    let (px, py) = (domain.center(x), domain.center(y));
    let (lower_bound, path) = minimax_path(domain, x, y, |c| {
        let p = domain.center(c);
        p.dist(px).max(p.dist(py))
    });
    let mut best = (path_diameter(domain, &path), path);
    let mut centers = vec![(px + py) * 0.5];
    let k = opts.refine_centers.min(best.1.len());
    for i in 0..k.saturating_sub(1) {
        centers.push(domain.center(best.1[(i + 1) * best.1.len() / k.max(1) - 1]));
    }
    for m in centers.into_iter().take(opts.refine_centers.max(1)) {
        let (_, p) = minimax_path(domain, x, y, |c| domain.center(c).dist(m));
        let d = path_diameter(domain, &p);
        if d < best.0 {
            best = (d, p);
        }
    }
    Ok(MazDistanceResult {
        value: best.0.max(lower_bound),
        lower_bound,
        witness: RegionSet::from_cells(domain.clone(), best.1),
    })
}

/// Cells reachable from `start` inside `B(center, r)`.
fn reach_in_ball(domain: &Arc<GridDomain>, start: usize, center: Point, r: f64) -> Vec<usize> {
    let b = ball(domain, center, r);
    if !b.contains(start) {
        return Vec::new();
    }
    flood_within(domain, start, b.bits())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// Descending approach: one representative cell per scale `tau * 2^-j`.
    pub representative: Vec<usize>,
    pub anchor: BoundaryPoint,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedCluster {
    pub anchor: BoundaryPoint,
    pub members: Vec<usize>,
    /// First scale index at which no descending representative was found.
    pub failed_level: usize,
}

#[derive(Debug, Clone)]
pub struct MazBoundaryAtlas {
    pub domain: Arc<GridDomain>,
    pub resolution: f64,
    pub tau: f64,
    pub clusters: Vec<Cluster>,
    /// Seed groups whose approach fails the Cauchy test.
    pub rejected: Vec<RejectedCluster>,
    /// Cluster index of each seed cell (`usize::MAX` for rejected seeds and non-seeds).
    pub seed_cluster: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasJson {
    pub resolution: f64,
    pub tau: f64,
    pub clusters: Vec<Cluster>,
    pub rejected: Vec<RejectedCluster>,
}

impl MazBoundaryAtlas {
    pub fn to_json(&self) -> AtlasJson {
        AtlasJson {
            resolution: self.resolution,
            tau: self.tau,
            clusters: self.clusters.clone(),
            rejected: self.rejected.clone(),
        }
    }

    pub fn cluster_of(&self, seed: usize) -> Option<usize> {
        self.seed_cluster.get(seed).copied().filter(|&c| c != usize::MAX)
    }
}

/// Descending approach to `anchor` inside the side of `B(anchor, 2 tau)` containing `seed`.
///
/// Level `j` has scale `s = tau 2^-j`; its representative lies within `2s` of the anchor,
/// at depth at least `s/4`, and is reached from the previous one inside a ball of radius
/// `s_{j-1}/2`, so consecutive representatives are `d_M`-close.
fn descending_approach(domain: &Arc<GridDomain>, seed: usize, anchor: Point, tau: f64) -> std::result::Result<Vec<usize>, usize> {
    let h = domain.h();
    let side = reach_in_ball(domain, seed, anchor, 2.0 * tau);
    let mut in_side = FixedBitSet::with_capacity(domain.spec().len());
    for &c in &side {
        in_side.insert(c);
    }
    let mut scales = vec![tau];
    while scales.last().expect("nonempty") / 2.0 >= 2.0 * h - 1e-12 {
        scales.push(scales.last().expect("nonempty") / 2.0);
    }
    let candidate = |c: usize, s: f64| domain.center(c).dist(anchor) <= 2.0 * s && domain.delta(c) >= s / 4.0 - 1e-12;
    let mut frontier: Vec<usize> = side.iter().copied().filter(|&c| candidate(c, scales[0])).collect();
    if frontier.is_empty() {
        return Err(0);
    }
    let mut parents: Vec<Vec<(usize, usize)>> = vec![frontier.iter().map(|&c| (c, usize::MAX)).collect()];
    for j in 1..scales.len() {
        let (s_prev, s) = (scales[j - 1], scales[j]);
        // Multi-source search; each cell keeps the origin that reached it first.
        let n = domain.spec().len();
        let mut origin = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &c in &frontier {
            origin[c] = c;
            queue.push_back(c);
        }
        while let Some(c) = queue.pop_front() {
            let o = domain.center(origin[c]);
            for m in domain.neighbors(c) {
                if origin[m] == usize::MAX && in_side[m] && domain.center(m).dist(o) <= s_prev / 2.0 {
                    origin[m] = origin[c];
                    queue.push_back(m);
                }
            }
        }
        let mut next: Vec<(usize, usize)> = side
            .iter()
            .copied()
            .filter(|&c| origin[c] != usize::MAX && candidate(c, s))
            .map(|c| (c, origin[c]))
            .collect();
        if next.is_empty() {
            return Err(j);
        }
        next.sort_unstable();
        frontier = next.iter().map(|e| e.0).collect();
        parents.push(next);
    }
    // Backtrack from the representative closest to the anchor.
    let last = parents.last().expect("nonempty");
    let mut cur = last
        .iter()
        .min_by(|a, b| domain.center(a.0).dist(anchor).total_cmp(&domain.center(b.0).dist(anchor)).then(a.0.cmp(&b.0)))
        .expect("nonempty")
        .0;
    let mut reps = vec![cur];
    for j in (1..parents.len()).rev() {
        let o = parents[j].iter().find(|e| e.0 == cur).expect("present").1;
        reps.push(o);
        cur = o;
    }
    reps.reverse();
    Ok(reps)
}

/// Default clustering scale.
pub fn default_tau(domain: &GridDomain) -> f64 {
    16.0 * domain.h()
}

/// Groups boundary-adjacent cells into `d_M`-clusters of scale `tau` and keeps those with a
/// descending approach to their anchor.
pub fn maz_boundary(domain: &Arc<GridDomain>, tau: f64) -> Result<MazBoundaryAtlas> {
    let h = domain.h();
    if tau < 8.0 * h - 1e-12 {
        return Err(Error::InvalidArgument(format!("tau = {tau} is below 8h")));
    }
    let seeds: Vec<usize> = domain.cells().filter(|&c| domain.touches_boundary(c)).collect();
    if seeds.is_empty() {
        return Err(Error::CollarEmpty);
    }
    let n = domain.spec().len();
    let mut is_seed = FixedBitSet::with_capacity(n);
    for &s in &seeds {
        is_seed.insert(s);
    }
    let mut assigned = FixedBitSet::with_capacity(n);
    let mut seed_cluster = vec![usize::MAX; n];
    let (mut clusters, mut rejected) = (Vec::new(), Vec::new());
    for &s in &seeds {
        if assigned[s] {
            continue;
        }
        // Every member is reached from `s` inside B(s, tau/2), so its d_M to `s` is at most tau.
        let members: Vec<usize> = reach_in_ball(domain, s, domain.center(s), tau / 2.0)
            .into_iter()
            .filter(|&c| is_seed[c] && !assigned[c])
            .collect();
        for &c in &members {
            assigned.insert(c);
        }
        let Some(a) = domain.nearest_boundary_point(domain.center(s)) else {
            continue;
        };
        match descending_approach(domain, s, a, tau) {
            Ok(reps) => {
                let last = domain.center(*reps.last().expect("nonempty"));
                let anchor = domain.nearest_boundary_point(last).unwrap_or(a);
                let id = clusters.len();
                for &c in &members {
                    seed_cluster[c] = id;
                }
                clusters.push(Cluster { id, representative: reps, anchor: BoundaryPoint::new(anchor.x, anchor.y), members });
            }
            Err(failed_level) => {
                rejected.push(RejectedCluster { anchor: BoundaryPoint::new(a.x, a.y), members, failed_level });
            }
        }
    }
    Ok(MazBoundaryAtlas { domain: domain.clone(), resolution: h, tau, clusters, rejected, seed_cluster })
}

/// Boundary image of a cluster.
pub fn psi_project(atlas: &MazBoundaryAtlas, id: usize) -> Result<BoundaryPoint> {
    atlas
        .clusters
        .get(id)
        .map(|c| c.anchor)
        .ok_or_else(|| Error::InvalidArgument(format!("no cluster {id}")))
}

/// Canonical representative of a region: the cell nearest its centroid.
pub fn level_representative(region: &RegionSet) -> Option<usize> {
    let pts = region.centers();
    if pts.is_empty() {
        return None;
    }
    let c = pts.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) * (1.0 / pts.len() as f64);
    region.nearest_cell(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMatch {
    pub record: usize,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub matches: Vec<PhiMatch>,
    pub unmatched_records: Vec<usize>,
    /// Clusters at the sampled boundary points that no record reached.
    pub unmatched_clusters: Vec<usize>,
    /// Clusters reached by more than one record.
    pub shared_clusters: Vec<usize>,
    pub bijective: bool,
}

/// Seed nearest to `p` among `cells`, with ties broken by index.
fn nearest_seed(domain: &GridDomain, cells: impl Iterator<Item = usize>, p: Point) -> Option<usize> {
    cells
        .filter(|&c| domain.touches_boundary(c))
        .min_by(|&a, &b| domain.center(a).dist(p).total_cmp(&domain.center(b).dist(p)).then(a.cmp(&b)))
}

/// Matches prime-end records to atlas clusters.
///
/// A record with a target point maps to the cluster of the seed nearest the target inside its
/// last region; otherwise to the cluster of the seed nearest its deepest representative within
/// `d_M` distance `tau`. The clusters expected at a target are one per local side: the cluster
/// of the nearest seed in each component of the smallest record ball that reaches the target.
pub fn phi_correspondence(records: &[PrimeEndRecord], atlas: &MazBoundaryAtlas) -> Result<PhiReport> {
    let domain = &atlas.domain;
    let h = domain.h();
    let mut matches = Vec::new();
    let mut expected = std::collections::BTreeSet::new();
    let mut hit = std::collections::BTreeMap::<usize, usize>::new();
    for (i, r) in records.iter().enumerate() {
        let chain = &r.chain;
        if chain.domain().fingerprint() != domain.fingerprint() {
            return Err(Error::DomainMismatch);
        }
        let last = chain.last();
        if last.scale > 2.0 * atlas.tau {
            return Err(Error::ScaleMismatch(format!(
                "last chain scale {} exceeds twice the atlas scale {}",
                last.scale, atlas.tau
            )));
        }
        let seed = match &chain.target {
            Some(t) => nearest_seed(domain, last.region.iter(), t.position),
            None => level_representative(&last.region).and_then(|rep| {
                let p = domain.center(rep);
                nearest_seed(domain, reach_in_ball(domain, rep, p, atlas.tau / 2.0).into_iter(), p)
            }),
        };
        let cluster = seed.and_then(|s| atlas.cluster_of(s));
        if let Some(c) = cluster {
            *hit.entry(c).or_default() += 1;
        }
        matches.push(PhiMatch { record: i, cluster });
        if let Some(t) = &chain.target {
            let b = ball(domain, t.position, last.scale);
            for comp in components(&b) {
                if comp.dist_to_point(t.position) <= 1.5 * h {
                    if let Some(c) = nearest_seed(domain, comp.iter(), t.position).and_then(|s| atlas.cluster_of(s)) {
                        expected.insert(c);
                    }
                }
            }
        }
    }
    let unmatched_records: Vec<usize> = matches.iter().filter(|m| m.cluster.is_none()).map(|m| m.record).collect();
    let unmatched_clusters: Vec<usize> = expected.iter().copied().filter(|c| !hit.contains_key(c)).collect();
    let shared_clusters: Vec<usize> = hit.iter().filter(|(_, &n)| n > 1).map(|(&c, _)| c).collect();
    let bijective = unmatched_records.is_empty() && unmatched_clusters.is_empty() && shared_clusters.is_empty();
    Ok(PhiReport { matches, unmatched_records, unmatched_clusters, shared_clusters, bijective })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialReport {
    /// `d_M` between the deepest representatives of each chain and of the limit.
    pub distances: Vec<f64>,
    pub tolerance: f64,
    pub converges: bool,
}

/// Sequential convergence of ends measured with `d_M` between level representatives.
pub fn maz_sequential_criterion(seq: &[DiscreteChain], limit: &DiscreteChain, singleton_tol: f64) -> Result<SequentialReport> {
    let imp = crate::ends::impression(limit);
    if imp.diameter > singleton_tol {
        return Err(Error::NotSingleton);
    }
    let domain = limit.domain();
    let lrep = level_representative(&limit.last().region).ok_or(Error::CollarEmpty)?;
    let opts = MazOptions { refine_centers: 2 };
    let mut distances = Vec::with_capacity(seq.len());
    for c in seq {
        if c.domain().fingerprint() != domain.fingerprint() {
            return Err(Error::DomainMismatch);
        }
        let rep = level_representative(&c.last().region).ok_or(Error::CollarEmpty)?;
        distances.push(maz_distance_with(domain, rep, lrep, &opts)?.value);
    }
    let tolerance = 2.0 * limit.last().scale + 2.0 * domain.h();
    let converges = distances.last().is_none_or(|&d| d <= tolerance);
    Ok(SequentialReport { distances, tolerance, converges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};

    fn gallery(name: &str, h: f64) -> Arc<GridDomain> {
        build_gallery(name, h, &GalleryParams::depth(5)).unwrap().into_shared()
    }

    fn cell(d: &GridDomain, x: f64, y: f64) -> usize {
        d.spec().cell_at(Point::new(x, y)).unwrap()
    }

    #[test]
    fn convex_distance_is_euclidean() {
        let h = 1.0 / 64.0;
        let d = gallery("unit_square", h);
        let (a, b) = (cell(&d, 0.1, 0.2), cell(&d, 0.8, 0.7));
        let r = maz_distance(&d, a, b).unwrap();
        let e = d.center(a).dist(d.center(b));
        assert!(r.lower_bound <= r.value && r.lower_bound >= e - 1e-12);
        assert!(r.value - e <= 2.0 * h, "{} vs {e}", r.value);
        assert!(r.witness.is_connected());
    }

    #[test]
    fn distance_is_symmetric_and_zero_on_diagonal() {
        let d = gallery("slit_disk", 1.0 / 64.0);
        let (a, b) = (cell(&d, -0.5, 0.05), cell(&d, -0.3, -0.1));
        assert_eq!(maz_distance(&d, a, b).unwrap().value, maz_distance(&d, b, a).unwrap().value);
        assert_eq!(maz_distance(&d, a, a).unwrap().value, 0.0);
    }

    #[test]
    fn crossing_the_slit_goes_around_the_tip() {
        let d = gallery("slit_disk", 1.0 / 64.0);
        let (a, b) = (cell(&d, -0.5, 0.02), cell(&d, -0.5, -0.02));
        let r = maz_distance(&d, a, b).unwrap();
        assert!(r.lower_bound > 0.45, "{}", r.lower_bound);
    }

    #[test]
    fn closed_cell_is_rejected() {
        let d = gallery("disk", 1.0 / 32.0);
        assert!(matches!(maz_distance(&d, 0, d.first_cell()), Err(Error::NotInDomain(0))));
    }

    #[test]
    fn slit_points_have_two_clusters() {
        let h = 1.0 / 128.0;
        let d = gallery("slit_disk", h);
        let atlas = maz_boundary(&d, default_tau(&d)).unwrap();
        let up = atlas.cluster_of(cell(&d, -0.5, h / 2.0)).unwrap();
        let down = atlas.cluster_of(cell(&d, -0.5, -h / 2.0)).unwrap();
        assert_ne!(up, down);
        for id in [up, down] {
            let a = psi_project(&atlas, id).unwrap().position;
            assert!(a.dist(Point::new(-0.5, 0.0)) < 16.0 * h, "{a:?}");
        }
    }

    #[test]
    fn disk_atlas_covers_the_circle() {
        let h = 1.0 / 64.0;
        let d = gallery("disk", h);
        let atlas = maz_boundary(&d, default_tau(&d)).unwrap();
        assert!(atlas.rejected.is_empty());
        let per = 2.0 * std::f64::consts::PI / atlas.tau;
        let n = atlas.clusters.len() as f64;
        assert!(n >= per && n <= 4.0 * per, "{n} clusters");
    }

    #[test]
    fn tau_below_resolution_is_rejected() {
        let d = gallery("disk", 1.0 / 32.0);
        assert!(maz_boundary(&d, 1.0 / 32.0).is_err());
    }
}
