//! John, uniform and almost-John classification on grid domains.

pub mod chain;
pub mod content;

pub use chain::{build_ball_chain, check_ball_chain, john_ratio, BallChain, ChainBall};
pub use content::{hausdorff_content, ContentEstimate};

use crate::domain::{ball, BoundaryPoint, DomainBuilder, GridDomain};
use crate::ends::{DecayVerdict, DiscreteChain};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::modulus::{capacity, modp_chain_decay, CapacityProblem, DecayOptions};
use crate::regions::{component_report, RegionSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnOptions {
    /// Constants above this count as large.
    pub cap: f64,
    /// Pareto labels kept per cell.
    pub labels_per_cell: usize,
}

impl Default for JohnOptions {
    fn default() -> Self {
        JohnOptions { cap: 25.0, labels_per_cell: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum JohnVerdict {
    John { constant: f64 },
    NotJohn { sequence: Vec<(Point, f64)> },
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnAssessment {
    pub center: usize,
    pub constant_estimate: f64,
    pub worst_sample: usize,
    pub verdict: JohnVerdict,
    /// Per-sample constants, in sample order.
    pub per_sample: Vec<(usize, f64)>,
}

impl JohnAssessment {
    pub fn is_john(&self) -> bool {
        matches!(self.verdict, JohnVerdict::John { .. })
    }

    pub fn is_not_john(&self) -> bool {
        matches!(self.verdict, JohnVerdict::NotJohn { .. })
    }
}

/// A curve found by [`john_curve`], from the sample to the center.
#[derive(Debug, Clone, PartialEq)]
pub struct JohnCurve {
    pub ratio: f64,
    pub length: f64,
    pub cells: Vec<usize>,
}

impl JohnCurve {
    pub fn points(&self, domain: &GridDomain) -> Vec<Point> {
        self.cells.iter().map(|&c| domain.center(c)).collect()
    }
}

#[derive(Clone, Copy)]
struct Label {
    len: f64,
    ratio: f64,
    cell: usize,
    parent: usize,
}

#[derive(PartialEq)]
struct Key(f64, f64, usize);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.total_cmp(&self.1)).then_with(|| o.2.cmp(&self.2))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Eight-neighbour moves; a diagonal needs one open two-step route.
fn moves(domain: &GridDomain, c: usize) -> Vec<(usize, f64)> {
    let h = domain.h();
    let spec = domain.spec();
    let mut out: Vec<(usize, f64)> = domain.neighbors(c).map(|m| (m, h)).collect();
    let (i, j) = spec.coords(c);
    for (di, dj) in [(-1i64, -1i64), (-1, 1), (1, -1), (1, 1)] {
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        if ni < 0 || nj < 0 || ni >= spec.nx as i64 || nj >= spec.ny as i64 {
            continue;
        }
        let d = spec.index(ni as usize, nj as usize);
        if !domain.is_open(d) {
            continue;
        }
        let a = spec.index(ni as usize, j);
        let b = spec.index(i, nj as usize);
        let via = |m: usize| domain.is_open(m) && domain.adjacent(c, m) && domain.adjacent(m, d);
        if via(a) || via(b) {
            out.push((d, h * std::f64::consts::SQRT_2));
        }
    }
    out
}

/// Curve from `x` to `x0` minimizing `max_t t / delta(curve(t))`, `t` the arclength from `x`.
pub fn john_curve(domain: &GridDomain, x: usize, x0: usize, opts: &JohnOptions) -> Result<JohnCurve> {
    for c in [x, x0] {
        if c >= domain.spec().len() || !domain.is_open(c) {
            return Err(Error::NotInDomain(c));
        }
    }
    let n = domain.spec().len();
    let mut labels: Vec<Label> = vec![Label { len: 0.0, ratio: 0.0, cell: x, parent: usize::MAX }];
    let mut alive = vec![true];
    let mut front: Vec<Vec<usize>> = vec![Vec::new(); n];
    front[x].push(0);
    let mut heap = BinaryHeap::new();
    heap.push(Key(0.0, 0.0, 0));
    while let Some(Key(_, _, id)) = heap.pop() {
        if !alive[id] {
            continue;
        }
        let l = labels[id];
        if l.cell == x0 {
            let mut cells = vec![x0];
            let mut k = l.parent;
            while k != usize::MAX {
                cells.push(labels[k].cell);
                k = labels[k].parent;
            }
            cells.reverse();
            return Ok(JohnCurve { ratio: l.ratio, length: l.len, cells });
        }
        for (m, step) in moves(domain, l.cell) {
            let len = l.len + step;
            let ratio = l.ratio.max(len / domain.delta(m));
            if front[m].iter().any(|&k| labels[k].len <= len && labels[k].ratio <= ratio) {
                continue;
            }
            front[m].retain(|&k| {
                let dominated = labels[k].len >= len && labels[k].ratio >= ratio;
                if dominated {
                    alive[k] = false;
                }
                !dominated
            });
            if front[m].len() >= opts.labels_per_cell {
                continue;
            }
            let nid = labels.len();
            labels.push(Label { len, ratio, cell: m, parent: id });
            alive.push(true);
            front[m].push(nid);
            heap.push(Key(ratio, len, nid));
        }
    }
    Err(Error::Unresolved(format!("no curve from cell {x} to cell {x0}")))
}

/// Deterministic sample set: a stride lattice, boundary-adjacent cells, and local tips of the
/// hop distance from the center.
pub fn default_samples(domain: &GridDomain, x0: usize, n: usize) -> Vec<usize> {
    let cells: Vec<usize> = domain.cells().collect();
    let stride = (cells.len() / n.max(1)).max(1);
    let mut out: Vec<usize> = cells.iter().copied().step_by(stride).collect();
    let bnd: Vec<usize> = cells.iter().copied().filter(|&c| domain.touches_boundary(c)).collect();
    out.extend(bnd.iter().copied().step_by((bnd.len() / n.max(1)).max(1)));
    let hops = domain.bfs_hops(&[x0], None);
    let mut tips: Vec<usize> = cells
        .iter()
        .copied()
        .filter(|&c| hops[c] != u32::MAX && domain.neighbors(c).all(|m| hops[m] <= hops[c]))
        .collect();
    tips.sort_by_key(|&c| (std::cmp::Reverse(hops[c]), c));
    out.extend(tips.into_iter().take(n.max(1)));
    out.sort_unstable();
    out.dedup();
    out
}

/// Samples the curve from `w` toward the center at arclengths `l 2^-k`, approaching `w`.
fn approach_sequence(domain: &GridDomain, curve: &JohnCurve, x0: usize, opts: &JohnOptions) -> Result<Vec<(Point, f64)>> {
    let pts = curve.points(domain);
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().expect("nonempty") + w[0].dist(w[1]));
    }
    let total = *cum.last().expect("nonempty");
    let mut seq = Vec::new();
    let mut t = 0.5 * total;
    while t >= domain.h() {
        let k = cum.partition_point(|&c| c < t).min(curve.cells.len() - 1);
        let c = curve.cells[k];
        seq.push((domain.center(c), john_curve(domain, c, x0, opts)?.ratio));
        t *= 0.5;
    }
    seq.push((pts[0], curve.ratio));
    Ok(seq)
}

pub fn john_assess(domain: &GridDomain, x0: usize, samples: &[usize], opts: &JohnOptions) -> Result<JohnAssessment> {
    if x0 >= domain.spec().len() || !domain.is_open(x0) {
        return Err(Error::NotInDomain(x0));
    }
    let curves: Vec<JohnCurve> = samples.par_iter().map(|&s| john_curve(domain, s, x0, opts)).collect::<Result<_>>()?;
    let per_sample: Vec<(usize, f64)> = samples.iter().zip(&curves).map(|(&s, c)| (s, c.ratio)).collect();
    let mut worst: Option<(usize, JohnCurve)> = None;
    for (&s, c) in samples.iter().zip(curves) {
        if worst.as_ref().is_none_or(|w| c.ratio > w.1.ratio) {
            worst = Some((s, c));
        }
    }
    let Some((w, curve)) = worst else {
        return Ok(JohnAssessment {
            center: x0,
            constant_estimate: 0.0,
            worst_sample: x0,
            verdict: JohnVerdict::John { constant: 0.0 },
            per_sample,
        });
    };
    let constant = curve.ratio;
    let verdict = if constant <= opts.cap {
        JohnVerdict::John { constant }
    } else {
        let seq = approach_sequence(domain, &curve, x0, opts)?;
        let v: Vec<f64> = seq.iter().map(|s| s.1).collect();
        let n = v.len();
        let increasing = n >= 3 && v[n - 3] <= v[n - 2] && v[n - 2] <= v[n - 1] && v[n - 1] >= 2.0 * v[0];
        // Divergence evidence: growth continues down to the grid resolution.
        let at_resolution = domain.delta(w) <= 2.0 * domain.h();
        if increasing && at_resolution {
            JohnVerdict::NotJohn { sequence: seq }
        } else if !at_resolution {
            JohnVerdict::John { constant }
        } else {
            JohnVerdict::Unresolved
        }
    };
    Ok(JohnAssessment { center: x0, constant_estimate: constant, worst_sample: w, verdict, per_sample })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformAssessment {
    pub constant_estimate: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub uniform: bool,
}

/// Shortest path under the eight-neighbour metric, optionally weighting cells by `1/delta`.
fn weighted_path(domain: &GridDomain, a: usize, b: usize, inverse_depth: bool) -> Option<Vec<usize>> {
    let n = domain.spec().len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[a] = 0.0;
    heap.push(Key(0.0, 0.0, a));
    while let Some(Key(d, _, c)) = heap.pop() {
        if d > dist[c] {
            continue;
        }
        if c == b {
            break;
        }
        for (m, step) in moves(domain, c) {
            let w = if inverse_depth { step / domain.delta(m) } else { step };
            if d + w < dist[m] {
                dist[m] = d + w;
                parent[m] = c;
                heap.push(Key(d + w, 0.0, m));
            }
        }
    }
    if !dist[b].is_finite() {
        return None;
    }
    let mut path = vec![b];
    while *path.last().expect("nonempty") != a {
        path.push(parent[*path.last().expect("nonempty")]);
    }
    path.reverse();
    Some(path)
}

fn uniform_functional(domain: &GridDomain, path: &[usize], d: f64) -> f64 {
    let pts: Vec<Point> = path.iter().map(|&c| domain.center(c)).collect();
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().expect("nonempty") + w[0].dist(w[1]));
    }
    let l = *cum.last().expect("nonempty");
    let twist = path.iter().zip(&cum).map(|(&c, &t)| t.min(l - t) / domain.delta(c)).fold(0.0, f64::max);
    (l / d.max(f64::MIN_POSITIVE)).max(twist)
}

/// Uniformity constant over the given pairs, from the shortest and the deepest connecting paths.
pub fn uniform_assess(domain: &GridDomain, pairs: &[(usize, usize)], opts: &JohnOptions) -> Result<UniformAssessment> {
    let mut best = UniformAssessment { constant_estimate: 0.0, worst_pair: None, uniform: true };
    for &(a, b) in pairs {
        for c in [a, b] {
            if c >= domain.spec().len() || !domain.is_open(c) {
                return Err(Error::NotInDomain(c));
            }
        }
        if a == b {
            continue;
        }
        let d = domain.center(a).dist(domain.center(b));
        let k = [false, true]
            .iter()
            .filter_map(|&w| weighted_path(domain, a, b, w))
            .map(|p| uniform_functional(domain, &p, d))
            .fold(f64::INFINITY, f64::min);
        if k > best.constant_estimate {
            best.constant_estimate = k;
            best.worst_pair = Some((a, b));
        }
    }
    best.uniform = best.constant_estimate <= opts.cap;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostJohnLevel {
    pub r: f64,
    pub removed_cells: usize,
    pub removed_content: ContentEstimate,
    pub verdict: JohnVerdict,
    pub constant_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlmostJohnVerdict {
    AlmostJohn,
    NotAlmostJohn,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostJohnReport {
    pub feature: Option<Point>,
    pub levels: Vec<AlmostJohnLevel>,
    pub verdict: AlmostJohnVerdict,
}

/// `Ω` with the cells of `f` removed, keeping the largest remaining component.
pub fn remove_cells(domain: &GridDomain, f: &RegionSet) -> Result<GridDomain> {
    let mut b = DomainBuilder::from_domain(domain);
    for c in f.iter() {
        b.set_open(c, false);
    }
    b.build(&format!("{}-minus", domain.name()))
}

/// For each `r`, removes `F = B(feature, r/2) ∩ Ω`, whose content is below `r`, and assesses
/// what remains. The feature is the boundary point nearest the worst sample.
pub fn almost_john_assess(
    domain: &Arc<GridDomain>,
    x0: usize,
    samples: &[usize],
    r_ladder: &[f64],
    opts: &JohnOptions,
) -> Result<AlmostJohnReport> {
    if r_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("radius ladder must be descending".into()));
    }
    let base = john_assess(domain, x0, samples, opts)?;
    if base.is_john() {
        let levels = r_ladder
            .iter()
            .map(|&r| AlmostJohnLevel {
                r,
                removed_cells: 0,
                removed_content: ContentEstimate { upper: 0.0, lower: 0.0 },
                verdict: base.verdict.clone(),
                constant_estimate: base.constant_estimate,
            })
            .collect();
        return Ok(AlmostJohnReport { feature: None, levels, verdict: AlmostJohnVerdict::AlmostJohn });
    }
    let feature = domain.nearest_boundary_point(domain.center(base.worst_sample)).unwrap_or(domain.center(base.worst_sample));
    let mut levels = Vec::new();
    for &r in r_ladder {
        let f = ball(domain, feature, 0.5 * r);
        let removed_content = hausdorff_content(&f, 1.0);
        if f.contains(x0) {
            levels.push(AlmostJohnLevel {
                r,
                removed_cells: f.len(),
                removed_content,
                verdict: JohnVerdict::Unresolved,
                constant_estimate: f64::INFINITY,
            });
            continue;
        }
        let sub = remove_cells(domain, &f)?;
        if !sub.is_open(x0) {
            return Err(Error::InvalidArgument("removing the feature ball detaches the center".into()));
        }
        let kept: Vec<usize> = samples.iter().copied().filter(|&s| sub.is_open(s)).collect();
        let mut kept_samples = default_samples(&sub, x0, kept.len().max(16));
        kept_samples.extend(kept);
        kept_samples.sort_unstable();
        kept_samples.dedup();
        let a = john_assess(&sub, x0, &kept_samples, opts)?;
        levels.push(AlmostJohnLevel {
            r,
            removed_cells: f.len(),
            removed_content,
            verdict: a.verdict.clone(),
            constant_estimate: a.constant_estimate,
        });
    }
    let verdict = if levels.iter().all(|l| matches!(l.verdict, JohnVerdict::John { .. }) && l.removed_content.upper < l.r) {
        AlmostJohnVerdict::AlmostJohn
    } else if levels.iter().any(|l| matches!(l.verdict, JohnVerdict::NotJohn { .. })) {
        AlmostJohnVerdict::NotAlmostJohn
    } else {
        AlmostJohnVerdict::Unresolved
    };
    Ok(AlmostJohnReport { feature: Some(feature), levels, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentModulusReport {
    pub content: ContentEstimate,
    pub capacity: f64,
    /// Content lower bound over capacity.
    pub ratio: f64,
    pub zero_content: bool,
}

/// Compares `H^1_∞(E)` with the `p`-capacity of `(E, B)`.
pub fn content_vs_modulus(e: &RegionSet, b: &RegionSet, p: f64, q_upper: f64) -> Result<ContentModulusReport> {
    if p <= q_upper - 1.0 {
        return Err(Error::ExponentOutOfRange(format!("p = {p} does not exceed Q - 1 = {}", q_upper - 1.0)));
    }
    let content = hausdorff_content(e, 1.0);
    let cap = capacity(&CapacityProblem::new(e.clone(), b.clone(), p), 1e-6)?.value;
    let ratio = if cap > 0.0 { content.lower / cap } else { f64::INFINITY };
    Ok(ContentModulusReport { content, capacity: cap, ratio, zero_content: content.lower == 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityBound {
    pub observed_max: usize,
    /// `floor(C_mu^2 (3 L C_Ω)^(log2 C_mu))`.
    pub cap: f64,
    pub within: bool,
}

/// Largest stabilized component count at the samples against the theoretical bound.
pub fn john_bounded_connectivity(
    domain: &Arc<GridDomain>,
    assessment: &JohnAssessment,
    boundary_samples: &[BoundaryPoint],
    c_mu: f64,
    l: f64,
) -> Result<ConnectivityBound> {
    let JohnVerdict::John { constant } = assessment.verdict else {
        return Err(Error::NotJohn);
    };
    let h = domain.h();
    let mut observed_max = 0;
    for x in boundary_samples {
        let r = 8.0 * h;
        let rep = component_report(domain, x, r)?;
        observed_max = observed_max.max(rep.n);
    }
    let cap = (c_mu * c_mu * (3.0 * l * constant.max(1.0)).powf(c_mu.log2())).floor();
    Ok(ConnectivityBound { observed_max, cap, within: observed_max as f64 <= cap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimeCheck {
    pub decay: DecayVerdict,
    pub last_diameter: f64,
    pub singleton_tol: f64,
    /// A decaying chain whose last region is not small.
    pub violated: bool,
}

/// A chain whose `p`-modulus decays must shrink to a point.
pub fn modp_end_is_prime_check(
    chain: &DiscreteChain,
    k: &RegionSet,
    p: f64,
    q_upper: f64,
    singleton_tol: f64,
    opts: &DecayOptions,
) -> Result<PrimeCheck> {
    if p <= q_upper - 1.0 {
        return Err(Error::ExponentOutOfRange(format!("p = {p} does not exceed Q - 1 = {}", q_upper - 1.0)));
    }
    let decay = modp_chain_decay(chain, k, p, opts)?.verdict;
    let last_diameter = chain.last().region.diameter();
    let violated = decay == DecayVerdict::Decays && last_diameter > singleton_tol;
    Ok(PrimeCheck { decay, last_diameter, singleton_tol, violated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};

    fn cell(d: &GridDomain, x: f64, y: f64) -> usize {
        d.spec().cell_at(Point::new(x, y)).unwrap()
    }

    #[test]
    fn square_is_john() {
        let d = build_gallery("unit_square", 1.0 / 32.0, &GalleryParams::default()).unwrap();
        let x0 = cell(&d, 0.5, 0.5);
        let a = john_assess(&d, x0, &default_samples(&d, x0, 40), &JohnOptions::default()).unwrap();
        assert!(a.is_john() && a.constant_estimate <= 3.0, "{a:?}");
    }

    #[test]
    fn curve_ends_at_center() {
        let d = build_gallery("slit_disk", 1.0 / 32.0, &GalleryParams::default()).unwrap();
        let (x, x0) = (cell(&d, -0.5, 0.02), cell(&d, 0.5, 0.0));
        let c = john_curve(&d, x, x0, &JohnOptions::default()).unwrap();
        assert_eq!((c.cells[0], *c.cells.last().unwrap()), (x, x0));
        assert!(c.ratio.is_finite() && c.ratio > 0.0);
    }

    #[test]
    fn chain_at_center_is_trivial() {
        let d = build_gallery("unit_square", 1.0 / 32.0, &GalleryParams::default()).unwrap();
        let x0 = Point::new(0.5, 0.5);
        let ch = build_ball_chain(&d, x0, 0.1, x0, &[x0], 1.0, 1.0).unwrap();
        assert!(check_ball_chain(&d, &ch).iter().all(|c| c.pass));
        assert!(ch.balls.iter().all(|b| b.center == x0));
    }

    #[test]
    fn ratio_violation_is_reported() {
        let d = build_gallery("unit_square", 1.0 / 32.0, &GalleryParams::default()).unwrap();
        let curve = [Point::new(0.05, 0.5), Point::new(0.5, 0.5)];
        let r = build_ball_chain(&d, curve[1], 0.1, curve[0], &curve, 0.5, 1.0);
        assert!(matches!(r, Err(Error::RatioViolated { .. })));
    }
}
