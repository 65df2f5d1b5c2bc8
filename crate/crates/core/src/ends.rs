//! Chains of acceptable sets, division, impressions and prime ends.
//!
//! Chains are finite: every limit statement is evaluated at the depth of the
//! chains involved and reported with a depth flag where it matters.

use crate::domain::json::{decode_bits, encode_bits};
use crate::domain::{BoundaryPoint, GridDomain};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::regions::{
    accessibility, boundary_separation, component_report_with, path_through, same_domain, AccessibilityWitness,
    Accessibility, RegionSet, ReportOptions,
};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    BallComponents { x: Point },
    TreeSearch { x: Point },
}

#[derive(Debug, Clone)]
pub struct ChainLevel {
    pub region: RegionSet,
    pub scale: f64,
}

/// A finite nested sequence of regions with a decreasing scale schedule.
#[derive(Debug, Clone)]
pub struct DiscreteChain {
    domain: Arc<GridDomain>,
    levels: Vec<ChainLevel>,
    pub provenance: Provenance,
    /// Boundary point the chain is known to shrink to, if any.
    pub target: Option<BoundaryPoint>,
}

impl DiscreteChain {
    pub fn new(domain: Arc<GridDomain>, levels: Vec<ChainLevel>, provenance: Provenance) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("a chain needs at least one level".into()));
        }
        if levels.iter().any(|l| !same_domain(&domain, l.region.domain())) {
            return Err(Error::DomainMismatch);
        }
        Ok(DiscreteChain { domain, levels, provenance, target: None })
    }

    /// Builds a chain from regions and scales given in matching order.
    pub fn from_regions(domain: Arc<GridDomain>, regions: Vec<RegionSet>, scales: &[f64]) -> Result<Self> {
        if regions.len() != scales.len() {
            return Err(Error::InvalidArgument("one scale per region is required".into()));
        }
        let levels = regions.into_iter().zip(scales).map(|(region, &scale)| ChainLevel { region, scale }).collect();
        Self::new(domain, levels, Provenance::Manual)
    }

    pub fn with_target(mut self, x: BoundaryPoint) -> Self {
        self.target = Some(x);
        self
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn levels(&self) -> &[ChainLevel] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn region(&self, k: usize) -> &RegionSet {
        &self.levels[k].region
    }

    pub fn last(&self) -> &ChainLevel {
        self.levels.last().expect("chains are nonempty")
    }

    /// The levels with the given indices, in order.
    pub fn subsequence(&self, idx: &[usize]) -> Result<DiscreteChain> {
        let levels = idx
            .iter()
            .map(|&k| self.levels.get(k).cloned().ok_or_else(|| Error::InvalidArgument(format!("no level {k}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut c = DiscreteChain::new(self.domain.clone(), levels, self.provenance.clone())?;
        c.target = self.target;
        Ok(c)
    }

    fn check_domain(&self, other: &Arc<GridDomain>) -> Result<()> {
        if same_domain(&self.domain, other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn to_json(&self) -> ChainJson {
        ChainJson {
            levels: self
                .levels
                .iter()
                .map(|l| LevelJson { scale: l.scale, cells: encode_bits(l.region.bits()) })
                .collect(),
            provenance: self.provenance.clone(),
            target: self.target,
        }
    }

    pub fn from_json(domain: Arc<GridDomain>, j: &ChainJson) -> Result<Self> {
        let n = domain.spec().len();
        let mut levels = Vec::with_capacity(j.levels.len());
        for l in &j.levels {
            let bits = decode_bits(&l.cells, n)?;
            levels.push(ChainLevel { region: RegionSet::from_bits(domain.clone(), bits), scale: l.scale });
        }
        let mut c = DiscreteChain::new(domain, levels, j.provenance.clone())?;
        c.target = j.target;
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelJson {
    pub scale: f64,
    pub cells: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainJson {
    pub levels: Vec<LevelJson>,
    pub provenance: Provenance,
    pub target: Option<BoundaryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub pass: bool,
    pub first_offending_level: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainValidation {
    pub checks: Vec<InvariantCheck>,
}

impl ChainValidation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, first: Option<usize>, detail: String) -> InvariantCheck {
    InvariantCheck { name: name.into(), pass: first.is_none(), first_offending_level: first, detail }
}

/// Whether a region's closure meets the boundary at grid resolution.
fn is_acceptable(region: &RegionSet, target: Option<&BoundaryPoint>) -> bool {
    let d = region.domain();
    region.iter().any(|c| d.touches_boundary(c))
        || target.is_some_and(|x| region.dist_to_point(x.position) <= std::f64::consts::SQRT_2 * d.h() + 1e-12)
}

/// Reports each chain invariant with the first level that violates it.
pub fn validate_chain(chain: &DiscreteChain) -> ChainValidation {
    let h = chain.domain.h();
    let lv = &chain.levels;
    let mut checks = Vec::new();

    let bad = lv.iter().position(|l| l.region.is_empty() || !l.region.is_connected());
    checks.push(check("connected", bad, "each level is a nonempty connected region".into()));

    let bad = lv.iter().position(|l| !is_acceptable(&l.region, chain.target.as_ref()));
    checks.push(check("acceptable", bad, "each level reaches the boundary".into()));

    let bad = (1..lv.len()).find(|&k| !lv[k].region.is_subset(&lv[k - 1].region));
    checks.push(check("nested", bad, "each level lies inside the previous one".into()));

    let mut min_sep = f64::INFINITY;
    let mut bad = None;
    for k in 1..lv.len() {
        let s = boundary_separation(&lv[k].region, &lv[k - 1].region);
        min_sep = min_sep.min(s);
        if s <= 0.0 && bad.is_none() {
            bad = Some(k);
        }
    }
    checks.push(check("separation", bad, format!("smallest relative boundary separation {min_sep:.6}")));

    let bad = (0..lv.len()).find(|&k| {
        lv[k].scale < 4.0 * h * (1.0 - 1e-9) || (k > 0 && lv[k].scale >= lv[k - 1].scale)
    });
    checks.push(check("scales", bad, "scales decrease strictly and stay above 4h".into()));

    let last = chain.last();
    let far = last.region.iter().filter(|&c| chain.domain.delta(c) > 2.0 * last.scale).count();
    let near_boundary = is_acceptable(&last.region, chain.target.as_ref());
    let bad = (!near_boundary || far > 0).then_some(lv.len() - 1);
    checks.push(check(
        "impression",
        bad,
        format!("{far} cells of the last level lie farther than twice its scale from the boundary"),
    ));
    ChainValidation { checks }
}

/// Outcome of a division test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Division {
    pub divides: bool,
    /// The test failed at a level finer than the deepest level of the divisor,
    /// so deeper levels could change the answer.
    pub undetermined_at_depth: bool,
}

/// `a` divides `b`: every level of `b` contains some level of `a`.
pub fn divides(a: &DiscreteChain, b: &DiscreteChain) -> Result<Division> {
    a.check_domain(&b.domain)?;
    let a_finest = a.last().scale;
    for lb in &b.levels {
        if !a.levels.iter().any(|la| la.region.is_subset(&lb.region)) {
            return Ok(Division { divides: false, undetermined_at_depth: lb.scale < a_finest });
        }
    }
    Ok(Division { divides: true, undetermined_at_depth: false })
}

/// Mutual division.
pub fn equivalent(a: &DiscreteChain, b: &DiscreteChain) -> Result<bool> {
    Ok(divides(a, b)?.divides && divides(b, a)?.divides)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impression {
    pub points: Vec<Point>,
    pub diameter: f64,
}

/// Boundary-adjacent cell centers of the last level, plus the target if known.
pub fn impression(chain: &DiscreteChain) -> Impression {
    let last = &chain.last().region;
    let d = &chain.domain;
    let tol = std::f64::consts::SQRT_2 * d.h() + 1e-12;
    let mut points: Vec<Point> = last
        .iter()
        .filter(|&c| d.touches_boundary(c) || chain.target.is_some_and(|x| d.center(c).dist(x.position) <= tol))
        .map(|c| d.center(c))
        .collect();
    if let Some(x) = chain.target {
        points.push(x.position);
    }
    Impression { points, diameter: last.diameter() }
}

/// Default singleton tolerance for a chain: `max(6h, 2 s + h)` with `s` the
/// last scale, the largest diameter of a region inside a ball of radius `s`.
pub fn default_singleton_tol(chain: &DiscreteChain) -> f64 {
    let h = chain.domain.h();
    (6.0 * h).max(2.0 * chain.last().scale + h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    Decays,
    Stalls,
}

/// A chain with its impression and classification.
#[derive(Debug, Clone)]
pub struct PrimeEndRecord {
    pub chain: DiscreteChain,
    pub impression: Impression,
    pub singleton: bool,
    pub singleton_tol: f64,
    pub accessibility: Option<AccessibilityWitness>,
    pub modp_status: Option<DecayVerdict>,
}

impl PrimeEndRecord {
    pub fn from_chain(chain: DiscreteChain) -> Self {
        let tol = default_singleton_tol(&chain);
        Self::from_chain_with_tol(chain, tol)
    }

    pub fn from_chain_with_tol(chain: DiscreteChain, singleton_tol: f64) -> Self {
        let impression = impression(&chain);
        let singleton = impression.diameter <= singleton_tol;
        PrimeEndRecord { chain, impression, singleton, singleton_tol, accessibility: None, modp_status: None }
    }

    pub fn summary(&self) -> RecordSummary {
        RecordSummary {
            depth: self.chain.depth(),
            scales: self.chain.levels.iter().map(|l| l.scale).collect(),
            sizes: self.chain.levels.iter().map(|l| l.region.len()).collect(),
            target: self.chain.target.map(|t| t.position),
            impression_diameter: self.impression.diameter,
            singleton: self.singleton,
            accessible: self.accessibility.is_some(),
            modp_status: self.modp_status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub depth: usize,
    pub scales: Vec<f64>,
    pub sizes: Vec<usize>,
    pub target: Option<Point>,
    pub impression_diameter: f64,
    pub singleton: bool,
    pub accessible: bool,
    pub modp_status: Option<DecayVerdict>,
}

fn ball_chain(domain: &Arc<GridDomain>, x: &BoundaryPoint, comps: Vec<RegionSet>, ladder: &[f64], prov: Provenance) -> Result<DiscreteChain> {
    let levels = comps.into_iter().zip(ladder).map(|(region, &scale)| ChainLevel { region, scale }).collect();
    Ok(DiscreteChain::new(domain.clone(), levels, prov)?.with_target(*x))
}

/// The singleton prime end at an accessible point, following the side hint.
pub fn prime_end_at(
    domain: &Arc<GridDomain>,
    x: &BoundaryPoint,
    ladder: &[f64],
    opts: &ReportOptions,
) -> Result<PrimeEndRecord> {
    match accessibility(domain, x, ladder, opts)? {
        Accessibility::Inaccessible { .. } => Err(Error::Inaccessible(x.position.x, x.position.y)),
        Accessibility::Accessible(w) => {
            let chain = ball_chain(domain, x, w.components.clone(), ladder, Provenance::BallComponents { x: x.position })?;
            let mut rec = PrimeEndRecord::from_chain(chain);
            rec.accessibility = Some(w);
            Ok(rec)
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub region: RegionSet,
    pub parent: Option<usize>,
}

/// Touching components per ladder level, linked by containment.
#[derive(Debug, Clone)]
pub struct ComponentTree {
    pub target: BoundaryPoint,
    pub radii: Vec<f64>,
    pub levels: Vec<Vec<TreeNode>>,
}

impl ComponentTree {
    /// Number of vertices per level.
    pub fn widths(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    /// Number of distinct level-0 ancestors of nodes at the finest level.
    pub fn root_count(&self) -> usize {
        self.levels.first().map_or(0, |l| l.len())
    }

    /// Branches from a root to the finest level, as node indices per level.
    pub fn branches(&self) -> Vec<Vec<usize>> {
        let Some(finest) = self.levels.last() else { return Vec::new() };
        let depth = self.levels.len();
        let mut out = Vec::new();
        'leaf: for leaf in 0..finest.len() {
            let mut idx = vec![0; depth];
            let mut cur = leaf;
            for k in (0..depth).rev() {
                idx[k] = cur;
                if k > 0 {
                    match self.levels[k][cur].parent {
                        Some(p) => cur = p,
                        None => continue 'leaf,
                    }
                }
            }
            out.push(idx);
        }
        out
    }
}

pub fn component_tree(
    domain: &Arc<GridDomain>,
    x: &BoundaryPoint,
    ladder: &[f64],
    opts: &ReportOptions,
) -> Result<ComponentTree> {
    if ladder.is_empty() {
        return Err(Error::RadiusLadderEmpty);
    }
    let mut levels: Vec<Vec<TreeNode>> = Vec::with_capacity(ladder.len());
    for &r in ladder {
        let rep = component_report_with(domain, x, r, opts)?;
        let nodes = rep
            .touching
            .into_iter()
            .map(|region| {
                let parent = levels.last().and_then(|prev: &Vec<TreeNode>| {
                    prev.iter().position(|p| region.is_subset(&p.region))
                });
                TreeNode { region, parent }
            })
            .collect();
        levels.push(nodes);
    }
    Ok(ComponentTree { target: *x, radii: ladder.to_vec(), levels })
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub records: Vec<PrimeEndRecord>,
    /// The branch count still grows at the finest level.
    pub growing: bool,
    pub widths: Vec<usize>,
}

impl Enumeration {
    pub fn count(&self) -> usize {
        self.records.len()
    }
}

/// One singleton record per root-to-finest branch of the component tree.
pub fn enumerate_prime_ends_at(
    domain: &Arc<GridDomain>,
    x: &BoundaryPoint,
    ladder: &[f64],
    opts: &ReportOptions,
) -> Result<Enumeration> {
    let tree = component_tree(domain, x, ladder, opts)?;
    let mut records = Vec::new();
    for branch in tree.branches() {
        let comps: Vec<RegionSet> = branch.iter().enumerate().map(|(k, &i)| tree.levels[k][i].region.clone()).collect();
        let path = path_through(domain, x.position, &comps, ladder[0])?;
        let witness = AccessibilityWitness { target: *x, path, radii: ladder.to_vec(), components: comps.clone() };
        let chain = ball_chain(domain, x, comps, ladder, Provenance::TreeSearch { x: x.position })?;
        let mut rec = PrimeEndRecord::from_chain(chain);
        rec.accessibility = Some(witness);
        records.push(rec);
    }
    let widths = tree.widths();
    let growing = matches!(widths.as_slice(), [.., a, b] if b > a);
    Ok(Enumeration { records, growing, widths })
}

/// Tail start per level: the first index from which the sequence stays in
/// that level's region, or `None` if the last element is outside it.
pub fn point_sequence_tails(seq: &[usize], chain: &DiscreteChain) -> Vec<Option<usize>> {
    chain
        .levels
        .iter()
        .map(|l| {
            let mut start = None;
            for (n, &c) in seq.iter().enumerate().rev() {
                if l.region.contains(c) {
                    start = Some(n);
                } else {
                    break;
                }
            }
            start
        })
        .collect()
}

/// A finite sequence converges at depth when, for every level, a nonempty
/// tail lies in that level's region.
pub fn point_sequence_converges(domain: &Arc<GridDomain>, seq: &[usize], chain: &DiscreteChain) -> Result<bool> {
    chain.check_domain(domain)?;
    if seq.iter().any(|&c| !domain.is_open(c)) {
        return Err(Error::InvalidArgument("sequence leaves the domain".into()));
    }
    Ok(!seq.is_empty() && point_sequence_tails(seq, chain).iter().all(Option::is_some))
}

/// For every level of `limit`, a nonempty tail of `seq` consists of chains
/// having some level inside that region.
pub fn end_sequence_converges(seq: &[DiscreteChain], limit: &DiscreteChain) -> Result<bool> {
    for c in seq {
        c.check_domain(&limit.domain)?;
    }
    if seq.is_empty() {
        return Ok(false);
    }
    Ok(limit.levels.iter().all(|l| {
        let last = seq.last().expect("nonempty");
        last.levels.iter().any(|m| m.region.is_subset(&l.region))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationOutcome {
    /// The regions at this level are disjoint.
    Separated { level: usize },
    /// One cell per level lying in both chains' regions.
    T2FailsWitness { cells: Vec<usize> },
}

/// Looks for a sequence converging to both ends.
pub fn separation_probe(a: &PrimeEndRecord, b: &PrimeEndRecord) -> Result<SeparationOutcome> {
    a.chain.check_domain(&b.chain.domain)?;
    let depth = a.chain.depth().min(b.chain.depth());
    let mut cells = Vec::with_capacity(depth);
    for k in 0..depth {
        let inter = a.chain.region(k).intersection(b.chain.region(k));
        if inter.is_empty() {
            return Ok(SeparationOutcome::Separated { level: k });
        }
        let pts = inter.centers();
        let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
        let ymax = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let aim = Point::new(0.5 * (xmin + xmax), ymax);
        cells.push(inter.nearest_cell(aim).expect("nonempty"));
    }
    Ok(SeparationOutcome::T2FailsWitness { cells })
}

/// Whether some level of the chain lies inside `g`.
pub fn end_in_neighborhood(g: &RegionSet, chain: &DiscreteChain) -> Result<bool> {
    chain.check_domain(g.domain())?;
    Ok(chain.levels.iter().any(|l| l.region.is_subset(g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};
    use crate::regions::dyadic_ladder;

    fn slit(h: f64) -> Arc<GridDomain> {
        build_gallery("slit_disk", h, &GalleryParams::default()).unwrap().into_shared()
    }

    fn half_balls(d: &Arc<GridDomain>, upper: bool, n: usize) -> DiscreteChain {
        let scales: Vec<f64> = (0..n).map(|k| 0.2 * 0.5f64.powi(k as i32)).collect();
        let regions = scales
            .iter()
            .map(|&s| {
                RegionSet::from_predicate(d.clone(), |p| {
                    p.dist(Point::new(-0.5, 0.0)) < s && if upper { p.y > 0.0 } else { p.y < 0.0 }
                })
            })
            .collect();
        DiscreteChain::from_regions(d.clone(), regions, &scales).unwrap()
    }

    #[test]
    fn half_ball_chain_validates() {
        let d = slit(1.0 / 256.0);
        let v = validate_chain(&half_balls(&d, true, 4));
        assert!(v.passed(), "{:?}", v.checks);
    }

    #[test]
    fn non_nested_chain_is_flagged() {
        let d = slit(1.0 / 64.0);
        let c = half_balls(&d, true, 3);
        let mut levels = c.levels().to_vec();
        levels.swap(0, 1);
        let bad = DiscreteChain::new(d, levels, Provenance::Manual).unwrap();
        let v = validate_chain(&bad);
        assert!(!v.check("nested").unwrap().pass);
        assert!(!v.check("scales").unwrap().pass);
    }

    #[test]
    fn subsequence_is_equivalent() {
        let d = slit(1.0 / 128.0);
        let c = half_balls(&d, true, 4);
        let s = c.subsequence(&[1, 3]).unwrap();
        assert!(equivalent(&c, &s).unwrap());
        let other = half_balls(&d, false, 4);
        assert!(!equivalent(&c, &other).unwrap());
        assert!(!divides(&c, &other).unwrap().divides);
    }

    #[test]
    fn sides_of_the_slit_separate() {
        let d = slit(1.0 / 128.0);
        let a = PrimeEndRecord::from_chain(half_balls(&d, true, 4));
        let b = PrimeEndRecord::from_chain(half_balls(&d, false, 4));
        assert!(a.singleton && b.singleton);
        assert_eq!(separation_probe(&a, &b).unwrap(), SeparationOutcome::Separated { level: 0 });
    }

    #[test]
    fn point_sequence_along_the_axis_converges() {
        let d = slit(1.0 / 128.0);
        let c = half_balls(&d, true, 4);
        let seq: Vec<usize> = (1..40)
            .map(|n| d.spec().cell_at(Point::new(-0.5, 0.2 / n as f64 + 1.0 / 256.0)).unwrap())
            .collect();
        assert!(point_sequence_converges(&d, &seq, &c).unwrap());
        let below: Vec<usize> = seq.iter().map(|&s| d.spec().cell_at(Point::new(-0.5, -d.center(s).y)).unwrap()).collect();
        assert!(!point_sequence_converges(&d, &below, &c).unwrap());
    }

    #[test]
    fn enumeration_on_the_circle_is_single() {
        let h = 1.0 / 128.0;
        let d = slit(h);
        let x = d.snap_boundary_point(Point::new(0.0, 1.0)).unwrap();
        let e = enumerate_prime_ends_at(&d, &x, &dyadic_ladder(0.1, h), &ReportOptions::default()).unwrap();
        assert_eq!(e.count(), 1);
        assert!(!e.growing);
        let rec = prime_end_at(&d, &x, &dyadic_ladder(0.1, h), &ReportOptions::default()).unwrap();
        assert!(equivalent(&rec.chain, &e.records[0].chain).unwrap());
    }

    #[test]
    fn chain_json_roundtrip() {
        let d = slit(1.0 / 64.0);
        let c = half_balls(&d, false, 3);
        let text = serde_json::to_string(&c.to_json()).unwrap();
        let back = DiscreteChain::from_json(d, &serde_json::from_str(&text).unwrap()).unwrap();
        assert!(equivalent(&c, &back).unwrap());
        assert_eq!(back.depth(), 3);
    }

    #[test]
    fn end_sequence_to_itself() {
        let d = slit(1.0 / 128.0);
        let c = half_balls(&d, true, 4);
        assert!(end_sequence_converges(&[c.clone(), c.clone()], &c).unwrap());
        assert!(!end_sequence_converges(&[], &c).unwrap());
        let g = RegionSet::from_predicate(d.clone(), |p| p.y > 0.0);
        assert!(end_in_neighborhood(&g, &c).unwrap());
    }
}
