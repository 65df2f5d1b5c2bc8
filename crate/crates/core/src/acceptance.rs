//! Reproducible acceptance checks over the example gallery.

use crate::domain::{
    ball, build_gallery, disk_domain, estimate_mass_exponents, BoundaryPoint, DomainBuilder, GalleryParams, GridDomain,
    GridSpec, WeightKind, GALLERY,
};
use crate::ends::{
    enumerate_prime_ends_at, equivalent, prime_end_at, separation_probe, validate_chain, DecayVerdict, DiscreteChain,
    PrimeEndRecord, SeparationOutcome,
};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::john::{
    almost_john_assess, build_ball_chain, check_ball_chain, content_vs_modulus, default_samples, hausdorff_content,
    john_assess, john_curve, modp_end_is_prime_check, AlmostJohnVerdict, JohnOptions,
};
use crate::mazurkiewicz::{default_tau, maz_boundary, maz_distance_with, phi_correspondence, MazOptions};
use crate::modulus::{
    capacity, capacity_with, compact_set_independence, modp_chain_decay, CapacityProblem, DecayOptions, SolverOptions,
};
use crate::regions::{accessibility, dyadic_ladder, finitely_connected_at, Connectivity, RegionSet, ReportOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Display;
use std::sync::Arc;

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "slit disk prime-end counts"),
    (2, "topologist's comb"),
    (3, "two-segment condenser bound"),
    (4, "annulus capacity oracle"),
    (5, "finite-connectedness verdicts"),
    (6, "prime-end count matches stabilized N"),
    (7, "non-separated prime ends"),
    (8, "Mazurkiewicz distance"),
    (9, "prime ends versus Mazurkiewicz clusters"),
    (10, "modulus solver properties"),
    (11, "decay independence of the compact set"),
    (12, "John suite"),
    (13, "decaying chains are singletons"),
    (14, "pointwise dimension"),
    (15, "deterministic regression report"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let tag = if self.pass { "PASS" } else { "FAIL" };
        if failed.is_empty() {
            format!("[{tag}] {:02} {}", self.id, self.title)
        } else {
            format!("[{tag}] {:02} {} (failed: {})", self.id, self.title, failed.join(", "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceConfig {
    pub seed: u64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig { seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressReport {
    pub seed: u64,
    pub passed: usize,
    pub total: usize,
    pub criteria: Vec<CriterionResult>,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, pass: bool, value: impl Display) {
        self.0.push(Check { name: name.into(), pass, value: value.to_string() });
    }
}

fn shared(name: &str, h: f64, params: &GalleryParams) -> Result<Arc<GridDomain>> {
    Ok(build_gallery(name, h, params)?.into_shared())
}

fn strip(d: &Arc<GridDomain>, pred: impl Fn(Point) -> bool) -> RegionSet {
    RegionSet::from_predicate(d.clone(), pred)
}

/// `n` boundary points spread over the boundary-adjacent cells.
pub fn sample_boundary_points(domain: &GridDomain, n: usize) -> Vec<BoundaryPoint> {
    let cells: Vec<usize> = domain.cells().filter(|&c| domain.touches_boundary(c)).collect();
    let stride = (cells.len() / n.max(1)).max(1);
    cells
        .iter()
        .step_by(stride)
        .take(n)
        .filter_map(|&c| domain.snap_boundary_point(domain.center(c)).ok())
        .collect()
}

fn deepest(d: &GridDomain) -> usize {
    d.cells().max_by(|&a, &b| d.delta(a).total_cmp(&d.delta(b)).then(b.cmp(&a))).expect("nonempty domain")
}

/// The nested comb sets `{x > 1/2 - 2^-k, y < 2^-k}`.
fn comb_chain(h: f64, depth: usize) -> Result<DiscreteChain> {
    let d = shared("topologist_comb", h, &GalleryParams::depth(7))?;
    let scales: Vec<f64> = (1..=depth).map(|k| 0.5f64.powi(k as i32)).collect();
    let regions = scales.iter().map(|&s| strip(&d, |p| p.x > 0.5 - s && p.y < s)).collect();
    DiscreteChain::from_regions(d, regions, &scales)
}

fn c01_slit_counts(c: &mut Checks) -> Result<()> {
    let h = 1.0 / 200.0;
    let d = shared("slit_disk", h, &GalleryParams::default())?;
    let ladder = dyadic_ladder(0.05, h);
    let opts = ReportOptions::default();
    for x in [-0.9, -0.7, -0.5, -0.3, -0.1] {
        let e = enumerate_prime_ends_at(&d, &BoundaryPoint::new(x, 0.0), &ladder, &opts)?;
        let distinct = e.count() == 2 && !equivalent(&e.records[0].chain, &e.records[1].chain)?;
        let singletons = e.records.iter().all(|r| r.singleton);
        c.add(format!("slit x={x}"), distinct && singletons, e.count());
    }
    for k in 0..5 {
        let t = 0.3 + 1.2 * k as f64;
        let bp = d.snap_boundary_point(Point::new(t.cos(), t.sin()))?;
        let e = enumerate_prime_ends_at(&d, &bp, &ladder, &opts)?;
        c.add(format!("circle t={t:.1}"), e.count() == 1 && e.records[0].singleton, e.count());
    }
    Ok(())
}

fn c02_comb(c: &mut Checks) -> Result<()> {
    let h = 1.0 / 512.0;
    let chain = comb_chain(h, 6)?;
    let d = chain.domain().clone();
    let ladder = dyadic_ladder(0.25, h);
    let opts = ReportOptions::default();
    let acc = accessibility(&d, &BoundaryPoint::new(0.75, 0.0), &ladder, &opts)?;
    c.add("(0.75,0) inaccessible", !acc.is_accessible(), !acc.is_accessible());
    let rec = prime_end_at(&d, &BoundaryPoint::new(0.5, 0.0), &ladder, &opts)?;
    c.add("(0.5,0) singleton", rec.singleton, format!("{:.4}", rec.impression.diameter));
    c.add("chain validates", validate_chain(&chain).passed(), "");
    let k = ball(&d, Point::new(0.5, 0.75), 0.1);
    let rep = modp_chain_decay(&chain, &k, 2.0, &DecayOptions::default())?;
    c.add("p=2 decays", rep.verdict == DecayVerdict::Decays, format!("{:.4?}", rep.values()));
    let min_content = chain
        .levels()
        .iter()
        .map(|l| hausdorff_content(&l.region, 1.0).lower)
        .fold(f64::INFINITY, f64::min);
    c.add("content lower >= 0.45", min_content >= 0.45, format!("{min_content:.4}"));
    Ok(())
}

fn c03_condenser(c: &mut Checks) -> Result<()> {
    let h = 1.0 / 128.0;
    let d = disk_domain(2.0, h)?.into_shared();
    let e = strip(&d, |p| (-1.0..=0.0).contains(&p.x) && p.y > 0.0 && p.y < h);
    let f = strip(&d, |p| (0.0..=1.0).contains(&p.x) && p.y < 0.0 && p.y > -h);
    let v = capacity_with(&CapacityProblem::new(e, f, 1.5), &SolverOptions::default())?.value;
    let bound = 2f64.powf(1.5) / 0.5;
    c.add("below analytic bound", v <= bound, format!("{v:.4} <= {bound:.4}"));
    c.add("finite", v.is_finite() && v < 1e3, format!("{v:.4}"));
    Ok(())
}

fn c04_annulus(c: &mut Checks) -> Result<()> {
    let exact = 2.0 * std::f64::consts::PI / 4f64.ln();
    let mut errs = Vec::new();
    for n in [64, 128, 256] {
        let h = 1.0 / n as f64;
        let d = shared("disk", h, &GalleryParams::default())?;
        let e = strip(&d, |p| p.norm() <= 0.25);
        let f = RegionSet::from_cells(d.clone(), d.cells().filter(|&c| d.touches_boundary(c)));
        let v = capacity(&CapacityProblem::new(e, f, 2.0), 1e-8)?.value;
        errs.push((v - exact).abs() / exact);
    }
    c.add("within 10% at h=1/256", errs[2] <= 0.1, format!("{:.4}", errs[2]));
    c.add("error decreases", errs.windows(2).all(|w| w[1] < w[0]), format!("{errs:.4?}"));
    Ok(())
}

fn c05_connectivity(c: &mut Checks) -> Result<()> {
    let h = 1.0 / 128.0;
    let opts = ReportOptions::default();
    for name in ["unit_square", "disk"] {
        let d = shared(name, h, &GalleryParams::default())?;
        let mut ok = 0;
        for bp in sample_boundary_points(&d, 8) {
            let v = finitely_connected_at(&d, &bp, &dyadic_ladder(0.25, h), &opts)?;
            ok += usize::from(v.verdict == Connectivity::FinitelyConnected);
        }
        c.add(format!("{name} finitely connected"), ok == 8, format!("{ok}/8"));
    }
    let h = 1.0 / 256.0;
    let d = shared("accumulating_pins", h, &GalleryParams::default())?;
    let v = finitely_connected_at(&d, &BoundaryPoint::new(0.0, 0.0), &dyadic_ladder(0.5, h), &opts)?;
    let ok = v.verdict == Connectivity::NotFinitelyConnected && v.counts().iter().all(|&n| n == 1);
    c.add("accumulating_pins not finitely connected", ok, format!("{:?}", v.counts()));
    let (d, ladder, opts) = shrinking_pins_setup()?;
    let v = finitely_connected_at(&d, &BoundaryPoint::new(0.0, 0.0), &ladder, &opts)?;
    let n = v.counts();
    let ok = v.verdict == Connectivity::FinitelyConnected && n.windows(2).all(|w| w[1] > w[0]);
    c.add("shrinking_pins N increasing", ok, format!("{n:?}"));
    Ok(())
}

/// Wedges between pins only separate from each other at about `h / angle` from the origin,
/// so touching is tested at that resolution.
fn shrinking_pins_setup() -> Result<(Arc<GridDomain>, Vec<f64>, ReportOptions)> {
    let h = 1.0 / 256.0;
    let d = shared("shrinking_pins", h, &GalleryParams::depth(6))?;
    Ok((d, vec![0.5, 0.25, 0.16, 0.12], ReportOptions::default().with_touch_tol(16.0 * h)))
}

fn c06_enumeration(c: &mut Checks) -> Result<()> {
    let h = 1.0 / 128.0;
    let opts = ReportOptions::default();
    for (name, _) in GALLERY {
        let d = shared(name, h, &GalleryParams::depth(5))?;
        let ladder = dyadic_ladder(0.125, h);
        let (mut compared, mut agree) = (0, 0);
        for bp in sample_boundary_points(&d, 8) {
            let v = finitely_connected_at(&d, &bp, &ladder, &opts)?;
            let (Connectivity::FinitelyConnected, Some(n)) = (v.verdict, v.stabilized_n) else { continue };
            let e = enumerate_prime_ends_at(&d, &bp, &ladder, &opts)?;
            compared += 1;
            agree += usize::from(e.count() == n);
        }
        c.add(*name, agree == compared, format!("{agree}/{compared}"));
    }
    Ok(())
}

fn jana_records(h: f64, depth: usize) -> Result<(PrimeEndRecord, PrimeEndRecord)> {
    let d = shared("jana_two_limits", h, &GalleryParams::depth(depth))?;
    let scales: Vec<f64> = (1..=depth).map(|k| 0.5f64.powi(k as i32)).collect();
    let e = scales.iter().map(|&s| strip(&d, |p| p.x < s && p.y < s)).collect();
    let f = scales.iter().map(|&s| strip(&d, |p| p.x > -s && p.y < s)).collect();
    Ok((
        PrimeEndRecord::from_chain(DiscreteChain::from_regions(d.clone(), e, &scales)?),
        PrimeEndRecord::from_chain(DiscreteChain::from_regions(d, f, &scales)?),
    ))
}

fn c07_separation(c: &mut Checks) -> Result<()> {
    let h = 1.0 / 256.0;
    let (e, f) = jana_records(h, 5)?;
    let d = e.chain.domain().clone();
    match separation_probe(&e, &f)? {
        SeparationOutcome::T2FailsWitness { cells } => {
            let off = cells
                .iter()
                .enumerate()
                .map(|(k, &cell)| d.center(cell).dist(Point::new(0.0, 0.5f64.powi(k as i32 + 1))))
                .fold(0.0, f64::max);
            c.add("E/F witness on (0, 2^-n)", off <= 2.0 * h, format!("max offset {:.2}h", off / h));
        }
        s => c.add("E/F witness on (0, 2^-n)", false, format!("{s:?}")),
    }
    let h = 1.0 / 200.0;
    let d = shared("slit_disk", h, &GalleryParams::default())?;
    let en = enumerate_prime_ends_at(&d, &BoundaryPoint::new(-0.5, 0.0), &dyadic_ladder(0.05, h), &ReportOptions::default())?;
    let ok = en.count() == 2 && matches!(separation_probe(&en.records[0], &en.records[1])?, SeparationOutcome::Separated { .. });
    c.add("slit upper/lower separated", ok, en.count());
    Ok(())
}

fn c08_mazurkiewicz(c: &mut Checks, cfg: &AcceptanceConfig) -> Result<()> {
    let h = 1.0 / 64.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mopts = MazOptions { refine_centers: 2 };
    for (name, _) in GALLERY {
        let d = shared(name, h, &GalleryParams::depth(4))?;
        let cells: Vec<usize> = d.cells().collect();
        let convex = matches!(*name, "unit_square" | "disk");
        let (mut below, mut excess) = (0usize, 0.0f64);
        for _ in 0..1000 {
            let a = cells[rng.gen_range(0..cells.len())];
            let b = cells[rng.gen_range(0..cells.len())];
            let r = maz_distance_with(&d, a, b, &mopts)?;
            let dist = d.center(a).dist(d.center(b));
            below += usize::from(r.value < dist - 1e-12);
            excess = excess.max(r.value - dist);
        }
        c.add(format!("{name} d_M >= d"), below == 0, format!("{below} violations"));
        if convex {
            c.add(format!("{name} d_M - d <= 2h"), excess <= 2.0 * h, format!("{:.3}h", excess / h));
        }
    }
    let h = 1.0 / 128.0;
    let d = shared("slit_disk", h, &GalleryParams::default())?;
    let cell = |y: f64| d.spec().cell_at(Point::new(-0.5 + 0.5 * h, y)).ok_or(Error::NotABoundaryPoint(-0.5, y));
    let r = maz_distance_with(&d, cell(0.5 * h)?, cell(-0.5 * h)?, &MazOptions::default())?;
    c.add("slit crossing >= 0.98", r.value >= 0.98, format!("{:.4}", r.value));
    let h = 1.0 / 512.0;
    let d = shared("topologist_comb", h, &GalleryParams::depth(7))?;
    let atlas = maz_boundary(&d, default_tau(&d))?;
    let in_i = atlas
        .clusters
        .iter()
        .filter(|k| k.anchor.position.y <= 2.0 * h && k.anchor.position.x > 0.5 + atlas.tau)
        .count();
    c.add("comb: no cluster anchored in I", in_i == 0, in_i);
    Ok(())
}

fn c09_phi(c: &mut Checks) -> Result<()> {
    let cases: [(&str, f64, Vec<Point>); 4] = [
        ("unit_square", 1.0 / 200.0, vec![Point::new(0.5, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 0.3)]),
        ("disk", 1.0 / 200.0, vec![Point::new(1.0, 0.0), Point::new(0.0, -1.0)]),
        (
            "slit_disk",
            1.0 / 200.0,
            vec![Point::new(-0.5, 0.0), Point::new(0.0, 0.0), Point::new(-0.2, 0.0), Point::new(0.0, 1.0)],
        ),
        (
            "jana_two_limits",
            1.0 / 256.0,
            vec![Point::new(0.0, 1.0), Point::new(0.75, 0.5), Point::new(0.0, 0.75), Point::new(-1.0, 0.6)],
        ),
    ];
    for (name, h, pts) in cases {
        let d = shared(name, h, &GalleryParams::depth(5))?;
        let atlas = maz_boundary(&d, default_tau(&d))?;
        let mut records = Vec::new();
        for p in pts {
            let bp = d.snap_boundary_point(p)?;
            records.extend(enumerate_prime_ends_at(&d, &bp, &dyadic_ladder(0.05, h), &ReportOptions::default())?.records);
        }
        let rep = phi_correspondence(&records, &atlas)?;
        c.add(
            name,
            rep.bijective,
            format!("{} records, {} unmatched, {} shared", records.len(), rep.unmatched_records.len(), rep.shared_clusters.len()),
        );
    }
    Ok(())
}

fn rect(d: &Arc<GridDomain>, x0: f64, y0: f64, x1: f64, y1: f64) -> RegionSet {
    strip(d, |p| p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1)
}

fn c10_solver(c: &mut Checks, cfg: &AcceptanceConfig) -> Result<()> {
    let h = 1.0 / 32.0;
    let d = shared("unit_square", h, &GalleryParams::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let cap = |e: &RegionSet, f: &RegionSet, p: f64| -> Result<f64> {
        Ok(capacity(&CapacityProblem::new(e.clone(), f.clone(), p), 1e-9)?.value)
    };
    let e = rect(&d, 0.0, 0.2, 0.2, 0.5);
    let f = rect(&d, 0.6, 0.5, 0.9, 0.7);
    let mut sym = 0.0f64;
    for p in [1.5, 2.0, 3.0] {
        let (a, b) = (cap(&e, &f, p)?, cap(&f, &e, p)?);
        sym = sym.max((a - b).abs() / a.max(b));
    }
    c.add("symmetry", sym <= 1e-6, format!("{sym:.2e}"));
    let mut bad = 0;
    for _ in 0..50 {
        let (x0, y0) = (rng.gen_range(0.05..0.3), rng.gen_range(0.05..0.7));
        let (w, t) = (rng.gen_range(0.05..0.15), rng.gen_range(0.05..0.2));
        let g = rng.gen_range(h..0.1);
        let small = rect(&d, x0, y0, x0 + w, y0 + t);
        let big = rect(&d, x0 - g, y0 - g, x0 + w + g, y0 + t + g);
        let fx = rng.gen_range(0.6..0.8);
        let f = rect(&d, fx, 0.1, fx + 0.15, 0.9);
        if small.is_empty() {
            continue;
        }
        let (a, b) = (cap(&small, &f, 2.0)?, cap(&big, &f, 2.0)?);
        bad += usize::from(a > b * (1.0 + 1e-9));
    }
    c.add("plate monotonicity", bad == 0, format!("{bad}/50 violations"));
    let mut floor = f64::INFINITY;
    for k in 0..20 {
        let p = [1.5, 2.0, 3.0][k % 3];
        let (x0, y0) = (rng.gen_range(0.0..0.4), rng.gen_range(0.0..0.8));
        let (x1, y1) = (rng.gen_range(0.55..0.9), rng.gen_range(0.0..0.8));
        let e = rect(&d, x0, y0, x0 + 2.5 * h, y0 + 2.5 * h);
        let f = rect(&d, x1, y1, x1 + 2.5 * h, y1 + 2.5 * h);
        floor = floor.min(cap(&e, &f, p)?);
    }
    c.add("positivity", floor > 0.0, format!("{floor:.4e}"));
    let doubled = DomainBuilder::from_domain(&d).weight(WeightKind::Const { value: 2.0 }).build("doubled")?.into_shared();
    let mut worst = 0.0f64;
    for p in [2.0, 3.0] {
        let a = cap(&e, &f, p)?;
        let b = cap(&rect(&doubled, 0.0, 0.2, 0.2, 0.5), &rect(&doubled, 0.6, 0.5, 0.9, 0.7), p)?;
        worst = worst.max((b / a - 2.0).abs());
    }
    c.add("weight doubling", worst <= 1e-9, format!("{worst:.2e}"));
    Ok(())
}

fn c11_independence(c: &mut Checks) -> Result<()> {
    let chain = comb_chain(1.0 / 512.0, 6)?;
    let d = chain.domain().clone();
    let k0 = ball(&d, Point::new(0.25, 0.75), 0.1);
    let k1 = ball(&d, Point::new(0.75, 0.75), 0.1);
    let rep = compact_set_independence(&chain, &k0, &k1, 2.0, &DecayOptions::default())?;
    c.add("verdicts agree", rep.agree, format!("{:?} / {:?}", rep.first.verdict, rep.second.verdict));
    c.add("values within factor 3", rep.max_ratio <= 3.0, format!("{:.3}", rep.max_ratio));
    Ok(())
}

fn c12_john(c: &mut Checks) -> Result<()> {
    let opts = JohnOptions::default();
    for name in ["unit_square", "slit_disk"] {
        let d = shared(name, 1.0 / 128.0, &GalleryParams::default())?;
        let x0 = deepest(&d);
        let a = john_assess(&d, x0, &default_samples(&d, x0, 64), &opts)?;
        c.add(format!("{name} john"), a.is_john(), format!("{:.2}", a.constant_estimate));
        let d = shared(name, 1.0 / 64.0, &GalleryParams::default())?;
        let x0 = deepest(&d);
        let samples = default_samples(&d, x0, 20);
        let step = (samples.len() / 20).max(1);
        let (mut built, mut ok) = (0, 0);
        for &x in samples.iter().step_by(step).take(20) {
            let curve = john_curve(&d, x, x0, &opts)?;
            let chain =
                build_ball_chain(&d, d.center(x0), d.delta(x0) / 4.0, d.center(x), &curve.points(&d), curve.ratio.max(1.0), 1.0)?;
            built += 1;
            ok += usize::from(check_ball_chain(&d, &chain).iter().all(|k| k.pass));
        }
        c.add(format!("{name} ball chains"), built == 20 && ok == built, format!("{ok}/{built}"));
    }
    let d = shared("cubic_cusp", 1.0 / 256.0, &GalleryParams::default())?;
    let x0 = deepest(&d);
    let samples = default_samples(&d, x0, 64);
    let a = john_assess(&d, x0, &samples, &opts)?;
    c.add("cubic_cusp not john", a.is_not_john(), format!("{:.2}", a.constant_estimate));
    let r = almost_john_assess(&d, x0, &samples, &[0.5, 0.4, 0.3], &opts)?;
    c.add("cubic_cusp almost john", r.verdict == AlmostJohnVerdict::AlmostJohn, format!("{:?}", r.verdict));

    let h = 1.0 / 256.0;
    let d = shared("unit_square", h, &GalleryParams::default())?;
    let b = ball(&d, Point::new(0.5, 0.75), 0.1);
    let mut ratios = Vec::new();
    for k in 2..8 {
        let a = 0.5f64.powi(k);
        let e = strip(&d, |p| p.y < h && (p.x - 0.5).abs() < a);
        ratios.push(content_vs_modulus(&e, &b, 2.0, 2.0)?.ratio);
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[2] + sorted[3]);
    let spread = ratios.iter().map(|r| (r / median).max(median / r)).fold(0.0, f64::max);
    c.add("square family within 10x of median", spread <= 10.0, format!("{spread:.2}"));
    let chain = comb_chain(1.0 / 512.0, 6)?;
    let k = ball(chain.domain(), Point::new(0.5, 0.75), 0.1);
    let mut comb = Vec::new();
    for l in chain.levels() {
        comb.push(content_vs_modulus(&l.region, &k, 2.0, 2.0)?.ratio);
    }
    let growth = comb.last().expect("nonempty") / comb[0];
    c.add("comb family grows 100x", growth >= 100.0, format!("{growth:.2}"));
    Ok(())
}

fn c13_singletons(c: &mut Checks) -> Result<()> {
    let opts = DecayOptions::default();
    let mut corpus: Vec<(DiscreteChain, RegionSet)> = Vec::new();
    let h = 1.0 / 128.0;
    let d = shared("slit_disk", h, &GalleryParams::default())?;
    let k = ball(&d, Point::new(0.5, 0.0), 0.15);
    for p in [Point::new(-0.5, 0.0), Point::new(0.0, 0.0), Point::new(-0.6, 0.8)] {
        let bp = d.snap_boundary_point(p)?;
        for r in enumerate_prime_ends_at(&d, &bp, &dyadic_ladder(0.25, h), &ReportOptions::default())?.records {
            corpus.push((r.chain, k.clone()));
        }
    }
    let scales: Vec<f64> = (1..=5).map(|j| 0.5f64.powi(j + 1)).collect();
    for sign in [1.0, -1.0] {
        let regions = scales.iter().map(|&s| strip(&d, |p| p.x > -0.8 && p.x < -0.2 && sign * p.y > 0.0 && sign * p.y < s)).collect();
        corpus.push((DiscreteChain::from_regions(d.clone(), regions, &scales)?, k.clone()));
    }
    let (d, ladder, ropts) = shrinking_pins_setup()?;
    let k = ball(&d, Point::new(0.75, 0.5), 0.1);
    for r in enumerate_prime_ends_at(&d, &BoundaryPoint::new(0.0, 0.0), &ladder, &ropts)?.records {
        corpus.push((r.chain, k.clone()));
    }
    let regions = scales.iter().map(|&s| strip(&d, |p| p.x > 0.3 && p.x < 0.9 && p.y < s * 0.5)).collect();
    corpus.push((DiscreteChain::from_regions(d.clone(), regions, &scales)?, k.clone()));
    let (mut decays, mut violations) = (0, 0);
    for (chain, k) in &corpus {
        let tol = crate::ends::default_singleton_tol(chain);
        let r = modp_end_is_prime_check(chain, k, 2.0, 2.0, tol, &opts)?;
        decays += usize::from(r.decay == DecayVerdict::Decays);
        violations += usize::from(r.violated);
    }
    c.add("no violations", violations == 0, format!("{violations} of {} chains ({decays} decay)", corpus.len()));
    Ok(())
}

fn c14_dimension(c: &mut Checks) -> Result<()> {
    let h = 1.0 / 256.0;
    let o = Point::new(0.0, 0.0);
    let spec = GridSpec::covering(-1.0, -1.0, 1.0, 1.0, h)?;
    let plain = DomainBuilder::new(spec).fill().build("plane")?;
    let weighted = DomainBuilder::new(spec).fill().weight(WeightKind::AbsAlpha { alpha: 1.0, center: o }).build("weighted")?;
    let a = estimate_mass_exponents(&plain, &[o, Point::new(0.3, -0.2)], 8.0 * h, 0.5)?;
    let worst = a.pointwise.iter().map(|p| (p.slope - 2.0).abs()).fold(0.0, f64::max);
    c.add("plane", worst <= 0.1, format!("{:.3?}", a.pointwise.iter().map(|p| p.slope).collect::<Vec<_>>()));
    let b = estimate_mass_exponents(&weighted, &[o], 8.0 * h, 0.5)?.pointwise[0].slope;
    c.add("weight |x| at origin", (b - 3.0).abs() <= 0.15, format!("{b:.3}"));
    let e = estimate_mass_exponents(&weighted, &[Point::new(0.5, 0.5)], 8.0 * h, 0.0625)?.pointwise[0].slope;
    c.add("weight |x| off origin", (e - 2.0).abs() <= 0.15, format!("{e:.3}"));
    Ok(())
}

/// Criteria rerun by the determinism check.
pub const DETERMINISM_SUBSET: &[u32] = &[1, 10, 14];

fn c15_determinism(c: &mut Checks, cfg: &AcceptanceConfig) -> Result<()> {
    let dir = tempfile::tempdir()?;
    let mut bytes = Vec::new();
    for run in 0..2 {
        let report = regress(DETERMINISM_SUBSET, cfg)?;
        let path = dir.path().join(format!("report{run}.json"));
        crate::io::write_json(&path, &report)?;
        bytes.push(std::fs::read(&path)?);
    }
    c.add("byte-identical", bytes[0] == bytes[1], format!("{} bytes", bytes[0].len()));
    Ok(())
}

pub fn run_criterion(id: u32, cfg: &AcceptanceConfig) -> Result<CriterionResult> {
    let title = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::InvalidArgument(format!("no criterion {id}")))?
        .1;
    let mut c = Checks::default();
    match id {
        1 => c01_slit_counts(&mut c)?,
        2 => c02_comb(&mut c)?,
        3 => c03_condenser(&mut c)?,
        4 => c04_annulus(&mut c)?,
        5 => c05_connectivity(&mut c)?,
        6 => c06_enumeration(&mut c)?,
        7 => c07_separation(&mut c)?,
        8 => c08_mazurkiewicz(&mut c, cfg)?,
        9 => c09_phi(&mut c)?,
        10 => c10_solver(&mut c, cfg)?,
        11 => c11_independence(&mut c)?,
        12 => c12_john(&mut c)?,
        13 => c13_singletons(&mut c)?,
        14 => c14_dimension(&mut c)?,
        _ => c15_determinism(&mut c, cfg)?,
    }
    let pass = !c.0.is_empty() && c.0.iter().all(|k| k.pass);
    Ok(CriterionResult { id, title: title.to_string(), pass, checks: c.0 })
}

/// Runs the given criteria in order; an error inside a criterion is recorded as a failed check.
pub fn regress(ids: &[u32], cfg: &AcceptanceConfig) -> Result<RegressReport> {
    let mut criteria = Vec::with_capacity(ids.len());
    for &id in ids {
        let r = match run_criterion(id, cfg) {
            Ok(r) => r,
            Err(Error::InvalidArgument(m)) if m.starts_with("no criterion") => return Err(Error::InvalidArgument(m)),
            Err(e) => CriterionResult {
                id,
                title: CRITERIA.iter().find(|c| c.0 == id).map_or("", |c| c.1).to_string(),
                pass: false,
                checks: vec![Check { name: "error".into(), pass: false, value: e.to_string() }],
            },
        };
        criteria.push(r);
    }
    let passed = criteria.iter().filter(|c| c.pass).count();
    Ok(RegressReport { seed: cfg.seed, passed, total: criteria.len(), criteria })
}
