//! Discrete p-capacity of condensers and the decay tests built on it.
//!
//! The energy of a potential `u` is
//! `sum over open edges (a,b) of (w(a)+w(b))/2 * h^2 * (|u(a)-u(b)|/h)^p`,
//! minimized subject to `u = 1` on `E` and `u = 0` on `F`.

pub mod solver;

use crate::domain::{ball, estimate_mass_exponents, BoundaryPoint, GridDomain, MassExponents};
use crate::ends::{DecayVerdict, DiscreteChain};
use crate::error::{Error, Result};
use crate::regions::{flood_within, RegionSet};
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use solver::{Graph, FIXED};
use std::sync::Arc;

/// Exponent substituted for `p = 1`.
pub const P_ONE_SURROGATE: f64 = 1.01;

/// A condenser `(E, F, Ω)` with exponent `p`.
#[derive(Debug, Clone)]
pub struct CapacityProblem {
    pub e: RegionSet,
    pub f: RegionSet,
    pub p: f64,
    /// Solve in this subdomain instead of the whole domain.
    pub restrict: Option<RegionSet>,
}

impl CapacityProblem {
    pub fn new(e: RegionSet, f: RegionSet, p: f64) -> Self {
        CapacityProblem { e, f, p, restrict: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual for linear solves.
    pub linear_tol: f64,
    /// Residual reduction per inner solve of the reweighting loop.
    pub inner_tol: f64,
    /// Relative energy change that stops the reweighting loop.
    pub energy_tol: f64,
    pub max_outer: usize,
    pub max_linear: usize,
    /// Smoothing of `|du|` inside the reweighting.
    pub epsilon: f64,
    pub conductance_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            linear_tol: 1e-8,
            inner_tol: 1e-1,
            energy_tol: 1e-6,
            max_outer: 200,
            max_linear: 20_000,
            epsilon: 1e-6,
            conductance_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub value: f64,
    /// Potential per grid cell (zero outside the solved region).
    pub potential: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// No component of the solved region meets both plates.
    pub empty_family: bool,
    pub p_used: f64,
    pub surrogate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySummary {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub empty_family: bool,
    pub p_used: f64,
    pub surrogate: bool,
}

impl CapacityResult {
    pub fn summary(&self) -> CapacitySummary {
        CapacitySummary {
            value: self.value,
            residual: self.residual,
            iterations: self.iterations,
            empty_family: self.empty_family,
            p_used: self.p_used,
            surrogate: self.surrogate,
        }
    }
}

pub fn capacity(problem: &CapacityProblem, tol: f64) -> Result<CapacityResult> {
    let opts = SolverOptions { energy_tol: tol.min(1e-3), ..SolverOptions::default() };
    capacity_with(problem, &opts)
}

pub fn capacity_with(problem: &CapacityProblem, opts: &SolverOptions) -> Result<CapacityResult> {
    let CapacityProblem { e, f, p, restrict } = problem;
    e.check_same_domain(f)?;
    if let Some(r) = restrict {
        e.check_same_domain(r)?;
    }
    if e.is_empty() || f.is_empty() {
        return Err(Error::InvalidArgument("plates must be nonempty".into()));
    }
    if !e.is_disjoint(f) {
        return Err(Error::NotDisjoint);
    }
    if !(p.is_finite() && *p >= 1.0) {
        return Err(Error::ExponentOutOfRange(format!("p = {p}")));
    }
    let (p_used, surrogate) = if *p == 1.0 { (P_ONE_SURROGATE, true) } else { (*p, false) };
    let domain = e.domain().clone();
    let n = domain.spec().len();
    let h = domain.h();

    let mut allowed = match restrict {
        Some(r) => r.bits().clone(),
        None => domain.open_cells().clone(),
    };
    allowed.union_with(e.bits());
    allowed.union_with(f.bits());

    // Unknowns: cells of components meeting both plates.
    let mut active = FixedBitSet::with_capacity(n);
    let mut potential = vec![0.0; n];
    let mut seen = FixedBitSet::with_capacity(n);
    for s in allowed.ones() {
        if seen[s] {
            continue;
        }
        let comp = flood_within(&domain, s, &allowed);
        let has_e = comp.iter().any(|&c| e.contains(c));
        let has_f = comp.iter().any(|&c| f.contains(c));
        for &c in &comp {
            seen.insert(c);
            if has_e && has_f {
                active.insert(c);
            } else if has_e {
                potential[c] = 1.0;
            }
        }
    }
    for c in e.iter() {
        potential[c] = 1.0;
    }
    if active.is_clear() {
        return Ok(CapacityResult {
            value: 0.0,
            potential,
            residual: 0.0,
            iterations: 0,
            empty_family: true,
            p_used,
            surrogate,
        });
    }

    let mut index = vec![u32::MAX; n];
    let mut free_cells = Vec::new();
    for c in active.ones() {
        if !e.contains(c) && !f.contains(c) {
            index[c] = free_cells.len() as u32;
            free_cells.push(c);
        }
    }
    let node = |c: usize| -> (u32, f64) {
        if index[c] != u32::MAX {
            (index[c], 0.0)
        } else if e.contains(c) {
            (FIXED, 1.0)
        } else {
            (FIXED, 0.0)
        }
    };
    let mut ends = Vec::new();
    let mut fixed_value = Vec::new();
    let mut base = Vec::new();
    let mut const_energy_edges = Vec::new();
    for c in active.ones() {
        for m in domain.neighbors(c) {
            if m < c || !active[m] {
                continue;
            }
            let w = 0.5 * (domain.weight(c) + domain.weight(m));
            let (a, va) = node(c);
            let (b, vb) = node(m);
            if a == FIXED && b == FIXED {
                // Edge between plates: constant contribution.
                const_energy_edges.push((w, (va - vb).abs()));
                continue;
            }
            let (a, b, fv) = if a == FIXED { (b, a, va) } else { (a, b, vb) };
            ends.push((a, b));
            fixed_value.push(if b == FIXED { fv } else { 0.0 });
            base.push(w);
        }
    }
    // Orientation of edges with a fixed endpoint: `a` is free, `b` fixed.
    let coords = free_cells
        .iter()
        .map(|&c| {
            let (i, j) = domain.spec().coords(c);
            (i as u32, j as u32)
        })
        .collect();
    let graph = Graph::from_edges(free_cells.len(), ends, fixed_value, coords);
    let energy = |x: &[f64], q: f64| -> f64 {
        let hq = h.powf(2.0 - q);
        let d = graph.diffs(x);
        let free: f64 = d.iter().zip(&base).map(|(di, w)| w * di.abs().powf(q)).sum();
        let fixed: f64 = const_energy_edges.iter().map(|&(w, d)| w * d.powf(q)).sum();
        hq * (free + fixed)
    };

    let mut x = vec![0.5; free_cells.len()];
    let nonlinear = (p_used - 2.0).abs() > 1e-12;
    let warm_tol = if nonlinear { opts.inner_tol } else { opts.linear_tol };
    let (mut iters, mut residual) = graph.solve(&base, &mut x, warm_tol, opts.max_linear);
    if nonlinear {
        let (it, res) = reweighted_descent(&graph, &base, &mut x, p_used, opts.energy_tol, opts, |x| energy(x, p_used));
        iters += it;
        residual = res;
    }
    for (k, &c) in free_cells.iter().enumerate() {
        potential[c] = x[k].clamp(0.0, 1.0);
    }
    let xc: Vec<f64> = free_cells.iter().map(|&c| potential[c]).collect();
    let value = energy(&xc, p_used);
    Ok(CapacityResult { value, potential, residual, iterations: iters, empty_family: false, p_used, surrogate })
}

/// Reweighted least-squares descent on the `p`-energy; returns (linear iterations, last relative change).
fn reweighted_descent(
    graph: &Graph,
    base: &[f64],
    x: &mut Vec<f64>,
    p: f64,
    tol: f64,
    opts: &SolverOptions,
    energy: impl Fn(&[f64]) -> f64,
) -> (usize, f64) {
    let mut en = energy(x);
    let mut cond = vec![0.0; base.len()];
    let eps2 = opts.epsilon * opts.epsilon;
    let (mut iters, mut residual) = (0, f64::INFINITY);
    for _ in 0..opts.max_outer {
        let d = graph.diffs(x);
        for k in 0..cond.len() {
            let s = (d[k] * d[k] + eps2).powf(0.5 * (p - 2.0));
            cond[k] = base[k] * s.max(opts.conductance_floor);
        }
        let mut y = x.clone();
        iters += graph.reduce(&cond, &mut y, opts.inner_tol, opts.max_linear).0;
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1.0 / 128.0 {
            let trial: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + t * (b - a)).collect();
            let et = energy(&trial);
            if et <= en {
                accepted = Some((trial, et));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, en_new)) = accepted else {
            residual = 0.0;
            break;
        };
        residual = (en - en_new).abs() / en_new.max(f64::MIN_POSITIVE);
        *x = xn;
        en = en_new;
        if residual < tol {
            break;
        }
    }
    (iters, residual)
}

/// Energy of an arbitrary potential over all open edges.
pub fn energy_of(domain: &GridDomain, u: &[f64], p: f64) -> f64 {
    let hp = domain.h().powf(2.0 - p);
    let mut s = 0.0;
    for c in domain.cells() {
        for m in domain.neighbors(c) {
            if m > c {
                let w = 0.5 * (domain.weight(c) + domain.weight(m));
                s += w * hp * (u[c] - u[m]).abs().powf(p);
            }
        }
    }
    s
}

/// Rules for the finite-ladder "tends to zero" decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Final/initial ratio that counts as zero outright.
    pub tol_zero: f64,
    /// Allowed relative increase between consecutive values.
    pub monotone_slack: f64,
    /// The final value must drop at least to this fraction of the first.
    pub min_drop: f64,
    /// Required ratio of late to early growth rate of `1/value` in `log(1/scale)`.
    pub rate_ratio: f64,
    pub tol: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { tol_zero: 1e-3, monotone_slack: 0.05, min_drop: 0.8, rate_ratio: 0.5, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub level: usize,
    pub scale: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub verdict: DecayVerdict,
    pub series: Vec<DecayPoint>,
    pub monotone: bool,
    pub below_zero_tol: bool,
    /// Late/early growth rate of `1/value` against `log(1/scale)`.
    pub rate_ratio: Option<f64>,
    pub p_used: f64,
}

impl DecayReport {
    pub fn values(&self) -> Vec<f64> {
        self.series.iter().map(|s| s.value).collect()
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Applies the decay rule to a value series.
pub fn classify_decay(series: Vec<DecayPoint>, opts: &DecayOptions, p_used: f64) -> DecayReport {
    let v: Vec<f64> = series.iter().map(|s| s.value).collect();
    let monotone = v.windows(2).all(|w| w[1] <= w[0] * (1.0 + opts.monotone_slack) + 1e-300);
    let (v0, vl) = (v[0], *v.last().expect("nonempty"));
    let below_zero_tol = vl < opts.tol_zero * v0;
    let dropped = vl <= opts.min_drop * v0;
    let mut rate_ratio = None;
    let mut rate_ok = false;
    if series.len() >= 4 && v.iter().all(|&x| x > 0.0) {
        let pts: Vec<(f64, f64)> = series.iter().map(|s| ((1.0 / s.scale).ln(), 1.0 / s.value)).collect();
        let half = pts.len() / 2;
        let early = slope(&pts[..=half]);
        let late = slope(&pts[half..]);
        if early > 0.0 {
            let r = late / early;
            rate_ratio = Some(r);
            rate_ok = late > 0.0 && r >= opts.rate_ratio;
        }
    }
    let decays = monotone && dropped && (below_zero_tol || rate_ok || vl == 0.0);
    DecayReport {
        verdict: if decays { DecayVerdict::Decays } else { DecayVerdict::Stalls },
        series,
        monotone,
        below_zero_tol,
        rate_ratio,
        p_used,
    }
}

/// Capacity between each chain level and `K`, classified by [`classify_decay`].
pub fn modp_chain_decay(chain: &DiscreteChain, k: &RegionSet, p: f64, opts: &DecayOptions) -> Result<DecayReport> {
    for l in chain.levels() {
        l.region.check_same_domain(k)?;
        if !l.region.is_disjoint(k) {
            return Err(Error::PlateOverlap);
        }
    }
    let mut series = Vec::with_capacity(chain.depth());
    let mut p_used = p;
    for (level, l) in chain.levels().iter().enumerate() {
        let r = capacity(&CapacityProblem::new(l.region.clone(), k.clone(), p), opts.tol)?;
        p_used = r.p_used;
        series.push(DecayPoint { level, scale: l.scale, value: r.value });
    }
    Ok(classify_decay(series, opts, p_used))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallDecayReport {
    pub decay: DecayReport,
    /// Pointwise-dimension interval at the boundary point.
    pub dimension: (f64, f64),
    /// `p` lies in `(0, upper end of the interval]`.
    pub p_in_window: bool,
}

/// Capacity of `B(x, r_k) ∩ Ω` against `K` along a ladder.
pub fn ball_capacity_decay(
    domain: &Arc<GridDomain>,
    x: &BoundaryPoint,
    k: &RegionSet,
    p: f64,
    ladder: &[f64],
    opts: &DecayOptions,
) -> Result<BallDecayReport> {
    if p <= 1.0 {
        return Err(Error::ExponentOutOfRange(format!("p = {p} must exceed 1")));
    }
    if ladder.is_empty() {
        return Err(Error::RadiusLadderEmpty);
    }
    let mut series = Vec::new();
    for (level, &r) in ladder.iter().enumerate() {
        let b = ball(domain, x.position, r);
        if !b.is_disjoint(k) {
            return Err(Error::PlateOverlap);
        }
        if b.is_empty() {
            return Err(Error::EmptyBall { x: x.position.x, y: x.position.y, r });
        }
        let v = capacity(&CapacityProblem::new(b, k.clone(), p), opts.tol)?.value;
        series.push(DecayPoint { level, scale: r, value: v });
    }
    let r_min = (4.0 * domain.h()).max(*ladder.last().expect("nonempty"));
    let r_max = ladder[0].max(2.0 * r_min);
    let ex = estimate_mass_exponents(domain, &[x.position], r_min, r_max)?;
    let pw = &ex.pointwise[0];
    Ok(BallDecayReport {
        decay: classify_decay(series, opts, p),
        dimension: (pw.lo, pw.hi),
        p_in_window: p <= pw.hi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollarCheck {
    pub delta: f64,
    /// Last-level cells farther than `delta` from the boundary.
    pub persistent_cells: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpressionCertificate {
    pub decay: DecayReport,
    pub collars: Vec<CollarCheck>,
    pub pass: bool,
}

/// Certifies that the impression lies in the boundary: the chain decays
/// against `b` and no last-level cell stays deeper than each collar width.
pub fn impression_in_boundary(
    chain: &DiscreteChain,
    b: &RegionSet,
    p: f64,
    exponents: &MassExponents,
    opts: &DecayOptions,
) -> Result<ImpressionCertificate> {
    if p <= exponents.q_upper - 1.0 {
        return Err(Error::ExponentOutOfRange(format!(
            "p = {p} does not exceed Q - 1 = {}",
            exponents.q_upper - 1.0
        )));
    }
    let decay = modp_chain_decay(chain, b, p, opts)?;
    let d = chain.domain();
    let h = d.h();
    let last = &chain.last().region;
    let mut collars = Vec::new();
    let mut delta = 8.0 * h;
    while delta <= 0.25 * d.diameter().max(16.0 * h) {
        let persistent_cells = last.iter().filter(|&c| d.delta(c) > delta).count();
        collars.push(CollarCheck { delta, persistent_cells, pass: persistent_cells == 0 });
        delta *= 2.0;
    }
    let pass = decay.verdict == DecayVerdict::Decays && collars.iter().all(|c| c.pass);
    Ok(ImpressionCertificate { decay, collars, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub first: DecayReport,
    pub second: DecayReport,
    pub agree: bool,
    /// Largest per-level ratio between the two series.
    pub max_ratio: f64,
}

/// Runs the decay test against two compact sets and compares.
pub fn compact_set_independence(
    chain: &DiscreteChain,
    k0: &RegionSet,
    k1: &RegionSet,
    p: f64,
    opts: &DecayOptions,
) -> Result<AgreementReport> {
    if p <= 1.0 {
        return Err(Error::ExponentOutOfRange(format!("p = {p} must exceed 1")));
    }
    let first = modp_chain_decay(chain, k0, p, opts)?;
    let second = modp_chain_decay(chain, k1, p, opts)?;
    let max_ratio = first
        .series
        .iter()
        .zip(&second.series)
        .map(|(a, b)| {
            let (x, y) = (a.value.max(f64::MIN_POSITIVE), b.value.max(f64::MIN_POSITIVE));
            (x / y).max(y / x)
        })
        .fold(1.0, f64::max);
    Ok(AgreementReport { agree: first.verdict == second.verdict, first, second, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};
    use crate::geom::Point;

    fn square(h: f64) -> Arc<GridDomain> {
        build_gallery("unit_square", h, &GalleryParams::default()).unwrap().into_shared()
    }

    #[test]
    fn parallel_plate_capacity_is_exact() {
        let n = 16;
        let h = 1.0 / n as f64;
        let d = square(h);
        let e = RegionSet::from_predicate(d.clone(), |p| p.x < h);
        let f = RegionSet::from_predicate(d.clone(), |p| p.x > 1.0 - h);
        for p in [2.0, 1.5, 3.0] {
            let r = capacity(&CapacityProblem::new(e.clone(), f.clone(), p), 1e-9).unwrap();
            // Linear potential across n-1 gaps: each edge carries 1/(n-1).
            let expect = (n * (n - 1)) as f64 * h.powf(2.0 - p) * (1.0 / (n - 1) as f64).powf(p);
            assert!((r.value - expect).abs() < 1e-5 * expect, "p={p}: {} vs {expect}", r.value);
        }
    }

    #[test]
    fn overlapping_plates_are_rejected() {
        let d = square(1.0 / 8.0);
        let e = RegionSet::from_predicate(d.clone(), |p| p.x < 0.5);
        assert!(matches!(capacity(&CapacityProblem::new(e.clone(), e, 2.0), 1e-6), Err(Error::NotDisjoint)));
    }

    #[test]
    fn separated_plates_report_empty_family() {
        let d = build_gallery("slit_disk", 1.0 / 32.0, &GalleryParams::default()).unwrap().into_shared();
        let e = ball(&d, Point::new(-0.5, 0.1), 0.08);
        let f = ball(&d, Point::new(-0.5, -0.1), 0.08);
        let r = CapacityProblem { e, f, p: 2.0, restrict: Some(ball(&d, Point::new(-0.5, 0.0), 0.3)) };
        let out = capacity(&r, 1e-6).unwrap();
        assert!(out.empty_family);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn p_one_uses_surrogate() {
        let d = square(1.0 / 8.0);
        let e = RegionSet::from_predicate(d.clone(), |p| p.x < 0.2);
        let f = RegionSet::from_predicate(d.clone(), |p| p.x > 0.8);
        let r = capacity(&CapacityProblem::new(e, f, 1.0), 1e-6).unwrap();
        assert!(r.surrogate && r.p_used == P_ONE_SURROGATE);
    }

    #[test]
    fn decay_rule_cases() {
        let pts = |v: &[f64]| -> Vec<DecayPoint> {
            v.iter().enumerate().map(|(k, &value)| DecayPoint { level: k, scale: 0.5f64.powi(k as i32), value }).collect()
        };
        let o = DecayOptions::default();
        assert_eq!(classify_decay(pts(&[1.0; 6]), &o, 2.0).verdict, DecayVerdict::Stalls);
        let log: Vec<f64> = (0..6).map(|k| 1.0 / (1.0 + k as f64)).collect();
        assert_eq!(classify_decay(pts(&log), &o, 2.0).verdict, DecayVerdict::Decays);
        let stall: Vec<f64> = (0..6).map(|k| 0.5 + 0.5f64.powi(k)).collect();
        assert_eq!(classify_decay(pts(&stall), &o, 2.0).verdict, DecayVerdict::Stalls);
        let power: Vec<f64> = (0..6).map(|k| 0.25f64.powi(k)).collect();
        assert_eq!(classify_decay(pts(&power), &o, 2.0).verdict, DecayVerdict::Decays);
    }
}
