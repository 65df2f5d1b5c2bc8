use super::GridDomain;
use crate::error::{Error, Result};
use crate::geom::Point;
use serde::{Deserialize, Serialize};

/// Empirical mass-bound exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassExponents {
    pub q_upper: f64,
    pub q_lower: f64,
    /// Per-sample interval estimate of the pointwise dimension.
    pub pointwise: Vec<PointwiseDimension>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseDimension {
    pub point: Point,
    pub slope: f64,
    pub lo: f64,
    pub hi: f64,
}

/// `mu(B(x, r))` summed over open cells with centers strictly inside the ball.
pub fn ball_measure(domain: &GridDomain, x: Point, r: f64) -> f64 {
    let s = domain.spec();
    let (i0, i1, j0, j1) = s.window(x, r);
    let r2 = r * r;
    let mut m = 0.0;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let c = s.index(i, j);
            if domain.is_open(c) && domain.center(c).dist2(x) < r2 {
                m += domain.mu(c);
            }
        }
    }
    m
}

/// Least-squares slope of `log mu(B(x,r))` against `log r` over the dyadic
/// ladder `r_min 2^k <= r_max`, per sample. The margin is twice the RMS
/// residual of the fit.
pub fn estimate_mass_exponents(
    domain: &GridDomain,
    samples: &[Point],
    r_min: f64,
    r_max: f64,
) -> Result<MassExponents> {
    let h = domain.h();
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if r_min < 4.0 * h * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("r_min {r_min} is below 4h")));
    }
    let mut ladder = Vec::new();
    let mut r = r_min;
    while r <= r_max * (1.0 + 1e-12) {
        ladder.push(r);
        r *= 2.0;
    }
    if ladder.len() < 2 {
        return Err(Error::RadiusLadderEmpty);
    }
    let mut pointwise = Vec::with_capacity(samples.len());
    for &x in samples {
        let pts: Vec<(f64, f64)> = ladder
            .iter()
            .map(|&r| (r.ln(), ball_measure(domain, x, r)))
            .filter(|&(_, m)| m > 0.0)
            .map(|(lr, m)| (lr, m.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::RadiusLadderEmpty);
        }
        let (slope, rms) = fit_line(&pts);
        let margin = 2.0 * rms;
        pointwise.push(PointwiseDimension { point: x, slope, lo: slope - margin, hi: slope + margin });
    }
    let q_upper = pointwise.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
    let q_lower = pointwise.iter().map(|p| p.lo).fold(f64::INFINITY, f64::min).max(f64::MIN_POSITIVE);
    Ok(MassExponents { q_upper, q_lower, pointwise })
}

/// Slope and RMS residual of the least-squares line through `pts`.
fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_gallery, GalleryParams};

    #[test]
    fn plane_has_exponent_two() {
        let h = 1.0 / 256.0;
        let d = build_gallery("unit_square", h, &GalleryParams::default()).unwrap();
        let e = estimate_mass_exponents(&d, &[Point::new(0.5, 0.5), Point::new(0.4, 0.55)], 4.0 * h, 0.4).unwrap();
        for p in &e.pointwise {
            assert!((p.slope - 2.0).abs() < 0.1, "{}", p.slope);
        }
        assert!(e.q_lower <= e.q_upper);
    }

    #[test]
    fn exact_fit_has_zero_margin() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 3.0 * k as f64 + 1.0)).collect();
        let (s, r) = fit_line(&pts);
        assert!((s - 3.0).abs() < 1e-12 && r < 1e-12);
    }
}
