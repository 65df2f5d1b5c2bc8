//! Chains of balls along a John curve.

use crate::domain::GridDomain;
use crate::ends::InvariantCheck;
use crate::error::{Error, Result};
use crate::geom::{Point, Segment};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainBall {
    pub center: Point,
    pub radius: f64,
    pub level: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallChain {
    pub balls: Vec<ChainBall>,
    pub target: Point,
    pub m: f64,
    pub lambda: f64,
    /// Level from which every ball is centered at the target.
    pub terminal_level: usize,
}

/// Polyline parameterized by arclength from its first vertex.
struct Curve {
    pts: Vec<Point>,
    cum: Vec<f64>,
}

impl Curve {
    fn new(pts: Vec<Point>) -> Self {
        let mut cum = vec![0.0];
        for w in pts.windows(2) {
            cum.push(cum.last().expect("nonempty") + w[0].dist(w[1]));
        }
        Curve { pts, cum }
    }

    fn at(&self, t: f64) -> Point {
        let k = self.cum.partition_point(|&c| c <= t).clamp(1, self.pts.len().max(2) - 1);
        if self.pts.len() == 1 {
            return self.pts[0];
        }
        let (a, b) = (self.pts[k - 1], self.pts[k]);
        let len = self.cum[k] - self.cum[k - 1];
        if len <= 0.0 {
            return a;
        }
        a + (b - a) * ((t - self.cum[k - 1]) / len).clamp(0.0, 1.0)
    }

    /// First arclength at which the curve enters the closed ball `B(c, r)`.
    fn entry(&self, c: Point, r: f64) -> f64 {
        if self.pts[0].dist(c) <= r {
            return 0.0;
        }
        for k in 1..self.pts.len() {
            let (a, b) = (self.pts[k - 1], self.pts[k]);
            if Segment::new(a, b).dist(c) <= r {
                // Solve |a + s(b-a) - c| = r for the smallest s in [0, 1].
                let d = b - a;
                let f = a - c;
                let (qa, qb, qc) = (d.dot(d), 2.0 * f.dot(d), f.dot(f) - r * r);
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                let s = ((-qb - disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0);
                return self.cum[k - 1] + s * (self.cum[k] - self.cum[k - 1]);
            }
        }
        *self.cum.last().expect("nonempty")
    }
}

/// Largest ratio `t / delta(curve(t))` over the curve's vertices.
pub fn john_ratio(domain: &GridDomain, curve: &[Point]) -> f64 {
    let c = Curve::new(curve.to_vec());
    c.pts.iter().zip(&c.cum).map(|(&p, &t)| t / domain.delta_at(p).max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

/// Builds the chain from `B(x0, rho0)` to `x` along `curve` (from `x` to `x0`).
pub fn build_ball_chain(
    domain: &GridDomain,
    x0: Point,
    rho0: f64,
    x: Point,
    curve: &[Point],
    c_omega: f64,
    lambda: f64,
) -> Result<BallChain> {
    if curve.is_empty() || curve[0].dist(x) > 1e-9 || curve.last().expect("nonempty").dist(x0) > 1e-9 {
        return Err(Error::InvalidArgument("curve must run from x to x0".into()));
    }
    let d0 = domain.delta_at(x0);
    if rho0 > d0 / (4.0 * lambda) + 1e-12 {
        return Err(Error::InvalidArgument(format!("rho0 = {rho0} exceeds delta(x0)/4 lambda = {}", d0 / (4.0 * lambda))));
    }
    let gamma = Curve::new(curve.to_vec());
    for (&p, &t) in gamma.pts.iter().zip(&gamma.cum) {
        let ratio = t / domain.delta_at(p);
        if ratio > c_omega * (1.0 + 1e-9) {
            return Err(Error::RatioViolated { t, ratio, bound: c_omega });
        }
    }
    let a = c_omega * d0 / rho0;
    let m = 2.0 * a;
    let dx = domain.delta_at(x);
    let mut i_x = 0;
    while 4.0 * lambda * c_omega * rho0 * 0.5f64.powi(i_x as i32) > 0.5 * dx {
        i_x += 1;
    }
    let mut balls = vec![ChainBall { center: x0, radius: rho0, level: 0, index: 0 }];
    let (mut i, mut j) = (0usize, 0usize);
    let mut cur = x0;
    let guard = 100_000;
    while balls.len() < guard {
        let rho = rho0 * 0.5f64.powi(i as i32);
        let c = gamma.entry(cur, rho);
        let next = if i < i_x {
            if c >= 4.0 * lambda * c_omega * rho {
                j += 1;
                (gamma.at(c), i, j)
            } else {
                i += 1;
                j = 0;
                (gamma.at(c), i, 0)
            }
        } else if c > 0.0 {
            j += 1;
            (gamma.at(c), i, j)
        } else {
            i += 1;
            j = 0;
            (x, i, 0)
        };
        cur = next.0;
        balls.push(ChainBall { center: cur, radius: rho0 * 0.5f64.powi(next.1 as i32), level: next.1, index: next.2 });
        if next.1 > i_x && next.0 == x && next.1 >= i_x + 2 {
            break;
        }
    }
    let terminal_level = balls.iter().rposition(|b| b.center != x).map_or(0, |k| balls[k].level + 1);
    Ok(BallChain { balls, target: x, m, lambda, terminal_level })
}

/// Checks the five chain properties.
pub fn check_ball_chain(domain: &GridDomain, chain: &BallChain) -> Vec<InvariantCheck> {
    let h = domain.h();
    let mk = |name: &str, bad: Option<usize>, detail: String| InvariantCheck {
        name: name.into(),
        pass: bad.is_none(),
        first_offending_level: bad,
        detail,
    };
    let balls = &chain.balls;
    // Distances to the discrete boundary are exact up to the half-cell offset of cell faces.
    let inside = balls.iter().position(|b| domain.delta_at(b.center) + 0.5 * h < 3.0 * chain.lambda * b.radius);
    let near = balls.iter().position(|b| b.center.dist(chain.target) > chain.m * b.radius + 1e-12);
    let max_level = balls.iter().map(|b| b.level).max().unwrap_or(0);
    let mut counts = vec![0usize; max_level + 1];
    for b in balls {
        counts[b.level] += 1;
    }
    let many = counts.iter().position(|&c| (c as f64) - 1.0 > chain.m);
    let terminal = balls
        .iter()
        .position(|b| b.level >= chain.terminal_level && (b.center != chain.target || counts[b.level] != 1));
    let terminal = terminal.or(if chain.terminal_level > max_level { Some(max_level) } else { None });
    let order = balls.windows(2).position(|w| {
        let lex = (w[0].level, w[0].index) < (w[1].level, w[1].index);
        !lex || w[0].center.dist(w[1].center) >= w[0].radius + w[1].radius
    });
    vec![
        mk("dilated_ball_inside", inside.map(|k| balls[k].level), format!("lambda = {}", chain.lambda)),
        mk("center_distance", near.map(|k| balls[k].level), format!("M = {:.3}", chain.m)),
        mk("level_count", many, format!("max count {}", counts.iter().max().unwrap_or(&0))),
        mk("terminal_centered", terminal, format!("terminal level {}", chain.terminal_level)),
        mk("neighbors_intersect", order.map(|k| balls[k].level), String::new()),
    ]
}
