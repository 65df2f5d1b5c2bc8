//! Weighted graph Laplacian with Dirichlet plates, solved by preconditioned CG.

use rayon::prelude::*;

/// Marker for a neighbour whose value is fixed.
pub const FIXED: u32 = u32::MAX;

/// Edge list over free unknowns; each edge may have one fixed endpoint.
#[derive(Debug, Clone)]
pub struct Graph {
    pub n: usize,
    /// Per-node row: `(neighbour or FIXED, edge id)`.
    pub row_start: Vec<u32>,
    pub row: Vec<(u32, u32)>,
    /// Endpoints of each edge; fixed endpoints use `FIXED` and a value.
    pub ends: Vec<(u32, u32)>,
    pub fixed_value: Vec<f64>,
    /// Grid coordinates of each node, used to build the coarse levels.
    pub coords: Vec<(u32, u32)>,
}

impl Graph {
    pub fn from_edges(n: usize, ends: Vec<(u32, u32)>, fixed_value: Vec<f64>, coords: Vec<(u32, u32)>) -> Self {
        assert_eq!(coords.len(), n);
        let mut deg = vec![0u32; n + 1];
        for &(a, b) in &ends {
            if a != FIXED {
                deg[a as usize + 1] += 1;
            }
            if b != FIXED {
                deg[b as usize + 1] += 1;
            }
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let mut row = vec![(0u32, 0u32); deg[n] as usize];
        for (e, &(a, b)) in ends.iter().enumerate() {
            if a != FIXED {
                row[fill[a as usize] as usize] = (b, e as u32);
                fill[a as usize] += 1;
            }
            if b != FIXED {
                row[fill[b as usize] as usize] = (a, e as u32);
                fill[b as usize] += 1;
            }
        }
        Graph { n, row_start: deg, row, ends, fixed_value, coords }
    }

    #[inline]
    fn row(&self, i: usize) -> &[(u32, u32)] {
        &self.row[self.row_start[i] as usize..self.row_start[i + 1] as usize]
    }

    /// Differences `u_a - u_b` across every edge.
    pub fn diffs(&self, u: &[f64]) -> Vec<f64> {
        self.ends
            .par_iter()
            .enumerate()
            .map(|(e, &(a, b))| self.value(u, a, e) - self.value(u, b, e))
            .collect()
    }

    #[inline]
    fn value(&self, u: &[f64], node: u32, e: usize) -> f64 {
        if node == FIXED {
            self.fixed_value[e]
        } else {
            u[node as usize]
        }
    }

    fn apply(&self, cond: &[f64], x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for &(j, e) in self.row(i) {
                let a = cond[e as usize];
                s += if j == FIXED { a * x[i] } else { a * (x[i] - x[j as usize]) };
            }
            *yi = s;
        });
    }

    fn rhs_and_diag(&self, cond: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let (mut b, mut d) = (0.0, 0.0);
                for &(j, e) in self.row(i) {
                    let a = cond[e as usize];
                    d += a;
                    if j == FIXED {
                        b += a * self.fixed_value[e as usize];
                    }
                }
                (b, d)
            })
            .unzip()
    }

    /// Minimizes `sum cond_e (du_e)^2`; returns (iterations, residual relative to the right-hand side).
    pub fn solve(&self, cond: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> (usize, f64) {
        self.solve_inner(cond, x, rtol, false, max_iter)
    }

    /// Like [`Graph::solve`] but stops once the residual drops by `factor` from its starting value.
    pub fn reduce(&self, cond: &[f64], x: &mut [f64], factor: f64, max_iter: usize) -> (usize, f64) {
        self.solve_inner(cond, x, factor, true, max_iter)
    }

    fn solve_inner(&self, cond: &[f64], x: &mut [f64], rtol: f64, from_start: bool, max_iter: usize) -> (usize, f64) {
        let n = self.n;
        if n == 0 {
            return (0, 0.0);
        }
        let (b, diag) = self.rhs_and_diag(cond);
        let mg = Hierarchy::new(self, cond, &diag);
        let bnorm = norm(&b).max(f64::MIN_POSITIVE);
        let mut ax = vec![0.0; n];
        self.apply(cond, x, &mut ax);
        let mut r: Vec<f64> = b.par_iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut z = mg.apply(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut q = vec![0.0; n];
        let mut res = norm(&r) / bnorm;
        let target = if from_start { rtol * res } else { rtol };
        let mut it = 0;
        while res > target && it < max_iter {
            self.apply(cond, &p, &mut q);
            let pq = dot(&p, &q);
            if pq <= 0.0 {
                break;
            }
            let alpha = rz / pq;
            x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.par_iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
            z = mg.apply(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
            res = norm(&r) / bnorm;
            it += 1;
        }
        (it, res)
    }
}

/// One level of the aggregation hierarchy, stored as a symmetric CSR matrix.
struct Level {
    row_start: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    /// Coarse node of each node; empty on the coarsest level.
    agg: Vec<u32>,
    n_coarse: usize,
}

impl Level {
    fn from_edges(n: usize, edges: &[(u32, u32, f64)], diag: Vec<f64>) -> Self {
        let mut deg = vec![0u32; n + 1];
        for &(a, b, _) in edges {
            deg[a as usize + 1] += 1;
            deg[b as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let m = deg[n] as usize;
        let (mut cols, mut vals) = (vec![0u32; m], vec![0.0; m]);
        for &(a, b, w) in edges {
            for (u, v) in [(a, b), (b, a)] {
                let k = fill[u as usize] as usize;
                cols[k] = v;
                vals[k] = w;
                fill[u as usize] += 1;
            }
        }
        Level { row_start: deg, cols, vals, diag, agg: Vec::new(), n_coarse: 0 }
    }

    fn n(&self) -> usize {
        self.diag.len()
    }

    /// Gauss-Seidel sweep for `A x = b` with `A = diag - offdiag`.
    fn sweep(&self, b: &[f64], x: &mut [f64], forward: bool) {
        let n = self.n();
        for t in 0..n {
            let i = if forward { t } else { n - 1 - t };
            let mut s = b[i];
            for k in self.row_start[i] as usize..self.row_start[i + 1] as usize {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            x[i] = s / self.diag[i];
        }
    }

    fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let mut s = b[i] - self.diag[i] * x[i];
                for k in self.row_start[i] as usize..self.row_start[i + 1] as usize {
                    s += self.vals[k] * x[self.cols[k] as usize];
                }
                s
            })
            .collect()
    }
}

/// Unsmoothed aggregation over 2x2 grid blocks, used as a symmetric V-cycle preconditioner.
struct Hierarchy {
    levels: Vec<Level>,
}

const COARSEST: usize = 64;

impl Hierarchy {
    fn new(g: &Graph, cond: &[f64], diag: &[f64]) -> Self {
        let mut edges: Vec<(u32, u32, f64)> = g
            .ends
            .iter()
            .zip(cond)
            .filter(|((a, b), _)| *a != FIXED && *b != FIXED)
            .map(|(&(a, b), &w)| (a, b, w))
            .collect();
        let mut coords = g.coords.clone();
        let mut levels = vec![Level::from_edges(g.n, &edges, diag.to_vec())];
        loop {
            let fine = levels.last_mut().expect("nonempty");
            let n = fine.n();
            if n <= COARSEST {
                break;
            }
            let mut map = std::collections::HashMap::new();
            let mut agg = Vec::with_capacity(n);
            let mut next_coords = Vec::new();
            for &(i, j) in &coords {
                let key = (i / 2, j / 2);
                let id = *map.entry(key).or_insert_with(|| {
                    next_coords.push(key);
                    next_coords.len() as u32 - 1
                });
                agg.push(id);
            }
            let nc = next_coords.len();
            if nc * 10 > n * 9 {
                break;
            }
            let mut cdiag = vec![0.0; nc];
            for i in 0..n {
                cdiag[agg[i] as usize] += fine.diag[i];
            }
            let mut merged = std::collections::HashMap::new();
            for &(a, b, w) in &edges {
                let (ca, cb) = (agg[a as usize], agg[b as usize]);
                if ca == cb {
                    // Internal edges cancel in the Galerkin product.
                    cdiag[ca as usize] -= 2.0 * w;
                } else {
                    *merged.entry((ca.min(cb), ca.max(cb))).or_insert(0.0) += w;
                }
            }
            let mut cedges: Vec<(u32, u32, f64)> = merged.into_iter().map(|((a, b), w)| (a, b, w)).collect();
            cedges.sort_unstable_by_key(|e| (e.0, e.1));
            fine.agg = agg;
            fine.n_coarse = nc;
            edges = cedges;
            coords = next_coords;
            levels.push(Level::from_edges(nc, &edges, cdiag));
        }
        Hierarchy { levels }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.cycle(0, r)
    }

    fn cycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        let lev = &self.levels[l];
        let mut x = vec![0.0; lev.n()];
        if l + 1 == self.levels.len() {
            for _ in 0..16 {
                lev.sweep(b, &mut x, true);
                lev.sweep(b, &mut x, false);
            }
            return x;
        }
        lev.sweep(b, &mut x, true);
        let r = lev.residual(b, &x);
        let mut rc = vec![0.0; lev.n_coarse];
        for (i, &a) in lev.agg.iter().enumerate() {
            rc[a as usize] += r[i];
        }
        let xc = self.cycle(l + 1, &rc);
        for (i, &a) in lev.agg.iter().enumerate() {
            x[i] += xc[a as usize];
        }
        lev.sweep(b, &mut x, false);
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_is_linear() {
        // FIXED(1) - 0 - 1 - 2 - FIXED(0)
        let ends = vec![(FIXED, 0), (0, 1), (1, 2), (2, FIXED)];
        let fixed = vec![1.0, 0.0, 0.0, 0.0];
        let g = Graph::from_edges(3, ends, fixed, vec![(1, 0), (2, 0), (3, 0)]);
        let mut x = vec![0.0; 3];
        let (_, res) = g.solve(&[1.0; 4], &mut x, 1e-12, 100);
        assert!(res < 1e-12);
        for (k, v) in x.iter().enumerate() {
            assert!((v - (1.0 - (k as f64 + 1.0) / 4.0)).abs() < 1e-10);
        }
    }
}
