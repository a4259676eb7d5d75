#![allow(dead_code)]

use ghhjb_core::kantorovich::Measure;
use ghhjb_core::maps::MetricMap;
use ghhjb_core::metric::{apsp_from_graph, GraphSpec, SpaceRef};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Connected graph on `n` vertices: a random spanning tree plus extra edges.
pub fn random_graph_space(rng: &mut ChaCha8Rng, n: usize) -> SpaceRef {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, rng.gen_range(0.1..2.0)));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a, b, rng.gen_range(0.1..2.0)));
        }
    }
    apsp_from_graph(&GraphSpec::new(n, edges).unwrap())
        .unwrap()
        .into_ref()
}

pub fn random_map(rng: &mut ChaCha8Rng, source: &SpaceRef, target: &SpaceRef) -> MetricMap {
    let assign = (0..source.len())
        .map(|_| rng.gen_range(0..target.len()))
        .collect();
    MetricMap::new(source.clone(), target.clone(), assign).unwrap()
}

/// Random probability vector; each point is dropped with probability
/// `zero_prob`, but at least one point keeps mass.
pub fn random_measure(rng: &mut ChaCha8Rng, space: &SpaceRef, zero_prob: f64) -> Measure {
    let n = space.len();
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(zero_prob) {
                0.0
            } else {
                rng.gen_range(0.01..1.0)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    Measure::new(space.clone(), w).unwrap()
}

/// Minimum transport cost by enumerating every basic solution of the
/// transportation polytope: each `(m + n − 1)`-cell subset that forms a
/// spanning tree of the bipartite row/column graph determines its flows by
/// leaf peeling.
pub fn transport_by_vertex_enumeration(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells = m * n;
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        if let Some(c) = peel(a, b, cost, &subset, n) {
            best = best.min(c);
        }
        // next k-combination of 0..cells
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < cells - k + i {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn peel(a: &[f64], b: &[f64], cost: &[f64], subset: &[usize], n: usize) -> Option<f64> {
    let m = a.len();
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut open: Vec<bool> = vec![true; subset.len()];
    let mut total = 0.0;
    for _ in 0..subset.len() {
        let mut picked = None;
        'search: for line in 0..(m + n) {
            let mut count = 0;
            let mut last = 0;
            for (s, &cell) in subset.iter().enumerate() {
                if !open[s] {
                    continue;
                }
                let hit = if line < m { cell / n == line } else { cell % n == line - m };
                if hit {
                    count += 1;
                    last = s;
                }
            }
            if count == 1 {
                picked = Some((line, last));
                break 'search;
            }
        }
        let (line, s) = picked?;
        let cell = subset[s];
        let (i, j) = (cell / n, cell % n);
        let f = if line < m { ra[i] } else { rb[j] };
        if f < -1e-12 {
            return None;
        }
        ra[i] -= f;
        rb[j] -= f;
        total += f * cost[cell];
        open[s] = false;
    }
    let resid = ra.iter().chain(&rb).fold(0.0f64, |m, x| m.max(x.abs()));
    (resid < 1e-9).then_some(total)
}
