//! Finite metric spaces used as discrete stand-ins for geodesic spaces.
//!
//! Distances are stored densely (row-major `N × N`). Spaces are immutable
//! once built and are shared through [`SpaceRef`].

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default slack allowed in the triangle inequality.
pub const DEFAULT_TOL_METRIC: f64 = 1e-9;

pub type SpaceRef = Arc<FiniteMetricSpace>;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
    coords: Option<Vec<Vec<f64>>>,
}

impl FiniteMetricSpace {
    /// Builds a space from a square matrix, rejecting anything that fails
    /// [`validate_metric`] at `tol_metric`.
    pub fn from_matrix(rows: &[Vec<f64>], tol_metric: f64) -> Result<Self> {
        let report = validate_metric(rows, tol_metric)?;
        if !report.passed() {
            return Err(Error::InvalidMetric(report.to_string()));
        }
        let n = rows.len();
        let dist = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Ok(Self {
            n,
            dist,
            labels: None,
            coords: None,
        })
    }

    /// Shortest-path metrics satisfy the triangle inequality by construction,
    /// so only the O(N²) axioms are rechecked here.
    fn from_shortest_paths(n: usize, dist: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(dist.len(), n * n);
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                let bad = if i == j {
                    d != 0.0
                } else {
                    !(d > 0.0) || !d.is_finite() || d != dist[j * n + i]
                };
                if bad {
                    return Err(Error::InvalidMetric(format!(
                        "shortest-path matrix entry ({i},{j}) = {d}"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            dist,
            labels: None,
            coords: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Malformed(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.n {
            return Err(Error::Malformed(format!(
                "{} coordinate vectors for {} points",
                coords.len(),
                self.n
            )));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn into_ref(self) -> SpaceRef {
        Arc::new(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, len: self.n })
        }
    }

    /// Median over points of the distance to the nearest other point.
    /// Zero for a one-point space.
    pub fn median_nearest_neighbor(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut nn: Vec<f64> = (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &d)| d)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        nn.sort_by(f64::total_cmp);
        let m = nn.len();
        if m % 2 == 1 {
            nn[m / 2]
        } else {
            0.5 * (nn[m / 2 - 1] + nn[m / 2])
        }
    }

    /// Two handles denote the same space if they share storage or hold
    /// identical distance matrices.
    pub fn same_as(a: &SpaceRef, b: &SpaceRef) -> bool {
        Arc::ptr_eq(a, b) || (a.n == b.n && a.dist == b.dist)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    ZeroDiagonal,
    Symmetry,
    TriangleInequality,
    Positivity,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::ZeroDiagonal => "zero diagonal",
            Axiom::Symmetry => "symmetry",
            Axiom::TriangleInequality => "triangle inequality",
            Axiom::Positivity => "positivity",
        })
    }
}

/// Worst offence against one axiom. For the triangle inequality `indices`
/// is `(i, j, k)` with `d(i,j) > d(i,k) + d(k,j)`; for the pairwise axioms
/// the third index repeats the second.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub axiom: Axiom,
    pub indices: (usize, usize, usize),
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, axiom: Axiom) -> Option<&Violation> {
        self.violations.iter().find(|v| v.axiom == axiom)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("metric axioms hold");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            let (i, j, l) = v.indices;
            match v.axiom {
                Axiom::TriangleInequality => write!(
                    f,
                    "{} violated at ({i},{j},{l}), magnitude {}",
                    v.axiom, v.magnitude
                )?,
                _ => write!(f, "{} violated at ({i},{j}), magnitude {}", v.axiom, v.magnitude)?,
            }
        }
        Ok(())
    }
}

fn keep_worst(slot: &mut Option<Violation>, axiom: Axiom, idx: (usize, usize, usize), mag: f64) {
    if slot.as_ref().map_or(true, |v| mag > v.magnitude) {
        *slot = Some(Violation {
            axiom,
            indices: idx,
            magnitude: mag,
        });
    }
}

/// Checks every metric axiom and reports the worst offender for each.
///
/// Symmetry, diagonal and positivity are exact; the triangle inequality is
/// allowed `tol_metric` of slack.
pub fn validate_metric(rows: &[Vec<f64>], tol_metric: f64) -> Result<ValidationReport> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Malformed("empty distance matrix".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::Malformed(format!(
                "row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        if let Some(j) = r.iter().position(|x| x.is_nan()) {
            return Err(Error::Malformed(format!("NaN at ({i},{j})")));
        }
    }
    if !(tol_metric >= 0.0) {
        return Err(Error::Parameter(format!("tol_metric = {tol_metric}")));
    }

    let mut diag = None;
    let mut sym = None;
    let mut pos = None;
    for i in 0..n {
        if rows[i][i] != 0.0 {
            keep_worst(&mut diag, Axiom::ZeroDiagonal, (i, i, i), rows[i][i].abs());
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let a = rows[i][j];
            if i < j && a != rows[j][i] {
                keep_worst(&mut sym, Axiom::Symmetry, (i, j, j), (a - rows[j][i]).abs());
            }
            if !(a > 0.0) || a.is_infinite() {
                let mag = if a.is_infinite() { f64::INFINITY } else { -a };
                keep_worst(&mut pos, Axiom::Positivity, (i, j, j), mag.max(0.0));
            }
        }
    }

    // Triangle sweep: for each (i, j) the worst detour k.
    let tri = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = &rows[i];
            let mut worst: Option<Violation> = None;
            for (k, rk) in rows.iter().enumerate() {
                let dik = ri[k];
                for j in 0..n {
                    let excess = ri[j] - (dik + rk[j]);
                    if excess > tol_metric {
                        keep_worst(&mut worst, Axiom::TriangleInequality, (i, j, k), excess);
                    }
                }
            }
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<Violation>, v| match acc {
            Some(a) if a.magnitude >= v.magnitude => Some(a),
            _ => Some(v),
        });

    let violations = [diag, sym, tri, pos].into_iter().flatten().collect();
    Ok(ValidationReport { violations })
}

/// Weighted undirected graph from which shortest-path metrics are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::Parameter("graph needs at least one vertex".into()));
        }
        for &(i, j, w) in &edges {
            if i >= n_vertices || j >= n_vertices {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    len: n_vertices,
                });
            }
            if i == j {
                return Err(Error::Malformed(format!("self-loop at vertex {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Malformed(format!("edge ({i},{j}) has weight {w}")));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(i, j, w) in &self.edges {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        adj
    }

    fn uniform_weight(&self) -> Option<f64> {
        let w0 = self.edges.first()?.2;
        self.edges.iter().all(|e| e.2 == w0).then_some(w0)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

fn bfs_hops(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<Option<u64>> {
    let mut hops = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    hops[src] = Some(0);
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let h = hops[u].unwrap_or(0);
        for &(v, _) in &adj[u] {
            if hops[v].is_none() {
                hops[v] = Some(h + 1);
                queue.push_back(v);
            }
        }
    }
    hops
}

/// All-pairs shortest-path metric of a connected weighted graph.
///
/// When every edge carries the same weight `w` the distances are computed
/// as `hops * w`, which is exact up to a single rounding. Otherwise one
/// Dijkstra run per source is used; a path of at most `N - 1` edges
/// accumulates at most `N * max_weight * f64::EPSILON` of rounding error,
/// and the two directions of each pair are reconciled by taking the
/// smaller value so the result is exactly symmetric.
pub fn apsp_from_graph(g: &GraphSpec) -> Result<FiniteMetricSpace> {
    let n = g.n_vertices;
    let adj = g.adjacency();
    let mut dist = vec![0.0; n * n];
    if let Some(w) = g.uniform_weight() {
        let rows: Vec<Vec<Option<u64>>> = (0..n).into_par_iter().map(|s| bfs_hops(&adj, s)).collect();
        for (i, row) in rows.iter().enumerate() {
            for (j, h) in row.iter().enumerate() {
                match h {
                    Some(h) => dist[i * n + j] = *h as f64 * w,
                    None => return Err(Error::Disconnected { from: i, to: j }),
                }
            }
        }
    } else {
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect();
        for i in 0..n {
            for j in 0..n {
                let d = rows[i][j];
                if d.is_infinite() {
                    return Err(Error::Disconnected { from: i, to: j });
                }
                dist[i * n + j] = d.min(rows[j][i]);
            }
        }
    }
    FiniteMetricSpace::from_shortest_paths(n, dist)
}

/// Worst approximate-midpoint error over all pairs; zero iff every pair has
/// an exact midpoint in the space.
pub fn geodesicity_defect(m: &FiniteMetricSpace) -> f64 {
    let n = m.len();
    (0..n)
        .into_par_iter()
        .map(|x| {
            let rx = m.row(x);
            let mut worst = 0.0f64;
            for y in (x + 1)..n {
                let half = 0.5 * rx[y];
                let ry = m.row(y);
                let mut best = f64::INFINITY;
                for z in 0..n {
                    let e = (rx[z] - half).abs().max((ry[z] - half).abs());
                    if e < best {
                        best = e;
                    }
                }
                worst = worst.max(best);
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Cycle graph `C_n` with edge weight `2π/n` (circumference `2π`).
pub fn make_circle(n: usize) -> Result<FiniteMetricSpace> {
    if n < 3 {
        return Err(Error::Parameter(format!("circle needs n >= 3, got {n}")));
    }
    let w = TAU / n as f64;
    let edges = (0..n).map(|i| (i, (i + 1) % n, w)).collect();
    let coords = (0..n)
        .map(|i| {
            let a = i as f64 * w;
            vec![a.cos(), a.sin()]
        })
        .collect();
    apsp_from_graph(&GraphSpec::new(n, edges)?)?.with_coords(coords)
}

/// Path graph with `n` equally spaced points on `[0, length]`.
pub fn make_interval(n: usize, length: f64) -> Result<FiniteMetricSpace> {
    if n < 2 {
        return Err(Error::Parameter(format!("interval needs n >= 2, got {n}")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Parameter(format!("interval length {length}")));
    }
    let w = length / (n - 1) as f64;
    let edges = (0..n - 1).map(|i| (i, i + 1, w)).collect();
    let coords = (0..n).map(|i| vec![i as f64 * w]).collect();
    apsp_from_graph(&GraphSpec::new(n, edges)?)?.with_coords(coords)
}

/// Lattice coordinates `(a, b)` of the level-`level` gasket vertices, in
/// the canonical vertex order (sorted by `b`, then `a`). The point is
/// `a·e₁ + b·e₂` scaled by `2^-level`, with `e₁ = (1, 0)` and
/// `e₂ = (1/2, √3/2)`.
pub fn sierpinski_lattice(level: u32) -> Vec<(u64, u64)> {
    let mut pts = Vec::new();
    sierpinski_triangles(level, &mut |a, b, _| {
        pts.push((a, b));
        pts.push((a + 1, b));
        pts.push((a, b + 1));
    });
    pts.sort_by_key(|&(a, b)| (b, a));
    pts.dedup();
    pts
}

fn sierpinski_triangles(level: u32, emit: &mut impl FnMut(u64, u64, u64)) {
    fn rec(a: u64, b: u64, size: u64, emit: &mut impl FnMut(u64, u64, u64)) {
        if size == 1 {
            emit(a, b, size);
            return;
        }
        let h = size / 2;
        rec(a, b, h, emit);
        rec(a + h, b, h, emit);
        rec(a, b + h, h, emit);
    }
    rec(0, 0, 1u64 << level, emit);
}

pub const MAX_SIERPINSKI_LEVEL: u32 = 8;

/// Gasket graph at `level`, edge weight `2^-level`, corners at distance 1.
pub fn make_sierpinski(level: u32) -> Result<FiniteMetricSpace> {
    if level > MAX_SIERPINSKI_LEVEL {
        return Err(Error::Parameter(format!(
            "sierpinski level {level} exceeds {MAX_SIERPINSKI_LEVEL}"
        )));
    }
    let pts = sierpinski_lattice(level);
    let index: HashMap<(u64, u64), usize> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let w = (-(level as f64)).exp2();
    let mut edges = Vec::new();
    sierpinski_triangles(level, &mut |a, b, _| {
        let p = index[&(a, b)];
        let q = index[&(a + 1, b)];
        let r = index[&(a, b + 1)];
        edges.push((p, q, w));
        edges.push((p, r, w));
        edges.push((q, r, w));
    });
    let h = 3f64.sqrt() / 2.0;
    let coords = pts
        .iter()
        .map(|&(a, b)| vec![(a as f64 + 0.5 * b as f64) * w, b as f64 * h * w])
        .collect();
    apsp_from_graph(&GraphSpec::new(pts.len(), edges)?)?.with_coords(coords)
}
