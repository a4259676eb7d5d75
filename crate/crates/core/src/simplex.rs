//! Primal network simplex for the balanced transportation problem
//!
//! ```text
//! min Σ c_ij x_ij   s.t.  Σ_j x_ij = a_i,  Σ_i x_ij = b_j,  x ≥ 0
//! ```
//!
//! Sources and sinks are joined through an artificial root by big-M arcs,
//! which give a feasible starting tree. Pivots keep the spanning tree
//! strongly feasible (zero-flow tree arcs point away from the root), which
//! rules out cycling on the heavily degenerate transportation polytope.
//! Entering arcs come from a block search over the real arcs.
//!
//! The tree is small compared to the arc set (`m + n` nodes against `m·n`
//! arcs), so after each pivot the parent pointers and node potentials are
//! rebuilt from scratch by a walk from the root.

use std::collections::VecDeque;

use crate::error::{Error, Result, SolverStatus};

#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Row-major `m × n` flows.
    pub flow: Vec<f64>,
    /// Row duals `α` and column duals `β` with `α_i + β_j ≤ c_ij`, equality on the basis.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

struct Network<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art_cost: f64,
}

impl Network<'_> {
    fn nodes(&self) -> usize {
        self.m + self.n + 1
    }

    fn root(&self) -> usize {
        self.m + self.n
    }

    fn real_arcs(&self) -> usize {
        self.m * self.n
    }

    fn ends(&self, arc: usize) -> (usize, usize) {
        let mn = self.real_arcs();
        if arc < mn {
            (arc / self.n, self.m + arc % self.n)
        } else if arc < mn + self.m {
            (arc - mn, self.root())
        } else {
            (self.root(), self.m + (arc - mn - self.m))
        }
    }

    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.real_arcs() {
            self.cost[arc]
        } else {
            self.art_cost
        }
    }
}

struct Tree {
    arcs: Vec<usize>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl Tree {
    fn rebuild(&mut self, net: &Network<'_>, adj: &mut [Vec<(usize, usize)>]) {
        for a in adj.iter_mut() {
            a.clear();
        }
        for &arc in &self.arcs {
            let (s, t) = net.ends(arc);
            adj[s].push((t, arc));
            adj[t].push((s, arc));
        }
        let root = net.root();
        self.parent.fill(NONE);
        self.parent[root] = root;
        self.pred[root] = NONE;
        self.depth[root] = 0;
        self.pot[root] = 0.0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, arc) in &adj[u] {
                if self.parent[v] != NONE {
                    continue;
                }
                self.parent[v] = u;
                self.pred[v] = arc;
                self.depth[v] = self.depth[u] + 1;
                // reduced cost c + pot[s] − pot[t] vanishes on tree arcs
                let (s, _) = net.ends(arc);
                let c = net.arc_cost(arc);
                self.pot[v] = if s == u { self.pot[u] + c } else { self.pot[u] - c };
                queue.push_back(v);
            }
        }
    }
}

/// Solves the transportation problem exactly up to floating-point rounding.
///
/// `supply` and `demand` must be strictly positive with equal totals (up to
/// rounding); `cost` is the row-major `m × n` cost matrix.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::Malformed(format!(
            "transport problem with {m} sources, {n} sinks and {} costs",
            cost.len()
        )));
    }
    if supply.iter().chain(demand).any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::Solver {
            status: SolverStatus::Infeasible,
            detail: "supplies and demands must be positive".into(),
        });
    }
    let max_cost = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let net = Network {
        m,
        n,
        cost,
        art_cost: (max_cost + 1.0) * (m + n + 1) as f64,
    };
    let nodes = net.nodes();
    let mn = net.real_arcs();

    let mut flow = vec![0.0; mn + m + n];
    for i in 0..m {
        flow[mn + i] = supply[i];
    }
    for j in 0..n {
        flow[mn + m + j] = demand[j];
    }
    let mut tree = Tree {
        arcs: (mn..mn + m + n).collect(),
        parent: vec![NONE; nodes],
        pred: vec![NONE; nodes],
        depth: vec![0; nodes],
        pot: vec![0.0; nodes],
    };
    let mut adj = vec![Vec::new(); nodes];
    tree.rebuild(&net, &mut adj);
    // tree position of each arc, for O(1) replacement
    let mut slot = vec![NONE; mn + m + n];
    for (k, &a) in tree.arcs.iter().enumerate() {
        slot[a] = k;
    }

    let tol = 1e-13 * (max_cost + 1.0) * (m + n) as f64;
    let block = ((mn as f64).sqrt().ceil() as usize).max(16).min(mn);
    let max_pivots = 50 * (m + n) * (m + n) + 10_000;
    let mut next = 0usize;
    let mut pivots = 0usize;

    loop {
        // block search for the entering arc
        let mut entering = NONE;
        let mut best = -tol;
        let mut scanned = 0usize;
        let mut in_block = 0usize;
        while scanned < mn {
            let arc = next;
            next += 1;
            if next == mn {
                next = 0;
            }
            scanned += 1;
            in_block += 1;
            let i = arc / n;
            let j = m + arc % n;
            let rc = cost[arc] + tree.pot[i] - tree.pot[j];
            if rc < best {
                best = rc;
                entering = arc;
            }
            if in_block == block {
                if entering != NONE {
                    break;
                }
                in_block = 0;
            }
        }
        if entering == NONE {
            break;
        }
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver {
                status: SolverStatus::IterationLimit,
                detail: format!("{pivots} pivots on a {m}x{n} problem"),
            });
        }

        let (u, v) = net.ends(entering);
        // apex of the cycle
        let (mut a, mut b) = (u, v);
        while a != b {
            if tree.depth[a] >= tree.depth[b] {
                a = tree.parent[a];
            } else {
                b = tree.parent[b];
            }
        }
        let join = a;

        // Cycle orientation: join → … → u → v → … → join. Among blocking
        // arcs take the last one met along this orientation.
        let mut delta = f64::INFINITY;
        let mut leaving = NONE;
        let mut x = u;
        while x != join {
            let arc = tree.pred[x];
            if net.ends(arc).0 == x && flow[arc] < delta {
                delta = flow[arc];
                leaving = arc;
            }
            x = tree.parent[x];
        }
        let mut x = v;
        while x != join {
            let arc = tree.pred[x];
            if net.ends(arc).1 == x && flow[arc] <= delta {
                delta = flow[arc];
                leaving = arc;
            }
            x = tree.parent[x];
        }
        if leaving == NONE {
            return Err(Error::Solver {
                status: SolverStatus::Infeasible,
                detail: "unbounded pivot cycle".into(),
            });
        }

        if delta > 0.0 {
            flow[entering] += delta;
            let mut x = u;
            while x != join {
                let arc = tree.pred[x];
                if net.ends(arc).1 == x {
                    flow[arc] += delta;
                } else {
                    flow[arc] -= delta;
                }
                x = tree.parent[x];
            }
            let mut x = v;
            while x != join {
                let arc = tree.pred[x];
                if net.ends(arc).0 == x {
                    flow[arc] += delta;
                } else {
                    flow[arc] -= delta;
                }
                x = tree.parent[x];
            }
        }
        flow[leaving] = 0.0;

        let k = slot[leaving];
        tree.arcs[k] = entering;
        slot[leaving] = NONE;
        slot[entering] = k;
        tree.rebuild(&net, &mut adj);
    }

    let residual = flow[mn..].iter().fold(0.0f64, |a, &f| a.max(f));
    let total: f64 = supply.iter().sum();
    if residual > 1e-9 * total.max(1.0) {
        return Err(Error::Solver {
            status: SolverStatus::Infeasible,
            detail: format!("artificial flow {residual} remains; totals differ"),
        });
    }

    flow.truncate(mn);
    let alpha: Vec<f64> = (0..m).map(|i| -tree.pot[i]).collect();
    let beta: Vec<f64> = (0..n).map(|j| tree.pot[m + j]).collect();
    let cost_value = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
    Ok(TransportSolution {
        flow,
        alpha,
        beta,
        cost: cost_value,
        pivots,
    })
}
