//! Exact discrete optimal transport with quadratic cost: W₂, optimal
//! couplings, and maximizers of the dual Kantorovich problem
//!
//! ```text
//! max_φ  Σ_x Q₁φ(x) ν(x) − Σ_x φ(x) μ(x)   ( = ½ W₂(μ, ν)² )
//! ```
//!
//! The linear program is solved with cost `d²` by [`crate::simplex`]; the
//! factor ½ enters only when LP duals are turned into Kantorovich
//! potentials.

use crate::error::{Error, Result, SolverStatus};
use crate::hopf_lax::{c_transform, double_transform, Potential};
use crate::maps::MetricMap;
use crate::metric::{FiniteMetricSpace, SpaceRef};
use crate::simplex::solve_transport;

/// Tolerance on `Σ weights = 1`.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Measure {
    space: SpaceRef,
    weights: Vec<f64>,
}

fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl Measure {
    pub fn new(space: SpaceRef, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::Malformed(format!(
                "{} weights for a space with {} points",
                weights.len(),
                space.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Malformed(format!("weight {i} is {}", weights[i])));
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Malformed(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { space, weights })
    }

    pub fn uniform(space: SpaceRef) -> Self {
        let n = space.len();
        let weights = vec![1.0 / n as f64; n];
        Self { space, weights }
    }

    pub fn delta(space: SpaceRef, at: usize) -> Result<Self> {
        space.check_index(at)?;
        let mut weights = vec![0.0; space.len()];
        weights[at] = 1.0;
        Ok(Self { space, weights })
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// `Σ_x f(x) μ(x)`.
    pub fn integrate(&self, f: &Potential) -> Result<f64> {
        if !FiniteMetricSpace::same_as(&self.space, f.space()) {
            return Err(Error::SpaceMismatch("measure and potential".into()));
        }
        Ok(self
            .weights
            .iter()
            .zip(f.values())
            .map(|(w, v)| w * v)
            .sum())
    }
}

fn same_space(mu: &Measure, nu: &Measure) -> Result<()> {
    if FiniteMetricSpace::same_as(&mu.space, &nu.space) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch("transport needs both measures on one space".into()))
    }
}

/// Coupling `π` on `X × X`, stored densely.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    space: SpaceRef,
    coupling: Vec<f64>,
}

impl TransportPlan {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.space.len() + j]
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn source_marginal(&self) -> Vec<f64> {
        let n = self.space.len();
        (0..n)
            .map(|i| neumaier_sum(self.coupling[i * n..(i + 1) * n].iter().copied()))
            .collect()
    }

    pub fn target_marginal(&self) -> Vec<f64> {
        let n = self.space.len();
        (0..n)
            .map(|j| neumaier_sum((0..n).map(|i| self.coupling[i * n + j])))
            .collect()
    }

    /// Largest deviation of either marginal from the given measures.
    pub fn marginal_error(&self, mu: &Measure, nu: &Measure) -> f64 {
        let row = self
            .source_marginal()
            .iter()
            .zip(&mu.weights)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let col = self
            .target_marginal()
            .iter()
            .zip(&nu.weights)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        row.max(col)
    }

    /// `Σ π(x, y) d(x, y)²`.
    pub fn cost(&self) -> f64 {
        let n = self.space.len();
        let mut total = 0.0;
        for i in 0..n {
            let r = self.space.row(i);
            for j in 0..n {
                let p = self.coupling[i * n + j];
                if p != 0.0 {
                    total += p * r[j] * r[j];
                }
            }
        }
        total
    }
}

/// LP optimum on the supports together with its duals.
struct ExactTransport {
    w2_squared: f64,
    plan: TransportPlan,
    nu_support: Vec<usize>,
    /// Column duals of the `d²` problem, one per `nu_support` entry.
    beta: Vec<f64>,
}

fn solve_exact(mu: &Measure, nu: &Measure, perturb: Option<f64>) -> Result<ExactTransport> {
    same_space(mu, nu)?;
    let s = &mu.space;
    let (rows, cols) = (mu.support(), nu.support());
    let (m, n) = (rows.len(), cols.len());
    let mut cost = Vec::with_capacity(m * n);
    for &i in &rows {
        let r = s.row(i);
        for &j in &cols {
            cost.push(r[j] * r[j]);
        }
    }
    if let Some(scale) = perturb {
        // deterministic multiplicative jitter in [1, 1 + scale)
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        for c in cost.iter_mut() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            *c *= 1.0 + scale * (state >> 11) as f64 / (1u64 << 53) as f64;
        }
    }
    let supply: Vec<f64> = rows.iter().map(|&i| mu.weights[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| nu.weights[j]).collect();
    let sol = solve_transport(&supply, &demand, &cost)?;

    // complementary slackness against the LP duals
    let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c));
    let tol = 1e-9 * scale;
    for a in 0..m {
        for b in 0..n {
            let rc = cost[a * n + b] - sol.alpha[a] - sol.beta[b];
            let f = sol.flow[a * n + b];
            if rc < -tol || (f > 0.0 && rc > tol) {
                return Err(Error::Solver {
                    status: SolverStatus::NotOptimal,
                    detail: format!("reduced cost {rc} with flow {f} at ({}, {})", rows[a], cols[b]),
                });
            }
        }
    }

    let npts = s.len();
    let mut coupling = vec![0.0; npts * npts];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            coupling[i * npts + j] = sol.flow[a * n + b];
        }
    }
    let plan = TransportPlan {
        space: s.clone(),
        coupling,
    };
    Ok(ExactTransport {
        w2_squared: plan.cost().max(0.0),
        plan,
        nu_support: cols,
        beta: sol.beta,
    })
}

/// `W₂(μ, ν)` and an optimal coupling for the cost `d²`.
pub fn w2_exact(mu: &Measure, nu: &Measure) -> Result<(f64, TransportPlan)> {
    let e = solve_exact(mu, nu, None)?;
    Ok((e.w2_squared.sqrt(), e.plan))
}

/// `Σ Q₁φ ν − Σ φ μ`.
pub fn dual_value(phi: &Potential, mu: &Measure, nu: &Measure) -> Result<f64> {
    same_space(mu, nu)?;
    let q1 = c_transform(phi);
    Ok(nu.integrate(&q1)? - mu.integrate(phi)?)
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub phi: Potential,
    pub phi_c: Potential,
    pub dual_value: f64,
    /// `½W₂² − dual_value`; nonnegative up to rounding.
    pub duality_gap: f64,
    pub w2_squared: f64,
    /// Number of d²/2-convexification passes applied.
    pub passes: usize,
}

/// Relative duality-gap tolerance.
pub const GAP_TOL: f64 = 1e-9;

/// d²/2-convex potential `φ(x) = max_{y ∈ supp ν} β(y)/2 − ½ d(x, y)²`
/// built from the LP column duals. It attains the LP dual objective and is
/// defined on every point, including zero-weight ones.
fn potential_from_duals(space: &SpaceRef, e: &ExactTransport) -> Result<Potential> {
    Potential::from_fn(space.clone(), |x| {
        let r = space.row(x);
        e.nu_support
            .iter()
            .zip(&e.beta)
            .map(|(&y, &b)| 0.5 * b - 0.5 * r[y] * r[y])
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

fn dual_from_exact(mu: &Measure, nu: &Measure, e: &ExactTransport) -> Result<DualSolution> {
    let mut phi = potential_from_duals(&mu.space, e)?;
    let target = 0.5 * e.w2_squared;
    let tol = GAP_TOL * 1f64.max(e.w2_squared);
    for passes in 1..=2 {
        phi = double_transform(&phi);
        let value = dual_value(&phi, mu, nu)?;
        let gap = target - value;
        if gap.abs() <= tol {
            return Ok(DualSolution {
                phi_c: c_transform(&phi),
                phi,
                dual_value: value,
                duality_gap: gap,
                w2_squared: e.w2_squared,
                passes,
            });
        }
        if passes == 2 {
            return Err(Error::Solver {
                status: SolverStatus::DualityGap,
                detail: format!("gap {gap} after {passes} convexification passes"),
            });
        }
    }
    unreachable!()
}

/// A d²/2-convex maximizer of the dual problem, with its value and gap.
pub fn solve_dual(mu: &Measure, nu: &Measure) -> Result<DualSolution> {
    let e = solve_exact(mu, nu, None)?;
    dual_from_exact(mu, nu, &e)
}

/// Dual maximizer for the cost `d²` multiplied entrywise by a deterministic
/// factor in `[1, 1 + scale)`. Used to probe whether the optimal dual face
/// is a single point up to constants.
pub fn solve_dual_perturbed(mu: &Measure, nu: &Measure, scale: f64) -> Result<Potential> {
    let e = solve_exact(mu, nu, Some(scale))?;
    let phi = potential_from_duals(&mu.space, &e)?;
    Ok(double_transform(&phi))
}

/// Shifts `phi` so it vanishes at `f_prime(z)`; returns the shift `c`.
pub fn normalize_maximizer(
    phi: &Potential,
    f_prime: &MetricMap,
    z: usize,
) -> Result<(Potential, f64)> {
    f_prime.source().check_index(z)?;
    if !FiniteMetricSpace::same_as(f_prime.target(), phi.space()) {
        return Err(Error::SpaceMismatch(
            "normalization map must land in the potential's space".into(),
        ));
    }
    let c = phi.at(f_prime.apply(z));
    Ok((phi.shifted(-c), c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    /// `max |φ(x) − φ(y)| / (½ d(x,y)²)`.
    pub half_dsq: f64,
    /// `max |φ(x) − φ(y)| / d(x,y)`.
    pub metric: f64,
    pub diameter: f64,
}

impl LipschitzReport {
    pub fn half_dsq_within_one(&self) -> bool {
        self.half_dsq <= 1.0 + 1e-9
    }

    pub fn metric_within_half_diameter(&self) -> bool {
        self.metric <= 0.5 * self.diameter + 1e-9
    }

    pub fn metric_within_diameter(&self) -> bool {
        self.metric <= self.diameter + 1e-9
    }
}

pub fn lipschitz_wrt_half_dsq(phi: &Potential) -> LipschitzReport {
    let s = phi.space();
    let v = phi.values();
    let mut half_dsq = 0.0f64;
    for i in 0..s.len() {
        let r = s.row(i);
        for j in (i + 1)..s.len() {
            half_dsq = half_dsq.max((v[i] - v[j]).abs() / (0.5 * r[j] * r[j]));
        }
    }
    LipschitzReport {
        half_dsq,
        metric: phi.lipschitz_constant(),
        diameter: s.diameter(),
    }
}

/// Image measure `(f)_# μ`.
pub fn pushforward(f: &MetricMap, mu: &Measure) -> Result<Measure> {
    if !FiniteMetricSpace::same_as(f.source(), &mu.space) {
        return Err(Error::SpaceMismatch("measure must live on the map's source".into()));
    }
    let nt = f.target().len();
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); nt];
    for (i, &w) in mu.weights.iter().enumerate() {
        if w != 0.0 {
            parts[f.apply(i)].push(w);
        }
    }
    let weights = parts.into_iter().map(neumaier_sum).collect();
    Measure::new(f.target().clone(), weights)
}
