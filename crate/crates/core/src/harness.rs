//! Refinement families `(X_n, f_n, ε_n)` converging to a fine reference
//! space, and the convergence experiments run on them.
//!
//! The reference space stands in for the limit space. Level data is always
//! manufactured by pullback (`g^n = g ∘ f_n`, measures pushed through the
//! ε-inverse `f'_n`), so the hypotheses of the stability statements hold by
//! construction and only their conclusions are measured.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hopf_lax::{hopf_lax, Potential};
use crate::kantorovich::{
    lipschitz_wrt_half_dsq, normalize_maximizer, pushforward, solve_dual, solve_dual_perturbed,
    w2_exact, LipschitzReport, Measure,
};
use crate::maps::{certify, epsilon_inverse, IsometryCertificate, MetricMap};
use crate::metric::{
    geodesicity_defect, make_circle, make_interval, make_sierpinski, sierpinski_lattice,
    SpaceRef,
};

/// Consecutive sup-errors may grow by at most this factor.
pub const MONOTONE_SLACK: f64 = 1.5;
/// Required overall decrease once ε has shrunk by [`EPS_SHRINK`].
pub const TOTAL_DECREASE: f64 = 4.0;
pub const EPS_SHRINK: f64 = 8.0;
/// Reference mesh must be at least this much finer than every level.
pub const REF_RATIO: usize = 8;
/// Time grid for the uniform-boundedness check.
pub const S4_TIMES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// Absolute floor below which errors count as rounding noise.
pub const NOISE_FLOOR: f64 = 1e-9;
/// Cost perturbation and comparison tolerance for the uniqueness probe.
pub const UNIQUENESS_PERTURBATION: f64 = 1e-7;
pub const UNIQUENESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Circle,
    Interval,
    Sierpinski,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(FamilyKind::Circle),
            "interval" => Ok(FamilyKind::Interval),
            "sierpinski" => Ok(FamilyKind::Sierpinski),
            other => Err(Error::Parameter(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    /// Generator parameter (point count, or gasket level).
    pub param: usize,
    pub space: SpaceRef,
    pub to_limit: MetricMap,
    pub cert: IsometryCertificate,
}

#[derive(Debug, Clone)]
pub struct RefinementFamily {
    pub kind: FamilyKind,
    pub levels: Vec<Level>,
    pub limit: SpaceRef,
}

impl RefinementFamily {
    fn assemble(
        kind: FamilyKind,
        limit: SpaceRef,
        parts: Vec<(usize, SpaceRef, Vec<usize>)>,
    ) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Parameter("a family needs at least one level".into()));
        }
        let levels = parts
            .into_iter()
            .map(|(param, space, assign)| {
                let to_limit = MetricMap::new(space.clone(), limit.clone(), assign)?;
                let cert = certify(&to_limit);
                Ok(Level {
                    param,
                    space,
                    to_limit,
                    cert,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for w in levels.windows(2) {
            if !(w[1].cert.epsilon < w[0].cert.epsilon) {
                return Err(Error::Parameter(format!(
                    "epsilon must strictly decrease along levels: {} (level {}) then {} (level {})",
                    w[0].cert.epsilon, w[0].param, w[1].cert.epsilon, w[1].param
                )));
            }
        }
        Ok(Self {
            kind,
            levels,
            limit,
        })
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.cert.epsilon).collect()
    }
}

/// Circles `C_level` included as every `(n_ref / level)`-th vertex of `C_{n_ref}`.
///
/// Each level must divide `n_ref`; apart from a level equal to `n_ref`
/// itself, `n_ref` must be at least [`REF_RATIO`] times every level.
pub fn build_circle_family(levels: &[usize], n_ref: usize) -> Result<RefinementFamily> {
    let limit = make_circle(n_ref)?.into_ref();
    let mut parts = Vec::new();
    for &lv in levels {
        if lv == 0 || n_ref % lv != 0 {
            return Err(Error::Parameter(format!("level {lv} does not divide {n_ref}")));
        }
        if lv != n_ref && n_ref < REF_RATIO * lv {
            return Err(Error::Parameter(format!(
                "reference {n_ref} is not {REF_RATIO}x finer than level {lv}"
            )));
        }
        let space = if lv == n_ref { limit.clone() } else { make_circle(lv)?.into_ref() };
        let step = n_ref / lv;
        parts.push((lv, space, (0..lv).map(|i| i * step).collect()));
    }
    RefinementFamily::assemble(FamilyKind::Circle, limit, parts)
}

/// Uniform grids on `[0, length]`; level `n` sits inside the reference grid
/// when `(n - 1)` divides `(n_ref - 1)`.
pub fn build_interval_family(
    levels: &[usize],
    n_ref: usize,
    length: f64,
) -> Result<RefinementFamily> {
    let limit = make_interval(n_ref, length)?.into_ref();
    let mut parts = Vec::new();
    for &lv in levels {
        if lv < 2 || (n_ref - 1) % (lv - 1) != 0 {
            return Err(Error::Parameter(format!(
                "level {lv}: {} intervals do not divide {}",
                lv.saturating_sub(1),
                n_ref - 1
            )));
        }
        if lv != n_ref && n_ref - 1 < REF_RATIO * (lv - 1) {
            return Err(Error::Parameter(format!(
                "reference {n_ref} is not {REF_RATIO}x finer than level {lv}"
            )));
        }
        let space = if lv == n_ref { limit.clone() } else { make_interval(lv, length)?.into_ref() };
        let step = (n_ref - 1) / (lv - 1);
        parts.push((lv, space, (0..lv).map(|i| i * step).collect()));
    }
    RefinementFamily::assemble(FamilyKind::Interval, limit, parts)
}

/// Gasket graphs at the given levels, included vertex-wise into level
/// `max_level`.
pub fn build_sierpinski_family(levels: &[u32], max_level: u32) -> Result<RefinementFamily> {
    let limit = make_sierpinski(max_level)?.into_ref();
    let fine = sierpinski_lattice(max_level);
    let index: std::collections::HashMap<(u64, u64), usize> =
        fine.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut parts = Vec::new();
    for &lv in levels {
        if lv > max_level {
            return Err(Error::Parameter(format!("level {lv} exceeds reference level {max_level}")));
        }
        // 2^3 = REF_RATIO
        if lv != max_level && max_level < lv + 3 {
            return Err(Error::Parameter(format!(
                "reference level {max_level} is not {REF_RATIO}x finer than level {lv}"
            )));
        }
        let space = if lv == max_level { limit.clone() } else { make_sierpinski(lv)?.into_ref() };
        let scale = 1u64 << (max_level - lv);
        let assign = sierpinski_lattice(lv)
            .into_iter()
            .map(|(a, b)| index[&(a * scale, b * scale)])
            .collect();
        parts.push((lv as usize, space, assign));
    }
    RefinementFamily::assemble(FamilyKind::Sierpinski, limit, parts)
}

/// `g ∘ f`, a potential on the source of `f`.
pub fn pullback(g: &Potential, f: &MetricMap) -> Result<Potential> {
    Potential::from_fn(f.source().clone(), |i| g.at(f.apply(i)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Reported-only checks do not affect [`ConvergenceReport::passed`].
    pub asserted: bool,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn asserted(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            asserted: true,
            passed,
            detail,
        }
    }

    fn reported(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            asserted: false,
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelAssumptions {
    pub param: usize,
    pub epsilon: f64,
    pub lipschitz: f64,
    pub lipschitz_ok: bool,
    /// `max_t sup_x |Q_t g^n(x)|` over [`S4_TIMES`].
    pub s4_sup: f64,
    pub s4_ok: bool,
    /// `max_x |g^n(f'_n(x)) − g(x)|`.
    pub s5_gap: f64,
    pub s5_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `p ↦ ½(p⁺)²` is nondecreasing on the sampling grid.
    pub s2_monotone: bool,
    /// The Hamiltonian does not depend on the level, so uniform convergence is exact.
    pub s3_n_independent: bool,
    pub levels: Vec<LevelAssumptions>,
    pub s5_decreasing: bool,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.s2_monotone
            && self.s3_n_independent
            && self.s5_decreasing
            && self.levels.iter().all(|l| l.lipschitz_ok && l.s4_ok && l.s5_ok)
    }
}

/// `H(p) = ½ (p⁺)²`, extended by a constant below zero.
pub fn hamiltonian(p: f64) -> f64 {
    let q = p.max(0.0);
    0.5 * q * q
}

fn non_increasing(errors: &[f64], slack: f64) -> bool {
    errors
        .windows(2)
        .all(|w| w[1] <= slack * w[0] + NOISE_FLOOR)
}

/// Checks (S2)–(S5) and (S5)′ for `g^n = g_limit ∘ f_n` with the Hopf–Lax
/// Hamiltonian.
pub fn check_assumptions(
    family: &RefinementFamily,
    g_limit: &Potential,
    l_expected: f64,
) -> Result<AssumptionReport> {
    if !crate::metric::FiniteMetricSpace::same_as(g_limit.space(), &family.limit) {
        return Err(Error::SpaceMismatch("g_limit must live on the limit space".into()));
    }
    let grid: Vec<f64> = (0..=2000).map(|k| -10.0 + 0.01 * k as f64).collect();
    let s2_monotone = grid.windows(2).all(|w| hamiltonian(w[0]) <= hamiltonian(w[1]));
    let g_max = g_limit.sup_abs();

    let levels = family
        .levels
        .iter()
        .map(|lv| {
            let eps = lv.cert.epsilon;
            let gn = pullback(g_limit, &lv.to_limit)?;
            let lipschitz = gn.lipschitz_constant();
            let mut s4_sup = 0.0f64;
            for t in S4_TIMES {
                s4_sup = s4_sup.max(hopf_lax(&gn, t)?.sup_abs());
            }
            let inv = epsilon_inverse(&lv.to_limit)?;
            let s5_gap = (0..family.limit.len())
                .map(|x| (gn.at(inv.apply(x)) - g_limit.at(x)).abs())
                .fold(0.0, f64::max);
            Ok(LevelAssumptions {
                param: lv.param,
                epsilon: eps,
                lipschitz,
                lipschitz_ok: lipschitz <= l_expected * (1.0 + eps) + 1e-12,
                s4_sup,
                s4_ok: s4_sup <= g_max + 1e-12,
                s5_gap,
                s5_ok: s5_gap <= l_expected * (lv.cert.codensity + 4.0 * eps) + 1e-12,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = levels.iter().map(|l| l.s5_gap).collect();
    Ok(AssumptionReport {
        s2_monotone,
        s3_n_independent: true,
        s5_decreasing: non_increasing(&gaps, MONOTONE_SLACK),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub n_points: usize,
    pub epsilon: f64,
    pub geodesicity_defect: f64,
    pub sup_error: f64,
    pub dual_value: Option<f64>,
    pub w2_gap: Option<f64>,
    pub wall_ms: f64,
}

/// Extra per-level quantities of a Kantorovich run.
#[derive(Debug, Clone, PartialEq)]
pub struct KantorovichLevel {
    pub level: usize,
    pub value_error: f64,
    pub value_budget: f64,
    pub normalization_constant: f64,
    pub lipschitz: LipschitzReport,
    pub potential_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub records: Vec<LevelRecord>,
    /// Least-squares slope of `ln sup_error` against `ln ε`.
    pub loglog_slope: Option<f64>,
    pub checks: Vec<Check>,
    /// Present for Kantorovich runs.
    pub kantorovich: Vec<KantorovichLevel>,
    pub limit_half_w2_squared: Option<f64>,
    pub maximizer_unique: Option<bool>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.asserted).all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.asserted && !c.passed).collect()
    }

    pub fn sup_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sup_error).collect()
    }
}

fn loglog_slope(records: &[LevelRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.epsilon > 0.0 && r.sup_error > 0.0)
        .map(|r| (r.epsilon.ln(), r.sup_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn rate_checks(records: &[LevelRecord], what: &str) -> Vec<Check> {
    let errs: Vec<f64> = records.iter().map(|r| r.sup_error).collect();
    let mut checks = vec![Check::asserted(
        &format!("{what} non-increasing"),
        non_increasing(&errs, MONOTONE_SLACK),
        format!("errors {errs:?}, slack {MONOTONE_SLACK}x"),
    )];
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        if last.epsilon > 0.0 && first.epsilon / last.epsilon >= EPS_SHRINK
            || last.epsilon == 0.0 && first.epsilon > 0.0
        {
            checks.push(Check::asserted(
                &format!("{what} total decrease"),
                last.sup_error <= first.sup_error / TOTAL_DECREASE,
                format!(
                    "last {} vs first {} / {TOTAL_DECREASE} (eps {} -> {})",
                    last.sup_error, first.sup_error, first.epsilon, last.epsilon
                ),
            ));
        }
    }
    checks
}

/// Uniform convergence of `Q_t g^n ∘ f'_n` to `Q_t g` on the reference space.
pub fn run_hopflax_stability(
    family: &RefinementFamily,
    g_limit: &Potential,
    t: f64,
) -> Result<ConvergenceReport> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("stability run needs t > 0, got {t}")));
    }
    if !crate::metric::FiniteMetricSpace::same_as(g_limit.space(), &family.limit) {
        return Err(Error::SpaceMismatch("g_limit must live on the limit space".into()));
    }
    let u_limit = hopf_lax(g_limit, t)?;
    let records = family
        .levels
        .par_iter()
        .map(|lv| {
            let start = Instant::now();
            let gn = pullback(g_limit, &lv.to_limit)?;
            let un = hopf_lax(&gn, t)?;
            let inv = epsilon_inverse(&lv.to_limit)?;
            let sup_error = (0..family.limit.len())
                .map(|x| (un.at(inv.apply(x)) - u_limit.at(x)).abs())
                .fold(0.0, f64::max);
            let defect = geodesicity_defect(&lv.space);
            Ok(LevelRecord {
                level: lv.param,
                n_points: lv.space.len(),
                epsilon: lv.cert.epsilon,
                geodesicity_defect: defect,
                sup_error,
                dual_value: None,
                w2_gap: None,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let checks = rate_checks(&records, "sup error");
    Ok(ConvergenceReport {
        experiment: format!("hopf-lax t={t}"),
        loglog_slope: loglog_slope(&records),
        records,
        checks,
        kantorovich: Vec::new(),
        limit_half_w2_squared: None,
        maximizer_unique: None,
    })
}

/// Convergence of level maximizers of the dual Kantorovich problem, with
/// level measures obtained by pushing the limit measures through `f'_n`.
pub fn run_kantorovich_stability(
    family: &RefinementFamily,
    mu_limit: &Measure,
    nu_limit: &Measure,
    z: usize,
) -> Result<ConvergenceReport> {
    let limit = &family.limit;
    for m in [mu_limit, nu_limit] {
        if !crate::metric::FiniteMetricSpace::same_as(m.space(), limit) {
            return Err(Error::SpaceMismatch("measures must live on the limit space".into()));
        }
    }
    limit.check_index(z)?;
    let id = MetricMap::identity(limit.clone());
    let limit_dual = solve_dual(mu_limit, nu_limit)?;
    let target = 0.5 * limit_dual.w2_squared;
    let (phi_bar, _) = normalize_maximizer(&limit_dual.phi, &id, z)?;
    let perturbed = solve_dual_perturbed(mu_limit, nu_limit, UNIQUENESS_PERTURBATION)?;
    let (perturbed, _) = normalize_maximizer(&perturbed, &id, z)?;
    let unique = perturbed.sup_distance(&phi_bar)? <= UNIQUENESS_TOL;

    let per_level = family
        .levels
        .par_iter()
        .map(|lv| {
            let start = Instant::now();
            let inv = epsilon_inverse(&lv.to_limit)?;
            let mu_n = pushforward(&inv, mu_limit)?;
            let nu_n = pushforward(&inv, nu_limit)?;
            let (gap_mu, _) = w2_exact(&pushforward(&lv.to_limit, &mu_n)?, mu_limit)?;
            let (gap_nu, _) = w2_exact(&pushforward(&lv.to_limit, &nu_n)?, nu_limit)?;
            let w2_gap = gap_mu.max(gap_nu);
            let sol = solve_dual(&mu_n, &nu_n)?;
            let (phi_n, c_n) = normalize_maximizer(&sol.phi, &inv, z)?;
            let lipschitz = lipschitz_wrt_half_dsq(&phi_n);
            let potential_distance = (0..limit.len())
                .map(|x| (phi_n.at(inv.apply(x)) - phi_bar.at(x)).abs())
                .fold(0.0, f64::max);
            let defect = geodesicity_defect(&lv.space);
            let value_error = (sol.dual_value - target).abs();
            let record = LevelRecord {
                level: lv.param,
                n_points: lv.space.len(),
                epsilon: lv.cert.epsilon,
                geodesicity_defect: defect,
                sup_error: potential_distance,
                dual_value: Some(sol.dual_value),
                w2_gap: Some(w2_gap),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            let extra = KantorovichLevel {
                level: lv.param,
                value_error,
                value_budget: lipschitz.metric * (lv.cert.epsilon + w2_gap),
                normalization_constant: c_n,
                lipschitz,
                potential_distance,
            };
            Ok((record, extra))
        })
        .collect::<Result<Vec<_>>>()?;
    let (records, kantorovich): (Vec<_>, Vec<_>) = per_level.into_iter().unzip();

    let mut checks = Vec::new();
    let value_errors: Vec<f64> = kantorovich.iter().map(|k| k.value_error).collect();
    checks.push(Check::asserted(
        "dual value converges",
        non_increasing(&value_errors, MONOTONE_SLACK),
        format!("|dual_n - W2^2/2| = {value_errors:?}"),
    ));
    let over: Vec<String> = records
        .iter()
        .zip(&kantorovich)
        .filter(|(r, k)| r.dual_value.unwrap_or(0.0) > target + k.value_budget + NOISE_FLOOR)
        .map(|(r, _)| r.level.to_string())
        .collect();
    checks.push(Check::asserted(
        "dual value within budget",
        over.is_empty(),
        format!("levels exceeding W2^2/2 + Lip*(eps + w2 gap): {over:?}"),
    ));
    let gaps: Vec<f64> = records.iter().filter_map(|r| r.w2_gap).collect();
    checks.push(Check::asserted(
        "pushforward gap decreasing",
        non_increasing(&gaps, MONOTONE_SLACK),
        format!("W2 gaps {gaps:?}"),
    ));
    let within_diam = kantorovich.iter().all(|k| k.lipschitz.metric_within_diameter());
    checks.push(Check::asserted(
        "metric Lipschitz <= diam",
        within_diam,
        format!(
            "Lip = {:?}",
            kantorovich.iter().map(|k| k.lipschitz.metric).collect::<Vec<_>>()
        ),
    ));
    checks.push(Check::reported(
        "Lipschitz wrt d^2/2 <= 1",
        kantorovich.iter().all(|k| k.lipschitz.half_dsq_within_one()),
        format!(
            "ratios {:?}",
            kantorovich.iter().map(|k| k.lipschitz.half_dsq).collect::<Vec<_>>()
        ),
    ));
    checks.push(Check::reported(
        "metric Lipschitz <= diam/2",
        kantorovich.iter().all(|k| k.lipschitz.metric_within_half_diameter()),
        format!(
            "Lip = {:?}, diam = {:?}",
            kantorovich.iter().map(|k| k.lipschitz.metric).collect::<Vec<_>>(),
            kantorovich.iter().map(|k| k.lipschitz.diameter).collect::<Vec<_>>()
        ),
    ));
    let dists: Vec<f64> = records.iter().map(|r| r.sup_error).collect();
    let decreasing = non_increasing(&dists, MONOTONE_SLACK);
    let detail = format!("normalized potential distances {dists:?}, unique limit maximizer: {unique}");
    checks.push(if unique {
        Check::asserted("potentials converge", decreasing, detail)
    } else {
        Check::reported("potentials converge", decreasing, detail)
    });

    Ok(ConvergenceReport {
        experiment: "kantorovich".into(),
        loglog_slope: loglog_slope(&records),
        records,
        checks,
        kantorovich,
        limit_half_w2_squared: Some(target),
        maximizer_unique: Some(unique),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

pub const CSV_HEADER: &str = "level,n_points,epsilon,geodesicity_defect,sup_error,dual_value,w2_gap,wall_ms";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_report(report: &ConvergenceReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &report.records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{:.3}",
                    r.level,
                    r.n_points,
                    r.epsilon,
                    r.geodesicity_defect,
                    r.sup_error,
                    opt(r.dual_value),
                    opt(r.w2_gap),
                    r.wall_ms
                );
            }
        }
        ReportFormat::Table => {
            let _ = writeln!(out, "experiment: {}", report.experiment);
            let _ = writeln!(
                out,
                "{:>7} {:>8} {:>13} {:>13} {:>13} {:>13} {:>13} {:>10}",
                "level", "points", "epsilon", "geo_defect", "sup_error", "dual_value", "w2_gap", "wall_ms"
            );
            let cell = |v: Option<f64>| v.map(|x| format!("{x:13.6e}")).unwrap_or_else(|| format!("{:>13}", "-"));
            for r in &report.records {
                let _ = writeln!(
                    out,
                    "{:>7} {:>8} {:13.6e} {:13.6e} {:13.6e} {} {} {:10.1}",
                    r.level,
                    r.n_points,
                    r.epsilon,
                    r.geodesicity_defect,
                    r.sup_error,
                    cell(r.dual_value),
                    cell(r.w2_gap),
                    r.wall_ms
                );
            }
            if let Some(s) = report.loglog_slope {
                let _ = writeln!(out, "log-log slope of sup_error vs epsilon: {s:.4}");
            }
            if let Some(v) = report.limit_half_w2_squared {
                let _ = writeln!(out, "reference W2^2/2: {v}");
            }
            for c in &report.checks {
                let tag = match (c.asserted, c.passed) {
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                    (false, true) => "ok  ",
                    (false, false) => "note",
                };
                let _ = writeln!(out, "[{tag}] {}: {}", c.name, c.detail);
            }
        }
    }
    out
}

/// CSV text with the `wall_ms` column removed, for reproducibility checks.
pub fn strip_wall_ms(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
