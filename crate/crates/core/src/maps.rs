//! ε-isometries between finite metric spaces, their certificates, and the
//! nearest-image ε-inverse.

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, SpaceRef};

/// Point assignment `source → target`; `assign[i]` is the image of point `i`.
#[derive(Debug, Clone)]
pub struct MetricMap {
    source: SpaceRef,
    target: SpaceRef,
    assign: Vec<usize>,
}

impl MetricMap {
    pub fn new(source: SpaceRef, target: SpaceRef, assign: Vec<usize>) -> Result<Self> {
        if assign.len() != source.len() {
            return Err(Error::Malformed(format!(
                "map has {} entries for a source with {} points",
                assign.len(),
                source.len()
            )));
        }
        if let Some(&bad) = assign.iter().find(|&&j| j >= target.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: target.len(),
            });
        }
        Ok(Self {
            source,
            target,
            assign,
        })
    }

    pub fn identity(space: SpaceRef) -> Self {
        let assign = (0..space.len()).collect();
        Self {
            source: space.clone(),
            target: space,
            assign,
        }
    }

    pub fn source(&self) -> &SpaceRef {
        &self.source
    }

    pub fn target(&self) -> &SpaceRef {
        &self.target
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.assign[i]
    }

    /// Composition `other ∘ self`.
    pub fn then(&self, other: &MetricMap) -> Result<MetricMap> {
        if !FiniteMetricSpace::same_as(&self.target, &other.source) {
            return Err(Error::SpaceMismatch(
                "composition needs the first map's target to be the second map's source".into(),
            ));
        }
        let assign = self.assign.iter().map(|&j| other.assign[j]).collect();
        MetricMap::new(self.source.clone(), other.target.clone(), assign)
    }
}

/// Both halves of the ε-isometry condition with the points that attain them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryCertificate {
    pub distortion: f64,
    pub codensity: f64,
    pub epsilon: f64,
    pub worst_pair: (usize, usize),
    pub worst_point: usize,
}

fn distortion_witness(f: &MetricMap) -> (f64, (usize, usize)) {
    let (s, t) = (&f.source, &f.target);
    let mut worst = 0.0;
    let mut pair = (0, 0);
    for i in 0..s.len() {
        let ti = t.row(f.assign[i]);
        let si = s.row(i);
        for j in (i + 1)..s.len() {
            let e = (ti[f.assign[j]] - si[j]).abs();
            if e > worst {
                worst = e;
                pair = (i, j);
            }
        }
    }
    (worst, pair)
}

fn image_points(f: &MetricMap) -> Vec<usize> {
    let mut seen = vec![false; f.target.len()];
    let mut img = Vec::new();
    for &j in &f.assign {
        if !seen[j] {
            seen[j] = true;
            img.push(j);
        }
    }
    img.sort_unstable();
    img
}

fn codensity_witness(f: &MetricMap) -> (f64, usize) {
    let img = image_points(f);
    let t = &f.target;
    let mut worst = 0.0;
    let mut point = 0;
    for y in 0..t.len() {
        let ry = t.row(y);
        let near = img.iter().map(|&j| ry[j]).fold(f64::INFINITY, f64::min);
        if near > worst {
            worst = near;
            point = y;
        }
    }
    (worst, point)
}

/// `max_{i,j} |d_T(f(i), f(j)) − d_S(i, j)|`.
pub fn distortion(f: &MetricMap) -> f64 {
    distortion_witness(f).0
}

/// `max_y min_i d_T(y, f(i))`, the Hausdorff distance from the image to
/// the whole target.
pub fn codensity(f: &MetricMap) -> f64 {
    codensity_witness(f).0
}

pub fn certify(f: &MetricMap) -> IsometryCertificate {
    let (distortion, worst_pair) = distortion_witness(f);
    let (codensity, worst_point) = codensity_witness(f);
    IsometryCertificate {
        distortion,
        codensity,
        epsilon: distortion.max(codensity),
        worst_pair,
        worst_point,
    }
}

/// Index of the source point whose image is nearest to target point `y`,
/// lowest index on ties.
pub fn approximate_point(f: &MetricMap, y: usize) -> Result<usize> {
    f.target.check_index(y)?;
    if f.source.is_empty() {
        return Err(Error::Parameter("map has an empty source".into()));
    }
    let ry = f.target.row(y);
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &j) in f.assign.iter().enumerate() {
        if ry[j] < best_d {
            best_d = ry[j];
            best = i;
        }
    }
    Ok(best)
}

/// How far a candidate inverse is from inverting `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseBounds {
    /// ε of `f` itself.
    pub epsilon: f64,
    /// Certificate of the inverse, expected ≤ 4ε.
    pub inverse: IsometryCertificate,
    /// `max_i d_S(f'(f(i)), i)`, expected ≤ 3ε.
    pub source_roundtrip: f64,
    /// `max_y d_T(f(f'(y)), y)`, expected ≤ ε.
    pub target_roundtrip: f64,
}

impl InverseBounds {
    pub fn measure(f: &MetricMap, f_prime: &MetricMap) -> Self {
        let epsilon = certify(f).epsilon;
        let inverse = certify(f_prime);
        let source_roundtrip = (0..f.source.len())
            .map(|i| f.source.d(f_prime.apply(f.apply(i)), i))
            .fold(0.0, f64::max);
        let target_roundtrip = (0..f.target.len())
            .map(|y| f.target.d(f.apply(f_prime.apply(y)), y))
            .fold(0.0, f64::max);
        Self {
            epsilon,
            inverse,
            source_roundtrip,
            target_roundtrip,
        }
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.inverse.epsilon <= 4.0 * self.epsilon + slack
            && self.source_roundtrip <= 3.0 * self.epsilon + slack
            && self.target_roundtrip <= self.epsilon + slack
    }
}

/// Slack for comparing sums of distances against the ε-bounds.
pub fn bound_slack(f: &MetricMap) -> f64 {
    1e-12 * 1f64.max(f.source.diameter()).max(f.target.diameter())
}

/// Nearest-image approximate inverse `f': target → source`.
///
/// Each target point goes to [`approximate_point`]. The 4ε / 3ε / ε bounds
/// are theorems for this construction; they are checked on every call and a
/// violation is reported as [`Error::BoundViolated`].
pub fn epsilon_inverse(f: &MetricMap) -> Result<MetricMap> {
    if f.source.is_empty() {
        return Err(Error::Parameter("map has an empty source".into()));
    }
    let assign = (0..f.target.len())
        .map(|y| approximate_point(f, y))
        .collect::<Result<Vec<_>>>()?;
    let inv = MetricMap::new(f.target.clone(), f.source.clone(), assign)?;
    let b = InverseBounds::measure(f, &inv);
    if !b.holds(bound_slack(f)) {
        return Err(Error::BoundViolated(format!(
            "epsilon-inverse with eps = {}: inverse eps {} (<= 4eps), source round trip {} (<= 3eps), target round trip {} (<= eps)",
            b.epsilon, b.inverse.epsilon, b.source_roundtrip, b.target_roundtrip
        )));
    }
    Ok(inv)
}

pub const BRUTE_FORCE_BUDGET: f64 = 1e7;

/// Exhaustive minimization of the certificate ε over every map `x → y`.
/// Among optimal maps the lexicographically first assignment is returned.
pub fn brute_force_best_map(
    x: &SpaceRef,
    y: &SpaceRef,
) -> Result<(MetricMap, IsometryCertificate)> {
    let (nx, ny) = (x.len(), y.len());
    let maps = (ny as f64).powi(nx as i32);
    if maps > BRUTE_FORCE_BUDGET {
        return Err(Error::SearchBudget {
            maps,
            budget: BRUTE_FORCE_BUDGET,
        });
    }
    let mut assign = vec![0usize; nx];
    let mut best: Option<(MetricMap, IsometryCertificate)> = None;
    loop {
        let f = MetricMap::new(x.clone(), y.clone(), assign.clone())?;
        let c = certify(&f);
        if best.as_ref().map_or(true, |(_, b)| c.epsilon < b.epsilon) {
            best = Some((f, c));
        }
        // odometer, last position fastest
        let mut k = nx;
        loop {
            if k == 0 {
                return best.ok_or_else(|| Error::Parameter("empty search space".into()));
            }
            k -= 1;
            assign[k] += 1;
            if assign[k] < ny {
                break;
            }
            assign[k] = 0;
        }
    }
}
