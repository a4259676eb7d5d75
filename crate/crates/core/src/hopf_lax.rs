//! Hopf–Lax semigroup `Q_t g(x) = min_y g(y) + d(x,y)²/(2t)` on finite
//! spaces, the d²/2-transform, discrete local slopes and the residual of
//! `∂_t u + ½|∇u|² = 0`.
//!
//! Every minimization is a full O(N²) sweep; rows are independent and are
//! evaluated in parallel, each row in index order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, SpaceRef};

/// Real-valued function on the points of a space.
#[derive(Debug, Clone)]
pub struct Potential {
    space: SpaceRef,
    values: Vec<f64>,
}

impl Potential {
    pub fn new(space: SpaceRef, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Malformed(format!(
                "{} values for a space with {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Malformed(format!(
                "potential value at {i} is {}",
                values[i]
            )));
        }
        Ok(Self { space, values })
    }

    pub fn from_fn(space: SpaceRef, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values = (0..space.len()).map(f).collect();
        Self::new(space, values)
    }

    pub fn constant(space: SpaceRef, c: f64) -> Result<Self> {
        Self::from_fn(space, |_| c)
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shifted(&self, c: f64) -> Potential {
        Potential {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_x |self(x) − other(x)|`.
    pub fn sup_distance(&self, other: &Potential) -> Result<f64> {
        self.same_space(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Smallest `L` with `|g(x) − g(y)| ≤ L d(x, y)` for all pairs.
    pub fn lipschitz_constant(&self) -> f64 {
        let s = &self.space;
        (0..s.len())
            .into_par_iter()
            .map(|i| {
                let r = s.row(i);
                let mut m = 0.0f64;
                for j in (i + 1)..s.len() {
                    m = m.max((self.values[i] - self.values[j]).abs() / r[j]);
                }
                m
            })
            .reduce(|| 0.0, f64::max)
    }

    pub(crate) fn same_space(&self, other: &Potential) -> Result<()> {
        if FiniteMetricSpace::same_as(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch("potentials on different spaces".into()))
        }
    }
}

fn inf_convolution(g: &Potential, scale: f64) -> Potential {
    let s = &g.space;
    let values = (0..s.len())
        .into_par_iter()
        .map(|x| {
            let r = s.row(x);
            let mut best = f64::INFINITY;
            for (y, &gy) in g.values.iter().enumerate() {
                let v = gy + r[y] * r[y] * scale;
                if v < best {
                    best = v;
                }
            }
            best
        })
        .collect();
    Potential {
        space: s.clone(),
        values,
    }
}

/// `Q_t g`. `t = 0` returns `g` unchanged.
pub fn hopf_lax(g: &Potential, t: f64) -> Result<Potential> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Parameter(format!("Hopf-Lax time t = {t}")));
    }
    if t == 0.0 {
        return Ok(g.clone());
    }
    Ok(inf_convolution(g, 0.5 / t))
}

/// `φ^c(x) = min_y φ(y) + ½ d(x,y)²`, i.e. `Q_1 φ`.
pub fn c_transform(phi: &Potential) -> Potential {
    inf_convolution(phi, 0.5)
}

/// `ψ(x) = max_y φ^c(y) − ½ d(x,y)²`, the d²/2-convex envelope of `φ`.
pub fn double_transform(phi: &Potential) -> Potential {
    let pc = c_transform(phi);
    let s = &phi.space;
    let values = (0..s.len())
        .into_par_iter()
        .map(|x| {
            let r = s.row(x);
            let mut best = f64::NEG_INFINITY;
            for (y, &v) in pc.values.iter().enumerate() {
                let c = v - r[y] * r[y] * 0.5;
                if c > best {
                    best = c;
                }
            }
            best
        })
        .collect();
    Potential {
        space: s.clone(),
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeVariant {
    TwoSided,
    /// Ascending slope `|∇⁺u|`, from `(u(y) − u(x))⁺`.
    Upper,
    /// Descending slope `|∇⁻u|`, from `(u(x) − u(y))⁺`.
    Lower,
}

#[derive(Debug, Clone)]
pub struct SlopeField {
    pub space: SpaceRef,
    pub slope: Vec<f64>,
    pub variant: SlopeVariant,
    pub radius: f64,
    /// Points with no other point within `radius`; their slope is 0.
    pub isolated: Vec<usize>,
}

/// Largest difference quotient over the closed ball of `radius`.
pub fn local_slope(u: &Potential, radius: f64, variant: SlopeVariant) -> Result<SlopeField> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("slope radius {radius}")));
    }
    let s = &u.space;
    let v = &u.values;
    let per_point: Vec<(f64, bool)> = (0..s.len())
        .into_par_iter()
        .map(|i| {
            let r = s.row(i);
            let mut best = 0.0f64;
            let mut any = false;
            for j in 0..s.len() {
                if j == i || r[j] > radius {
                    continue;
                }
                any = true;
                let diff = match variant {
                    SlopeVariant::TwoSided => (v[j] - v[i]).abs(),
                    SlopeVariant::Upper => (v[j] - v[i]).max(0.0),
                    SlopeVariant::Lower => (v[i] - v[j]).max(0.0),
                };
                best = best.max(diff / r[j]);
            }
            (best, any)
        })
        .collect();
    let isolated = per_point
        .iter()
        .enumerate()
        .filter(|(_, &(_, any))| !any)
        .map(|(i, _)| i)
        .collect();
    Ok(SlopeField {
        space: s.clone(),
        slope: per_point.into_iter().map(|(b, _)| b).collect(),
        variant,
        radius,
        isolated,
    })
}

/// Three median nearest-neighbour distances.
pub fn default_slope_radius(space: &FiniteMetricSpace) -> f64 {
    3.0 * space.median_nearest_neighbor()
}

pub const DEFAULT_DT: f64 = 1e-3;

/// Pointwise residual of `∂_t u + ½|∇u|² = 0` for `u = Q_t g`, with a
/// central difference in time and the two-sided discrete slope.
pub fn hj_residual(g: &Potential, t: f64, dt: f64, radius: f64) -> Result<Potential> {
    if !(dt > 0.0) || !(t > dt) {
        return Err(Error::Parameter(format!(
            "residual needs t > dt > 0, got t = {t}, dt = {dt}"
        )));
    }
    let ahead = hopf_lax(g, t + dt)?;
    let behind = hopf_lax(g, t - dt)?;
    let now = hopf_lax(g, t)?;
    let slope = local_slope(&now, radius, SlopeVariant::TwoSided)?;
    let values = (0..g.len())
        .map(|x| (ahead.values[x] - behind.values[x]) / (2.0 * dt) + 0.5 * slope.slope[x].powi(2))
        .collect();
    Potential::new(g.space.clone(), values)
}

/// `max_x |Q_{s+t} g(x) − Q_t(Q_s g)(x)|`.
pub fn semigroup_defect(g: &Potential, s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0) || !(t > 0.0) {
        return Err(Error::Parameter(format!(
            "semigroup defect needs s, t > 0, got s = {s}, t = {t}"
        )));
    }
    let direct = hopf_lax(g, s + t)?;
    let composed = hopf_lax(&hopf_lax(g, s)?, t)?;
    direct.sup_distance(&composed)
}
