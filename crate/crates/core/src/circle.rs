//! Circle `d`-covers `g: S¹ → S¹`.
//!
//! Every map is handled through its lift `L: ℝ → ℝ` normalised by `L(0) = 0`
//! and `L(x + 1) = L(x) + d`. The lift is strictly increasing for every
//! configured family, which makes preimages and periodic points a matter of
//! monotone bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{frac, Real};

/// Residual accepted when checking that a computed preimage maps back.
pub const PREIMAGE_TOLERANCE: f64 = 1e-10;
/// Multipliers this close to one are reported as non-hyperbolic.
pub const NEUTRAL_BAND: f64 = 1e-8;

const MAX_BISECTION_STEPS: usize = 200;
const MAX_PERIOD: usize = 14;
const PERIODIC_BUDGET: u64 = 1 << 20;
const MAX_DEGREE: u32 = 64;

/// A point of `S¹ = [0, 1] / (0 ∼ 1)`, always reduced into `[0, 1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CirclePoint<R = f64>(R);

impl<R: Real> CirclePoint<R> {
    pub fn new(t: R) -> Self {
        CirclePoint(frac(t))
    }

    pub fn value(self) -> R {
        self.0
    }

    /// Circle distance `ϱ(a, b) = min(|a − b|, 1 − |a − b|)`.
    pub fn distance(self, other: Self) -> R {
        let a = (self.0 - other.0).abs();
        let b = R::one() - a;
        if a < b {
            a
        } else {
            b
        }
    }

    pub fn to_f64(self) -> CirclePoint<f64> {
        CirclePoint::new(self.0.to_f64())
    }

    pub fn from_f64(p: CirclePoint<f64>) -> Self {
        CirclePoint(R::from_f64(p.0))
    }
}

/// The plateau-and-flank bump `U_δ`: one on `|x| ≤ δ/2`, zero for `|x| ≥ δ`,
/// and a cubic smoothstep `1 − (3u² − 2u³)` with `u = (|x| − δ/2)/(δ/2)` on
/// each flank. `x` is a signed representative of a circle point.
pub fn bump_profile(delta: f64, x: f64) -> f64 {
    bump_profile_generic(delta, x)
}

fn bump_profile_generic<R: Real>(delta: f64, x: R) -> R {
    let a = x.abs();
    let half = R::from_f64(0.5 * delta);
    if delta == 0.0 || a >= R::from_f64(delta) {
        R::zero()
    } else if a <= half {
        R::one()
    } else {
        let u = (a - half) / half;
        R::one() - u * u * (R::from_f64(3.0) - R::from_f64(2.0) * u)
    }
}

/// Derivative of [`bump_profile`] in `x`.
pub fn bump_profile_derivative(delta: f64, x: f64) -> f64 {
    let a = x.abs();
    let half = 0.5 * delta;
    if delta == 0.0 || a >= delta || a <= half {
        return 0.0;
    }
    let u = (a - half) / half;
    -x.signum() * 6.0 * u * (1.0 - u) / half
}

/// Signed representative of `x` in `[-½, ½)`.
fn signed_rep<R: Real>(x: R) -> R {
    x - (x + R::half()).floor()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum MapFamily {
    /// `t ↦ dt mod 1`.
    Linear,
    /// Shub-type map: `x + β sin 4πx` on `[0, ½]` with `β = (1 − m)/(4π)`,
    /// glued to `(2d − 1)x mod 1` on `[½, 1]`. Fixed points `0, ¼, ½` with
    /// multiplier `m` at `¼`.
    Shub { multiplier: f64 },
    /// `dx + (ε − d) x U_δ(x) mod 1`.
    Bump { eps: f64, delta: f64 },
}

/// A validated circle `d`-cover.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleMap {
    degree: u32,
    family: MapFamily,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
}

/// A periodic orbit listed in dynamical order, starting at its smallest point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// Minimal period.
    pub period: usize,
    pub points: Vec<CirclePoint>,
    /// Derivative of `g^period` along the orbit.
    pub multiplier: f64,
    pub stability: Stability,
}

impl CircleMap {
    pub fn linear(degree: u32) -> Result<Self> {
        check_degree(degree)?;
        Ok(CircleMap { degree, family: MapFamily::Linear })
    }

    pub fn shub(degree: u32, multiplier: f64) -> Result<Self> {
        check_degree(degree)?;
        if !(multiplier > 0.0 && multiplier < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Shub fixed-point multiplier must lie in (0, 1), got {multiplier}"
            )));
        }
        Ok(CircleMap { degree, family: MapFamily::Shub { multiplier } })
    }

    /// `ε = δ = 0` gives back the linear map; a positive `δ` needs a positive
    /// `ε`, otherwise the derivative vanishes at zero.
    pub fn bump(degree: u32, eps: f64, delta: f64) -> Result<Self> {
        check_degree(degree)?;
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidConfig(format!("eps must lie in [0, 1), got {eps}")));
        }
        if !(0.0..0.25).contains(&delta) {
            return Err(Error::InvalidConfig(format!("delta must lie in [0, 1/4), got {delta}")));
        }
        if delta > 0.0 && eps == 0.0 {
            return Err(Error::InvalidConfig(
                "eps = 0 with delta > 0 is singular at the origin".into(),
            ));
        }
        Ok(CircleMap { degree, family: MapFamily::Bump { eps, delta } })
    }

    pub fn from_family(degree: u32, family: MapFamily) -> Result<Self> {
        match family {
            MapFamily::Linear => Self::linear(degree),
            MapFamily::Shub { multiplier } => Self::shub(degree, multiplier),
            MapFamily::Bump { eps, delta } => Self::bump(degree, eps, delta),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn family(&self) -> MapFamily {
        self.family
    }

    fn d<R: Real>(&self) -> R {
        R::from_f64(self.degree as f64)
    }

    /// The lift `L` with `L(0) = 0` and `L(x + 1) = L(x) + d`.
    pub fn lift<R: Real>(&self, x: R) -> R {
        let d = self.d::<R>();
        match self.family {
            MapFamily::Linear => d * x,
            MapFamily::Bump { eps, delta } => {
                let dx = d * x;
                if delta == 0.0 {
                    return dx;
                }
                let s = signed_rep(x);
                if s.abs() >= R::from_f64(delta) {
                    dx
                } else {
                    let gain = R::from_f64(eps - self.degree as f64);
                    dx + gain * s * bump_profile_generic(delta, s)
                }
            }
            MapFamily::Shub { multiplier } => {
                let n = x.floor();
                let f = x - n;
                let inner = if f < R::half() {
                    let beta = R::from_f64((1.0 - multiplier) / (4.0 * std::f64::consts::PI));
                    let (s, _) = (f + f).sin_cos_turns();
                    f + beta * s
                } else {
                    let k = self.degree as f64;
                    R::from_f64(2.0 * k - 1.0) * f - R::from_f64(k - 1.0)
                };
                inner + n * d
            }
        }
    }

    /// Lift of `g^n`.
    pub fn lift_iterate<R: Real>(&self, mut x: R, n: usize) -> R {
        for _ in 0..n {
            x = self.lift(x);
        }
        x
    }

    pub fn eval<R: Real>(&self, t: CirclePoint<R>) -> CirclePoint<R> {
        let x = t.value();
        match self.family {
            MapFamily::Linear => CirclePoint::new(self.d::<R>() * x),
            MapFamily::Bump { delta, .. } if signed_rep(x).abs() >= R::from_f64(delta) => {
                CirclePoint::new(self.d::<R>() * x)
            }
            _ => CirclePoint::new(self.lift(x)),
        }
    }

    /// `Dg(t)`, strictly positive for every configured map.
    ///
    /// The Shub map is glued at `0` and `½`; there the derivative of the
    /// branch starting at that point is returned.
    pub fn deriv(&self, t: CirclePoint) -> f64 {
        let x = t.value();
        let d = self.degree as f64;
        match self.family {
            MapFamily::Linear => d,
            MapFamily::Bump { eps, delta } => {
                let s = signed_rep(x);
                let u = bump_profile(delta, s);
                let du = bump_profile_derivative(delta, s);
                d + (eps - d) * (u + s * du)
            }
            MapFamily::Shub { multiplier } => {
                if x < 0.5 {
                    let (_, c) = (2.0 * x).sin_cos_turns();
                    1.0 + (1.0 - multiplier) * c
                } else {
                    2.0 * d - 1.0
                }
            }
        }
    }

    /// Solves `L(x) = y` for real `y`.
    pub fn lift_inverse<R: Real>(&self, y: R) -> Result<R> {
        let d = self.d::<R>();
        if self.family == MapFamily::Linear {
            return Ok(y / d);
        }
        let n = (y / d).floor();
        let r = y - n * d;
        let x = bisect_increasing(|x| self.lift(x), r, R::zero(), R::one());
        let residual = (self.lift(x) - r).abs().to_f64();
        if residual > PREIMAGE_TOLERANCE {
            return Err(Error::RootNotBracketed { target: y.to_f64() });
        }
        Ok(n + x)
    }

    /// The `d` preimages of `t`, ascending.
    pub fn preimages<R: Real>(&self, t: CirclePoint<R>) -> Result<Vec<CirclePoint<R>>> {
        let mut out = Vec::with_capacity(self.degree as usize);
        for j in 0..self.degree {
            let y = t.value() + R::from_f64(j as f64);
            let x = CirclePoint::new(self.lift_inverse(y)?);
            if self.eval(x).distance(t).to_f64() >= PREIMAGE_TOLERANCE {
                return Err(Error::RootNotBracketed { target: y.to_f64() });
            }
            out.push(x);
        }
        for w in out.windows(2) {
            if (w[1].value() - w[0].value()).to_f64() < 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "coincident preimages near {} (singular cover)",
                    w[0].value().to_f64()
                )));
            }
        }
        Ok(out)
    }

    /// All points fixed by `g^period`, grouped into orbits.
    ///
    /// `L^p(x) − x` is sampled on a grid of at least `16·d^p` cells; every
    /// integer crossing is refined by bisection and grid points that already
    /// hit an integer are taken as they are.
    pub fn periodic_points(&self, period: usize) -> Result<Vec<PeriodicOrbit>> {
        if period == 0 || period > MAX_PERIOD {
            return Err(Error::InvalidParameter(format!(
                "period must lie in 1..={MAX_PERIOD}, got {period}"
            )));
        }
        let count = (self.degree as u64).saturating_pow(period as u32);
        if count > PERIODIC_BUDGET {
            return Err(Error::BudgetExceeded { required: count, limit: PERIODIC_BUDGET });
        }
        let cells = (16 * count as usize).max(4096);
        let h = |x: f64| self.lift_iterate(x, period) - x;
        let grid: Vec<f64> = (0..=cells).into_par_iter().map(|i| h(i as f64 / cells as f64)).collect();

        let mut roots: Vec<f64> = (0..cells)
            .into_par_iter()
            .flat_map_iter(|i| {
                let (x0, x1) = (i as f64 / cells as f64, (i + 1) as f64 / cells as f64);
                let (h0, h1) = (grid[i], grid[i + 1]);
                let mut found = Vec::new();
                if (h0 - h0.round()).abs() < 1e-12 {
                    found.push(x0);
                }
                let (lo, hi) = if h0 < h1 { (h0, h1) } else { (h1, h0) };
                let first = (lo + 1e-12).ceil() as i64;
                let last = (hi - 1e-12).floor() as i64;
                for k in first..=last {
                    let k = k as f64;
                    let root = if h0 < h1 {
                        bisect_increasing(|x| h(x), k, x0, x1)
                    } else {
                        bisect_increasing(|x| -h(x), -k, x0, x1)
                    };
                    found.push(root);
                }
                found
            })
            .collect();

        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|b, a| (*b - *a).abs() < 1e-9);
        if roots.len() > 1 && 1.0 - roots[roots.len() - 1] + roots[0] < 1e-9 {
            roots.pop();
        }
        self.group_orbits(&roots, period)
    }

    fn group_orbits(&self, roots: &[f64], period: usize) -> Result<Vec<PeriodicOrbit>> {
        let nearest = |y: f64| -> Option<usize> {
            let i = roots.partition_point(|&r| r < y);
            [i.checked_sub(1), Some(i % roots.len()), Some(0), Some(roots.len() - 1)]
                .into_iter()
                .flatten()
                .filter(|&j| j < roots.len())
                .find(|&j| CirclePoint::new(roots[j]).distance(CirclePoint::new(y)) < 1e-8)
        };

        let mut assigned = vec![false; roots.len()];
        let mut orbits = Vec::new();
        for start in 0..roots.len() {
            if assigned[start] {
                continue;
            }
            let mut members = vec![start];
            let mut y = CirclePoint::new(roots[start]);
            loop {
                y = self.eval(y);
                let j = nearest(y.value()).ok_or(Error::RootNotBracketed { target: y.value() })?;
                if j == start {
                    break;
                }
                if members.len() > period {
                    return Err(Error::RootNotBracketed { target: y.value() });
                }
                members.push(j);
            }
            let points: Vec<CirclePoint> = members.iter().map(|&j| CirclePoint::new(roots[j])).collect();
            let multiplier: f64 = points.iter().map(|&p| self.deriv(p)).product();
            if (multiplier.abs() - 1.0).abs() <= NEUTRAL_BAND {
                return Err(Error::NeutralOrbit { period: points.len(), multiplier });
            }
            for &j in &members {
                assigned[j] = true;
            }
            orbits.push(PeriodicOrbit {
                period: points.len(),
                points,
                multiplier,
                stability: if multiplier.abs() < 1.0 { Stability::Attracting } else { Stability::Repelling },
            });
        }
        Ok(orbits)
    }

    /// Immediate basin `(−x_*, x_*)` of the attracting fixed point `0` of a
    /// bump map, where `U_δ(x_*) = (d − 1)/(d − ε)` on the outer flank.
    pub fn basin_interval(&self) -> Result<(f64, f64)> {
        let MapFamily::Bump { eps, delta } = self.family else {
            return Err(Error::NoBasin);
        };
        if eps == 0.0 || delta == 0.0 {
            return Err(Error::NoBasin);
        }
        let d = self.degree as f64;
        let level = (d - 1.0) / (d - eps);
        let x = bisect_increasing(|x: f64| -bump_profile(delta, x), -level, 0.5 * delta, delta);
        if (bump_profile(delta, x) - level).abs() > PREIMAGE_TOLERANCE {
            return Err(Error::RootNotBracketed { target: level });
        }
        Ok((-x, x))
    }

    /// `max ϱ(g(t), dt mod 1)` over `samples` equally spaced points.
    pub fn sup_distance_to_linear(&self, samples: usize) -> Result<f64> {
        if samples < 1000 {
            return Err(Error::InvalidParameter(format!("need at least 1000 samples, got {samples}")));
        }
        let linear = CircleMap { degree: self.degree, family: MapFamily::Linear };
        Ok((0..samples)
            .into_par_iter()
            .map(|i| {
                let t = CirclePoint::new(i as f64 / samples as f64);
                self.eval(t).distance(linear.eval(t))
            })
            .reduce(|| 0.0, f64::max))
    }
}

fn check_degree(degree: u32) -> Result<()> {
    if !(2..=MAX_DEGREE).contains(&degree) {
        return Err(Error::InvalidConfig(format!("degree must lie in 2..={MAX_DEGREE}, got {degree}")));
    }
    Ok(())
}

/// Bisection for an increasing `f` with `f(lo) <= target <= f(hi)`.
pub(crate) fn bisect_increasing<R: Real>(f: impl Fn(R) -> R, target: R, mut lo: R, mut hi: R) -> R {
    if f(lo) >= target {
        return lo;
    }
    let resolution = R::from_f64(R::RESOLUTION);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= resolution {
            break;
        }
        let mid = (lo + hi) * R::half();
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * R::half()
}
