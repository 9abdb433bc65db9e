//! Inverse-limit coding of the solenoid.
//!
//! A point `p` of `Fʳ(B)` determines a unique backward chain
//! `(t₀, t₁, …, t_r)` with `g(tᵢ₊₁) = tᵢ`: at each step exactly one of the
//! `d` base preimages carries a fiber preimage inside the unit disk. The
//! shift `(t₀, t₁, …) ↦ (g(t₀), t₀, t₁, …)` then conjugates `F` on the
//! attractor.
//!
//! Backward steps divide fiber errors by `λ`, so an `f64` point carries about
//! `log(1e16)/log(1/λ)` levels of information. Run the same functions on
//! [`DoubleDouble`](crate::DoubleDouble) coordinates for deeper codes.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleMap, CirclePoint};
use crate::error::{Error, Result};
use crate::real::{half_phase, Real};
use crate::skew::{SkewMap, TorusPoint};

/// Allowed `ϱ(g(tᵢ₊₁), tᵢ)` for a valid itinerary.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-9;
/// Coordinatewise agreement required by [`conjugacy_check`].
pub const COORDINATE_TOLERANCE: f64 = 1e-8;

/// A finite truncation `(t₀, …, t_r)` of a backward orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct Itinerary<R = f64> {
    coords: Vec<CirclePoint<R>>,
}

impl<R: Real> Itinerary<R> {
    /// Validates `g(tᵢ₊₁) = tᵢ` for every consecutive pair.
    pub fn new(base: &CircleMap, coords: Vec<CirclePoint<R>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("an itinerary needs at least t0".into()));
        }
        check_compatible(base, &coords)?;
        Ok(Itinerary { coords })
    }

    /// Walks `choices.len()` steps back from `t0`, taking the preimage with
    /// index `choice mod d` (ascending order) at each step.
    pub fn from_branch_choices(base: &CircleMap, t0: CirclePoint<R>, choices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(choices.len() + 1);
        coords.push(t0);
        let mut t = t0;
        for &c in choices {
            let pre = base.preimages(t)?;
            t = pre[c % pre.len()];
            coords.push(t);
        }
        Ok(Itinerary { coords })
    }

    pub fn coords(&self) -> &[CirclePoint<R>] {
        &self.coords
    }

    /// Number of backward steps `r`.
    pub fn depth(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn to_f64(&self) -> Itinerary<f64> {
        Itinerary { coords: self.coords.iter().map(|c| c.to_f64()).collect() }
    }

    /// Largest circle distance between matching coordinates.
    pub fn max_coordinate_gap(&self, other: &Self) -> Result<f64> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::LengthMismatch { left: self.coords.len(), right: other.coords.len() });
        }
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.distance(*b).to_f64())
            .fold(0.0, f64::max))
    }
}

fn check_compatible<R: Real>(base: &CircleMap, coords: &[CirclePoint<R>]) -> Result<()> {
    for (i, w) in coords.windows(2).enumerate() {
        let residual = base.eval(w[1]).distance(w[0]).to_f64();
        if residual > COMPATIBILITY_TOLERANCE {
            return Err(Error::IncompatibleItinerary { index: i + 1, residual });
        }
    }
    Ok(())
}

/// The depth-`r` code of `p`.
///
/// Fails with `NotInImage { step }` when `p ∉ F^step(B)`.
pub fn encode<R: Real>(map: &SkewMap, p: &TorusPoint<R>, depth: usize) -> Result<Itinerary<R>> {
    let mut coords = Vec::with_capacity(depth + 1);
    coords.push(p.t);
    let mut q = *p;
    for step in 1..=depth {
        q = map.preimage(&q).map_err(|e| match e {
            Error::NotInImage { .. } => Error::NotInImage { step },
            other => other,
        })?;
        coords.push(q.t);
    }
    Ok(Itinerary { coords })
}

/// Encodes a batch in parallel; output order follows input order.
pub fn encode_batch<R: Real>(map: &SkewMap, points: &[TorusPoint<R>], depth: usize) -> Vec<Result<Itinerary<R>>> {
    points.par_iter().map(|p| encode(map, p, depth)).collect()
}

/// Center of the nested disk `F(N_{t₁}) ⊃ … ⊃ Fʳ(N_{t_r})` in the fiber over
/// `t₀`; within `λʳ` of every attractor point carrying this code.
pub fn decode<R: Real>(map: &SkewMap, itinerary: &Itinerary<R>) -> Result<TorusPoint<R>> {
    if itinerary.depth() == 0 {
        return Err(Error::InvalidParameter("decoding needs depth at least 1".into()));
    }
    check_compatible(map.base(), &itinerary.coords)?;
    let lambda = R::from_f64(map.contraction());
    let mut z = Complex::new(R::zero(), R::zero());
    for t in itinerary.coords[1..].iter().rev() {
        z = z.scale(lambda) + half_phase(t.value());
    }
    Ok(TorusPoint { t: itinerary.coords[0], z })
}

/// `(t₀, t₁, …) ↦ (g(t₀), t₀, t₁, …)`.
pub fn shift<R: Real>(base: &CircleMap, itinerary: &Itinerary<R>) -> Itinerary<R> {
    let mut coords = Vec::with_capacity(itinerary.coords.len() + 1);
    coords.push(base.eval(itinerary.coords[0]));
    coords.extend_from_slice(&itinerary.coords);
    Itinerary { coords }
}

/// Whether `encode(F(p), r)` and `shift(encode(p, r − 1))` agree coordinatewise.
pub fn conjugacy_check<R: Real>(map: &SkewMap, p: &TorusPoint<R>, depth: usize) -> Result<bool> {
    if depth == 0 {
        return Err(Error::InvalidParameter("conjugacy check needs depth at least 1".into()));
    }
    let rhs = shift(map.base(), &encode(map, p, depth - 1)?);
    let lhs = encode(map, &map.apply(p), depth)?;
    Ok(lhs.max_coordinate_gap(&rhs)? <= COORDINATE_TOLERANCE)
}

/// Weighted product metric `Σ wⁱ ϱ(aᵢ, bᵢ)` on truncated itineraries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductMetric {
    weight: f64,
}

impl Default for ProductMetric {
    fn default() -> Self {
        ProductMetric { weight: 0.5 }
    }
}

impl ProductMetric {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight < 1.0) {
            return Err(Error::InvalidParameter(format!("metric weight must lie in (0, 1), got {weight}")));
        }
        Ok(ProductMetric { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn distance<R: Real>(&self, a: &Itinerary<R>, b: &Itinerary<R>) -> Result<f64> {
        if a.coords.len() != b.coords.len() {
            return Err(Error::LengthMismatch { left: a.coords.len(), right: b.coords.len() });
        }
        let mut w = 1.0;
        let mut sum = 0.0;
        for (x, y) in a.coords.iter().zip(&b.coords) {
            sum += w * x.distance(*y).to_f64();
            w *= self.weight;
        }
        Ok(sum)
    }
}
