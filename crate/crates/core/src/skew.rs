//! The solid-torus skew map `F(t, z) = (g(t), λz + ½e^{2πit})` on `S¹ × D²`.

use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleMap, CirclePoint};
use crate::error::{Error, Result};
use crate::real::{half_phase, modulus, Real};

/// Slack on `|z| ≤ 1` absorbing rounding at the disk boundary.
pub const DISK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint<R = f64> {
    pub t: CirclePoint<R>,
    pub z: Complex<R>,
}

impl<R: Real> TorusPoint<R> {
    pub fn new(t: R, z: Complex<R>) -> Self {
        TorusPoint { t: CirclePoint::new(t), z }
    }

    pub fn in_domain(&self) -> bool {
        let r = R::from_f64(1.0 + DISK_TOLERANCE);
        self.z.norm_sqr() <= r * r
    }

    pub fn to_f64(&self) -> TorusPoint<f64> {
        TorusPoint { t: self.t.to_f64(), z: crate::real::complex_to_f64(self.z) }
    }

    pub fn from_f64(p: &TorusPoint<f64>) -> Self {
        TorusPoint { t: CirclePoint::from_f64(p.t), z: crate::real::complex_from_f64(p.z) }
    }

    /// Circle distance of base coordinates plus Euclidean fiber distance.
    pub fn distance(&self, other: &Self) -> R {
        self.t.distance(other.t) + modulus(self.z - other.z)
    }
}

/// A round disk in a fiber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberDisk {
    pub fiber: CirclePoint,
    pub center: Complex64,
    pub radius: f64,
}

/// `DF` at a point, the lower-triangular block `[[Dg, 0], [πi e^{2πit}, λ·Id₂]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianBlock {
    pub dg: f64,
    pub offdiag: Complex64,
    pub fiber_scale: f64,
}

impl JacobianBlock {
    pub fn determinant(&self) -> f64 {
        self.dg * self.fiber_scale * self.fiber_scale
    }

    /// Real 3×3 matrix in the coordinates `(t, Re z, Im z)`.
    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.dg, 0.0, 0.0],
            [self.offdiag.re, self.fiber_scale, 0.0],
            [self.offdiag.im, 0.0, self.fiber_scale],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    /// Smallest distance between fiber-image centers of distinct preimages.
    pub min_center_gap: f64,
    /// Twice the image-disk radius.
    pub required: f64,
    pub ok: bool,
    /// Target fiber where the smallest gap was seen.
    pub worst_target: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewMap {
    base: CircleMap,
    contraction: f64,
    relaxed: bool,
}

impl SkewMap {
    /// Sufficient contraction bound for global injectivity, `¼ sin(π/(2d − 1))`.
    pub fn injectivity_bound(degree: u32) -> f64 {
        0.25 * (std::f64::consts::PI / (2.0 * degree as f64 - 1.0)).sin()
    }

    pub fn new(base: CircleMap, contraction: f64) -> Result<Self> {
        let bound = Self::injectivity_bound(base.degree());
        if !(contraction > 0.0 && contraction < bound) {
            return Err(Error::InvalidConfig(format!(
                "fiber contraction must lie in (0, {bound}), got {contraction}"
            )));
        }
        Ok(SkewMap { base, contraction, relaxed: false })
    }

    /// Lifts the injectivity bound; any `λ` in `(0, ½)` keeps the image
    /// inside the solid torus. Only meant for witnessing overlaps.
    pub fn relaxed(base: CircleMap, contraction: f64) -> Result<Self> {
        if !(contraction > 0.0 && contraction < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "relaxed fiber contraction must lie in (0, 1/2), got {contraction}"
            )));
        }
        Ok(SkewMap { base, contraction, relaxed: true })
    }

    pub fn base(&self) -> &CircleMap {
        &self.base
    }

    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    /// Fiber map over `t`: `z ↦ λz + ½e^{2πit}`.
    pub fn fiber_map<R: Real>(&self, t: CirclePoint<R>, z: Complex<R>) -> Complex<R> {
        z.scale(R::from_f64(self.contraction)) + half_phase(t.value())
    }

    pub fn apply<R: Real>(&self, p: &TorusPoint<R>) -> TorusPoint<R> {
        TorusPoint { t: self.base.eval(p.t), z: self.fiber_map(p.t, p.z) }
    }

    pub fn iterate<R: Real>(&self, p: &TorusPoint<R>, n: usize) -> TorusPoint<R> {
        let mut q = *p;
        for _ in 0..n {
            q = self.apply(&q);
        }
        q
    }

    /// `F({t} × D²)`: a disk of radius `λ` around `½e^{2πit}` in the fiber over `g(t)`.
    pub fn fiber_image(&self, t: CirclePoint) -> FiberDisk {
        FiberDisk { fiber: self.base.eval(t), center: half_phase(t.value()), radius: self.contraction }
    }

    /// The unique point mapped onto `p`, found among the `d` base preimages.
    pub fn preimage<R: Real>(&self, p: &TorusPoint<R>) -> Result<TorusPoint<R>> {
        let lambda = R::from_f64(self.contraction);
        let mut hits = self
            .base
            .preimages(p.t)?
            .into_iter()
            .map(|t| TorusPoint { t, z: (p.z - half_phase(t.value())).unscale(lambda) })
            .filter(TorusPoint::in_domain);
        match (hits.next(), hits.next()) {
            (None, _) => Err(Error::NotInImage { step: 1 }),
            (Some(q), None) => Ok(q),
            (Some(_), Some(_)) => Err(Error::InjectivityViolation { candidates: 2 + hits.count() }),
        }
    }

    pub fn jacobian(&self, p: &TorusPoint) -> JacobianBlock {
        let (s, c) = p.t.value().sin_cos_turns();
        let pi = std::f64::consts::PI;
        JacobianBlock {
            dg: self.base.deriv(p.t),
            offdiag: Complex64::new(-pi * s, pi * c),
            fiber_scale: self.contraction,
        }
    }

    /// Checks pairwise disjointness of the fiber images `F({tᵢ} × D²)` over
    /// the preimages `tᵢ` of `samples` equally spaced targets.
    pub fn check_injectivity(&self, samples: usize) -> Result<InjectivityReport> {
        if samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        let gaps: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let target = i as f64 / samples as f64;
                let pre = self.base.preimages(CirclePoint::new(target))?;
                let mut gap = f64::INFINITY;
                for (a, pa) in pre.iter().enumerate() {
                    for pb in &pre[a + 1..] {
                        let g = (half_phase(pa.value()) - half_phase(pb.value())).norm();
                        gap = gap.min(g);
                    }
                }
                Ok((gap, target))
            })
            .collect::<Result<_>>()?;
        let (min_center_gap, worst_target) =
            gaps.into_iter().fold((f64::INFINITY, 0.0), |best, g| if g.0 < best.0 { g } else { best });
        let required = 2.0 * self.contraction;
        Ok(InjectivityReport { min_center_gap, required, ok: min_center_gap > required, worst_target })
    }
}
