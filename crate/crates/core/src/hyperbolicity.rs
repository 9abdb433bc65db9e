//! Stable bundle and unstable cones of the skew product.
//!
//! `DF` is block lower triangular, so vertical vectors stay vertical and are
//! scaled by `λ`, while the cone `|v₁| ≥ c|v₂₃|` is carried into itself as
//! soon as `Dg ≥ cπ + λ`. Slopes `v₂₃/v₁` of two cone vectors approach each
//! other by `λ/Dg` per step, which pins down the unstable line.

use std::f64::consts::PI;

use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::CirclePoint;
use crate::coding::Itinerary;
use crate::error::{Error, Result};
use crate::double_double::DoubleDouble;
use crate::real::{complex_from_f64, unit_phase, Real};
use crate::skew::{SkewMap, TorusPoint};

/// Boundary rays per sample point.
pub const BOUNDARY_PHASES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    /// Base direction.
    pub v1: f64,
    /// Fiber direction.
    pub v23: Complex64,
}

impl TangentVector {
    pub fn new(v1: f64, v23: Complex64) -> Self {
        TangentVector { v1, v23 }
    }

    pub fn norm(&self) -> f64 {
        self.v1.hypot(self.v23.norm())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        TangentVector { v1: self.v1 / n, v23: self.v23 / n }
    }

    /// `v₂₃ / v₁`.
    pub fn slope(&self) -> Complex64 {
        self.v23 / self.v1
    }

    pub fn scale(&self, a: f64) -> Self {
        TangentVector { v1: a * self.v1, v23: self.v23 * a }
    }

    pub fn add(&self, other: &Self) -> Self {
        TangentVector { v1: self.v1 + other.v1, v23: self.v23 + other.v23 }
    }
}

/// The cone `{ |v₁| ≥ c|v₂₃| }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeParam {
    c: f64,
}

impl ConeParam {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("cone aperture must be positive, got {c}")));
        }
        Ok(ConeParam { c })
    }

    /// `(2d − 1)/4`, sized for bases with `Dg = 2d − 1`.
    pub fn for_degree(degree: u32) -> Self {
        ConeParam { c: (2.0 * degree as f64 - 1.0) / 4.0 }
    }

    pub fn aperture(&self) -> f64 {
        self.c
    }

    pub fn margin(&self, v: &TangentVector) -> f64 {
        v.v1.abs() - self.c * v.v23.norm()
    }

    pub fn contains(&self, v: &TangentVector) -> bool {
        self.margin(v) >= 0.0
    }
}

/// `(Dg(t) v₁, πi e^{2πit} v₁ + λ v₂₃)`.
pub fn push_forward(map: &SkewMap, q: &TorusPoint, v: &TangentVector) -> TangentVector {
    push_at(map, q.t, v)
}

fn push_at(map: &SkewMap, t: CirclePoint, v: &TangentVector) -> TangentVector {
    let shear = unit_phase(t.value()) * Complex64::new(0.0, PI);
    TangentVector {
        v1: map.base().deriv(t) * v.v1,
        v23: shear * v.v1 + v.v23 * map.contraction(),
    }
}

/// Largest aperture with `Dg_min ≥ cπ + λ`, less 1%.
pub fn valid_aperture(dg_min: f64, lambda: f64) -> Result<f64> {
    if dg_min <= lambda + 1e-9 {
        return Err(Error::InvalidRegime(format!(
            "base expansion {dg_min} does not dominate fiber contraction {lambda}"
        )));
    }
    Ok(0.99 * (dg_min - lambda) / PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub ok: bool,
    /// `min(|v₁′| − c|v₂₃′|)` over unit-base rays.
    pub worst_margin: f64,
    pub pairs: usize,
}

/// Pushes `rays_per_q` rays at every sample and checks the images stay in the
/// cone. The first [`BOUNDARY_PHASES`] rays sit on the cone boundary
/// `|v₂₃| = |v₁|/c`; the rest are interior rays at golden-angle phases.
pub fn cone_invariance_check(map: &SkewMap, cone: &ConeParam, samples: &[TorusPoint], rays_per_q: usize) -> Result<ConeReport> {
    if rays_per_q < BOUNDARY_PHASES {
        return Err(Error::InvalidParameter(format!("need at least {BOUNDARY_PHASES} rays per point")));
    }
    let rays = cone_rays(cone, rays_per_q);
    let worst = samples
        .par_iter()
        .map(|q| {
            rays.iter()
                .map(|v| cone.margin(&push_forward(map, q, v)))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(ConeReport { ok: worst > 0.0, worst_margin: worst, pairs: samples.len() * rays_per_q })
}

fn cone_rays(cone: &ConeParam, count: usize) -> Vec<TangentVector> {
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let interior = count - BOUNDARY_PHASES;
    let boundary = (0..BOUNDARY_PHASES)
        .map(|j| TangentVector::new(1.0, unit_phase(j as f64 / BOUNDARY_PHASES as f64) / cone.c));
    let inside = (0..interior).map(|j| {
        let r = (j as f64 + 0.5) / interior as f64;
        TangentVector::new(1.0, unit_phase(j as f64 * golden) * (r / cone.c))
    });
    boundary.chain(inside).collect()
}

/// Pushes `v` from the base point `t_k` of `itinerary` forward to `t₀`.
/// Returns `k + 1` vectors, the starting one first.
pub fn push_along(map: &SkewMap, itinerary: &Itinerary, v: &TangentVector, k: usize) -> Result<Vec<TangentVector>> {
    if k > itinerary.depth() {
        return Err(Error::InvalidParameter(format!(
            "itinerary of depth {} cannot supply {k} backward steps",
            itinerary.depth()
        )));
    }
    let coords = itinerary.coords();
    let mut out = Vec::with_capacity(k + 1);
    let mut cur = *v;
    out.push(cur);
    for j in (0..k).rev() {
        cur = push_at(map, coords[j + 1], &cur);
        out.push(cur);
    }
    Ok(out)
}

/// `|v₂₃/v₁ − w₂₃/w₁|` after `0, 1, …, k` forward steps along the itinerary.
pub fn slope_contraction_rate(
    map: &SkewMap,
    itinerary: &Itinerary,
    v: &TangentVector,
    w: &TangentVector,
    k: usize,
) -> Result<Vec<f64>> {
    if !(v.v1 > 0.0 && w.v1 > 0.0) {
        return Err(Error::InvalidParameter("cone vectors need positive base components".into()));
    }
    // The slopes converge to a common line while their difference shrinks
    // geometrically, so the pushes run in extended precision.
    let vs = push_along_extended(map, itinerary, v, k)?;
    let ws = push_along_extended(map, itinerary, w, k)?;
    Ok(vs
        .iter()
        .zip(&ws)
        .map(|((a1, a23), (b1, b23))| {
            let diff = (*a23 * *b1 - *b23 * *a1).unscale(*a1 * *b1);
            (diff.re * diff.re + diff.im * diff.im).sqrt().to_f64()
        })
        .collect())
}

type Dd = DoubleDouble;

fn push_along_extended(
    map: &SkewMap,
    itinerary: &Itinerary,
    v: &TangentVector,
    k: usize,
) -> Result<Vec<(Dd, Complex<Dd>)>> {
    if k > itinerary.depth() {
        return Err(Error::InvalidParameter(format!(
            "itinerary of depth {} cannot supply {k} backward steps",
            itinerary.depth()
        )));
    }
    let coords = itinerary.coords();
    let lambda = Dd::from(map.contraction());
    let mut v1 = Dd::from(v.v1);
    let mut v23 = complex_from_f64::<Dd>(v.v23);
    let mut out = Vec::with_capacity(k + 1);
    out.push((v1, v23));
    for j in (0..k).rev() {
        let t = coords[j + 1];
        let shear = complex_from_f64::<Dd>(unit_phase(t.value()) * Complex64::new(0.0, PI));
        v23 = shear.scale(v1) + v23.scale(lambda);
        v1 = v1 * Dd::from(map.base().deriv(t));
        out.push((v1, v23));
    }
    Ok(out)
}

/// Unit estimate of the unstable direction at `t₀` from pushing the
/// horizontal vector forward `k` steps.
pub fn estimate_unstable_line(map: &SkewMap, itinerary: &Itinerary, k: usize) -> Result<TangentVector> {
    let pushed = push_along(map, itinerary, &TangentVector::new(1.0, Complex64::new(0.0, 0.0)), k)?;
    Ok(pushed[k].normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::CircleMap;
    use crate::coding::{decode, encode};

    fn lin2() -> SkewMap {
        SkewMap::new(CircleMap::linear(2).unwrap(), 0.2).unwrap()
    }

    fn shub() -> SkewMap {
        SkewMap::new(CircleMap::shub(2, 0.2).unwrap(), 0.2).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vertical_vectors_scale_exactly() {
        let map = lin2();
        for i in 0..100 {
            let q = TorusPoint::new(i as f64 / 100.0, c(0.1, -0.3));
            let v = TangentVector::new(0.0, c(0.37, -1.1));
            let out = push_forward(&map, &q, &v);
            assert_eq!(out.v1, 0.0);
            assert_eq!(out.v23, v.v23 * 0.2);
        }
    }

    #[test]
    fn shub_linear_branch_push() {
        let map = shub();
        let t = 0.7;
        let out = push_forward(&map, &TorusPoint::new(t, c(0.0, 0.0)), &TangentVector::new(1.0, c(0.0, 0.0)));
        assert!((out.v1 - 3.0).abs() < 1e-12);
        assert!((out.v23 - c(0.0, PI) * unit_phase(t)).norm() < 1e-12);
    }

    #[test]
    fn push_matches_finite_differences() {
        let map = shub();
        let h = 1e-6;
        for i in 0..40 {
            let q = TorusPoint::new(0.013 + i as f64 / 41.0, c(0.2, 0.1));
            let v = TangentVector::new(0.8, c(-0.3, 0.5));
            let step = |s: f64| {
                let p = TorusPoint::new(q.t.value() + s * v.v1, q.z + v.v23 * s);
                map.apply(&p)
            };
            let (a, b) = (step(h), step(-h));
            let dt = (a.t.value() - b.t.value()).rem_euclid(1.0);
            let dt = if dt > 0.5 { dt - 1.0 } else { dt } / (2.0 * h);
            let dz = (a.z - b.z) / (2.0 * h);
            let out = push_forward(&map, &q, &v);
            assert!((out.v1 - dt).abs() < 1e-6 && (out.v23 - dz).norm() < 1e-6, "t = {}", q.t.value());
        }
    }

    #[test]
    fn push_is_linear() {
        let map = shub();
        let q = TorusPoint::new(0.31, c(0.0, 0.2));
        let u = TangentVector::new(0.4, c(1.0, -2.0));
        let w = TangentVector::new(-1.5, c(0.3, 0.7));
        let lhs = push_forward(&map, &q, &u.scale(2.5).add(&w.scale(-0.75)));
        let rhs = push_forward(&map, &q, &u).scale(2.5).add(&push_forward(&map, &q, &w).scale(-0.75));
        assert!((lhs.v1 - rhs.v1).abs() < 1e-12 && (lhs.v23 - rhs.v23).norm() < 1e-12);
    }

    #[test]
    fn aperture_examples() {
        assert!((valid_aperture(3.0, 0.2).unwrap() - 0.99 * 2.8 / PI).abs() < 1e-15);
        assert!(valid_aperture(3.0, 0.2).unwrap() >= 0.75);
        assert!((valid_aperture(2.0, 0.2).unwrap() - 0.567).abs() < 1e-3);
        assert!(matches!(valid_aperture(0.1, 0.2), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn vertical_ray_is_outside_the_cone() {
        let cone = ConeParam::for_degree(2);
        assert_eq!(cone.aperture(), 0.75);
        assert!(!cone.contains(&TangentVector::new(0.0, c(1.0, 0.0))));
        assert!(cone.contains(&TangentVector::new(1.0, c(0.0, 4.0 / 3.0))));
    }

    #[test]
    fn shub_branch_worst_case_margin() {
        // On the linear branch a boundary ray loses at most π + λ/c in the fiber.
        let map = shub();
        let cone = ConeParam::for_degree(2);
        let samples: Vec<TorusPoint> = (0..50).map(|i| TorusPoint::new(0.5 + i as f64 / 100.0, c(0.0, 0.0))).collect();
        let report = cone_invariance_check(&map, &cone, &samples, 64).unwrap();
        assert!(report.ok);
        let bound = 3.0 - 0.75 * (PI + 0.2 * 4.0 / 3.0);
        assert!(report.worst_margin >= bound - 1e-12 && report.worst_margin < bound + 0.01);
    }

    #[test]
    fn degree_aperture_fails_on_linear_base() {
        let map = lin2();
        let samples: Vec<TorusPoint> = (0..32).map(|i| TorusPoint::new(i as f64 / 32.0, c(0.0, 0.0))).collect();
        let report = cone_invariance_check(&map, &ConeParam::for_degree(2), &samples, 16).unwrap();
        assert!(!report.ok);
        let cone = ConeParam::new(valid_aperture(2.0, 0.2).unwrap()).unwrap();
        assert!(cone_invariance_check(&map, &cone, &samples, 16).unwrap().ok);
    }

    fn sample_itinerary(map: &SkewMap, seed: usize, depth: usize) -> Itinerary {
        let choices: Vec<usize> = (0..depth).map(|k| (seed * 13 + k * k) % 3).collect();
        Itinerary::from_branch_choices(map.base(), CirclePoint::new(0.17 + seed as f64 * 0.071), &choices).unwrap()
    }

    #[test]
    fn slope_ratio_is_contraction_over_expansion() {
        for map in [lin2(), shub()] {
            for seed in 0..10 {
                let it = sample_itinerary(&map, seed, 8);
                let v = TangentVector::new(1.0, c(0.5, 0.2));
                let w = TangentVector::new(2.0, c(-0.3, 0.9));
                let diffs = slope_contraction_rate(&map, &it, &v, &w, 6).unwrap();
                assert_eq!(diffs.len(), 7);
                assert!((diffs[0] / (v.slope() - w.slope()).norm() - 1.0).abs() < 1e-15);
                for j in 1..=6 {
                    // Step j pushes from t_{7-j} to t_{6-j}.
                    let dg = map.base().deriv(it.coords()[7 - j]);
                    let ratio = diffs[j] / diffs[j - 1];
                    assert!((ratio / (0.2 / dg) - 1.0).abs() < 1e-9, "ratio {ratio} vs {}", 0.2 / dg);
                }
                assert!(slope_contraction_rate(&map, &it, &v, &v, 6).unwrap().iter().all(|&x| x == 0.0));
                assert_eq!(slope_contraction_rate(&map, &it, &v, &w, 0).unwrap(), vec![diffs[0]]);
            }
        }
    }

    #[test]
    fn base_component_expands() {
        let map = shub();
        let it = sample_itinerary(&map, 3, 12);
        let pushed = push_along(&map, &it, &TangentVector::new(1.0, c(0.1, 0.0)), 12).unwrap();
        for j in 1..=12 {
            let dg = map.base().deriv(it.coords()[13 - j]);
            assert_eq!(pushed[j].v1, pushed[j - 1].v1 * dg);
        }
        assert!(pushed[12].v1 >= 1.8f64.powi(12));
    }

    #[test]
    fn unstable_estimates_are_cauchy_and_in_cone() {
        let map = lin2();
        let cone = ConeParam::new(valid_aperture(2.0, 0.2).unwrap()).unwrap();
        let it = sample_itinerary(&map, 5, 20);
        let p = decode(&map, &it).unwrap();
        let code = encode(&map, &p, 16).unwrap();
        let mut prev = estimate_unstable_line(&map, &code, 1).unwrap().slope();
        for k in 2..=12 {
            let e = estimate_unstable_line(&map, &code, k).unwrap();
            assert!(cone.contains(&e));
            let step = (e.slope() - prev).norm();
            // Initial spread of the slope is at most π/Dg.
            assert!(step <= 0.1f64.powi(k as i32 - 1) * PI / 2.0 + 1e-15, "k = {k}: {step}");
            prev = e.slope();
        }
    }

    #[test]
    fn fixed_point_eigenvector() {
        let map = lin2();
        let q = TorusPoint::new(0.0, c(0.625, 0.0));
        let zeros = encode(&map, &q, 40).unwrap();
        let e = estimate_unstable_line(&map, &zeros, 40).unwrap();
        // Eigenvector of the lower triangular Jacobian for the eigenvalue Dg.
        let m = map.jacobian(&q).to_matrix();
        let dg = m[0][0];
        let re = -m[1][0] / (m[1][1] - dg);
        let im = -m[2][0] / (m[2][2] - dg);
        assert!((e.slope() - c(re, im)).norm() < 1e-14);
        assert!((e.slope() - c(0.0, PI / 1.8)).norm() < 1e-14);
    }
}
