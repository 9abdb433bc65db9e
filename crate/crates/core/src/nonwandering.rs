//! Non-wandering structure of the base map and its lift to the skew product.
//!
//! A cover either has no sinks at all, in which case the whole circle is
//! non-wandering, or it has finitely many attracting orbits whose basins are
//! the preimages of their immediate basins. Whatever survives every preimage
//! level is a Cantor set plus the repelling orbits it contains.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleMap, CirclePoint, MapFamily, PeriodicOrbit, Stability};
use crate::error::{Error, Result};
use crate::real::half_phase;
use crate::skew::{SkewMap, TorusPoint};

pub const MAX_NW_PERIOD: usize = 10;
pub const MAX_GAP_DEPTH: usize = 20;
/// Largest number of gap intervals enumerated at one depth.
pub const GAP_BUDGET: u64 = 1 << 22;
/// Gaps shorter than this are dropped along with their preimages.
pub const MIN_GAP_LENGTH: f64 = 1e-12;
/// Base periodicity tolerance for [`nw_projection_check`].
pub const PROJECTION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NwKind {
    WholeCircle,
    CantorPlusOrbits,
}

/// An open arc `(lo, hi)` of the circle with `0 < hi − lo < 1`. `lo` may be
/// negative for an arc through `0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
}

impl Gap {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: CirclePoint) -> bool {
        let offset = (t.value() - self.lo).rem_euclid(1.0);
        offset > 0.0 && offset < self.length()
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Shifted by an integer so the midpoint lies in `[0, 1)`.
    fn normalized(self) -> Gap {
        let shift = self.midpoint().floor();
        Gap { lo: self.lo - shift, hi: self.hi - shift }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NwReport {
    pub kind: NwKind,
    pub attracting_orbits: Vec<PeriodicOrbit>,
    pub repelling_orbits: Vec<PeriodicOrbit>,
    pub gaps: Vec<Gap>,
    pub gap_measure: f64,
}

/// Classifies `NW(g)` from a periodic census up to `max_period` and the basin
/// gaps up to `depth` preimage levels.
pub fn classify_nw(map: &CircleMap, max_period: usize, depth: usize) -> Result<NwReport> {
    if max_period == 0 || max_period > MAX_NW_PERIOD {
        return Err(Error::InvalidParameter(format!(
            "max_period must lie in 1..={MAX_NW_PERIOD}, got {max_period}"
        )));
    }
    check_depth(depth)?;
    let mut attracting = Vec::new();
    let mut repelling = Vec::new();
    for p in 1..=max_period {
        for orbit in map.periodic_points(p)? {
            if orbit.period != p {
                continue;
            }
            match orbit.stability {
                Stability::Attracting => attracting.push(orbit),
                Stability::Repelling => repelling.push(orbit),
            }
        }
    }
    if attracting.is_empty() {
        return Ok(NwReport {
            kind: NwKind::WholeCircle,
            attracting_orbits: attracting,
            repelling_orbits: repelling,
            gaps: Vec::new(),
            gap_measure: 0.0,
        });
    }
    let gaps = match map.family() {
        MapFamily::Bump { .. } => cantor_gaps(map, depth)?,
        _ => {
            let mut seeds = Vec::new();
            for orbit in &attracting {
                seeds.extend(immediate_basins(map, orbit)?);
            }
            preimage_gaps(map, seeds, depth)?
        }
    };
    let gap_measure = gaps.iter().map(Gap::length).sum();
    Ok(NwReport {
        kind: NwKind::CantorPlusOrbits,
        attracting_orbits: attracting,
        repelling_orbits: repelling,
        gaps,
        gap_measure,
    })
}

/// Components of `g^{−depth}(−x_*, x_*)` for a bump map, sorted by midpoint.
///
/// The immediate basin is forward invariant, so this set already contains
/// every shallower preimage level.
pub fn cantor_gaps(map: &CircleMap, depth: usize) -> Result<Vec<Gap>> {
    check_depth(depth)?;
    let (lo, hi) = map.basin_interval()?;
    preimage_gaps(map, vec![Gap { lo, hi }], depth)
}

/// Immediate basins of the points of an attracting orbit of period `q`: the
/// arcs between the neighbouring fixed points of `g^q`.
pub fn immediate_basins(map: &CircleMap, orbit: &PeriodicOrbit) -> Result<Vec<Gap>> {
    if orbit.stability != Stability::Attracting {
        return Err(Error::NoBasin);
    }
    let q = orbit.period;
    let mut fixed: Vec<f64> = map
        .periodic_points(q)?
        .iter()
        .flat_map(|o| o.points.iter().map(|p| p.value()))
        .collect();
    fixed.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(q);
    for point in &orbit.points {
        let x = point.value();
        let i = fixed
            .iter()
            .position(|&f| CirclePoint::new(f).distance(*point) < 1e-9)
            .ok_or(Error::RootNotBracketed { target: x })?;
        if fixed.len() < 2 {
            return Err(Error::NoBasin);
        }
        let n = fixed.len();
        let left = fixed[(i + n - 1) % n] - if i == 0 { 1.0 } else { 0.0 };
        let right = fixed[(i + 1) % n] + if i + 1 == n { 1.0 } else { 0.0 };
        let shift = fixed[i] - x;
        let gap = Gap { lo: left - shift, hi: right - shift };
        // g^q must carry the arc onto itself without wrapping.
        let image = map.lift_iterate(gap.hi, q) - map.lift_iterate(gap.lo, q);
        if (image - gap.length()).abs() > 1e-6 {
            return Err(Error::NoBasin);
        }
        out.push(gap);
    }
    Ok(out)
}

/// Components of `g^{−depth}` of a forward-invariant union of arcs.
fn preimage_gaps(map: &CircleMap, seeds: Vec<Gap>, depth: usize) -> Result<Vec<Gap>> {
    let d = map.degree() as u64;
    let required = (seeds.len() as u64).saturating_mul(d.saturating_pow(depth as u32));
    if required > GAP_BUDGET {
        return Err(Error::BudgetExceeded { required, limit: GAP_BUDGET });
    }
    let mut level: Vec<Gap> = seeds.into_iter().map(Gap::normalized).collect();
    for _ in 0..depth {
        let next: Result<Vec<Vec<Gap>>> = level
            .par_iter()
            .map(|gap| {
                let base = gap.lo.floor();
                let (lo, hi) = (gap.lo - base, gap.hi - base);
                (0..map.degree())
                    .map(|j| {
                        let j = j as f64;
                        Ok(Gap { lo: map.lift_inverse(lo + j)?, hi: map.lift_inverse(hi + j)? }.normalized())
                    })
                    .filter(|g| g.as_ref().map_or(true, |g| g.length() >= MIN_GAP_LENGTH))
                    .collect()
            })
            .collect();
        level = next?.into_iter().flatten().collect();
    }
    level.sort_by(|a, b| a.midpoint().total_cmp(&b.midpoint()));
    Ok(level)
}

fn check_depth(depth: usize) -> Result<()> {
    if depth > MAX_GAP_DEPTH {
        return Err(Error::InvalidParameter(format!("depth must be at most {MAX_GAP_DEPTH}, got {depth}")));
    }
    Ok(())
}

/// Membership in a union of disjoint arcs by binary search.
#[derive(Clone, Debug)]
pub struct GapSet {
    arcs: Vec<(f64, f64)>,
}

impl GapSet {
    pub fn new(gaps: &[Gap]) -> Self {
        let mut arcs = Vec::with_capacity(gaps.len() + 1);
        for g in gaps {
            let lo = g.lo.rem_euclid(1.0);
            let hi = lo + g.length();
            if hi > 1.0 {
                arcs.push((lo, 1.0));
                arcs.push((-1.0, hi - 1.0));
            } else {
                arcs.push((lo, hi));
            }
        }
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GapSet { arcs }
    }

    pub fn contains(&self, t: CirclePoint) -> bool {
        let x = t.value();
        let i = self.arcs.partition_point(|a| a.0 < x);
        i > 0 && x < self.arcs[i - 1].1
    }
}

/// `min g′` over `samples` equally spaced points outside every gap;
/// infinite when no sample survives.
pub fn min_derivative_on_complement(map: &CircleMap, gaps: &[Gap], samples: usize) -> f64 {
    let set = GapSet::new(gaps);
    (0..samples)
        .into_par_iter()
        .map(|i| CirclePoint::new(i as f64 / samples as f64))
        .filter(|&t| !set.contains(t))
        .map(|t| map.deriv(t))
        .reduce(|| f64::INFINITY, f64::min)
}

/// The unique periodic orbit of `F` over a periodic orbit of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedOrbit {
    pub base: PeriodicOrbit,
    pub points: Vec<TorusPoint>,
    pub period: usize,
}

impl LiftedOrbit {
    /// `max |Fᵖ(x) − x|` over the orbit.
    pub fn residual(&self, map: &SkewMap) -> f64 {
        self.points
            .iter()
            .map(|p| map.iterate(p, self.period).distance(p))
            .fold(0.0, f64::max)
    }
}

/// Over one period the fiber maps compose to `z ↦ λᵖ z + c`, whose fixed
/// point `c / (1 − λᵖ)` is the lift of the first orbit point.
pub fn lift_periodic_orbit(map: &SkewMap, base: &PeriodicOrbit) -> LiftedOrbit {
    let lambda = map.contraction();
    let p = base.period;
    let c = base
        .points
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, t| acc * lambda + half_phase(t.value()));
    let z0 = c / (1.0 - lambda.powi(p as i32));
    let mut points = Vec::with_capacity(p);
    let mut q = TorusPoint { t: base.points[0], z: z0 };
    for i in 0..p {
        // Keep the census value of each base point rather than the pushed one.
        q.t = base.points[i];
        points.push(q);
        q = map.apply(&q);
    }
    LiftedOrbit { base: base.clone(), points, period: p }
}

/// Whether every lifted point projects to a periodic point of the base.
pub fn nw_projection_check(map: &SkewMap, lifted: &[LiftedOrbit]) -> bool {
    lifted.iter().all(|orbit| {
        orbit.points.iter().all(|p| {
            let mut t = p.t;
            for _ in 0..orbit.period {
                t = map.base().eval(t);
            }
            t.distance(p.t) <= PROJECTION_TOLERANCE
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> CircleMap {
        CircleMap::bump(2, 0.5, 0.2).unwrap()
    }

    /// Whether some `g^k(t)`, `k ≤ depth`, falls in the seed arc.
    fn reaches(map: &CircleMap, seed: &Gap, t: f64, depth: usize) -> bool {
        let mut t = CirclePoint::new(t);
        for _ in 0..=depth {
            if seed.contains(t) {
                return true;
            }
            t = map.eval(t);
        }
        false
    }

    #[test]
    fn classification_examples() {
        let lin = classify_nw(&CircleMap::linear(2).unwrap(), 6, 4).unwrap();
        assert_eq!(lin.kind, NwKind::WholeCircle);
        assert!(lin.attracting_orbits.is_empty() && lin.gaps.is_empty());
        assert_eq!(lin.gap_measure, 0.0);

        let b = classify_nw(&bump(), 6, 4).unwrap();
        assert_eq!(b.kind, NwKind::CantorPlusOrbits);
        assert_eq!(b.attracting_orbits.len(), 1);
        let sink = &b.attracting_orbits[0];
        assert_eq!(sink.period, 1);
        assert!(sink.points[0].value().abs() < 1e-12);
        assert!((sink.multiplier - 0.5).abs() < 1e-10);

        let s = classify_nw(&CircleMap::shub(2, 0.2).unwrap(), 4, 3).unwrap();
        assert_eq!(s.kind, NwKind::CantorPlusOrbits);
        assert_eq!(s.attracting_orbits.len(), 1);
        assert!((s.attracting_orbits[0].points[0].value() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gap_counts_and_depth_zero() {
        let g = bump();
        let (lo, hi) = g.basin_interval().unwrap();
        assert_eq!(cantor_gaps(&g, 0).unwrap(), vec![Gap { lo, hi }]);
        // The preimage of the immediate basin contains the basin itself, so
        // depth k leaves d^k components.
        for k in 1..=6 {
            assert_eq!(cantor_gaps(&g, k).unwrap().len(), 1 << k);
        }
        assert_eq!(cantor_gaps(&CircleMap::linear(2).unwrap(), 1), Err(Error::NoBasin));
        assert!(cantor_gaps(&g, 21).is_err());
    }

    #[test]
    fn gaps_match_grid_membership_oracle() {
        let g = bump();
        let (lo, hi) = g.basin_interval().unwrap();
        let seed = Gap { lo, hi };
        let n = 200_000;
        for depth in [1, 3, 5] {
            let gaps = cantor_gaps(&g, depth).unwrap();
            let set = GapSet::new(&gaps);
            let inside: Vec<bool> = (0..n).map(|i| reaches(&g, &seed, i as f64 / n as f64, depth)).collect();
            let mut mismatches = 0;
            for (i, &m) in inside.iter().enumerate() {
                if m != set.contains(CirclePoint::new(i as f64 / n as f64)) {
                    mismatches += 1;
                }
            }
            assert_eq!(mismatches, 0, "depth {depth}");
            // Runs of membership around the circle.
            let runs = (0..n).filter(|&i| inside[i] && !inside[(i + n - 1) % n]).count();
            let resolvable = gaps.iter().filter(|g| g.length() > 2.0 / n as f64).count();
            assert_eq!(runs, resolvable, "depth {depth}");
        }
    }

    #[test]
    fn gaps_are_disjoint_and_measure_grows() {
        let g = bump();
        let mut last = 0.0;
        for depth in 0..=8 {
            let gaps = cantor_gaps(&g, depth).unwrap();
            for w in gaps.windows(2) {
                assert!(w[0].hi <= w[1].lo, "{w:?}");
            }
            let wrap = gaps.last().unwrap().hi - 1.0;
            assert!(wrap <= gaps[0].lo);
            let measure: f64 = gaps.iter().map(Gap::length).sum();
            assert!(measure > last && measure < 1.0);
            last = measure;
        }
    }

    #[test]
    fn census_basins_agree_with_profile_basin() {
        let g = bump();
        let report = classify_nw(&g, 3, 0).unwrap();
        let census = immediate_basins(&g, &report.attracting_orbits[0]).unwrap();
        let (lo, hi) = g.basin_interval().unwrap();
        assert_eq!(census.len(), 1);
        assert!((census[0].lo - lo).abs() < 1e-9 && (census[0].hi - hi).abs() < 1e-9);
    }

    #[test]
    fn shub_gaps() {
        let g = CircleMap::shub(2, 0.2).unwrap();
        let s = classify_nw(&g, 2, 1).unwrap();
        assert_eq!(s.gaps.len(), 2);
        assert!((s.gaps[0].lo).abs() < 1e-9 && (s.gaps[0].hi - 0.5).abs() < 1e-9);
        assert!((s.gaps[1].lo - 2.0 / 3.0).abs() < 1e-9 && (s.gaps[1].hi - 5.0 / 6.0).abs() < 1e-9);
        assert!(min_derivative_on_complement(&g, &s.gaps, 10_000) > 1.0);
    }

    #[test]
    fn derivative_on_complement() {
        let g = bump();
        let mut last = 0.0;
        for depth in [0, 2, 4, 8] {
            let m = min_derivative_on_complement(&g, &cantor_gaps(&g, depth).unwrap(), 10_000);
            assert!(m > 1.0 && m >= last);
            last = m;
        }
        assert_eq!(min_derivative_on_complement(&CircleMap::linear(2).unwrap(), &[], 10_000), 2.0);
    }

    #[test]
    fn backward_invariance_proxy() {
        let g = bump();
        for k in 1..=6 {
            let outer = GapSet::new(&cantor_gaps(&g, k).unwrap());
            let inner = GapSet::new(&cantor_gaps(&g, k - 1).unwrap());
            for i in 0..2000 {
                let t = CirclePoint::new(i as f64 / 2000.0 + 1.3e-4);
                if outer.contains(t) {
                    continue;
                }
                for pre in g.preimages(t).unwrap() {
                    assert!(!inner.contains(pre));
                }
            }
        }
    }

    #[test]
    fn lifted_fixed_point_and_period_two() {
        let map = SkewMap::new(bump(), 0.2).unwrap();
        let sink = &classify_nw(&bump(), 1, 0).unwrap().attracting_orbits[0];
        let q = lift_periodic_orbit(&map, sink);
        assert!((q.points[0].z - Complex64::new(0.625, 0.0)).norm() < 1e-12);

        let lin = SkewMap::new(CircleMap::linear(2).unwrap(), 0.2).unwrap();
        let orbit = lin.base().periodic_points(2).unwrap().into_iter().find(|o| o.period == 2).unwrap();
        let lifted = lift_periodic_orbit(&lin, &orbit);
        assert_eq!(lifted.points.len(), 2);
        assert!(lifted.residual(&lin) <= 1e-10);
        // Closed forms; the phase added at each step is that of the source point.
        let w = |t: f64| half_phase(t);
        let over_third = (w(1.0 / 3.0) * 0.2 + w(2.0 / 3.0)) / (1.0 - 0.04);
        let over_two_thirds = (w(2.0 / 3.0) * 0.2 + w(1.0 / 3.0)) / (1.0 - 0.04);
        assert!((lifted.points[0].t.value() - 1.0 / 3.0).abs() < 1e-12);
        assert!((lifted.points[0].z - over_third).norm() < 1e-12);
        assert!((lifted.points[1].z - over_two_thirds).norm() < 1e-12);
    }

    #[test]
    fn lifts_are_unique_fiber_attractors() {
        let map = SkewMap::new(CircleMap::linear(2).unwrap(), 0.2).unwrap();
        for p in 1..=6 {
            let orbits: Vec<_> = map.base().periodic_points(p).unwrap().into_iter().filter(|o| o.period == p).collect();
            let lifted: Vec<_> = orbits.iter().map(|o| lift_periodic_orbit(&map, o)).collect();
            assert!(nw_projection_check(&map, &lifted));
            for l in &lifted {
                assert!(l.residual(&map) <= 1e-10);
                // Every start in the fiber converges to the same point under Fᵖ.
                for s in 0..4 {
                    let phase = half_phase(s as f64 / 4.0) * 1.6;
                    let mut q = TorusPoint { t: l.points[0].t, z: phase };
                    for _ in 0..(40 / p + 2) {
                        q = map.iterate(&q, p);
                        q.t = l.points[0].t;
                    }
                    assert!((q.z - l.points[0].z).norm() < 1e-12);
                }
            }
            // Distinct base orbits give distinct lifted orbits.
            let firsts: Vec<_> = lifted.iter().map(|l| l.points[0]).collect();
            for i in 0..firsts.len() {
                for j in 0..i {
                    assert!(firsts[i].distance(&firsts[j]) > 1e-6);
                }
            }
        }
    }

    #[test]
    fn fake_orbit_negative_control() {
        let map = SkewMap::new(CircleMap::linear(2).unwrap(), 0.2).unwrap();
        let orbit = map.base().periodic_points(3).unwrap().into_iter().find(|o| o.period == 3).unwrap();
        let mut fake = lift_periodic_orbit(&map, &orbit);
        fake.points[0].z += Complex64::new(1e-3, 0.0);
        assert!(fake.residual(&map) > 1e-10);
        assert!(nw_projection_check(&map, &[]));
    }
}
