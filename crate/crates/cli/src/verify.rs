//! End-to-end property suites behind `solenoid verify`.

use std::collections::BTreeMap;

use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use serde_json::{json, Value};
use solenoid::hyperbolicity::push_along;
use solenoid::nonwandering::{min_derivative_on_complement, GapSet};
use solenoid::real::modulus;
use solenoid::{
    classify_nw, conjugacy_check, cone_invariance_check, cross_section, decode, encode, lift_periodic_orbit,
    nw_projection_check, slope_contraction_rate, valid_aperture, CircleMap, CirclePoint, ConeParam, DoubleDouble,
    Gap, Itinerary, MapFamily, Real, Result, SkewMap, TangentVector, TorusPoint,
};

use crate::sampling::Sampler;

pub const SUITES: [&str; 6] = ["census", "cones", "conjugacy", "diameter", "disjointness", "roundtrip"];

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub conjugacy_points: usize,
    pub conjugacy_depth: usize,
    pub roundtrip_points: usize,
    pub cone_points: usize,
    pub gap_depth: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            conjugacy_points: 1000,
            conjugacy_depth: 30,
            roundtrip_points: 500,
            cone_points: 625,
            gap_depth: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub pass: bool,
    pub metrics: BTreeMap<String, Value>,
}

impl SuiteOutcome {
    pub fn to_json(&self) -> Value {
        let mut m: serde_json::Map<String, Value> = self.metrics.clone().into_iter().collect();
        m.insert("pass".into(), Value::Bool(self.pass));
        Value::Object(m)
    }
}

fn outcome(pass: bool, metrics: Value) -> SuiteOutcome {
    let metrics = match metrics {
        Value::Object(m) => m.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    SuiteOutcome { pass, metrics }
}

/// Runs one suite by name.
pub fn run_suite(name: &str, map: &SkewMap, opts: &VerifyOptions) -> Result<SuiteOutcome> {
    // Each suite draws from its own stream so filtering does not shift the others.
    let seed = opts.seed ^ (SUITES.iter().position(|s| *s == name).unwrap_or(0) as u64).wrapping_mul(0x9e37_79b9);
    let mut rng = Sampler::new(seed);
    match name {
        "census" => census(map),
        "cones" => cones(map, opts, &mut rng),
        "conjugacy" => conjugacy(map, opts, &mut rng),
        "diameter" => diameter(map, &mut rng),
        "disjointness" => disjointness(map, &mut rng),
        "roundtrip" => roundtrip(map, opts, &mut rng),
        other => Err(solenoid::Error::InvalidConfig(format!("unknown suite {other}"))),
    }
}

/// Basin gaps of the base up to `depth` preimage levels; empty for bases
/// without sinks.
pub fn base_gaps(base: &CircleMap, depth: usize) -> Result<Vec<Gap>> {
    if base.family() == MapFamily::Linear {
        return Ok(Vec::new());
    }
    let d = base.degree() as u64;
    let mut period = 1;
    while period < 4 && d.pow(period as u32 + 1) <= 1 << 12 {
        period += 1;
    }
    let mut depth = depth;
    while depth > 0 && d.saturating_pow(depth as u32) > 1 << 18 {
        depth -= 1;
    }
    Ok(classify_nw(base, period, depth)?.gaps)
}

/// Smallest base derivative outside the gaps.
pub fn min_expansion(base: &CircleMap, gaps: &[Gap]) -> f64 {
    if base.family() == MapFamily::Linear {
        return base.degree() as f64;
    }
    min_derivative_on_complement(base, gaps, 10_000)
}

/// Deepest level whose disks (radius `λⁿ`) double-double still resolves.
pub fn resolvable_depth(lambda: f64) -> usize {
    depth_above(lambda, 1e-24)
}

fn depth_above(lambda: f64, radius: f64) -> usize {
    (radius.ln() / lambda.ln()).floor() as usize
}

fn diameter(map: &SkewMap, rng: &mut Sampler) -> Result<SuiteOutcome> {
    type D = DoubleDouble;
    let lambda = map.contraction();
    // Relative accuracy 1e-9 on a diameter of 2λⁿ needs λⁿ well above 1e-32.
    let max_depth = depth_above(lambda, 1e-22).min(20) as i32;
    let fibers: Vec<f64> = (0..4).map(|_| rng.next_f64()).collect();
    let mut worst = 0.0f64;
    for &t in &fibers {
        for axis in [Complex::new(D::from(1.0), D::from(0.0)), Complex::new(D::from(0.0), D::from(1.0))] {
            let a = TorusPoint::<D>::new(D::from(t), axis);
            let b = TorusPoint::<D>::new(D::from(t), -axis);
            let (mut pa, mut pb) = (a, b);
            for n in 0..=max_depth {
                let expected = 2.0 * lambda.powi(n);
                let diam = modulus(pa.z - pb.z).to_f64();
                worst = worst.max((diam - expected).abs() / expected);
                pa = map.apply(&pa);
                pb = map.apply(&pb);
            }
        }
    }
    Ok(outcome(worst <= 1e-9, json!({ "max_depth": max_depth, "max_relative_error": worst })))
}

fn disjointness(map: &SkewMap, rng: &mut Sampler) -> Result<SuiteOutcome> {
    let d = map.base().degree() as u64;
    let bound = SkewMap::injectivity_bound(map.base().degree());
    let bound_ok = map.contraction() < bound;
    let injectivity = map.check_injectivity(4096)?;
    let mut max_depth = 1;
    // Sections are built in f64; stop while sibling centers stay resolvable.
    let f64_depth = depth_above(map.contraction(), 1e-12);
    while max_depth < 12.min(f64_depth) && d.pow(max_depth as u32 + 1) <= 1 << 16 {
        max_depth += 1;
    }
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..2 {
        let fiber = CirclePoint::new(rng.next_f64());
        for depth in 1..=max_depth {
            let section = cross_section(map, fiber, depth)?;
            worst_ratio = worst_ratio.min(section.min_center_gap() / (2.0 * section.radius()));
        }
    }
    Ok(outcome(
        bound_ok && injectivity.ok && worst_ratio > 1.0,
        json!({
            "lambda": map.contraction(),
            "lambda_bound": bound,
            "lambda_within_bound": bound_ok,
            "preimage_gap": injectivity.min_center_gap,
            "preimage_gap_required": injectivity.required,
            "section_depth": max_depth,
            "section_gap_ratio": worst_ratio,
        }),
    ))
}

fn conjugacy(map: &SkewMap, opts: &VerifyOptions, rng: &mut Sampler) -> Result<SuiteOutcome> {
    type D = DoubleDouble;
    let depth = opts.conjugacy_depth.min(resolvable_depth(map.contraction()));
    let branches: Vec<_> = (0..opts.conjugacy_points).map(|_| rng.branch(map.base(), depth, None)).collect();
    let failures = branches
        .par_iter()
        .filter(|(t0, choices)| {
            let t0 = CirclePoint::<D>::new(D::from(t0.value()));
            let ok = Itinerary::from_branch_choices(map.base(), t0, choices)
                .and_then(|it| decode(map, &it))
                .and_then(|p| conjugacy_check(map, &p, depth));
            !matches!(ok, Ok(true))
        })
        .count();
    Ok(outcome(
        failures == 0,
        json!({ "depth": depth, "points": opts.conjugacy_points, "failures": failures }),
    ))
}

fn roundtrip(map: &SkewMap, opts: &VerifyOptions, rng: &mut Sampler) -> Result<SuiteOutcome> {
    // Extended precision keeps depth-20 codes meaningful for small λ, where
    // 2λ²⁰ drops below f64 resolution.
    type D = DoubleDouble;
    let lambda = map.contraction();
    let mut per_depth = serde_json::Map::new();
    let mut pass = true;
    let mut skipped = Vec::new();
    for r in [5usize, 10, 20] {
        if r > resolvable_depth(lambda) {
            skipped.push(r);
            continue;
        }
        let branches: Vec<_> = (0..opts.roundtrip_points).map(|_| rng.branch(map.base(), 40, None)).collect();
        let ratios: Vec<Option<f64>> = branches
            .par_iter()
            .map(|(t0, choices)| {
                let t0 = CirclePoint::<D>::new(D::from(t0.value()));
                let it = Itinerary::from_branch_choices(map.base(), t0, choices).ok()?;
                let p = decode(map, &it).ok()?;
                let q = decode(map, &encode(map, &p, r).ok()?).ok()?;
                Some((q.distance(&p) / D::from(2.0 * lambda.powi(r as i32))).to_f64())
            })
            .collect();
        let failures = ratios.iter().filter(|x| !matches!(x, Some(v) if *v <= 1.0)).count();
        let worst = ratios.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        pass &= failures == 0;
        per_depth.insert(r.to_string(), json!({ "failures": failures, "worst_ratio": worst }));
    }
    Ok(outcome(pass, json!({ "points": opts.roundtrip_points, "depths": per_depth, "skipped_depths": skipped })))
}

fn cones(map: &SkewMap, opts: &VerifyOptions, rng: &mut Sampler) -> Result<SuiteOutcome> {
    let lambda = map.contraction();
    let gap_list = base_gaps(map.base(), opts.gap_depth)?;
    let dg_min = min_expansion(map.base(), &gap_list);
    let gaps = (!gap_list.is_empty()).then(|| GapSet::new(&gap_list));
    let aperture = valid_aperture(dg_min, lambda)?;
    let cone = ConeParam::new(aperture)?;

    let samples: Vec<TorusPoint> = (0..opts.cone_points)
        .map(|_| rng.itinerary(map.base(), 30, gaps.as_ref()).and_then(|it| decode(map, &it)))
        .collect::<Result<_>>()?;
    let report = cone_invariance_check(map, &cone, &samples, 16)?;

    let mut worst_slope_error = 0.0f64;
    for _ in 0..20 {
        let it = rng.itinerary(map.base(), 8, gaps.as_ref())?;
        let phase = rng.next_f64();
        let v = TangentVector::new(1.0, solenoid::real::unit_phase(phase) * (0.5 / aperture));
        let w = TangentVector::new(1.0, solenoid::real::unit_phase(phase + 0.5) * (0.9 / aperture));
        let diffs = slope_contraction_rate(map, &it, &v, &w, 6)?;
        for j in 1..=6 {
            let dg = map.base().deriv(it.coords()[7 - j]);
            let ratio = diffs[j] / diffs[j - 1];
            worst_slope_error = worst_slope_error.max((ratio / (lambda / dg) - 1.0).abs());
        }
        // Base components multiply by Dg exactly.
        let pushed = push_along(map, &it, &v, 6)?;
        for j in 1..=6 {
            if pushed[j].v1 != pushed[j - 1].v1 * map.base().deriv(it.coords()[7 - j]) {
                worst_slope_error = f64::INFINITY;
            }
        }
    }

    let mut vertical_exact = true;
    for _ in 0..1000 {
        let q = TorusPoint::new(rng.next_f64(), Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5));
        let v = TangentVector::new(0.0, Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0));
        let out = solenoid::push_forward(map, &q, &v);
        vertical_exact &= out.v1 == 0.0 && out.v23 == v.v23 * lambda;
    }

    Ok(outcome(
        report.ok && worst_slope_error <= 1e-9 && vertical_exact,
        json!({
            "aperture": aperture,
            "min_expansion": dg_min,
            "pairs": report.pairs,
            "worst_margin": report.worst_margin,
            "slope_ratio_relative_error": worst_slope_error,
            "vertical_exact": vertical_exact,
        }),
    ))
}

fn census(map: &SkewMap) -> Result<SuiteOutcome> {
    let base = map.base();
    let d = base.degree() as u64;
    let mut max_p = 1;
    while max_p < 10 && d.pow(max_p as u32 + 1) <= 1 << 10 {
        max_p += 1;
    }
    let linear = base.family() == MapFamily::Linear;
    let mut counts_ok = true;
    let mut counts = Vec::new();
    let mut worst_residual = 0.0f64;
    let mut lifts_ok = true;
    for p in 1..=max_p {
        let orbits = base.periodic_points(p)?;
        let points: usize = orbits.iter().map(|o| o.points.len()).sum();
        counts.push(points);
        if linear && points as u64 != d.pow(p as u32) - 1 {
            counts_ok = false;
        }
        if p > 6 {
            continue;
        }
        let minimal: Vec<_> = orbits.iter().filter(|o| o.period == p).collect();
        let lifted: Vec<_> = minimal.iter().map(|o| lift_periodic_orbit(map, o)).collect();
        lifts_ok &= lifted.len() == minimal.len() && nw_projection_check(map, &lifted);
        for l in &lifted {
            worst_residual = worst_residual.max(l.residual(map));
            // Fᵖ contracts the fiber over each orbit point onto the lift.
            for s in 0..4 {
                let mut q = TorusPoint { t: l.points[0].t, z: solenoid::real::half_phase(s as f64 / 4.0) * 1.8 };
                for _ in 0..(60 / p + 2) {
                    q = map.iterate(&q, p);
                    q.t = l.points[0].t;
                }
                lifts_ok &= (q.z - l.points[0].z).norm() < 1e-9;
            }
        }
    }
    Ok(outcome(
        counts_ok && lifts_ok && worst_residual <= 1e-10,
        json!({
            "max_period": max_p,
            "point_counts": counts,
            "counts_match_linear": if linear { Value::Bool(counts_ok) } else { Value::Null },
            "lift_residual": worst_residual,
            "lifts_unique": lifts_ok,
        }),
    ))
}
