//! One-parameter families `μ ↦ F_μ` from the solenoid to the
//! zero-dimensional regime.
//!
//! At `μ = 0` the base is `x ↦ dx` and the attractor is a solenoid. For
//! `μ > 0` a bump opens an attracting fixed point, the base non-wandering set
//! collapses to a Cantor set plus orbits, and the skew product carries a sink
//! over the base sink.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::CircleMap;
use crate::error::{Error, Result};
use crate::nonwandering::{classify_nw, lift_periodic_orbit, NwKind};
use crate::skew::{SkewMap, TorusPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    ExpandingAttractor,
    ZeroDimPlusPeriodic,
}

/// A continuous choice of base map for every `μ ∈ [0, 1]`.
pub trait SweepPath: Sync {
    fn base_at(&self, degree: u32, mu: f64) -> Result<CircleMap>;
}

/// `ε(μ) = a·μ`, `δ(μ) = b·μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpPath {
    eps_rate: f64,
    delta_rate: f64,
}

impl Default for BumpPath {
    fn default() -> Self {
        BumpPath { eps_rate: 0.5, delta_rate: 0.2 }
    }
}

impl BumpPath {
    pub fn new(eps_rate: f64, delta_rate: f64) -> Result<Self> {
        if !(eps_rate > 0.0 && eps_rate < 1.0) {
            return Err(Error::InvalidConfig(format!("eps rate must lie in (0, 1), got {eps_rate}")));
        }
        if !(delta_rate > 0.0 && delta_rate < 0.25) {
            return Err(Error::InvalidConfig(format!("delta rate must lie in (0, 1/4), got {delta_rate}")));
        }
        Ok(BumpPath { eps_rate, delta_rate })
    }

    pub fn eps(&self, mu: f64) -> f64 {
        self.eps_rate * mu
    }

    pub fn delta(&self, mu: f64) -> f64 {
        self.delta_rate * mu
    }
}

impl SweepPath for BumpPath {
    fn base_at(&self, degree: u32, mu: f64) -> Result<CircleMap> {
        CircleMap::bump(degree, self.eps(mu), self.delta(mu))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig<P = BumpPath> {
    pub grid: Vec<f64>,
    pub path: P,
    pub degree: u32,
    pub lambda: f64,
    /// Longest period searched for sinks.
    pub max_period: usize,
    /// Preimage levels of basin gaps.
    pub depth: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            path: BumpPath::default(),
            degree: 2,
            lambda: 0.2,
            max_period: 6,
            depth: 8,
        }
    }
}

impl<P: SweepPath> SweepConfig<P> {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("the mu grid is empty".into()));
        }
        if self.grid.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidConfig("mu values must lie in [0, 1]".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("the mu grid must be strictly ascending".into()));
        }
        Ok(())
    }

    pub fn map_at(&self, mu: f64) -> Result<SkewMap> {
        SkewMap::new(self.path.base_at(self.degree, mu)?, self.lambda)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub n_attracting_orbits: usize,
    pub gap_measure: f64,
    /// First point of the lift of the first attracting base orbit.
    pub lifted_sink: Option<TorusPoint>,
    /// Period of the lifted sink.
    pub sink_period: Option<usize>,
}

/// Classifies the base and lifts its first sink.
pub fn regime_detect(map: &SkewMap, max_period: usize, depth: usize) -> Result<RegimeReport> {
    let nw = classify_nw(map.base(), max_period, depth)?;
    Ok(match nw.kind {
        NwKind::WholeCircle => RegimeReport {
            regime: Regime::ExpandingAttractor,
            n_attracting_orbits: 0,
            gap_measure: 0.0,
            lifted_sink: None,
            sink_period: None,
        },
        NwKind::CantorPlusOrbits => {
            let lifted = lift_periodic_orbit(map, &nw.attracting_orbits[0]);
            RegimeReport {
                regime: Regime::ZeroDimPlusPeriodic,
                n_attracting_orbits: nw.attracting_orbits.len(),
                gap_measure: nw.gap_measure,
                lifted_sink: Some(lifted.points[0]),
                sink_period: Some(lifted.period),
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub report: Result<RegimeReport>,
}

/// One row per grid value, in grid order. Failures stay in their row.
pub fn run_sweep<P: SweepPath>(cfg: &SweepConfig<P>) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    Ok(cfg
        .grid
        .par_iter()
        .map(|&mu| SweepRow {
            mu,
            report: cfg.map_at(mu).and_then(|map| regime_detect(&map, cfg.max_period, cfg.depth)),
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkRow {
    pub mu: f64,
    pub sink: TorusPoint,
}

/// Lifted sinks for every `μ > 0` that has one.
pub fn sink_trace<P: SweepPath>(cfg: &SweepConfig<P>) -> Result<Vec<SinkRow>> {
    let rows = run_sweep(cfg)?;
    let mut out = Vec::new();
    for row in rows.into_iter().filter(|r| r.mu > 0.0) {
        if let Some(sink) = row.report?.lifted_sink {
            out.push(SinkRow { mu: row.mu, sink });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::half_phase;
    use num_complex::Complex64;

    #[test]
    fn regime_examples() {
        let lin = SkewMap::new(CircleMap::linear(2).unwrap(), 0.2).unwrap();
        let r = regime_detect(&lin, 6, 8).unwrap();
        assert_eq!(r.regime, Regime::ExpandingAttractor);
        assert_eq!((r.n_attracting_orbits, r.gap_measure, r.lifted_sink), (0, 0.0, None));

        let bump = SkewMap::new(CircleMap::bump(2, 0.5, 0.2).unwrap(), 0.2).unwrap();
        let r = regime_detect(&bump, 6, 8).unwrap();
        assert_eq!(r.regime, Regime::ZeroDimPlusPeriodic);
        let sink = r.lifted_sink.unwrap();
        assert!(sink.t.value().abs() < 1e-12);
        assert!((sink.z - Complex64::new(0.625, 0.0)).norm() < 1e-10);
        assert!(bump.apply(&sink).distance(&sink) < 1e-10);

        let shub = SkewMap::new(CircleMap::shub(2, 0.2).unwrap(), 0.2).unwrap();
        assert_eq!(regime_detect(&shub, 4, 4).unwrap().regime, Regime::ZeroDimPlusPeriodic);
    }

    #[test]
    fn default_sweep_switches_once() {
        let cfg = SweepConfig::default();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 11);
        let regimes: Vec<Regime> = rows.iter().map(|r| r.report.as_ref().unwrap().regime).collect();
        assert_eq!(regimes[0], Regime::ExpandingAttractor);
        assert!(regimes[1..].iter().all(|&r| r == Regime::ZeroDimPlusPeriodic));
        let switches = regimes.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(switches, 1);

        let measures: Vec<f64> = rows.iter().map(|r| r.report.as_ref().unwrap().gap_measure).collect();
        for w in measures.windows(2) {
            assert!(w[1] >= w[0], "{measures:?}");
        }
        for r in &rows[1..] {
            let rep = r.report.as_ref().unwrap();
            let map = cfg.map_at(r.mu).unwrap();
            let sink = rep.lifted_sink.unwrap();
            assert!((sink.z - Complex64::new(0.625, 0.0)).norm() < 1e-10);
            assert!(map.apply(&sink).distance(&sink) < 1e-10);
        }
    }

    #[test]
    fn c0_distance_shrinks_with_mu() {
        let path = BumpPath::default();
        let mut last = f64::INFINITY;
        for mu in [1.0, 0.5, 0.25, 0.1, 0.01] {
            let sup = path.base_at(2, mu).unwrap().sup_distance_to_linear(100_000).unwrap();
            assert!(sup <= path.delta(mu) * 2.0);
            assert!(sup < last);
            last = sup;
        }
        assert_eq!(path.base_at(2, 0.0).unwrap().sup_distance_to_linear(1000).unwrap(), 0.0);
    }

    #[test]
    fn grid_validation_and_row_errors() {
        let mut cfg = SweepConfig::default();
        cfg.grid = vec![];
        assert!(run_sweep(&cfg).is_err());
        cfg.grid = vec![0.5, 0.2];
        assert!(run_sweep(&cfg).is_err());
        cfg.grid = vec![0.0];
        assert_eq!(run_sweep(&cfg).unwrap().len(), 1);
        // A path leaving the admissible rectangle fails only its own rows.
        struct Wild;
        impl SweepPath for Wild {
            fn base_at(&self, degree: u32, mu: f64) -> Result<CircleMap> {
                CircleMap::bump(degree, 0.5 * mu, 0.3 * mu)
            }
        }
        let cfg = SweepConfig { grid: vec![0.0, 0.5, 1.0], path: Wild, degree: 2, lambda: 0.2, max_period: 4, depth: 4 };
        let rows = run_sweep(&cfg).unwrap();
        assert!(rows[0].report.is_ok() && rows[1].report.is_ok());
        assert!(rows[2].report.as_ref().unwrap_err().is_config());
    }

    #[test]
    fn sink_trace_default_path() {
        let rows = sink_trace(&SweepConfig::default()).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.mu > 0.0));
        for r in rows {
            assert!((r.sink.z - Complex64::new(0.625, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn sink_trace_follows_moving_fixed_point() {
        // The sink sits over 0 for bump bases and over 1/4 for Shub bases.
        struct Hop;
        impl SweepPath for Hop {
            fn base_at(&self, degree: u32, mu: f64) -> Result<CircleMap> {
                if mu < 0.5 {
                    CircleMap::bump(degree, 0.5 * mu, 0.2 * mu)
                } else {
                    CircleMap::shub(degree, 0.4 * (1.0 - mu) + 0.1)
                }
            }
        }
        for lambda in [0.05, 0.2] {
            let cfg = SweepConfig { grid: vec![0.2, 0.4, 0.6, 0.9], path: Hop, lambda, max_period: 3, depth: 4, degree: 2 };
            let rows = sink_trace(&cfg).unwrap();
            assert_eq!(rows.len(), 4);
            for r in rows {
                let t0 = if r.mu < 0.5 { 0.0 } else { 0.25 };
                assert!(r.sink.t.distance(crate::CirclePoint::new(t0)) < 1e-12);
                let z = half_phase(t0) / (1.0 - lambda);
                assert!((r.sink.z - z).norm() < 1e-10);
            }
        }
    }
}
