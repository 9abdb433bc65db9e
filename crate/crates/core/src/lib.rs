//! Numerical laboratory for Smale–Vietoris skew products on the solid torus.

pub mod attractor;
pub mod circle;
pub mod coding;
pub mod double_double;
pub mod error;
pub mod hyperbolicity;
pub mod nonwandering;
pub mod real;
pub mod skew;
pub mod sweep;

pub use circle::{CircleMap, CirclePoint, MapFamily, PeriodicOrbit, Stability};
pub use double_double::DoubleDouble;
pub use error::{Error, Result};
pub use real::Real;
pub use skew::{FiberDisk, InjectivityReport, JacobianBlock, SkewMap, TorusPoint};
pub use attractor::{attractor_sample, cross_section, render_cross_section, CrossSection, DiskRecord, Raster};
pub use coding::{conjugacy_check, decode, encode, shift, Itinerary, ProductMetric};
pub use nonwandering::{classify_nw, cantor_gaps, lift_periodic_orbit, nw_projection_check, Gap, LiftedOrbit, NwKind, NwReport};
pub use hyperbolicity::{cone_invariance_check, push_forward, slope_contraction_rate, estimate_unstable_line, valid_aperture, ConeParam, ConeReport, TangentVector};
pub use sweep::{regime_detect, run_sweep, sink_trace, BumpPath, Regime, RegimeReport, SinkRow, SweepConfig, SweepPath, SweepRow};
