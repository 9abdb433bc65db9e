//! Command-line driver for the solenoid laboratory.
//!
//! Exit codes: 0 success, 1 failed verification or I/O error, 2 invalid
//! configuration, 3 numerical failure.

pub mod sampling;
pub mod verify;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};
use solenoid::{
    classify_nw, cone_invariance_check, cross_section, encode, render_cross_section, run_sweep, valid_aperture,
    BumpPath, CircleMap, CirclePoint, ConeParam, Error, NwKind, PeriodicOrbit, SkewMap, SweepConfig, TorusPoint,
};

use crate::sampling::Sampler;
use crate::verify::{base_gaps, min_expansion, run_suite, VerifyOptions, SUITES};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "solenoid", version, about = "Skew products over circle covers: attractors, coding, cones, bifurcations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify the non-wandering set of the base map (JSON).
    Nw(NwArgs),
    /// Fiber cross-section of the attractor: disk CSV and optional raster.
    CrossSection(SectionArgs),
    /// Backward itinerary of a point (JSON).
    Encode(EncodeArgs),
    /// Unstable cone invariance and slope contraction (JSON).
    Cones(ConesArgs),
    /// Regime along the bump path mu -> (eps, delta) = (a mu, b mu) (CSV).
    ///
    /// Columns: mu, regime, n_attracting_orbits, gap_measure, sink_t, sink_re,
    /// sink_im, error.
    Sweep(SweepArgs),
    /// Run the property suites and print a JSON summary.
    ///
    /// Suites: census, cones, conjugacy, diameter, disjointness, roundtrip.
    Verify(VerifyArgs),
    /// Binary PGM raster of a fiber cross-section.
    Render(RenderArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Linear,
    Shub,
    Bump,
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// Base family.
    #[arg(long, value_enum, default_value_t = MapKind::Linear)]
    pub map: MapKind,
    /// Degree of the base cover (default 2; required by `nw`).
    #[arg(long)]
    pub d: Option<u32>,
    /// Bump map: multiplier at the sink 0.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Bump map: support half-width.
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    /// Shub map: multiplier at the sink 1/4.
    #[arg(long, default_value_t = 0.2)]
    pub multiplier: f64,
    /// Fiber contraction.
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    /// Allow lambda up to 1/2, past the injectivity bound.
    #[arg(long)]
    pub relaxed: bool,
}

impl MapArgs {
    pub fn degree(&self) -> u32 {
        self.d.unwrap_or(2)
    }

    pub fn base(&self) -> Result<CircleMap, CliError> {
        let d = self.degree();
        Ok(match self.map {
            MapKind::Linear => CircleMap::linear(d)?,
            MapKind::Shub => CircleMap::shub(d, self.multiplier)?,
            MapKind::Bump => CircleMap::bump(d, self.eps, self.delta)?,
        })
    }

    pub fn skew(&self) -> Result<SkewMap, CliError> {
        let base = self.base()?;
        Ok(if self.relaxed { SkewMap::relaxed(base, self.lambda)? } else { SkewMap::new(base, self.lambda)? })
    }

    fn to_json(&self) -> Value {
        json!({
            "map": format!("{:?}", self.map).to_lowercase(),
            "d": self.degree(),
            "eps": self.eps,
            "delta": self.delta,
            "multiplier": self.multiplier,
            "lambda": self.lambda,
            "relaxed": self.relaxed,
        })
    }
}

#[derive(Args, Debug)]
pub struct NwArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Longest period searched for attracting orbits.
    #[arg(long, default_value_t = 6)]
    pub max_period: usize,
    /// Preimage levels of basin gaps.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SectionArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Fiber coordinate.
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Disk CSV: itinerary, center_re, center_im, radius.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional PGM raster of the same section.
    #[arg(long)]
    pub raster: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub z_re: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub z_im: f64,
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConesArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Attractor sample points.
    #[arg(long, default_value_t = 625)]
    pub samples: usize,
    /// Rays per point, at least 16.
    #[arg(long, default_value_t = 16)]
    pub rays: usize,
    /// Cone aperture; defaults to the largest valid one for the base.
    #[arg(long)]
    pub aperture: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Base degree.
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    /// Comma-separated ascending mu values in [0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub mu_grid: Vec<f64>,
    /// eps = eps_rate * mu.
    #[arg(long, default_value_t = 0.5)]
    pub eps_rate: f64,
    /// delta = delta_rate * mu.
    #[arg(long, default_value_t = 0.2)]
    pub delta_rate: f64,
    #[arg(long, default_value_t = 6)]
    pub max_period: usize,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Run only these suites (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub conjugacy_points: usize,
    #[arg(long, default_value_t = 500)]
    pub roundtrip_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` and runs the command, printing errors to standard error.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a parsed command and returns its exit code.
pub fn execute(command: &Command) -> Result<u8, CliError> {
    match command {
        Command::Nw(a) => cmd_nw(a),
        Command::CrossSection(a) => cmd_cross_section(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Cones(a) => cmd_cones(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Render(a) => cmd_render(a),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::other)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink(path)?))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn orbit_json(o: &PeriodicOrbit) -> Value {
    json!({
        "period": o.period,
        "points": o.points.iter().map(|p| p.value()).collect::<Vec<_>>(),
        "multiplier": o.multiplier,
        "stability": o.stability,
    })
}

fn cmd_nw(a: &NwArgs) -> Result<u8, CliError> {
    if a.map.d.is_none() {
        return Err(CliError::Config("nw needs --d".into()));
    }
    let base = a.map.base()?;
    let report = classify_nw(&base, a.max_period, a.depth)?;
    let kind = match report.kind {
        NwKind::WholeCircle => "WholeCircle",
        NwKind::CantorPlusOrbits => "CantorPlusOrbits",
    };
    let orbits: Vec<Value> = report.attracting_orbits.iter().chain(&report.repelling_orbits).map(orbit_json).collect();
    let gaps: Vec<[f64; 2]> = report.gaps.iter().map(|g| [g.lo, g.hi]).collect();
    write_json(
        a.out.as_deref(),
        &json!({
            "kind": kind,
            "orbits": orbits,
            "gaps": gaps,
            "gap_measure": report.gap_measure,
            "max_period": a.max_period,
            "depth": a.depth,
            "config": a.map.to_json(),
        }),
    )?;
    Ok(0)
}

fn cmd_cross_section(a: &SectionArgs) -> Result<u8, CliError> {
    let map = a.map.skew()?;
    let section = cross_section(&map, CirclePoint::new(a.t), a.depth)?;
    if let Some(path) = &a.raster {
        let raster = render_cross_section(&section, a.resolution)?;
        std::fs::write(path, raster.to_pgm())?;
    }
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["itinerary", "center_re", "center_im", "radius"])?;
    for disk in section.disks() {
        let itinerary: Vec<String> = disk.itinerary.iter().map(|t| fmt_f64(t.value())).collect();
        w.write_record([
            itinerary.join(";"),
            fmt_f64(disk.center.re),
            fmt_f64(disk.center.im),
            fmt_f64(disk.radius),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_encode(a: &EncodeArgs) -> Result<u8, CliError> {
    let map = a.map.skew()?;
    let p = TorusPoint::new(a.t, Complex64::new(a.z_re, a.z_im));
    if !p.in_domain() {
        return Err(CliError::Config(format!("point ({}, {}) lies outside the unit disk", a.z_re, a.z_im)));
    }
    // Report the deepest level actually reached.
    let (itinerary, stopped) = match encode(&map, &p, a.depth) {
        Ok(it) => (it, None),
        Err(Error::NotInImage { step }) => (encode(&map, &p, step - 1)?, Some(step)),
        Err(e) => return Err(e.into()),
    };
    write_json(
        a.out.as_deref(),
        &json!({
            "requested_depth": a.depth,
            "reachable_depth": itinerary.depth(),
            "not_in_image_at_step": stopped,
            "itinerary": itinerary.coords().iter().map(|t| t.value()).collect::<Vec<_>>(),
            "config": a.map.to_json(),
        }),
    )?;
    Ok(0)
}

fn cmd_cones(a: &ConesArgs) -> Result<u8, CliError> {
    let map = a.map.skew()?;
    let gap_list = base_gaps(map.base(), 8)?;
    let dg_min = min_expansion(map.base(), &gap_list);
    let aperture = match a.aperture {
        Some(c) => c,
        None => valid_aperture(dg_min, map.contraction())?,
    };
    let cone = ConeParam::new(aperture)?;
    let gaps = (!gap_list.is_empty()).then(|| solenoid::nonwandering::GapSet::new(&gap_list));
    let mut rng = Sampler::new(a.seed);
    let samples: Vec<TorusPoint> = (0..a.samples)
        .map(|_| rng.itinerary(map.base(), 30, gaps.as_ref()).and_then(|it| solenoid::decode(&map, &it)))
        .collect::<solenoid::Result<_>>()?;
    let report = cone_invariance_check(&map, &cone, &samples, a.rays)?;
    write_json(
        a.out.as_deref(),
        &json!({
            "aperture": aperture,
            "min_expansion": dg_min,
            "ok": report.ok,
            "worst_margin": report.worst_margin,
            "pairs": report.pairs,
            "seed": a.seed,
            "config": a.map.to_json(),
        }),
    )?;
    Ok(0)
}

fn cmd_sweep(a: &SweepArgs) -> Result<u8, CliError> {
    let cfg = SweepConfig {
        grid: a.mu_grid.clone(),
        path: BumpPath::new(a.eps_rate, a.delta_rate)?,
        degree: a.d,
        lambda: a.lambda,
        max_period: a.max_period,
        depth: a.depth,
    };
    let rows = run_sweep(&cfg)?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["mu", "regime", "n_attracting_orbits", "gap_measure", "sink_t", "sink_re", "sink_im", "error"])?;
    let mut failures = 0;
    for row in &rows {
        let mu = fmt_f64(row.mu);
        match &row.report {
            Ok(r) => {
                let (t, re, im) = match r.lifted_sink {
                    Some(s) => (fmt_f64(s.t.value()), fmt_f64(s.z.re), fmt_f64(s.z.im)),
                    None => (String::new(), String::new(), String::new()),
                };
                w.write_record([
                    mu,
                    format!("{:?}", r.regime),
                    r.n_attracting_orbits.to_string(),
                    fmt_f64(r.gap_measure),
                    t,
                    re,
                    im,
                    String::new(),
                ])?;
            }
            Err(e) => {
                failures += 1;
                let blank = String::new;
                w.write_record([mu, blank(), blank(), blank(), blank(), blank(), blank(), e.to_string()])?;
            }
        }
    }
    w.flush()?;
    if failures == rows.len() {
        return Err(CliError::Numerical("every sweep row failed".into()));
    }
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8, CliError> {
    let map = a.map.skew()?;
    let selected: Vec<&str> = if a.suite.is_empty() {
        SUITES.to_vec()
    } else {
        let mut names = Vec::new();
        for s in &a.suite {
            let s = s.trim();
            let known = SUITES.iter().find(|k| **k == s).ok_or_else(|| CliError::Config(format!("unknown suite {s}")))?;
            if !names.contains(known) {
                names.push(*known);
            }
        }
        names
    };
    let opts = VerifyOptions {
        seed: a.seed,
        conjugacy_points: a.conjugacy_points,
        roundtrip_points: a.roundtrip_points,
        ..VerifyOptions::default()
    };
    let mut suites = serde_json::Map::new();
    let mut all = true;
    for name in selected {
        let outcome = run_suite(name, &map, &opts)?;
        all &= outcome.pass;
        suites.insert(name.to_string(), outcome.to_json());
    }
    write_json(
        a.out.as_deref(),
        &json!({ "all_pass": all, "seed": a.seed, "suites": suites, "config": a.map.to_json() }),
    )?;
    Ok(if all { 0 } else { 1 })
}

fn cmd_render(a: &RenderArgs) -> Result<u8, CliError> {
    let map = a.map.skew()?;
    let section = cross_section(&map, CirclePoint::new(a.t), a.depth)?;
    let raster = render_cross_section(&section, a.resolution)?;
    std::fs::write(&a.out, raster.to_pgm())?;
    Ok(0)
}
