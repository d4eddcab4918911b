//! Command-line driver: convergence studies, airfoil runs, timing and plain
//! solves of a user geometry. Output is CSV preceded by one `#` line holding
//! the full configuration as JSON.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use crate::bem::{solve_boundary, BcMode, BemConfig, Boundary, Component};
use crate::bench::{
    circulation_error, convergence_order, deformed_circle_case, karman_trefftz_case, surface_error_profile,
    velocity_error, Airfoil,
};
use crate::error::Error;
use crate::eval::{velocity_direct, PanelEvaluator, DEFAULT_TOLERANCE};
use crate::fmm::{build_tree, FmmConfig, PointBody};
use crate::panel::Panel;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn numeric(e: Error) -> CliError {
    match e {
        Error::InvalidInput(m) => CliError::Usage(m),
        other => CliError::Numerical(other),
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "hopanel", version, about = "High-order panel method driver")]
pub struct Cli {
    /// Seed for every random distribution (SplitMix64).
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Deformed-circle convergence study.
    Circle(CircleArgs),
    /// Karman-Trefftz airfoil runs.
    Airfoil(AirfoilArgs),
    /// Timing benchmarks.
    #[command(subcommand)]
    Timing(TimingCase),
    /// Solve freestream flow around a geometry file.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Flux,
    Cp,
}

impl From<Mode> for BcMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Flux => BcMode::Flux,
            Mode::Cp => BcMode::ControlPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum AirfoilName {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

impl From<AirfoilName> for Airfoil {
    fn from(a: AirfoilName) -> Self {
        match a {
            AirfoilName::A => Airfoil::A,
            AirfoilName::B => Airfoil::B,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CircleArgs {
    #[arg(long, value_delimiter = ',', default_value = "25,50,100,200")]
    pub panels: Vec<usize>,
    /// Shape order M.
    #[arg(long, default_value_t = 3)]
    pub shape: usize,
    /// Strength order N.
    #[arg(long, default_value_t = 1)]
    pub strength: usize,
    /// Contour distances (body surface = 1).
    #[arg(long, value_delimiter = ',', default_value = "1.2")]
    pub dist: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Flux)]
    pub mode: Mode,
    /// Save the boundary of the largest panel count as a geometry file.
    #[arg(long)]
    pub geometry_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AirfoilArgs {
    #[arg(long, value_enum, default_value_t = AirfoilName::A)]
    pub airfoil: AirfoilName,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    pub panels: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub shape: usize,
    #[arg(long, default_value_t = 1)]
    pub strength: usize,
    #[arg(long, default_value_t = 1.2)]
    pub dist: f64,
    #[arg(long, value_enum, default_value_t = Mode::Flux)]
    pub mode: Mode,
    /// Instead of the summary, print the error along the surface at this
    /// offset for the largest panel count.
    #[arg(long)]
    pub surface: Option<f64>,
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingCase {
    /// Direct near-field panel evaluation.
    Near(NearArgs),
    /// FMM against direct summation.
    Fmm(FmmArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct NearArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
    pub shape: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
    pub strength: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub panels: usize,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FmmArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 35)]
    pub leaf: usize,
    /// Circle panels added to the vortices.
    #[arg(long, default_value_t = 100)]
    pub panels: usize,
    /// Targets checked against (and timed with) direct summation.
    #[arg(long, default_value_t = 500)]
    pub check: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    /// Geometry JSON file (see README).
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub shape: usize,
    #[arg(long, default_value_t = 1)]
    pub strength: usize,
    #[arg(long, value_enum, default_value_t = Mode::Flux)]
    pub mode: Mode,
    /// Vortex instead of source unknowns.
    #[arg(long)]
    pub vortex: bool,
    /// Nodes whose strength is pinned to zero.
    #[arg(long, value_delimiter = ',')]
    pub kutta: Vec<usize>,
    /// Freestream speed.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Freestream direction in degrees.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
}

/// Uniform doubles in `[0, 1)` from SplitMix64: the top 53 bits of each
/// output scaled by `2^-53`.
pub struct Uniform(SplitMix64);

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn sample(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn centered(&mut self) -> f64 {
        self.sample() - 0.5
    }
}

pub fn check_orders(shape: usize, strength: usize) -> Result<(), CliError> {
    for (name, v) in [("shape", shape), ("strength", strength)] {
        if v % 2 == 0 || v > 7 {
            return Err(CliError::Usage(format!("{name} order must be odd and at most 7, got {v}")));
        }
    }
    Ok(())
}

fn header(cli: &Cli) -> String {
    format!("# {}\n", serde_json::to_string(cli).expect("configuration serializes"))
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6e}")
    } else {
        String::new()
    }
}

/// Runs one command and returns the CSV text.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let mut out = header(cli);
    match &cli.command {
        Command::Circle(a) => circle(a, &mut out)?,
        Command::Airfoil(a) => airfoil(a, &mut out)?,
        Command::Timing(TimingCase::Near(a)) => near_timing(a, cli.seed, &mut out)?,
        Command::Timing(TimingCase::Fmm(a)) => fmm_timing(a, cli.seed, &mut out)?,
        Command::Solve(a) => solve(a, &mut out)?,
    }
    Ok(out)
}

fn circle(a: &CircleArgs, out: &mut String) -> Result<(), CliError> {
    check_orders(a.shape, a.strength)?;
    if a.panels.is_empty() || a.dist.is_empty() {
        return Err(CliError::Usage("need at least one panel count and distance".into()));
    }
    let mut errors = vec![Vec::new(); a.dist.len()];
    let mut largest = None;
    for &n in &a.panels {
        let mut case = deformed_circle_case(n, a.shape, a.strength).map_err(numeric)?;
        case.config.mode = a.mode.into();
        let sol = case.solve().map_err(numeric)?;
        for (k, &d) in a.dist.iter().enumerate() {
            errors[k].push((n, velocity_error(&case, &sol.panels, d).map_err(numeric)?));
        }
        if largest.as_ref().is_none_or(|(m, _)| n > *m) {
            largest = Some((n, case.boundary));
        }
    }
    if let (Some(path), Some((_, boundary))) = (&a.geometry_out, largest) {
        let json = serde_json::to_string_pretty(&boundary).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    out.push_str("n_panels,M,N,distance,E,order\n");
    for (k, &d) in a.dist.iter().enumerate() {
        let order = convergence_order(&errors[k]).map(|f| f.order).unwrap_or(f64::NAN);
        for &(n, e) in &errors[k] {
            let _ = writeln!(out, "{n},{},{},{d},{},{}", a.shape, a.strength, fmt(e), fmt(order));
        }
    }
    Ok(())
}

fn airfoil(a: &AirfoilArgs, out: &mut String) -> Result<(), CliError> {
    check_orders(a.shape, a.strength)?;
    let name = match a.airfoil {
        AirfoilName::A => "A",
        AirfoilName::B => "B",
    };
    if let Some(offset) = a.surface {
        let n = *a.panels.iter().max().ok_or_else(|| CliError::Usage("need a panel count".into()))?;
        if !(offset > 0.0) || a.samples == 0 {
            return Err(CliError::Usage("surface offset and sample count must be positive".into()));
        }
        let mut case = karman_trefftz_case(a.airfoil.into(), n, a.shape, a.strength).map_err(numeric)?;
        case.config.mode = a.mode.into();
        let sol = case.solve().map_err(numeric)?;
        out.push_str("airfoil,n_panels,M,N,arclength,error\n");
        for (s, e) in surface_error_profile(&case, &sol.panels, offset, a.samples).map_err(numeric)? {
            let _ = writeln!(out, "{name},{n},{},{},{},{}", a.shape, a.strength, fmt(s), fmt(e));
        }
        return Ok(());
    }
    out.push_str("airfoil,n_panels,M,N,E_circ,E,gamma\n");
    for &n in &a.panels {
        let mut case = karman_trefftz_case(a.airfoil.into(), n, a.shape, a.strength).map_err(numeric)?;
        case.config.mode = a.mode.into();
        let sol = case.solve().map_err(numeric)?;
        let e_circ = circulation_error(&sol.panels, &case.reference).map_err(numeric)?;
        let e = velocity_error(&case, &sol.panels, a.dist).map_err(numeric)?;
        let _ = writeln!(
            out,
            "{name},{n},{},{},{},{},{}",
            a.shape,
            a.strength,
            fmt(e_circ),
            fmt(e),
            fmt(sol.circulation)
        );
    }
    Ok(())
}

/// `n` panels of shape order `m` and strength order `s` laid along the
/// diagonal of the unit square. Shapes and strengths come from separate
/// streams, so the shapes do not depend on `s`.
pub fn diagonal_panels(n: usize, m: usize, s: usize, seed: u64) -> Vec<Panel> {
    let mut shapes = Uniform::new(seed);
    let mut strengths = Uniform::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let step = Complex64::new(1.0, 1.0) / n as f64;
    let length = step.norm();
    (0..n)
        .map(|k| {
            let mut shape = vec![0.0];
            shape.extend((1..=m).map(|j| if m == 1 { 0.0 } else { 0.2 * shapes.centered() * length.powi(1 - j as i32) }));
            let strength = (0..=s)
                .map(|j| Complex64::new(strengths.centered(), strengths.centered()) * length.powi(-(j as i32)))
                .collect();
            Panel::new(step * k as f64, PI / 4.0, length, shape, strength).expect("finite coefficients")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearTiming {
    /// Median seconds for one pass over all targets and panels.
    pub seconds: f64,
    /// Median seconds per single panel evaluation.
    pub per_evaluation: f64,
}

/// Times direct near-field evaluation of `panels` at random unit-square points.
pub fn time_near_field(panels: &[Panel], points: usize, repeats: usize, rng: &mut Uniform) -> NearTiming {
    let targets: Vec<Complex64> = (0..points).map(|_| Complex64::new(rng.sample(), rng.sample())).collect();
    let mut times: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let t = Instant::now();
            let mut acc = Complex64::new(0.0, 0.0);
            for &z in &targets {
                for p in panels {
                    // a target on a panel end point is simply skipped
                    acc += velocity_direct(p, z).unwrap_or_default();
                }
            }
            std::hint::black_box(acc);
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let seconds = times[times.len() / 2];
    NearTiming { seconds, per_evaluation: seconds / (points * panels.len()).max(1) as f64 }
}

fn near_timing(a: &NearArgs, seed: u64, out: &mut String) -> Result<(), CliError> {
    out.push_str("case,M,N,n_bodies,n_panels,seconds,error\n");
    for &m in &a.shape {
        for &s in &a.strength {
            check_orders(m, s)?;
            let panels = diagonal_panels(a.panels, m, s, seed);
            let t = time_near_field(&panels, a.points, a.repeats, &mut Uniform::new(seed.wrapping_add(1)));
            let _ = writeln!(out, "near,{m},{s},{},{},{},", a.points, a.panels, fmt(t.seconds));
        }
    }
    Ok(())
}

/// `n` vortices of random sign uniformly in the unit square.
pub fn random_vortices(n: usize, rng: &mut Uniform) -> Vec<PointBody> {
    (0..n)
        .map(|_| PointBody {
            position: Complex64::new(rng.sample(), rng.sample()),
            strength: Complex64::new(0.0, rng.centered()),
        })
        .collect()
}

/// Straight panels on the circle of radius 0.25 about the unit-square centre
/// with random linear strengths.
pub fn circle_body(n: usize, rng: &mut Uniform) -> Vec<Panel> {
    let c = Complex64::new(0.5, 0.5);
    let at = |k: usize| c + Complex64::from_polar(0.25, 2.0 * PI * k as f64 / n as f64);
    (0..n)
        .map(|k| {
            let strength = vec![Complex64::new(rng.centered(), rng.centered()), Complex64::new(rng.centered(), 0.0)];
            Panel::straight(at(k), at(k + 1), strength).expect("distinct nodes")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FmmTiming {
    pub bodies: usize,
    pub fmm_seconds: f64,
    /// Direct time on the checked targets scaled to all bodies.
    pub direct_seconds: f64,
    /// Max deviation on the checked targets relative to the largest direct value.
    pub error: f64,
    pub direct_fallbacks: usize,
}

/// Velocity at every vortex (self excluded), by FMM and by direct summation
/// on the first `check` vortices.
pub fn time_fmm(points: &[PointBody], panels: &[Panel], config: FmmConfig, check: usize) -> Result<FmmTiming, Error> {
    let t = Instant::now();
    let tree = build_tree(points, panels, config)?;
    let fmm = tree.evaluate_points()?;
    let fmm_seconds = t.elapsed().as_secs_f64();

    let check = check.min(points.len());
    let evs: Vec<PanelEvaluator> =
        panels.iter().map(|p| PanelEvaluator::new(p.clone(), DEFAULT_TOLERANCE)).collect::<Result<_, _>>()?;
    let t = Instant::now();
    let direct: Vec<Complex64> = (0..check)
        .map(|i| {
            let z = points[i].position;
            let mut v = Complex64::new(0.0, 0.0);
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    let d = z - p.position;
                    v += p.strength * d.conj() / d.norm_sqr();
                }
            }
            v /= 2.0 * PI;
            for e in &evs {
                v += e.velocity(z)?;
            }
            Ok(v)
        })
        .collect::<Result<_, Error>>()?;
    let direct_seconds = t.elapsed().as_secs_f64() * points.len() as f64 / check.max(1) as f64;
    let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let error = direct.iter().zip(&fmm).map(|(d, f)| (d - f).norm()).fold(0.0, f64::max) / scale.max(f64::MIN_POSITIVE);
    Ok(FmmTiming { bodies: points.len(), fmm_seconds, direct_seconds, error, direct_fallbacks: tree.stats.direct_fallbacks })
}

fn fmm_timing(a: &FmmArgs, seed: u64, out: &mut String) -> Result<(), CliError> {
    if !(a.tol > 0.0 && a.tol < 1.0) || a.leaf == 0 || a.check == 0 {
        return Err(CliError::Usage("need 0 < tol < 1 and positive leaf and check counts".into()));
    }
    out.push_str("case,M,N,n_bodies,n_panels,seconds,error\n");
    for &n in &a.sizes {
        let mut rng = Uniform::new(seed);
        let points = random_vortices(n, &mut rng);
        let panels = circle_body(a.panels, &mut rng);
        let config = FmmConfig { tolerance: a.tol, leaf_capacity: a.leaf, ..FmmConfig::new(a.tol) };
        let t = time_fmm(&points, &panels, config, a.check).map_err(numeric)?;
        let _ = writeln!(out, "fmm,1,1,{n},{},{},{}", a.panels, fmt(t.fmm_seconds), fmt(t.error));
        let _ = writeln!(out, "direct,1,1,{n},{},{},", a.panels, fmt(t.direct_seconds));
    }
    Ok(())
}

fn solve(a: &SolveArgs, out: &mut String) -> Result<(), CliError> {
    check_orders(a.shape, a.strength)?;
    let text = std::fs::read_to_string(&a.geometry).map_err(|e| CliError::Io(format!("{}: {e}", a.geometry.display())))?;
    let boundary: Boundary =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.geometry.display())))?;
    let mut config = BemConfig::new(a.shape, a.strength);
    config.mode = a.mode.into();
    config.freestream = Complex64::from_polar(a.speed, a.alpha.to_radians());
    config.components = vec![if a.vortex { Component::Vortex } else { Component::Source }];
    config.total_source_zero = !a.vortex;
    config.kutta_nodes = a.kutta.clone();
    let sol = solve_boundary(&boundary, &config).map_err(numeric)?;
    out.push_str("node,x,y,gamma_re,gamma_im\n");
    for (k, (node, vals)) in boundary.nodes.iter().zip(&sol.node_values).enumerate() {
        let g = vals.first().copied().unwrap_or_default();
        let _ = writeln!(out, "{k},{},{},{},{}", fmt(node.position.re), fmt(node.position.im), fmt(g.re), fmt(g.im));
    }
    let _ = writeln!(out, "# circulation={:e} residual_norm={:e}", sol.circulation, sol.residual_norm);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("hopanel").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn circle_single_row() {
        let out = run(&parse(&["circle", "--panels", "50", "--shape", "3", "--strength", "1", "--dist", "1.2"])).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert_eq!(lines[1], "n_panels,M,N,distance,E,order");
        assert_eq!(lines.len(), 3);
        let e: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
        assert!(e > 0.0 && e < 1e-3);
    }

    #[test]
    fn both_modes_run() {
        for mode in ["flux", "cp"] {
            let out = run(&parse(&["circle", "--panels", "32", "--mode", mode])).unwrap();
            assert_eq!(out.lines().count(), 3);
        }
    }

    #[test]
    fn bad_orders_are_usage_errors() {
        let err = run(&parse(&["circle", "--shape", "4"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&parse(&["airfoil", "--strength", "9"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(Cli::try_parse_from(["hopanel", "timing", "slow"]).is_err());
    }

    #[test]
    fn airfoil_smoke() {
        let out = run(&parse(&["airfoil", "--panels", "50"])).unwrap();
        let row: Vec<&str> = out.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(row[0], "A");
        let e_circ: f64 = row[4].parse().unwrap();
        assert!(e_circ.is_finite() && e_circ.abs() < 1e-2);
    }

    #[test]
    fn geometry_round_trip_through_solve() {
        let dir = std::env::temp_dir().join(format!("hopanel-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let geo = dir.join("circle.json");
        run(&parse(&["circle", "--panels", "24", "--geometry-out", geo.to_str().unwrap()])).unwrap();
        let out = run(&parse(&["solve", "--geometry", geo.to_str().unwrap()])).unwrap();
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 25);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = diagonal_panels(10, 5, 3, 9);
        assert_eq!(a, diagonal_panels(10, 5, 3, 9));
        let b = diagonal_panels(10, 5, 7, 9);
        assert!(a.iter().zip(&b).all(|(x, y)| x.shape == y.shape));
        let mut r = Uniform::new(0);
        assert!((0..1000).map(|_| r.sample()).all(|x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn small_fmm_timing_is_accurate() {
        let mut rng = Uniform::new(3);
        let points = random_vortices(1000, &mut rng);
        let panels = circle_body(20, &mut rng);
        let t = time_fmm(&points, &panels, FmmConfig::new(1e-9), 1000).unwrap();
        assert!(t.error < 1e-8, "{}", t.error);
    }
}
