//! Subcommand implementations.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use vesselkit::dilation::{
    axis_time, commutativity_residual, default_direction, dilation_check, group_law_residual, in_cone_closure,
    isometry_residual, minimality_diagnostics, smooth_vector, standard_basis, DilationConfig, DilationError,
    DilationTolerances, RefinementRow, RefinementTable, TimeError,
};
use vesselkit::fixtures::{self, rng};
use vesselkit::linalg::{c, lambda_min, CVec};
use vesselkit::report::ConditionReport;
use vesselkit::series::{check_discrete_compat_pencil, solve_discrete, AnalyticInitialData};
use vesselkit::spectral::{GridSpec, SampledSignal};
use vesselkit::system::{energy_balance_residual, energy_profile, propagate_state, Jet};
use vesselkit::vessel::{
    check_vessel, check_vr, check_vr_star_in, make_strict_vessel, normalize, pos_cone_margin, weakly_strict_report,
    Direction, Vessel, VesselError, DEFAULT_TOL,
};

use crate::io::{self, GridBlock, JsonVector, ProblemFile, SeriesFile, SignalFile};
use crate::report::RunReport;
use crate::{parallel_map, worker_count, Cli, CliError, Command, FixtureKind, Result, Toggle, EXIT_CHECK, EXIT_PASS};

const ENERGY_TOL: f64 = 1e-6;
const SERIES_TOL: f64 = 1e-12;
const ONE_DIM_IDENTITY_TOL: f64 = 1e-6;
const SLOPE: f64 = 1.8;

pub fn dispatch(cli: &Cli) -> Result<i32> {
    let deterministic = cli.deterministic == Toggle::On;
    let ctx = Context { tol_scale: cli.tol_scale, seed: cli.seed, deterministic, json_out: cli.json_out.as_deref() };
    if !(ctx.tol_scale > 0.0 && ctx.tol_scale.is_finite()) {
        return Err(CliError::Usage(format!("--tol-scale must be positive, got {}", ctx.tol_scale)));
    }
    match &cli.command {
        Command::Embed { input, output, rank_tol } => embed(&ctx, input, output, *rank_tol),
        Command::Check { vessel, conditions, vr, vrstar, cone, weakly_strict, direction } => {
            let none = !(*conditions || *vr || *vrstar || *cone || *weakly_strict);
            let sel = CheckSelection {
                conditions: none || *conditions,
                vr: none || *vr,
                vrstar: none || *vrstar,
                cone: none || *cone,
                weakly_strict: none || *weakly_strict,
            };
            check(&ctx, vessel, sel, direction.as_deref())
        }
        Command::Fixture { kind, dims, out } => fixture(&ctx, *kind, dims, out.as_deref()),
        Command::Dilate { vessel, times, grid, refine, report, direction } => {
            dilate(&ctx, vessel, times, grid, *refine, report.as_deref(), direction.as_deref())
        }
        Command::Simulate { vessel, line, input, h, grid, force, out } => {
            simulate(&ctx, vessel, line, input, h, grid, *force, out.as_deref())
        }
        Command::Solve { vessel, degree, ratio, direction, out } => {
            solve(&ctx, vessel, *degree, *ratio, direction.as_deref(), out.as_deref())
        }
    }
}

struct Context<'a> {
    tol_scale: f64,
    seed: u64,
    deterministic: bool,
    json_out: Option<&'a Path>,
}

impl Context<'_> {
    fn report(&self, command: &str, input: &[u8]) -> RunReport {
        RunReport::new(command, input, self.seed, self.deterministic)
    }

    /// Writes the report to --json-out, or to standard output when
    /// `default_stdout`.
    fn emit(&self, report: &RunReport, default_stdout: bool) -> Result<()> {
        match self.json_out {
            Some(p) => io::write_json(p, report)?,
            None if default_stdout => print!("{}", io::to_json_string(report)),
            None => {}
        }
        Ok(())
    }
}

fn write_or_print<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => io::write_json(p, value)?,
        None => print!("{}", io::to_json_string(value)),
    }
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path)
        .map_err(|source| CliError::Io(io::IoError::Read { path: path.display().to_string(), source }))
}

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("`{x}` is not a number in `{s}`"))))
        .collect()
}

fn parse_times(s: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    let times: Vec<Vec<f64>> = s.split(';').filter(|t| !t.trim().is_empty()).map(parse_reals).collect::<Result<_>>()?;
    if times.is_empty() {
        return Err(CliError::Usage("no times given".into()));
    }
    if let Some(t) = times.iter().find(|t| t.len() != d) {
        return Err(CliError::Usage(format!("time {t:?} does not have {d} coordinates")));
    }
    Ok(times)
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || CliError::Usage(format!("grid `{s}` is not `N,L`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let n = parts[0].trim().parse::<usize>().map_err(|_| bad())?;
    let l = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
    GridSpec::new(n, l).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_direction(s: Option<&str>, d: usize) -> Result<Option<Vec<f64>>> {
    let Some(s) = s else { return Ok(None) };
    let xi = parse_reals(s)?;
    if xi.len() != d {
        return Err(CliError::Usage(format!("direction `{s}` does not have {d} coordinates")));
    }
    Ok(Some(xi))
}

/// The vessel of a file: its vessel block, or the strict vessel of its
/// tuple when the block is absent.
fn load_vessel(path: &Path, report: &mut RunReport) -> Result<(ProblemFile, Vessel)> {
    let (problem, vessel) = io::read_vessel(path)?;
    match vessel {
        Some(v) => Ok((problem, v)),
        None => {
            let tuple = problem
                .tuple()
                .map_err(|message| io::IoError::Shape { path: path.display().to_string(), message })?;
            let v = make_strict_vessel(&tuple, vesselkit::vessel::DEFAULT_RANK_TOL).map_err(check_error)?;
            report.warn("no vessel block: using the strict vessel of the operator tuple");
            Ok((problem, v))
        }
    }
}

fn check_error(e: VesselError) -> CliError {
    match e {
        VesselError::DimensionMismatch(m) => CliError::Usage(m),
        other => CliError::Check(other.to_string()),
    }
}

fn dilation_error(e: DilationError) -> CliError {
    match e {
        DilationError::NotVr(_) | DilationError::NotInCone { .. } => CliError::Check(e.to_string()),
        DilationError::Vessel(v) => check_error(v),
        DilationError::DimensionMismatch(m) => CliError::Usage(m),
        other => CliError::Internal(other.to_string()),
    }
}

fn exit_for(report: &RunReport) -> i32 {
    if report.pass {
        EXIT_PASS
    } else {
        for f in report.failures() {
            eprintln!("failed: {f}");
        }
        EXIT_CHECK
    }
}

fn embed(ctx: &Context, input: &Path, output: &Path, rank_tol: f64) -> Result<i32> {
    let bytes = read_bytes(input)?;
    let mut report = ctx.report("embed", &bytes);
    let problem: ProblemFile = io::parse_json(&String::from_utf8_lossy(&bytes), &input.display().to_string())?;
    let tuple = problem
        .tuple()
        .map_err(|message| io::IoError::Shape { path: input.display().to_string(), message })?;
    let start = Instant::now();
    let v = make_strict_vessel(&tuple, rank_tol).map_err(check_error)?;
    if v.degenerate {
        let msg = "every operator is selfadjoint: the signal space is empty";
        eprintln!("warning: {msg}");
        report.warn(msg);
    }
    let rep = check_vessel(&v, DEFAULT_TOL * ctx.tol_scale).map_err(check_error)?;
    report.check("vessel conditions", rep);
    report.time("embed", start);
    let mut file = ProblemFile::from_vessel(&v);
    file.grid = problem.grid;
    file.tol = problem.tol;
    io::write_json(output, &file)?;
    ctx.emit(&report, false)?;
    Ok(exit_for(&report))
}

#[derive(Debug, Clone, Copy)]
struct CheckSelection {
    conditions: bool,
    vr: bool,
    vrstar: bool,
    cone: bool,
    weakly_strict: bool,
}

fn check(ctx: &Context, path: &Path, sel: CheckSelection, direction: Option<&str>) -> Result<i32> {
    let bytes = read_bytes(path)?;
    let mut report = ctx.report("check", &bytes);
    let (problem, v) = load_vessel(path, &mut report)?;
    let d = v.d();
    let tol = problem.tol.as_ref().and_then(|t| t.vessel).unwrap_or(DEFAULT_TOL) * ctx.tol_scale;
    let vr_tol = problem.tol.as_ref().and_then(|t| t.vr).unwrap_or(DEFAULT_TOL) * ctx.tol_scale;
    let xi = parse_direction(direction, d)?;
    let dir = match &xi {
        Some(x) => Direction::Vector(x.clone()),
        None => Direction::Axis(0),
    };
    let start = Instant::now();
    if sel.conditions {
        report.check("vessel conditions", check_vessel(&v, tol).map_err(check_error)?);
    }
    let singular = |e: VesselError, name: &str| -> Result<ConditionReport> {
        match e {
            VesselError::SingularSigma { smallest, scale } => {
                let mut r = ConditionReport::new();
                r.push_with_note(
                    format!("{name}: SingularSigma"),
                    f64::INFINITY,
                    vr_tol,
                    &format!("smallest singular value {smallest:e}, norm {scale:e}"),
                );
                Ok(r)
            }
            other => Err(check_error(other)),
        }
    };
    if sel.vr {
        let r = check_vr(&v, &dir, vr_tol).or_else(|e| singular(e, "VR"))?;
        report.check("VR", r);
    }
    if sel.vrstar {
        let r = check_vr_star_in(&v, &dir, vr_tol).or_else(|e| singular(e, "VR*"))?;
        report.check("VR*", r);
    }
    if sel.cone {
        let ones = vec![1.0; d];
        let at = xi.clone().unwrap_or(ones);
        let margin = pos_cone_margin(&v, &at);
        let mut r = ConditionReport::new();
        r.push_with_note("direction in the positivity cone", -margin, 0.0, &format!("λ_min(σ(ξ)) = {margin:e} at ξ = {at:?}"));
        report.check("cone", r);
    }
    if sel.weakly_strict {
        let ws = weakly_strict_report(&v, 1e-8);
        let mut r = ConditionReport::new();
        r.push_with_note("weakly strict", ws.kernel.ncols() as f64, 0.0, "residual is dim W");
        report.check("weakly strict", r);
    }
    report.time("checks", start);
    ctx.emit(&report, true)?;
    Ok(exit_for(&report))
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("`{x}` in --dims is not a size"))))
        .collect::<Result<Vec<_>>>()?;
    let n: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || n > 16 {
        return Err(CliError::Usage(format!("--dims {s}: sizes must be positive with product at most 16")));
    }
    Ok(dims)
}

fn fixture(ctx: &Context, kind: FixtureKind, dims: &str, out: Option<&Path>) -> Result<i32> {
    let dims = parse_dims(dims)?;
    let mut r = rng(ctx.seed);
    let fixture_error = |e: fixtures::FixtureError| CliError::Check(e.to_string());
    let file = match kind {
        FixtureKind::TensorDoublyCommuting => ProblemFile::from_tuple(&fixtures::tensor_tuple(&mut r, &dims)),
        FixtureKind::Jordan => ProblemFile::from_tuple(&fixtures::jordan_tuple(&mut r, dims[0]).map_err(fixture_error)?),
        FixtureKind::RandomDissipativePair => {
            ProblemFile::from_tuple(&fixtures::polynomial_tuple(&mut r, dims[0], 2).map_err(fixture_error)?)
        }
        FixtureKind::DecoupledW => {
            let base = make_strict_vessel(&fixtures::tensor_tuple(&mut r, &dims), vesselkit::vessel::DEFAULT_RANK_TOL)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            ProblemFile::from_vessel(&fixtures::decoupled_w_vessel(&mut r, &base))
        }
    };
    write_or_print(out, &file)?;
    let mut report = ctx.report("fixture", io::to_json_string(&file).as_bytes());
    report.table("kind", &format!("{kind:?}"));
    ctx.emit(&report, false)?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct LevelRow {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "L")]
    half_width: f64,
    max_error: f64,
    per_time: Vec<TimeError>,
}

fn dilate(
    ctx: &Context,
    path: &Path,
    times: &str,
    grid: &str,
    refine: usize,
    report_path: Option<&Path>,
    direction: Option<&str>,
) -> Result<i32> {
    let bytes = read_bytes(path)?;
    let mut report = ctx.report("dilate", &bytes);
    let (problem, v) = load_vessel(path, &mut report)?;
    let d = v.d();
    let times = parse_times(times, d)?;
    let base = parse_grid(grid)?;
    if refine == 0 {
        return Err(CliError::Usage("--refine must be at least 1".into()));
    }
    let xi = parse_direction(direction, d)?.unwrap_or_else(|| default_direction(&v));
    let over = problem.tol.clone().unwrap_or_default();
    let defaults = DilationTolerances::default();
    let identity_tol =
        over.identity.unwrap_or(if d == 1 { ONE_DIM_IDENTITY_TOL } else { defaults.identity }) * ctx.tol_scale;
    let iso_tol = over.isometry.unwrap_or(defaults.isometry) * ctx.tol_scale;
    let group_tol = over.group_law.unwrap_or(defaults.group_law) * ctx.tol_scale;
    let tol = DilationTolerances { vr: over.vr.unwrap_or(defaults.vr) * ctx.tol_scale, ..defaults };

    // VR and cone membership are checked before any transform is computed.
    let cfg0 = DilationConfig::with_tolerances(&v, &xi, base, tol).map_err(dilation_error)?;
    report.check("VR", cfg0.vr.clone());
    let workers = worker_count();
    let basis = standard_basis(cfg0.dim_h());

    let mut levels = Vec::with_capacity(refine);
    let mut identity = ConditionReport::new();
    for level in 0..refine {
        let start = Instant::now();
        let g = GridSpec::new(base.n << level, base.half_width).map_err(|e| CliError::Usage(e.to_string()))?;
        let cfg = cfg0.with_grid(g);
        let per_time: Vec<TimeError> = parallel_map(&times, workers, |t| {
            dilation_check(&cfg, std::slice::from_ref(t), &basis).map(|c| c.per_time[0].clone())
        })
        .into_iter()
        .collect::<std::result::Result<_, _>>()
        .map_err(dilation_error)?;
        let max_error = per_time.iter().map(|e| e.error).fold(0.0, f64::max);
        for e in &per_time {
            identity.push(format!("N={} t={:?}", g.n, e.t), e.error, identity_tol);
        }
        report.time(&format!("identity N={}", g.n), start);
        levels.push(LevelRow { n: g.n, half_width: g.half_width, max_error, per_time });
    }
    report.check("dilation identity", identity);
    if refine >= 2 {
        let rows: Vec<RefinementRow> =
            levels.iter().map(|l| RefinementRow { n: l.n, half_width: l.half_width, error: l.max_error }).collect();
        let ratios = rows.windows(2).map(|w| w[0].error / w[1].error).collect();
        let table = RefinementTable { rows, ratios };
        let mut r = ConditionReport::new();
        let note = format!("ratios {:?}; errors at or below 1e-10 count as converged", table.ratios);
        r.push_with_note("refinement", if table.refines_by(SLOPE) { 0.0 } else { 1.0 }, 0.0, &note);
        report.check("refinement", r);
        report.table("refinement", &table);
    }
    report.table("levels", &levels);

    let start = Instant::now();
    let cfg = cfg0.with_grid(GridSpec::new(base.n << (refine - 1), base.half_width).unwrap());
    let mut r = rng(ctx.seed);
    let h = fixtures::complex_vector(&mut r, cfg.dim_h());
    let m = cfg.dim_e();
    let jet = Jet {
        value: fixtures::complex_vector(&mut r, m),
        d1: fixtures::complex_vector(&mut r, m),
        d2: fixtures::complex_vector(&mut r, m),
    };
    let vec = smooth_vector(&cfg, &h, &jet, 1.5);

    let mut iso_times: Vec<Vec<f64>> = Vec::new();
    for t in &times {
        if t.iter().all(|&x| x == 0.0) {
            continue;
        }
        let neg: Vec<f64> = t.iter().map(|x| -x).collect();
        for s in [t.clone(), neg] {
            if in_cone_closure(&v, &s, 1e-12) {
                iso_times.push(s);
            } else {
                report.warn(format!("isometry not asserted at {s:?}: outside Pos ∪ −Pos"));
            }
        }
    }
    let iso = parallel_map(&iso_times, workers, |t| isometry_residual(&cfg, t, &vec));
    let mut isometry = ConditionReport::new();
    for (t, res) in iso_times.iter().zip(iso) {
        isometry.push(format!("t={t:?}"), res.map_err(dilation_error)?, iso_tol);
    }
    report.check("isometry", isometry);

    let pairs: Vec<(Vec<f64>, Vec<f64>)> = times.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
    let group = parallel_map(&pairs, workers, |(t, s)| group_law_residual(&cfg, t, s, &vec));
    let mut law = ConditionReport::new();
    for ((t, s), res) in pairs.iter().zip(group) {
        law.push(format!("t={t:?} s={s:?}"), res.map_err(dilation_error)?, group_tol);
    }
    report.check("group law", law);

    let axes: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
    let comm = parallel_map(&axes, workers, |&(j, k)| {
        commutativity_residual(&cfg, &axis_time(d, j, 0.5), &axis_time(d, k, 0.7), &vec)
    });
    let mut commute = ConditionReport::new();
    for ((j, k), res) in axes.iter().zip(comm) {
        commute.push(format!("axes ({},{})", j + 1, k + 1), res.map_err(dilation_error)?, group_tol);
    }
    report.check("commutativity", commute);
    report.time("suites", start);

    let minimal = minimality_diagnostics(&cfg);
    report.table("minimality", &serde_json::json!({
        "verdict": minimal.verdict,
        "kernel_dim": minimal.kernel_dim,
        "message": minimal.message,
    }));

    if let Some(p) = report_path {
        io::write_json(p, &report)?;
    }
    ctx.emit(&report, report_path.is_none())?;
    Ok(exit_for(&report))
}

fn parse_h(spec: &str, n: usize, seed: u64) -> Result<CVec> {
    let spec = spec.trim();
    if spec == "zero" {
        return Ok(CVec::zeros(n));
    }
    if spec == "random" {
        return Ok(fixtures::complex_vector(&mut rng(seed), n));
    }
    if let Some(k) = spec.strip_prefix("basis:") {
        let k = k.parse::<usize>().map_err(|_| CliError::Usage(format!("--h {spec}: bad basis index")))?;
        if k >= n {
            return Err(CliError::Usage(format!("--h {spec}: index out of range for dim H = {n}")));
        }
        let mut e = CVec::zeros(n);
        e[k] = c(1.0, 0.0);
        return Ok(e);
    }
    let xs = parse_reals(spec)?;
    if xs.len() != n {
        return Err(CliError::Usage(format!("--h {spec}: expected {n} entries")));
    }
    Ok(CVec::from_iterator(n, xs.into_iter().map(|x| c(x, 0.0))))
}

#[derive(Serialize)]
struct IsometryFields {
    state_energy_final: f64,
    input_energy: f64,
    output_energy: f64,
}

#[derive(Serialize)]
struct TrajectoryDump {
    grid: GridBlock,
    direction: Vec<f64>,
    offset: Vec<f64>,
    x: Vec<JsonVector>,
    u: Vec<JsonVector>,
    y: Vec<JsonVector>,
    energy_balance_residual: f64,
    cone_margin: f64,
    /// Absent ("n/a") when ξ is outside the positivity cone.
    isometry: Option<IsometryFields>,
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    ctx: &Context,
    path: &Path,
    line: &str,
    input: &str,
    h: &str,
    grid: &str,
    force: bool,
    out: Option<&Path>,
) -> Result<i32> {
    let bytes = read_bytes(path)?;
    let mut report = ctx.report("simulate", &bytes);
    let (_, v) = load_vessel(path, &mut report)?;
    let d = v.d();
    let parts: Vec<&str> = line.split(';').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("--line `{line}` is not `ξ;η`")));
    }
    let xi = parse_reals(parts[0])?;
    let eta = parse_reals(parts[1])?;
    if xi.len() != d || eta.len() != d {
        return Err(CliError::Usage(format!("--line `{line}`: both parts need {d} coordinates")));
    }
    let g = parse_grid(grid)?;
    let m = v.dim_e();
    let u = match input.trim() {
        "zero" => SampledSignal::zeros(g, m),
        "gaussian" => SampledSignal::gaussian(g, &fixtures::complex_vector(&mut rng(ctx.seed + 1), m), 0.0, 1.0),
        other => match other.strip_prefix("file:") {
            Some(p) => {
                let f: SignalFile = io::read_json(Path::new(p))?;
                let s = f.to_signal().map_err(|message| io::IoError::Shape { path: p.to_string(), message })?;
                if s.dim() != m {
                    return Err(CliError::Usage(format!("{p}: signal dimension {} but dim E = {m}", s.dim())));
                }
                s
            }
            None => return Err(CliError::Usage(format!("--input `{other}` is not gaussian, zero or file:PATH"))),
        },
    };
    let h = parse_h(h, v.dim_h(), ctx.seed)?;
    let margin = if m == 0 { f64::INFINITY } else { lambda_min(&v.sigma_at(&xi)) };
    let in_cone = margin > 0.0;
    if !in_cone && !force {
        return Err(CliError::Check(format!("ξ = {xi:?} is outside the positivity cone (margin {margin:e}); use --force")));
    }
    let start = Instant::now();
    let traj = propagate_state(&v, &h, &u, &xi, &eta).map_err(|e| CliError::Usage(e.to_string()))?;
    let residual = energy_balance_residual(&traj, &v);
    report.time("propagate", start);
    let isometry = if in_cone {
        let p = energy_profile(&traj, &v);
        let last = g.n - 1;
        Some(IsometryFields { state_energy_final: p.state[last], input_energy: p.input[last], output_energy: p.output[last] })
    } else {
        report.warn("ξ outside the positivity cone: isometry fields n/a");
        None
    };
    let mut r = ConditionReport::new();
    r.push("energy balance", residual, ENERGY_TOL * ctx.tol_scale);
    report.check("energy balance", r);
    let dump = TrajectoryDump {
        grid: g.into(),
        direction: xi,
        offset: eta,
        x: traj.x.iter().map(io::vector_to_json).collect(),
        u: traj.u.values.iter().map(io::vector_to_json).collect(),
        y: traj.y.values.iter().map(io::vector_to_json).collect(),
        energy_balance_residual: residual,
        cone_margin: margin,
        isometry,
    };
    write_or_print(out, &dump)?;
    ctx.emit(&report, false)?;
    Ok(exit_for(&report))
}

fn solve(
    ctx: &Context,
    path: &Path,
    degree: usize,
    ratio: f64,
    direction: Option<&str>,
    out: Option<&Path>,
) -> Result<i32> {
    let bytes = read_bytes(path)?;
    let mut report = ctx.report("solve", &bytes);
    let (_, v) = load_vessel(path, &mut report)?;
    let xi = parse_direction(direction, v.d())?.unwrap_or_else(|| default_direction(&v));
    if !(ratio > 0.0) {
        return Err(CliError::Usage("--ratio must be positive".into()));
    }
    let start = Instant::now();
    let (_, pencil) = normalize(&v, &xi, DEFAULT_TOL).map_err(check_error)?;
    let b0 = fixtures::complex_vector(&mut rng(ctx.seed), v.dim_e());
    let init = AnalyticInitialData::geometric(&b0, ratio, degree + 1);
    let sol = solve_discrete(&pencil, &init, degree).map_err(|e| CliError::Internal(e.to_string()))?;
    let residual = check_discrete_compat_pencil(&sol, &pencil).map_err(|e| CliError::Internal(e.to_string()))?;
    report.time("solve", start);
    let mut r = ConditionReport::new();
    r.push("difference equation", residual, SERIES_TOL * ctx.tol_scale);
    report.check("difference equation", r);
    write_or_print(out, &SeriesFile::from_solution(&sol))?;
    ctx.emit(&report, false)?;
    Ok(exit_for(&report))
}
