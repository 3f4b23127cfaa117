//! Executes a validated [`RunConfig`]: computes, writes CSV artifacts and a
//! run manifest, and optionally evaluates the invariants that apply.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beam::{solve_beam_field, BeamSpec, DeflectionRatio};
use crate::config::{ConfigError, ConvergenceConfig, DispersionConfig, Job, RunConfig};
use crate::dispersion::{dispersion_exponential, dispersion_powerlaw, numerical_dispersion, DispersionPoint, Material1D};
use crate::error::Error;
use crate::kernels::KernelKind;
use crate::plate::{solve_plate_field, PlateSpec};
use crate::sweep::{
    run_sweep, verify as verify_sweep, Case, GridKernel, InvariantCheck, KernelFamily, Structure, StructureKind, SweepResult,
    SweepRow,
};

/// Relative residual above which a solve is reported as inaccurate.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Largest relative change of the peak deflection between the two finest
/// meshes of a convergence study.
pub const CONVERGENCE_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Solver(#[from] Error),
}

impl RunError {
    /// Machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Io { .. } => "io",
            RunError::Solver(_) => "solver",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io { .. } => 3,
            RunError::Solver(_) => 4,
        }
    }
}

/// Exit code when every computation succeeded but an invariant failed.
pub const VERIFY_FAILED_EXIT: i32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<InvariantCheck>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }
}

/// Tabular output: header plus rows of already formatted cells.
struct Table {
    name: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r).expect("writing to memory");
        }
        w.into_inner().expect("writing to memory")
    }
}

fn sweep_table(name: &str, r: &SweepResult) -> Table {
    Table { name: name.into(), header: r.header().to_vec(), rows: r.records() }
}

fn check(name: &'static str, ok: bool, detail: String) -> InvariantCheck {
    InvariantCheck { name, passed: Some(ok), detail }
}

fn kernel_params(k: &GridKernel, config: &DispersionConfig) -> String {
    match k.family {
        KernelFamily::Exponential => format!("l0={}", k.param),
        KernelFamily::PowerLaw => format!("alpha={};l_star={}", k.param, config.l_star),
        KernelFamily::Local => String::new(),
    }
}

fn closed_form(k: f64, mat: &Material1D, kind: &KernelKind, l_star: f64) -> Result<DispersionPoint, Error> {
    match *kind {
        KernelKind::Exponential { l0 } => dispersion_exponential(k, mat, l0),
        KernelKind::PowerLaw { alpha } => dispersion_powerlaw(k, mat, alpha, l_star),
        KernelKind::LocalDelta => dispersion_powerlaw(k, mat, 1.0, l_star),
    }
}

fn run_dispersion(
    mat: &Material1D,
    kernel: &GridKernel,
    config: &DispersionConfig,
    verify: bool,
) -> Result<(Vec<Table>, Vec<InvariantCheck>), Error> {
    let kind = kernel.kind()?;
    let ks = config.wavenumbers();
    let closed: Vec<DispersionPoint> = ks.iter().map(|&k| closed_form(k, mat, &kind, config.l_star)).collect::<Result<_, _>>()?;
    let horizon = match (config.horizon, kind) {
        (Some(h), _) => h,
        (None, KernelKind::Exponential { l0 }) => 20.0 * l0,
        (None, _) => 1.0,
    };
    let numerical: Option<Vec<DispersionPoint>> = if config.numerical {
        Some(
            ks.par_iter()
                .map(|&k| numerical_dispersion(k, mat, &kind, horizon, config.points_per_wavelength))
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };
    let mut header = vec!["k", "re_vp2", "im_vp2", "kernel", "params"];
    if numerical.is_some() {
        header.extend(["re_vp2_numerical", "im_vp2_numerical"]);
    }
    let params = kernel_params(kernel, config);
    let rows = closed
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![
                p.k.to_string(),
                p.phase_velocity_sq.re.to_string(),
                p.phase_velocity_sq.im.to_string(),
                kernel.family.name().to_string(),
                params.clone(),
            ];
            if let Some(n) = &numerical {
                row.extend([n[i].phase_velocity_sq.re.to_string(), n[i].phase_velocity_sq.im.to_string()]);
            }
            row
        })
        .collect();

    let mut checks = Vec::new();
    if verify {
        let c2 = mat.wave_speed_sq();
        if let KernelKind::Exponential { .. } | KernelKind::LocalDelta = kind {
            let worst = closed.iter().map(|p| p.phase_velocity_sq.im.abs()).fold(0.0, f64::max);
            checks.push(check("no attenuation for the exponential kernel", worst < 1e-12 * c2, format!("max |Im| = {worst:e}")));
        }
        let alpha = if let KernelKind::PowerLaw { alpha } = kind { alpha } else { 1.0 };
        let bounded = closed.iter().all(|p| {
            let cap = c2 * (1.0f64).max((p.k * config.l_star).powf(2.0 * (alpha - 1.0)));
            p.phase_velocity_sq.norm() <= cap * (1.0 + 1e-12)
        });
        checks.push(check("bounded phase velocity", bounded, format!("{} wavenumbers", closed.len())));
        if let Some(n) = &numerical {
            let worst = closed
                .iter()
                .zip(n)
                .map(|(a, b)| (a.phase_velocity_sq - b.phase_velocity_sq).norm() / a.phase_velocity_sq.norm())
                .fold(0.0, f64::max);
            checks.push(check("lattice operator matches the closed form to 1e-4", worst <= 1e-4, format!("max relative gap {worst:e}")));
        }
    }
    Ok((vec![Table { name: "dispersion.csv".into(), header, rows }], checks))
}

fn beam_field_table(spec: &BeamSpec, dofs: &crate::beam::BeamDofField) -> Result<Table, Error> {
    let mesh = spec.mesh()?;
    let rows = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, x)| vec![x.to_string(), dofs.u0[i].to_string(), dofs.w0[i].to_string(), dofs.theta[i].to_string()])
        .collect();
    Ok(Table { name: "beam_field.csv".into(), header: vec!["x", "u0", "w0", "theta"], rows })
}

fn plate_field_table(spec: &PlateSpec, dofs: &crate::plate::PlateDofField) -> Result<Table, Error> {
    let mesh = spec.mesh()?;
    let rows = (0..mesh.n_nodes())
        .map(|n| {
            let [x, y] = mesh.node_position(n);
            [x, y, dofs.u0[n], dofs.v0[n], dofs.w0[n], dofs.theta_x[n], dofs.theta_y[n]].map(|v| v.to_string()).to_vec()
        })
        .collect();
    Ok(Table { name: "plate_field.csv".into(), header: vec!["x", "y", "u", "v", "w", "theta_x", "theta_y"], rows })
}

/// Largest mismatch of w under x ↦ L − x and y ↦ B − y, relative to max |w|.
fn plate_symmetry_gap(spec: &PlateSpec, w: &[f64]) -> f64 {
    let (nx, ny) = (spec.nx, spec.ny);
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut gap = 0.0f64;
    for j in 0..=ny {
        for i in 0..=nx {
            gap = gap.max((w[idx(i, j)] - w[idx(nx - i, j)]).abs()).max((w[idx(i, j)] - w[idx(i, ny - j)]).abs());
        }
    }
    if scale == 0.0 {
        gap
    } else {
        gap / scale
    }
}

fn single_checks(kind: &'static str, kernel: &GridKernel, ratio: &DeflectionRatio, residuals: [f64; 2]) -> Vec<InvariantCheck> {
    let worst = residuals[0].max(residuals[1]);
    let mut checks = vec![check("solve residual below 1e-8", worst < RESIDUAL_TOLERANCE, format!("{worst:e}"))];
    if kernel.is_nontrivial() {
        checks.push(check("softening: w_bar > 1", ratio.w_bar > 1.0, format!("w_bar = {}", ratio.w_bar)));
    } else {
        let tol = if kind == "beam" { 1e-3 } else { 2e-3 };
        checks.push(check("local limit: |w_bar - 1| within tolerance", (ratio.w_bar - 1.0).abs() <= tol, format!("w_bar = {}", ratio.w_bar)));
    }
    checks
}

fn run_convergence(config: &ConvergenceConfig, kernel: &GridKernel, l_f: f64, verify: bool) -> Result<(Vec<Table>, Vec<InvariantCheck>), Error> {
    let kind = kernel.kind()?;
    let solve = |n: usize, kind: &KernelKind| -> Result<(usize, f64), Error> {
        match (&config.structure, &config.case) {
            (Structure::Beam(s), Case::Beam(load)) => {
                let spec = BeamSpec { n_elements: n, ..s.clone() };
                let w = solve_beam_field(&spec, load, kind, l_f)?.w_max;
                Ok((3 * (n + 1), w))
            }
            (Structure::Plate(s), Case::Plate { bc, pressure }) => {
                let spec = PlateSpec { nx: n, ny: n, ..s.clone() };
                let w = solve_plate_field(&spec, *bc, *pressure, kind, l_f)?.w_center;
                Ok((5 * (n + 1) * (n + 1), w))
            }
            _ => Err(Error::InvalidArgument("convergence case does not match the structure".into())),
        }
    };
    let mut rows = Vec::new();
    let mut last_change = None;
    let mut previous: Option<f64> = None;
    for &n in &config.meshes {
        let (dofs, w_nl) = solve(n, &kind).map_err(|e| e.context(format!("mesh {n}")))?;
        let (_, w_l) = solve(n, &KernelKind::LocalDelta).map_err(|e| e.context(format!("mesh {n}")))?;
        let change = previous.map(|p| (w_nl - p).abs() / p.abs());
        last_change = change.or(last_change);
        previous = Some(w_nl);
        rows.push(vec![
            n.to_string(),
            dofs.to_string(),
            w_nl.to_string(),
            w_l.to_string(),
            (w_nl / w_l).to_string(),
            change.map(|c| c.to_string()).unwrap_or_default(),
        ]);
    }
    let header = vec!["mesh", "n_dofs", "w_peak_nonlocal", "w_peak_local", "w_bar", "relative_change"];
    let mut checks = Vec::new();
    if verify {
        let passed = last_change.map(|c| c < CONVERGENCE_TOLERANCE);
        let detail = last_change.map(|c| format!("last refinement changed w by {c:e}")).unwrap_or_else(|| "needs two meshes".into());
        checks.push(InvariantCheck { name: "self-convergence: last refinement changes w by < 0.5%", passed, detail });
    }
    Ok((vec![Table { name: "convergence.csv".into(), header, rows }], checks))
}

fn compute(config: &RunConfig, verify: bool) -> Result<(Vec<Table>, Vec<InvariantCheck>), Error> {
    match &config.job {
        Job::Dispersion { kernel, config: dc } => {
            let mat = Material1D::new(config.material.e, config.material.rho)?;
            run_dispersion(&mat, kernel, dc, verify)
        }
        Job::Beam { spec, load, kernel, l_f } => {
            let kind = kernel.kind()?;
            let ctx = || format!("beam {} with {kernel}, l_f = {l_f}", load.name());
            let nl = solve_beam_field(spec, load, &kind, *l_f).map_err(|e| e.context(ctx()))?;
            let loc = solve_beam_field(spec, load, &KernelKind::LocalDelta, *l_f).map_err(|e| e.context(ctx()))?;
            let ratio = DeflectionRatio::new(nl.w_max, loc.w_max);
            let result = SweepResult {
                structure: StructureKind::Beam,
                rows: vec![SweepRow { kernel: *kernel, l_f: *l_f, case: Case::Beam(*load), outcome: Ok(ratio) }],
            };
            let checks = if verify { single_checks("beam", kernel, &ratio, [nl.relative_residual, loc.relative_residual]) } else { Vec::new() };
            Ok((vec![sweep_table("beam.csv", &result), beam_field_table(spec, &nl.dofs)?], checks))
        }
        Job::Plate { spec, bc, pressure, kernel, l_f } => {
            let kind = kernel.kind()?;
            let ctx = || format!("plate {} with {kernel}, l_f = {l_f}", bc.name());
            let nl = solve_plate_field(spec, *bc, *pressure, &kind, *l_f).map_err(|e| e.context(ctx()))?;
            let loc = solve_plate_field(spec, *bc, *pressure, &KernelKind::LocalDelta, *l_f).map_err(|e| e.context(ctx()))?;
            let ratio = DeflectionRatio::new(nl.w_center, loc.w_center);
            let result = SweepResult {
                structure: StructureKind::Plate,
                rows: vec![SweepRow {
                    kernel: *kernel,
                    l_f: *l_f,
                    case: Case::Plate { bc: *bc, pressure: *pressure },
                    outcome: Ok(ratio),
                }],
            };
            let mut checks = Vec::new();
            if verify {
                checks = single_checks("plate", kernel, &ratio, [nl.relative_residual, loc.relative_residual]);
                if spec.length == spec.width && spec.nx == spec.ny {
                    let gap = plate_symmetry_gap(spec, &nl.dofs.w0);
                    checks.push(check("plate deflection symmetric to 1e-8", gap <= 1e-8, format!("relative gap {gap:e}")));
                }
            }
            Ok((vec![sweep_table("plate.csv", &result), plate_field_table(spec, &nl.dofs)?], checks))
        }
        Job::Sweep(sc) => {
            let result = run_sweep(&sc.structure, &sc.cases, &sc.kernels, &sc.l_f);
            let name = format!("sweep_{}.csv", sc.structure.kind().name());
            let checks = if verify { verify_sweep(&result) } else { Vec::new() };
            Ok((vec![sweep_table(&name, &result)], checks))
        }
        Job::Convergence { config: cc, kernel, l_f } => run_convergence(cc, kernel, *l_f, verify),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// SHA-256 of the configuration text, hex encoded.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the job, writing every CSV and `manifest.json` into `out_dir`.
pub fn run(config: &RunConfig, config_text: &str, out_dir: &Path, verify: bool) -> Result<RunReport, RunError> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io { path: out_dir.to_path_buf(), source })?;
    let (tables, checks) = compute(config, verify)?;
    let mut outputs = Vec::new();
    let mut rows = 0;
    for t in &tables {
        let path = out_dir.join(&t.name);
        write(&path, &t.to_csv())?;
        rows += t.rows.len();
        outputs.push(path);
    }

    let mut m = Map::new();
    m.insert("tool".into(), Value::from(env!("CARGO_PKG_NAME")));
    m.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), Value::from(config.command.name()));
    m.insert("config_sha256".into(), Value::from(config_hash(config_text)));
    m.insert("config".into(), Value::from(config_text));
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    m.insert("timestamp_unix".into(), Value::from(timestamp));
    m.insert("threads".into(), Value::from(rayon::current_num_threads()));
    m.insert("rows".into(), Value::from(rows));
    let names: Vec<String> = tables.iter().map(|t| t.name.clone()).collect();
    m.insert("outputs".into(), Value::from(names.join(",")));
    if verify {
        let failed = checks.iter().filter(|c| c.passed == Some(false)).count();
        m.insert("verify_failed".into(), Value::from(failed));
    }
    m.insert("wall_time_s".into(), Value::from(start.elapsed().as_secs_f64()));
    let manifest = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&Value::Object(m)).expect("manifest serializes");
    text.push('\n');
    write(&manifest, text.as_bytes())?;
    outputs.push(manifest);
    Ok(RunReport { outputs, checks })
}
