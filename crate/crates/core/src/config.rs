//! Run configuration: a TOML document validated against the schema of one
//! subcommand. Validation collects every problem before reporting.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;
use toml::{Table, Value};

use crate::beam::{BeamLoadCase, BeamSpec};
use crate::plate::{PlateBc, PlateSpec};
use crate::sweep::{kernel_grid, Case, GridKernel, KernelFamily, Structure};

/// Smallest power-law order accepted. The model is reported to break down
/// near α = 0.4; the floor keeps a safety margin above it.
pub const ALPHA_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dispersion,
    Beam,
    Plate,
    Sweep,
    Convergence,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::Dispersion, Command::Beam, Command::Plate, Command::Sweep, Command::Convergence];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Beam => "beam",
            Command::Plate => "plate",
            Command::Sweep => "sweep",
            Command::Convergence => "convergence",
        }
    }

    fn sections(&self) -> &'static [&'static str] {
        match self {
            Command::Dispersion => &["run", "material", "kernel", "dispersion"],
            Command::Beam | Command::Plate => &["run", "material", "geometry", "kernel", "horizon", "mesh", "load"],
            Command::Sweep => &["run", "material", "geometry", "mesh", "load", "sweep"],
            Command::Convergence => &["run", "material", "geometry", "kernel", "horizon", "load", "convergence"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

/// Every validation problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration:\n  {}", .0.join("\n  "))]
pub struct ConfigError(pub Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub e: f64,
    pub nu: f64,
    pub rho: f64,
    pub kappa_s: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self { e: 30e9, nu: 0.3, rho: 2400.0, kappa_s: 5.0 / 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    pub scale: Scale,
    /// Also evaluate the lattice operator next to the closed form.
    pub numerical: bool,
    pub points_per_wavelength: usize,
    /// Horizon length of the lattice operator; defaults to 20·l0.
    pub horizon: Option<f64>,
    /// Reference length l* of the power-law relation.
    pub l_star: f64,
}

impl DispersionConfig {
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.k_min];
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.k_min + t * (self.k_max - self.k_min),
                    Scale::Log => (self.k_min.ln() + t * (self.k_max.ln() - self.k_min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub structure: Structure,
    pub cases: Vec<Case>,
    pub kernels: Vec<GridKernel>,
    pub l_f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub structure: Structure,
    pub case: Case,
    /// Element counts (beam) or elements per side (plate), increasing.
    pub meshes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Dispersion { kernel: GridKernel, config: DispersionConfig },
    Beam { spec: BeamSpec, load: BeamLoadCase, kernel: GridKernel, l_f: f64 },
    Plate { spec: PlateSpec, bc: PlateBc, pressure: f64, kernel: GridKernel, l_f: f64 },
    Sweep(SweepConfig),
    Convergence { config: ConvergenceConfig, kernel: GridKernel, l_f: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub material: Material,
    pub job: Job,
    pub threads: Option<usize>,
    pub out: Option<String>,
}

/// Reads typed keys out of one table, remembering which keys were used so
/// leftovers can be reported as unknown.
struct Reader<'a> {
    section: &'a str,
    table: Option<&'a Table>,
    used: Vec<&'a str>,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn key(&self, key: &str) -> String {
        if self.section.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.section)
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn float(&mut self, key: &'static str, default: f64) -> f64 {
        self.opt_float(key).unwrap_or(default)
    }

    fn opt_float(&mut self, key: &'static str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            other => {
                let msg = format!("{}: expected a number, got {}", self.key(key), other.type_str());
                self.errors.push(msg);
                None
            }
        }
    }

    fn positive(&mut self, key: &'static str, default: f64) -> f64 {
        let v = self.float(key, default);
        if !(v > 0.0 && v.is_finite()) {
            let msg = format!("{}: must be positive, got {v}", self.key(key));
            self.errors.push(msg);
        }
        v
    }

    fn count(&mut self, key: &'static str, default: usize) -> usize {
        match self.raw(key) {
            None => default,
            Some(Value::Integer(v)) if *v > 0 => *v as usize,
            Some(other) => {
                let msg = format!("{}: expected a positive integer, got {other}", self.key(key));
                self.errors.push(msg);
                default
            }
        }
    }

    fn boolean(&mut self, key: &'static str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                let msg = format!("{}: expected true or false, got {other}", self.key(key));
                self.errors.push(msg);
                default
            }
        }
    }

    fn string(&mut self, key: &'static str) -> Option<&'a str> {
        match self.raw(key)? {
            Value::String(s) => Some(s),
            other => {
                let msg = format!("{}: expected a string, got {other}", self.key(key));
                self.errors.push(msg);
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, key: &'static str, options: &[(&str, T)], default: Option<T>) -> Option<T> {
        let Some(s) = self.string(key) else {
            if default.is_none() {
                let msg = format!("{}: required", self.key(key));
                self.errors.push(msg);
            }
            return default;
        };
        let found = options.iter().find(|(name, _)| *name == s).map(|o| o.1);
        if found.is_none() {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            let msg = format!("{}: unknown value `{s}`, expected one of {}", self.key(key), names.join(", "));
            self.errors.push(msg);
        }
        found.or(default)
    }

    fn list<T>(&mut self, key: &'static str, item: impl Fn(&Value) -> Option<T>, default: Vec<T>) -> Vec<T> {
        match self.raw(key) {
            None => default,
            Some(Value::Array(items)) if !items.is_empty() => {
                let parsed: Option<Vec<T>> = items.iter().map(&item).collect();
                parsed.unwrap_or_else(|| {
                    let msg = format!("{}: array has an element of the wrong type", self.key(key));
                    self.errors.push(msg);
                    default
                })
            }
            Some(other) => {
                let msg = format!("{}: expected a nonempty array, got {other}", self.key(key));
                self.errors.push(msg);
                default
            }
        }
    }

    fn float_list(&mut self, key: &'static str, default: &[f64]) -> Vec<f64> {
        let item = |v: &Value| match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        };
        self.list(key, item, default.to_vec())
    }

    /// Problems found so far plus any keys that were never read.
    fn finish(mut self) -> Vec<String> {
        if let Some(table) = self.table {
            for key in table.keys() {
                if !self.used.contains(&key.as_str()) {
                    let msg = format!("unknown key `{}`", self.key(key));
                    self.errors.push(msg);
                }
            }
        }
        self.errors
    }
}

fn as_table<'a>(doc: &'a Table, name: &str, errors: &mut Vec<String>) -> Option<&'a Table> {
    match doc.get(name) {
        None => None,
        Some(Value::Table(t)) => Some(t),
        Some(other) => {
            errors.push(format!("`{name}` must be a table, got {}", other.type_str()));
            None
        }
    }
}

const BEAM_CASES: [(&str, u8); 2] = [("cantilever_tip", 0), ("simply_supported_udtl", 1)];
const PLATE_BCS: [(&str, PlateBc); 2] = [("clamped", PlateBc::Clamped), ("simply_supported", PlateBc::SimplySupported)];
const STRUCTURES: [(&str, bool); 2] = [("beam", true), ("plate", false)];

fn beam_case(code: u8, magnitude: f64) -> BeamLoadCase {
    if code == 0 {
        BeamLoadCase::CantileverTipLoad(magnitude)
    } else {
        BeamLoadCase::SimplySupportedUdtl(magnitude)
    }
}

fn check_alpha(alpha: f64, key: &str, errors: &mut Vec<String>) {
    if alpha < ALPHA_FLOOR {
        errors.push(format!(
            "{key}: alpha = {alpha} is below the admissibility floor {ALPHA_FLOOR} \
             (the model breaks down near alpha = 0.4)"
        ));
    } else if alpha > 1.0 {
        errors.push(format!("{key}: alpha must not exceed 1, got {alpha}"));
    }
}

struct Parser<'a> {
    doc: &'a Table,
    errors: Vec<String>,
}

impl<'a> Parser<'a> {
    fn section<R>(&mut self, name: &'a str, f: impl FnOnce(&mut Reader<'a>) -> R) -> R {
        let table = as_table(self.doc, name, &mut self.errors);
        let mut reader = Reader { section: name, table, used: Vec::new(), errors: Vec::new() };
        let out = f(&mut reader);
        self.errors.extend(reader.finish());
        out
    }

    fn material(&mut self) -> Material {
        let d = Material::default();
        let m = self.section("material", |r| Material {
            e: r.positive("E", d.e),
            nu: r.float("nu", d.nu),
            rho: r.positive("rho", d.rho),
            kappa_s: r.positive("kappa_s", d.kappa_s),
        });
        if !(0.0..0.5).contains(&m.nu) {
            self.errors.push(format!("material.nu: must lie in [0, 0.5), got {}", m.nu));
        }
        m
    }

    fn kernel(&mut self) -> GridKernel {
        let mut alpha_err = Vec::new();
        let kernel = self.section("kernel", |r| {
            let kind = r.choice("kind", &[("exponential", 0u8), ("power_law", 1), ("local", 2)], Some(0));
            let l0 = r.positive("l0", 0.005);
            let alpha = r.float("alpha", 0.7);
            match kind {
                Some(0) => GridKernel::exponential(l0),
                Some(1) => {
                    check_alpha(alpha, "kernel.alpha", &mut alpha_err);
                    GridKernel::power_law(alpha)
                }
                _ => GridKernel::local(),
            }
        });
        self.errors.append(&mut alpha_err);
        kernel
    }

    fn l_f(&mut self) -> f64 {
        self.section("horizon", |r| r.positive("l_f", 0.5))
    }

    /// Geometry defaults follow the structure: a 1 × 0.1 × 0.1 m beam or a
    /// 1 × 1 × 0.1 m plate.
    fn geometry(&mut self, beam: bool) -> (f64, f64, f64) {
        let width = if beam { 0.1 } else { 1.0 };
        self.section("geometry", |r| (r.positive("length", 1.0), r.positive("width", width), r.positive("thickness", 0.1)))
    }

    fn beam_spec(&mut self, m: &Material, mesh: bool) -> BeamSpec {
        let (length, width, thickness) = self.geometry(true);
        let d = BeamSpec::default();
        let n_elements = if mesh { self.section("mesh", |r| r.count("elements", d.n_elements)) } else { d.n_elements };
        BeamSpec { length, width, thickness, e: m.e, nu: m.nu, kappa_s: m.kappa_s, n_elements }
    }

    fn plate_spec(&mut self, m: &Material, mesh: bool) -> PlateSpec {
        let (length, width, thickness) = self.geometry(false);
        let d = PlateSpec::default();
        let (nx, ny) =
            if mesh { self.section("mesh", |r| (r.count("nx", d.nx), r.count("ny", d.ny))) } else { (d.nx, d.ny) };
        PlateSpec { length, width, thickness, e: m.e, nu: m.nu, kappa_s: m.kappa_s, nx, ny }
    }

    fn beam_load(&mut self) -> BeamLoadCase {
        self.section("load", |r| {
            let case = r.choice("case", &BEAM_CASES, Some(0)).unwrap_or(0);
            beam_case(case, r.float("magnitude", 1.0))
        })
    }

    fn plate_load(&mut self) -> (PlateBc, f64) {
        self.section("load", |r| {
            let bc = r.choice("bc", &PLATE_BCS, Some(PlateBc::SimplySupported)).unwrap_or(PlateBc::SimplySupported);
            (bc, r.float("pressure", 1.0))
        })
    }

    fn dispersion(&mut self, kernel: &GridKernel) -> DispersionConfig {
        let c = self.section("dispersion", |r| DispersionConfig {
            k_min: r.positive("k_min", 1.0),
            k_max: r.positive("k_max", 1000.0),
            points: r.count("points", 100),
            scale: r.choice("scale", &[("log", Scale::Log), ("linear", Scale::Linear)], Some(Scale::Log)).unwrap(),
            numerical: r.boolean("numerical", false),
            points_per_wavelength: r.count("points_per_wavelength", 512),
            horizon: r.opt_float("horizon"),
            l_star: r.positive("l_star", 1.0),
        });
        if c.k_max < c.k_min {
            self.errors.push(format!("dispersion.k_max ({}) is below k_min ({})", c.k_max, c.k_min));
        }
        if c.numerical && kernel.family == KernelFamily::PowerLaw {
            self.errors.push("dispersion.numerical: only exponential and local kernels have a lattice oracle".into());
        }
        c
    }

    /// Reads `structure` from a section whose remaining keys are checked later.
    fn structure(&mut self, section: &'a str, m: &Material, mesh: bool) -> Structure {
        let table = as_table(self.doc, section, &mut self.errors);
        let mut reader = Reader { section, table, used: Vec::new(), errors: Vec::new() };
        let beam = reader.choice("structure", &STRUCTURES, Some(true)).unwrap_or(true);
        self.errors.append(&mut reader.errors);
        if beam {
            Structure::Beam(self.beam_spec(m, mesh))
        } else {
            Structure::Plate(self.plate_spec(m, mesh))
        }
    }

    fn sweep(&mut self, m: &Material) -> SweepConfig {
        let structure = self.structure("sweep", m, true);
        let (magnitude, pressure) = self.section("load", |r| (r.float("magnitude", 1.0), r.float("pressure", 1.0)));
        let is_beam = matches!(structure, Structure::Beam(_));
        let mut alpha_err = Vec::new();
        let config = self.section("sweep", |r| {
            r.used.push("structure");
            let cases = if is_beam {
                let names = r.list("load_cases", |v| v.as_str().map(str::to_string), BEAM_CASES.map(|c| c.0.to_string()).to_vec());
                names
                    .iter()
                    .filter_map(|n| match BEAM_CASES.iter().find(|c| c.0 == n) {
                        Some(c) => Some(Case::Beam(beam_case(c.1, magnitude))),
                        None => {
                            r.errors.push(format!("sweep.load_cases: unknown load case `{n}`"));
                            None
                        }
                    })
                    .collect()
            } else {
                let names = r.list("bcs", |v| v.as_str().map(str::to_string), PLATE_BCS.map(|c| c.0.to_string()).to_vec());
                names
                    .iter()
                    .filter_map(|n| match PLATE_BCS.iter().find(|c| c.0 == n) {
                        Some(c) => Some(Case::Plate { bc: c.1, pressure }),
                        None => {
                            r.errors.push(format!("sweep.bcs: unknown boundary condition `{n}`"));
                            None
                        }
                    })
                    .collect()
            };
            let l0 = r.float_list("l0", &[1e-6, 1e-3, 2.5e-3, 5e-3]);
            let alpha = r.float_list("alpha", &[0.7, 0.8, 0.9, 1.0]);
            let l_f = r.float_list("l_f", &[0.5, 0.75, 1.0]);
            for &a in &alpha {
                check_alpha(a, "sweep.alpha", &mut alpha_err);
            }
            for (name, values) in [("l0", &l0), ("l_f", &l_f)] {
                if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
                    r.errors.push(format!("sweep.{name}: values must be positive, got {v}"));
                }
            }
            SweepConfig { structure, cases, kernels: kernel_grid(&l0, &alpha), l_f }
        });
        self.errors.append(&mut alpha_err);
        config
    }

    fn convergence(&mut self, m: &Material) -> ConvergenceConfig {
        let structure = self.structure("convergence", m, false);
        let case = match structure {
            Structure::Beam(_) => Case::Beam(self.beam_load()),
            Structure::Plate(_) => {
                let (bc, pressure) = self.plate_load();
                Case::Plate { bc, pressure }
            }
        };
        let default_meshes = match structure {
            Structure::Beam(_) => vec![50, 100, 200, 400],
            Structure::Plate(_) => vec![8, 12, 16, 24],
        };
        let meshes = self.section("convergence", |r| {
            r.used.push("structure");
            r.list("meshes", |v| v.as_integer().filter(|i| *i > 0).map(|i| i as usize), default_meshes)
        });
        if meshes.windows(2).any(|w| w[0] >= w[1]) {
            self.errors.push("convergence.meshes: must be strictly increasing".into());
        }
        ConvergenceConfig { structure, case, meshes }
    }

    fn run_section(&mut self) -> (Option<usize>, Option<String>) {
        self.section("run", |r| {
            let threads = r.raw("threads").map(|v| match v {
                Value::Integer(n) if *n > 0 => *n as usize,
                other => {
                    let msg = format!("run.threads: expected a positive integer, got {other}");
                    r.errors.push(msg);
                    1
                }
            });
            let out = r.string("out").map(str::to_string);
            (threads, out)
        })
    }
}

/// Parses and validates a configuration for `command`.
pub fn parse_config(text: &str, command: Command) -> Result<RunConfig, ConfigError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| ConfigError(vec![e.to_string().trim().to_string()]))?;
    let mut p = Parser { doc: &doc, errors: Vec::new() };
    let allowed = command.sections();
    for key in doc.keys() {
        if !allowed.contains(&key.as_str()) {
            p.errors.push(format!("unknown section `{key}` for the {command} subcommand"));
        }
    }
    let (threads, out) = p.run_section();
    let material = p.material();
    let job = match command {
        Command::Dispersion => {
            let kernel = p.kernel();
            let config = p.dispersion(&kernel);
            Job::Dispersion { kernel, config }
        }
        Command::Beam => {
            let spec = p.beam_spec(&material, true);
            let kernel = p.kernel();
            let l_f = p.l_f();
            let load = p.beam_load();
            Job::Beam { spec, load, kernel, l_f }
        }
        Command::Plate => {
            let spec = p.plate_spec(&material, true);
            let kernel = p.kernel();
            let l_f = p.l_f();
            let (bc, pressure) = p.plate_load();
            Job::Plate { spec, bc, pressure, kernel, l_f }
        }
        Command::Sweep => Job::Sweep(p.sweep(&material)),
        Command::Convergence => {
            let kernel = p.kernel();
            let l_f = p.l_f();
            Job::Convergence { config: p.convergence(&material), kernel, l_f }
        }
    };
    let mut errors = p.errors;
    let structural = match &job {
        Job::Beam { spec, .. } => spec.validate().err(),
        Job::Plate { spec, .. } => spec.validate().err(),
        Job::Sweep(SweepConfig { structure: Structure::Beam(s), .. }) => s.validate().err(),
        Job::Sweep(SweepConfig { structure: Structure::Plate(s), .. }) => s.validate().err(),
        _ => None,
    };
    if let Some(e) = structural {
        errors.push(e.to_string());
    }
    errors.dedup();
    if errors.is_empty() {
        Ok(RunConfig { command, material, job, threads, out })
    } else {
        Err(ConfigError(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_beam_config_uses_defaults() {
        let c = parse_config("", Command::Beam).unwrap();
        let Job::Beam { spec, load, kernel, l_f } = c.job else { panic!() };
        assert_eq!(spec, BeamSpec::default());
        assert_eq!(load, BeamLoadCase::CantileverTipLoad(1.0));
        assert_eq!(kernel, GridKernel::exponential(0.005));
        assert_eq!(l_f, 0.5);
        assert_eq!(c.material.rho, 2400.0);
    }

    #[test]
    fn alpha_below_floor_cites_admissibility() {
        let err = parse_config("[kernel]\nkind = \"power_law\"\nalpha = 0.3\n", Command::Beam).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("admissibility floor")), "{err}");
    }

    #[test]
    fn all_errors_are_reported() {
        let text = "[material]\nE = -1.0\nnu = 0.7\n[mesh]\nelemnts = 10\n[plot]\nx = 1\n";
        let err = parse_config(text, Command::Beam).unwrap_err();
        let joined = err.0.join("\n");
        for needle in ["material.E", "material.nu", "mesh.elemnts", "section `plot`"] {
            assert!(joined.contains(needle), "missing {needle} in {joined}");
        }
    }

    #[test]
    fn sections_follow_the_subcommand() {
        assert!(parse_config("[dispersion]\npoints = 5\n", Command::Beam).is_err());
        assert!(parse_config("[horizon]\nl_f = 1.0\n", Command::Dispersion).is_err());
    }

    #[test]
    fn sweep_defaults_cover_the_production_grid() {
        let c = parse_config("[sweep]\nstructure = \"plate\"\n", Command::Sweep).unwrap();
        let Job::Sweep(s) = c.job else { panic!() };
        assert!(matches!(s.structure, Structure::Plate(ref p) if p.nx == 24 && p.width == 1.0));
        assert_eq!(s.cases.len(), 2);
        assert_eq!(s.kernels.len(), 8);
        assert_eq!(s.l_f, vec![0.5, 0.75, 1.0]);
    }

    #[test]
    fn dispersion_grid() {
        let c = parse_config("[dispersion]\nk_min = 1\nk_max = 100\npoints = 3\n", Command::Dispersion).unwrap();
        let Job::Dispersion { config, .. } = c.job else { panic!() };
        let k = config.wavenumbers();
        assert_eq!(k.len(), 3);
        assert!((k[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_has_no_lattice_oracle() {
        let text = "[kernel]\nkind = \"power_law\"\n[dispersion]\nnumerical = true\n";
        assert!(parse_config(text, Command::Dispersion).is_err());
    }
}
