//! Parameter sweeps of the normalized peak deflection w̄ and the checks run
//! on their results.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::beam::{solve_beam_field, BeamLoadCase, BeamSpec, DeflectionRatio};
use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::plate::{solve_plate_field, PlateBc, PlateSpec};

/// Exponential kernels at or below this length scale are expected to
/// reproduce the local solution.
pub const LOCAL_L0_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Beam,
    Plate,
}

impl StructureKind {
    pub fn name(&self) -> &'static str {
        match self {
            StructureKind::Beam => "beam",
            StructureKind::Plate => "plate",
        }
    }

    /// Tolerance on |w̄ − 1| in the local limit.
    pub fn local_tolerance(&self) -> f64 {
        match self {
            StructureKind::Beam => 1e-3,
            StructureKind::Plate => 2e-3,
        }
    }
}

/// One loading/support configuration of a structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    Beam(BeamLoadCase),
    Plate { bc: PlateBc, pressure: f64 },
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::Beam(l) => l.name(),
            Case::Plate { bc, .. } => bc.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Exponential,
    PowerLaw,
    Local,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Exponential => "exponential",
            KernelFamily::PowerLaw => "power_law",
            KernelFamily::Local => "local",
        }
    }
}

/// A kernel as requested by a sweep grid. Parameters at the local limit
/// (α = 1, tiny l0) keep their family here even though they solve with
/// [`KernelKind::LocalDelta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridKernel {
    pub family: KernelFamily,
    pub param: f64,
}

impl GridKernel {
    pub fn exponential(l0: f64) -> Self {
        Self { family: KernelFamily::Exponential, param: l0 }
    }

    pub fn power_law(alpha: f64) -> Self {
        Self { family: KernelFamily::PowerLaw, param: alpha }
    }

    pub fn local() -> Self {
        Self { family: KernelFamily::Local, param: 0.0 }
    }

    /// Parameter as written to CSV; empty for the local kernel.
    pub fn param_column(&self) -> String {
        match self.family {
            KernelFamily::Local => String::new(),
            _ => self.param.to_string(),
        }
    }

    pub fn kind(&self) -> Result<KernelKind> {
        match self.family {
            KernelFamily::Exponential => KernelKind::exponential(self.param),
            KernelFamily::PowerLaw => KernelKind::power_law(self.param),
            KernelFamily::Local => Ok(KernelKind::LocalDelta),
        }
    }

    /// Whether the kernel is expected to differ measurably from the local model.
    pub fn is_nontrivial(&self) -> bool {
        match self.family {
            KernelFamily::Exponential => self.param > LOCAL_L0_FLOOR,
            KernelFamily::PowerLaw => self.param < 1.0,
            KernelFamily::Local => false,
        }
    }
}

impl std::fmt::Display for GridKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self.family {
            KernelFamily::Exponential => "l0",
            KernelFamily::PowerLaw => "alpha",
            KernelFamily::Local => return f.write_str("local"),
        };
        write!(f, "{}({name}={})", self.family.name(), self.param)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kernel: GridKernel,
    pub l_f: f64,
    pub case: Case,
    pub outcome: Result<DeflectionRatio>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub structure: StructureKind,
    pub rows: Vec<SweepRow>,
}

/// Structure description shared by all rows of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Beam(BeamSpec),
    Plate(PlateSpec),
}

impl Structure {
    pub fn kind(&self) -> StructureKind {
        match self {
            Structure::Beam(_) => StructureKind::Beam,
            Structure::Plate(_) => StructureKind::Plate,
        }
    }

    /// Peak deflection of one configuration.
    pub fn peak_deflection(&self, case: &Case, kernel: &KernelKind, l_f: f64) -> Result<f64> {
        match (self, case) {
            (Structure::Beam(spec), Case::Beam(load)) => Ok(solve_beam_field(spec, load, kernel, l_f)?.w_max),
            (Structure::Plate(spec), Case::Plate { bc, pressure }) => {
                Ok(solve_plate_field(spec, *bc, *pressure, kernel, l_f)?.w_center)
            }
            _ => Err(Error::InvalidArgument(format!("case {} does not apply to a {}", case.name(), self.kind().name()))),
        }
    }
}

/// Runs every (case, kernel, l_f) combination in that nesting order. The
/// local reference is solved once per case; a failing configuration is
/// recorded in its row and the sweep continues.
pub fn run_sweep(structure: &Structure, cases: &[Case], kernels: &[GridKernel], l_fs: &[f64]) -> SweepResult {
    let mut rows = Vec::with_capacity(cases.len() * kernels.len() * l_fs.len());
    for case in cases {
        let reference_lf = l_fs.first().copied().unwrap_or(1.0);
        let local = structure.peak_deflection(case, &KernelKind::LocalDelta, reference_lf);
        let grid: Vec<(GridKernel, f64)> =
            kernels.iter().flat_map(|k| l_fs.iter().map(move |&l| (*k, l))).collect();
        let solved: Vec<SweepRow> = grid
            .par_iter()
            .map(|&(kernel, l_f)| {
                let ctx = || format!("{} {} with {kernel}, l_f = {l_f}", structure.kind().name(), case.name());
                let outcome = match &local {
                    Err(e) => Err(e.clone().context(format!("local reference for {}", case.name()))),
                    Ok(w_local) => kernel
                        .kind()
                        .and_then(|kind| structure.peak_deflection(case, &kind, l_f))
                        .map(|w| DeflectionRatio::new(w, *w_local))
                        .map_err(|e| e.context(ctx())),
                };
                SweepRow { kernel, l_f, case: *case, outcome }
            })
            .collect();
        rows.extend(solved);
    }
    SweepResult { structure: structure.kind(), rows }
}

pub fn beam_sweep(spec: &BeamSpec, load: BeamLoadCase, kernels: &[GridKernel], l_fs: &[f64]) -> SweepResult {
    run_sweep(&Structure::Beam(spec.clone()), &[Case::Beam(load)], kernels, l_fs)
}

pub fn plate_sweep(spec: &PlateSpec, bc: PlateBc, pressure: f64, kernels: &[GridKernel], l_fs: &[f64]) -> SweepResult {
    run_sweep(&Structure::Plate(spec.clone()), &[Case::Plate { bc, pressure }], kernels, l_fs)
}

/// Kernel grid of the given exponential lengths followed by power-law orders.
pub fn kernel_grid(l0s: &[f64], alphas: &[f64]) -> Vec<GridKernel> {
    l0s.iter().map(|&l| GridKernel::exponential(l)).chain(alphas.iter().map(|&a| GridKernel::power_law(a))).collect()
}

impl SweepResult {
    pub fn header(&self) -> [&'static str; 8] {
        match self.structure {
            StructureKind::Beam => {
                ["kernel", "param", "l_f", "load_case", "w_max_nonlocal", "w_max_local", "w_bar", "error"]
            }
            StructureKind::Plate => {
                ["kernel", "param", "l_f", "bc", "w_center_nonlocal", "w_center_local", "w_bar", "error"]
            }
        }
    }

    /// CSV with a header row; floats use shortest round-trip formatting so
    /// identical results give identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(self.header())?;
        for record in self.records() {
            w.write_record(&record)?;
        }
        w.flush()
    }

    /// Data rows as formatted cells, in the column order of [`Self::header`].
    pub fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let (a, b, c, err) = match &row.outcome {
                    Ok(r) => (r.w_nonlocal.to_string(), r.w_local.to_string(), r.w_bar.to_string(), String::new()),
                    Err(e) => (String::new(), String::new(), String::new(), e.to_string()),
                };
                let family = row.kernel.family.name().to_string();
                vec![family, row.kernel.param_column(), row.l_f.to_string(), row.case.name().to_string(), a, b, c, err]
            })
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    /// `None` when the grid does not contain the configurations the check needs.
    pub passed: Option<bool>,
    pub detail: String,
}

impl InvariantCheck {
    fn new(name: &'static str, failures: Vec<String>, checked: usize) -> Self {
        let passed = (checked > 0).then_some(failures.is_empty());
        let detail = if checked == 0 {
            "not applicable to this grid".to_string()
        } else if failures.is_empty() {
            format!("{checked} checked")
        } else {
            format!("{} of {checked} violated: {}", failures.len(), failures.join("; "))
        };
        Self { name, passed, detail }
    }

    pub fn status(&self) -> &'static str {
        match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        }
    }
}

type Series = BTreeMap<(&'static str, u64), Vec<(f64, f64)>>;

/// Groups successful rows of one family into series keyed by (case, fixed
/// parameter bits), each a list of (varying parameter, w̄).
fn series(result: &SweepResult, family: KernelFamily, vary_lf: bool) -> Series {
    let mut out: Series = BTreeMap::new();
    for row in &result.rows {
        let Ok(r) = &row.outcome else { continue };
        if row.kernel.family != family {
            continue;
        }
        let p = row.kernel.param;
        let (fixed, varying) = if vary_lf { (p, row.l_f) } else { (row.l_f, p) };
        out.entry((row.case.name(), fixed.to_bits())).or_default().push((varying, r.w_bar));
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// Evaluates every sweep invariant applicable to the grid.
pub fn verify(result: &SweepResult) -> Vec<InvariantCheck> {
    let mut checks = Vec::new();

    let failed: Vec<String> = result
        .rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("{} {} l_f={}: {e}", r.case.name(), r.kernel, r.l_f)))
        .collect();
    checks.push(InvariantCheck::new("all configurations solved", failed, result.rows.len()));

    let mut fails = Vec::new();
    let mut n = 0;
    for row in &result.rows {
        if let (Ok(r), true) = (&row.outcome, row.kernel.is_nontrivial()) {
            n += 1;
            if !(r.w_bar > 1.0) {
                fails.push(format!("{} {} l_f={}: w_bar={}", row.case.name(), row.kernel, row.l_f, r.w_bar));
            }
        }
    }
    checks.push(InvariantCheck::new("softening: w_bar > 1 for nontrivial kernels", fails, n));

    let tol = result.structure.local_tolerance();
    let (mut fails, mut n) = (Vec::new(), 0);
    for row in &result.rows {
        if let (Ok(r), false) = (&row.outcome, row.kernel.is_nontrivial()) {
            n += 1;
            if (r.w_bar - 1.0).abs() > tol {
                fails.push(format!("{} {} l_f={}: w_bar={}", row.case.name(), row.kernel, row.l_f, r.w_bar));
            }
        }
    }
    checks.push(InvariantCheck::new("local limit: |w_bar - 1| within tolerance", fails, n));

    let (mut fails, mut n) = (Vec::new(), 0);
    for ((case, lf), s) in series(result, KernelFamily::PowerLaw, false) {
        if s.len() < 2 {
            continue;
        }
        n += 1;
        if !s.windows(2).all(|w| w[0].1 > w[1].1) {
            fails.push(format!("{case} l_f={}: {:?}", f64::from_bits(lf), s));
        }
    }
    checks.push(InvariantCheck::new("power law: w_bar strictly increases as alpha decreases", fails, n));

    let (mut fails, mut n) = (Vec::new(), 0);
    for ((case, alpha), s) in series(result, KernelFamily::PowerLaw, true) {
        // alpha = 1 is the local limit, which does not depend on l_f.
        if s.len() < 2 || !GridKernel::power_law(f64::from_bits(alpha)).is_nontrivial() {
            continue;
        }
        n += 1;
        if !s.windows(2).all(|w| w[0].1 < w[1].1) {
            fails.push(format!("{case} alpha={}: {:?}", f64::from_bits(alpha), s));
        }
    }
    checks.push(InvariantCheck::new("power law: w_bar strictly increases with l_f", fails, n));

    let (mut fails, mut n) = (Vec::new(), 0);
    for ((case, l0), s) in series(result, KernelFamily::Exponential, true) {
        let l0 = f64::from_bits(l0);
        let min_lf = s.first().map(|p| p.0).unwrap_or(0.0);
        if s.len() < 2 || 5.0 * l0 > min_lf {
            continue;
        }
        n += 1;
        let hi = s.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let lo = s.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        if (hi - lo) / hi > 0.01 {
            fails.push(format!("{case} l0={l0}: spread {:.3e}", (hi - lo) / hi));
        }
    }
    checks.push(InvariantCheck::new("exponential: w_bar varies by at most 1% across l_f", fails, n));

    let (mut fails, mut n) = (Vec::new(), 0);
    for ((case, lf), s) in series(result, KernelFamily::Exponential, false) {
        let s: Vec<_> = s.into_iter().filter(|p| p.0 > LOCAL_L0_FLOOR).collect();
        if s.len() < 3 {
            continue;
        }
        n += 1;
        let (imax, _) = s.iter().enumerate().fold((0, f64::MIN), |acc, (i, p)| if p.1 > acc.1 { (i, p.1) } else { acc });
        if imax == 0 || imax == s.len() - 1 {
            let trend: Vec<String> = s.iter().map(|p| format!("{}:{:.7}", p.0, p.1)).collect();
            fails.push(format!("{case} l_f={}: maximum at l0={} ({})", f64::from_bits(lf), s[imax].0, trend.join(", ")));
        }
    }
    checks.push(InvariantCheck::new("exponential: w_bar rises then declines in l0", fails, n));

    checks
}
