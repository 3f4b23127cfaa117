//! Nonlocal Timoshenko beam on 2-node linear elements.
//!
//! Kinematics u = u0 − zθ, w = w0 give the strains
//! ε_xx = D̄u0 − z D̄θ and γ_xz = D̄w0 − θ. Each node carries [u0, w0, θ].

use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, ElementRules, EnergyTerm, IntegrationPoint, LineMesh, StiffnessSystem};
use crate::kernels::{validate_admissible, KernelKind};
use crate::operator::{build_operator_matrix, interpolation_row, HorizonSpec, NonlocalOperatorMatrix};

pub const DOFS_PER_NODE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub e: f64,
    pub nu: f64,
    pub kappa_s: f64,
    pub n_elements: usize,
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self { length: 1.0, width: 0.1, thickness: 0.1, e: 30e9, nu: 0.3, kappa_s: 5.0 / 6.0, n_elements: 200 }
    }
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [("length", self.length), ("width", self.width), ("thickness", self.thickness), ("E", self.e)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("beam {name} must be positive, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(Error::InvalidArgument(format!("Poisson ratio must lie in [0, 0.5), got {}", self.nu)));
        }
        if !(self.kappa_s > 0.0) || self.n_elements == 0 {
            return Err(Error::InvalidArgument("beam needs kappa_s > 0 and at least one element".into()));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    pub fn area(&self) -> f64 {
        self.width * self.thickness
    }

    pub fn second_moment(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    pub fn mesh(&self) -> Result<LineMesh> {
        LineMesh::uniform(0.0, self.length, self.n_elements)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamLoadCase {
    /// Transverse force P at x = L, clamped at x = 0.
    CantileverTipLoad(f64),
    /// Uniform transverse load q per unit length, pinned at both ends.
    SimplySupportedUdtl(f64),
}

impl BeamLoadCase {
    pub fn name(&self) -> &'static str {
        match self {
            BeamLoadCase::CantileverTipLoad(_) => "cantilever_tip",
            BeamLoadCase::SimplySupportedUdtl(_) => "simply_supported_udtl",
        }
    }

    pub fn magnitude(&self) -> f64 {
        match *self {
            BeamLoadCase::CantileverTipLoad(p) | BeamLoadCase::SimplySupportedUdtl(p) => p,
        }
    }
}

/// Nodal DOFs split by kind.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamDofField {
    pub u0: Vec<f64>,
    pub w0: Vec<f64>,
    pub theta: Vec<f64>,
}

impl BeamDofField {
    pub fn from_vector(u: &[f64]) -> Self {
        let pick = |k: usize| u.iter().skip(k).step_by(DOFS_PER_NODE).copied().collect();
        Self { u0: pick(0), w0: pick(1), theta: pick(2) }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.u0.len() * DOFS_PER_NODE);
        for i in 0..self.u0.len() {
            out.extend([self.u0[i], self.w0[i], self.theta[i]]);
        }
        out
    }
}

fn dof(node: usize, k: usize) -> usize {
    node * DOFS_PER_NODE + k
}

/// (ε_xx, γ_xz) at the operator's evaluation point `x` and height `z`.
pub fn beam_strains(
    dofs: &BeamDofField,
    mesh: &LineMesh,
    op: &NonlocalOperatorMatrix,
    x: f64,
    z: f64,
) -> Result<(f64, f64)> {
    let r = op.find_row([x, 0.0]).ok_or(Error::UnknownEvaluationPoint(x))?;
    let theta_at: f64 = interpolation_row(mesh.nodes(), x)?.iter().map(|&(n, w)| w * dofs.theta[n]).sum();
    let eps = op.apply_row(r, &dofs.u0) - z * op.apply_row(r, &dofs.theta);
    let gamma = op.apply_row(r, &dofs.w0) - theta_at;
    Ok((eps, gamma))
}

fn shift_row(row: (&[usize], &[f64]), k: usize) -> Vec<(usize, f64)> {
    row.0.iter().zip(row.1).map(|(&n, &v)| (dof(n, k), v)).collect()
}

/// Unconstrained stiffness matrix, row-major.
pub fn beam_stiffness(spec: &BeamSpec, kind: &KernelKind, l_f: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    validate_admissible(kind, spec.length)?;
    let mesh = spec.mesh()?;
    let horizon = HorizonSpec::new(l_f, 0.0, spec.length)?;
    let rules = ElementRules::reduced();
    let bend_pts = mesh.gauss_points(&rules.bending);
    let shear_pts = mesh.gauss_points(&rules.shear);
    let xs = |pts: &[(f64, f64)]| pts.iter().map(|p| p.0).collect::<Vec<_>>();
    let op_b = build_operator_matrix(mesh.nodes(), &xs(&bend_pts), &horizon, kind)?;
    let op_s = build_operator_matrix(mesh.nodes(), &xs(&shear_pts), &horizon, kind)?;

    let (ea, ei, kga) = (spec.e * spec.area(), spec.e * spec.second_moment(), spec.kappa_s * spec.shear_modulus() * spec.area());
    let axial_bending = EnergyTerm {
        material: vec![ea, 0.0, 0.0, ei],
        points: bend_pts
            .iter()
            .enumerate()
            .map(|(r, &(_, w))| IntegrationPoint {
                weight: w,
                strains: vec![shift_row(op_b.row(r), 0), shift_row(op_b.row(r), 2)],
            })
            .collect(),
    };
    let mut shear_points = Vec::with_capacity(shear_pts.len());
    for (r, &(x, w)) in shear_pts.iter().enumerate() {
        let mut gamma = shift_row(op_s.row(r), 1);
        for (n, v) in interpolation_row(mesh.nodes(), x)? {
            gamma.push((dof(n, 2), -v));
        }
        shear_points.push(IntegrationPoint { weight: w, strains: vec![gamma] });
    }
    let shear = EnergyTerm { material: vec![kga], points: shear_points };
    assemble_stiffness(mesh.n_nodes() * DOFS_PER_NODE, &[axial_bending, shear])
}

/// Load vector and essential constraints of a load case.
pub fn beam_loads(spec: &BeamSpec, load: &BeamLoadCase) -> Result<(Vec<f64>, Vec<(usize, f64)>)> {
    let mesh = spec.mesh()?;
    let n = mesh.n_nodes();
    let last = n - 1;
    let mut f = vec![0.0; n * DOFS_PER_NODE];
    let constraints = match *load {
        BeamLoadCase::CantileverTipLoad(p) => {
            if p == 0.0 {
                return Err(Error::InvalidArgument("load magnitude must be nonzero".into()));
            }
            f[dof(last, 1)] = p;
            vec![(dof(0, 0), 0.0), (dof(0, 1), 0.0), (dof(0, 2), 0.0)]
        }
        BeamLoadCase::SimplySupportedUdtl(q) => {
            if q == 0.0 {
                return Err(Error::InvalidArgument("load magnitude must be nonzero".into()));
            }
            for e in 0..mesh.n_elements() {
                let (a, b) = mesh.element(e);
                let half = 0.5 * q * (b - a);
                f[dof(e, 1)] += half;
                f[dof(e + 1, 1)] += half;
            }
            vec![(dof(0, 0), 0.0), (dof(0, 1), 0.0), (dof(last, 1), 0.0)]
        }
    };
    Ok((f, constraints))
}

/// Node at which the peak deflection is read.
pub fn peak_node(spec: &BeamSpec, load: &BeamLoadCase) -> Result<usize> {
    match load {
        BeamLoadCase::CantileverTipLoad(_) => Ok(spec.n_elements),
        BeamLoadCase::SimplySupportedUdtl(_) => {
            if spec.n_elements % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "simply-supported beam needs an even element count for a midspan node, got {}",
                    spec.n_elements
                )));
            }
            Ok(spec.n_elements / 2)
        }
    }
}

/// Constrained system ready to solve.
pub fn beam_system(spec: &BeamSpec, load: &BeamLoadCase, kind: &KernelKind, l_f: f64) -> Result<StiffnessSystem> {
    let k = beam_stiffness(spec, kind, l_f)?;
    let (f, constraints) = beam_loads(spec, load)?;
    let mut sys = StiffnessSystem::new(f.len(), k, f)?;
    sys.apply_dirichlet(&constraints)?;
    Ok(sys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSolution {
    pub dofs: BeamDofField,
    /// |w0| at the peak node.
    pub w_max: f64,
    pub relative_residual: f64,
}

pub fn solve_beam_field(spec: &BeamSpec, load: &BeamLoadCase, kind: &KernelKind, l_f: f64) -> Result<BeamSolution> {
    let node = peak_node(spec, load)?;
    let sol = beam_system(spec, load, kind, l_f)?.solve()?;
    let dofs = BeamDofField::from_vector(&sol.u);
    Ok(BeamSolution { w_max: dofs.w0[node].abs(), dofs, relative_residual: sol.relative_residual })
}

/// Peak deflections of the nonlocal and local beams on the same mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflectionRatio {
    pub w_nonlocal: f64,
    pub w_local: f64,
    pub w_bar: f64,
}

impl DeflectionRatio {
    pub fn new(w_nonlocal: f64, w_local: f64) -> Self {
        Self { w_nonlocal, w_local, w_bar: w_nonlocal / w_local }
    }
}

pub fn solve_beam(spec: &BeamSpec, load: &BeamLoadCase, kind: &KernelKind, l_f: f64) -> Result<DeflectionRatio> {
    let ctx = || format!("beam {} with {kind}, l_f = {l_f}", load.name());
    let nonlocal = solve_beam_field(spec, load, kind, l_f).map_err(|e| e.context(ctx()))?;
    let local = solve_beam_field(spec, load, &KernelKind::LocalDelta, l_f).map_err(|e| e.context(ctx()))?;
    Ok(DeflectionRatio::new(nonlocal.w_max, local.w_max))
}
