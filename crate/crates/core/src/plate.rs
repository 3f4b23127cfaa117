//! Nonlocal Mindlin plate on 4-node bilinear elements.
//!
//! Node DOFs are [u0, v0, w0, θx, θy]. D̄_x acts along lines of constant y and
//! D̄_y along lines of constant x, each with its own truncated horizon.

use crate::beam::DeflectionRatio;
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, ElementRules, EnergyTerm, GridMesh, IntegrationPoint, StiffnessSystem};
use crate::kernels::{validate_admissible, KernelKind};
use crate::operator::{build_grid_operator, interpolation_row, Axis, HorizonSpec, NonlocalOperatorMatrix};

pub const DOFS_PER_NODE: usize = 5;
const U: usize = 0;
const V: usize = 1;
const W: usize = 2;
const TX: usize = 3;
const TY: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct PlateSpec {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub e: f64,
    pub nu: f64,
    pub kappa_s: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for PlateSpec {
    fn default() -> Self {
        Self { length: 1.0, width: 1.0, thickness: 0.1, e: 30e9, nu: 0.3, kappa_s: 5.0 / 6.0, nx: 24, ny: 24 }
    }
}

impl PlateSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [("length", self.length), ("width", self.width), ("thickness", self.thickness), ("E", self.e)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("plate {name} must be positive, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(Error::InvalidArgument(format!("Poisson ratio must lie in [0, 0.5), got {}", self.nu)));
        }
        if !(self.kappa_s > 0.0) || self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidArgument("plate needs kappa_s > 0 and at least one element per side".into()));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    pub fn mesh(&self) -> Result<GridMesh> {
        GridMesh::uniform(self.length, self.width, self.nx, self.ny)
    }

    /// Plane-stress constitutive matrix, row-major 3 × 3.
    pub fn plane_stress(&self) -> [f64; 9] {
        let c = self.e / (1.0 - self.nu * self.nu);
        [c, c * self.nu, 0.0, c * self.nu, c, 0.0, 0.0, 0.0, c * (1.0 - self.nu) / 2.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateBc {
    /// All five DOFs fixed on every edge.
    Clamped,
    /// v0 = w0 = θy = 0 on x = 0, L; u0 = w0 = θx = 0 on y = 0, B.
    SimplySupported,
}

impl PlateBc {
    pub fn name(&self) -> &'static str {
        match self {
            PlateBc::Clamped => "clamped",
            PlateBc::SimplySupported => "simply_supported",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateDofField {
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub w0: Vec<f64>,
    pub theta_x: Vec<f64>,
    pub theta_y: Vec<f64>,
}

impl PlateDofField {
    pub fn from_vector(u: &[f64]) -> Self {
        let pick = |k: usize| u.iter().skip(k).step_by(DOFS_PER_NODE).copied().collect();
        Self { u0: pick(U), v0: pick(V), w0: pick(W), theta_x: pick(TX), theta_y: pick(TY) }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.u0.len() * DOFS_PER_NODE);
        for i in 0..self.u0.len() {
            out.extend([self.u0[i], self.v0[i], self.w0[i], self.theta_x[i], self.theta_y[i]]);
        }
        out
    }
}

fn dof(node: usize, k: usize) -> usize {
    node * DOFS_PER_NODE + k
}

fn bilinear_row(mesh: &GridMesh, p: [f64; 2]) -> Result<Vec<(usize, f64)>> {
    let ix = interpolation_row(mesh.x.nodes(), p[0])?;
    let iy = interpolation_row(mesh.y.nodes(), p[1])?;
    let mut row = Vec::with_capacity(4);
    for &(j, wy) in &iy {
        for &(i, wx) in &ix {
            if wx * wy != 0.0 {
                row.push((mesh.node(i, j), wx * wy));
            }
        }
    }
    Ok(row)
}

/// [ε_xx, ε_yy, γ_xy, γ_xz, γ_yz] at an evaluation point shared by both operators.
pub fn plate_strains(
    dofs: &PlateDofField,
    mesh: &GridMesh,
    op_x: &NonlocalOperatorMatrix,
    op_y: &NonlocalOperatorMatrix,
    x: f64,
    y: f64,
    z: f64,
) -> Result<[f64; 5]> {
    let rx = op_x.find_row([x, y]).ok_or(Error::UnknownEvaluationPoint(x))?;
    let ry = op_y.find_row([x, y]).ok_or(Error::UnknownEvaluationPoint(y))?;
    let interp = bilinear_row(mesh, [x, y])?;
    let at = |f: &[f64]| interp.iter().map(|&(n, w)| w * f[n]).sum::<f64>();
    let dx = |f: &[f64]| op_x.apply_row(rx, f);
    let dy = |f: &[f64]| op_y.apply_row(ry, f);
    Ok([
        dx(&dofs.u0) - z * dx(&dofs.theta_x),
        dy(&dofs.v0) - z * dy(&dofs.theta_y),
        dy(&dofs.u0) + dx(&dofs.v0) - z * (dy(&dofs.theta_x) + dx(&dofs.theta_y)),
        dx(&dofs.w0) - at(&dofs.theta_x),
        dy(&dofs.w0) - at(&dofs.theta_y),
    ])
}

fn shift_row(row: (&[usize], &[f64]), k: usize) -> Vec<(usize, f64)> {
    row.0.iter().zip(row.1).map(|(&n, &v)| (dof(n, k), v)).collect()
}

fn concat(mut a: Vec<(usize, f64)>, b: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    a.extend(b);
    a
}

/// Unconstrained stiffness matrix, row-major.
pub fn plate_stiffness(spec: &PlateSpec, kind: &KernelKind, l_f: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    validate_admissible(kind, spec.length.max(spec.width))?;
    let mesh = spec.mesh()?;
    let hx = HorizonSpec::new(l_f, 0.0, spec.length)?;
    let hy = HorizonSpec::new(l_f, 0.0, spec.width)?;
    let rules = ElementRules::reduced();
    let bend = mesh.gauss_points(&rules.bending);
    let shear = mesh.gauss_points(&rules.shear);
    let pts = |g: &[([f64; 2], f64)]| g.iter().map(|p| p.0).collect::<Vec<_>>();
    let (xn, yn) = (mesh.x.nodes(), mesh.y.nodes());
    let bx = build_grid_operator(xn, yn, &pts(&bend), Axis::X, &hx, kind)?;
    let by = build_grid_operator(xn, yn, &pts(&bend), Axis::Y, &hy, kind)?;
    let sx = build_grid_operator(xn, yn, &pts(&shear), Axis::X, &hx, kind)?;
    let sy = build_grid_operator(xn, yn, &pts(&shear), Axis::Y, &hy, kind)?;

    let q = spec.plane_stress();
    let h = spec.thickness;
    let membrane = q.iter().map(|c| c * h).collect();
    let bending = q.iter().map(|c| c * h.powi(3) / 12.0).collect();
    let kgh = spec.kappa_s * spec.shear_modulus() * h;

    let mut m_pts = Vec::with_capacity(bend.len());
    let mut b_pts = Vec::with_capacity(bend.len());
    for (r, &(_, w)) in bend.iter().enumerate() {
        let (rx, ry) = (bx.row(r), by.row(r));
        m_pts.push(IntegrationPoint {
            weight: w,
            strains: vec![shift_row(rx, U), shift_row(ry, V), concat(shift_row(ry, U), shift_row(rx, V))],
        });
        b_pts.push(IntegrationPoint {
            weight: w,
            strains: vec![shift_row(rx, TX), shift_row(ry, TY), concat(shift_row(ry, TX), shift_row(rx, TY))],
        });
    }
    let mut s_pts = Vec::with_capacity(shear.len());
    for (r, &(p, w)) in shear.iter().enumerate() {
        let interp = bilinear_row(&mesh, p)?;
        let mut gxz = shift_row(sx.row(r), W);
        let mut gyz = shift_row(sy.row(r), W);
        for &(n, v) in &interp {
            gxz.push((dof(n, TX), -v));
            gyz.push((dof(n, TY), -v));
        }
        s_pts.push(IntegrationPoint { weight: w, strains: vec![gxz, gyz] });
    }
    let terms = [
        EnergyTerm { material: membrane, points: m_pts },
        EnergyTerm { material: bending, points: b_pts },
        EnergyTerm { material: vec![kgh, 0.0, 0.0, kgh], points: s_pts },
    ];
    assemble_stiffness(mesh.n_nodes() * DOFS_PER_NODE, &terms)
}

/// Consistent load vector of a uniform transverse pressure and the
/// constraints of a boundary-condition set.
pub fn plate_loads(spec: &PlateSpec, bc: PlateBc, q: f64) -> Result<(Vec<f64>, Vec<(usize, f64)>)> {
    if q == 0.0 {
        return Err(Error::InvalidArgument("load magnitude must be nonzero".into()));
    }
    let mesh = spec.mesh()?;
    let (nx, ny) = (mesh.x.n_nodes(), mesh.y.n_nodes());
    let mut f = vec![0.0; mesh.n_nodes() * DOFS_PER_NODE];
    for ey in 0..mesh.y.n_elements() {
        let (y0, y1) = mesh.y.element(ey);
        for ex in 0..mesh.x.n_elements() {
            let (x0, x1) = mesh.x.element(ex);
            let share = q * (x1 - x0) * (y1 - y0) / 4.0;
            for (i, j) in [(ex, ey), (ex + 1, ey), (ex, ey + 1), (ex + 1, ey + 1)] {
                f[dof(mesh.node(i, j), W)] += share;
            }
        }
    }
    let mut constraints = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let node = mesh.node(i, j);
            let on_x_edge = i == 0 || i == nx - 1;
            let on_y_edge = j == 0 || j == ny - 1;
            let fixed: &[usize] = match bc {
                PlateBc::Clamped if on_x_edge || on_y_edge => &[U, V, W, TX, TY],
                PlateBc::SimplySupported if on_x_edge && on_y_edge => &[U, V, W, TX, TY],
                PlateBc::SimplySupported if on_x_edge => &[V, W, TY],
                PlateBc::SimplySupported if on_y_edge => &[U, W, TX],
                _ => &[],
            };
            constraints.extend(fixed.iter().map(|&k| (dof(node, k), 0.0)));
        }
    }
    Ok((f, constraints))
}

pub fn plate_system(spec: &PlateSpec, bc: PlateBc, q: f64, kind: &KernelKind, l_f: f64) -> Result<StiffnessSystem> {
    let k = plate_stiffness(spec, kind, l_f)?;
    let (f, constraints) = plate_loads(spec, bc, q)?;
    let mut sys = StiffnessSystem::new(f.len(), k, f)?;
    sys.apply_dirichlet(&constraints)?;
    Ok(sys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateSolution {
    pub dofs: PlateDofField,
    /// |w0| at the center node.
    pub w_center: f64,
    pub relative_residual: f64,
}

pub fn solve_plate_field(spec: &PlateSpec, bc: PlateBc, q: f64, kind: &KernelKind, l_f: f64) -> Result<PlateSolution> {
    let mesh = spec.mesh()?;
    let center = mesh.center_node().ok_or_else(|| {
        Error::InvalidArgument(format!("plate needs even element counts for a center node, got {}x{}", spec.nx, spec.ny))
    })?;
    let sol = plate_system(spec, bc, q, kind, l_f)?.solve()?;
    let dofs = PlateDofField::from_vector(&sol.u);
    Ok(PlateSolution { w_center: dofs.w0[center].abs(), dofs, relative_residual: sol.relative_residual })
}

pub fn solve_plate(spec: &PlateSpec, bc: PlateBc, q: f64, kind: &KernelKind, l_f: f64) -> Result<DeflectionRatio> {
    let ctx = || format!("plate {} with {kind}, l_f = {l_f}", bc.name());
    let nonlocal = solve_plate_field(spec, bc, q, kind, l_f).map_err(|e| e.context(ctx()))?;
    let local = solve_plate_field(spec, bc, q, &KernelKind::LocalDelta, l_f).map_err(|e| e.context(ctx()))?;
    Ok(DeflectionRatio::new(nonlocal.w_center, local.w_center))
}
