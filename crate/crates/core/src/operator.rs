//! The frame-invariant differ-integral derivative D̄ and its adjoint integral Ĩ.
//!
//! D̄ϕ(x) = c₋ ∫_{x-l₋}^{x} K ϕ'(x') dx' + c₊ ∫_{x}^{x+l₊} K ϕ'(x') dx'
//!
//! with `c∓ = 1 / (2 ∫₀^{l∓} K)`. Horizons are clipped to the domain and the
//! multipliers are recomputed from the clipped lengths at every point, so the
//! operator reproduces affine fields exactly everywhere, and at a boundary the
//! collapsed side contributes half the local derivative.
//!
//! The continuous form integrates against the kernel's mass coordinate
//! τ = ∫₀ˢ K, which absorbs the power-law singularity. The discrete form acts
//! on linear Lagrange interpolants, whose derivative is constant per element,
//! so each row is assembled from exact kernel masses over element overlaps.

use crate::error::{Error, Result};
use crate::kernels::{frame_multipliers, Kernel, Multiplier};
use crate::quadrature::AdaptiveIntegrator;

/// Nominal one-sided horizon along one axis, truncated by the domain bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonSpec {
    pub l_f: f64,
    pub min: f64,
    pub max: f64,
}

impl HorizonSpec {
    pub fn new(l_f: f64, min: f64, max: f64) -> Result<Self> {
        if !(l_f > 0.0) || !l_f.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon length must be positive, got {l_f}")));
        }
        if !(min < max) {
            return Err(Error::InvalidArgument(format!("empty domain [{min}, {max}]")));
        }
        Ok(Self { l_f, min, max })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Effective horizon lengths (l₋, l₊) at `x`.
    pub fn sides(&self, x: f64) -> Result<(f64, f64)> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain { x, min: self.min, max: self.max });
        }
        Ok((self.l_f.min(x - self.min), self.l_f.min(self.max - x)))
    }
}

/// A differentiable scalar field on a line.
pub trait Field1d {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;

    /// Positions where the derivative may jump; quadrature splits there.
    fn kinks(&self) -> &[f64] {
        &[]
    }
}

/// A field given by a value closure and a derivative closure.
pub struct FnField<F, D> {
    pub value: F,
    pub derivative: D,
    pub kinks: Vec<f64>,
}

impl<F, D> FnField<F, D>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    pub fn new(value: F, derivative: D) -> Self {
        Self { value, derivative, kinks: Vec::new() }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

impl<F, D> Field1d for FnField<F, D>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }
    fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

fn integrator() -> AdaptiveIntegrator {
    AdaptiveIntegrator::new(1e-15, 1e-13)
}

/// ∫₀^length K(s) g(s) ds, integrated in the mass coordinate. `breaks` are
/// distances in (0, length) where `g` may be discontinuous.
fn weighted_side_integral<K, G>(kernel: &K, length: f64, breaks: &[f64], g: G) -> Result<f64>
where
    K: Kernel + ?Sized,
    G: Fn(f64) -> f64,
{
    let mass = kernel.interval_integral(length)?;
    if mass == 0.0 {
        return Ok(0.0);
    }
    // Independent starting panels keep the bisection from accepting a
    // coincidental agreement of the two estimates.
    const PANELS: usize = 16;
    let mut cuts: Vec<f64> = (0..=PANELS).map(|i| mass * i as f64 / PANELS as f64).collect();
    for &d in breaks {
        if d > 0.0 && d < length {
            cuts.push(kernel.interval_integral(d)?);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let q = integrator();
    let f = |tau: f64| g(kernel.inverse_interval_integral(tau, length));
    Ok(cuts.windows(2).map(|w| q.integrate(&f, w[0], w[1])).sum())
}

fn distances_below(kinks: &[f64], x: f64) -> Vec<f64> {
    kinks.iter().map(|&k| x - k).collect()
}

fn distances_above(kinks: &[f64], x: f64) -> Vec<f64> {
    kinks.iter().map(|&k| k - x).collect()
}

/// D̄ϕ at `x` by quadrature of the defining integrals.
pub fn nonlocal_derivative<F, K>(field: &F, x: f64, horizon: &HorizonSpec, kernel: &K) -> Result<f64>
where
    F: Field1d + ?Sized,
    K: Kernel + ?Sized,
{
    let (l_minus, l_plus) = horizon.sides(x)?;
    if kernel.is_local() {
        return Ok(field.derivative(x));
    }
    let fm = frame_multipliers(kernel, l_minus, l_plus)?;
    let minus = match fm.c_minus {
        Multiplier::Collapsed => 0.5 * field.derivative(x),
        Multiplier::Scaled(c) => c * weighted_side_integral(kernel, l_minus, &distances_below(field.kinks(), x), |s| field.derivative(x - s))?,
    };
    let plus = match fm.c_plus {
        Multiplier::Collapsed => 0.5 * field.derivative(x),
        Multiplier::Scaled(c) => c * weighted_side_integral(kernel, l_plus, &distances_above(field.kinks(), x), |s| field.derivative(x + s))?,
    };
    Ok(minus + plus)
}

/// Limit of D̄ϕ at a boundary point `x0` as the truncated side shrinks to zero:
/// half the local derivative plus the surviving one-sided nonlocal term.
pub fn boundary_limit_value<F, K>(field: &F, x0: f64, horizon: &HorizonSpec, kernel: &K) -> Result<f64>
where
    F: Field1d + ?Sized,
    K: Kernel + ?Sized,
{
    let (l_minus, l_plus) = horizon.sides(x0)?;
    let local = 0.5 * field.derivative(x0);
    if kernel.is_local() && (l_minus == 0.0 || l_plus == 0.0) {
        return Ok(field.derivative(x0));
    }
    let surviving = if l_minus == 0.0 {
        let fm = frame_multipliers(kernel, 0.0, l_plus)?;
        let c = fm.c_plus.value().ok_or(Error::EmptyHorizon)?;
        c * weighted_side_integral(kernel, l_plus, &distances_above(field.kinks(), x0), |s| field.derivative(x0 + s))?
    } else if l_plus == 0.0 {
        let fm = frame_multipliers(kernel, l_minus, 0.0)?;
        let c = fm.c_minus.value().ok_or(Error::EmptyHorizon)?;
        c * weighted_side_integral(kernel, l_minus, &distances_below(field.kinks(), x0), |s| field.derivative(x0 - s))?
    } else {
        return Err(Error::NotOnBoundary(x0));
    };
    Ok(local + surviving)
}

/// Adjoint integral Ĩϕ at `x`:
///
/// Ĩϕ(x) = c₋ ∫_{x-l₊}^{x} K ϕ dx' + c₊ ∫_{x}^{x+l₋} K ϕ dx'
///
/// with the multipliers of `x` and the side lengths swapped. Integration
/// intervals are clipped to the domain; a collapsed side contributes ϕ(x)/2.
pub fn adjoint_integral<F, K>(field: &F, x: f64, horizon: &HorizonSpec, kernel: &K) -> Result<f64>
where
    F: Fn(f64) -> f64,
    K: Kernel + ?Sized,
{
    let (l_minus, l_plus) = horizon.sides(x)?;
    if kernel.is_local() {
        return Ok(field(x));
    }
    let fm = frame_multipliers(kernel, l_minus, l_plus)?;
    let left_len = l_plus.min(x - horizon.min);
    let right_len = l_minus.min(horizon.max - x);
    let left = match fm.c_minus {
        Multiplier::Collapsed => 0.5 * field(x),
        Multiplier::Scaled(c) => c * weighted_side_integral(kernel, left_len, &[], |s| field(x - s))?,
    };
    let right = match fm.c_plus {
        Multiplier::Collapsed => 0.5 * field(x),
        Multiplier::Scaled(c) => c * weighted_side_integral(kernel, right_len, &[], |s| field(x + s))?,
    };
    Ok(left + right)
}

/// Direction along which an operator differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Sparse map from nodal values to D̄ at evaluation points, stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalOperatorMatrix {
    pub axis: Axis,
    points: Vec<[f64; 2]>,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NonlocalOperatorMatrix {
    fn with_capacity(axis: Axis, n_cols: usize, rows: usize) -> Self {
        Self {
            axis,
            points: Vec::with_capacity(rows),
            n_cols,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    fn push_row(&mut self, point: [f64; 2], row: &[(usize, f64)]) {
        self.points.push(point);
        for &(c, v) in row {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.row_ptr.push(self.cols.len());
    }

    pub fn n_rows(&self) -> usize {
        self.points.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn point(&self, r: usize) -> [f64; 2] {
        self.points[r]
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Column indices and weights of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn apply_row(&self, r: usize, nodal: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * nodal[c]).sum()
    }

    pub fn apply(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(nodal.len(), self.n_cols, "nodal vector length mismatch");
        (0..self.n_rows()).map(|r| self.apply_row(r, nodal)).collect()
    }

    /// Index of the row evaluated at `point`, if any.
    pub fn find_row(&self, point: [f64; 2]) -> Option<usize> {
        self.points
            .iter()
            .position(|p| (p[0] - point[0]).abs() <= 1e-13 && (p[1] - point[1]).abs() <= 1e-13)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|r| {
                let mut dense = vec![0.0; self.n_cols];
                let (cols, vals) = self.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    dense[c] += v;
                }
                dense
            })
            .collect()
    }
}

/// Index of the element [nodes[e], nodes[e+1]] containing `x`. Points on an
/// interior node belong to the element on their right.
pub fn locate_element(nodes: &[f64], x: f64) -> Result<usize> {
    let n = nodes.len();
    if n < 2 {
        return Err(Error::InvalidArgument("mesh needs at least two nodes".into()));
    }
    if x < nodes[0] || x > nodes[n - 1] {
        return Err(Error::OutsideDomain { x, min: nodes[0], max: nodes[n - 1] });
    }
    let e = nodes.partition_point(|&node| node <= x);
    Ok(e.saturating_sub(1).min(n - 2))
}

/// Linear interpolation weights at `x`: [(node, weight); 2].
pub fn interpolation_row(nodes: &[f64], x: f64) -> Result<[(usize, f64); 2]> {
    let e = locate_element(nodes, x)?;
    let xi = (x - nodes[e]) / (nodes[e + 1] - nodes[e]);
    Ok([(e, 1.0 - xi), (e + 1, xi)])
}

fn local_row(nodes: &[f64], e: usize) -> Vec<(usize, f64)> {
    let h = nodes[e + 1] - nodes[e];
    vec![(e, -1.0 / h), (e + 1, 1.0 / h)]
}

/// Per-element weights of D̄ at `x`; they sum to one.
fn element_weights<K: Kernel + ?Sized>(
    nodes: &[f64],
    x: f64,
    horizon: &HorizonSpec,
    kernel: &K,
) -> Result<Vec<(usize, f64)>> {
    let e = locate_element(nodes, x)?;
    if kernel.is_local() {
        return Ok(vec![(e, 1.0)]);
    }
    let (l_minus, l_plus) = horizon.sides(x)?;
    if kernel.is_singular_at_origin() && horizon.l_f < nodes[e + 1] - nodes[e] {
        log::warn!(
            "horizon {} is shorter than the element at x = {x} for a singular kernel; using the local derivative",
            horizon.l_f
        );
        return Ok(vec![(e, 1.0)]);
    }
    let fm = frame_multipliers(kernel, l_minus, l_plus)?;
    let mut weights: Vec<(usize, f64)> = Vec::new();

    match fm.c_minus {
        Multiplier::Collapsed => weights.push((e, 0.5)),
        Multiplier::Scaled(c) => {
            let lo = x - l_minus;
            let mut k = e as isize;
            while k >= 0 {
                let ku = k as usize;
                let (a, b) = (nodes[ku], nodes[ku + 1]);
                if b <= lo {
                    break;
                }
                if a < x {
                    let near = x - b.min(x);
                    let far = x - a.max(lo);
                    let w = c * kernel.mass_between(near, far);
                    if w != 0.0 {
                        weights.push((ku, w));
                    }
                }
                k -= 1;
            }
        }
    }
    match fm.c_plus {
        Multiplier::Collapsed => {
            // Only at the upper bound, where `e` is the last element.
            weights.push((e, 0.5));
        }
        Multiplier::Scaled(c) => {
            let hi = x + l_plus;
            for (ku, pair) in nodes.windows(2).enumerate().skip(e) {
                let (a, b) = (pair[0], pair[1]);
                if a >= hi {
                    break;
                }
                if b > x {
                    let near = a.max(x) - x;
                    let far = b.min(hi) - x;
                    let w = c * kernel.mass_between(near, far);
                    if w != 0.0 {
                        weights.push((ku, w));
                    }
                }
            }
        }
    }
    Ok(weights)
}

/// Row of D̄ at `x` over the nodes of a linear Lagrange mesh.
pub fn operator_row<K: Kernel + ?Sized>(
    nodes: &[f64],
    x: f64,
    horizon: &HorizonSpec,
    kernel: &K,
) -> Result<Vec<(usize, f64)>> {
    let weights = element_weights(nodes, x, horizon, kernel)?;
    if weights.len() == 1 && weights[0].1 == 1.0 {
        return Ok(local_row(nodes, weights[0].0));
    }
    let mut per_element = vec![0.0; nodes.len() - 1];
    let mut lo = usize::MAX;
    let mut hi = 0;
    for (k, w) in weights {
        per_element[k] += w;
        lo = lo.min(k);
        hi = hi.max(k);
    }
    let mut row = Vec::with_capacity(hi - lo + 2);
    for node in lo..=hi + 1 {
        let mut coeff = 0.0;
        if node > lo {
            let k = node - 1;
            coeff += per_element[k] / (nodes[k + 1] - nodes[k]);
        }
        if node <= hi {
            coeff -= per_element[node] / (nodes[node + 1] - nodes[node]);
        }
        if coeff != 0.0 {
            row.push((node, coeff));
        }
    }
    Ok(row)
}

fn check_sorted(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("mesh nodes must be strictly increasing".into()));
    }
    Ok(())
}

/// D̄ at each of `quad_points` as a linear functional of nodal values on a
/// 1D linear Lagrange mesh.
pub fn build_operator_matrix<K: Kernel + ?Sized>(
    mesh_nodes: &[f64],
    quad_points: &[f64],
    horizon: &HorizonSpec,
    kernel: &K,
) -> Result<NonlocalOperatorMatrix> {
    check_sorted(mesh_nodes)?;
    let mut op = NonlocalOperatorMatrix::with_capacity(Axis::X, mesh_nodes.len(), quad_points.len());
    for &x in quad_points {
        let row = operator_row(mesh_nodes, x, horizon, kernel)?;
        op.push_row([x, 0.0], &row);
    }
    Ok(op)
}

/// D̄ along `axis` on a tensor-product bilinear mesh. Nodes are numbered
/// lexicographically with x fastest: `node = j * x_nodes.len() + i`.
///
/// Along the operator axis the bilinear interpolant restricted to the
/// evaluation line is piecewise linear, so each row is the 1D row along that
/// line combined with linear interpolation across it.
pub fn build_grid_operator<K: Kernel + ?Sized>(
    x_nodes: &[f64],
    y_nodes: &[f64],
    points: &[[f64; 2]],
    axis: Axis,
    horizon: &HorizonSpec,
    kernel: &K,
) -> Result<NonlocalOperatorMatrix> {
    check_sorted(x_nodes)?;
    check_sorted(y_nodes)?;
    let nx = x_nodes.len();
    let mut op = NonlocalOperatorMatrix::with_capacity(axis, nx * y_nodes.len(), points.len());
    // Rows along a line depend only on the along-axis coordinate; cache by bit pattern.
    let mut cache: std::collections::HashMap<u64, Vec<(usize, f64)>> = std::collections::HashMap::new();
    let mut row = Vec::new();
    for &p in points {
        let (along, across, along_nodes, across_nodes) = match axis {
            Axis::X => (p[0], p[1], x_nodes, y_nodes),
            Axis::Y => (p[1], p[0], y_nodes, x_nodes),
        };
        let line_row = match cache.get(&along.to_bits()) {
            Some(r) => r.clone(),
            None => {
                let r = operator_row(along_nodes, along, horizon, kernel)?;
                cache.insert(along.to_bits(), r.clone());
                r
            }
        };
        let interp = interpolation_row(across_nodes, across)?;
        row.clear();
        for &(t, wt) in &interp {
            if wt == 0.0 {
                continue;
            }
            for &(a, wa) in &line_row {
                let node = match axis {
                    Axis::X => t * nx + a,
                    Axis::Y => a * nx + t,
                };
                row.push((node, wa * wt));
            }
        }
        row.sort_by_key(|&(c, _)| c);
        op.push_row(p, &row);
    }
    Ok(op)
}
