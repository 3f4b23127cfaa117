//! Dispersion of plane waves in the unbounded 1D nonlocal solid
//! E·D̃D̄u = ρü, in closed form and from the discrete operator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelKind};
use crate::operator::{operator_row, HorizonSpec};

/// Minimum sampling accepted by [`numerical_dispersion`].
pub const MIN_POINTS_PER_WAVELENGTH: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material1D {
    pub e: f64,
    pub rho: f64,
}

impl Material1D {
    pub fn new(e: f64, rho: f64) -> Result<Self> {
        if !(e > 0.0 && e.is_finite()) || !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("material needs E > 0 and rho > 0, got E={e}, rho={rho}")));
        }
        Ok(Self { e, rho })
    }

    /// Squared local bar velocity E/ρ.
    pub fn wave_speed_sq(&self) -> f64 {
        self.e / self.rho
    }
}

/// Squared phase velocity at a wavenumber. The real part governs propagation,
/// the imaginary part attenuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub k: f64,
    pub phase_velocity_sq: Complex64,
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("wavenumber must be finite and non-negative, got {k}")));
    }
    Ok(())
}

/// (ω/k)² = (E/ρ) / (1 + k²l0²)².
pub fn dispersion_exponential(k: f64, mat: &Material1D, l0: f64) -> Result<DispersionPoint> {
    check_k(k)?;
    if !(l0 > 0.0) {
        return Err(Error::InvalidArgument(format!("l0 must be positive, got {l0}")));
    }
    let s = 1.0 + (k * l0).powi(2);
    Ok(DispersionPoint { k, phase_velocity_sq: Complex64::new(mat.wave_speed_sq() / (s * s), 0.0) })
}

/// (ω/k)² = (E/ρ)(cos(π+απ) + i sin(π+απ))(k l*)^{2(α−1)}.
///
/// At k = 0 with α < 1 the magnitude diverges and
/// [`Error::LongWaveDivergence`] is returned instead of a number.
pub fn dispersion_powerlaw(k: f64, mat: &Material1D, alpha: f64, l_star: f64) -> Result<DispersionPoint> {
    check_k(k)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(l_star > 0.0) {
        return Err(Error::InvalidArgument(format!("l_star must be positive, got {l_star}")));
    }
    if alpha == 1.0 {
        return Ok(DispersionPoint { k, phase_velocity_sq: Complex64::new(mat.wave_speed_sq(), 0.0) });
    }
    if k == 0.0 {
        return Err(Error::LongWaveDivergence);
    }
    let phase = PI + alpha * PI;
    let magnitude = mat.wave_speed_sq() * (k * l_star).powf(2.0 * (alpha - 1.0));
    Ok(DispersionPoint { k, phase_velocity_sq: Complex64::from_polar(magnitude, phase) })
}

/// Symbol of the composed operator: (D̃D̄u)(x₀)/u(x₀) for u = e^{ikx} sampled
/// on a uniform lattice of spacing `spacing`, with an untruncated horizon.
///
/// D̄ acts on the piecewise-linear interpolant and is evaluated at nodes;
/// D̃ = −D̄ᵀ is its weak-form adjoint. On a uniform lattice D̄ is shift
/// invariant, so D̄u at node j is (D̄u)₀·e^{ikjh}.
pub fn composed_operator_symbol<K: Kernel + ?Sized>(
    k: f64,
    kernel: &K,
    horizon_length: f64,
    spacing: f64,
) -> Result<Complex64> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {spacing}")));
    }
    let reach = if kernel.is_local() { 1 } else { (horizon_length / spacing).ceil() as usize + 1 };
    let nodes: Vec<f64> = (0..=2 * reach).map(|i| (i as f64 - reach as f64) * spacing).collect();
    let horizon = HorizonSpec::new(horizon_length, nodes[0], nodes[2 * reach])?;
    // Stencil a[m]: weight of node offset m in the row at the origin.
    let row = operator_row(&nodes, 0.0, &horizon, kernel)?;
    let stencil: Vec<(i64, f64)> = row.iter().map(|&(c, w)| (c as i64 - reach as i64, w)).collect();
    let sample = |m: i64| Complex64::from_polar(1.0, k * m as f64 * spacing);
    let v0: Complex64 = stencil.iter().map(|&(m, a)| sample(m) * a).sum();
    // (D̄ᵀv)₀ = Σ_j D̄[j, 0] v_j with D̄[j, 0] = a[-j].
    let transposed: Complex64 = stencil.iter().map(|&(m, a)| v0 * sample(-m) * a).sum();
    Ok(-transposed)
}

/// Phase velocity from the discrete operator on a lattice with
/// `points_per_wavelength` samples per wavelength 2π/k.
pub fn numerical_dispersion(
    k: f64,
    mat: &Material1D,
    kind: &KernelKind,
    horizon_length: f64,
    points_per_wavelength: usize,
) -> Result<DispersionPoint> {
    check_k(k)?;
    if k == 0.0 {
        return Err(Error::InvalidArgument("numerical dispersion needs k > 0".into()));
    }
    if points_per_wavelength < MIN_POINTS_PER_WAVELENGTH {
        return Err(Error::UnderResolved { got: points_per_wavelength, need: MIN_POINTS_PER_WAVELENGTH });
    }
    if let KernelKind::Exponential { l0 } = *kind {
        if horizon_length < 10.0 * l0 {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon_length} is shorter than 10 l0 = {}",
                10.0 * l0
            )));
        }
    }
    let spacing = 2.0 * PI / (k * points_per_wavelength as f64);
    let symbol = composed_operator_symbol(k, kind, horizon_length, spacing)?;
    // E D̃D̄u = ρü = −ρω²u.
    let vp2 = -mat.wave_speed_sq() * symbol / (k * k);
    Ok(DispersionPoint { k, phase_velocity_sq: vp2 })
}
