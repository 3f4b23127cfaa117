//! Nonlocal attenuation kernels and the frame-invariance multipliers derived
//! from their one-sided interval integrals.
//!
//! A kernel is a monotonically decaying weight K(|x - x'|). The nonlocal
//! derivative scales each side of the horizon by `c = 1 / (2 ∫₀ˡ K)` so that a
//! rigid motion produces exactly its own gradient. Two families are shipped,
//! exponential and power-law, plus the `LocalDelta` limit that both reduce to.

use std::fmt;

use crate::error::{Error, Result};
use crate::special::gamma;

/// Exponential length scales at or below this are treated as the local limit.
pub const EXPONENTIAL_LOCAL_THRESHOLD: f64 = 1e-9;

/// Uniform interface for attenuation kernels, evaluated as functions of the
/// distance `r = |x - x'|`.
pub trait Kernel: fmt::Debug + Send + Sync {
    /// K at distance `r >= 0`.
    fn eval_distance(&self, r: f64) -> Result<f64>;

    /// ∫₀^length K(s) ds.
    fn interval_integral(&self, length: f64) -> Result<f64>;

    fn is_singular_at_origin(&self) -> bool;

    /// True for the Dirac-delta limit, where the operator is the classical derivative.
    fn is_local(&self) -> bool {
        false
    }

    /// ∫_near^far K(s) ds for `0 <= near <= far`.
    fn mass_between(&self, near: f64, far: f64) -> f64 {
        let hi = self.interval_integral(far).unwrap_or(f64::NAN);
        let lo = self.interval_integral(near).unwrap_or(f64::NAN);
        hi - lo
    }

    /// Distance `s` with ∫₀ˢ K = `mass`. The default bisects on `interval_integral`.
    fn inverse_interval_integral(&self, mass: f64, max_length: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, max_length);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.interval_integral(mid).unwrap_or(f64::NAN) < mass {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// The shipped kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// K = exp(-|x - x'| / l0).
    Exponential { l0: f64 },
    /// K = |x - x'|^(-alpha) / Γ(1 - alpha), 0 < alpha < 1.
    PowerLaw { alpha: f64 },
    /// Dirac-delta limit: the nonlocal derivative is the classical one.
    LocalDelta,
}

impl KernelKind {
    /// Exponential kernel; `l0 <= 1e-9` dispatches to [`KernelKind::LocalDelta`].
    pub fn exponential(l0: f64) -> Result<Self> {
        if !l0.is_finite() || l0 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "exponential kernel needs l0 > 0, got {l0}"
            )));
        }
        if l0 <= EXPONENTIAL_LOCAL_THRESHOLD {
            return Ok(KernelKind::LocalDelta);
        }
        Ok(KernelKind::Exponential { l0 })
    }

    /// Power-law kernel; `alpha = 1` dispatches to [`KernelKind::LocalDelta`].
    pub fn power_law(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "power-law kernel needs 0 < alpha <= 1, got {alpha}"
            )));
        }
        if alpha >= 1.0 - 1e-12 {
            return Ok(KernelKind::LocalDelta);
        }
        Ok(KernelKind::PowerLaw { alpha })
    }

    /// Short family name used in CSV output.
    pub fn family(&self) -> &'static str {
        match self {
            KernelKind::Exponential { .. } => "exponential",
            KernelKind::PowerLaw { .. } => "power_law",
            KernelKind::LocalDelta => "local",
        }
    }

    /// The family's scalar parameter (l0 or alpha).
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            KernelKind::Exponential { l0 } => Some(l0),
            KernelKind::PowerLaw { alpha } => Some(alpha),
            KernelKind::LocalDelta => None,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Exponential { l0 } => write!(f, "exponential(l0={l0})"),
            KernelKind::PowerLaw { alpha } => write!(f, "power_law(alpha={alpha})"),
            KernelKind::LocalDelta => write!(f, "local"),
        }
    }
}

fn check_length(length: f64) -> Result<()> {
    if length.is_nan() || length < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "interval length must be non-negative, got {length}"
        )));
    }
    Ok(())
}

impl Kernel for KernelKind {
    fn eval_distance(&self, r: f64) -> Result<f64> {
        let r = r.abs();
        match *self {
            KernelKind::Exponential { l0 } => Ok((-r / l0).exp()),
            KernelKind::PowerLaw { alpha } => {
                if r == 0.0 {
                    return Err(Error::SingularKernel);
                }
                Ok(r.powf(-alpha) / gamma(1.0 - alpha))
            }
            KernelKind::LocalDelta => {
                if r == 0.0 {
                    Err(Error::SingularKernel)
                } else {
                    Ok(0.0)
                }
            }
        }
    }

    fn interval_integral(&self, length: f64) -> Result<f64> {
        check_length(length)?;
        if length == 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            KernelKind::Exponential { l0 } => -l0 * (-length / l0).exp_m1(),
            KernelKind::PowerLaw { alpha } => length.powf(1.0 - alpha) / gamma(2.0 - alpha),
            // alpha -> 1 limit of the power-law form: unit mass at the origin.
            KernelKind::LocalDelta => 1.0,
        })
    }

    fn is_singular_at_origin(&self) -> bool {
        !matches!(self, KernelKind::Exponential { .. })
    }

    fn is_local(&self) -> bool {
        matches!(self, KernelKind::LocalDelta)
    }

    fn mass_between(&self, near: f64, far: f64) -> f64 {
        debug_assert!(near <= far);
        match *self {
            // e^{-near/l0}(1 - e^{-(far-near)/l0}) stays accurate both far from
            // the origin and for intervals much shorter than l0.
            KernelKind::Exponential { l0 } => -l0 * (-near / l0).exp() * (-(far - near) / l0).exp_m1(),
            KernelKind::PowerLaw { alpha } => {
                let p = 1.0 - alpha;
                (far.powf(p) - near.powf(p)) / gamma(2.0 - alpha)
            }
            KernelKind::LocalDelta => {
                if near == 0.0 && far > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn inverse_interval_integral(&self, mass: f64, max_length: f64) -> f64 {
        let s = match *self {
            KernelKind::Exponential { l0 } => -l0 * (-mass / l0).ln_1p(),
            KernelKind::PowerLaw { alpha } => (mass * gamma(2.0 - alpha)).powf(1.0 / (1.0 - alpha)),
            KernelKind::LocalDelta => 0.0,
        };
        s.clamp(0.0, max_length)
    }
}

/// K(x, x') for a kernel.
pub fn kernel_eval<K: Kernel + ?Sized>(kind: &K, x: f64, x_prime: f64) -> Result<f64> {
    kind.eval_distance(x - x_prime)
}

/// ∫₀^length K(s) ds in closed form.
pub fn kernel_interval_integral<K: Kernel + ?Sized>(kind: &K, length: f64) -> Result<f64> {
    kind.interval_integral(length)
}

/// Scaling of one side of the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    /// `c = 1 / (2 ∫₀ˡ K)` for a side of positive length.
    Scaled(f64),
    /// Zero-length side. In the limit it contributes half the local derivative.
    Collapsed,
}

impl Multiplier {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Multiplier::Scaled(c) => Some(c),
            Multiplier::Collapsed => None,
        }
    }
}

/// The pair (c₋*, c₊*) at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMultipliers {
    pub c_minus: Multiplier,
    pub c_plus: Multiplier,
}

fn side_multiplier<K: Kernel + ?Sized>(kind: &K, length: f64) -> Result<Multiplier> {
    if length == 0.0 {
        return Ok(Multiplier::Collapsed);
    }
    let mass = kind.interval_integral(length)?;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InadmissibleKernel(format!(
            "kernel integral over length {length} is {mass}"
        )));
    }
    Ok(Multiplier::Scaled(1.0 / (2.0 * mass)))
}

/// Frame-invariance multipliers for one-sided horizon lengths `l_minus`, `l_plus`.
pub fn frame_multipliers<K: Kernel + ?Sized>(
    kind: &K,
    l_minus: f64,
    l_plus: f64,
) -> Result<FrameMultipliers> {
    check_length(l_minus)?;
    check_length(l_plus)?;
    if l_minus == 0.0 && l_plus == 0.0 {
        return Err(Error::EmptyHorizon);
    }
    Ok(FrameMultipliers {
        c_minus: side_multiplier(kind, l_minus)?,
        c_plus: side_multiplier(kind, l_plus)?,
    })
}

/// Checks positivity and strict monotone decay of K on (0, length], sampled
/// on a geometric grid. Fourier positivity is not checked.
pub fn validate_admissible<K: Kernel + ?Sized>(kind: &K, length: f64) -> Result<()> {
    if kind.is_local() {
        return Ok(());
    }
    if !(length > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon length must be positive, got {length}")));
    }
    let samples = 64;
    let start = length * 1e-6;
    let ratio = (length / start).powf(1.0 / samples as f64);
    let mut r = start;
    let mut prev = kind.eval_distance(r)?;
    if !(prev > 0.0) {
        return Err(Error::InadmissibleKernel(format!("K({r}) = {prev} is not positive")));
    }
    for _ in 0..samples {
        r *= ratio;
        let k = kind.eval_distance(r)?;
        // Underflow to zero at large distances is still decay.
        if !(k >= 0.0) || (k >= prev && prev > 0.0) {
            return Err(Error::InadmissibleKernel(format!(
                "kernel does not decay monotonically near r = {r}"
            )));
        }
        prev = k;
    }
    Ok(())
}
