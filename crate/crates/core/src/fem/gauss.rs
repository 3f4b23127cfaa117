//! Gauss–Legendre rules on the reference element [-1, 1].

use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let g = GaussLegendre::new(n);
        Self { points: g.points, weights: g.weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Separate rules for the bending/membrane and transverse-shear energies.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementRules {
    pub bending: GaussRule,
    pub shear: GaussRule,
}

impl ElementRules {
    /// Two-point bending, one-point shear: exact bending energy for linear
    /// elements in the local limit, and no shear locking.
    pub fn reduced() -> Self {
        Self { bending: GaussRule::new(2), shear: GaussRule::new(1) }
    }
}
