//! Structured 1D and tensor-product 2D meshes.

use crate::error::{Error, Result};
use crate::fem::gauss::GaussRule;

/// Nodes of a 1D mesh of linear elements, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMesh {
    nodes: Vec<f64>,
}

impl LineMesh {
    pub fn uniform(start: f64, end: f64, n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one element".into()));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid mesh interval [{start}, {end}]")));
        }
        let h = (end - start) / n_elements as f64;
        let mut nodes: Vec<f64> = (0..=n_elements).map(|i| start + h * i as f64).collect();
        nodes[n_elements] = end;
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// Physical Gauss points and weights (Jacobian included), element by element.
    pub fn gauss_points(&self, rule: &GaussRule) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_elements() * rule.len());
        for e in 0..self.n_elements() {
            let (a, b) = self.element(e);
            let half = 0.5 * (b - a);
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                out.push((0.5 * (a + b) + half * xi, w * half));
            }
        }
        out
    }
}

/// Tensor-product mesh of bilinear elements. Node (i, j) has index
/// `j * x.n_nodes() + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMesh {
    pub x: LineMesh,
    pub y: LineMesh,
}

impl GridMesh {
    pub fn uniform(length: f64, width: f64, nx: usize, ny: usize) -> Result<Self> {
        Ok(Self { x: LineMesh::uniform(0.0, length, nx)?, y: LineMesh::uniform(0.0, width, ny)? })
    }

    pub fn n_nodes(&self) -> usize {
        self.x.n_nodes() * self.y.n_nodes()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.x.n_nodes() + i
    }

    pub fn node_position(&self, node: usize) -> [f64; 2] {
        let nx = self.x.n_nodes();
        [self.x.nodes()[node % nx], self.y.nodes()[node / nx]]
    }

    /// Gauss points of every element with tensor-product weights, elements
    /// in lexicographic order.
    pub fn gauss_points(&self, rule: &GaussRule) -> Vec<([f64; 2], f64)> {
        let gx = self.x.gauss_points(rule);
        let gy = self.y.gauss_points(rule);
        let (nex, ney, n) = (self.x.n_elements(), self.y.n_elements(), rule.len());
        let mut out = Vec::with_capacity(gx.len() * gy.len());
        for ey in 0..ney {
            for ex in 0..nex {
                for &(y, wy) in &gy[ey * n..(ey + 1) * n] {
                    for &(x, wx) in &gx[ex * n..(ex + 1) * n] {
                        out.push(([x, y], wx * wy));
                    }
                }
            }
        }
        out
    }

    /// Node at the geometric center, when one exists.
    pub fn center_node(&self) -> Option<usize> {
        let (nx, ny) = (self.x.n_elements(), self.y.n_elements());
        (nx % 2 == 0 && ny % 2 == 0).then(|| self.node(nx / 2, ny / 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_line_mesh() {
        let m = LineMesh::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(LineMesh::uniform(0.0, 1.0, 0).is_err());
        assert!(LineMesh::uniform(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn gauss_weights_sum_to_measure() {
        let m = LineMesh::uniform(0.0, 2.0, 7).unwrap();
        let total: f64 = m.gauss_points(&GaussRule::new(2)).iter().map(|p| p.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let g = GridMesh::uniform(1.0, 3.0, 4, 6).unwrap();
        let area: f64 = g.gauss_points(&GaussRule::new(2)).iter().map(|p| p.1).sum();
        assert!((area - 3.0).abs() < 1e-13);
    }

    #[test]
    fn grid_numbering() {
        let g = GridMesh::uniform(1.0, 1.0, 4, 2).unwrap();
        assert_eq!(g.n_nodes(), 15);
        assert_eq!(g.node(2, 1), 7);
        assert_eq!(g.node_position(7), [0.5, 0.5]);
        assert_eq!(g.center_node(), Some(7));
        assert_eq!(GridMesh::uniform(1.0, 1.0, 3, 2).unwrap().center_node(), None);
    }
}
