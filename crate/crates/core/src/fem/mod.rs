//! Structured meshes, Gauss rules, nonlocal stiffness assembly and the
//! constrained direct solve.

pub mod assembly;
pub mod gauss;
pub mod mesh;
pub mod system;

pub use assembly::{assemble_stiffness, EnergyTerm, IntegrationPoint, SparseRow};
pub use gauss::{ElementRules, GaussRule};
pub use mesh::{GridMesh, LineMesh};
pub use system::{Solution, StiffnessSystem};
