//! Finite-element laboratory for `-Lap u = f(u)` with Robin boundary
//! conditions on smooth planar domains.

pub mod assembly;
pub mod critpoints;
pub mod geometry;
pub mod lab;
pub mod linalg;
pub mod mesh;
pub mod solvers;
pub mod stability;

pub use assembly::{Field, FieldError, Nonlinearity};
pub use critpoints::{CritCensus, CritError, CriticalPoint, Kind};
pub use geometry::{make_domain, BoundaryCurve, DomainFamily, DomainSpec, GeometryError};
pub use linalg::{CsrMatrix, LinalgError};
pub use mesh::{triangulate, Mesh, MeshError};
pub use solvers::{Boundary, Problem, Reaction, SolveError, SolverOptions};
pub use stability::{BmmpReport, StabilityReport};
