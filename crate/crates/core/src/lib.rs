//! A 2D granular-statics workbench.
//!
//! Dense pre-stressed disk packings are modeled as spring networks with
//! linearized impenetrability constraints. The resulting convex quadratic
//! program is solved with a primal active-set method, and the minimizer's
//! contact structure (broken / stuck / sheared edges, per-vertex active-edge
//! audit, order parameter) is analyzed afterwards.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`packing`] — disk packings, contact detection, oriented contact
//!    graphs, boundary conditions from per-group rigid displacements.
//! 2. [`netvalidate`] — geometric hypotheses on the contact graph:
//!    triangulation, sequential construction, boundary compatibility,
//!    cell-connectedness, and the spanning-subgraph rank certificate.
//! 3. [`rigidity`] — first-order rigidity matrix, interior/boundary
//!    partition, numerical rank and null spaces.
//! 4. [`qpsolve`] — the reduced quadratic program, generic pre-stress
//!    selection, active-set solver, KKT verification, brute-force oracle.
//! 5. [`analysis`] — contact classification at the minimizer, per-vertex
//!    active-edge audit, k-neighborhoods and the order parameter.
//!
//! All types are immutable after construction and all operations are pure
//! functions of their inputs; everything is safe to share across threads.

pub mod analysis;
pub mod geometry;
pub mod netvalidate;
pub mod packing;
pub mod qpsolve;
pub mod rigidity;

pub use analysis::{ContactKind, ContactState, TheoremAudit};
pub use packing::{BoundaryConditions, ContactGraph, Disk, Packing, RigidMotion};
pub use qpsolve::{PreStress, QpProblem, QpSolution, SolveStatus};
pub use rigidity::{EdgeMatrix, PartitionedSystem, RigidityMatrix};
