//! Grids, nodal fields, finite differences, trapezoid quadrature and sparse solves.

pub mod field;
pub mod grid;
pub mod linsolve;
pub mod ops;

pub use field::Field2D;
pub use grid::{Axis, BoundaryLayerGrid, Grid, Orientation, PhysicalGrid};
pub use linsolve::{set_solver_threads, solve_linear, LinearSystem};
pub use ops::{cumulative, diff, integrate, Anchor, Region};
