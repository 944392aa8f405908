//! Multi-block ADMM on square linear systems, with randomized update orders.
//!
//! The crate has three layers:
//!
//! * [`densenum`] — self-contained dense kernels: LU solves, a cyclic Jacobi
//!   eigensolver for symmetric matrices, and a Hessenberg + Francis-QR
//!   eigensolver for general real matrices.
//! * [`model`] + [`solvers`] — problem instances `Ax = b` split into blocks,
//!   and the iterative solvers: cyclic ADMM, randomly permuted ADMM (a fresh
//!   uniform permutation of the blocks every round), two independently
//!   randomized variants, and a gradient-descent baseline.
//! * [`spectral`] + [`bench`] — the update/expectation matrices behind the
//!   solvers (`L_sigma`, `M_sigma`, `Q`, `M`), numerical certification of
//!   their spectral properties (the eigenvalue map between `M` and `A Q A^T`,
//!   the `(0, 4/3)` eigenvalue bound, the block-permutation decomposition of
//!   `Q`), and a benchmark grid over random instance distributions.
//!
//! All randomness flows through [`rng`]: a seeded xoshiro256++ stream, so
//! every run, benchmark cell, and certification sweep is reproducible from a
//! single master seed.

pub mod bench;
pub mod densenum;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod spectral;

pub use densenum::{ComplexEigenvalue, Matrix, NumError};
pub use model::{BlockPartition, Dist, Permutation, ProblemInstance, RandomSpec};
pub use solvers::{Algo, RunOutcome, RunStatus, SolverConfig, SolverState};
