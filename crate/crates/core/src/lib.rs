//! Local iterated function systems and the fractal functions they generate.
//!
//! The crate is organised bottom-up:
//!
//! - [`local_ifs`]: partitions of `[0,1]`, affine maps, one-dimensional local
//!   IFSs, the set-valued operator on finite planar point sets, the Hausdorff
//!   metric and code-space addressing.
//! - [`rb`]: the discrete Read–Bajactarević operator on admissible grids, its
//!   factored form `f ↦ λ + U S E f`, fixed-point and direct solvers and block
//!   (local refinement) detection.
//! - [`interp`]: random, interpolating and Hermite fractal functions built on
//!   the paired-halving layout, plus convergence-order estimation.
//! - [`polyjet`]: Taylor jets of polynomials, the Hankel/Toeplitz jet algebra,
//!   fractels and the two-map polynomial IFS.
//! - [`collage`]: collage fitting of fractal functions against quadratic
//!   energy forms.
//! - [`srgrid`]: dyadic points, the binary shift and self-referential grids.
//! - [`subdiv`]: binary subdivision schemes induced by a two-map RB operator.
//! - [`qtt`]: the rank-2 quantized tensor-train form of two-map fractal
//!   functions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collage;
pub mod csvfmt;
pub mod interp;
pub mod local_ifs;
pub mod polyjet;
pub mod qtt;
pub mod rb;
pub mod srgrid;
pub mod subdiv;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
