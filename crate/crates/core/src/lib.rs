//! Functional models for row contractions on finite-dimensional Hilbert spaces.
//!
//! A row contraction `T = (T_1, …, T_d)` on `C^n` is classified (CNC, CCNC,
//! quasi-extreme), decomposed into isometric and pure parts, and assigned a
//! characteristic Schur-class function whose de Branges–Rovnyak kernel is
//! checked against explicit matrix computations.

pub mod acceptance;
pub mod ball;
pub mod classify;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod numlin;
pub mod par;
pub mod rowop;
pub mod schur;
pub mod frostman;
pub mod herglotz_lab;
pub mod model;

pub use ball::{BallPoint, MatrixBallPoint, Sampler};
pub use error::{Error, Result};
pub use numlin::{CMat, Subspace, Tol, C64};
pub use rowop::{IsoPureParts, RowContraction};
