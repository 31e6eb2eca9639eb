//! Exact formal group law and transferred Chern class computations for
//! Brown-Peterson theory and Morava K-theory.

pub mod cli;
pub mod coefficients;
pub mod fgl;
pub mod groups;
pub mod series;
pub mod symfun;
pub mod transfer;
