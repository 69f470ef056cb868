//! calabi-lab: a desk-scale laboratory for conformal minimal surfaces.

pub mod cantor;
pub mod cli;
pub mod complexgrid;
pub mod convexity;
pub mod labyrinth;
pub mod metric;
pub mod nadirashvili;
pub mod pipeline;
pub mod riemann_hilbert;
pub mod weierstrass;

pub type C64 = num_complex::Complex64;
