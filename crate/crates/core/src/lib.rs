//! vardescent-core: a symbolic engine for action densities that fail to glue
//! globally. Local Lagrangian data on a finite cover is assembled into a
//! total cocycle, the glued Euler-Lagrange source form and Cartan cochain are
//! extracted by a descent recursion, the universal conserved current is
//! built, and every identity along the way is verified as an exact symbolic
//! residual. A quadrature layer pairs the cocycle with a fundamental cycle to
//! evaluate the action numerically.

pub mod bicomplex;
pub mod cech;
pub mod cli_io;
pub mod context;
pub mod report;
pub mod symexpr;
#[doc(hidden)]
pub mod testkit;
pub mod theorem;
pub mod variational;
