//! Self-contained numerical primitives used by the solvers.

pub mod fd;
pub mod orth;
pub mod roots;
pub mod sym3;
pub mod trig;

pub use fd::{fd_directional, DEFAULT_FD_STEP};
pub use orth::{drift, gram_schmidt, reorthonormalize};
pub use roots::poly_roots;
pub use sym3::{sym3_eig, Sym3Eigen};
pub use trig::{dft_fit, trig_critical_points, TrigPoly};
