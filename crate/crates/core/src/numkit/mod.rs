//! Shared scalar and vector numerics.

mod fd;
mod linalg;
mod mollifier;
mod quad;
mod shell;
mod special;

pub use fd::{fd_gradient, fd_hessian, fd_jacobian_sym};
pub use linalg::{cholesky, dot, norm, norm2, opnorm_sym, spectral_range, sym_from_fn, SymMatrix};
pub use mollifier::{mollify, mollify_d1, mollify_d2, q_mol, q_mol_d1, q_mol_d2};
pub use quad::{integrate, QuadResult};
pub(crate) use quad::gk15_nodes;
pub use shell::{shell_grad, shell_hess, shell_value, RadialShell, ShellMode};
pub use special::{log_ball_volume, log_sphere_area, log_sum_exp, LogSumExp};

/// A point of the state space.
pub type Point = Vec<f64>;
