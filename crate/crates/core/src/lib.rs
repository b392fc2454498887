//! Spectral toolkit for normalized ground states of the 3D dipolar
//! Gross-Pitaevskii equation with attractive three-body interactions,
//!
//! ```text
//! -Δu + βu + λ1 |u|²u + λ2 (K*|u|²)u - |u|⁴u = 0,   ‖u‖₂² = c,
//! ```
//!
//! built around the constrained variational structure of the problem: the
//! mass sphere S(c), the virial manifold V(c) = {u ∈ S(c) : Q(u) = 0},
//! the mass-preserving dilation u^t(x) = t^{3/2} u(tx) and the level
//! γ(c) = inf { E(u) : u ∈ V(c) }.
//!
//! Module map:
//! - [`grid_spectral`]: periodic box, transforms, dipolar multiplier;
//! - [`functionals`]: mass, A, B, C, E, Q, the energy gradient, coupling
//!   regime classification;
//! - [`fibering`]: dilation, the fiber polynomial, projection onto V(c);
//! - [`trialstates`]: bubbles, anisotropic Gaussians, large-mass states;
//! - [`groundstate`]: projected normalized gradient flow, γ(c) sweeps,
//!   the Sobolev threshold;
//! - [`verify`]: self-check suites exposed through the CLI;
//! - [`io`]: run directories, manifests, CSV/JSON/binary output.

pub mod error;
pub mod fibering;
pub mod functionals;
pub mod grid_spectral;
pub mod groundstate;
pub mod io;
pub mod numerics;
pub mod trialstates;
pub mod verify;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
