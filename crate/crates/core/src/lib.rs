//! Variational quantum approximate spectral clustering on a statevector simulator.
//!
//! A parameterised circuit prepares `|ψ(θ)⟩` over `log2 N` qubits; its amplitudes
//! stand in for a vertex vector of a graph Laplacian. Minimising the Rayleigh
//! quotient plus a penalty on overlap with the uniform state drives `|ψ⟩` towards
//! the Fiedler vector, whose signs give a bipartition.

pub mod ansatz;
pub mod datasets;
pub mod error;
pub mod evalmetrics;
pub mod graph;
pub mod linalg;
pub mod optim;
pub mod simcore;
pub mod vqasc;
pub mod xpress;

pub use error::{Error, Result};
pub use num_complex::Complex64;
