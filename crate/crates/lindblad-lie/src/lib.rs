//! Lindblad dynamics of short chains of coupled lossy harmonic oscillators,
//! solved three independent ways and cross-checked:
//!
//! - [`oracle`]: direct adaptive integration of the master equation in
//!   Liouville space (the reference route),
//! - [`eigensolver`]: eigendecomposition of the Liouvillian through ladder
//!   superoperators built from the non-Hermitian mode matrix,
//! - [`weinorman`]: a Wei-Norman product of exponentials for two modes,
//!   valid also at exceptional points and for time-dependent parameters.
//!
//! [`fock`] and [`liouville`] provide the truncated state space and the
//! superoperator toolbox; [`structure`] analyses the Lie algebra generated
//! by the quadratic superoperators; [`cli`] exposes everything as a
//! command-line tool.

pub mod cli;
pub mod eigensolver;
pub mod fock;
pub mod linalg;
pub mod liouville;
pub mod ode;
pub mod oracle;
pub mod structure;
pub mod weinorman;

mod error;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

#[cfg(doctest)]
mod book {
    //! Every code block in the guide compiles and runs as a doctest.

    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(fock_space, "../../../book/src/fock-space.md");
    chapter!(liouville_space, "../../../book/src/liouville-space.md");
    chapter!(direct_integration, "../../../book/src/direct-integration.md");
    chapter!(eigendecomposition, "../../../book/src/eigendecomposition.md");
    chapter!(wei_norman, "../../../book/src/wei-norman.md");
    chapter!(algebra_structure, "../../../book/src/algebra-structure.md");
    chapter!(command_line, "../../../book/src/command-line.md");
}
