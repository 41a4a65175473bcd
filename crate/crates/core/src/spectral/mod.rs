//! Discrete Dirichlet Laplacians and singular Schrödinger operators, their
//! low spectra, and numerical checks of the classical eigenvalue bounds.

mod eigen;
mod hardy;
mod lanczos;
pub mod linalg;
mod operator;
mod verify;

pub use eigen::{
    lowest_eigenpairs, lowest_eigenvalues, lowest_eigenvalues_with, EigenOptions, Eigenpairs,
    MethodChoice, SolverMethod, SpectrumResult, DEFAULT_SEED, DENSE_LIMIT,
};
pub use hardy::{hardy_probe, hardy_quotient, norm_equivalence, HardyProbe};
pub use operator::{
    assemble, singular_weight, Criticality, PotentialKind, SingularKind, SymmetricOperator,
};
pub use verify::{
    verify_li_yau, verify_melas, weyl_fit, LiYauReport, LiYauRow, MelasReport, MelasRow,
    RowStatus, WeylFit,
};

