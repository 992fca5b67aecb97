//! Numerical model of a coupled three-mode squeezed vacuum: covariance
//! matrices, bipartite Gaussian steering with closed forms and a generic
//! symplectic route, steering monogamy and its residual, thermal-channel
//! decoherence with sudden-death times, photon-subtracted Wigner functions
//! with negativity quadrature, and an independent Fock-space oracle.
//!
//! The state is parametrized by a squeezing strength (or total mean photon
//! number), a splitting angle phi in [0, pi/2] dividing the squeezing
//! between the outer modes, and two phases.

pub mod acceptance;
pub mod cm;
pub mod config;
pub mod decoherence;
pub mod error;
pub mod fock;
pub mod quad;
pub mod scheme;
pub mod steering;
pub mod wigner;

pub use acceptance::{render_table, run_all, run_criterion, CheckLine, CriterionReport};
pub use cm::{c3msv_covariance, schur_complement, sub_cm, symplectic_eigenvalues, CovarianceMatrix, Partition};
pub use config::{mean_photon_numbers, MeanPhotonNumbers, SqueezingConfig};
pub use decoherence::{
    evolve_cm, evolve_cm_from, steering_vs_time, sudden_death_time, ChannelParams,
    SteeringTrajectory,
};
pub use error::{Error, Result};
pub use fock::{
    auto_cutoff, build_c3msv_fock, cm_from_fock, displaced_parity_kernel, moment_fock,
    moment_generating, negativity_oracle, subtract_and_reduce, wigner_from_density, FockState,
    OracleGrid, ReducedState, SingleModeState, TwoModeBlocks,
};
pub use quad::{gauss_legendre, negativity_quadrature, normalization, NegativityEstimate, QuadratureSpec};
pub use scheme::SubtractionScheme;
pub use steering::{
    gaussian_steering, monogamy_deficits, residual_gaussian_steering, steering_closed_form,
    steering_table, DeficitFamily, MonogamyDeficits, RgsResult, SteeringCase, SteeringResult,
};
pub use wigner::{
    negativity, negativity_phi_scan, wigner_c3msv, wigner_closed_form, GaussPolyWigner, Poly,
    ScanRow,
};
