//! Unitary lattice-gas model whose long-wavelength limit is the
//! free-particle Schroedinger equation in `d` dimensions.
//!
//! The crate splits into:
//! - [`algebra`]: model parameters, the single-site collision matrix and its
//!   exact spectral decomposition;
//! - [`continuum`]: the algebraic objects of the continuum (diffusive) limit
//!   and cross-checks against closed forms;
//! - [`engine`]: the stream-collide update on periodic lattices, plane-wave
//!   and wave-packet initial data, snapshot output;
//! - [`experiments`]: dispersion-relation measurements;
//! - [`many_body`]: second-quantized evolution on the occupation-number
//!   basis and the distinguishable two-particle tensor model.

pub mod algebra;
pub mod config;
pub mod continuum;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod many_body;

pub use algebra::{
    check_unitarity_identities, mass_from_mu, CollisionMatrix, ModelParams, UnitarityReport,
    VelocityBasis,
};
pub use continuum::{
    reference_matrices_2d, reference_matrices_3d, compute_b, effective_operator, solve_g, verify_reference,
    ReferenceReport, EffectiveOperator,
};
pub use engine::{
    delta_field, gaussian_packet, init_plane_wave, total_amplitude, write_psi_csv,
    write_snapshot_csv, PotentialField, Stepper, WaveField,
};
pub use error::{QlgaError, Result};
pub use experiments::{
    dispersion_sweep, dispersion_sweep_with_potential, measure_dispersion, overlap,
    write_dispersion_csv, DispersionRecord,
};
pub use many_body::{
    tensor_two_particle_step, FockLayout, ManyBodyState, PairPotentialU, SiteCollisionT,
    TwoParticleField,
};
