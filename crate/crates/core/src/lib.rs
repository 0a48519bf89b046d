//! Spectral and scattering computations on metric quantum graphs.
//!
//! A quantum graph is a metric graph (positive edge lengths) carrying the
//! one-dimensional Laplacian with self-adjoint vertex conditions. This crate
//! builds the vertex scattering matrices, the bond evolution maps in both
//! factor orderings, and everything derived from them:
//!
//! - the secular determinant det(1 - U(k)) and its positive real zeros
//!   (the spectrum), with multiplicities and eigenvectors,
//! - transmission/reflection amplitudes and the exact scattering Green's
//!   function for two-lead open graphs, via the family-of-paths linear
//!   system, with star-graph closed forms and a truncated path-sum as
//!   independent cross-checks,
//! - periodic-orbit enumeration, trace powers, the spectral counting
//!   function, and the density of states,
//! - unitary-similarity verification of the two evolution maps through
//!   eigenvalue matching and word traces.

pub mod error;
pub mod evolution;
pub mod graph;
pub mod linalg;
pub mod scattering;
pub mod similarity;
pub mod spectrum;
pub mod trace;
pub mod vertex;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
pub use evolution::{
    build_bond_scattering, build_propagator, evolution_map, secular_determinant,
    BondScatteringMatrix, Convention, EdgePropagator, EvolutionMap,
};
pub use graph::{Bond, BondBasis, DiscreteGraph, Leads, MetricGraph};
pub use scattering::{
    brute_force_transmission, greens_function, solve_families, star_gf_oracle,
    star_s3_secular_oracle, star_transmission_oracle, BruteForceTransmission, PathFamilySystem,
    ScatteringResult, UnitsConvention,
};
pub use similarity::{
    eigen_match, enumerate_words, specht_bound, specht_check, EigenMatchReport, SimilarityReport,
    Verdict, Word,
};
pub use spectrum::{eigenvectors_at, find_spectrum, vertex_bc_residual, ScanConfig, SpectralPoint};
pub use trace::{
    counting_function, density_of_states, enumerate_orbits, orbit_sum, trace_power, PeriodicOrbit,
    SpectralFunctions,
};
pub use vertex::{
    lead_augmented_sigma, sigma_of_k, verify_sigma_relations, ChannelLabel, GeneralCondition,
    ScatteringMatrix, SigmaRelationReport, VertexCondition,
};
