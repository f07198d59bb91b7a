//! Quantitative invariants of area-preserving annulus diffeomorphisms and
//! the lattice combinatorics of the embedded contact homology of the lens
//! spaces L(p, p−1).
//!
//! The library computes, for a lifted annulus map ψ̃ with boundary
//! rotation numbers y₊, y₋ and flux F:
//!
//! - the action function f (df = ψ*β − β, f = y₊ + N on the outer
//!   boundary, with β = x dy/2π), the flux, the Calabi invariant, and
//!   total/mean actions of periodic orbits ([`action`]);
//! - grid-seeded Newton searches for periodic orbits and a witness check
//!   of the mean-action inequality ([`orbits`]);
//! - the mapping-torus contact form built from a blend profile η, with
//!   its contact, return-time, volume, and gluing checks ([`contact`]);
//! - the ECH grading and its lattice-count oracle, the sweep ordering of
//!   generators, knot filtrations, the N_k sequence, w(k), and the
//!   quadratic lower bound on N_{w(k)} ([`ech`]);
//! - the harmonic-mean bound, the hypothesis case classifier, and the
//!   disk-collapse criterion ([`bounds`]).

pub mod action;
pub mod bounds;
pub mod contact;
pub mod ech;
pub mod map;
pub mod mapspec;
pub mod orbits;
pub mod precision;
pub mod quad;

pub use action::{ActionContext, CorrectionField, OrbitRecord, QuadratureSettings};
pub use bounds::{
    disk_collapse_stats, harmonic_mean, hypothesis_classifier, penultimate_bound, MapInvariants,
};
pub use contact::{binding_rotation_numbers, build_eta, EtaProfile, MappingTorusForm};
pub use ech::{
    cz_elliptic, ech_index, ech_index_oracle, generators_by_index, knot_filtrations, n_sequence,
    nk_lower_bound_check, w_of_k, w_sequence, width, Generator, SlopeData,
};
pub use map::{check_admissibility, AnnulusPoint, BumpParams, LiftedMap, MapKind, Profile};
pub use mapspec::{MapSpec, MapSpecEntry};
pub use orbits::{find_periodic_orbits, verify_main_inequality, SearchConfig};
pub use precision::PrecisionMode;

/// Crate version string, echoed in every CLI record for reproducibility.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
