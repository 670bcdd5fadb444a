//! Decision and witness engine for commensurability and quasi-isometry of
//! free products of finitely generated abelian groups.
//!
//! The decision side is a normal-form computation: presentations are
//! canonicalized, classified by a coarse geometric invariant (finite,
//! two-ended, one-ended of a given rank, or infinitely many ends with the
//! set of ranks >= 2 as signature), and two groups are commensurable iff
//! quasi-isometric iff their classes agree.
//!
//! The witness side is constructive: for commensurable groups it produces
//! two chains of explicit finite covers, given as permutation monodromy,
//! ending at a common presentation. Chains serialize to a JSON certificate
//! that an independent verifier replays from scratch.
//!
//! Everything is exact (big integers and rationals, no floating point) and
//! deterministic: the same inputs produce byte-identical certificates.

pub mod action;
pub mod builders;
pub mod certificate;
pub mod gog;
pub mod group;
pub mod matrix;
pub mod parse;

pub use action::{CoverAction, FactorAction, StabilizerType, Violation};
pub use builders::{
    build_cyclic_cover, build_equalization, build_torsion_removal, build_witness,
    plan_equalization, BuildError, EqualizationPlan, WitnessChain,
};
pub use certificate::{
    step_to_cover, verify_certificate, verify_witness, Certificate, CertificateStep,
    CertificateSummary, FailureKind, Side, StepFactor, VerifyFailure, WitnessCertificate,
    WitnessSummary,
};
pub use gog::{
    build_gog_cover, embeddable, plan_cover, CoverPlan, CoveringGraph, GogCover, GogError,
    GraphOfGroupsSpec,
};
pub use group::{
    canonical_torsion, decide, AbelianFactor, Decision, GroupError, Presentation, QIClass,
    Rational,
};
pub use matrix::IntMatrix;
pub use parse::{format_group, parse_abelian, parse_group, ParseError};
