//! Serialized witness certificates and their independent verifier.
//!
//! Wire format (JSON, field order as declared):
//!
//! ```text
//! certificate = {"base": expr, "steps": [step], "final": expr}
//! step        = {"degree": uint, "factors": [factor], "result": expr}
//! factor      = {"index": uint, "perms": [[uint, ...], ...]}
//! witness     = {"left": certificate, "right": certificate}
//! ```
//!
//! Permutations are 0-based image arrays of length `degree`; a step lists
//! only factors that act nontrivially, all others act by the identity.
//! Factor indices refer to the canonical (normalized) order of the previous
//! step's result, which makes the normalization order part of the format.
//!
//! The verifier trusts nothing but the group model and the action engine's
//! primitives: it revalidates every step, reassembles the subgroup
//! presentation from orbits, stabilizers and the cycle rank, and compares
//! against the claims. It never calls the cover builders.

use serde::{Deserialize, Serialize};
use std::fmt;

use num::BigInt;

use crate::action::{CoverAction, FactorAction, Violation};
use crate::builders::WitnessChain;
use crate::group::{AbelianFactor, Presentation, QIClass, Rational};
use crate::parse::{format_group, parse_group, ParseError};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Certificate {
    pub base: String,
    pub steps: Vec<CertificateStep>,
    #[serde(rename = "final")]
    pub final_presentation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CertificateStep {
    pub degree: usize,
    pub factors: Vec<StepFactor>,
    pub result: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StepFactor {
    pub index: usize,
    pub perms: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct WitnessCertificate {
    pub left: Certificate,
    pub right: Certificate,
}

fn is_identity(p: &[usize]) -> bool {
    p.iter().enumerate().all(|(i, &v)| i == v)
}

impl Certificate {
    /// Serializes a witness chain; steps keep only nontrivially acting
    /// factors.
    pub fn from_chain(chain: &WitnessChain) -> Self {
        let steps = chain
            .steps
            .iter()
            .enumerate()
            .map(|(k, cover)| {
                let result = match chain.steps.get(k + 1) {
                    Some(next) => next.base.clone(),
                    None => chain.final_presentation.clone(),
                };
                CertificateStep {
                    degree: cover.degree,
                    factors: cover
                        .actions
                        .iter()
                        .enumerate()
                        .filter(|(_, a)| a.perms.iter().any(|p| !is_identity(p)))
                        .map(|(index, a)| StepFactor {
                            index,
                            perms: a.perms.clone(),
                        })
                        .collect(),
                    result: format_group(&result),
                }
            })
            .collect();
        Certificate {
            base: format_group(&chain.base),
            steps,
            final_presentation: format_group(&chain.final_presentation),
        }
    }
}

impl WitnessCertificate {
    pub fn from_chains(left: &WitnessChain, right: &WitnessChain) -> Self {
        WitnessCertificate {
            left: Certificate::from_chain(left),
            right: Certificate::from_chain(right),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

/// First failure encountered while checking a certificate; `step` is
/// 1-based for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyFailure {
    pub side: Option<Side>,
    pub step: Option<usize>,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureKind {
    MalformedExpression(ParseError),
    FactorIndexOutOfRange { index: usize, count: usize },
    DuplicateFactorIndex { index: usize },
    Action(Violation),
    ChiMismatch { expected: Rational, found: Rational },
    ResultMismatch { claimed: String, computed: String },
    FinalMismatch { claimed: String, computed: String },
    ClassMismatch { left: QIClass, right: QIClass },
    FinalsDiffer { left: String, right: String },
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(side) = self.side {
            write!(f, "{side}: ")?;
        }
        if let Some(step) = self.step {
            write!(f, "step {step}: ")?;
        }
        match &self.kind {
            FailureKind::MalformedExpression(e) => write!(f, "{e}"),
            FailureKind::FactorIndexOutOfRange { index, count } => write!(
                f,
                "factor index {index} out of range (presentation has {count} factors)"
            ),
            FailureKind::DuplicateFactorIndex { index } => {
                write!(f, "factor index {index} listed twice")
            }
            FailureKind::Action(v) => write!(f, "{v}"),
            FailureKind::ChiMismatch { expected, found } => write!(
                f,
                "chi mismatch: claimed result has chi {found}, expected {expected}"
            ),
            FailureKind::ResultMismatch { claimed, computed } => {
                write!(f, "presentation mismatch: claimed {claimed}, computed {computed}")
            }
            FailureKind::FinalMismatch { claimed, computed } => write!(
                f,
                "presentation mismatch at final: claimed {claimed}, computed {computed}"
            ),
            FailureKind::ClassMismatch { left, right } => {
                write!(f, "base classes differ: {left} vs {right}")
            }
            FailureKind::FinalsDiffer { left, right } => {
                write!(f, "finals differ: {left} vs {right}")
            }
        }
    }
}

impl std::error::Error for VerifyFailure {}

/// Successful verification summary of one certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateSummary {
    pub base: Presentation,
    pub final_presentation: Presentation,
    pub total_index: usize,
}

/// Successful verification summary of a witness pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSummary {
    pub final_presentation: Presentation,
    pub left_index: usize,
    pub right_index: usize,
}

/// Reconstructs the cover a step describes over `current`: listed factors
/// get their permutations, everything else acts trivially.
pub fn step_to_cover(
    current: &Presentation,
    step: &CertificateStep,
) -> Result<CoverAction, FailureKind> {
    let count = current.factor_count();
    let mut actions: Vec<FactorAction> = current
        .factors()
        .iter()
        .map(|f| FactorAction::identity(f.clone(), step.degree))
        .collect();
    let mut seen = vec![false; count];
    for sf in &step.factors {
        if sf.index >= count {
            return Err(FailureKind::FactorIndexOutOfRange {
                index: sf.index,
                count,
            });
        }
        if seen[sf.index] {
            return Err(FailureKind::DuplicateFactorIndex { index: sf.index });
        }
        seen[sf.index] = true;
        actions[sf.index].perms = sf.perms.clone();
    }
    Ok(CoverAction {
        base: current.clone(),
        degree: step.degree,
        actions,
    })
}

/// Independent reassembly of the subgroup presentation from the action
/// engine's primitives (orbits, stabilizer types, cycle rank).
fn recompute_subgroup(cover: &CoverAction) -> Presentation {
    let mut factors = Vec::new();
    for j in 0..cover.base.factor_count() {
        for orbit in cover.orbits(j) {
            factors.push(cover.stabilizer_type(j, &orbit).into_factor());
        }
    }
    for _ in 0..cover.free_rank() {
        factors.push(AbelianFactor::free(1));
    }
    Presentation::new(factors)
}

/// Replays a certificate step by step, recomputing everything.
pub fn verify_certificate(cert: &Certificate) -> Result<CertificateSummary, VerifyFailure> {
    let fail = |step: Option<usize>, kind: FailureKind| VerifyFailure {
        side: None,
        step,
        kind,
    };
    let base = parse_group(&cert.base)
        .map_err(|e| fail(None, FailureKind::MalformedExpression(e)))?;
    let mut current = base.clone();
    let mut total_index = 1usize;
    for (k, step) in cert.steps.iter().enumerate() {
        let stepno = Some(k + 1);
        let cover =
            step_to_cover(&current, step).map_err(|kind| fail(stepno, kind))?;
        cover
            .validate()
            .map_err(|v| fail(stepno, FailureKind::Action(v)))?;
        let computed = recompute_subgroup(&cover);
        let claimed = parse_group(&step.result)
            .map_err(|e| fail(stepno, FailureKind::MalformedExpression(e)))?;
        let expected_chi = current.chi() * Rational::from(BigInt::from(step.degree));
        if claimed.chi() != expected_chi {
            return Err(fail(
                stepno,
                FailureKind::ChiMismatch {
                    expected: expected_chi,
                    found: claimed.chi(),
                },
            ));
        }
        if claimed != computed {
            return Err(fail(
                stepno,
                FailureKind::ResultMismatch {
                    claimed: format_group(&claimed),
                    computed: format_group(&computed),
                },
            ));
        }
        current = computed;
        total_index = total_index
            .checked_mul(step.degree)
            .expect("certificate index overflows usize");
    }
    let claimed_final = parse_group(&cert.final_presentation)
        .map_err(|e| fail(None, FailureKind::MalformedExpression(e)))?;
    if claimed_final != current {
        return Err(fail(
            None,
            FailureKind::FinalMismatch {
                claimed: format_group(&claimed_final),
                computed: format_group(&current),
            },
        ));
    }
    Ok(CertificateSummary {
        base,
        final_presentation: current,
        total_index,
    })
}

/// Verifies both sides, checks the base classes agree and the finals are
/// equal; success means the two base groups have isomorphic subgroups of
/// the recorded indices.
pub fn verify_witness(witness: &WitnessCertificate) -> Result<WitnessSummary, VerifyFailure> {
    let tag = |side: Side| {
        move |mut e: VerifyFailure| {
            e.side = Some(side);
            e
        }
    };
    let left = verify_certificate(&witness.left).map_err(tag(Side::Left))?;
    let right = verify_certificate(&witness.right).map_err(tag(Side::Right))?;
    let (lc, rc) = (left.base.classify(), right.base.classify());
    if lc != rc {
        return Err(VerifyFailure {
            side: None,
            step: None,
            kind: FailureKind::ClassMismatch {
                left: lc,
                right: rc,
            },
        });
    }
    if left.final_presentation != right.final_presentation {
        return Err(VerifyFailure {
            side: None,
            step: None,
            kind: FailureKind::FinalsDiffer {
                left: format_group(&left.final_presentation),
                right: format_group(&right.final_presentation),
            },
        });
    }
    Ok(WitnessSummary {
        final_presentation: left.final_presentation,
        left_index: left.total_index,
        right_index: right.total_index,
    })
}
