//! Jet-valued frame tensor calculus for cohomogeneity-one Kähler models,
//! with closed-form oracles for an explicit solvable family and an audit of
//! curvature identities for pseudosymmetric Kähler manifolds.

// NaN must fail positivity checks, hence `!(x > 0.0)`; index loops mirror
// the component formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audit;
pub mod error;
pub mod family;
pub mod jet;
pub mod model;
pub mod pseudosym;
pub mod summary;
pub mod tensor;

pub use error::{Error, Result};
pub use family::{build_family, oracle_eval, Case, FamilyOracle, FamilyParams, HSpec, OracleValue, TableId};
pub use jet::{Jet, DEFAULT_ORDER, MAX_ORDER};
pub use model::{
    kaehler_certificates, ComplexStructure, FrameSpec, KaehlerCertificates, KaehlerPackage,
};
pub use pseudosym::{
    build_q, build_rh, derivation_action, projective_tensor, solve_structure_function,
    Classification, CurvatureLike, PseudosymVerdict,
};
pub use summary::{summarize, PointSummary};
pub use tensor::Tensor;
