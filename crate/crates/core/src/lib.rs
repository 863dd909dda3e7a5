//! Rate-distortion-equivocation solvers for utility-privacy tradeoffs in
//! discrete memoryless databases.

pub mod error;
pub mod prob;
pub mod rd;
pub mod rde;
pub mod sanitize;
pub mod source;
pub mod successive;

pub use error::{Error, Result};
pub use prob::{
    attach_channel, binary_entropy, conditional_entropy, entropy, marginalize, mutual_information, Alphabet,
    Channel, JointPmf,
};
pub use rd::{distortion_bounds, rate_distortion, rd_curve, DistortionMatrix, RdPoint, RdSolver};
pub use rde::{
    brute_force_rde, dispatch_special_case, gamma_of_d, rate_de, tradeoff_region, AuxChannelSolution, CaseTag,
    EncoderInputs, RdeOutcome, SolveStats, SolverConfig, TradeoffPoint, Verified,
};
pub use source::{
    estimate_empirical, ingest_csv, load_spec, AttributeRoles, Database, DistortionMeasure, ModelDocument,
    PrivacySpec, SourceSpec, UtilityConstraint, UtilityFunction, UtilitySpec,
};
pub use successive::{check_successive, disclosure_rates, StagePlan};
pub use sanitize::{audit, sanitize, synthesize_channel, AuditReport, SanitizationPlan};
