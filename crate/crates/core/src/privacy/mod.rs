//! Contextual privacy: protocol checks, inseparability, the corners scan,
//! synthesis with impossibility witnesses, and the brute-force oracle.

mod checks;
mod inseparability;
mod synthesis;

pub use checks::{
    check_nonbossy, check_protocol_cp, check_protocol_gcp, check_protocol_icp, corners_scan,
    corners_scan_on, cp_violations_within, BossyViolation, CornersViolation, CpVerdict,
    CpViolation, GcpVerdict, GcpViolation,
};
pub use inseparability::{
    directly_inseparable, inseparability_classes, inseparability_classes_of_set,
    InseparabilityPartition,
};
pub use synthesis::{
    minimize_witness, synthesize_on, synthesize_or_witness, witness_oracle, witness_verify,
    witness_verify_factors, OracleCaps, OracleOutcome, Synthesis,
};
