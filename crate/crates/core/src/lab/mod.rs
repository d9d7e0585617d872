//! Executable checks of the syzygy-existence results: the minimisation
//! behind the trace bound, the time bounds, rigidity of periodic orbits,
//! the comparison argument and the differential identities.

pub mod fd;
pub mod identities;
pub mod minf;
pub mod rigidity;
pub mod sturm;
pub mod theorems;

pub use identities::{trajectory_identity_checks, IdentityConfig, IdentityReport};
pub use minf::{minf_oracle, MinFConfig, MinFResult};
pub use rigidity::{
    find_theta, period_integral, theta_rigidity_check, verify_theorem2_periodic, Rigidity, RigidityCheck,
    RigidityConfig, Theorem2Config, Theorem2Outcome, Theorem2Report, ThetaVector,
};
pub use sturm::{sturm_diagnostic, SturmConfig, SturmReport};
pub use theorems::{verify_theorem1, verify_theorem3, LabConfig, Outcome, TheoremId, TheoremReport};
