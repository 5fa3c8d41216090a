//! Steady-state power flow and N-1 contingency analysis for MVDC aircraft
//! distribution networks.

pub mod ac;
pub mod admittance;
pub mod contingency;
pub mod dc;
pub mod fixtures;
pub mod netmodel;
pub mod report;

pub use ac::{solve_newton_raphson, AcConfig, AcOptions, AcSolution, AcStudy};
pub use admittance::{build_partition, kcl_residual, AdmittancePartition};
pub use contingency::{enumerate_cases, run_study, ContingencyCase, ContingencyKind, StudyReport};
pub use dc::{solve, solve_network, DcFlow, DcSolution, DcSolver, SolveOptions};
pub use netmodel::{
    builtin_architecture1, load_network, load_network_file, Network, NetworkError, Scenario,
};
pub use report::{ac_report, dc_report, study_report, ReportDocument};
