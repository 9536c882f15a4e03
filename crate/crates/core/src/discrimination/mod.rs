//! Unambiguous discrimination: POVM construction, feasibility and
//! Born-rule evaluation.

mod feasibility;
mod povm;
mod report;
mod symmetric;

pub use feasibility::{
    params_from_probe, probe_from_params, probe_search, probe_search_with, support,
    ud_feasibility, FeasibilityJson, ProbeParams, ProbeSearch, ProbeSearchResult, SupportAnalysis, SUPPORT_TOL,
};
pub use povm::{PovmJson, PovmSet, POVM_TOL};
pub use report::{
    evaluate_povm, herald_permutation, heralded_povm, output_states, uniform_priors, DiscriminationReport,
    Outcome, ReportJson,
};
pub use symmetric::{
    build_symmetric_povm, max_common_scale, reciprocal_states, symmetric_states,
    symmetric_ud_bound, SymmetricBound, GRAM_TOL,
};
pub(crate) use symmetric::symmetric_amplitude;
