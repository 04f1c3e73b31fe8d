//! Navigation plan grammar: actions, wire formats, and validation against a
//! connectivity graph.

mod claims;
mod mutate;
mod parse;
mod plan;
mod validate;

pub use claims::{grade_connectivity, parse_connectivity_claim, ClaimedEdge, ConnectivityClaim, ConnectivityGrade};
pub use mutate::{is_redundant_but_feasible, mutations, Mutation, MutationKind};
pub use parse::{
    parse_plan, parse_plan_json, parse_plan_lines, parse_response, parse_response_bytes, serialize_plan,
    ParseError, ParseErrorKind, PlanFormat,
};
pub use plan::{valid_target, Action, Plan, PlanError, Profile, Verb};
pub use validate::{validate_plan, validate_plan_with, DoorStates, Outcome, ValidateOptions, Verdict};
