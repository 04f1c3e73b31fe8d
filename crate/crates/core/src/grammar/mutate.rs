//! Single-edit plan mutations, used to probe the correctness definition.

use serde::{Deserialize, Serialize};

use super::plan::{Plan, Verb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MutationKind {
    Delete { index: usize },
    /// Exchange actions `index` and `index + 1`.
    Swap { index: usize },
    Duplicate { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    pub kind: MutationKind,
    pub plan: Plan,
}

/// Every single deletion, adjacent swap and duplication of `plan`, in index
/// order. Swaps of two identical actions are skipped.
pub fn mutations(plan: &Plan) -> Vec<Mutation> {
    let n = plan.actions.len();
    let mut out = Vec::with_capacity(3 * n);
    for index in 0..n {
        let mut p = plan.clone();
        p.actions.remove(index);
        out.push(Mutation {
            kind: MutationKind::Delete { index },
            plan: p,
        });
    }
    for index in 0..n.saturating_sub(1) {
        if plan.actions[index] == plan.actions[index + 1] {
            continue;
        }
        let mut p = plan.clone();
        p.actions.swap(index, index + 1);
        out.push(Mutation {
            kind: MutationKind::Swap { index },
            plan: p,
        });
    }
    for index in 0..n {
        let mut p = plan.clone();
        p.actions.insert(index, plan.actions[index].clone());
        out.push(Mutation {
            kind: MutationKind::Duplicate { index },
            plan: p,
        });
    }
    out
}

/// Mutations of a correct plan that may legitimately stay correct: repeating
/// an approach or an open, and (outside pedantic mode) dropping an approach or
/// opening a door before approaching it.
pub fn is_redundant_but_feasible(original: &Plan, kind: MutationKind, pedantic: bool) -> bool {
    let verb = |i: usize| original.actions.get(i).map(|a| a.verb);
    match kind {
        MutationKind::Duplicate { index } => matches!(verb(index), Some(Verb::ApproachDoor | Verb::OpenDoor)),
        MutationKind::Delete { index } => !pedantic && verb(index) == Some(Verb::ApproachDoor),
        MutationKind::Swap { index } => {
            !pedantic
                && verb(index) == Some(Verb::ApproachDoor)
                && verb(index + 1) == Some(Verb::OpenDoor)
                && original.actions[index].target == original.actions[index + 1].target
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::floorplan::{build_connectivity, oracle_plan, NavTask};
    use crate::grammar::{validate_plan_with, DoorStates, ValidateOptions};

    #[test]
    fn counts_for_a_triple() {
        let g = build_connectivity(&fixtures::two_room()).unwrap();
        let t = NavTask::classified(&g, "A", "B").unwrap();
        let plan = oracle_plan(&g, &t).unwrap();
        let muts = mutations(&plan);
        assert_eq!(muts.len(), 3 + 2 + 3);
        assert!(muts.iter().all(|m| m.plan != plan));
    }

    #[test]
    fn surviving_mutations_are_whitelisted() {
        let g = build_connectivity(&fixtures::original_map_1()).unwrap();
        for start in &g.nodes {
            for goal in &g.nodes {
                let t = NavTask::classified(&g, start, goal).unwrap();
                let plan = oracle_plan(&g, &t).unwrap();
                for pedantic in [false, true] {
                    let options = ValidateOptions { pedantic };
                    for m in mutations(&plan) {
                        let v = validate_plan_with(&g, &t, &m.plan, &DoorStates::all_closed(), &options);
                        assert_eq!(
                            v.is_correct(),
                            is_redundant_but_feasible(&plan, m.kind, pedantic),
                            "{start} -> {goal} {:?} pedantic={pedantic}",
                            m.kind
                        );
                    }
                }
            }
        }
    }
}
