use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The action vocabulary. `GoTo` only exists in the extended profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verb {
    ApproachDoor,
    OpenDoor,
    GoThrough,
    GoTo,
}

impl Verb {
    pub const ALL: [Verb; 4] = [Verb::ApproachDoor, Verb::OpenDoor, Verb::GoThrough, Verb::GoTo];

    pub fn name(self) -> &'static str {
        match self {
            Verb::ApproachDoor => "ApproachDoor",
            Verb::OpenDoor => "OpenDoor",
            Verb::GoThrough => "GoThrough",
            Verb::GoTo => "GoTo",
        }
    }

    /// Door verbs take a door id; `GoTo` takes a room id.
    pub fn targets_door(self) -> bool {
        !matches!(self, Verb::GoTo)
    }

    pub fn allowed_in(self, profile: Profile) -> bool {
        profile == Profile::Extended || self != Verb::GoTo
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Verb {
    type Err = ();

    /// Case-sensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verb::ALL.into_iter().find(|v| v.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub verb: Verb,
    pub target: String,
}

impl Action {
    pub fn new(verb: Verb, target: impl Into<String>) -> Self {
        Self {
            verb,
            target: target.into(),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.verb, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// ApproachDoor, OpenDoor and GoThrough only.
    #[default]
    Strict,
    /// Adds `GoTo(room)`.
    Extended,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("action {index}: GoTo is not part of the strict profile")]
    GoToInStrict { index: usize },
    #[error("action {index}: invalid target {target:?}")]
    BadTarget { index: usize, target: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<Action>,
    pub profile: Profile,
}

/// Targets must survive both wire formats: non-empty, trimmed, single-line,
/// and free of parentheses.
pub fn valid_target(target: &str) -> bool {
    !target.is_empty()
        && target.trim() == target
        && !target.contains(['(', ')', '\n', '\r'])
}

impl Plan {
    pub fn new(actions: Vec<Action>, profile: Profile) -> Result<Self, PlanError> {
        for (index, action) in actions.iter().enumerate() {
            if !action.verb.allowed_in(profile) {
                return Err(PlanError::GoToInStrict { index });
            }
            if !valid_target(&action.target) {
                return Err(PlanError::BadTarget {
                    index,
                    target: action.target.clone(),
                });
            }
        }
        Ok(Self { actions, profile })
    }

    pub fn empty(profile: Profile) -> Self {
        Self {
            actions: Vec::new(),
            profile,
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.actions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_profile_rejects_goto() {
        let actions = vec![Action::new(Verb::GoTo, "308")];
        assert_eq!(
            Plan::new(actions.clone(), Profile::Strict),
            Err(PlanError::GoToInStrict { index: 0 })
        );
        assert!(Plan::new(actions, Profile::Extended).is_ok());
    }

    #[test]
    fn targets_are_checked() {
        for bad in ["", " D1", "D(1)", "D1\n"] {
            assert!(Plan::new(vec![Action::new(Verb::OpenDoor, bad)], Profile::Strict).is_err());
        }
    }

    #[test]
    fn verb_parsing_is_case_sensitive() {
        assert_eq!("GoThrough".parse::<Verb>(), Ok(Verb::GoThrough));
        assert!("gothrough".parse::<Verb>().is_err());
    }
}
