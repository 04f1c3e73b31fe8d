//! Plan wire formats.
//!
//! JSON: `{"plan": [{"action": "ApproachDoor", "target": "D8"}, ...]}`, or a
//! bare array of `"Verb(Target)"` strings. Elements of either wrapper may use
//! either element form. Surrounding prose is skipped by taking the first
//! balanced JSON object with a top-level `plan` key (a bare array is only used
//! when no such object exists).
//!
//! Lines: one `Verb(Target)` per non-empty line, whitespace-tolerant, with an
//! optional list marker (`-`, `*`, `1.`, `1)`). Verbs are case-sensitive.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::plan::{valid_target, Action, Plan, PlanError, Profile, Verb};
use super::validate::Outcome;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "verb")]
pub enum ParseErrorKind {
    /// No JSON value with a plan was found.
    NoPlan,
    Syntax,
    /// Well-formed action whose verb is not in the grammar.
    UnknownVerb(String),
    GoToInStrict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the input where the offending value starts.
    pub offset: Option<usize>,
    /// 1-based line number (line format only).
    pub line: Option<usize>,
    /// 0-based action index, when the failure is tied to one action.
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        } else if let Some(offset) = self.offset {
            write!(f, "byte {offset}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl ParseError {
    fn new(kind: ParseErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            offset: None,
            line: None,
            index: None,
            message: message.into(),
        }
    }

    fn at_offset(mut self, offset: usize) -> Self {
        self.offset = Some(offset);
        self
    }

    fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }

    fn at_index(mut self, index: usize) -> Self {
        self.index = Some(index);
        self
    }

    /// Verdict outcome for a response that failed to parse. Undefined verbs
    /// violate the "only defined actions" rule; everything else is malformed.
    pub fn outcome(&self) -> Outcome {
        match self.kind {
            ParseErrorKind::UnknownVerb(_) => Outcome::UnknownAction,
            _ => Outcome::Malformed,
        }
    }
}

fn build(verb: &str, target: &str, profile: Profile, index: usize) -> Result<Action, ParseError> {
    let Ok(verb) = verb.parse::<Verb>() else {
        return Err(ParseError::new(
            ParseErrorKind::UnknownVerb(verb.to_string()),
            format!("undefined action `{verb}`"),
        )
        .at_index(index));
    };
    if !verb.allowed_in(profile) {
        return Err(ParseError::new(
            ParseErrorKind::GoToInStrict,
            "GoTo is only defined in the extended profile",
        )
        .at_index(index));
    }
    let target = target.trim();
    if !valid_target(target) {
        return Err(ParseError::new(ParseErrorKind::Syntax, format!("invalid target {target:?}")).at_index(index));
    }
    Ok(Action::new(verb, target))
}

fn finish(actions: Vec<Action>, profile: Profile) -> Result<Plan, ParseError> {
    Plan::new(actions, profile).map_err(|e| match e {
        PlanError::GoToInStrict { index } => {
            ParseError::new(ParseErrorKind::GoToInStrict, e.to_string()).at_index(index)
        }
        PlanError::BadTarget { index, .. } => ParseError::new(ParseErrorKind::Syntax, e.to_string()).at_index(index),
    })
}

static CALL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:(?:[-*]|\d+[.)])\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*([^()]*?)\s*\)$").unwrap()
});

/// Splits `Verb(Target)` into its parts without checking the verb.
fn split_call(text: &str) -> Option<(&str, &str)> {
    let caps = CALL.captures(text.trim())?;
    Some((caps.get(1)?.as_str(), caps.get(2)?.as_str()))
}

pub fn parse_plan_lines(text: &str, profile: Profile) -> Result<Plan, ParseError> {
    let mut actions = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let index = actions.len();
        let Some((verb, target)) = split_call(line) else {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                format!("expected `Verb(Target)`, found {:?}", line.trim()),
            )
            .at_line(n + 1)
            .at_index(index));
        };
        actions.push(build(verb, target, profile, index).map_err(|e| e.at_line(n + 1))?);
    }
    finish(actions, profile)
}

fn element_to_action(value: &Value, profile: Profile, index: usize) -> Result<Action, ParseError> {
    match value {
        Value::String(s) => match split_call(s) {
            Some((verb, target)) => build(verb, target, profile, index),
            None => Err(ParseError::new(
                ParseErrorKind::Syntax,
                format!("plan element {index}: expected `Verb(Target)`, found {s:?}"),
            )
            .at_index(index)),
        },
        Value::Object(map) => {
            let verb = map.get("action").and_then(Value::as_str);
            let target = match map.get("target") {
                Some(Value::String(s)) => Some(s.clone()),
                Some(Value::Number(n)) => Some(n.to_string()),
                _ => None,
            };
            match (verb, target) {
                (Some(verb), Some(target)) => build(verb, &target, profile, index),
                _ => Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    format!("plan element {index}: expected string `action` and `target`"),
                )
                .at_index(index)),
            }
        }
        _ => Err(ParseError::new(
            ParseErrorKind::Syntax,
            format!("plan element {index}: expected an object or a string"),
        )
        .at_index(index)),
    }
}

fn parse_elements(items: &[Value], profile: Profile, offset: usize) -> Result<Plan, ParseError> {
    let actions = items
        .iter()
        .enumerate()
        .map(|(i, v)| element_to_action(v, profile, i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.at_offset(offset))?;
    finish(actions, profile).map_err(|e| e.at_offset(offset))
}

/// First complete JSON value starting at byte `start`, ignoring what follows.
fn value_at(text: &str, start: usize) -> Option<Value> {
    serde_json::Deserializer::from_str(&text[start..])
        .into_iter::<Value>()
        .next()
        .and_then(Result::ok)
}

fn starts(text: &str, open: u8) -> impl Iterator<Item = usize> + '_ {
    text.bytes()
        .enumerate()
        .filter(move |&(_, b)| b == open)
        .map(|(i, _)| i)
}

pub fn parse_plan_json(text: &str, profile: Profile) -> Result<Plan, ParseError> {
    for start in starts(text, b'{') {
        let Some(Value::Object(map)) = value_at(text, start) else {
            continue;
        };
        let Some(plan) = map.get("plan") else {
            continue;
        };
        return match plan {
            Value::Array(items) => parse_elements(items, profile, start),
            _ => Err(ParseError::new(ParseErrorKind::Syntax, "`plan` must be an array").at_offset(start)),
        };
    }
    for start in starts(text, b'[') {
        if let Some(Value::Array(items)) = value_at(text, start) {
            if items.iter().all(Value::is_string) {
                return parse_elements(&items, profile, start);
            }
        }
    }
    Err(ParseError::new(ParseErrorKind::NoPlan, "no JSON plan found").at_offset(0))
}

/// Parses a model response: JSON when a JSON plan is present, otherwise lines.
pub fn parse_response(text: &str, profile: Profile) -> Result<Plan, ParseError> {
    match parse_plan_json(text, profile) {
        Err(e) if e.kind == ParseErrorKind::NoPlan => parse_plan_lines(text, profile),
        other => other,
    }
}

/// Byte-level entry point; invalid UTF-8 is replaced before parsing.
pub fn parse_response_bytes(bytes: &[u8], profile: Profile) -> Result<Plan, ParseError> {
    parse_response(&String::from_utf8_lossy(bytes), profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanFormat {
    #[default]
    Json,
    Lines,
}

#[derive(Serialize)]
struct JsonAction<'a> {
    action: &'a str,
    target: &'a str,
}

#[derive(Serialize)]
struct JsonPlan<'a> {
    plan: Vec<JsonAction<'a>>,
}

/// Compact JSON (`{"plan":[...]}`) or newline-separated `Verb(Target)` lines.
pub fn serialize_plan(plan: &Plan, format: PlanFormat) -> String {
    match format {
        PlanFormat::Json => {
            let doc = JsonPlan {
                plan: plan
                    .actions
                    .iter()
                    .map(|a| JsonAction {
                        action: a.verb.name(),
                        target: &a.target,
                    })
                    .collect(),
            };
            serde_json::to_string(&doc).expect("plan serializes")
        }
        PlanFormat::Lines => plan
            .actions
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

pub fn parse_plan(text: &str, format: PlanFormat, profile: Profile) -> Result<Plan, ParseError> {
    match format {
        PlanFormat::Json => parse_plan_json(text, profile),
        PlanFormat::Lines => parse_plan_lines(text, profile),
    }
}
