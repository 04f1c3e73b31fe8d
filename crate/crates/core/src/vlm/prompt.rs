//! Prompt templates and the rendered text + image payload sent to a model.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grammar::{Profile, Verb};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    #[default]
    Instructional,
    DraftPersona,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Instructional => "instructional",
            TemplateId::DraftPersona => "draft_persona",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageRef {
    Path(PathBuf),
    #[serde(with = "base64_bytes")]
    Png(Vec<u8>),
    None,
}

mod base64_bytes {
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD
            .decode(text)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub template_id: TemplateId,
    pub start_room: String,
    pub goal_room: String,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "default_true")]
    pub ask_connections: bool,
    pub image: ImageRef,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt field `{0}` is empty")]
    MissingValue(&'static str),
    #[error("start and goal are both `{0}`")]
    SameRoom(String),
    #[error("unsubstituted placeholder in rendered prompt: `{0}`")]
    Unsubstituted(String),
    #[error("cannot read image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Rendered prompt. `hash` covers the template id, the text and the image
/// bytes, so it does not depend on where the image file lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub template_id: TemplateId,
    pub text: String,
    #[serde(skip)]
    pub image_png: Vec<u8>,
    pub hash: String,
}

const DRAFT_PERSONA: &str = "I am a wheeled robot that cannot go through walls. This is the floor plan of the home I am in right now. Now you are a five-time world-champion navigation agent and your task is to tell me which ordered set of rooms I should pick for the task of: What actions should the robot take to go from the {start} to the {goal} without going through walls? Do NOT choose routes that goes through walls. Skip analysis and provide your answer at the end.";

pub fn verb_gloss(verb: Verb) -> &'static str {
    match verb {
        Verb::ApproachDoor => "Move in front of door x.",
        Verb::OpenDoor => "Open door x.",
        Verb::GoThrough => "Move through open door x to the location on the other side.",
        Verb::GoTo => "Move to room r. Room r must be the current room or share an open door with it.",
    }
}

fn action_definitions(profile: Profile) -> String {
    let mut out = String::new();
    for verb in Verb::ALL.iter().filter(|v| v.allowed_in(profile)) {
        let arg = if verb.targets_door() { "x" } else { "r" };
        writeln!(out, "- {}({arg}): {}", verb.name(), verb_gloss(*verb)).unwrap();
    }
    out
}

fn instructional(spec: &PromptSpec) -> String {
    let mut text = String::new();
    text.push_str("TASK\n");
    text.push_str(
        "The image is a floor plan with labeled rooms and doors. A robot is in the {start}. \
         Give the actions the robot should take to go from the {start} to the {goal}. \
         The robot cannot move through walls; it can only pass between rooms through doors.\n\n",
    );
    text.push_str("ACTIONS\n");
    text.push_str("Use only these actions. x is a door label as written in the image");
    if spec.profile == Profile::Extended {
        text.push_str(" and r is a room name");
    }
    text.push_str(".\n");
    text.push_str(&action_definitions(spec.profile));
    text.push('\n');
    text.push_str("DOORS\n");
    text.push_str(
        "Every door starts closed. To use door x, the robot must be in a room that door x belongs to. \
         Approach it with ApproachDoor(x), open it with OpenDoor(x), then pass with GoThrough(x). \
         After GoThrough(x) the robot is in the room on the other side of door x.\n\n",
    );
    if spec.ask_connections {
        text.push_str("CONNECTIONS\n");
        text.push_str(
            "Before planning, list every door in the floor plan together with the two rooms it connects.\n\n",
        );
    }
    text.push_str("OUTPUT\n");
    text.push_str("Answer with one JSON object and nothing after it, in this form:\n");
    if spec.ask_connections {
        text.push_str(
            r#"{"connections": [{"door": "D1", "rooms": ["Room A", "Room B"]}], "plan": [{"action": "ApproachDoor", "target": "D1"}, {"action": "OpenDoor", "target": "D1"}, {"action": "GoThrough", "target": "D1"}]}"#,
        );
    } else {
        text.push_str(
            r#"{"plan": [{"action": "ApproachDoor", "target": "D1"}, {"action": "OpenDoor", "target": "D1"}, {"action": "GoThrough", "target": "D1"}]}"#,
        );
    }
    text.push('\n');
    text
}

pub fn prompt_hash(template_id: TemplateId, text: &str, image: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(template_id.as_str().as_bytes());
    h.update([0]);
    h.update((text.len() as u64).to_le_bytes());
    h.update(text.as_bytes());
    h.update(image);
    hex::encode(h.finalize())
}

pub fn build_prompt(spec: &PromptSpec) -> Result<Prompt, PromptError> {
    let start = spec.start_room.trim();
    let goal = spec.goal_room.trim();
    if start.is_empty() {
        return Err(PromptError::MissingValue("start_room"));
    }
    if goal.is_empty() {
        return Err(PromptError::MissingValue("goal_room"));
    }
    if start == goal {
        return Err(PromptError::SameRoom(start.to_string()));
    }
    let template = match spec.template_id {
        TemplateId::Instructional => instructional(spec),
        TemplateId::DraftPersona => DRAFT_PERSONA.to_string(),
    };
    let text = template.replace("{start}", start).replace("{goal}", goal);
    for placeholder in ["{start}", "{goal}"] {
        if text.contains(placeholder) {
            return Err(PromptError::Unsubstituted(placeholder.to_string()));
        }
    }
    let image_png = match &spec.image {
        ImageRef::Path(path) => std::fs::read(path).map_err(|source| PromptError::Image {
            path: path.clone(),
            source,
        })?,
        ImageRef::Png(bytes) => bytes.clone(),
        ImageRef::None => Vec::new(),
    };
    Ok(Prompt {
        template_id: spec.template_id,
        hash: prompt_hash(spec.template_id, &text, &image_png),
        text,
        image_png,
    })
}
