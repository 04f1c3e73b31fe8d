use std::path::Path;

use super::{FloorPlan, MapError};

/// How to treat keys the map schema does not define.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    #[default]
    Strict,
    Lenient,
}

/// A validated map plus any unknown-key warnings collected in lenient mode.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub plan: FloorPlan,
    pub warnings: Vec<String>,
}

impl FloorPlan {
    pub fn from_json_str(text: &str, mode: LoadMode) -> Result<Loaded, MapError> {
        let mut unknown = Vec::new();
        let mut de = serde_json::Deserializer::from_str(text);
        let plan: FloorPlan = serde_ignored::deserialize(&mut de, |path| {
            unknown.push(path.to_string());
        })
        .map_err(|e| MapError::Json(e.to_string()))?;
        de.end().map_err(|e| MapError::Json(e.to_string()))?;

        if mode == LoadMode::Strict && !unknown.is_empty() {
            return Err(MapError::UnknownKeys(unknown));
        }
        plan.validate()?;
        let warnings = unknown
            .into_iter()
            .map(|k| format!("ignoring unknown key `{k}`"))
            .collect::<Vec<_>>();
        for w in &warnings {
            log::warn!("{}: {w}", plan.map_id);
        }
        Ok(Loaded { plan, warnings })
    }

    pub fn load(path: impl AsRef<Path>, mode: LoadMode) -> Result<Loaded, MapError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MapError::Json(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text, mode)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn unknown_keys_rejected_in_strict_mode_and_warned_in_lenient() {
        let mut value: serde_json::Value =
            serde_json::from_str(&fixtures::two_room().to_json_pretty()).unwrap();
        value["architect"] = "someone".into();
        value["rooms"][0]["color"] = "red".into();
        let text = value.to_string();

        match FloorPlan::from_json_str(&text, LoadMode::Strict) {
            Err(MapError::UnknownKeys(keys)) => {
                assert_eq!(keys, vec!["architect".to_string(), "rooms.0.color".to_string()]);
            }
            other => panic!("expected unknown-key error, got {other:?}"),
        }
        let loaded = FloorPlan::from_json_str(&text, LoadMode::Lenient).unwrap();
        assert_eq!(loaded.warnings.len(), 2);
        assert_eq!(loaded.plan, fixtures::two_room());
    }

    #[test]
    fn document_round_trips() {
        let plan = fixtures::original_map_1();
        let back = FloorPlan::from_json_str(&plan.to_json_pretty(), LoadMode::Strict).unwrap();
        assert_eq!(back.plan, plan);
        assert!(back.warnings.is_empty());
    }

    #[test]
    fn wire_shape_matches_documented_keys() {
        let v: serde_json::Value = serde_json::from_str(&fixtures::two_room().to_json_pretty()).unwrap();
        assert_eq!(v["rooms"][0]["rects"][0], serde_json::json!([0.0, 0.0, 10.0, 10.0]));
        assert_eq!(v["doors"][0]["rooms"], serde_json::json!(["A", "B"]));
        assert_eq!(v["doors"][0]["segment"], serde_json::json!([[10.5, 4.0], [10.5, 6.0]]));
        assert_eq!(v["labels"][0]["kind"], "center");
        assert!(v["doors"][0].get("open_by_default").is_none());
    }

    #[test]
    fn invalid_documents_report_the_offending_id() {
        let text = fixtures::two_room().to_json_pretty().replace("\"B\"", "\"A\"");
        let err = FloorPlan::from_json_str(&text, LoadMode::Strict).unwrap_err();
        assert_eq!(err, MapError::DuplicateId("A".into()));
        assert!(matches!(
            FloorPlan::from_json_str("{", LoadMode::Strict),
            Err(MapError::Json(_))
        ));
    }
}
