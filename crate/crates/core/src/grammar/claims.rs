//! Door/room connections claimed by a model, and how well they match the map.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::floorplan::ConnectivityGraph;
use crate::ids;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimedEdge {
    pub door_id: String,
    pub rooms: [String; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityClaim {
    pub claimed_edges: Vec<ClaimedEdge>,
}

static CLAIM_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^[\s*\-]*(?:door\s+)?(D\d+[A-Za-z0-9_]*)\s*(?::|=|,|\s-\s|\s)\s*(?:connects\s+|between\s+)?(.+?)\s*(?:<->|↔|⟷|—|–|\s-\s|\bto\b|\band\b)\s*(.+?)[\s.;]*$",
    )
    .unwrap()
});

fn edge_from_value(v: &Value) -> Option<ClaimedEdge> {
    match v {
        Value::String(s) => parse_claim_line(s),
        Value::Object(map) => {
            let door = map.get("door").or_else(|| map.get("id"))?.as_str()?;
            let rooms = map.get("rooms")?.as_array()?;
            match rooms.as_slice() {
                [Value::String(a), Value::String(b)] => Some(ClaimedEdge {
                    door_id: door.trim().to_string(),
                    rooms: [a.trim().to_string(), b.trim().to_string()],
                }),
                _ => None,
            }
        }
        _ => None,
    }
}

fn parse_claim_line(line: &str) -> Option<ClaimedEdge> {
    let caps = CLAIM_LINE.captures(line.trim())?;
    Some(ClaimedEdge {
        door_id: caps[1].to_string(),
        rooms: [caps[2].trim().to_string(), caps[3].trim().to_string()],
    })
}

/// Reads claims from a `connections` JSON array (objects with `door` and
/// `rooms`, or strings) when present, else from prose lines such as
/// `D8: Terrasse Couverte - Hall` or `Door D8 connects Hall and Cuisine`.
pub fn parse_connectivity_claim(text: &str) -> ConnectivityClaim {
    for (start, _) in text.match_indices('{') {
        let value = serde_json::Deserializer::from_str(&text[start..])
            .into_iter::<Value>()
            .next()
            .and_then(Result::ok);
        if let Some(Value::Array(items)) = value.as_ref().and_then(|v| v.get("connections")) {
            return ConnectivityClaim {
                claimed_edges: items.iter().filter_map(edge_from_value).collect(),
            };
        }
    }
    ConnectivityClaim {
        claimed_edges: text.lines().filter_map(parse_claim_line).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityGrade {
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub claimed: usize,
    pub actual: usize,
}

/// A claim matches an edge when the door ids agree and the room pair agrees
/// in either order; each map edge can be matched once.
pub fn grade_connectivity(claim: &ConnectivityClaim, graph: &ConnectivityGraph) -> ConnectivityGrade {
    let mut used = vec![false; graph.edges.len()];
    let mut matched = 0;
    for c in &claim.claimed_edges {
        let key = ids::door_key(&c.door_id);
        let rooms: Option<Vec<&str>> = c.rooms.iter().map(|r| graph.resolve_room(r)).collect();
        let Some(mut rooms) = rooms else { continue };
        rooms.sort();
        let hit = graph.edges.iter().enumerate().position(|(i, e)| {
            let mut pair = [e.rooms[0].as_str(), e.rooms[1].as_str()];
            pair.sort();
            !used[i] && ids::door_key(&e.door_id) == key && pair[..] == rooms[..]
        });
        if let Some(i) = hit {
            used[i] = true;
            matched += 1;
        }
    }
    let claimed = claim.claimed_edges.len();
    let actual = graph.edges.len();
    let precision = if claimed == 0 { 1.0 } else { matched as f64 / claimed as f64 };
    let recall = if claimed == 0 || actual == 0 {
        0.0
    } else {
        matched as f64 / actual as f64
    };
    ConnectivityGrade {
        precision,
        recall,
        matched,
        claimed,
        actual,
    }
}
