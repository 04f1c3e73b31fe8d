//! Identifier normalization shared by map loading, plan validation and
//! connectivity grading.
//!
//! Rules, applied in order:
//! 1. trim leading/trailing whitespace;
//! 2. collapse internal whitespace runs to one space;
//! 3. lowercase;
//! 4. for door references, drop a leading `door` word (`"Door D8"` -> `"d8"`);
//!    for room references, drop a leading `room` word (`"Room 308"` -> `"308"`).

/// Case- and whitespace-insensitive key for any identifier.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn strip_word<'a>(key: &'a str, word: &str) -> &'a str {
    match key.strip_prefix(word) {
        Some(rest) if rest.starts_with(' ') && rest.len() > 1 => &rest[1..],
        _ => key,
    }
}

pub fn door_key(s: &str) -> String {
    let key = normalize(s);
    strip_word(&key, "door").to_string()
}

pub fn room_key(s: &str) -> String {
    let key = normalize(s);
    strip_word(&key, "room").to_string()
}

/// Numeric part of a conventional `D<number>` door id, ignoring any suffix
/// (`"D8_1"` -> 8).
pub fn door_number(id: &str) -> Option<u64> {
    let rest = id.strip_prefix('D').or_else(|| id.strip_prefix('d'))?;
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize("  Chambre\t 1 "), "chambre 1");
        assert_eq!(door_key("Door D8"), "d8");
        assert_eq!(door_key(" d8"), "d8");
        assert_eq!(door_key("Door"), "door");
        assert_eq!(room_key("Room 308"), "308");
        assert_eq!(room_key("Roomy Hall"), "roomy hall");
    }

    #[test]
    fn door_numbers() {
        assert_eq!(door_number("D10"), Some(10));
        assert_eq!(door_number("D8_1"), Some(8));
        assert_eq!(door_number("N09"), None);
        assert_eq!(door_number("D"), None);
    }
}
