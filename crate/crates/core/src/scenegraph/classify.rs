use log::warn;

use crate::language::{Context, LlmBackend, LlmRequest, Message, Purpose};

pub const ROOM_VOCABULARY: [&str; 10] = [
    "kitchen",
    "living room",
    "bedroom",
    "bathroom",
    "dining room",
    "corridor",
    "garage",
    "garden/outdoor",
    "shop",
    "room",
];

pub const FALLBACK_ROOM: &str = "room";

/// Keyword → (room, score). A category matches a keyword when it equals it or
/// contains it as an underscore-separated token.
const KEYWORDS: &[(&str, &str, u32)] = &[
    ("fridge", "kitchen", 3),
    ("refrigerator", "kitchen", 3),
    ("oven", "kitchen", 3),
    ("stove", "kitchen", 3),
    ("microwave", "kitchen", 2),
    ("dishwasher", "kitchen", 2),
    ("counter", "kitchen", 1),
    ("sink", "kitchen", 1),
    ("sink", "bathroom", 1),
    ("toilet", "bathroom", 3),
    ("bathtub", "bathroom", 3),
    ("shower", "bathroom", 3),
    ("towel", "bathroom", 1),
    ("bed", "bedroom", 3),
    ("wardrobe", "bedroom", 2),
    ("nightstand", "bedroom", 2),
    ("dresser", "bedroom", 2),
    ("sofa", "living room", 3),
    ("couch", "living room", 3),
    ("tv", "living room", 2),
    ("television", "living room", 2),
    ("armchair", "living room", 2),
    ("coffee_table", "living room", 2),
    ("carpet", "living room", 1),
    ("dining_table", "dining room", 3),
    ("chair", "dining room", 1),
    ("car", "garage", 3),
    ("workbench", "garage", 3),
    ("driveway", "garage", 1),
    ("tree", "garden/outdoor", 3),
    ("lawn", "garden/outdoor", 3),
    ("bush", "garden/outdoor", 2),
    ("flower", "garden/outdoor", 2),
    ("pool", "garden/outdoor", 2),
    ("ashcan", "garden/outdoor", 1),
    ("fence", "garden/outdoor", 1),
    ("cash_register", "shop", 3),
    ("checkout", "shop", 3),
    ("shelf", "shop", 1),
    ("coat_rack", "corridor", 2),
    ("shoe_rack", "corridor", 2),
];

fn matches(category: &str, keyword: &str) -> bool {
    category == keyword
        || category.split('_').any(|t| t == keyword)
        || (keyword.contains('_') && category.contains(keyword))
}

/// Deterministic keyword vote. Ties follow vocabulary order; no hits gives `room`.
pub fn classify_rules(categories: &[String]) -> &'static str {
    let mut score = [0u32; ROOM_VOCABULARY.len()];
    for c in categories {
        for (kw, room, s) in KEYWORDS {
            if matches(c, kw) {
                let i = ROOM_VOCABULARY.iter().position(|r| r == room).unwrap();
                score[i] += s;
            }
        }
    }
    let (best, top) = score
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap();
    if *top == 0 {
        FALLBACK_ROOM
    } else {
        ROOM_VOCABULARY[best]
    }
}

pub fn classify_messages(categories: &[String]) -> Vec<Message> {
    let vocab = ROOM_VOCABULARY.join(", ");
    vec![
        Message::system(format!(
            "You label rooms of a building from the things found in them. \
             Answer with exactly one label from this list: {vocab}."
        )),
        Message::user(format!(
            "Objects and surfaces in the region: {}\nLabel:",
            if categories.is_empty() {
                "(none)".to_string()
            } else {
                categories.join(", ")
            }
        )),
    ]
}

/// Finds a vocabulary label in a reply: an exact line match first, then the label
/// ending last in the text (the longer one when two end together).
pub fn parse_room_label(reply: &str) -> Option<&'static str> {
    for line in reply.lines().rev() {
        let l = line.trim().trim_end_matches('.').trim_matches('"').to_lowercase();
        if let Some(r) = ROOM_VOCABULARY.iter().find(|r| **r == l) {
            return Some(r);
        }
    }
    let lower = reply.to_lowercase();
    ROOM_VOCABULARY
        .iter()
        .filter_map(|r| lower.rfind(r).map(|p| (p + r.len(), *r)))
        .max_by_key(|(end, r)| (*end, r.len()))
        .map(|(_, r)| r)
}

/// Room label for a set of categories. One retry on an unusable reply, then `room`.
pub fn classify_region(categories: &[String], backend: &dyn LlmBackend) -> String {
    if categories.is_empty() {
        return FALLBACK_ROOM.to_string();
    }
    let req = LlmRequest {
        purpose: Purpose::Classify,
        messages: classify_messages(categories),
        context: Some(Context::Classify {
            categories: categories.to_vec(),
        }),
    };
    for attempt in 0..2 {
        match backend.complete(&req) {
            Ok(reply) => {
                if let Some(l) = parse_room_label(&reply) {
                    return l.to_string();
                }
                warn!("unusable room label reply (attempt {}): {reply:?}", attempt + 1);
            }
            Err(e) => warn!("room classification failed (attempt {}): {e}", attempt + 1),
        }
    }
    FALLBACK_ROOM.to_string()
}
