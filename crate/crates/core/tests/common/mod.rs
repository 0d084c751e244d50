#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use tsqa_core::ingest::RecordText;
use tsqa_core::{AnswerSet, Tier};

pub struct Sample {
    pub name: String,
    pub sections: BTreeMap<String, String>,
}

impl Sample {
    pub fn load(name: &str) -> Sample {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("sample_{name}.txt"));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut sections = BTreeMap::new();
        let mut current: Option<String> = None;
        for line in text.lines() {
            if let Some(h) =
                line.strip_prefix('[').and_then(|l| l.strip_suffix(']')).filter(|h| h.bytes().all(|b| b.is_ascii_lowercase() || b == b'_'))
            {
                current = Some(h.to_string());
                sections.insert(h.to_string(), String::new());
            } else if let Some(c) = &current {
                let body = sections.get_mut(c).unwrap();
                if !body.is_empty() {
                    body.push('\n');
                }
                body.push_str(line);
            }
        }
        Sample { name: name.to_string(), sections }
    }

    pub fn get(&self, key: &str) -> &str {
        self.sections.get(key).map(String::as_str).unwrap_or_else(|| panic!("{}: no [{key}]", self.name))
    }

    pub fn tier(&self) -> Tier {
        self.get("tier").trim().parse().unwrap()
    }

    pub fn text(&self) -> RecordText<'_> {
        RecordText {
            tier: self.tier(),
            objects: self.get("objects"),
            init: self.get("init"),
            events: self.get("events"),
            question: self.get("question"),
        }
    }

    pub fn gold(&self) -> AnswerSet {
        let answers: Vec<String> = serde_json::from_str(self.get("answers")).unwrap();
        AnswerSet::from_answers(&answers).unwrap()
    }
}

pub const ALL: [&str; 12] = [
    "easy_static",
    "easy_relative",
    "easy_hypothetical",
    "medium_static",
    "medium_relative",
    "medium_hypothetical",
    "hard_serial_static",
    "hard_serial_relative",
    "hard_serial_hypothetical",
    "hard_parallel_static",
    "hard_parallel_relative",
    "hard_parallel_hypothetical",
];
