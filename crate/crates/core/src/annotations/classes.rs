use std::collections::HashSet;
use std::fmt::Write as _;

use super::AnnotationError;
use crate::labels::{ClassId, MAX_CLASSES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub id: ClassId,
    pub visual_label: String,
    pub audio_tags: Vec<String>,
}

/// Visual label ↔ audio tag lookup. Ids run contiguously from 1; id 0 is
/// background and carries no tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    entries: Vec<ClassEntry>,
}

const VPO_CLASSES: &[(&str, &[&str])] = &[
    ("bird", &["mynah bird singing"]),
    ("keyboard", &["typing on computer keyboard"]),
    ("bus", &["driving buses"]),
    ("cat", &["cat purring", "cat meowing", "cat caterwauling"]),
    (
        "dog",
        &["dog growling", "dog bow-wow", "dog whimpering", "dog howling", "dog barking", "dog baying"],
    ),
    ("horse", &["horse neighing", "horse clip-clop"]),
    (
        "car",
        &[
            "car passing by",
            "car engine idling",
            "car engine starting",
            "race car, auto racing",
            "car engine knocking",
        ],
    ),
    ("sports ball", &["shot football"]),
    ("airplane", &["airplane", "airplane flyby"]),
    ("sheep", &["sheep bleating"]),
    ("cow", &["cow lowing"]),
    ("motorcycle", &["driving motorcycle"]),
    ("mouse", &["mouse clicking"]),
    ("cell phone", &["cell phone buzzing"]),
    ("elephant", &["elephant trumpeting"]),
    ("zebra", &["zebra braying"]),
    ("tennis racket", &["playing tennis"]),
    ("skateboard", &["skateboarding"]),
    ("male", &["male speech, man speaking", "male singing"]),
    ("female", &["female speech, woman speaking"]),
    ("baby", &["baby babbling", "baby crying", "baby laughter"]),
];

impl ClassTable {
    pub fn new(entries: Vec<ClassEntry>) -> Result<Self, AnnotationError> {
        let invalid = |m: String| Err(AnnotationError::InvalidTable(m));
        if entries.len() + 1 > MAX_CLASSES {
            return invalid(format!("{} classes exceed the limit of {}", entries.len(), MAX_CLASSES - 1));
        }
        let mut labels = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.id.index() != i + 1 {
                return invalid(format!("class ids must be contiguous from 1; found {} at position {}", e.id, i + 1));
            }
            if !labels.insert(e.visual_label.as_str()) {
                return invalid(format!("duplicate visual label {:?}", e.visual_label));
            }
            if e.audio_tags.is_empty() {
                return invalid(format!("class {:?} has no audio tags", e.visual_label));
            }
        }
        Ok(Self { entries })
    }

    /// The 21-class audio-visual lookup used by the VPO benchmarks.
    pub fn vpo() -> Self {
        let entries = VPO_CLASSES
            .iter()
            .enumerate()
            .map(|(i, (label, tags))| ClassEntry {
                id: ClassId(i as u8 + 1),
                visual_label: label.to_string(),
                audio_tags: tags.iter().map(|t| t.to_string()).collect(),
            })
            .collect();
        Self::new(entries).expect("built-in table is valid")
    }

    /// Parses `class_id<TAB>visual_label<TAB>tag;tag;...` lines. Blank lines
    /// and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, AnnotationError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: String| AnnotationError::ClassTable { line: line_no, message };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            }
            let id: u8 = fields[0].trim().parse().map_err(|_| err(format!("bad class id {:?}", fields[0])))?;
            let tags: Vec<String> = fields[2]
                .split(';')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(String::from)
                .collect();
            entries.push(ClassEntry { id: ClassId(id), visual_label: fields[1].trim().to_string(), audio_tags: tags });
        }
        Self::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# class_id\tvisual_label\taudio_tags\n");
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}\t{}", e.id, e.visual_label, e.audio_tags.join(";"));
        }
        out
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    /// Number of classes including background.
    pub fn num_classes(&self) -> usize {
        self.entries.len() + 1
    }

    pub fn get(&self, id: ClassId) -> Option<&ClassEntry> {
        if id.is_background() {
            return None;
        }
        self.entries.get(id.index() - 1)
    }

    pub fn by_label(&self, label: &str) -> Option<&ClassEntry> {
        self.entries.iter().find(|e| e.visual_label == label)
    }

    pub fn class_for_tag(&self, tag: &str) -> Option<ClassId> {
        self.entries.iter().find(|e| e.audio_tags.iter().any(|t| t == tag)).map(|e| e.id)
    }

    pub fn label(&self, id: ClassId) -> &str {
        match self.get(id) {
            Some(e) => &e.visual_label,
            None => "background",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vpo_table_shape() {
        let t = ClassTable::vpo();
        assert_eq!(t.num_classes(), 22);
        assert_eq!(t.by_label("dog").unwrap().audio_tags.len(), 6);
        assert_eq!(t.class_for_tag("race car, auto racing"), t.by_label("car").map(|e| e.id));
        assert_eq!(t.label(ClassId(0)), "background");
    }

    #[test]
    fn text_round_trip() {
        let t = ClassTable::vpo();
        assert_eq!(ClassTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            ClassTable::parse("1\tdog\tdog barking\n3\tcat\tcat meowing\n"),
            Err(AnnotationError::InvalidTable(_))
        ));
        assert!(matches!(
            ClassTable::parse("1\tdog\tdog barking\n2\tdog\tdog howling\n"),
            Err(AnnotationError::InvalidTable(_))
        ));
        assert!(matches!(ClassTable::parse("1\tdog\t ; \n"), Err(AnnotationError::InvalidTable(_))));
        assert!(matches!(
            ClassTable::parse("# header\n1\tdog\n"),
            Err(AnnotationError::ClassTable { line: 2, .. })
        ));
    }
}
