use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BuildError;
use crate::annotations::ClassTable;
use crate::labels::ClassId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRef {
    pub tag: String,
    /// Path relative to the pool root.
    pub path: String,
    pub duration: f64,
}

/// Audio clips indexed by tag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AudioPool {
    clips: BTreeMap<String, Vec<ClipRef>>,
}

impl AudioPool {
    /// Parses a tab-separated index of `tag  path  duration_seconds` lines.
    /// Every tag must belong to a class of `table`. `#` starts a comment line.
    pub fn parse(text: &str, table: &ClassTable) -> Result<Self, BuildError> {
        let mut pool = AudioPool::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| BuildError::Pool { line: i + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            let [tag, path, duration] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            };
            if table.class_for_tag(tag).is_none() {
                return Err(err(format!("tag {tag:?} is not in the class table")));
            }
            let duration: f64 = duration.trim().parse().map_err(|_| err(format!("bad duration {duration:?}")))?;
            if !(duration.is_finite() && duration > 0.0) {
                return Err(err(format!("duration must be positive, got {duration}")));
            }
            if path.is_empty() {
                return Err(err("empty path".into()));
            }
            pool.insert(ClipRef { tag: tag.to_string(), path: path.to_string(), duration });
        }
        Ok(pool)
    }

    pub fn insert(&mut self, clip: ClipRef) {
        self.clips.entry(clip.tag.clone()).or_default().push(clip);
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in self.clips.values().flatten() {
            s.push_str(&format!("{}\t{}\t{}\n", c.tag, c.path, c.duration));
        }
        s
    }

    pub fn tag(&self, tag: &str) -> &[ClipRef] {
        self.clips.get(tag).map_or(&[], Vec::as_slice)
    }

    /// All clips of all tags of `class`, in table tag order.
    pub fn clips_for_class<'a>(&'a self, table: &'a ClassTable, class: ClassId) -> Vec<&'a ClipRef> {
        table
            .get(class)
            .map(|e| e.audio_tags.iter().flat_map(|t| self.tag(t)).collect())
            .unwrap_or_default()
    }

    pub fn has_class(&self, table: &ClassTable, class: ClassId) -> bool {
        table.get(class).is_some_and(|e| e.audio_tags.iter().any(|t| !self.tag(t).is_empty()))
    }

    pub fn len(&self) -> usize {
        self.clips.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let table = ClassTable::vpo();
        let text = "# pool\ndog barking\tdog/a.wav\t10\ndog growling\tdog/b.wav\t4.5\ncat meowing\tcat/a.wav\t10\n";
        let pool = AudioPool::parse(text, &table).unwrap();
        assert_eq!(pool.len(), 3);
        let dog = table.by_label("dog").unwrap().id;
        assert_eq!(pool.clips_for_class(&table, dog).len(), 2);
        assert!(!pool.has_class(&table, table.by_label("bus").unwrap().id));
        assert_eq!(AudioPool::parse(&pool.to_text(), &table).unwrap(), pool);
        assert!(matches!(AudioPool::parse("jazz\tx.wav\t10", &table), Err(BuildError::Pool { line: 1, .. })));
        assert!(matches!(AudioPool::parse("dog barking\tx.wav\t-1", &table), Err(BuildError::Pool { .. })));
    }
}
