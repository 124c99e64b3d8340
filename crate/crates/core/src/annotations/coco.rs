use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use super::{AnnotationError, ClassTable, InstanceMask, MaskEncoding, SceneSample};

#[derive(Deserialize)]
struct Document {
    images: Vec<Image>,
    #[serde(default)]
    annotations: Vec<Annotation>,
    categories: Vec<Category>,
}

#[derive(Deserialize)]
struct Image {
    id: u64,
    width: usize,
    height: usize,
}

#[derive(Deserialize)]
struct Annotation {
    id: u64,
    image_id: u64,
    category_id: i64,
    segmentation: serde_json::Value,
    #[serde(default)]
    iscrowd: u8,
}

#[derive(Deserialize)]
struct Category {
    id: i64,
    name: String,
}

/// Scenes parsed from one annotation document.
#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    /// One per image, ordered by image id.
    pub samples: Vec<SceneSample>,
    /// Crowd regions are not instances and are dropped.
    pub crowd_skipped: usize,
    /// Instances whose category has no entry in the class table.
    pub unmapped_skipped: usize,
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .nth(line.saturating_sub(2))
        .map_or(0, |(i, _)| i + 1);
    let line_start = if line == 1 { 0 } else { line_start };
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

/// Parses a COCO instance-segmentation document. Categories are matched to
/// `table` by visual label; masks stay encoded until first use.
pub fn parse_annotations(bytes: &[u8], table: &ClassTable) -> Result<ParsedCorpus, AnnotationError> {
    let doc: Document = serde_json::from_slice(bytes).map_err(|e| AnnotationError::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;

    let categories: HashMap<i64, &str> = doc.categories.iter().map(|c| (c.id, c.name.as_str())).collect();
    let mut per_image: BTreeMap<u64, (usize, usize, Vec<InstanceMask>)> =
        doc.images.iter().map(|i| (i.id, (i.width, i.height, Vec::new()))).collect();
    let mut crowd_skipped = 0;
    let mut unmapped_skipped = 0;

    for ann in doc.annotations {
        let name = *categories
            .get(&ann.category_id)
            .ok_or(AnnotationError::UnknownCategory { category: ann.category_id, annotation: ann.id })?;
        let slot = per_image
            .get_mut(&ann.image_id)
            .ok_or(AnnotationError::UnknownImage { image: ann.image_id, annotation: ann.id })?;
        if ann.iscrowd != 0 {
            crowd_skipped += 1;
            continue;
        }
        let Some(entry) = table.by_label(name) else {
            unmapped_skipped += 1;
            continue;
        };
        let encoding = MaskEncoding::from_json(&ann.segmentation).map_err(|m| AnnotationError::Parse {
            offset: 0,
            message: format!("annotation {}: {m}", ann.id),
        })?;
        slot.2.push(InstanceMask::new(ann.id, entry.id, encoding));
    }

    let samples = per_image
        .into_iter()
        .map(|(id, (w, h, inst))| SceneSample::from_parts(id, w, h, inst))
        .collect();
    Ok(ParsedCorpus { samples, crowd_skipped, unmapped_skipped })
}

/// Compact JSON of every instance encoding, keyed by instance id.
pub fn serialize_encodings(samples: &[SceneSample]) -> BTreeMap<u64, String> {
    samples
        .iter()
        .flat_map(|s| &s.instances)
        .map(|m| (m.instance_id, serde_json::to_string(&m.encoding).expect("encodings serialize")))
        .collect()
}
