//! COCO-style instance annotations, the class lookup table and mask geometry.

mod classes;
mod coco;
mod mask;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use thiserror::Error;

pub use classes::{ClassEntry, ClassTable};
pub use coco::{parse_annotations, serialize_encodings, ParsedCorpus};
pub use mask::{center_of_mass, counts_from_string, counts_to_string, decode_mask, MaskEncoding};

use crate::labels::ClassId;
use crate::raster::BinaryMask;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("malformed annotation document at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("annotation {annotation} references unknown category id {category}")]
    UnknownCategory { category: i64, annotation: u64 },
    #[error("annotation {annotation} references unknown image id {image}")]
    UnknownImage { image: u64, annotation: u64 },
    #[error("mask decode error: {0}")]
    Decode(String),
    #[error("instance {instance} has no foreground pixels")]
    EmptyMask { instance: u64 },
    #[error("raster has no foreground pixels")]
    EmptyRaster,
    #[error("class table line {line}: {message}")]
    ClassTable { line: usize, message: String },
    #[error("invalid class table: {0}")]
    InvalidTable(String),
}

/// One annotated object. The raster is decoded on first use and cached.
#[derive(Debug)]
pub struct InstanceMask {
    pub instance_id: u64,
    pub class_id: ClassId,
    pub encoding: MaskEncoding,
    decoded: OnceLock<BinaryMask>,
}

impl Clone for InstanceMask {
    fn clone(&self) -> Self {
        let decoded = OnceLock::new();
        if let Some(m) = self.decoded.get() {
            let _ = decoded.set(m.clone());
        }
        Self { instance_id: self.instance_id, class_id: self.class_id, encoding: self.encoding.clone(), decoded }
    }
}

impl InstanceMask {
    pub fn new(instance_id: u64, class_id: ClassId, encoding: MaskEncoding) -> Self {
        Self { instance_id, class_id, encoding, decoded: OnceLock::new() }
    }

    /// Decoded raster; fails when the encoding is inconsistent with the image
    /// size or has no foreground pixel.
    pub fn raster(&self, height: usize, width: usize) -> Result<&BinaryMask, AnnotationError> {
        if let Some(m) = self.decoded.get() {
            return Ok(m);
        }
        let m = decode_mask(&self.encoding, height, width)?;
        if m.area() == 0 {
            return Err(AnnotationError::EmptyMask { instance: self.instance_id });
        }
        Ok(self.decoded.get_or_init(|| m))
    }
}

/// An image's geometry and its instance masks.
#[derive(Debug, Clone)]
pub struct SceneSample {
    pub image_id: u64,
    pub width: usize,
    pub height: usize,
    pub instances: Vec<InstanceMask>,
    distinct_classes: BTreeSet<ClassId>,
}

impl SceneSample {
    /// Builds a sample and decodes every mask, rejecting empty or ill-sized ones.
    pub fn new(image_id: u64, width: usize, height: usize, instances: Vec<InstanceMask>) -> Result<Self, AnnotationError> {
        let s = Self::from_parts(image_id, width, height, instances);
        s.validate()?;
        Ok(s)
    }

    /// Builds a sample without decoding masks.
    pub(crate) fn from_parts(image_id: u64, width: usize, height: usize, mut instances: Vec<InstanceMask>) -> Self {
        instances.sort_by_key(|m| m.instance_id);
        let distinct_classes = instances.iter().map(|m| m.class_id).collect();
        Self { image_id, width, height, instances, distinct_classes }
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        for inst in &self.instances {
            inst.raster(self.height, self.width)?;
        }
        Ok(())
    }

    pub fn distinct_classes(&self) -> &BTreeSet<ClassId> {
        &self.distinct_classes
    }

    pub fn raster<'a>(&self, instance: &'a InstanceMask) -> Result<&'a BinaryMask, AnnotationError> {
        instance.raster(self.height, self.width)
    }

    pub fn instance(&self, instance_id: u64) -> Option<&InstanceMask> {
        self.instances.iter().find(|m| m.instance_id == instance_id)
    }

    /// True when the image has instances and they all share one class.
    pub fn is_single_class(&self) -> bool {
        !self.instances.is_empty() && self.distinct_classes.len() == 1
    }

    /// True when some class has more than one instance.
    pub fn has_duplicate_classes(&self) -> bool {
        self.distinct_classes.len() < self.instances.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_off_mask_rejected_at_construction() {
        let inst = InstanceMask::new(1, ClassId(1), MaskEncoding::Rle { counts: vec![9], size: [3, 3] });
        assert!(matches!(SceneSample::new(1, 3, 3, vec![inst]), Err(AnnotationError::EmptyMask { instance: 1 })));
    }

    #[test]
    fn flags() {
        let on = |id, c| InstanceMask::new(id, ClassId(c), MaskEncoding::Rle { counts: vec![0, 4], size: [2, 2] });
        let s = SceneSample::new(1, 2, 2, vec![on(2, 1), on(1, 1)]).unwrap();
        assert!(s.is_single_class() && s.has_duplicate_classes());
        assert_eq!(s.instances[0].instance_id, 1);
        let s = SceneSample::new(1, 2, 2, vec![on(1, 1), on(2, 3)]).unwrap();
        assert!(!s.is_single_class() && !s.has_duplicate_classes());
    }
}
