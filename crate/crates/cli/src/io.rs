use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use avs_core::annotations::{parse_annotations, ClassTable, ParsedCorpus};
use avs_core::LabelRaster;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Creates `dir`, refusing a non-empty one unless `force` is set.
pub fn prepare_out(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
        if entries.next().is_some() && !force {
            bail!("{} is not empty; pass --force to write into it", dir.display());
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn class_table(path: Option<&Path>) -> Result<ClassTable> {
    match path {
        Some(p) => ClassTable::parse(&read_text(p)?).with_context(|| format!("class table {}", p.display())),
        None => Ok(ClassTable::vpo()),
    }
}

pub fn corpus(path: &Path, table: &ClassTable) -> Result<ParsedCorpus> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = parse_annotations(&bytes, table).with_context(|| format!("annotations {}", path.display()))?;
    if parsed.crowd_skipped > 0 || parsed.unmapped_skipped > 0 {
        log::info!(
            "skipped {} crowd regions and {} instances of unmapped categories",
            parsed.crowd_skipped,
            parsed.unmapped_skipped
        );
    }
    Ok(parsed)
}

pub fn clips_root(explicit: Option<&Path>, fallback_from: &Path) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| fallback_from.parent().map(Path::to_path_buf).unwrap_or_default())
}

pub fn read_pgm(path: &Path) -> Result<LabelRaster> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    LabelRaster::from_pgm(&bytes).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// One file, or every `.pgm` file in a directory by name.
pub fn pgm_files(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    if path.is_file() {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(vec![(name, path.to_path_buf())]);
    }
    let mut files: Vec<(String, PathBuf)> = fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), p))
        .collect();
    files.sort();
    Ok(files)
}
