use std::fmt::Write;

use super::mining::classify;
use super::{mine_sets, AnchorPartition, AnchorRecord, CavpError, MiningConfig, Partition};

fn origins(records: &[AnchorRecord], idx: &[usize]) -> String {
    if idx.is_empty() {
        return "-".into();
    }
    let mut s = String::new();
    for (k, &j) in idx.iter().enumerate() {
        let o = records[j].origin;
        if k > 0 {
            s.push(',');
        }
        let _ = write!(s, "{}:{}", o.item, o.pixel);
    }
    s
}

/// One tab-separated line per record: origin, partition, pixel class, audio
/// labels, set sizes and member origins. Unknown records carry no sets.
pub fn dump_sets(records: &[AnchorRecord], partition: &AnchorPartition, cfg: &MiningConfig) -> Result<String, CavpError> {
    let mut out = String::new();
    for (i, r) in records.iter().enumerate() {
        let part = classify(r, cfg);
        let t = if r.t.is_empty() {
            "-".to_string()
        } else {
            r.t.iter().map(|c| c.0.to_string()).collect::<Vec<_>>().join(";")
        };
        let _ = write!(out, "{}:{}\t{}\ty={}\tt={}", r.origin.item, r.origin.pixel, part.name(), r.y.0, t);
        if part != Partition::Unknown {
            let s = mine_sets(i, records, partition, cfg)?;
            let _ = write!(
                out,
                "\t|P|={}\t|Nh|={}\t|Ne|={}\tP={}\tNh={}\tNe={}",
                s.positives.len(),
                s.hard_negatives.len(),
                s.easy_negatives.len(),
                origins(records, &s.positives),
                origins(records, &s.hard_negatives),
                origins(records, &s.easy_negatives)
            );
        }
        out.push('\n');
    }
    Ok(out)
}

/// Reads a JSON-lines record pool. Blank lines are ignored.
pub fn parse_pool(text: &str) -> Result<Vec<AnchorRecord>, CavpError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CavpError::Pool { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn write_pool(records: &[AnchorRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}
