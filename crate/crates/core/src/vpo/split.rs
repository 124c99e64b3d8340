use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{BuildError, ManifestEntry, Mode, Split};
use crate::labels::{ClassId, BACKGROUND};
use crate::rng::item_stream;

/// Test share of each published subset (test / total).
pub fn default_test_fraction(mode: Mode) -> f64 {
    match mode {
        Mode::Ss => 890.0 / 12_202.0,
        Mode::Ms => 1_437.0 / 9_817.0,
        Mode::Msmi => 1_775.0 / 12_855.0,
    }
}

/// Most frequent sounding class; ties go to the smaller id.
pub fn dominant_class(e: &ManifestEntry) -> ClassId {
    let mut counts: BTreeMap<ClassId, usize> = BTreeMap::new();
    for c in e.sounding_classes() {
        *counts.entry(c).or_default() += 1;
    }
    counts.into_iter().fold((BACKGROUND, 0), |best, (c, n)| if n > best.1 { (c, n) } else { best }).0
}

/// Labels `round(n · test_fraction)` entries as test, stratified by dominant
/// class. Each stratum's quota is its proportional share, rounded by largest
/// remainder; members are drawn by a per-stratum seeded shuffle.
pub fn split(entries: &mut [ManifestEntry], test_fraction: f64, seed: u64) -> Result<(), BuildError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(BuildError::Fraction(test_fraction));
    }
    if entries.is_empty() {
        return Err(BuildError::NoEntries);
    }
    let mut strata: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        strata.entry(dominant_class(e)).or_default().push(i);
    }
    let total = (entries.len() as f64 * test_fraction).round() as usize;
    let mut quotas: Vec<(ClassId, usize, f64)> = strata
        .iter()
        .map(|(&c, m)| {
            let exact = m.len() as f64 * test_fraction;
            (c, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut remaining = total.saturating_sub(quotas.iter().map(|q| q.1).sum());
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then(quotas[a].0.cmp(&quotas[b].0)));
    for &k in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quotas[k].1 < strata[&quotas[k].0].len() {
            quotas[k].1 += 1;
            remaining -= 1;
        }
    }
    for e in entries.iter_mut() {
        e.split = Split::Train;
    }
    for (class, quota, _) in quotas {
        let mut members = strata[&class].clone();
        members.sort_by_key(|&i| entries[i].image_id);
        members.shuffle(&mut item_stream(seed, "split", class.0 as u64));
        for &i in &members[..quota] {
            entries[i].split = Split::Test;
        }
    }
    Ok(())
}
