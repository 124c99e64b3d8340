use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CavpError, ContrastiveSets, MemoryBank};
use crate::labels::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceConfig {
    /// Target fraction of positives in each anchor's sample.
    pub proportion: f64,
    /// Samples drawn per anchor.
    pub budget: usize,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self { proportion: 0.5, budget: 32 }
    }
}

impl BalanceConfig {
    pub fn validate(&self) -> Result<(), CavpError> {
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return Err(CavpError::Proportion(self.proportion));
        }
        if self.budget < 2 {
            return Err(CavpError::Budget(self.budget));
        }
        Ok(())
    }
}

/// `(positives, negatives)` for a budget; the two always sum to `budget`.
pub fn split_budget(proportion: f64, budget: usize) -> (usize, usize) {
    let pos = ((proportion * budget as f64) - 1e-9).ceil().max(0.0) as usize;
    let pos = pos.min(budget);
    (pos, budget - pos)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PositiveDraw<T> {
    /// Index into the record pool.
    Record(usize),
    /// Bank item to be fused with the anchor's image.
    Bank(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedSample<T> {
    pub anchor: usize,
    pub positives: Vec<PositiveDraw<T>>,
    pub negatives: Vec<usize>,
}

impl<T> BalancedSample<T> {
    pub fn bank_positives(&self) -> usize {
        self.positives.iter().filter(|p| matches!(p, PositiveDraw::Bank(_))).count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceStats {
    pub sampled: usize,
    /// Anchors dropped for lack of positives with nothing banked for their class.
    pub skipped: usize,
    pub bank_positives: usize,
    /// Draws that had to reuse set members.
    pub resampled: usize,
}

fn draw<R: Rng + ?Sized>(pool: &[usize], n: usize, rng: &mut R, stats: &mut BalanceStats) -> Vec<usize> {
    if pool.len() >= n {
        rand::seq::index::sample(rng, pool.len(), n).into_iter().map(|i| pool[i]).collect()
    } else {
        stats.resampled += n;
        (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect()
    }
}

/// Draws a fixed-size sample of positives and negatives for one anchor.
///
/// Sets large enough for their share are sampled without replacement,
/// smaller ones with replacement. When positives fall short, the missing
/// ones come from the bank's items for `class` if any exist; with no
/// positives and an empty bank the anchor is skipped (`Ok(None)`).
pub fn balance<T: Clone, R: Rng + ?Sized>(
    sets: &ContrastiveSets,
    class: ClassId,
    cfg: &BalanceConfig,
    rng: &mut R,
    bank: &MemoryBank<T>,
    stats: &mut BalanceStats,
) -> Result<Option<BalancedSample<T>>, CavpError> {
    cfg.validate()?;
    if sets.num_negatives() == 0 {
        return Err(CavpError::NoNegatives(sets.anchor));
    }
    let banked = bank.len(class);
    if sets.positives.is_empty() && banked == 0 {
        stats.skipped += 1;
        return Ok(None);
    }
    let (n_pos, n_neg) = split_budget(cfg.proportion, cfg.budget);

    let mut positives = Vec::with_capacity(n_pos);
    if sets.positives.len() >= n_pos || banked == 0 {
        positives.extend(draw(&sets.positives, n_pos, rng, stats).into_iter().map(PositiveDraw::Record));
    } else {
        positives.extend(sets.positives.iter().map(|&j| PositiveDraw::Record(j)));
        while positives.len() < n_pos {
            let item = bank.get(class, rng.random_range(0..banked)).expect("index below bank length");
            positives.push(PositiveDraw::Bank(item.clone()));
            stats.bank_positives += 1;
        }
    }

    let pooled: Vec<usize> = sets.negatives().collect();
    let negatives = draw(&pooled, n_neg, rng, stats);
    stats.sampled += 1;
    Ok(Some(BalancedSample { anchor: sets.anchor, positives, negatives }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn sets(p: usize, n: usize) -> ContrastiveSets {
        ContrastiveSets {
            anchor: 0,
            positives: (1..=p).collect(),
            hard_negatives: (1000..1000 + n / 2).collect(),
            easy_negatives: (2000..2000 + n - n / 2).collect(),
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(split_budget(0.5, 100), (50, 50));
        assert_eq!(split_budget(0.9, 10), (9, 1));
        assert_eq!(split_budget(0.1, 100), (10, 90));
        assert_eq!(split_budget(0.9, 100), (90, 10));
        assert_eq!(split_budget(0.3, 3), (1, 2));
    }

    #[test]
    fn exact_proportions_without_replacement() {
        let bank = MemoryBank::<u32>::default();
        let mut st = BalanceStats::default();
        for (p, want) in [(0.1, 10), (0.5, 50), (0.9, 90)] {
            let cfg = BalanceConfig { proportion: p, budget: 100 };
            let s = balance(&sets(200, 200), ClassId(1), &cfg, &mut stream(1), &bank, &mut st).unwrap().unwrap();
            assert_eq!(s.positives.len(), want);
            assert_eq!(s.negatives.len(), 100 - want);
            let mut n = s.negatives.clone();
            n.sort_unstable();
            n.dedup();
            assert_eq!(n.len(), 100 - want);
        }
        assert_eq!(st.resampled, 0);
    }

    #[test]
    fn scarcity_and_errors() {
        let cfg = BalanceConfig { proportion: 0.5, budget: 10 };
        let mut bank = MemoryBank::new(4);
        let mut st = BalanceStats::default();
        let s = balance(&sets(0, 20), ClassId(1), &cfg, &mut stream(2), &bank, &mut st).unwrap();
        assert!(s.is_none());
        assert_eq!(st.skipped, 1);
        bank.push(ClassId(1), 7u32);
        let s = balance(&sets(0, 20), ClassId(1), &cfg, &mut stream(2), &bank, &mut st).unwrap().unwrap();
        assert_eq!(s.bank_positives(), 5);
        let s = balance(&sets(2, 20), ClassId(1), &cfg, &mut stream(2), &bank, &mut st).unwrap().unwrap();
        assert_eq!(s.bank_positives(), 3);
        assert_eq!(
            balance(&sets(3, 0), ClassId(1), &cfg, &mut stream(2), &bank, &mut st),
            Err(CavpError::NoNegatives(0))
        );
        let bad = BalanceConfig { proportion: 1.0, budget: 10 };
        assert!(matches!(balance(&sets(3, 3), ClassId(1), &bad, &mut stream(2), &bank, &mut st), Err(CavpError::Proportion(_))));
    }
}
