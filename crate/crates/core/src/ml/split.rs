//! Label-stratified train/validation splits.

use crate::data::ScreenDataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

fn take_train(count: usize, fraction: f64) -> usize {
    // round half up, clamped so both splits keep at least one of the class
    let k = (fraction * count as f64 + 0.5).floor() as usize;
    k.clamp(1, count - 1)
}

/// Split one target's record indices into (train, validation) with roughly
/// `train_fraction` of each class in train. Both splits keep at least one
/// active and one inactive; index sets are sorted and disjoint.
pub fn split_dataset(
    ds: &ScreenDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if ds.n_total() < 4 {
        return Err(Error::Split(format!(
            "target `{}` has {} ligands; need at least 4",
            ds.target_id,
            ds.n_total()
        )));
    }
    if ds.n_actives() < 2 {
        return Err(Error::Split(format!(
            "target `{}` has {} actives; validation EF undefined below 2",
            ds.target_id,
            ds.n_actives()
        )));
    }
    if ds.n_inactives() < 2 {
        return Err(Error::Split(format!(
            "target `{}` has {} inactives; need at least 2",
            ds.target_id,
            ds.n_inactives()
        )));
    }

    let mut actives: Vec<usize> = Vec::new();
    let mut inactives: Vec<usize> = Vec::new();
    for (i, rec) in ds.records.iter().enumerate() {
        if rec.active {
            actives.push(i);
        } else {
            inactives.push(i);
        }
    }

    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut actives);
    rng.shuffle(&mut inactives);

    let a_train = take_train(actives.len(), train_fraction);
    let i_train = take_train(inactives.len(), train_fraction);

    let mut train: Vec<usize> = actives[..a_train]
        .iter()
        .chain(&inactives[..i_train])
        .copied()
        .collect();
    let mut val: Vec<usize> = actives[a_train..]
        .iter()
        .chain(&inactives[i_train..])
        .copied()
        .collect();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Direction, Pathway, ScoreRecord, ScorerSpec};

    fn dataset(n_actives: usize, n_inactives: usize) -> ScreenDataset {
        let records = (0..n_actives + n_inactives)
            .map(|i| ScoreRecord {
                ligand_id: format!("L{i:05}"),
                active: i < n_actives,
                scores: vec![Some(i as f64)],
            })
            .collect();
        ScreenDataset {
            target_id: "T".into(),
            scorer_specs: vec![ScorerSpec::new("s", Direction::HigherBetter, Pathway::Shared)],
            records,
        }
    }

    #[test]
    fn stratified_75_25() {
        let ds = dataset(40, 1000);
        let (train, val) = split_dataset(&ds, 0.75, 9).unwrap();
        let actives_in = |idx: &[usize]| idx.iter().filter(|&&i| ds.records[i].active).count();
        assert!((actives_in(&train) as i64 - 30).abs() <= 1);
        assert!((actives_in(&val) as i64 - 10).abs() <= 1);
        assert!((train.len() as i64 - 780).abs() <= 2);
        assert!((val.len() as i64 - 260).abs() <= 2);
    }

    #[test]
    fn same_seed_same_split() {
        let ds = dataset(10, 90);
        let a = split_dataset(&ds, 0.75, 7).unwrap();
        let b = split_dataset(&ds, 0.75, 7).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&ds, 0.75, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn splits_partition_the_index_set() {
        let ds = dataset(7, 143);
        let (train, val) = split_dataset(&ds, 0.75, 3).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());
    }

    #[test]
    fn both_splits_keep_both_classes() {
        let ds = dataset(2, 2);
        let (train, val) = split_dataset(&ds, 0.75, 1).unwrap();
        let classes = |idx: &[usize]| {
            let a = idx.iter().filter(|&&i| ds.records[i].active).count();
            (a, idx.len() - a)
        };
        assert_eq!(classes(&train), (1, 1));
        assert_eq!(classes(&val), (1, 1));
    }

    #[test]
    fn too_few_actives_is_split_error() {
        let ds = dataset(1, 100);
        assert!(matches!(split_dataset(&ds, 0.75, 1), Err(Error::Split(_))));
    }
}
