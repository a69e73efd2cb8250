//! Train/test partitions of a dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Each database's queries are shuffled and the first `⌈f·n⌉` train.
    WithinDatabase { train_fraction: f64, seed: u64 },
    /// Whole databases are held out.
    CrossDatabase { test_db_ids: Vec<String> },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::WithinDatabase { train_fraction: 0.8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("train fraction {0} is not strictly between 0 and 1")]
    BadFraction(f64),
    #[error("unknown db_id `{0}` in held-out set")]
    UnknownDbId(String),
    #[error("cannot parse split `{0}`; expected `within:<fraction>` or `cross:<db>[,<db>...]`")]
    Syntax(String),
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), SplitError> {
        match self {
            SplitSpec::WithinDatabase { train_fraction: f, .. } if !(*f > 0.0 && *f < 1.0) => Err(SplitError::BadFraction(*f)),
            _ => Ok(()),
        }
    }

    /// Replaces the seed of a within-database split.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            SplitSpec::WithinDatabase { train_fraction, .. } => SplitSpec::WithinDatabase { train_fraction, seed },
            other => other,
        }
    }
}

/// `within:0.8`, `within:0.8:7` (with seed) or `cross:db_a,db_b`.
impl FromStr for SplitSpec {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || SplitError::Syntax(s.into());
        let (mode, rest) = s.split_once(':').ok_or_else(syntax)?;
        let spec = match mode {
            "within" => {
                let mut parts = rest.split(':');
                let train_fraction = parts.next().and_then(|f| f.parse().ok()).ok_or_else(syntax)?;
                let seed = match parts.next() {
                    Some(seed) => seed.parse().map_err(|_| syntax())?,
                    None => 0,
                };
                if parts.next().is_some() {
                    return Err(syntax());
                }
                SplitSpec::WithinDatabase { train_fraction, seed }
            }
            "cross" => {
                let ids: Vec<String> = rest.split(',').filter(|d| !d.is_empty()).map(str::to_owned).collect();
                if ids.is_empty() {
                    return Err(syntax());
                }
                SplitSpec::CrossDatabase { test_db_ids: ids }
            }
            _ => return Err(syntax()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::WithinDatabase { train_fraction, seed } => write!(f, "within:{train_fraction}:{seed}"),
            SplitSpec::CrossDatabase { test_db_ids } => write!(f, "cross:{}", test_db_ids.join(",")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl Split {
    pub fn is_train(&self, query_id: &str) -> bool {
        self.train.contains(query_id)
    }
}

/// Partitions `(query_id, db_id)` pairs. Query ids are assumed unique.
pub fn make_split<'a>(
    records: impl IntoIterator<Item = (&'a str, &'a str)>,
    spec: &SplitSpec,
) -> Result<Split, SplitError> {
    spec.validate()?;
    let mut by_db: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (query_id, db_id) in records {
        by_db.entry(db_id).or_default().push(query_id);
    }
    let mut split = Split::default();
    match spec {
        SplitSpec::WithinDatabase { train_fraction, seed } => {
            for (db_id, mut ids) in by_db {
                ids.sort_unstable();
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(db_id.as_bytes()));
                ids.shuffle(&mut rng);
                // the epsilon keeps 0.7 * 10 from rounding up to 8
                let n_train = ((train_fraction * ids.len() as f64) - 1e-9).ceil().max(0.0) as usize;
                for (i, id) in ids.into_iter().enumerate() {
                    let side = if i < n_train { &mut split.train } else { &mut split.test };
                    side.insert(id.to_owned());
                }
            }
        }
        SplitSpec::CrossDatabase { test_db_ids } => {
            if let Some(missing) = test_db_ids.iter().find(|d| !by_db.contains_key(d.as_str())) {
                return Err(SplitError::UnknownDbId(missing.clone()));
            }
            for (db_id, ids) in by_db {
                let side = if test_db_ids.iter().any(|d| d == db_id) { &mut split.test } else { &mut split.train };
                side.extend(ids.into_iter().map(str::to_owned));
            }
        }
    }
    Ok(split)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(db: &str, n: usize) -> Vec<(String, String)> {
        (0..n).map(|i| (format!("{db}-{i}"), db.to_owned())).collect()
    }

    fn run(records: &[(String, String)], spec: &SplitSpec) -> Result<Split, SplitError> {
        make_split(records.iter().map(|(q, d)| (q.as_str(), d.as_str())), spec)
    }

    #[test]
    fn eighty_twenty_of_ten() {
        let split = run(&ids("a", 10), &SplitSpec::default()).unwrap();
        assert_eq!((split.train.len(), split.test.len()), (8, 2));
    }

    #[test]
    fn fraction_rounding() {
        let spec = SplitSpec::WithinDatabase { train_fraction: 0.7, seed: 1 };
        assert_eq!(run(&ids("a", 10), &spec).unwrap().train.len(), 7);
        assert_eq!(run(&ids("a", 3), &spec).unwrap().train.len(), 3);
        assert_eq!(run(&ids("a", 1), &spec).unwrap().train.len(), 1);
    }

    #[test]
    fn cross_database_holds_out_whole_db() {
        let mut records = ids("a", 4);
        records.extend(ids("b", 3));
        let spec = SplitSpec::CrossDatabase { test_db_ids: vec!["b".into()] };
        let split = run(&records, &spec).unwrap();
        assert_eq!(split.test, ids("b", 3).into_iter().map(|(q, _)| q).collect());
        assert_eq!(split.train.len(), 4);
        let unknown = SplitSpec::CrossDatabase { test_db_ids: vec!["zzz".into()] };
        assert_eq!(run(&records, &unknown), Err(SplitError::UnknownDbId("zzz".into())));
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let mut records = ids("a", 20);
        records.extend(ids("b", 20));
        let spec = SplitSpec::WithinDatabase { train_fraction: 0.5, seed: 3 };
        let first = run(&records, &spec).unwrap();
        let mut reversed = records.clone();
        reversed.reverse();
        assert_eq!(first, run(&reversed, &spec).unwrap());
        assert_eq!(first.train.iter().filter(|q| q.starts_with("a-")).count(), 10);
        assert_ne!(first, run(&records, &spec.clone().with_seed(4)).unwrap());
    }

    #[test]
    fn parse_specs() {
        assert_eq!("within:0.8".parse(), Ok(SplitSpec::default()));
        assert_eq!("within:0.5:9".parse(), Ok(SplitSpec::WithinDatabase { train_fraction: 0.5, seed: 9 }));
        assert_eq!(
            "cross:x,y".parse(),
            Ok(SplitSpec::CrossDatabase { test_db_ids: vec!["x".into(), "y".into()] })
        );
        assert_eq!("within:1.0".parse::<SplitSpec>(), Err(SplitError::BadFraction(1.0)));
        assert!("cross:".parse::<SplitSpec>().is_err());
        assert!("bogus".parse::<SplitSpec>().is_err());
        let spec = SplitSpec::WithinDatabase { train_fraction: 0.25, seed: 2 };
        assert_eq!(spec.to_string().parse(), Ok(spec));
    }
}
