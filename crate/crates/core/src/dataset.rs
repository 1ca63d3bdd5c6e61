//! Weighted collections of partial-ranking observations.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{domain, Result};
use crate::items::ItemUniverse;
use crate::ranking::{PartialRanking, Ranking};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub observation: PartialRanking,
    pub count: u64,
}

/// Observations over one universe with positive counts. Duplicate
/// observations are merged on insertion, keeping first-seen order.
#[derive(Clone, Debug)]
pub struct Dataset {
    universe: Arc<ItemUniverse>,
    records: Vec<Record>,
    index: HashMap<PartialRanking, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.records == other.records
    }
}

impl Dataset {
    pub fn new(universe: Arc<ItemUniverse>) -> Self {
        Dataset { universe, records: Vec::new(), index: HashMap::new() }
    }

    pub fn from_records<I>(universe: Arc<ItemUniverse>, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PartialRanking, u64)>,
    {
        let mut d = Dataset::new(universe);
        for (obs, count) in records {
            d.push(obs, count)?;
        }
        Ok(d)
    }

    /// One record per ranking, count 1 each (duplicates merge).
    pub fn from_rankings(universe: Arc<ItemUniverse>, rankings: &[Ranking]) -> Result<Self> {
        Self::from_records(universe, rankings.iter().map(|r| (PartialRanking::from_ranking(r), 1)))
    }

    /// Adds `count` copies of `obs`, merging with an earlier equal record.
    pub fn push(&mut self, obs: PartialRanking, count: u64) -> Result<()> {
        if count == 0 {
            return domain("record count must be at least 1");
        }
        if obs.items() != self.universe.all() {
            return domain("observation does not cover the dataset's universe");
        }
        match self.index.get(&obs) {
            Some(&k) => {
                let c = &mut self.records[k].count;
                *c = c.checked_add(count).ok_or_else(|| crate::Error::Domain("record count overflow".into()))?;
            }
            None => {
                self.index.insert(obs.clone(), self.records.len());
                self.records.push(Record { observation: obs, count });
            }
        }
        Ok(())
    }

    pub fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.records.iter().map(|r| r.count).sum()
    }

    pub fn is_all_full(&self) -> bool {
        self.records.iter().all(|r| r.observation.is_full())
    }

    /// The records as full rankings, or `None` if any record is partial.
    pub fn full_rankings(&self) -> Option<Vec<(Ranking, u64)>> {
        self.records.iter().map(|r| Some((r.observation.as_ranking()?, r.count))).collect()
    }

    /// Concatenation (merging duplicates) of two datasets over one universe.
    pub fn merged(&self, other: &Dataset) -> Result<Dataset> {
        if self.universe != other.universe {
            return domain("cannot merge datasets over different universes");
        }
        let mut d = self.clone();
        for r in &other.records {
            d.push(r.observation.clone(), r.count)?;
        }
        Ok(d)
    }
}
