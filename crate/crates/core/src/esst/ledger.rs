use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::frontend::Loc;
use crate::logic::{Formula, Precision};

/// Precisions at three levels: per location, per thread and global.
///
/// The precision reported for a location always includes its thread's
/// precision, so `λ(T) ⊆ λ(l)` holds by construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrecisionLedger {
    locations: Vec<BTreeMap<Loc, Precision>>,
    threads: Vec<Precision>,
    pub global: Precision,
    version: usize,
}

impl PrecisionLedger {
    pub fn new(num_threads: usize) -> Self {
        PrecisionLedger {
            locations: alloc::vec![BTreeMap::new(); num_threads],
            threads: alloc::vec![Precision::new(); num_threads],
            global: Precision::new(),
            version: 0,
        }
    }

    pub fn location(&self, t: usize, l: Loc) -> Precision {
        match self.locations[t].get(&l) {
            Some(p) => p.union(&self.threads[t]),
            None => self.threads[t].clone(),
        }
    }

    pub fn thread(&self, t: usize) -> &Precision {
        &self.threads[t]
    }

    pub fn add_location(&mut self, t: usize, l: Loc, p: Formula) -> bool {
        if self.threads[t].contains(&p) {
            return false;
        }
        let added = self.locations[t].entry(l).or_default().insert(p);
        self.bump(added)
    }

    pub fn add_thread(&mut self, t: usize, p: Formula) -> bool {
        let added = self.threads[t].insert(p);
        self.bump(added)
    }

    pub fn add_global(&mut self, p: Formula) -> bool {
        let added = self.global.insert(p);
        self.bump(added)
    }

    fn bump(&mut self, added: bool) -> bool {
        self.version += usize::from(added);
        added
    }

    /// Counts successful additions; regions computed under an older version
    /// may be coarser than the current precision allows.
    pub fn version(&self) -> usize {
        self.version
    }

    /// Locations with a location-level precision.
    pub fn locations_of(&self, t: usize) -> impl Iterator<Item = Loc> + '_ {
        self.locations[t].keys().copied()
    }

    /// Number of distinct predicates anywhere in the ledger.
    pub fn predicates_total(&self) -> usize {
        let mut all: BTreeSet<&Formula> = self.global.iter().collect();
        for t in &self.threads {
            all.extend(t.iter());
        }
        for m in &self.locations {
            for p in m.values() {
                all.extend(p.iter());
            }
        }
        all.len()
    }

    pub fn invariant_holds(&self) -> bool {
        (0..self.threads.len())
            .all(|t| self.locations[t].keys().all(|&l| self.threads[t].is_subset(&self.location(t, l))))
    }
}
