use crate::decode::RandomKeyVector;
use crate::solution::Evaluation;

#[derive(Clone, Debug)]
pub struct ArchiveEntry {
    pub keys: RandomKeyVector,
    pub eval: Evaluation,
    /// Decode key of `keys`; two entries never share one.
    pub decode_key: String,
    stamp: u64,
}

/// Elite key vectors ranked best first.
///
/// Equal-quality entries rank newer first. Newcomers whose decode key is
/// already present are dropped, so re-sampling a known packing leaves the
/// archive untouched.
#[derive(Clone, Debug)]
pub struct Archive {
    entries: Vec<ArchiveEntry>,
    capacity: usize,
    next_stamp: u64,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "archive capacity must be positive");
        Archive {
            entries: Vec::with_capacity(capacity),
            capacity,
            next_stamp: 0,
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn best(&self) -> Option<&ArchiveEntry> {
        self.entries.first()
    }

    pub fn contains(&self, decode_key: &str) -> bool {
        self.entries.iter().any(|e| e.decode_key == decode_key)
    }

    /// Merges newcomers, re-ranks and keeps the best `capacity` entries.
    /// Returns how many newcomers were admitted.
    pub fn update(&mut self, newcomers: Vec<(RandomKeyVector, Evaluation, String)>) -> usize {
        let before: Vec<u64> = self.entries.iter().map(|e| e.stamp).collect();
        for (keys, eval, decode_key) in newcomers {
            if self.contains(&decode_key) {
                continue;
            }
            let stamp = self.next_stamp;
            self.next_stamp += 1;
            self.entries.push(ArchiveEntry {
                keys,
                eval,
                decode_key,
                stamp,
            });
        }
        self.rank();
        self.entries.truncate(self.capacity);
        self.entries
            .iter()
            .filter(|e| !before.contains(&e.stamp))
            .count()
    }

    /// Changes the capacity, dropping the worst entries when shrinking.
    pub fn set_capacity(&mut self, capacity: usize) {
        assert!(capacity >= 1, "archive capacity must be positive");
        self.capacity = capacity;
        self.entries.truncate(capacity);
    }

    /// Empties the archive, keeping its capacity.
    pub fn clear(&mut self) {
        self.entries.clear();
    }

    fn rank(&mut self) {
        self.entries
            .sort_by(|a, b| a.eval.cmp_quality(&b.eval).then(b.stamp.cmp(&a.stamp)));
    }
}
