//! Open-addressing index from tag to array position for the fully
//! associative array. Kept as a flat vector so snapshots copy cheaply.

#[derive(Clone, Debug)]
pub(super) struct TagIndex {
    /// `position + 1`, or 0 for an empty slot.
    slots: Vec<u32>,
    shift: u32,
}

impl TagIndex {
    pub(super) fn new(lines: usize) -> Self {
        let cap = (lines.max(1) * 2).next_power_of_two();
        TagIndex {
            slots: vec![0; cap],
            shift: 64 - cap.trailing_zeros(),
        }
    }

    #[inline]
    fn home(&self, tag: u64) -> usize {
        (tag.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> self.shift) as usize
    }

    #[inline]
    fn mask(&self) -> usize {
        self.slots.len() - 1
    }

    pub(super) fn clear(&mut self) {
        self.slots.fill(0);
    }

    pub(super) fn len(&self) -> usize {
        self.slots.iter().filter(|&&s| s != 0).count()
    }

    #[inline]
    pub(super) fn find(&self, tag: u64, lines: &[u64]) -> Option<usize> {
        let mut i = self.home(tag);
        loop {
            match self.slots[i] {
                0 => return None,
                s if lines[s as usize - 1] == tag => return Some(s as usize - 1),
                _ => i = (i + 1) & self.mask(),
            }
        }
    }

    /// Records that `lines[pos]` now holds `tag`. The tag must be absent.
    pub(super) fn insert(&mut self, tag: u64, pos: usize) {
        let mut i = self.home(tag);
        while self.slots[i] != 0 {
            i = (i + 1) & self.mask();
        }
        self.slots[i] = pos as u32 + 1;
    }

    /// Drops `tag`; `lines` must still hold it. Backward-shift deletion.
    pub(super) fn remove(&mut self, tag: u64, lines: &[u64]) {
        let mask = self.mask();
        let mut i = self.home(tag);
        loop {
            match self.slots[i] {
                0 => return,
                s if lines[s as usize - 1] == tag => break,
                _ => i = (i + 1) & mask,
            }
        }
        let mut j = i;
        loop {
            j = (j + 1) & mask;
            let s = self.slots[j];
            if s == 0 {
                break;
            }
            let h = self.home(lines[s as usize - 1]);
            // Move the entry back unless its home lies cyclically in (i, j].
            if (j.wrapping_sub(h) & mask) >= (j.wrapping_sub(i) & mask) {
                self.slots[i] = s;
                i = j;
            }
        }
        self.slots[i] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng;

    #[test]
    fn matches_linear_scan_under_churn() {
        let n = 64;
        let mut lines = vec![u64::MAX; n];
        let mut idx = TagIndex::new(n);
        let mut rng = rng_from(1);
        for _ in 0..20_000 {
            let pos = rng.random_range(0..n);
            if lines[pos] != u64::MAX {
                idx.remove(lines[pos], &lines);
            }
            // Small tag range forces clustering and repeated lookups.
            let tag = loop {
                let t = rng.random_range(0..300u64);
                if !lines.contains(&t) {
                    break t;
                }
            };
            lines[pos] = tag;
            idx.insert(tag, pos);
            for t in 0..300u64 {
                assert_eq!(idx.find(t, &lines), lines.iter().position(|&x| x == t));
            }
        }
        assert_eq!(idx.len(), n);
    }
}
