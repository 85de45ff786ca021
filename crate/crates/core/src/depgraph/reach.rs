//! Anti-reachability filters with two generations that relay.
//!
//! Each node keeps the set of transactions that can reach it. In exact mode
//! the set is a bitset indexed by admission slot relative to the
//! generation's base slot; in bloom mode it is a bloom filter over the
//! transaction id. Two generations are kept. The active one answers
//! queries; the other one only collects members admitted after it was last
//! emptied, and takes over once every transaction it does not know about has
//! left the graph.

use serde::{Deserialize, Serialize};

use crate::model::TxnId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachMode {
    Bloom,
    Exact,
}

impl std::str::FromStr for ReachMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bloom" => Ok(ReachMode::Bloom),
            "exact" => Ok(ReachMode::Exact),
            _ => Err(format!("unknown reachability mode `{s}` (expected bloom or exact)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn with_bits(bits: usize) -> Self {
        BitSet {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn insert(&mut self, i: usize) {
        let w = i / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    /// `self |= other`; returns whether any bit changed.
    pub fn union_with(&mut self, other: &BitSet) -> bool {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        let mut changed = 0;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            changed |= *b & !*a;
            *a |= *b;
        }
        changed != 0
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A graph member as seen by the filters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Member {
    pub id: TxnId,
    pub slot: usize,
}

/// Graph-wide filter parameters and the relay window state.
#[derive(Clone, Debug)]
pub struct ReachSpace {
    mode: ReachMode,
    bits: usize,
    hashes: u32,
    seeds: (u64, u64),
    active: usize,
    /// Last formed block when each generation was emptied.
    anchors: [u64; 2],
    /// First admission slot each generation has seen.
    bases: [usize; 2],
}

impl ReachSpace {
    pub fn new(mode: ReachMode, bits: usize, hashes: u32) -> Self {
        ReachSpace {
            mode,
            bits: bits.max(64),
            hashes: hashes.max(1),
            seeds: (0x5151_a1f0_2c3d_9e11, 0xc0ff_ee00_1234_5678),
            active: 0,
            anchors: [0; 2],
            bases: [0; 2],
        }
    }

    pub fn mode(&self) -> ReachMode {
        self.mode
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn anchors(&self) -> (u64, u64) {
        (self.anchors[self.active], self.anchors[1 - self.active])
    }

    /// The standby generation is complete once the earliest block with a
    /// committed node still in the graph lies past its anchor.
    pub fn relay_due(&self, earliest_live_block: u64) -> bool {
        earliest_live_block > self.anchors[1 - self.active]
    }

    /// Swaps generations. The caller must clear generation `retired` in every
    /// live filter. Returns the retired generation.
    pub fn relay(&mut self, last_block: u64, next_slot: usize) -> usize {
        let retired = self.active;
        self.anchors[retired] = last_block;
        self.bases[retired] = next_slot;
        self.active = 1 - retired;
        retired
    }

    fn bloom_positions(&self, id: TxnId) -> impl Iterator<Item = usize> + '_ {
        let h1 = mix(id.0 ^ self.seeds.0);
        let h2 = mix(id.0 ^ self.seeds.1) | 1;
        (0..self.hashes as u64).map(move |i| (h1.wrapping_add(i.wrapping_mul(h2)) % self.bits as u64) as usize)
    }

    fn empty_set(&self) -> BitSet {
        match self.mode {
            ReachMode::Bloom => BitSet::with_bits(self.bits),
            ReachMode::Exact => BitSet::default(),
        }
    }

    fn insert(&self, set: &mut BitSet, gen: usize, m: Member) {
        match self.mode {
            ReachMode::Bloom => self.bloom_positions(m.id).for_each(|p| set.insert(p)),
            ReachMode::Exact => {
                if let Some(i) = m.slot.checked_sub(self.bases[gen]) {
                    set.insert(i);
                }
            }
        }
    }

    fn contains(&self, set: &BitSet, gen: usize, m: Member) -> bool {
        match self.mode {
            ReachMode::Bloom => self.bloom_positions(m.id).all(|p| set.contains(p)),
            ReachMode::Exact => match m.slot.checked_sub(self.bases[gen]) {
                Some(i) => set.contains(i),
                None => false,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachFilter {
    gens: [BitSet; 2],
}

impl ReachFilter {
    /// The filter of a freshly admitted member: just itself.
    pub fn singleton(space: &ReachSpace, m: Member) -> Self {
        let mut f = ReachFilter {
            gens: [space.empty_set(), space.empty_set()],
        };
        for g in 0..2 {
            space.insert(&mut f.gens[g], g, m);
        }
        f
    }

    pub fn contains(&self, space: &ReachSpace, m: Member) -> bool {
        space.contains(&self.gens[space.active], space.active, m)
    }

    /// Merges `other` into `self` in both generations; returns whether
    /// anything changed.
    pub fn union_with(&mut self, other: &ReachFilter) -> bool {
        let a = self.gens[0].union_with(&other.gens[0]);
        let b = self.gens[1].union_with(&other.gens[1]);
        a | b
    }

    pub fn clear_gen(&mut self, gen: usize) {
        self.gens[gen].clear();
    }

    /// Bits set in the active generation.
    pub fn load(&self, space: &ReachSpace) -> usize {
        self.gens[space.active].count_ones()
    }
}
