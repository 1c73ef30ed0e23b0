use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

pub type AtomId = usize;

/// A set of true atoms over a fixed universe, stored as a bitset. The
/// fingerprint is derived from the bits only; equality always compares the
/// full bitset.
#[derive(Clone)]
pub struct State {
    bits: Box<[u64]>,
    fingerprint: u64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fingerprint_of(bits: &[u64]) -> u64 {
    bits.iter().enumerate().fold(0x9e37_79b9_7f4a_7c15, |acc, (i, w)| {
        mix(acc ^ mix(*w ^ (i as u64).wrapping_mul(0x2545_f491_4f6c_dd1d)))
    })
}

impl State {
    pub fn empty(atom_count: usize) -> Self {
        Self::from_words(vec![0; atom_count.div_ceil(64).max(1)])
    }

    pub fn from_atoms(atom_count: usize, atoms: impl IntoIterator<Item = AtomId>) -> Self {
        let mut words = vec![0u64; atom_count.div_ceil(64).max(1)];
        for a in atoms {
            debug_assert!(a < atom_count);
            words[a / 64] |= 1 << (a % 64);
        }
        Self::from_words(words)
    }

    fn from_words(words: Vec<u64>) -> Self {
        let fingerprint = fingerprint_of(&words);
        Self { bits: words.into_boxed_slice(), fingerprint }
    }

    #[inline]
    pub fn contains(&self, atom: AtomId) -> bool {
        self.bits
            .get(atom / 64)
            .is_some_and(|w| w & (1 << (atom % 64)) != 0)
    }

    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|&a| self.contains(a))
    }

    pub fn contains_none(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|&a| !self.contains(a))
    }

    /// Applies deletes first, then adds.
    pub fn apply(&self, add: &[AtomId], del: &[AtomId]) -> State {
        let mut words = self.bits.to_vec();
        for &d in del {
            words[d / 64] &= !(1 << (d % 64));
        }
        for &a in add {
            words[a / 64] |= 1 << (a % 64);
        }
        Self::from_words(words)
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| wi * 64 + b)
        })
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint && self.bits == other.bits
    }
}

impl Eq for State {}

impl Hash for State {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.fingerprint);
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits.cmp(&other.bits)
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.atoms()).finish()
    }
}
