//! Shifts of finite type over a finite alphabet.
//!
//! A shift is presented by a set of forbidden words. Internally every shift is
//! recoded as a first-order chain on admissible blocks of length
//! `max(order - 1, 1)`, where `order` is the (common) length of the forbidden
//! words. Blocks that cannot occur in any bi-infinite sequence are pruned
//! before the mixing check.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use ndarray::Array2;

use crate::error::{Error, Result};

pub type Symbol = u8;
pub type Word = Vec<Symbol>;

/// Default cap on the number of candidate words `|A|^m` an enumeration may touch.
pub const DEFAULT_WORD_CAP: u128 = 1 << 26;

/// Largest alphabet that still renders as single base-36 digits.
pub const MAX_ALPHABET: usize = 36;

const DIGITS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Render a word as a string of base-36 digits.
pub fn render_word(word: &[Symbol]) -> String {
    word.iter().map(|&s| DIGITS[s as usize] as char).collect()
}

/// Parse a base-36 digit string into a word over an alphabet of the given size.
pub fn parse_word(text: &str, alphabet_size: usize) -> Result<Word> {
    text.chars()
        .map(|c| {
            let d = c.to_digit(36).ok_or_else(|| Error::InvalidWord {
                word: text.to_string(),
                reason: format!("{c:?} is not a base-36 digit"),
            })? as usize;
            if d >= alphabet_size {
                return Err(Error::InvalidWord {
                    word: text.to_string(),
                    reason: format!("symbol {d} outside alphabet of size {alphabet_size}"),
                });
            }
            Ok(d as Symbol)
        })
        .collect()
}

/// `base^exp` saturating at `u128::MAX`.
pub(crate) fn saturating_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Calls `f` on every word of length `len` over the alphabet, in lexicographic order.
pub(crate) fn for_each_word(alphabet_size: usize, len: usize, mut f: impl FnMut(&[Symbol])) {
    let mut word = vec![0 as Symbol; len];
    loop {
        f(&word);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if (word[i] as usize) + 1 < alphabet_size {
                word[i] += 1;
                for w in word.iter_mut().skip(i + 1) {
                    *w = 0;
                }
                break;
            }
        }
    }
}

/// A mixing (or, via [`Sft::new_unchecked`], possibly non-mixing) shift of finite type.
#[derive(Clone)]
pub struct Sft {
    alphabet_size: usize,
    order: usize,
    forbidden: BTreeSet<Word>,
    block_len: usize,
    blocks: Vec<Word>,
    block_index: HashMap<Word, usize>,
    transition: Array2<bool>,
    successors: Vec<Vec<usize>>,
    mixing_power: Option<usize>,
}

impl fmt::Debug for Sft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let forbidden: Vec<String> = self.forbidden.iter().map(|w| render_word(w)).collect();
        f.debug_struct("Sft")
            .field("alphabet_size", &self.alphabet_size)
            .field("forbidden", &forbidden)
            .field("block_len", &self.block_len)
            .field("blocks", &self.blocks.len())
            .field("mixing_power", &self.mixing_power)
            .finish()
    }
}

impl PartialEq for Sft {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet_size == other.alphabet_size
            && self.block_len == other.block_len
            && self.blocks == other.blocks
            && self.transition == other.transition
    }
}

impl Sft {
    /// Builds the shift and requires it to be mixing.
    pub fn new(alphabet_size: usize, forbidden: &[Word]) -> Result<Self> {
        let sft = Self::new_unchecked(alphabet_size, forbidden)?;
        match sft.mixing_power {
            Some(_) => Ok(sft),
            None => Err(Error::NotMixing {
                bound: primitivity_bound(sft.num_blocks()),
            }),
        }
    }

    /// Full shift on `alphabet_size` symbols.
    pub fn full_shift(alphabet_size: usize) -> Result<Self> {
        Self::new(alphabet_size, &[])
    }

    /// The golden-mean shift: binary sequences without two consecutive ones.
    pub fn golden_mean() -> Self {
        Self::new(2, &[vec![1, 1]]).expect("golden-mean shift is mixing")
    }

    /// Builds and prunes the shift without requiring it to be mixing.
    pub fn new_unchecked(alphabet_size: usize, forbidden: &[Word]) -> Result<Self> {
        let order = forbidden.iter().map(Vec::len).max().unwrap_or(0);
        Self::build(alphabet_size, forbidden, order)
    }

    /// Parses a shift from base-36 forbidden-word strings.
    pub fn from_strings(alphabet_size: usize, forbidden: &[impl AsRef<str>]) -> Result<Self> {
        let words = forbidden
            .iter()
            .map(|w| parse_word(w.as_ref(), alphabet_size))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet_size, &words)
    }

    /// Re-presents the same shift with forbidden words of length at least `order`,
    /// so that blocks have length `order - 1`.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        let forbidden: Vec<Word> = self.forbidden.iter().cloned().collect();
        let sft = Self::build(self.alphabet_size, &forbidden, order.max(self.order))?;
        if sft.mixing_power.is_none() {
            return Err(Error::NotMixing {
                bound: primitivity_bound(sft.num_blocks()),
            });
        }
        Ok(sft)
    }

    fn build(alphabet_size: usize, forbidden: &[Word], order: usize) -> Result<Self> {
        if !(2..=MAX_ALPHABET).contains(&alphabet_size) {
            return Err(Error::InvalidSft(format!(
                "alphabet size must be in 2..={MAX_ALPHABET}, got {alphabet_size}"
            )));
        }
        for w in forbidden {
            if w.is_empty() {
                return Err(Error::InvalidSft("empty forbidden word".into()));
            }
            if let Some(&s) = w.iter().find(|&&s| s as usize >= alphabet_size) {
                return Err(Error::InvalidWord {
                    word: format!("{w:?}"),
                    reason: format!("symbol {s} outside alphabet of size {alphabet_size}"),
                });
            }
        }
        let forbidden: BTreeSet<Word> = forbidden.iter().cloned().collect();
        let block_len = order.saturating_sub(1).max(1);

        let candidates = saturating_pow(alphabet_size, block_len);
        if candidates > DEFAULT_WORD_CAP {
            return Err(Error::ResourceLimit {
                what: "candidate blocks",
                requested: candidates,
                cap: DEFAULT_WORD_CAP,
            });
        }

        let checker = ForbiddenChecker::new(&forbidden);
        let mut blocks = Vec::new();
        for_each_word(alphabet_size, block_len, |w| {
            if !checker.contains_forbidden(w) {
                blocks.push(w.to_vec());
            }
        });

        // Prune blocks with no predecessor or no successor until nothing changes.
        let mut alive = vec![true; blocks.len()];
        loop {
            let index: HashMap<&[Symbol], usize> = blocks
                .iter()
                .enumerate()
                .filter(|(i, _)| alive[*i])
                .map(|(i, b)| (b.as_slice(), i))
                .collect();
            let mut has_out = vec![false; blocks.len()];
            let mut has_in = vec![false; blocks.len()];
            let mut buf = Vec::with_capacity(block_len + 1);
            for (u, block) in blocks.iter().enumerate() {
                if !alive[u] {
                    continue;
                }
                for a in 0..alphabet_size as Symbol {
                    buf.clear();
                    buf.extend_from_slice(block);
                    buf.push(a);
                    if checker.contains_forbidden(&buf) {
                        continue;
                    }
                    if let Some(&v) = index.get(&buf[1..]) {
                        has_out[u] = true;
                        has_in[v] = true;
                    }
                }
            }
            let mut changed = false;
            for i in 0..blocks.len() {
                if alive[i] && !(has_out[i] && has_in[i]) {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let blocks: Vec<Word> = blocks
            .into_iter()
            .zip(alive)
            .filter_map(|(b, keep)| keep.then_some(b))
            .collect();
        if blocks.is_empty() {
            return Err(Error::EmptyShift);
        }

        let block_index: HashMap<Word, usize> =
            blocks.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        let n = blocks.len();
        let mut transition = Array2::from_elem((n, n), false);
        let mut successors = vec![Vec::new(); n];
        let mut buf = Vec::with_capacity(block_len + 1);
        for (u, block) in blocks.iter().enumerate() {
            for a in 0..alphabet_size as Symbol {
                buf.clear();
                buf.extend_from_slice(block);
                buf.push(a);
                if checker.contains_forbidden(&buf) {
                    continue;
                }
                if let Some(&v) = block_index.get(&buf[1..]) {
                    transition[[u, v]] = true;
                    successors[u].push(v);
                }
            }
        }

        let mut sft = Sft {
            alphabet_size,
            order,
            forbidden,
            block_len,
            blocks,
            block_index,
            transition,
            successors,
            mixing_power: None,
        };
        sft.mixing_power = sft.compute_mixing_power();
        Ok(sft)
    }

    /// Least `N` with every entry of `transition^N` positive, searched up to the
    /// Wielandt bound `B^2 - 2B + 2`.
    fn compute_mixing_power(&self) -> Option<usize> {
        let n = self.num_blocks();
        let words = n.div_ceil(64);
        let row_bits = |row: &[usize]| {
            let mut bits = vec![0u64; words];
            for &j in row {
                bits[j / 64] |= 1 << (j % 64);
            }
            bits
        };
        let adjacency: Vec<Vec<u64>> = self.successors.iter().map(|s| row_bits(s)).collect();
        let full = |bits: &[u64]| {
            (0..n).all(|j| bits[j / 64] & (1 << (j % 64)) != 0)
        };
        let mut power = adjacency.clone();
        for step in 1..=primitivity_bound(n) {
            if power.iter().all(|r| full(r)) {
                return Some(step);
            }
            let next: Vec<Vec<u64>> = power
                .iter()
                .map(|row| {
                    let mut out = vec![0u64; words];
                    for j in 0..n {
                        if row[j / 64] & (1 << (j % 64)) != 0 {
                            for (o, a) in out.iter_mut().zip(&adjacency[j]) {
                                *o |= a;
                            }
                        }
                    }
                    out
                })
                .collect();
            power = next;
        }
        None
    }

    /// Returns whether the shift is mixing, with the least positive power if so.
    pub fn is_mixing(&self) -> (bool, Option<usize>) {
        (self.mixing_power.is_some(), self.mixing_power)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Length of the (longest) forbidden words; zero for the full shift.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn forbidden(&self) -> impl Iterator<Item = &Word> {
        self.forbidden.iter()
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Word] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[Symbol] {
        &self.blocks[i]
    }

    pub fn block_index(&self, block: &[Symbol]) -> Option<usize> {
        self.block_index.get(block).copied()
    }

    /// First symbol of block `i`, i.e. the coordinate `x_k` when the chain sits at block `i` at time `k`.
    pub fn leading_symbol(&self, i: usize) -> Symbol {
        self.blocks[i][0]
    }

    pub fn transition(&self) -> &Array2<bool> {
        &self.transition
    }

    pub fn successors(&self, u: usize) -> &[usize] {
        &self.successors[u]
    }

    /// The `(block_len + 1)`-word spelled by the transition `u -> v`.
    pub fn edge_word(&self, u: usize, v: usize) -> Word {
        let mut w = self.blocks[u].clone();
        w.push(*self.blocks[v].last().expect("blocks are non-empty"));
        w
    }

    /// Sequence of block indices covering `word`, or `None` if the word is not admissible.
    /// Requires `word.len() >= block_len`.
    pub fn block_path(&self, word: &[Symbol]) -> Option<Vec<usize>> {
        if word.len() < self.block_len {
            return None;
        }
        let mut path = Vec::with_capacity(word.len() - self.block_len + 1);
        for window in word.windows(self.block_len) {
            let v = self.block_index(window)?;
            if let Some(&u) = path.last() {
                if !self.transition[[u, v]] {
                    return None;
                }
            }
            path.push(v);
        }
        Some(path)
    }

    /// Whether `word` occurs in some point of the shift.
    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        if word.iter().any(|&s| s as usize >= self.alphabet_size) {
            return false;
        }
        if word.len() >= self.block_len {
            self.block_path(word).is_some()
        } else {
            self.blocks.iter().any(|b| b.starts_with(word))
        }
    }

    /// All admissible words of length `m` in lexicographic order, with the default cap.
    pub fn enumerate_words(&self, m: usize) -> Result<Vec<Word>> {
        self.enumerate_words_capped(m, DEFAULT_WORD_CAP)
    }

    pub fn enumerate_words_capped(&self, m: usize, cap: u128) -> Result<Vec<Word>> {
        if m == 0 {
            return Err(Error::DomainError("word length must be at least 1".into()));
        }
        let requested = saturating_pow(self.alphabet_size, m);
        if requested > cap {
            return Err(Error::ResourceLimit {
                what: "candidate words",
                requested,
                cap,
            });
        }
        if m < self.block_len {
            let set: BTreeSet<Word> = self.blocks.iter().map(|b| b[..m].to_vec()).collect();
            return Ok(set.into_iter().collect());
        }
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(m);
        for u in 0..self.num_blocks() {
            word.clear();
            word.extend_from_slice(&self.blocks[u]);
            self.extend_words(u, m, &mut word, &mut out);
        }
        Ok(out)
    }

    fn extend_words(&self, u: usize, m: usize, word: &mut Word, out: &mut Vec<Word>) {
        if word.len() == m {
            out.push(word.clone());
            return;
        }
        // successors are generated in increasing order of the appended symbol
        for &v in &self.successors[u] {
            word.push(*self.blocks[v].last().unwrap());
            self.extend_words(v, m, word, out);
            word.pop();
        }
    }

    /// Number of admissible words of length `m >= block_len`, by counting block paths.
    pub fn count_words(&self, m: usize) -> u128 {
        if m < self.block_len {
            let set: HashSet<&[Symbol]> = self.blocks.iter().map(|b| &b[..m]).collect();
            return set.len() as u128;
        }
        let mut counts = vec![1u128; self.num_blocks()];
        for _ in self.block_len..m {
            let mut next = vec![0u128; self.num_blocks()];
            for (u, &c) in counts.iter().enumerate() {
                for &v in &self.successors[u] {
                    next[v] = next[v].saturating_add(c);
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |a, &c| a.saturating_add(c))
    }
}

fn primitivity_bound(n: usize) -> usize {
    (n * n).saturating_sub(2 * n) + 2
}

struct ForbiddenChecker<'a> {
    forbidden: &'a BTreeSet<Word>,
    lengths: Vec<usize>,
}

impl<'a> ForbiddenChecker<'a> {
    fn new(forbidden: &'a BTreeSet<Word>) -> Self {
        let lengths: BTreeSet<usize> = forbidden.iter().map(Vec::len).collect();
        Self {
            forbidden,
            lengths: lengths.into_iter().collect(),
        }
    }

    fn contains_forbidden(&self, word: &[Symbol]) -> bool {
        self.lengths.iter().any(|&len| {
            len <= word.len() && word.windows(len).any(|w| self.forbidden.contains(w))
        })
    }
}
