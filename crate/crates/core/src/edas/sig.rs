//! Histories and sampling for the significance-based cGA.
//!
//! Winner bits arrive one row (all positions) per generation. Positions at
//! frequency 1/2 keep their history densely: rows are buffered in blocks of
//! 64 and transposed into one word per position. Positions at a border only
//! ever test the rare bit value (zeros at `1 - 1/n`, ones at `1/n`), so they
//! keep the row indices of those bits and nothing else.
//!
//! A suffix window's count of a given bit value moves by at most one per
//! append, and only when that value is appended. Each position therefore
//! carries a lower bound on the appends (at 1/2) or rare-bit events (at a
//! border) needed before any window can cross its threshold, plus the row at
//! which the next power-of-two window becomes available, and is rescanned
//! only when one of those is reached. The outcome equals rescanning every
//! window after every append.

use std::collections::{BTreeSet, VecDeque};

use crate::model::BitString;
use crate::stats::RngStream;

/// Significance thresholds for suffix windows of length `len` at frequency `p`:
/// a window is significant for ones when its one-count exceeds
/// `len * p + eps * max(sqrt(len * p * (1 - p) * ln n), ln n)`, and for zeros
/// when its zero-count exceeds the same expression with `1 - p`.
pub fn significance_thresholds(len: u64, p: f64, epsilon: f64, ln_n: f64) -> (f64, f64) {
    let l = len as f64;
    let slack = epsilon * (l * p * (1.0 - p) * ln_n).sqrt().max(ln_n);
    (l * p + slack, l * (1.0 - p) + slack)
}

/// Default history cap: the next power of two at or above
/// `8 * eps^2 * n * ln n`, long enough to resolve a per-bit winner bias of
/// order `1/sqrt(n)` at frequency 1/2.
pub fn default_history_cap(n: usize, epsilon: f64) -> u64 {
    let n_f = n.max(2) as f64;
    let want = (8.0 * epsilon * epsilon * n_f * n_f.ln())
        .ceil()
        .max(1024.0);
    (want as u64).next_power_of_two()
}

/// Direction of a detected significance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Significance {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Level {
    Lower,
    Half,
    Upper,
}

/// Dense history of a position at 1/2, one word per completed block of 64 rows.
#[derive(Clone, Debug, Default, PartialEq)]
struct Dense {
    words: VecDeque<u64>,
    /// Ones in all earlier stored words (running, survives eviction).
    before: VecDeque<u64>,
    total: u64,
    first_block: u64,
}

impl Dense {
    fn push(&mut self, word: u64) {
        self.before.push_back(self.total);
        self.words.push_back(word);
        self.total += u64::from(word.count_ones());
    }

    fn evict_before(&mut self, row: u64) {
        while !self.words.is_empty() && (self.first_block + 1) * 64 <= row {
            self.words.pop_front();
            self.before.pop_front();
            self.first_block += 1;
        }
    }

    /// Ones among stored rows `< row`, up to a constant that cancels in differences.
    fn prefix(&self, row: u64) -> u64 {
        let w = (row / 64 - self.first_block) as usize;
        if w == self.words.len() {
            return self.total;
        }
        let rem = row % 64;
        let partial = if rem == 0 {
            0
        } else {
            (self.words[w] & ((1u64 << rem) - 1)).count_ones()
        };
        self.before[w] + u64::from(partial)
    }
}

/// Per-position histories of the significance-based cGA together with the
/// frequency level of every position.
#[derive(Clone, Debug, PartialEq)]
pub struct SigHistories {
    n: usize,
    epsilon: f64,
    ln_n: f64,
    cap: u64,
    words_per_row: usize,
    /// Rows appended so far.
    rows: u64,
    /// Rows of the current incomplete block.
    pending: Vec<u64>,
    level: Vec<Level>,
    upper_mask: Vec<u64>,
    half_mask: Vec<u64>,
    lower_mask: Vec<u64>,
    upper_list: Vec<u32>,
    lower_list: Vec<u32>,
    /// First row of each position's current history.
    start: Vec<u64>,
    dense: Vec<Dense>,
    /// Border positions: rows holding the rare bit value.
    rare: Vec<VecDeque<u64>>,
    /// Border positions: rare-bit events before the next rescan.
    events_left: Vec<u64>,
    /// Row count at which each position is next rescanned (`u64::MAX`: none).
    due: Vec<u64>,
    queue: BTreeSet<(u64, u32)>,
    ln_keep_upper: f64,
    /// Smallest significant (ones, zeros) counts per level and window exponent.
    needs: [Vec<(u64, u64)>; 3],
}

impl SigHistories {
    pub fn new(n: usize, epsilon: f64) -> Self {
        Self::with_cap(n, epsilon, default_history_cap(n, epsilon))
    }

    /// Windows longer than `cap` are never tested; older rows are dropped.
    pub fn with_cap(n: usize, epsilon: f64, cap: u64) -> Self {
        let words_per_row = n.div_ceil(64);
        let mut half_mask = vec![u64::MAX; words_per_row];
        if n % 64 != 0 {
            half_mask[words_per_row - 1] = (1u64 << (n % 64)) - 1;
        }
        let mut h = SigHistories {
            n,
            epsilon,
            ln_n: (n as f64).ln(),
            cap: cap.max(1),
            words_per_row,
            rows: 0,
            pending: Vec::with_capacity(64 * words_per_row),
            level: vec![Level::Half; n],
            upper_mask: vec![0; words_per_row],
            half_mask,
            lower_mask: vec![0; words_per_row],
            upper_list: Vec::new(),
            lower_list: Vec::new(),
            start: vec![0; n],
            dense: vec![Dense::default(); n],
            rare: vec![VecDeque::new(); n],
            events_left: vec![u64::MAX; n],
            due: vec![u64::MAX; n],
            queue: BTreeSet::new(),
            ln_keep_upper: (1.0 - 1.0 / n as f64).ln(),
            needs: [Vec::new(), Vec::new(), Vec::new()],
        };
        let ln_n = h.ln_n;
        for level in [Level::Lower, Level::Half, Level::Upper] {
            let p = h.level_value(level);
            h.needs[level as usize] = (0..64)
                .map(|k| 1u64 << k)
                .take_while(|&len| len <= h.cap)
                .map(|len| {
                    let (up, down) = significance_thresholds(len, p, epsilon, ln_n);
                    // Counts are integers: exceeding a threshold means reaching floor + 1.
                    (up.floor() as u64 + 1, down.floor() as u64 + 1)
                })
                .collect();
        }
        for i in 0..n {
            h.schedule(i, 1);
        }
        h
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Current history length at position `i`.
    pub fn len(&self, i: usize) -> u64 {
        self.rows - self.start[i]
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn upper(&self) -> f64 {
        1.0 - 1.0 / self.n as f64
    }

    fn lower(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Frequency of position `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        self.level_value(self.level[i])
    }

    fn level_value(&self, level: Level) -> f64 {
        match level {
            Level::Lower => self.lower(),
            Level::Half => 0.5,
            Level::Upper => self.upper(),
        }
    }

    fn schedule(&mut self, i: usize, at: u64) {
        if self.due[i] != u64::MAX {
            self.queue.remove(&(self.due[i], i as u32));
        }
        self.due[i] = at;
        if at != u64::MAX {
            self.queue.insert((at, i as u32));
        }
    }

    /// Samples one offspring as packed words: positions at 1/2 take raw
    /// random bits (one 64-bit draw per word holding any), border positions
    /// take their likely value and are flipped at geometrically distributed
    /// gaps (upper border first, then lower).
    pub fn sample_packed(&self, rng: &mut RngStream, out: &mut Vec<u64>) {
        out.clear();
        for w in 0..self.words_per_row {
            let half = self.half_mask[w];
            let random = if half != 0 { rng.next_u64() & half } else { 0 };
            out.push(self.upper_mask[w] | random);
        }
        for list in [&self.upper_list, &self.lower_list] {
            let mut idx = 0usize;
            loop {
                let u = 1.0 - rng.unit();
                let gap = (u.ln() / self.ln_keep_upper).floor();
                if gap >= (list.len() - idx.min(list.len())) as f64 {
                    break;
                }
                idx += gap as usize;
                let i = list[idx] as usize;
                out[i / 64] ^= 1u64 << (i % 64);
                idx += 1;
            }
        }
    }

    /// Appends the winner's bits and applies the significance rule in place.
    /// Returns the number of positions whose frequency changed.
    pub fn record(&mut self, p: &mut [f64], winner: &BitString) -> usize {
        let row = pack(winner);
        self.record_packed(p, &row)
    }

    /// As [`SigHistories::record`] with the winner as packed words.
    pub fn record_packed(&mut self, p: &mut [f64], row: &[u64]) -> usize {
        debug_assert_eq!(p.len(), self.n);
        let t = self.rows;
        self.pending.extend_from_slice(row);
        self.rows += 1;
        let mut to_scan: Vec<usize> = Vec::new();
        for (w, &word) in row.iter().enumerate().take(self.words_per_row) {
            let mut events = (!word & self.upper_mask[w]) | (word & self.lower_mask[w]);
            while events != 0 {
                let i = w * 64 + events.trailing_zeros() as usize;
                events &= events - 1;
                self.rare[i].push_back(t);
                self.events_left[i] = self.events_left[i].saturating_sub(1);
                if self.events_left[i] == 0 {
                    to_scan.push(i);
                }
            }
        }
        while let Some(&(at, i)) = self.queue.first() {
            if at > self.rows {
                break;
            }
            self.queue.pop_first();
            self.due[i as usize] = u64::MAX;
            to_scan.push(i as usize);
        }
        if self.rows % 64 == 0 {
            self.flush_block();
        }
        to_scan.sort_unstable();
        to_scan.dedup();
        let mut changed = 0;
        for i in to_scan {
            if self.scan(i) {
                p[i] = self.frequency(i);
                changed += 1;
            }
        }
        changed
    }

    fn flush_block(&mut self) {
        let keep_from = self.rows.saturating_sub(self.cap);
        let mut block = [0u64; 64];
        for w in 0..self.words_per_row {
            let half = self.half_mask[w];
            if half == 0 {
                continue;
            }
            for (r, slot) in block.iter_mut().enumerate() {
                *slot = self.pending[r * self.words_per_row + w];
            }
            transpose64(&mut block);
            let mut bits = half;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let d = &mut self.dense[w * 64 + b];
                d.push(block[b]);
                d.evict_before(keep_from);
            }
        }
        self.pending.clear();
    }

    /// Pending (not yet transposed) bits of position `i`, row r at bit r.
    fn pending_column(&self, i: usize) -> u64 {
        let (w, b) = (i / 64, i % 64);
        self.pending
            .chunks_exact(self.words_per_row)
            .enumerate()
            .fold(0u64, |acc, (r, row)| acc | (((row[w] >> b) & 1) << r))
    }

    /// Ones of position `i` among rows `[from, rows)`.
    fn ones_since(&self, i: usize, from: u64, pending: u64) -> u64 {
        match self.level[i] {
            Level::Half => {
                let dense_end = self.rows - self.rows % 64;
                if from >= dense_end {
                    u64::from((pending >> (from - dense_end)).count_ones())
                } else {
                    let d = &self.dense[i];
                    u64::from(pending.count_ones()) + d.total - d.prefix(from)
                }
            }
            Level::Upper => {
                let zeros = self.rare_since(i, from);
                self.rows - from - zeros
            }
            Level::Lower => self.rare_since(i, from),
        }
    }

    fn rare_since(&self, i: usize, from: u64) -> u64 {
        let r = &self.rare[i];
        (r.len() - r.partition_point(|&row| row < from)) as u64
    }

    /// Rescans all windows of position `i`; applies a significance and
    /// returns true, or reschedules and returns false.
    fn scan(&mut self, i: usize) -> bool {
        let rows = self.rows;
        let len_now = rows - self.start[i];
        let avail = len_now.min(self.cap);
        if self.level[i] != Level::Half {
            let keep_from = rows.saturating_sub(self.cap);
            let r = &mut self.rare[i];
            while r.front().is_some_and(|&row| row < keep_from) {
                r.pop_front();
            }
        }
        let pending = if self.level[i] == Level::Half {
            self.pending_column(i)
        } else {
            0
        };
        let needs = &self.needs[self.level[i] as usize];
        let can_up = self.level[i] != Level::Upper;
        let can_down = self.level[i] != Level::Lower;
        let mut wait = u64::MAX;
        let (mut up, mut down) = (false, false);
        let mut len = 1u64;
        let mut k = 0;
        while len <= avail {
            let ones = self.ones_since(i, rows - len, pending);
            let zeros = len - ones;
            let (need_up, need_down) = needs[k];
            k += 1;
            if can_up && need_up <= len {
                if ones >= need_up {
                    up = true;
                } else {
                    wait = wait.min(need_up - ones);
                }
            }
            if can_down && need_down <= len {
                if zeros >= need_down {
                    down = true;
                } else {
                    wait = wait.min(need_down - zeros);
                }
            }
            len <<= 1;
        }
        if up || down {
            self.set_level(i, if up { Level::Upper } else { Level::Lower });
            return true;
        }
        let birth = if len <= self.cap {
            self.start[i] + len
        } else {
            u64::MAX
        };
        match self.level[i] {
            Level::Half => {
                let by_wait = if wait == u64::MAX {
                    u64::MAX
                } else {
                    rows + wait
                };
                self.schedule(i, by_wait.min(birth));
            }
            _ => {
                self.events_left[i] = wait;
                self.schedule(i, birth);
            }
        }
        false
    }

    fn set_level(&mut self, i: usize, level: Level) {
        let (w, bit) = (i / 64, 1u64 << (i % 64));
        for mask in [
            &mut self.upper_mask,
            &mut self.half_mask,
            &mut self.lower_mask,
        ] {
            mask[w] &= !bit;
        }
        match level {
            Level::Upper => self.upper_mask[w] |= bit,
            Level::Lower => self.lower_mask[w] |= bit,
            Level::Half => self.half_mask[w] |= bit,
        }
        self.level[i] = level;
        self.upper_list = (0..self.n)
            .filter(|&j| self.level[j] == Level::Upper)
            .map(|j| j as u32)
            .collect();
        self.lower_list = (0..self.n)
            .filter(|&j| self.level[j] == Level::Lower)
            .map(|j| j as u32)
            .collect();
        self.start[i] = self.rows;
        self.dense[i] = Dense::default();
        self.rare[i].clear();
        self.events_left[i] = u64::MAX;
        self.schedule(i, self.rows + 1);
    }
}

/// Packs a bit string into little-endian words (bit i at word i/64, bit i%64).
pub fn pack(x: &BitString) -> Vec<u64> {
    let mut words = vec![0u64; x.len().div_ceil(64)];
    for (i, &b) in x.as_slice().iter().enumerate() {
        words[i / 64] |= u64::from(b) << (i % 64);
    }
    words
}

/// Byte expansions of every 8-bit pattern, for unpacking.
const EXPAND: [u64; 256] = {
    let mut table = [0u64; 256];
    let mut v = 0;
    while v < 256 {
        let mut k = 0;
        let mut e = 0u64;
        while k < 8 {
            e |= (((v >> k) & 1) as u64) << (8 * k);
            k += 1;
        }
        table[v] = e;
        v += 1;
    }
    table
};

/// Writes packed words into the bytes of `out` (one 0/1 byte per bit).
pub fn unpack_into(words: &[u64], out: &mut [u8]) {
    let mut chunks = out.chunks_exact_mut(8);
    let mut k = 0;
    for chunk in &mut chunks {
        let byte = (words[k / 8] >> (8 * (k % 8))) & 0xFF;
        chunk.copy_from_slice(&EXPAND[byte as usize].to_le_bytes());
        k += 1;
    }
    let base = 8 * k;
    for (j, slot) in chunks.into_remainder().iter_mut().enumerate() {
        let i = base + j;
        *slot = ((words[i / 64] >> (i % 64)) & 1) as u8;
    }
}

/// In-place transpose of a 64x64 bit matrix: bit c of row r moves to bit r of row c.
fn transpose64(a: &mut [u64; 64]) {
    let mut j = 32;
    let mut m: u64 = 0x0000_0000_FFFF_FFFF;
    while j != 0 {
        let mut k = 0;
        while k < 64 {
            let t = ((a[k] >> j) ^ a[k + j]) & m;
            a[k] ^= t << j;
            a[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        m ^= m << j;
    }
}
