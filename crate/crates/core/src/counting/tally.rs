use serde::{Deserialize, Serialize};

use super::records::{PulseRecord, IDLER_A, IDLER_B, SIGNAL};

/// Distinct click words for up to four channels.
pub const WORDS: usize = 16;

/// Streaming histogram of click words and of adjacent-pulse word pairs over a
/// contiguous pulse range. Merging two tallies of consecutive ranges equals the
/// tally of the joined range, so blocks can be reduced in any grouping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickTally {
    pub pulses: u64,
    hist: [u64; WORDS],
    adjacent: [[u64; WORDS]; WORDS],
    first: Option<(u64, u32)>,
    last: Option<(u64, u32)>,
}

impl Default for ClickTally {
    fn default() -> Self {
        Self::empty()
    }
}

impl ClickTally {
    /// Identity for [`ClickTally::merge`].
    pub fn empty() -> Self {
        Self {
            pulses: 0,
            hist: [0; WORDS],
            adjacent: [[0; WORDS]; WORDS],
            first: None,
            last: None,
        }
    }

    pub fn with_pulses(pulses: u64) -> Self {
        Self {
            pulses,
            ..Self::empty()
        }
    }

    /// Adds one non-empty pulse; indices must increase.
    #[inline]
    pub fn record(&mut self, pulse_index: u64, word: u32) {
        debug_assert!((word as usize) < WORDS);
        if word == 0 {
            return;
        }
        let w = word as usize & (WORDS - 1);
        self.hist[w] += 1;
        if let Some((pi, pw)) = self.last {
            debug_assert!(pulse_index > pi);
            if pi + 1 == pulse_index {
                self.adjacent[pw as usize][w] += 1;
            }
        } else {
            self.first = Some((pulse_index, word));
        }
        self.last = Some((pulse_index, word));
    }

    pub fn from_records<'a, I>(records: I, pulses: u64) -> Self
    where
        I: IntoIterator<Item = &'a PulseRecord>,
    {
        let mut t = Self::with_pulses(pulses);
        for r in records {
            t.record(r.pulse_index, r.click_word);
        }
        t
    }

    /// Tally of `self`'s range followed by `next`'s range.
    pub fn merge(mut self, next: &ClickTally) -> ClickTally {
        self.pulses += next.pulses;
        for w in 0..WORDS {
            self.hist[w] += next.hist[w];
            for v in 0..WORDS {
                self.adjacent[w][v] += next.adjacent[w][v];
            }
        }
        if let (Some((li, lw)), Some((fi, fw))) = (self.last, next.first) {
            if li + 1 == fi {
                self.adjacent[lw as usize][fw as usize] += 1;
            }
        }
        if self.first.is_none() {
            self.first = next.first;
        }
        if next.last.is_some() {
            self.last = next.last;
        }
        self
    }

    pub fn nonempty_pulses(&self) -> u64 {
        self.hist.iter().sum()
    }

    pub fn word_count(&self, word: u32) -> u64 {
        if word == 0 {
            self.pulses - self.nonempty_pulses()
        } else {
            self.hist[word as usize]
        }
    }

    /// Pulses whose word satisfies `pred`; `pred(0)` is evaluated for empty pulses.
    pub fn count_where(&self, pred: impl Fn(u32) -> bool) -> u64 {
        (0..WORDS as u32).filter(|&w| pred(w)).map(|w| self.word_count(w)).sum()
    }

    /// Pulses containing every channel of `mask`.
    pub fn count_all(&self, mask: u32) -> u64 {
        self.count_where(|w| w & mask == mask)
    }

    /// Pulse pairs `(i, i + 1)` with `start(word_i)` and `stop(word_{i+1})`.
    /// Only meaningful for predicates that reject the empty word.
    pub fn count_adjacent(&self, start: impl Fn(u32) -> bool, stop: impl Fn(u32) -> bool) -> u64 {
        let mut n = 0;
        for a in 1..WORDS as u32 {
            if !start(a) {
                continue;
            }
            for b in 1..WORDS as u32 {
                if stop(b) {
                    n += self.adjacent[a as usize][b as usize];
                }
            }
        }
        n
    }

    /// Coincidences and accidentals where start fires on any of `start_any` and
    /// stop on any of `stop_any`.
    pub fn start_stop(&self, start_any: u32, stop_any: u32) -> (u64, u64) {
        let c = self.count_where(|w| w & start_any != 0 && w & stop_any != 0);
        let a = self.count_adjacent(|w| w & start_any != 0, |w| w & stop_any != 0);
        (c, a)
    }
}

/// The counts entering the purity estimators, in the signal / idler_a /
/// idler_b layout; `fourfold` counts pulses with the four lowest bits set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CoincidenceTally {
    pub c1: u64,
    pub c12: u64,
    pub c13: u64,
    pub c123: u64,
    /// Signal with either idler detector in the same pulse.
    pub coincidences: u64,
    /// Signal in pulse `i`, either idler detector in pulse `i + 1`.
    pub accidental_12: u64,
    pub fourfold: u64,
    pub pulses: u64,
}

impl CoincidenceTally {
    pub fn from_clicks(t: &ClickTally) -> Self {
        let (coincidences, accidental_12) = t.start_stop(SIGNAL, IDLER_A | IDLER_B);
        Self {
            c1: t.count_all(SIGNAL),
            c12: t.count_all(SIGNAL | IDLER_A),
            c13: t.count_all(SIGNAL | IDLER_B),
            c123: t.count_all(SIGNAL | IDLER_A | IDLER_B),
            coincidences,
            accidental_12,
            fourfold: t.count_all(0b1111),
            pulses: t.pulses,
        }
    }

    /// Sum of tallies of disjoint runs (adjacent pairs across runs are not counted).
    pub fn add(&self, o: &CoincidenceTally) -> Self {
        Self {
            c1: self.c1 + o.c1,
            c12: self.c12 + o.c12,
            c13: self.c13 + o.c13,
            c123: self.c123 + o.c123,
            coincidences: self.coincidences + o.coincidences,
            accidental_12: self.accidental_12 + o.accidental_12,
            fourfold: self.fourfold + o.fourfold,
            pulses: self.pulses + o.pulses,
        }
    }
}
