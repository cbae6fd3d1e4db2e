//! Braid words, move search, skein expansion and the knot-to-number
//! dictionary.
//!
//! Words use the text format `s1 s2^3 s1 s2^-1`: generator `s<i>` with an
//! optional integer exponent, whitespace separated. Closures are always
//! understood; the component count of the closure is the cycle count of the
//! word's permutation, and every move in the search preserves it.

use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::symexpr::Opaque;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BraidError {
    #[error("parse error at token {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("generator index {index} needs at least {index}+1 strands, word has {strands}")]
    IndexOutOfRange { index: u32, strands: u32 },
    #[error("need at least {0} strands")]
    TooFewStrands(u32),
    #[error("skein site {0} is not a positive squared generator")]
    NotASquaredSite(usize),
    #[error("only {available} squared sites available, {requested} requested")]
    TooManySites { available: usize, requested: usize },
    #[error("bad dictionary line {0}: {1}")]
    BadTable(usize, String),
}

/// One braid generator letter with its sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    /// 1-based generator index, crossing strands `index` and `index+1`
    pub index: u32,
    pub positive: bool,
}

/// A word in the braid group on `strands` strands.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BraidWord {
    pub strands: u32,
    pub letters: Vec<Letter>,
}

impl BraidWord {
    pub fn new(strands: u32, letters: Vec<Letter>) -> Result<Self, BraidError> {
        for l in &letters {
            if l.index == 0 || l.index + 1 > strands {
                return Err(BraidError::IndexOutOfRange {
                    index: l.index,
                    strands,
                });
            }
        }
        Ok(BraidWord { strands, letters })
    }

    /// Positive word from (index, exponent) runs.
    pub fn positive(strands: u32, runs: &[(u32, u32)]) -> Result<Self, BraidError> {
        let mut letters = Vec::new();
        for &(index, exp) in runs {
            for _ in 0..exp {
                letters.push(Letter {
                    index,
                    positive: true,
                });
            }
        }
        Self::new(strands, letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.letters.iter().all(|l| l.positive)
    }

    /// The permutation of strand positions induced top to bottom.
    pub fn permutation(&self) -> Vec<u32> {
        let mut perm: Vec<u32> = (0..self.strands).collect();
        for l in &self.letters {
            perm.swap(l.index as usize - 1, l.index as usize);
        }
        perm
    }

    /// Number of components of the closure: cycles of the permutation.
    pub fn closure_components(&self) -> u32 {
        let perm = self.permutation();
        let mut seen = vec![false; perm.len()];
        let mut cycles = 0;
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut at = start;
            while !seen[at] {
                seen[at] = true;
                at = perm[at] as usize;
            }
        }
        cycles
    }

    /// Writhe: signed crossing count.
    pub fn writhe(&self) -> i64 {
        self.letters
            .iter()
            .map(|l| if l.positive { 1 } else { -1 })
            .sum()
    }

    /// The single generator index if the word is a positive power of one
    /// generator, together with the exponent.
    pub fn single_generator(&self) -> Option<(u32, u32)> {
        let first = self.letters.first()?;
        if self
            .letters
            .iter()
            .all(|l| l.positive && l.index == first.index)
        {
            Some((first.index, self.letters.len() as u32))
        } else {
            None
        }
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_word(self))
    }
}

/// Render in the `s1 s2^3` format, collapsing equal adjacent letters.
pub fn format_word(w: &BraidWord) -> String {
    if w.letters.is_empty() {
        return "1".to_string();
    }
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < w.letters.len() {
        let l = w.letters[i];
        let mut run = 1;
        while i + run < w.letters.len() && w.letters[i + run] == l {
            run += 1;
        }
        let exp = if l.positive {
            run as i64
        } else {
            -(run as i64)
        };
        if exp == 1 {
            parts.push(format!("s{}", l.index));
        } else {
            parts.push(format!("s{}^{}", l.index, exp));
        }
        i += run;
    }
    parts.join(" ")
}

/// Parse the `s1 s2^3 s1 s2^-1` format. The strand count is one more than
/// the largest generator index unless `strands` pins it explicitly.
pub fn parse_word(text: &str, strands: Option<u32>) -> Result<BraidWord, BraidError> {
    let mut letters = Vec::new();
    let mut max_index = 1;
    for (pos, token) in text.split_whitespace().enumerate() {
        if token == "1" {
            continue;
        }
        let rest = token.strip_prefix('s').ok_or_else(|| BraidError::Parse {
            pos,
            msg: format!("expected `s<i>`, got `{}`", token),
        })?;
        let (idx_txt, exp_txt) = match rest.split_once('^') {
            Some((i, e)) => (i, Some(e)),
            None => (rest, None),
        };
        let index: u32 = idx_txt.parse().map_err(|_| BraidError::Parse {
            pos,
            msg: format!("bad generator index `{}`", idx_txt),
        })?;
        if index == 0 {
            return Err(BraidError::Parse {
                pos,
                msg: "generator indices start at 1".into(),
            });
        }
        let exp: i64 = match exp_txt {
            Some(e) => e.parse().map_err(|_| BraidError::Parse {
                pos,
                msg: format!("bad exponent `{}`", e),
            })?,
            None => 1,
        };
        if exp == 0 {
            return Err(BraidError::Parse {
                pos,
                msg: "zero exponent".into(),
            });
        }
        max_index = max_index.max(index);
        for _ in 0..exp.unsigned_abs() {
            letters.push(Letter {
                index,
                positive: exp > 0,
            });
        }
    }
    let strands = strands.unwrap_or(max_index + 1);
    BraidWord::new(strands, letters)
}

/// The standard word of the `(p,q)` torus link: `(s1 ... s_{p-1})^q`.
pub fn torus_word(p: u32, q: u32) -> Result<BraidWord, BraidError> {
    if p < 2 {
        return Err(BraidError::TooFewStrands(2));
    }
    let mut letters = Vec::new();
    for _ in 0..q {
        for i in 1..p {
            letters.push(Letter {
                index: i,
                positive: true,
            });
        }
    }
    BraidWord::new(p, letters)
}

/// Block word of the `n`-loop nested ladder: `s1^2 s2^2 ... s_{n-1}^2`.
pub fn ladder_word(n: u32) -> Result<BraidWord, BraidError> {
    if n < 2 {
        return Err(BraidError::TooFewStrands(2));
    }
    let runs: Vec<(u32, u32)> = (1..n).map(|i| (i, 2)).collect();
    BraidWord::positive(n, &runs)
}

/// Word of the `n`-loop crossed (slashed) ladder:
/// `s_{n-1} ... s1  s2 ... s_{n-1}  s1 ... s_{n-2}`.
pub fn crossed_ladder_word(n: u32) -> Result<BraidWord, BraidError> {
    if n < 2 {
        return Err(BraidError::TooFewStrands(2));
    }
    let mut letters = Vec::new();
    for i in (1..n).rev() {
        letters.push(Letter {
            index: i,
            positive: true,
        });
    }
    for i in 2..n {
        letters.push(Letter {
            index: i,
            positive: true,
        });
    }
    for i in 1..n.saturating_sub(1) {
        letters.push(Letter {
            index: i,
            positive: true,
        });
    }
    BraidWord::new(n, letters)
}

/// The three-loop family whose closure skein contains the trefoil:
/// `s1 s2 s1^2 s2 s1`.
pub fn trefoil_family_word() -> BraidWord {
    BraidWord::positive(3, &[(1, 1), (2, 1), (1, 2), (2, 1), (1, 1)]).unwrap()
}

/// The three-braid family `s1 s2^{2a+1} s1 s2^{2b+1}`, `a >= b >= 1`.
pub fn three_braid_family_word(a: u32, b: u32) -> Result<BraidWord, BraidError> {
    if b < 1 || a < b {
        return Err(BraidError::Parse {
            pos: 0,
            msg: "family needs a >= b >= 1".into(),
        });
    }
    BraidWord::positive(3, &[(1, 1), (2, 2 * a + 1), (1, 1), (2, 2 * b + 1)])
}

/// Link-type preserving moves used by the reduction search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// delete adjacent inverse letters at `pos`
    FreeCancel { pos: usize },
    /// `s_i s_{i+1} s_i -> s_{i+1} s_i s_{i+1}` (or the mirrored triple) at `pos`
    BraidRelation { pos: usize },
    /// swap adjacent letters with far-apart indices at `pos`
    FarCommute { pos: usize },
    /// rotate the word left by one letter (Markov conjugation)
    Cyclic,
    /// drop a trailing letter on the top strand that occurs exactly once
    DestabilizeTop,
    /// drop a trailing `s1` letter occurring exactly once, shifting indices
    DestabilizeBottom,
    /// reverse the strand order: `s_i -> s_{n-i}` (conjugation by the
    /// half twist)
    Flip,
}

/// Apply `mv` if legal, returning the moved word.
pub fn apply_move(w: &BraidWord, mv: Move) -> Option<BraidWord> {
    let n = w.strands;
    let letters = &w.letters;
    match mv {
        Move::FreeCancel { pos } => {
            if pos + 1 >= letters.len() {
                return None;
            }
            let (a, b) = (letters[pos], letters[pos + 1]);
            if a.index == b.index && a.positive != b.positive {
                let mut out = letters.clone();
                out.drain(pos..pos + 2);
                Some(BraidWord {
                    strands: n,
                    letters: out,
                })
            } else {
                None
            }
        }
        Move::BraidRelation { pos } => {
            if pos + 2 >= letters.len() {
                return None;
            }
            let (a, b, c) = (letters[pos], letters[pos + 1], letters[pos + 2]);
            let same_sign = a.positive == b.positive && b.positive == c.positive;
            if !same_sign {
                return None;
            }
            if a.index == c.index && (b.index == a.index + 1 || a.index == b.index + 1) {
                let mut out = letters.clone();
                out[pos] = b;
                out[pos + 1] = a;
                out[pos + 2] = b;
                Some(BraidWord {
                    strands: n,
                    letters: out,
                })
            } else {
                None
            }
        }
        Move::FarCommute { pos } => {
            if pos + 1 >= letters.len() {
                return None;
            }
            let (a, b) = (letters[pos], letters[pos + 1]);
            if a.index.abs_diff(b.index) >= 2 {
                let mut out = letters.clone();
                out.swap(pos, pos + 1);
                Some(BraidWord {
                    strands: n,
                    letters: out,
                })
            } else {
                None
            }
        }
        Move::Cyclic => {
            if letters.len() < 2 {
                return None;
            }
            let mut out = letters.clone();
            out.rotate_left(1);
            Some(BraidWord {
                strands: n,
                letters: out,
            })
        }
        Move::DestabilizeTop => {
            let last = *letters.last()?;
            if last.index != n - 1 || n < 2 {
                return None;
            }
            if letters[..letters.len() - 1]
                .iter()
                .any(|l| l.index == n - 1)
            {
                return None;
            }
            Some(BraidWord {
                strands: n - 1,
                letters: letters[..letters.len() - 1].to_vec(),
            })
        }
        Move::DestabilizeBottom => {
            let last = *letters.last()?;
            if last.index != 1 || n < 2 {
                return None;
            }
            if letters[..letters.len() - 1].iter().any(|l| l.index == 1) {
                return None;
            }
            let shifted = letters[..letters.len() - 1]
                .iter()
                .map(|l| Letter {
                    index: l.index - 1,
                    positive: l.positive,
                })
                .collect();
            Some(BraidWord {
                strands: n - 1,
                letters: shifted,
            })
        }
        Move::Flip => {
            if letters.is_empty() {
                return None;
            }
            let flipped = letters
                .iter()
                .map(|l| Letter {
                    index: n - l.index,
                    positive: l.positive,
                })
                .collect();
            Some(BraidWord {
                strands: n,
                letters: flipped,
            })
        }
    }
}

/// One replayable step of a reduction trace: rotate left `pre_rot` times,
/// flip if asked, apply the move, then pass to the canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub pre_rot: usize,
    pub pre_flip: bool,
    pub mv: Move,
}

/// Replay a trace step on a concrete word.
pub fn apply_step(w: &BraidWord, step: &TraceStep) -> Option<BraidWord> {
    let mut at = w.clone();
    for _ in 0..step.pre_rot {
        at = apply_move(&at, Move::Cyclic)?;
    }
    if step.pre_flip {
        at = apply_move(&at, Move::Flip)?;
    }
    Some(canonical_form(&apply_move(&at, step.mv)?))
}

/// Packed word for the search: up to 21 letters, 6 bits each, first letter
/// in the highest occupied bits so that integer comparison of `bits` is
/// lexicographic comparison of letters. Rotation and splicing are plain
/// integer operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Packed {
    strands: u8,
    len: u8,
    bits: u128,
}

const MAX_PACK_LEN: usize = 21;

impl Packed {
    fn shift_of(&self, i: usize) -> usize {
        6 * (self.len as usize - 1 - i)
    }

    fn encode(w: &BraidWord) -> Option<Packed> {
        if w.letters.len() > MAX_PACK_LEN || w.strands > 31 {
            return None;
        }
        let mut p = Packed {
            strands: w.strands as u8,
            len: w.letters.len() as u8,
            bits: 0,
        };
        for (i, l) in w.letters.iter().enumerate() {
            let code = ((l.index as u128) << 1) | (l.positive as u128);
            p.bits |= code << p.shift_of(i);
        }
        Some(p)
    }

    fn decode(&self) -> BraidWord {
        let letters = (0..self.len as usize)
            .map(|i| {
                let (index, positive) = self.letter(i);
                Letter { index, positive }
            })
            .collect();
        BraidWord {
            strands: self.strands as u32,
            letters,
        }
    }

    fn letter(&self, i: usize) -> (u32, bool) {
        let code = (self.bits >> self.shift_of(i)) & 0x3f;
        ((code >> 1) as u32, code & 1 == 1)
    }

    fn set_letter(&mut self, i: usize, index: u32, positive: bool) {
        let shift = self.shift_of(i);
        let code = ((index as u128) << 1) | (positive as u128);
        self.bits = (self.bits & !(0x3fu128 << shift)) | (code << shift);
    }

    /// Move the first letter to the end.
    fn rotate_left(&self) -> Packed {
        if self.len < 2 {
            return *self;
        }
        let top_shift = 6 * (self.len as usize - 1);
        let first = self.bits >> top_shift;
        let rest = self.bits & ((1u128 << top_shift) - 1);
        Packed {
            bits: (rest << 6) | first,
            ..*self
        }
    }

    fn flip(&self) -> Packed {
        let mut out = *self;
        for i in 0..self.len as usize {
            let (idx, pos) = self.letter(i);
            out.set_letter(i, self.strands as u32 - idx, pos);
        }
        out
    }

    /// Remove the letters at `[pos, pos+count)`.
    fn splice_out(&self, pos: usize, count: usize) -> Packed {
        let len = self.len as usize;
        let low_letters = len - pos - count;
        let top = self.bits >> (6 * (len - pos));
        let bottom = if low_letters == 0 {
            0
        } else {
            self.bits & ((1u128 << (6 * low_letters)) - 1)
        };
        Packed {
            strands: self.strands,
            len: (len - count) as u8,
            bits: (top << (6 * low_letters)) | bottom,
        }
    }

    fn rank(&self) -> (u8, u8, u128) {
        (self.len, self.strands, self.bits)
    }
}

/// Canonical representative of a packed word: the rotation/flip variant
/// with the least (length, strands, lexicographic letters) rank.
fn packed_canonical(p: Packed) -> Packed {
    let mut best = p;
    let mut rotated = p;
    let flipped0 = p.flip();
    let mut flipped = flipped0;
    for _ in 0..p.len.max(1) {
        if rotated.bits < best.bits {
            best = rotated;
        }
        if flipped.bits < best.bits {
            best = flipped;
        }
        rotated = rotated.rotate_left();
        flipped = flipped.rotate_left();
    }
    best
}

/// Least rotation/flip variant; conjugation and the half twist never
/// enlarge the search space because states are these classes.
pub fn canonical_form(w: &BraidWord) -> BraidWord {
    match Packed::encode(w) {
        Some(p) => packed_canonical(p).decode(),
        None => {
            // too long to pack: fall back to explicit variants
            let mut best = w.clone();
            let mut rotated = w.clone();
            for _ in 0..w.letters.len().max(1) {
                for cand in [
                    rotated.clone(),
                    apply_move(&rotated, Move::Flip).unwrap_or_else(|| rotated.clone()),
                ] {
                    if (cand.len(), cand.strands, &cand.letters)
                        < (best.len(), best.strands, &best.letters)
                    {
                        best = cand;
                    }
                }
                if let Some(next) = apply_move(&rotated, Move::Cyclic) {
                    rotated = next;
                }
            }
            best
        }
    }
}

/// Neighbor classes of a canonical state. Moves are applied in cyclic
/// windows: a window crossing the seam is the same as the move on a
/// rotated representative, so every conjugate's moves are covered with one
/// pass. Flipped variants contribute nothing new because canonical forms
/// already minimize over the flip.
fn packed_neighbors(p: Packed, out: &mut Vec<(TraceStep, Packed)>) {
    out.clear();
    let len = p.len as usize;
    if len == 0 {
        return;
    }
    // rotate the window to the end of the word, then act there: the
    // recorded step stays replayable with the concrete move set
    let rotated_to_end = |window_end: usize| (window_end + 1) % len;
    for pos in 0..len {
        let a = p.letter(pos);
        let b = p.letter((pos + 1) % len);
        if len >= 2 && a.0 == b.0 && a.1 != b.1 {
            let base = rotate_by(p, rotated_to_end(pos + 1));
            out.push((
                TraceStep {
                    pre_rot: rotated_to_end(pos + 1),
                    pre_flip: false,
                    mv: Move::FreeCancel { pos: len - 2 },
                },
                packed_canonical(base.splice_out(len - 2, 2)),
            ));
        }
        if len >= 2 && a.0.abs_diff(b.0) >= 2 {
            let rot = rotated_to_end(pos + 1);
            let mut next = rotate_by(p, rot);
            next.set_letter(len - 2, b.0, b.1);
            next.set_letter(len - 1, a.0, a.1);
            out.push((
                TraceStep {
                    pre_rot: rot,
                    pre_flip: false,
                    mv: Move::FarCommute { pos: len - 2 },
                },
                packed_canonical(next),
            ));
        }
        if len >= 3 {
            let c = p.letter((pos + 2) % len);
            if a.1 == b.1 && b.1 == c.1 && a.0 == c.0 && a.0.abs_diff(b.0) == 1 {
                let rot = rotated_to_end(pos + 2);
                let mut next = rotate_by(p, rot);
                next.set_letter(len - 3, b.0, b.1);
                next.set_letter(len - 2, a.0, a.1);
                next.set_letter(len - 1, b.0, b.1);
                out.push((
                    TraceStep {
                        pre_rot: rot,
                        pre_flip: false,
                        mv: Move::BraidRelation { pos: len - 3 },
                    },
                    packed_canonical(next),
                ));
            }
        }
    }
    // destabilization: a strand-edge generator occurring exactly once
    if p.strands >= 2 {
        let top = p.strands as u32 - 1;
        for edge_index in [top, 1u32] {
            if top == 0 {
                continue;
            }
            let mut occurrences = (0..len).filter(|&i| p.letter(i).0 == edge_index);
            if let (Some(at), None) = (occurrences.next(), occurrences.next()) {
                let rot = rotated_to_end(at);
                let base = rotate_by(p, rot);
                let mut next = base.splice_out(len - 1, 1);
                next.strands -= 1;
                let mv = if edge_index == top && edge_index != 1 {
                    Move::DestabilizeTop
                } else if edge_index == 1 && edge_index != top {
                    for i in 0..next.len as usize {
                        let (idx, sign) = next.letter(i);
                        next.set_letter(i, idx - 1, sign);
                    }
                    Move::DestabilizeBottom
                } else {
                    // two strands: top and bottom coincide
                    Move::DestabilizeTop
                };
                out.push((
                    TraceStep {
                        pre_rot: rot,
                        pre_flip: false,
                        mv,
                    },
                    packed_canonical(next),
                ));
            }
        }
    }
}

fn rotate_by(p: Packed, k: usize) -> Packed {
    let mut out = p;
    for _ in 0..k {
        out = out.rotate_left();
    }
    out
}

/// Outcome of a bounded reduction search.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// best representative found: minimal (length, strands, lexicographic)
    pub word: BraidWord,
    /// steps from the canonical form of the input to `word`
    pub trace: Vec<TraceStep>,
    /// canonical states explored
    pub explored: usize,
    /// false when the budget ran out before the frontier emptied, or the
    /// word was too long to search at all
    pub complete: bool,
    visited: HashSet<Packed>,
}

impl Reduction {
    /// Whether the class of `other` occurred in the explored orbit.
    pub fn reached(&self, other: &BraidWord) -> bool {
        match Packed::encode(other) {
            Some(p) => self.visited.contains(&packed_canonical(p)),
            None => false,
        }
    }
}

/// Bounded best-first search over canonical word classes. Deterministic:
/// the frontier is ordered by (length, strand count, lexicographic word).
/// The result is always move-equivalent to the input; minimality holds
/// only up to the declared move set and the budget. Words longer than 21
/// letters are not searched and come back unchanged, flagged incomplete.
pub fn reduce_word(w: &BraidWord, budget: usize) -> Reduction {
    use std::cmp::Reverse;
    let Some(start_raw) = Packed::encode(w) else {
        return Reduction {
            word: w.clone(),
            trace: Vec::new(),
            explored: 0,
            complete: false,
            visited: HashSet::new(),
        };
    };
    type Ranked = Reverse<((u8, u8, u128), Packed)>;
    let start = packed_canonical(start_raw);
    let mut heap: BinaryHeap<Ranked> = BinaryHeap::new();
    let mut parents: HashMap<Packed, (Packed, TraceStep)> = HashMap::new();
    let mut visited: HashSet<Packed> = HashSet::new();
    let mut scratch = Vec::new();

    heap.push(Reverse((start.rank(), start)));
    let mut best = start;
    let mut explored = 0usize;
    let mut complete = true;
    while let Some(Reverse((_, current))) = heap.pop() {
        if !visited.insert(current) {
            continue;
        }
        explored += 1;
        if current.rank() < best.rank() {
            best = current;
        }
        if explored >= budget {
            complete = heap.is_empty();
            break;
        }
        packed_neighbors(current, &mut scratch);
        for (step, next) in scratch.drain(..) {
            if !visited.contains(&next) && !parents.contains_key(&next) && next != start {
                parents.insert(next, (current, step));
                heap.push(Reverse((next.rank(), next)));
            }
        }
    }

    let mut trace = Vec::new();
    let mut at = best;
    while at != start {
        let Some((prev, step)) = parents.get(&at).copied() else {
            break;
        };
        trace.push(step);
        at = prev;
    }
    trace.reverse();
    Reduction {
        word: best.decode(),
        trace,
        explored,
        complete,
        visited,
    }
}

/// True when the search from `a` reaches the class of `b` within the
/// budget (sufficient, not necessary, for link equivalence).
pub fn words_connected(a: &BraidWord, b: &BraidWord, budget: usize) -> bool {
    let red = reduce_word(a, budget);
    red.reached(b)
}

/// Skein branch taken at one crossing pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// splitting branch: the squared crossing is removed entirely
    X,
    /// writhe branch: one crossing survives as a curl
    Y,
}

/// One term of a skein expansion: the branch letters in composition order
/// (last skeined site first) and the residual braid word.
#[derive(Debug, Clone)]
pub struct SkeinTerm {
    pub coeff_word: Vec<Branch>,
    pub residue: BraidWord,
}

impl SkeinTerm {
    /// `(-1)^{number of X branches}`, the sign this term carries when the
    /// branch letters are identified with the renormalization operators.
    pub fn sign(&self) -> i32 {
        if self.coeff_word.iter().filter(|b| **b == Branch::X).count() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for SkeinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.coeff_word {
            match b {
                Branch::X => write!(f, "X")?,
                Branch::Y => write!(f, "Y")?,
            }
        }
        write!(f, " . {}", self.residue)
    }
}

/// Positions of positive squared-generator sites `s_i s_i`, left to right,
/// non-overlapping.
pub fn squared_sites(w: &BraidWord) -> Vec<usize> {
    let mut sites = Vec::new();
    let mut i = 0;
    while i + 1 < w.letters.len() {
        let (a, b) = (w.letters[i], w.letters[i + 1]);
        if a == b && a.positive {
            sites.push(i);
            i += 2;
        } else {
            i += 1;
        }
    }
    sites
}

/// Expand the exchange identity at the first `crossings` squared sites:
/// each site `s_i^2` branches into the curl term `Y s_i` and the splitting
/// term `X`. Yields `2^crossings` terms; branch letters are collected with
/// the outermost (last) site first.
pub fn skein_expand(w: &BraidWord, crossings: usize) -> Result<Vec<SkeinTerm>, BraidError> {
    let sites = squared_sites(w);
    if crossings > sites.len() {
        return Err(BraidError::TooManySites {
            available: sites.len(),
            requested: crossings,
        });
    }
    let chosen = &sites[..crossings];
    let mut terms = Vec::with_capacity(1 << crossings);
    for mask in 0u64..(1 << crossings) {
        let mut coeff = Vec::with_capacity(crossings);
        let mut drop = vec![false; w.letters.len()];
        for (site_no, &pos) in chosen.iter().enumerate() {
            let take_y = (mask >> site_no) & 1 == 1;
            coeff.push(if take_y { Branch::Y } else { Branch::X });
            // Y keeps a single curl letter, X removes the pair
            drop[pos + 1] = true;
            drop[pos] = !take_y;
        }
        coeff.reverse();
        let letters = w
            .letters
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop[*i])
            .map(|(_, l)| *l)
            .collect();
        terms.push(SkeinTerm {
            coeff_word: coeff,
            residue: BraidWord {
                strands: w.strands,
                letters,
            },
        });
    }
    Ok(terms)
}

/// Knot-number attached to a dictionary entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KnotNumber {
    /// single zeta value
    Zeta(u32),
    /// an Euler-sum symbol
    Sum(Opaque),
    /// a displayed expression beyond the plain symbols
    Expr(String),
    /// no transcendental content
    Rational,
    /// not identified
    Unknown,
}

impl fmt::Display for KnotNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotNumber::Zeta(s) => write!(f, "zet({})", s),
            KnotNumber::Sum(o) => write!(f, "{}", o),
            KnotNumber::Expr(e) => write!(f, "{}", e),
            KnotNumber::Rational => write!(f, "rational"),
            KnotNumber::Unknown => write!(f, "?"),
        }
    }
}

/// One row of the knot-to-number dictionary.
#[derive(Debug, Clone)]
pub struct KnotEntry {
    pub name: String,
    pub word: BraidWord,
    pub number: KnotNumber,
    pub note: Option<String>,
}

/// The positive-prime-knot table, shipped as a data file.
pub struct KnotTable {
    pub entries: Vec<KnotEntry>,
    pub commentary: Vec<String>,
}

/// Table text shipped with the crate.
pub const KNOT_TABLE_TEXT: &str = include_str!("../data/knot_table.txt");

fn parse_number(text: &str) -> KnotNumber {
    let text = text.trim();
    if text == "?" {
        return KnotNumber::Unknown;
    }
    if text == "rational" {
        return KnotNumber::Rational;
    }
    if let Some(rest) = text.strip_prefix("zet(") {
        if let Some(arg) = rest.strip_suffix(')') {
            if let Ok(s) = arg.parse() {
                return KnotNumber::Zeta(s);
            }
        }
    }
    if let Some(rest) = text.strip_prefix("N(") {
        if let Some(args) = rest.strip_suffix(')') {
            let parsed: Result<Vec<u32>, _> = args.split(',').map(|a| a.trim().parse()).collect();
            if let Ok(args) = parsed {
                return KnotNumber::Sum(Opaque::N(args));
            }
        }
    }
    if let Some(rest) = text.strip_prefix("U(") {
        if let Some(args) = rest.strip_suffix(')') {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() == 2 {
                if let (Ok(a), Ok(b)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
                    return KnotNumber::Sum(Opaque::U(a, b));
                }
            }
        }
    }
    KnotNumber::Expr(text.to_string())
}

impl KnotTable {
    pub fn parse(text: &str) -> Result<KnotTable, BraidError> {
        let mut entries = Vec::new();
        let mut commentary = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                commentary.push(c.trim().to_string());
                continue;
            }
            let parts: Vec<&str> = line.split('|').map(str::trim).collect();
            if parts.len() < 3 {
                return Err(BraidError::BadTable(
                    lineno + 1,
                    "expected `name | word | number [| note]`".into(),
                ));
            }
            let word = parse_word(parts[1], None)
                .map_err(|e| BraidError::BadTable(lineno + 1, e.to_string()))?;
            entries.push(KnotEntry {
                name: parts[0].to_string(),
                word,
                number: parse_number(parts[2]),
                note: parts.get(3).map(|s| s.to_string()),
            });
        }
        Ok(KnotTable {
            entries,
            commentary,
        })
    }

    pub fn builtin() -> KnotTable {
        KnotTable::parse(KNOT_TABLE_TEXT).expect("shipped table parses")
    }

    /// Identify the closure of `w` by bounded move search against the
    /// stored rows plus the single-generator torus family. Ambiguity is
    /// never guessed: an unmatched word comes back as an Unknown entry
    /// carrying its best reduction.
    pub fn lookup(&self, w: &BraidWord, budget: usize) -> KnotEntry {
        let red = reduce_word(w, budget);

        if red.word.is_empty() || red.word.len() == 1 {
            return KnotEntry {
                name: "unknot".into(),
                word: red.word,
                number: KnotNumber::Rational,
                note: Some("no knot, no transcendental".into()),
            };
        }
        if let Some((_, exp)) = red.word.single_generator() {
            if exp >= 3 && exp % 2 == 1 && red.word.strands == 2 {
                return KnotEntry {
                    name: format!("(2,{})", exp),
                    word: red.word,
                    number: KnotNumber::Zeta(exp),
                    note: None,
                };
            }
        }
        for entry in &self.entries {
            if red.reached(&entry.word) {
                return entry.clone();
            }
        }
        KnotEntry {
            name: "unknown".into(),
            word: red.word,
            number: KnotNumber::Unknown,
            note: Some("no dictionary match within budget".into()),
        }
    }
}
