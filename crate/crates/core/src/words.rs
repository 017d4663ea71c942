//! Reduced words in a free group of run-time rank, and eventually periodic
//! boundary rays.
//!
//! Text encoding: `a`..`z` are the generators `x1`..`x26`, `A`..`Z` their
//! inverses, and the empty word is written `1`. A ray is written
//! `head(cycle)`, e.g. `B(a)` for `b^-1 a a a ...`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest rank expressible in the letter encoding.
pub const MAX_RANK: usize = 26;

/// A generator or the inverse of a generator. Stored as a signed,
/// 1-based generator index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(i8);

impl Letter {
    /// `generator` is 1-based.
    pub fn new(generator: usize, inverse: bool) -> Letter {
        assert!(
            (1..=MAX_RANK).contains(&generator),
            "generator index {generator} out of range"
        );
        let g = generator as i8;
        Letter(if inverse { -g } else { g })
    }

    pub fn generator(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    #[inline]
    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + (self.generator() as u8 - 1)) as char
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a'..='z' => Some(Letter::new((c as u8 - b'a') as usize + 1, false)),
            'A'..='Z' => Some(Letter::new((c as u8 - b'A') as usize + 1, true)),
            _ => None,
        }
    }

    /// All `2 * rank` letters, ordered `a, A, b, B, ...`.
    pub fn all(rank: usize) -> impl Iterator<Item = Letter> {
        (1..=rank).flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A freely reduced word over `rank` generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord {
    rank: usize,
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn identity(rank: usize) -> ReducedWord {
        assert!(rank <= MAX_RANK, "rank {rank} exceeds {MAX_RANK}");
        ReducedWord {
            rank,
            letters: Vec::new(),
        }
    }

    pub fn generator(rank: usize, generator: usize) -> ReducedWord {
        ReducedWord {
            rank,
            letters: vec![Letter::new(generator, false)],
        }
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn new(rank: usize, letters: impl IntoIterator<Item = Letter>) -> Result<ReducedWord> {
        let mut w = ReducedWord::identity(rank);
        for l in letters {
            if l.generator() > rank {
                return Err(Error::InvalidWord {
                    input: l.to_string(),
                    reason: format!("generator outside rank {rank}"),
                });
            }
            w.push(l);
        }
        Ok(w)
    }

    /// Parses the letter encoding. Non-reduced input is reduced.
    pub fn parse(rank: usize, s: &str) -> Result<ReducedWord> {
        let s = s.trim();
        if rank > MAX_RANK {
            return Err(Error::InvalidWord {
                input: s.to_string(),
                reason: format!("rank {rank} exceeds {MAX_RANK}"),
            });
        }
        if s == "1" || s.is_empty() {
            return Ok(ReducedWord::identity(rank));
        }
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = Letter::from_char(c).ok_or_else(|| Error::InvalidWord {
                input: s.to_string(),
                reason: format!("unexpected character {c:?}"),
            })?;
            letters.push(l);
        }
        ReducedWord::new(rank, letters).map_err(|_| Error::InvalidWord {
            input: s.to_string(),
            reason: format!("generator outside rank {rank}"),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    /// Appends a letter, cancelling against the last one if needed.
    #[inline]
    pub fn push(&mut self, l: Letter) {
        debug_assert!(l.generator() <= self.rank);
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub(crate) fn pop(&mut self) -> Option<Letter> {
        self.letters.pop()
    }

    /// Right-multiplies in place by an already reduced letter sequence.
    pub fn append_reduced(&mut self, letters: &[Letter]) {
        let mut k = 0;
        while k < letters.len() && self.letters.last() == Some(&letters[k].inverse()) {
            self.letters.pop();
            k += 1;
        }
        self.letters.extend_from_slice(&letters[k..]);
    }

    pub fn check_rank(&self, rank: usize) -> Result<()> {
        if self.rank == rank {
            Ok(())
        } else {
            Err(Error::RankMismatch {
                expected: rank,
                found: self.rank,
            })
        }
    }

    /// Reduced form of `self · other`.
    pub fn multiply(&self, other: &ReducedWord) -> Result<ReducedWord> {
        other.check_rank(self.rank)?;
        let mut out = self.clone();
        out.append_reduced(&other.letters);
        Ok(out)
    }

    pub fn invert(&self) -> ReducedWord {
        ReducedWord {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.first(), self.last()) {
            (Some(f), Some(l)) => self.len() == 1 || f != l.inverse(),
            _ => true,
        }
    }

    /// Returns `(core, conjugator)` with `self = conjugator · core · conjugator⁻¹`
    /// and `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (ReducedWord, ReducedWord) {
        let n = self.letters.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == self.letters[n - 1 - k].inverse() {
            k += 1;
        }
        let core = ReducedWord {
            rank: self.rank,
            letters: self.letters[k..n - k].to_vec(),
        };
        let conjugator = ReducedWord {
            rank: self.rank,
            letters: self.letters[..k].to_vec(),
        };
        (core, conjugator)
    }

    /// Length of the cyclically reduced core.
    pub fn cyclic_length(&self) -> usize {
        self.cyclic_reduce().0.len()
    }

    /// First `k` letters (all of them if shorter).
    pub fn prefix(&self, k: usize) -> ReducedWord {
        ReducedWord {
            rank: self.rank,
            letters: self.letters[..k.min(self.len())].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &ReducedWord) -> bool {
        other.letters.starts_with(&self.letters)
    }

    pub(crate) fn from_reduced_unchecked(rank: usize, letters: Vec<Letter>) -> ReducedWord {
        debug_assert!(letters.windows(2).all(|p| p[0] != p[1].inverse()));
        ReducedWord { rank, letters }
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl Serialize for ReducedWord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for BoundaryRay {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn multiply(u: &ReducedWord, v: &ReducedWord) -> Result<ReducedWord> {
    u.multiply(v)
}

pub fn invert(w: &ReducedWord) -> ReducedWord {
    w.invert()
}

pub fn cyclic_reduce(w: &ReducedWord) -> (ReducedWord, ReducedWord) {
    w.cyclic_reduce()
}

pub fn common_prefix_length(u: &ReducedWord, v: &ReducedWord) -> usize {
    u.letters
        .iter()
        .zip(&v.letters)
        .take_while(|(a, b)| a == b)
        .count()
}

/// An eventually periodic boundary point `head · cycle · cycle · …`.
///
/// Kept in normal form: `cycle` is primitive and `head` is as short as
/// possible, so structural equality is equality of rays.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryRay {
    head: ReducedWord,
    cycle: ReducedWord,
}

impl BoundaryRay {
    pub fn new(head: ReducedWord, cycle: ReducedWord) -> Result<BoundaryRay> {
        let input = format!("{head}({cycle})");
        let invalid = |reason: &str| Error::InvalidRay {
            input: input.clone(),
            reason: reason.to_string(),
        };
        cycle.check_rank(head.rank())?;
        if cycle.is_empty() {
            return Err(invalid("cycle must be nonempty"));
        }
        if !cycle.is_cyclically_reduced() {
            return Err(invalid("cycle must be cyclically reduced"));
        }
        if let (Some(h), Some(c)) = (head.last(), cycle.first()) {
            if h == c.inverse() {
                return Err(invalid("head cancels against the cycle"));
            }
        }
        Ok(BoundaryRay::normalized(head, cycle))
    }

    /// Ray of `prefix · cycle^∞` after cancelling across the junction.
    /// `cycle` must be nonempty and cyclically reduced.
    pub fn from_parts(mut prefix: ReducedWord, cycle: ReducedWord) -> BoundaryRay {
        assert!(!cycle.is_empty() && cycle.is_cyclically_reduced());
        let mut cyc = cycle.letters;
        while let Some(l) = prefix.last() {
            if l == cyc[0].inverse() {
                prefix.pop();
                cyc.rotate_left(1);
            } else {
                break;
            }
        }
        let cycle = ReducedWord::from_reduced_unchecked(prefix.rank(), cyc);
        BoundaryRay::normalized(prefix, cycle)
    }

    /// The ray `w^∞` for a nonempty word, i.e. the attracting fixed point of `w`.
    pub fn power_of(w: &ReducedWord) -> Result<BoundaryRay> {
        if w.is_empty() {
            return Err(Error::InvalidRay {
                input: w.to_string(),
                reason: "the identity has no attracting point".into(),
            });
        }
        let (core, conj) = w.cyclic_reduce();
        Ok(BoundaryRay::from_parts(conj, core))
    }

    fn normalized(mut head: ReducedWord, cycle: ReducedWord) -> BoundaryRay {
        let mut cyc = cycle.letters;
        let n = cyc.len();
        if let Some(p) = (1..=n).find(|&p| n.is_multiple_of(p) && (p..n).all(|i| cyc[i] == cyc[i - p])) {
            cyc.truncate(p);
        }
        while head.last().is_some() && head.last() == cyc.last().copied() {
            head.pop();
            cyc.rotate_right(1);
        }
        let cycle = ReducedWord::from_reduced_unchecked(head.rank(), cyc);
        BoundaryRay { head, cycle }
    }

    /// Parses `head(cycle)`; `(cycle)` alone means an empty head.
    pub fn parse(rank: usize, s: &str) -> Result<BoundaryRay> {
        let s = s.trim();
        let invalid = |reason: &str| Error::InvalidRay {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let open = s.find('(').ok_or_else(|| invalid("expected head(cycle)"))?;
        if !s.ends_with(')') {
            return Err(invalid("expected head(cycle)"));
        }
        let head = ReducedWord::parse(rank, &s[..open])?;
        let cycle = ReducedWord::parse(rank, &s[open + 1..s.len() - 1])?;
        BoundaryRay::new(head, cycle).map_err(|e| match e {
            Error::InvalidRay { reason, .. } => invalid(&reason),
            other => other,
        })
    }

    pub fn rank(&self) -> usize {
        self.head.rank()
    }

    pub fn head(&self) -> &ReducedWord {
        &self.head
    }

    pub fn cycle(&self) -> &ReducedWord {
        &self.cycle
    }

    #[inline]
    pub fn letter(&self, i: usize) -> Letter {
        let h = self.head.len();
        if i < h {
            self.head.letters[i]
        } else {
            self.cycle.letters[(i - h) % self.cycle.len()]
        }
    }

    /// First `k` letters of the infinite word.
    pub fn prefix(&self, k: usize) -> ReducedWord {
        ReducedWord::from_reduced_unchecked(self.rank(), (0..k).map(|i| self.letter(i)).collect())
    }

    /// The ray `w · self`.
    pub fn left_multiply(&self, w: &ReducedWord) -> BoundaryRay {
        let mut prefix = w.clone();
        prefix.append_reduced(&self.head.letters);
        BoundaryRay::from_parts(prefix, self.cycle.clone())
    }

    /// Length of the common prefix of the ray and a finite word.
    pub fn common_prefix_length_with_word(&self, w: &ReducedWord) -> usize {
        w.letters
            .iter()
            .enumerate()
            .take_while(|&(i, l)| self.letter(i) == *l)
            .count()
    }

    /// Length of the common prefix of two rays, capped at `cap`.
    pub fn common_prefix_length(&self, other: &BoundaryRay, cap: usize) -> usize {
        (0..cap)
            .take_while(|&i| self.letter(i) == other.letter(i))
            .count()
    }
}

impl fmt::Display for BoundaryRay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.head.is_empty() {
            write!(f, "{}", self.head)?;
        }
        write!(f, "({})", self.cycle)
    }
}

pub fn ray_prefix(r: &BoundaryRay, k: usize) -> ReducedWord {
    r.prefix(k)
}

/// All reduced words of length exactly `len`, in lexicographic letter order.
pub fn words_of_length(rank: usize, len: usize) -> Vec<ReducedWord> {
    let mut layer = vec![ReducedWord::identity(rank)];
    for _ in 0..len {
        let mut next = Vec::with_capacity(layer.len() * (2 * rank).saturating_sub(1).max(1));
        for w in &layer {
            for l in Letter::all(rank) {
                if w.last() != Some(l.inverse()) {
                    let mut v = w.clone();
                    v.letters.push(l);
                    next.push(v);
                }
            }
        }
        layer = next;
    }
    layer
}

/// All reduced words of length at most `radius`.
pub fn ball(rank: usize, radius: usize) -> Vec<ReducedWord> {
    (0..=radius).flat_map(|k| words_of_length(rank, k)).collect()
}
