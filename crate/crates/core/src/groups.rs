//! Semi-direct products `F_d ⋊_θ P` with `P` free abelian or free.
//!
//! Multiplication convention: `(w₁,p₁)(w₂,p₂) = (w₁ · Θ(p₁)(w₂), p₁p₂)`,
//! where `Θ(p)` composes the generator automorphisms along `p`, so that
//! `Θ(p₁p₂) = Θ(p₁) ∘ Θ(p₂)`. With this convention `t w t⁻¹ = θ(t)(w)`.

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::morphisms::Automorphism;
use crate::words::{Letter, ReducedWord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActingKind {
    /// `Z^k`; `k = 0` gives the free group itself.
    IntLattice(usize),
    /// Free group of rank `k`.
    Free(usize),
}

impl ActingKind {
    pub fn rank(self) -> usize {
        match self {
            ActingKind::IntLattice(k) | ActingKind::Free(k) => k,
        }
    }
}

impl fmt::Display for ActingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActingKind::IntLattice(0) => f.write_str("trivial"),
            ActingKind::IntLattice(1) => f.write_str("Z"),
            ActingKind::IntLattice(k) => write!(f, "Z^{k}"),
            ActingKind::Free(k) => write!(f, "free:{k}"),
        }
    }
}

/// The acting component of an extension element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActingPart {
    Lattice(Vec<i64>),
    Free(ReducedWord),
}

impl ActingPart {
    pub fn identity(kind: ActingKind) -> ActingPart {
        match kind {
            ActingKind::IntLattice(k) => ActingPart::Lattice(vec![0; k]),
            ActingKind::Free(k) => ActingPart::Free(ReducedWord::identity(k)),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            ActingPart::Lattice(v) => v.iter().all(|&x| x == 0),
            ActingPart::Free(w) => w.is_empty(),
        }
    }

    /// `ℓ¹` norm or word length.
    pub fn length(&self) -> usize {
        match self {
            ActingPart::Lattice(v) => v.iter().map(|x| x.unsigned_abs() as usize).sum(),
            ActingPart::Free(w) => w.len(),
        }
    }

    fn matches(&self, kind: ActingKind) -> bool {
        match (self, kind) {
            (ActingPart::Lattice(v), ActingKind::IntLattice(k)) => v.len() == k,
            (ActingPart::Free(w), ActingKind::Free(k)) => w.rank() == k,
            _ => false,
        }
    }

    pub fn multiply(&self, other: &ActingPart) -> Result<ActingPart> {
        match (self, other) {
            (ActingPart::Lattice(a), ActingPart::Lattice(b)) if a.len() == b.len() => {
                Ok(ActingPart::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            (ActingPart::Free(a), ActingPart::Free(b)) => Ok(ActingPart::Free(a.multiply(b)?)),
            _ => Err(Error::KindMismatch(format!(
                "cannot multiply acting parts {self} and {other}"
            ))),
        }
    }

    pub fn inverse(&self) -> ActingPart {
        match self {
            ActingPart::Lattice(v) => ActingPart::Lattice(v.iter().map(|x| -x).collect()),
            ActingPart::Free(w) => ActingPart::Free(w.invert()),
        }
    }

    fn multiply_in_place(&mut self, other: &ActingPart) {
        match (self, other) {
            (ActingPart::Lattice(a), ActingPart::Lattice(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            (ActingPart::Free(a), ActingPart::Free(b)) => a.append_reduced(b.letters()),
            _ => unreachable!("kinds validated on construction"),
        }
    }

    /// Parses `1;-2` style lattice vectors (an empty string for `k = 0`,
    /// `0` as shorthand for the zero vector) or letter-encoded words.
    pub fn parse(kind: ActingKind, s: &str) -> Result<ActingPart> {
        let s = s.trim();
        match kind {
            ActingKind::IntLattice(k) => {
                if s.is_empty() || (s == "0" && k != 1) {
                    return Ok(ActingPart::Lattice(vec![0; k]));
                }
                let v: Vec<i64> = s
                    .split(';')
                    .map(|t| t.trim().parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidArgument(format!("acting part {s:?}: {e}")))?;
                if v.len() != k {
                    return Err(Error::KindMismatch(format!(
                        "acting part {s:?} has {} coordinates, expected {k}",
                        v.len()
                    )));
                }
                Ok(ActingPart::Lattice(v))
            }
            ActingKind::Free(k) => Ok(ActingPart::Free(ReducedWord::parse(k, s)?)),
        }
    }
}

impl fmt::Display for ActingPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActingPart::Lattice(v) => {
                let parts: Vec<String> = v.iter().map(i64::to_string).collect();
                f.write_str(&parts.join(";"))
            }
            ActingPart::Free(w) => write!(f, "{w}"),
        }
    }
}

/// An element `(w, p)` of the extension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtElement {
    pub w: ReducedWord,
    pub p: ActingPart,
}

impl ExtElement {
    /// Gauge length `|w| + |p|`.
    pub fn gauge_length(&self) -> usize {
        self.w.len() + self.p.length()
    }

    pub fn is_identity(&self) -> bool {
        self.w.is_empty() && self.p.is_identity()
    }
}

impl fmt::Display for ExtElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.w, self.p)
    }
}

impl Serialize for ExtElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn gauge_length(g: &ExtElement) -> usize {
    g.gauge_length()
}

/// The acting group `P` with its representation `θ: P → Aut(F_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActingGroup {
    rank: usize,
    kind: ActingKind,
    theta: Vec<Automorphism>,
}

impl ActingGroup {
    pub fn new(rank: usize, kind: ActingKind, theta: Vec<Automorphism>) -> Result<ActingGroup> {
        if theta.len() != kind.rank() {
            return Err(Error::KindMismatch(format!(
                "{kind} needs {} automorphisms, got {}",
                kind.rank(),
                theta.len()
            )));
        }
        for phi in &theta {
            if phi.rank() != rank {
                return Err(Error::RankMismatch {
                    expected: rank,
                    found: phi.rank(),
                });
            }
        }
        if let ActingKind::IntLattice(_) = kind {
            check_commuting(rank, &theta)?;
        }
        Ok(ActingGroup { rank, kind, theta })
    }

    /// `F_d` with trivial acting part.
    pub fn trivial(rank: usize) -> ActingGroup {
        ActingGroup {
            rank,
            kind: ActingKind::IntLattice(0),
            theta: Vec::new(),
        }
    }

    /// Direct product `F_d × P`.
    pub fn direct(rank: usize, kind: ActingKind) -> ActingGroup {
        ActingGroup {
            rank,
            kind,
            theta: vec![Automorphism::identity(rank); kind.rank()],
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kind(&self) -> ActingKind {
        self.kind
    }

    pub fn theta(&self) -> &[Automorphism] {
        &self.theta
    }

    pub fn identity(&self) -> ExtElement {
        ExtElement {
            w: ReducedWord::identity(self.rank),
            p: ActingPart::identity(self.kind),
        }
    }

    pub fn element(&self, w: ReducedWord, p: ActingPart) -> Result<ExtElement> {
        let g = ExtElement { w, p };
        self.check(&g)?;
        Ok(g)
    }

    /// Parses `w` and `p` in their text encodings.
    pub fn parse_element(&self, w: &str, p: &str) -> Result<ExtElement> {
        self.element(
            ReducedWord::parse(self.rank, w)?,
            ActingPart::parse(self.kind, p)?,
        )
    }

    /// `(w, 0)`.
    pub fn free_element(&self, w: ReducedWord) -> Result<ExtElement> {
        self.element(w, ActingPart::identity(self.kind))
    }

    pub fn check(&self, g: &ExtElement) -> Result<()> {
        g.w.check_rank(self.rank)?;
        if !g.p.matches(self.kind) {
            return Err(Error::KindMismatch(format!(
                "acting part {} does not belong to {}",
                g.p, self.kind
            )));
        }
        Ok(())
    }

    /// Acting generator `i` (0-based) raised to `±1`, as an acting part.
    pub fn acting_generator(&self, i: usize, inverse: bool) -> ActingPart {
        match self.kind {
            ActingKind::IntLattice(k) => {
                let mut v = vec![0; k];
                v[i] = if inverse { -1 } else { 1 };
                ActingPart::Lattice(v)
            }
            ActingKind::Free(k) => {
                ActingPart::Free(ReducedWord::new(k, [Letter::new(i + 1, inverse)]).expect("index in range"))
            }
        }
    }

    /// `Θ(p)`, computed without caching.
    pub fn theta_of(&self, p: &ActingPart) -> Result<Automorphism> {
        if !p.matches(self.kind) {
            return Err(Error::KindMismatch(format!("{p} is not in {}", self.kind)));
        }
        Ok(match p {
            ActingPart::Lattice(v) => v
                .iter()
                .zip(&self.theta)
                .fold(Automorphism::identity(self.rank), |acc, (&e, phi)| {
                    acc.compose_unchecked(&phi.power(e))
                }),
            ActingPart::Free(w) => w
                .letters()
                .iter()
                .fold(Automorphism::identity(self.rank), |acc, l| {
                    let phi = &self.theta[l.generator() - 1];
                    if l.is_inverse() {
                        acc.compose_unchecked(&phi.inverse())
                    } else {
                        acc.compose_unchecked(phi)
                    }
                }),
        })
    }

    pub fn ext_multiply(&self, g1: &ExtElement, g2: &ExtElement) -> Result<ExtElement> {
        self.check(g1)?;
        self.check(g2)?;
        let twisted = self.theta_of(&g1.p)?.apply_unchecked(&g2.w);
        Ok(ExtElement {
            w: g1.w.multiply(&twisted)?,
            p: g1.p.multiply(&g2.p)?,
        })
    }

    /// `(w,p)⁻¹ = (Θ(p⁻¹)(w⁻¹), p⁻¹)`.
    pub fn ext_inverse(&self, g: &ExtElement) -> Result<ExtElement> {
        self.check(g)?;
        let p_inv = g.p.inverse();
        let w = self.theta_of(&p_inv)?.apply_unchecked(&g.w.invert());
        Ok(ExtElement { w, p: p_inv })
    }

    pub fn in_sublattice(&self, g: &ExtElement, spec: &SublatticeSpec) -> Result<bool> {
        spec.validate(self.kind)?;
        self.check(g)?;
        Ok(spec.contains(&g.p))
    }

    /// All elements with `|w| + |p| ≤ radius`.
    pub fn ball(&self, radius: usize) -> Vec<ExtElement> {
        let mut out = Vec::new();
        for pr in 0..=radius {
            for p in acting_sphere(self.kind, pr) {
                for w in crate::words::ball(self.rank, radius - pr) {
                    out.push(ExtElement { w, p: p.clone() });
                }
            }
        }
        out
    }
}

fn acting_sphere(kind: ActingKind, radius: usize) -> Vec<ActingPart> {
    match kind {
        ActingKind::Free(k) => crate::words::words_of_length(k, radius)
            .into_iter()
            .map(ActingPart::Free)
            .collect(),
        ActingKind::IntLattice(k) => {
            let mut out = Vec::new();
            let mut cur = vec![0i64; k];
            lattice_sphere(&mut cur, 0, radius as i64, &mut out);
            out.into_iter().map(ActingPart::Lattice).collect()
        }
    }
}

fn lattice_sphere(cur: &mut Vec<i64>, idx: usize, remaining: i64, out: &mut Vec<Vec<i64>>) {
    if idx == cur.len() {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for x in -remaining..=remaining {
        cur[idx] = x;
        lattice_sphere(cur, idx + 1, remaining - x.abs(), out);
    }
    cur[idx] = 0;
}

fn check_commuting(rank: usize, theta: &[Automorphism]) -> Result<()> {
    for i in 0..theta.len() {
        for j in i + 1..theta.len() {
            let ij = theta[i].compose_unchecked(&theta[j]);
            let ji = theta[j].compose_unchecked(&theta[i]);
            for g in 0..rank {
                if ij.images()[g] != ji.images()[g] {
                    return Err(Error::NotCommuting {
                        first: i + 1,
                        second: j + 1,
                        generator: Letter::new(g + 1, false).to_char(),
                    });
                }
            }
        }
    }
    Ok(())
}

pub fn ext_multiply(a: &ActingGroup, g1: &ExtElement, g2: &ExtElement) -> Result<ExtElement> {
    a.ext_multiply(g1, g2)
}

pub fn ext_inverse(a: &ActingGroup, g: &ExtElement) -> Result<ExtElement> {
    a.ext_inverse(g)
}

/// Entries kept before a [`ThetaCache`] is flushed.
const THETA_CACHE_CAPACITY: usize = 1 << 16;

/// Memoized `Θ(p)` for hot loops. Each worker owns one.
#[derive(Debug)]
pub struct ThetaCache<'a> {
    group: &'a ActingGroup,
    table: HashMap<ActingPart, Automorphism>,
}

impl<'a> ThetaCache<'a> {
    pub fn new(group: &'a ActingGroup) -> Self {
        let mut table = HashMap::new();
        table.insert(
            ActingPart::identity(group.kind),
            Automorphism::identity(group.rank),
        );
        ThetaCache { group, table }
    }

    pub fn group(&self) -> &'a ActingGroup {
        self.group
    }

    /// Builds missing entries by peeling one acting generator at a time,
    /// so every new entry costs one composition.
    pub fn get(&mut self, p: &ActingPart) -> &Automorphism {
        if !self.table.contains_key(p) {
            if self.table.len() >= THETA_CACHE_CAPACITY {
                let id = ActingPart::identity(self.group.kind);
                self.table.retain(|q, _| *q == id);
            }
            let mut chain = Vec::new();
            let mut cur = p.clone();
            while !self.table.contains_key(&cur) {
                let (prev, step) = peel(&cur);
                chain.push((cur, step));
                cur = prev;
            }
            while let Some((next, (i, inverse))) = chain.pop() {
                let base = &self.table[&cur];
                let phi = &self.group.theta[i];
                let composed = if inverse {
                    base.compose_unchecked(&phi.inverse())
                } else {
                    base.compose_unchecked(phi)
                };
                self.table.insert(next.clone(), composed);
                cur = next;
            }
        }
        &self.table[p]
    }

    /// `x ← x · h`.
    pub fn multiply_in_place(&mut self, x: &mut ExtElement, h: &ExtElement) {
        if !h.w.is_empty() {
            if x.p.is_identity() {
                x.w.append_reduced(h.w.letters());
            } else {
                let twisted = self.get(&x.p).apply_letters(h.w.letters());
                x.w.append_reduced(twisted.letters());
            }
        }
        x.p.multiply_in_place(&h.p);
    }

    pub fn multiply(&mut self, g1: &ExtElement, g2: &ExtElement) -> ExtElement {
        let mut x = g1.clone();
        self.multiply_in_place(&mut x, g2);
        x
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Splits `p = prev · s` where `s` is a single acting generator `(index, inverse)`.
fn peel(p: &ActingPart) -> (ActingPart, (usize, bool)) {
    match p {
        ActingPart::Lattice(v) => {
            let i = v.iter().rposition(|&x| x != 0).expect("non-identity");
            let mut prev = v.clone();
            let inverse = v[i] < 0;
            prev[i] -= v[i].signum();
            (ActingPart::Lattice(prev), (i, inverse))
        }
        ActingPart::Free(w) => {
            let mut prev = w.clone();
            let l = prev.pop().expect("non-identity");
            (ActingPart::Free(prev), (l.generator() - 1, l.is_inverse()))
        }
    }
}

/// A finite-index subgroup `L` of the acting group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SublatticeSpec {
    /// `p ∈ L` iff `p_i ≡ 0 (mod m_i)` for every coordinate.
    Moduli(Vec<u64>),
    /// Kernel of the map sending acting generator `i` to the permutation
    /// `images[i]` of `0..degree`.
    PermutationKernel { degree: usize, images: Vec<Vec<usize>> },
}

impl SublatticeSpec {
    pub fn validate(&self, kind: ActingKind) -> Result<()> {
        let bad = |s: String| Err(Error::MalformedSublattice(s));
        match (self, kind) {
            (SublatticeSpec::Moduli(m), ActingKind::IntLattice(k)) => {
                if m.len() != k {
                    return bad(format!("{} moduli for a rank-{k} lattice", m.len()));
                }
                if m.contains(&0) {
                    return bad("moduli must be positive".into());
                }
                Ok(())
            }
            (SublatticeSpec::PermutationKernel { degree, images }, ActingKind::Free(k)) => {
                if images.len() != k {
                    return bad(format!("{} permutations for {k} acting generators", images.len()));
                }
                for img in images {
                    let mut seen = vec![false; *degree];
                    if img.len() != *degree {
                        return bad(format!("permutation {img:?} is not of degree {degree}"));
                    }
                    for &x in img {
                        if x >= *degree || std::mem::replace(&mut seen[x], true) {
                            return bad(format!("{img:?} is not a permutation"));
                        }
                    }
                }
                Ok(())
            }
            (spec, kind) => bad(format!("{spec:?} does not apply to {kind}")),
        }
    }

    /// Assumes `validate` passed for the kind of `p`.
    pub fn contains(&self, p: &ActingPart) -> bool {
        match (self, p) {
            (SublatticeSpec::Moduli(m), ActingPart::Lattice(v)) => {
                v.iter().zip(m).all(|(&x, &mi)| x.rem_euclid(mi as i64) == 0)
            }
            (SublatticeSpec::PermutationKernel { degree, images }, ActingPart::Free(w)) => {
                let mut perm: Vec<usize> = (0..*degree).collect();
                for l in w.letters() {
                    let sigma = &images[l.generator() - 1];
                    if l.is_inverse() {
                        let mut inv = vec![0; *degree];
                        for (i, &s) in sigma.iter().enumerate() {
                            inv[s] = i;
                        }
                        perm = perm.iter().map(|&x| inv[x]).collect();
                    } else {
                        perm = perm.iter().map(|&x| sigma[x]).collect();
                    }
                }
                perm.iter().enumerate().all(|(i, &x)| i == x)
            }
            _ => false,
        }
    }
}

pub fn in_sublattice(a: &ActingGroup, g: &ExtElement, spec: &SublatticeSpec) -> Result<bool> {
    a.in_sublattice(g, spec)
}

/// For a representation by inner automorphisms `θ(t_i) = i_{c_i}`, the map
/// `(w, p) ↦ (w · c(p), p)` is an isomorphism onto the direct product
/// `F_d × P`.
#[derive(Clone, Debug)]
pub struct InnerUntwist {
    conjugators: Vec<ReducedWord>,
}

impl InnerUntwist {
    pub fn new(group: &ActingGroup, conjugators: Vec<ReducedWord>) -> Result<InnerUntwist> {
        if conjugators.len() != group.theta.len() {
            return Err(Error::KindMismatch("one conjugator per acting generator".into()));
        }
        for (i, (c, phi)) in conjugators.iter().zip(&group.theta).enumerate() {
            if Automorphism::inner(c).images() != phi.images() {
                return Err(Error::InvalidArgument(format!(
                    "acting generator {} is not conjugation by {c}",
                    i + 1
                )));
            }
        }
        Ok(InnerUntwist { conjugators })
    }

    /// `c(p)`, the conjugator realizing `Θ(p)`.
    pub fn conjugator(&self, p: &ActingPart, rank: usize) -> ReducedWord {
        let mut out = ReducedWord::identity(rank);
        let mut push = |i: usize, inverse: bool| {
            let c = &self.conjugators[i];
            if inverse {
                out.append_reduced(c.invert().letters());
            } else {
                out.append_reduced(c.letters());
            }
        };
        match p {
            ActingPart::Lattice(v) => {
                for (i, &e) in v.iter().enumerate() {
                    for _ in 0..e.unsigned_abs() {
                        push(i, e < 0);
                    }
                }
            }
            ActingPart::Free(w) => {
                for l in w.letters() {
                    push(l.generator() - 1, l.is_inverse());
                }
            }
        }
        out
    }

    pub fn untwist(&self, g: &ExtElement) -> (ReducedWord, ActingPart) {
        let c = self.conjugator(&g.p, g.w.rank());
        let mut w = g.w.clone();
        w.append_reduced(c.letters());
        (w, g.p.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2_z() -> ActingGroup {
        let alpha = Automorphism::parse(2, &["a", "ab"], &["a", "Ab"]).unwrap();
        ActingGroup::new(2, ActingKind::IntLattice(1), vec![alpha]).unwrap()
    }

    fn el(g: &ActingGroup, w: &str, p: &str) -> ExtElement {
        g.parse_element(w, p).unwrap()
    }

    #[test]
    fn ext_multiply_examples() {
        let g = f2_z();
        assert_eq!(
            g.ext_multiply(&el(&g, "a", "1"), &el(&g, "b", "0")).unwrap(),
            el(&g, "aab", "1")
        );
        assert_eq!(
            g.ext_multiply(&el(&g, "1", "1"), &el(&g, "1", "-1")).unwrap(),
            g.identity()
        );
        assert_eq!(
            g.ext_multiply(&el(&g, "ab", "0"), &el(&g, "Ba", "0")).unwrap(),
            el(&g, "aa", "0")
        );
    }

    #[test]
    fn ext_inverse_examples() {
        let g = f2_z();
        let x = el(&g, "b", "1");
        let inv = g.ext_inverse(&x).unwrap();
        assert_eq!(inv, el(&g, "Ba", "-1"));
        assert_eq!(g.ext_multiply(&x, &inv).unwrap(), g.identity());
        assert_eq!(g.ext_inverse(&el(&g, "ab", "0")).unwrap(), el(&g, "BA", "0"));
        assert_eq!(g.ext_inverse(&g.identity()).unwrap(), g.identity());
    }

    #[test]
    fn gauge_examples() {
        let g = f2_z();
        assert_eq!(el(&g, "ab", "2").gauge_length(), 4);
        assert_eq!(g.identity().gauge_length(), 0);
        let z2 = ActingGroup::direct(2, ActingKind::IntLattice(2));
        assert_eq!(el(&z2, "1", "1;-2").gauge_length(), 3);
    }

    #[test]
    fn sublattice_examples() {
        let g = f2_z();
        let even = SublatticeSpec::Moduli(vec![2]);
        assert!(g.in_sublattice(&el(&g, "a", "2"), &even).unwrap());
        assert!(!g.in_sublattice(&el(&g, "a", "1"), &even).unwrap());
        assert!(g.in_sublattice(&g.identity(), &even).unwrap());
        let z2 = ActingGroup::direct(2, ActingKind::IntLattice(2));
        let m = SublatticeSpec::Moduli(vec![2, 3]);
        assert!(z2.in_sublattice(&el(&z2, "ab", "2;3"), &m).unwrap());
        assert!(z2.in_sublattice(&el(&z2, "ab", "-2;-3"), &m).unwrap());
        assert!(!z2.in_sublattice(&el(&z2, "ab", "2;1"), &m).unwrap());
    }

    #[test]
    fn malformed_sublattices() {
        let g = f2_z();
        let x = g.identity();
        assert!(g.in_sublattice(&x, &SublatticeSpec::Moduli(vec![2, 2])).is_err());
        assert!(g.in_sublattice(&x, &SublatticeSpec::Moduli(vec![0])).is_err());
        let free = ActingGroup::direct(2, ActingKind::Free(2));
        let bad = SublatticeSpec::PermutationKernel {
            degree: 2,
            images: vec![vec![0, 0], vec![1, 0]],
        };
        assert!(free.in_sublattice(&free.identity(), &bad).is_err());
    }

    #[test]
    fn permutation_kernel_membership() {
        let free = ActingGroup::direct(2, ActingKind::Free(2));
        // t1 ↦ (0 1 2), t2 ↦ identity on three points.
        let spec = SublatticeSpec::PermutationKernel {
            degree: 3,
            images: vec![vec![1, 2, 0], vec![0, 1, 2]],
        };
        assert!(free.in_sublattice(&el(&free, "1", "aaa"), &spec).unwrap());
        assert!(free.in_sublattice(&el(&free, "1", "aBAb"), &spec).unwrap());
        assert!(free.in_sublattice(&el(&free, "1", "AAA"), &spec).unwrap());
        assert!(!free.in_sublattice(&el(&free, "1", "aa"), &spec).unwrap());
        assert!(free.in_sublattice(&el(&free, "1", "b"), &spec).unwrap());
    }

    #[test]
    fn non_commuting_lattice_is_rejected() {
        let alpha = Automorphism::parse(2, &["a", "ab"], &["a", "Ab"]).unwrap();
        let beta = Automorphism::parse(2, &["ba", "b"], &["Ba", "b"]).unwrap();
        let err = ActingGroup::new(2, ActingKind::IntLattice(2), vec![alpha.clone(), beta.clone()]);
        assert!(matches!(err, Err(Error::NotCommuting { .. })));
        assert!(ActingGroup::new(2, ActingKind::Free(2), vec![alpha, beta]).is_ok());
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let g = f2_z();
        let z2 = ActingGroup::direct(2, ActingKind::IntLattice(2));
        let x = el(&z2, "a", "1;1");
        assert!(g.ext_multiply(&g.identity(), &x).is_err());
        assert!(g.parse_element("a", "1;1").is_err());
    }

    #[test]
    fn theta_cache_agrees_with_direct_computation() {
        let g = f2_z();
        let mut cache = ThetaCache::new(&g);
        for k in [-7i64, -1, 0, 3, 12] {
            let p = ActingPart::Lattice(vec![k]);
            assert_eq!(cache.get(&p), &g.theta_of(&p).unwrap());
        }
        let alpha = Automorphism::parse(3, &["a", "b", "ca"], &["a", "b", "cA"]).unwrap();
        let beta = Automorphism::parse(3, &["a", "b", "cb"], &["a", "b", "cB"]).unwrap();
        let free = ActingGroup::new(3, ActingKind::Free(2), vec![alpha, beta]).unwrap();
        let mut cache = ThetaCache::new(&free);
        for p in ["aBB", "Ab", "ba", "1"] {
            let p = ActingPart::parse(ActingKind::Free(2), p).unwrap();
            assert_eq!(cache.get(&p), &free.theta_of(&p).unwrap());
        }
    }

    #[test]
    fn ball_counts() {
        let g = f2_z();
        // |w| + |p| ≤ 1: identity, four letters, t and t⁻¹.
        assert_eq!(g.ball(1).len(), 7);
        let z2 = ActingGroup::direct(2, ActingKind::IntLattice(2));
        assert_eq!(acting_sphere(ActingKind::IntLattice(2), 2).len(), 8);
        assert_eq!(z2.ball(0).len(), 1);
    }
}
