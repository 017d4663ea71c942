//! The simplicial tree of `F_d ⋊ Z` for the inner automorphism
//! `α(x_i) = x₁ x_i x₁⁻¹`.
//!
//! Vertices are the cosets `w⟨x₁⟩`, written `V(w)` with the representative
//! stripped of trailing `x₁^{±1}`. `V(w)` and `V(w x₁^m x_i^{±1})` are
//! adjacent for every `m` and every `i ≥ 2`, so the tree is locally infinite
//! and every materialization takes an explicit bound.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::morphisms::{Automorphism, LinearFit};
use crate::words::{Letter, ReducedWord};

/// A coset `w⟨x₁⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct CosetVertex {
    representative: ReducedWord,
}

fn is_x1(l: Letter) -> bool {
    l.generator() == 1
}

impl CosetVertex {
    pub fn new(w: &ReducedWord) -> CosetVertex {
        let mut letters = w.letters().to_vec();
        while letters.last().is_some_and(|&l| is_x1(l)) {
            letters.pop();
        }
        CosetVertex {
            representative: ReducedWord::new(w.rank(), letters).expect("prefix of a reduced word"),
        }
    }

    pub fn base(rank: usize) -> CosetVertex {
        CosetVertex {
            representative: ReducedWord::identity(rank),
        }
    }

    pub fn representative(&self) -> &ReducedWord {
        &self.representative
    }

    /// `g · V(u) = V(g u)`.
    pub fn translate(&self, g: &ReducedWord) -> Result<CosetVertex> {
        Ok(CosetVertex::new(&g.multiply(&self.representative)?))
    }
}

impl fmt::Display for CosetVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V({})", self.representative)
    }
}

/// The component of the tree minus `base` containing `V(exit)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Direction {
    pub base: CosetVertex,
    /// `rep(base) · x₁^m · x_i^{±1}`, reduced.
    pub exit: ReducedWord,
}

impl Direction {
    pub fn target(&self) -> CosetVertex {
        CosetVertex::new(&self.exit)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeGeodesic {
    pub vertices: Vec<CosetVertex>,
    /// `exits[j]` leaves `vertices[j]` toward `vertices[j + 1]`.
    pub exits: Vec<ReducedWord>,
}

impl TreeGeodesic {
    pub fn len(&self) -> usize {
        self.exits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exits.is_empty()
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> + '_ {
        self.vertices.iter().zip(&self.exits).map(|(v, e)| Direction {
            base: v.clone(),
            exit: e.clone(),
        })
    }
}

/// Context for the tree of rank `d ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerTree {
    rank: usize,
}

pub fn build_tree(rank: usize) -> Result<InnerTree> {
    InnerTree::new(rank)
}

impl InnerTree {
    pub fn new(rank: usize) -> Result<InnerTree> {
        if rank < 2 {
            return Err(Error::Tree(format!("rank must be at least 2, got {rank}")));
        }
        Ok(InnerTree { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `α(x_i) = x₁ x_i x₁⁻¹`.
    pub fn automorphism(&self) -> Automorphism {
        Automorphism::inner(&ReducedWord::generator(self.rank, 1))
    }

    pub fn vertex(&self, w: &ReducedWord) -> Result<CosetVertex> {
        w.check_rank(self.rank)?;
        Ok(CosetVertex::new(w))
    }

    pub fn parse_vertex(&self, s: &str) -> Result<CosetVertex> {
        self.vertex(&ReducedWord::parse(self.rank, s)?)
    }

    fn check(&self, v: &CosetVertex) -> Result<()> {
        v.representative.check_rank(self.rank)
    }

    /// The isometry `H` of the stable letter: `H(w·P) = α(w)·H(P)` with
    /// `H(V(ε)) = V(ε)`, so `H(V(u)) = V(x₁ u)`.
    pub fn stable_letter(&self, v: &CosetVertex) -> CosetVertex {
        v.translate(&ReducedWord::generator(self.rank, 1))
            .expect("same rank")
    }

    /// Action of `(w, n) ∈ F_d ⋊ Z`: `P ↦ w · Hⁿ(P)`.
    pub fn act(&self, w: &ReducedWord, n: i64, v: &CosetVertex) -> Result<CosetVertex> {
        self.check(v)?;
        let x1 = ReducedWord::generator(self.rank, 1);
        let power = if n >= 0 { x1 } else { x1.invert() };
        let mut g = w.clone();
        for _ in 0..n.unsigned_abs() {
            g.append_reduced(power.letters());
        }
        v.translate(&g)
    }

    /// Neighbours reached with `|m| ≤ max_power` powers of `x₁`.
    pub fn neighbors(&self, v: &CosetVertex, max_power: usize) -> Vec<Direction> {
        let mut out = Vec::new();
        let x1 = Letter::new(1, false);
        for m in -(max_power as i64)..=(max_power as i64) {
            let mut stem = v.representative.clone();
            let l = if m >= 0 { x1 } else { x1.inverse() };
            for _ in 0..m.unsigned_abs() {
                stem.push(l);
            }
            for l in Letter::all(self.rank).filter(|l| !is_x1(*l)) {
                let mut exit = stem.clone();
                exit.push(l);
                out.push(Direction {
                    base: v.clone(),
                    exit,
                });
            }
        }
        out
    }

    /// The unique edge path from `u` to `v`. It follows the letters of
    /// `rep(u)⁻¹ rep(v)` that are not powers of `x₁`.
    pub fn geodesic(&self, u: &CosetVertex, v: &CosetVertex) -> Result<TreeGeodesic> {
        self.check(u)?;
        self.check(v)?;
        let z = u.representative.invert().multiply(&v.representative)?;
        let mut vertices = vec![u.clone()];
        let mut exits = Vec::new();
        let mut g = u.representative.clone();
        for &l in z.letters() {
            g.push(l);
            if !is_x1(l) {
                exits.push(g.clone());
                vertices.push(CosetVertex::new(&g));
            }
        }
        debug_assert_eq!(vertices.last(), Some(v));
        Ok(TreeGeodesic { vertices, exits })
    }

    pub fn distance(&self, u: &CosetVertex, v: &CosetVertex) -> Result<usize> {
        Ok(self.geodesic(u, v)?.len())
    }

    /// Vertices within `radius` of `center`, expanding `|m| ≤ max_power`.
    pub fn ball(
        &self,
        center: &CosetVertex,
        radius: usize,
        max_power: usize,
    ) -> Result<Vec<(CosetVertex, CosetVertex)>> {
        self.check(center)?;
        let mut seen = HashSet::from([center.clone()]);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([(center.clone(), 0usize)]);
        while let Some((v, d)) = queue.pop_front() {
            if d == radius {
                continue;
            }
            for dir in self.neighbors(&v, max_power) {
                let t = dir.target();
                if seen.insert(t.clone()) {
                    edges.push((v.clone(), t.clone()));
                    queue.push_back((t, d + 1));
                }
            }
        }
        Ok(edges)
    }

    /// Graphviz rendering of a materialized ball.
    pub fn ball_to_dot(&self, center: &CosetVertex, radius: usize, max_power: usize) -> Result<String> {
        let edges = self.ball(center, radius, max_power)?;
        let mut out = String::from("graph tree {\n");
        writeln!(out, "  \"{center}\" [shape=box];").expect("string write");
        for (a, b) in edges {
            writeln!(out, "  \"{a}\" -- \"{b}\";").expect("string write");
        }
        out.push_str("}\n");
        Ok(out)
    }
}

/// Breadth-first distance on a materialized ball; an independent check of
/// [`InnerTree::distance`].
pub fn bfs_distance(
    tree: &InnerTree,
    u: &CosetVertex,
    v: &CosetVertex,
    max_radius: usize,
    max_power: usize,
) -> Option<usize> {
    let mut seen = HashSet::from([u.clone()]);
    let mut queue = VecDeque::from([(u.clone(), 0usize)]);
    while let Some((x, d)) = queue.pop_front() {
        if &x == v {
            return Some(d);
        }
        if d == max_radius {
            continue;
        }
        for dir in tree.neighbors(&x, max_power) {
            let t = dir.target();
            if seen.insert(t.clone()) {
                queue.push_back((t, d + 1));
            }
        }
    }
    None
}

/// A point of the completed tree as seen within a horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TreePoint {
    Vertex(CosetVertex),
    /// An end of the tree, known through the geodesic from the base point
    /// that kept growing up to the horizon.
    Ray {
        stable_path: Vec<CosetVertex>,
    },
}

fn common_vertex_prefix(paths: &[Vec<CosetVertex>]) -> usize {
    let Some(first) = paths.first() else {
        return 0;
    };
    (0..first.len())
        .take_while(|&i| paths.iter().all(|p| p.get(i) == Some(&first[i])))
        .count()
}

/// `liminf_Q P_n`: the longest path from `Q` that is eventually contained in
/// every geodesic `[Q, P_n]`.
///
/// With `N = min(len, horizon)` terms, `I_m` is the common part of
/// `[Q, P_n]` for `m ≤ n < N`. The answer is the endpoint of `I_{N/2}` when
/// `I_{N/2} = I_{3N/4}`, and a ray when `|I_{N/4}| < |I_{N/2}| < |I_{3N/4}|`.
pub fn liminf_observers(
    tree: &InnerTree,
    q: &CosetVertex,
    seq: &[CosetVertex],
    horizon: usize,
) -> Result<TreePoint> {
    let n = seq.len().min(horizon);
    if n < 4 {
        return Err(Error::LiminfInconclusive { horizon: n });
    }
    let paths: Vec<Vec<CosetVertex>> = seq[..n]
        .iter()
        .map(|p| tree.geodesic(q, p).map(|g| g.vertices))
        .collect::<Result<_>>()?;
    let stable = |m: usize| common_vertex_prefix(&paths[m..n]);
    let (quarter, half, three) = (stable(n / 4), stable(n / 2), stable(3 * n / 4));
    if half == three {
        return Ok(TreePoint::Vertex(paths[n / 2][half - 1].clone()));
    }
    if quarter < half && half < three {
        return Ok(TreePoint::Ray {
            stable_path: paths[3 * n / 4][..three].to_vec(),
        });
    }
    Err(Error::LiminfInconclusive { horizon: n })
}

/// `v · φ⁻¹(v) ⋯ φ^{1−k}(v)`, built by `σ_{j+1} = v · φ⁻¹(σ_j)`.
pub fn twisted_power(v: &ReducedWord, k: usize, phi: &Automorphism) -> Result<ReducedWord> {
    if k == 0 {
        return Err(Error::InvalidArgument("twisted power needs k ≥ 1".into()));
    }
    v.check_rank(phi.rank())?;
    let mut sigma = v.clone();
    for _ in 1..k {
        sigma = v.multiply(&phi.apply_inverse(&sigma)?)?;
    }
    Ok(sigma)
}

/// The exit elements met along the geodesic from `b1` to `b2`, in both
/// directions, without repetition. Equal endpoints give an empty strip.
pub fn strip_exit_points(
    tree: &InnerTree,
    b1: &TreePoint,
    b2: &TreePoint,
    horizon: usize,
) -> Result<Vec<ReducedWord>> {
    let (TreePoint::Vertex(u), TreePoint::Vertex(v)) = (b1, b2) else {
        return Err(Error::Tree(
            "horizon exceeded: a strip to an end is infinite".into(),
        ));
    };
    if u == v {
        return Ok(Vec::new());
    }
    let forward = tree.geodesic(u, v)?;
    if forward.len() > horizon {
        return Err(Error::Tree(format!(
            "horizon exceeded: endpoints are {} apart, horizon {horizon}",
            forward.len()
        )));
    }
    let backward = tree.geodesic(v, u)?;
    let mut seen = HashSet::new();
    let mut strip = Vec::new();
    for e in forward.exits.into_iter().chain(backward.exits) {
        if seen.insert(e.clone()) {
            strip.push(e);
        }
    }
    Ok(strip)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StripProfile {
    /// `counts[k − 1] = |S ∩ B_k|` for `k = 1..=k_max`.
    pub counts: Vec<usize>,
    /// Least-squares line `A + B·k`.
    pub a: f64,
    pub b: f64,
    /// `max_k (count_k − (A + B·k))`; zero when the counts are exactly linear.
    pub max_residual: f64,
}

impl StripProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{c}", k + 1).expect("string write");
        }
        out
    }

    /// Whether all second differences vanish.
    pub fn is_exactly_linear(&self) -> bool {
        self.counts
            .windows(3)
            .all(|w| w[2] as i64 - 2 * w[1] as i64 + w[0] as i64 == 0)
    }
}

pub fn strip_growth_profile(strip: &[ReducedWord], k_max: usize) -> StripProfile {
    let lengths: BTreeSet<(usize, &ReducedWord)> = strip.iter().map(|w| (w.len(), w)).collect();
    let counts: Vec<usize> = (1..=k_max)
        .map(|k| lengths.iter().filter(|(l, _)| *l <= k).count())
        .collect();
    let ks: Vec<f64> = (1..=k_max).map(|k| k as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let fit = if k_max >= 2 {
        LinearFit::fit(&ks, &ys)
    } else {
        LinearFit {
            slope: 0.0,
            intercept: ys.first().copied().unwrap_or(0.0),
            r_squared: 1.0,
        }
    };
    let max_residual = ks
        .iter()
        .zip(&ys)
        .map(|(k, y)| y - (fit.intercept + fit.slope * k))
        .reduce(f64::max)
        .unwrap_or(0.0);
    StripProfile {
        counts,
        a: fit.intercept,
        b: fit.slope,
        max_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree() -> InnerTree {
        InnerTree::new(3).unwrap()
    }

    fn v(s: &str) -> CosetVertex {
        tree().parse_vertex(s).unwrap()
    }

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(3, s).unwrap()
    }

    #[test]
    fn rank_one_is_rejected() {
        assert!(matches!(build_tree(1), Err(Error::Tree(_))));
    }

    #[test]
    fn canonical_representatives() {
        assert_eq!(v("baaA"), v("b"));
        assert_eq!(v("aab").representative(), &w("aab"));
        assert_eq!(v("bAA").representative(), &w("b"));
        assert_eq!(v("a"), CosetVertex::base(3));
        // x₁ stabilizes the base vertex.
        assert_eq!(
            CosetVertex::base(3).translate(&w("a")).unwrap(),
            CosetVertex::base(3)
        );
    }

    #[test]
    fn geodesic_examples() {
        let t = tree();
        let e = CosetVertex::base(3);
        assert!(t.geodesic(&e, &e).unwrap().is_empty());
        let g = t.geodesic(&e, &v("b")).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.exits, vec![w("b")]);
        let g = t.geodesic(&v("b"), &v("c")).unwrap();
        assert_eq!(g.vertices, vec![v("b"), e.clone(), v("c")]);
        assert_eq!(bfs_distance(&t, &v("b"), &v("c"), 3, 1), Some(2));
    }

    #[test]
    fn geodesics_match_bfs() {
        let t = tree();
        for (a, b) in [("1", "ab"), ("b", "aC"), ("bab", "BA"), ("cAb", "caB")] {
            let (a, b) = (v(a), v(b));
            assert_eq!(
                Some(t.distance(&a, &b).unwrap()),
                bfs_distance(&t, &a, &b, 4, 1),
                "{a} {b}"
            );
        }
    }

    #[test]
    fn edge_stabilizers_are_trivial() {
        let e = CosetVertex::base(3);
        let x2 = v("b");
        for g in crate::words::ball(3, 5).into_iter().skip(1) {
            let fixes = e.translate(&g).unwrap() == e && x2.translate(&g).unwrap() == x2;
            assert!(!fixes, "{g} fixes the edge");
        }
    }

    #[test]
    fn h_relation() {
        let t = tree();
        let alpha = t.automorphism();
        assert_eq!(t.stable_letter(&CosetVertex::base(3)), CosetVertex::base(3));
        for g in crate::words::ball(3, 2) {
            for p in ["1", "b", "aC", "cab"] {
                let p = v(p);
                let lhs = t.stable_letter(&p.translate(&g).unwrap());
                let rhs = t.stable_letter(&p).translate(&alpha.apply(&g).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn liminf_examples() {
        let t = tree();
        let p = v("bc");
        let constant = vec![p.clone(); 16];
        assert_eq!(
            liminf_observers(&t, &CosetVertex::base(3), &constant, 16).unwrap(),
            TreePoint::Vertex(p)
        );

        let turning: Vec<_> = (0..16).map(|n| v(&format!("{}b", "a".repeat(n)))).collect();
        assert_eq!(
            liminf_observers(&t, &v("c"), &turning, 16).unwrap(),
            TreePoint::Vertex(CosetVertex::base(3))
        );

        let marching: Vec<_> = (1..=16).map(|n| v(&"b".repeat(n))).collect();
        match liminf_observers(&t, &CosetVertex::base(3), &marching, 16).unwrap() {
            TreePoint::Ray { stable_path } => {
                // Terms 12..16 are V(x₂^13)..V(x₂^16); they share [V(ε), V(x₂^13)].
                assert_eq!(stable_path.len(), 14);
                assert_eq!(stable_path[13], v(&"b".repeat(13)));
            }
            other => panic!("expected a ray, got {other:?}"),
        }
    }

    #[test]
    fn liminf_needs_enough_terms() {
        let t = tree();
        let seq = vec![v("b"); 3];
        assert!(matches!(
            liminf_observers(&t, &CosetVertex::base(3), &seq, 10),
            Err(Error::LiminfInconclusive { .. })
        ));
        // Alternating between two directions does not settle into a ray.
        let flip: Vec<_> = (0..16)
            .map(|n| if n % 2 == 0 { v(&"b".repeat(n + 1)) } else { v("c") })
            .collect();
        assert_eq!(
            liminf_observers(&t, &CosetVertex::base(3), &flip, 16).unwrap(),
            TreePoint::Vertex(CosetVertex::base(3))
        );
    }

    #[test]
    fn twisted_power_examples() {
        let phi = Automorphism::parse(2, &["a", "ab"], &["a", "Ab"]).unwrap();
        let b = ReducedWord::parse(2, "b").unwrap();
        assert_eq!(twisted_power(&b, 1, &phi).unwrap(), b);
        assert_eq!(
            twisted_power(&b, 2, &phi).unwrap(),
            ReducedWord::parse(2, "bAb").unwrap()
        );
        let a = ReducedWord::parse(2, "a").unwrap();
        assert_eq!(
            twisted_power(&a, 3, &phi).unwrap(),
            ReducedWord::parse(2, "aaa").unwrap()
        );
        assert!(twisted_power(&a, 0, &phi).is_err());
    }

    #[test]
    fn edge_fixers_are_twisted_powers() {
        // (w, k) fixes the edge V(ε)–V(x₂) exactly when w is the twisted power
        // of x₁⁻¹, the F-part of (x₁⁻¹, 1)^k.
        let t = tree();
        let e = CosetVertex::base(3);
        let x2 = v("b");
        let alpha_inv = t.automorphism().inverse();
        let x1_inv = w("A");
        for k in 1..=4i64 {
            let sigma = twisted_power(&x1_inv, k as usize, &alpha_inv).unwrap();
            assert_eq!(sigma, w(&"A".repeat(k as usize)));
            for g in crate::words::ball(3, 4) {
                let fixes = t.act(&g, k, &e).unwrap() == e && t.act(&g, k, &x2).unwrap() == x2;
                assert_eq!(fixes, g == sigma, "w = {g}, k = {k}");
            }
        }
    }

    #[test]
    fn strip_examples() {
        let t = tree();
        let p = |s: &str| TreePoint::Vertex(v(s));
        assert!(strip_exit_points(&t, &p("b"), &p("b"), 10).unwrap().is_empty());
        assert_eq!(
            strip_exit_points(&t, &p("1"), &p("b"), 10).unwrap(),
            vec![w("b"), w("1")]
        );
        let s = strip_exit_points(&t, &p("b"), &p("c"), 10).unwrap();
        assert_eq!(s, vec![w("1"), w("c"), w("b")]);
        assert!(strip_exit_points(&t, &p("bbb"), &p("ccc"), 5).is_err());
        let ray = TreePoint::Ray { stable_path: vec![] };
        assert!(strip_exit_points(&t, &p("b"), &ray, 5).is_err());
    }

    #[test]
    fn axis_strip_grows_linearly() {
        let t = tree();
        let h = 13;
        let b1 = TreePoint::Vertex(v(&"B".repeat(h)));
        let b2 = TreePoint::Vertex(v(&"b".repeat(h)));
        let strip = strip_exit_points(&t, &b1, &b2, 2 * h).unwrap();
        // Oracle: the exit points are exactly x₂^j, |j| ≤ h.
        let mut expected: Vec<ReducedWord> = (0..=h).map(|j| w(&"b".repeat(j))).collect();
        expected.extend((1..=h).map(|j| w(&"B".repeat(j))));
        let got: BTreeSet<_> = strip.iter().cloned().collect();
        assert_eq!(got, expected.into_iter().collect());
        let profile = strip_growth_profile(&strip, 12);
        assert_eq!(profile.counts, (1..=12).map(|k| 2 * k + 1).collect::<Vec<_>>());
        assert!(profile.is_exactly_linear());
        assert!((profile.a - 1.0).abs() < 1e-9 && (profile.b - 2.0).abs() < 1e-9);
        assert!(profile.max_residual.abs() < 1e-9);
        assert!(profile.to_csv().starts_with("k,count\n1,3\n2,5\n"));
    }

    #[test]
    fn degenerate_profiles() {
        let single = strip_growth_profile(&[w("bc")], 5);
        assert_eq!(single.counts, vec![0, 1, 1, 1, 1]);
        let empty = strip_growth_profile(&[], 5);
        assert_eq!(empty.counts, vec![0; 5]);
        assert_eq!(empty.max_residual, 0.0);
    }

    #[test]
    fn dot_export() {
        let dot = tree().ball_to_dot(&CosetVertex::base(3), 1, 0).unwrap();
        assert!(dot.starts_with("graph tree {"));
        assert_eq!(dot.matches("--").count(), 4);
    }
}
