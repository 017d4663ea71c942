use std::collections::HashMap;

use proptest::prelude::*;
use walkbound::boundary::{
    empirical_hitting_measure, first_return_sampler, kth_return_sampler, CylinderDistribution,
};
use walkbound::fixtures;
use walkbound::harmonic::{poisson_eval, BoundarySamples, CylinderFunction};
use walkbound::morphisms::{classify_growth, Automorphism, GrowthKind};
use walkbound::tree::{liminf_observers, twisted_power, CosetVertex, InnerTree, TreePoint};
use walkbound::walk::total_variation;
use walkbound::{ActingGroup, BoundaryRay, ExtElement, HittingOptions, Letter, ReducedWord, SublatticeSpec};

fn letters(rank: usize, max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((1..=rank, any::<bool>()), 0..=max_len)
        .prop_map(|v| v.into_iter().map(|(g, inv)| Letter::new(g, inv)).collect())
}

fn word(rank: usize, max_len: usize) -> impl Strategy<Value = ReducedWord> {
    letters(rank, max_len).prop_map(move |ls| ReducedWord::new(rank, ls).unwrap())
}

fn nonempty_word(rank: usize, max_len: usize) -> impl Strategy<Value = ReducedWord> {
    word(rank, max_len).prop_filter("non-trivial", |w| !w.is_identity())
}

fn ray(rank: usize) -> impl Strategy<Value = BoundaryRay> {
    (word(rank, 6), nonempty_word(rank, 4)).prop_filter_map("cyclically reduced cycle", |(h, c)| {
        let (core, _) = c.cyclic_reduce();
        BoundaryRay::new(h, core).ok()
    })
}

/// A product of `steps` atoms of the fixture measure, chosen by index.
fn element(f: &fixtures::Fixture, picks: &[usize]) -> ExtElement {
    let atoms = f.measure.atoms();
    picks.iter().fold(f.group.identity(), |x, &i| {
        f.group.ext_multiply(&x, &atoms[i % atoms.len()].0).unwrap()
    })
}

fn picks() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..64, 0..8)
}

fn fixture() -> impl Strategy<Value = fixtures::Fixture> {
    (0..fixtures::NAMES.len()).prop_map(|i| fixtures::by_name(fixtures::NAMES[i]).unwrap())
}

fn automorphisms() -> Vec<Automorphism> {
    let mut out = vec![
        fixtures::linear_automorphism(),
        fixtures::fibonacci_automorphism(),
    ];
    for f in fixtures::all() {
        out.extend(f.group.theta().iter().cloned());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reduction_leaves_no_cancelling_pair(ls in letters(3, 30)) {
        let w = ReducedWord::new(3, ls.clone()).unwrap();
        for pair in w.letters().windows(2) {
            prop_assert_ne!(pair[0].inverse(), pair[1]);
        }
        prop_assert!(w.len() <= ls.len());
        prop_assert_eq!(w.len() % 2, ls.len() % 2);
    }

    #[test]
    fn words_form_a_group(u in word(3, 12), v in word(3, 12), x in word(3, 12)) {
        let e = ReducedWord::identity(3);
        prop_assert_eq!(u.multiply(&v).unwrap().multiply(&x).unwrap(), u.multiply(&v.multiply(&x).unwrap()).unwrap());
        prop_assert_eq!(u.multiply(&e).unwrap(), u.clone());
        prop_assert!(u.multiply(&u.invert()).unwrap().is_identity());
        prop_assert_eq!(u.multiply(&v).unwrap().invert(), v.invert().multiply(&u.invert()).unwrap());
    }

    #[test]
    fn parse_round_trips(w in word(4, 20)) {
        prop_assert_eq!(ReducedWord::parse(4, &w.to_string()).unwrap(), w);
    }

    #[test]
    fn cyclic_reduction_is_a_conjugate(w in word(2, 16)) {
        let (core, conj) = w.cyclic_reduce();
        prop_assert!(core.is_cyclically_reduced());
        let rebuilt = conj.multiply(&core).unwrap().multiply(&conj.invert()).unwrap();
        prop_assert_eq!(rebuilt, w);
    }

    #[test]
    fn automorphisms_are_invertible_homomorphisms(i in 0usize..16, u in word(4, 10), v in word(4, 10)) {
        let all = automorphisms();
        let phi = &all[i % all.len()];
        let r = phi.rank();
        let u = ReducedWord::new(r, u.letters().iter().copied().filter(|l| l.generator() <= r)).unwrap();
        let v = ReducedWord::new(r, v.letters().iter().copied().filter(|l| l.generator() <= r)).unwrap();
        prop_assert_eq!(phi.apply_inverse(&phi.apply(&u).unwrap()).unwrap(), u.clone());
        prop_assert_eq!(
            phi.apply(&u.multiply(&v).unwrap()).unwrap(),
            phi.apply(&u).unwrap().multiply(&phi.apply(&v).unwrap()).unwrap()
        );
        prop_assert_eq!(phi.power(3).apply(&u).unwrap(), phi.apply(&phi.apply(&phi.apply(&u).unwrap()).unwrap()).unwrap());
        prop_assert_eq!(phi.power(-2).apply(&phi.power(2).apply(&u).unwrap()).unwrap(), u);
    }

    #[test]
    fn extension_is_a_group(f in fixture(), a in picks(), b in picks(), c in picks()) {
        let (x, y, z) = (element(&f, &a), element(&f, &b), element(&f, &c));
        let g = &f.group;
        let left = g.ext_multiply(&g.ext_multiply(&x, &y).unwrap(), &z).unwrap();
        let right = g.ext_multiply(&x, &g.ext_multiply(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        let inv = g.ext_inverse(&x).unwrap();
        prop_assert!(g.ext_multiply(&x, &inv).unwrap().is_identity());
        prop_assert!(g.ext_multiply(&inv, &x).unwrap().is_identity());
    }

    #[test]
    fn boundary_apply_is_margin_stable(i in 0usize..16, r in ray(2), depth in 1usize..12) {
        let all: Vec<Automorphism> = automorphisms().into_iter().filter(|a| a.rank() == 2).collect();
        let phi = &all[i % all.len()];
        let exact = phi.apply_ray(&r).unwrap();
        let mut last = None;
        for margin in [0usize, 4, 16, 64] {
            if let Ok(p) = phi.boundary_apply(&r, depth, margin) {
                prop_assert_eq!(&p, &exact.prefix(depth));
                if let Some(prev) = &last {
                    prop_assert_eq!(prev, &p);
                }
                last = Some(p);
            }
        }
        prop_assert!(phi.boundary_apply(&r, depth, 64 + 8 * depth).is_ok());
    }
}

fn srw_samples() -> BoundarySamples {
    BoundarySamples::from_distribution(&CylinderDistribution::simple_random_walk(2, 8))
}

fn cylinder_function() -> impl Strategy<Value = CylinderFunction> {
    prop::collection::vec(-3.0f64..3.0, 36).prop_map(|vals| {
        let words = walkbound::words::words_of_length(2, 3);
        CylinderFunction::new(2, 3, words.into_iter().zip(vals).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn poisson_formula_is_linear_positive_and_bounded(
        f1 in cylinder_function(),
        f2 in cylinder_function(),
        g in word(2, 4),
    ) {
        let group = ActingGroup::trivial(2);
        let samples = srw_samples();
        let g = group.free_element(g).unwrap();
        let v1 = poisson_eval(&group, &f1, &g, &samples).unwrap().value;
        let v2 = poisson_eval(&group, &f2, &g, &samples).unwrap().value;
        let sum = poisson_eval(&group, &f1.add(&f2).unwrap(), &g, &samples).unwrap().value;
        prop_assert!((sum - v1 - v2).abs() < 1e-9);
        prop_assert!(v1.abs() <= f1.sup() + 1e-12);
        let positive = CylinderFunction::from_fn(2, 3, |w| f1.value_on_prefix(w).abs()).unwrap();
        prop_assert!(poisson_eval(&group, &positive, &g, &samples).unwrap().value >= 0.0);
    }

    #[test]
    fn geodesics_are_equivariant(u in word(3, 6), v in word(3, 6), g in word(3, 4), n in -2i64..=2) {
        let t = InnerTree::new(3).unwrap();
        let (u, v) = (CosetVertex::new(&u), CosetVertex::new(&v));
        let geo = t.geodesic(&u, &v).unwrap();
        let moved = t.geodesic(&t.act(&g, n, &u).unwrap(), &t.act(&g, n, &v).unwrap()).unwrap();
        let image: Vec<CosetVertex> = geo.vertices.iter().map(|x| t.act(&g, n, x).unwrap()).collect();
        prop_assert_eq!(moved.vertices, image);
    }

    #[test]
    fn liminf_is_base_independent(q in word(3, 4), tail in word(3, 3), noise in prop::collection::vec(word(3, 5), 6)) {
        let t = InnerTree::new(3).unwrap();
        let q = CosetVertex::new(&q);
        let base = CosetVertex::base(3);
        // Early noise, then a constant tail: converges to that vertex.
        let target = CosetVertex::new(&tail);
        let mut seq: Vec<CosetVertex> = noise.iter().map(CosetVertex::new).collect();
        seq.extend(std::iter::repeat_n(target.clone(), 18));
        prop_assert_eq!(liminf_observers(&t, &q, &seq, 24).unwrap(), TreePoint::Vertex(target));
        // Marching along the x₂-axis: both bases see the same end.
        let marching: Vec<CosetVertex> = (1..=16).map(|n| t.parse_vertex(&"b".repeat(n)).unwrap()).collect();
        let ends: Vec<CosetVertex> = [&q, &base]
            .iter()
            .map(|b| match liminf_observers(&t, b, &marching, 16).unwrap() {
                TreePoint::Ray { stable_path } => stable_path.last().unwrap().clone(),
                TreePoint::Vertex(v) => panic!("expected a ray, got {v}"),
            })
            .collect();
        prop_assert_eq!(&ends[0], &ends[1]);
    }

    #[test]
    fn twisted_powers_satisfy_the_recursion(v in word(2, 6), fib in any::<bool>()) {
        let phi = if fib { fixtures::fibonacci_automorphism() } else { fixtures::linear_automorphism() };
        prop_assert_eq!(twisted_power(&v, 1, &phi).unwrap(), v.clone());
        for k in 1..=10 {
            let next = twisted_power(&v, k + 1, &phi).unwrap();
            let recursion = v.multiply(&phi.apply_inverse(&twisted_power(&v, k, &phi).unwrap()).unwrap()).unwrap();
            prop_assert_eq!(next, recursion);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn growth_is_an_outer_invariant(i in 0usize..4, g in nonempty_word(3, 3)) {
        let ff = fixtures::free_by_free();
        let fib = fixtures::fibonacci_automorphism();
        let phi = match i {
            0 => ff.group.theta()[0].clone(),
            1 => ff.group.theta()[1].clone(),
            2 => fixtures::linear_automorphism(),
            _ => fib,
        };
        let r = phi.rank();
        let g = ReducedWord::new(r, g.letters().iter().copied().filter(|l| l.generator() <= r)).unwrap();
        let base = classify_growth(&phi, 30).unwrap();
        for other in [phi.inverse(), Automorphism::inner(&g).compose(&phi).unwrap()] {
            let rep = classify_growth(&other, 30).unwrap();
            prop_assert_eq!(rep.kind, base.kind);
            if base.kind == GrowthKind::Polynomial {
                prop_assert_eq!(rep.degree_estimate, base.degree_estimate);
            }
        }
    }

    #[test]
    fn first_returns_land_in_the_sublattice(seed in any::<u64>(), modulus in 2u64..5) {
        let f = fixtures::mixed();
        let lattice = SublatticeSpec::Moduli(vec![modulus]);
        let batch = first_return_sampler(&f.group, &f.measure, &lattice, seed, 200, 100_000, 0.0).unwrap();
        for s in &batch.samples {
            prop_assert!(f.group.in_sublattice(&s.position, &lattice).unwrap());
            prop_assert!(s.time >= 1);
        }
    }

    #[test]
    fn cylinder_marginals_are_consistent(counts in prop::collection::vec(0u32..20, 36)) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let words = walkbound::words::words_of_length(2, 3);
        let table: std::collections::BTreeMap<ReducedWord, usize> =
            words.into_iter().zip(counts.iter().map(|&c| c as usize)).collect();
        let d = CylinderDistribution::from_counts(2, 3, table, 0.0).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        for k in 1..=3 {
            let m = d.marginal(k).unwrap();
            prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
            for (w, p) in &m.table {
                let sum: f64 = d.table.iter().filter(|(c, _)| w.is_prefix_of(c)).map(|(_, q)| q).sum();
                prop_assert!((sum - p).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn simple_random_walk_marginals_match() {
    let deep = CylinderDistribution::simple_random_walk(2, 5);
    for k in 1..5 {
        let tv = deep
            .marginal(k)
            .unwrap()
            .total_variation(&CylinderDistribution::simple_random_walk(2, k));
        assert!(tv < 1e-12, "depth {k}: {tv}");
    }
}

/// Strong Markov property at the first return: the second-return position is
/// the product of two independent first-return positions.
#[test]
fn second_return_law_is_a_convolution() {
    let f = fixtures::mixed();
    let lattice = SublatticeSpec::Moduli(vec![2]);
    let n = 40_000;
    let first = first_return_sampler(&f.group, &f.measure, &lattice, 101, n, 100_000, 0.0).unwrap();
    let second = kth_return_sampler(&f.group, &f.measure, &lattice, 202, n, 2, 100_000, 0.0).unwrap();
    let law = |xs: &[walkbound::boundary::FirstReturnSample]| {
        walkbound::walk::empirical_law(xs.iter().map(|s| s.position.clone()))
    };
    let mu0 = law(&first.samples);
    let mut conv: HashMap<ExtElement, f64> = HashMap::new();
    for (x, p) in &mu0 {
        for (y, q) in &mu0 {
            *conv.entry(f.group.ext_multiply(x, y).unwrap()).or_default() += p * q;
        }
    }
    let tv = total_variation(&law(&second.samples), &conv);
    assert!(tv < 0.06, "TV {tv}");
}

/// The hitting measure has no atoms: the heaviest cylinder loses mass with
/// depth.
#[test]
fn heaviest_cylinder_shrinks_with_depth() {
    let f = fixtures::direct_product();
    let mut previous = 1.0;
    for depth in [2, 4, 6] {
        let lam = empirical_hitting_measure(
            &f.group,
            &f.measure,
            9,
            5000,
            1000,
            depth,
            &HittingOptions::new(2),
        )
        .unwrap();
        assert!(
            lam.max_mass() < previous,
            "depth {depth}: {} >= {previous}",
            lam.max_mass()
        );
        previous = lam.max_mass();
    }
    assert!(previous < 0.02, "depth 6 max mass {previous}");
    assert!(CylinderDistribution::simple_random_walk(2, 8).max_mass() < 1e-3);
}
