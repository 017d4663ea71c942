//! Built-in groups and step measures used by the tests and the CLI.

use crate::error::Result;
use crate::groups::{ActingGroup, ActingKind, ExtElement};
use crate::morphisms::Automorphism;
use crate::walk::{GenerationCheck, StepMeasure};
use crate::words::{Letter, ReducedWord};

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub group: ActingGroup,
    pub measure: StepMeasure,
}

pub const NAMES: [&str; 7] = [
    "srw-f2",
    "linear",
    "mixed",
    "direct-product",
    "free-by-free",
    "free-by-z2",
    "fibonacci",
];

/// The free letters `x_i^{±1}` together with every acting generator and its
/// inverse, each with weight `1/(2d + 2k)`.
fn generator_measure(group: &ActingGroup, check: GenerationCheck) -> Result<StepMeasure> {
    let mut support: Vec<ExtElement> = Letter::all(group.rank())
        .map(|l| group.free_element(ReducedWord::new(group.rank(), [l]).expect("letter")))
        .collect::<Result<_>>()?;
    for i in 0..group.kind().rank() {
        for inverse in [false, true] {
            support.push(group.element(
                ReducedWord::identity(group.rank()),
                group.acting_generator(i, inverse),
            )?);
        }
    }
    StepMeasure::uniform(group, support, check)
}

/// α(a) = a, α(b) = ab.
pub fn linear_automorphism() -> Automorphism {
    Automorphism::parse(2, &["a", "ab"], &["a", "Ab"]).expect("valid table")
}

/// a ↦ ab, b ↦ a.
pub fn fibonacci_automorphism() -> Automorphism {
    Automorphism::parse(2, &["ab", "a"], &["b", "Ba"]).expect("valid table")
}

/// Simple random walk on `F₂`.
pub fn srw_f2() -> Fixture {
    let group = ActingGroup::trivial(2);
    let measure = generator_measure(&group, GenerationCheck::Radius(1)).expect("fixture measure");
    Fixture {
        name: "srw-f2",
        group,
        measure,
    }
}

fn linear_group() -> ActingGroup {
    ActingGroup::new(2, ActingKind::IntLattice(1), vec![linear_automorphism()]).expect("fixture group")
}

/// `F₂ ⋊ Z` with the linearly growing α, uniform on `a^{±1}, b^{±1}, t^{±1}`.
pub fn linear() -> Fixture {
    let group = linear_group();
    let measure = generator_measure(&group, GenerationCheck::Radius(1)).expect("fixture measure");
    Fixture {
        name: "linear",
        group,
        measure,
    }
}

/// Same group, uniform on `(a,0), (a⁻¹,0), (1,1), (1,−1)`. This support
/// generates only `⟨a⟩ ⋊ Z`, so the generation check is waived.
pub fn mixed() -> Fixture {
    let group = linear_group();
    let support = [("a", "0"), ("A", "0"), ("1", "1"), ("1", "-1")]
        .iter()
        .map(|(w, p)| group.parse_element(w, p))
        .collect::<Result<Vec<_>>>()
        .expect("fixture atoms");
    let measure = StepMeasure::uniform(&group, support, GenerationCheck::Waived).expect("fixture measure");
    Fixture {
        name: "mixed",
        group,
        measure,
    }
}

/// `F₂ ⋊ Z` with α the inner automorphism of `a`, isomorphic to `F₂ × Z`.
pub fn direct_product() -> Fixture {
    let alpha = Automorphism::parse(2, &["a", "abA"], &["a", "Aba"]).expect("valid table");
    let group = ActingGroup::new(2, ActingKind::IntLattice(1), vec![alpha]).expect("fixture group");
    let measure = generator_measure(&group, GenerationCheck::Radius(1)).expect("fixture measure");
    Fixture {
        name: "direct-product",
        group,
        measure,
    }
}

/// `F₃ ⋊ F₂` where the acting generators send `c` to `ca` and `cb`.
pub fn free_by_free() -> Fixture {
    let alpha = Automorphism::parse(3, &["a", "b", "ca"], &["a", "b", "cA"]).expect("valid table");
    let beta = Automorphism::parse(3, &["a", "b", "cb"], &["a", "b", "cB"]).expect("valid table");
    let group = ActingGroup::new(3, ActingKind::Free(2), vec![alpha, beta]).expect("fixture group");
    let measure = generator_measure(&group, GenerationCheck::Radius(1)).expect("fixture measure");
    Fixture {
        name: "free-by-free",
        group,
        measure,
    }
}

/// `F₄ ⋊ Z²` on letters `a, b, c, d`, with commuting twists `b ↦ ba` and
/// `d ↦ dc`.
pub fn free_by_z2() -> Fixture {
    let a1 = Automorphism::parse(4, &["a", "ba", "c", "d"], &["a", "bA", "c", "d"]).expect("valid table");
    let a2 = Automorphism::parse(4, &["a", "b", "c", "dc"], &["a", "b", "c", "dC"]).expect("valid table");
    let group = ActingGroup::new(4, ActingKind::IntLattice(2), vec![a1, a2]).expect("fixture group");
    let measure = generator_measure(&group, GenerationCheck::Radius(1)).expect("fixture measure");
    Fixture {
        name: "free-by-z2",
        group,
        measure,
    }
}

/// `F₂ ⋊ Z` with the exponentially growing Fibonacci automorphism.
pub fn fibonacci() -> Fixture {
    let group = ActingGroup::new(2, ActingKind::IntLattice(1), vec![fibonacci_automorphism()])
        .expect("fixture group");
    let measure = generator_measure(&group, GenerationCheck::Radius(1)).expect("fixture measure");
    Fixture {
        name: "fibonacci",
        group,
        measure,
    }
}

pub fn by_name(name: &str) -> Option<Fixture> {
    Some(match name {
        "srw-f2" => srw_f2(),
        "linear" => linear(),
        "mixed" => mixed(),
        "direct-product" => direct_product(),
        "free-by-free" => free_by_free(),
        "free-by-z2" => free_by_z2(),
        "fibonacci" => fibonacci(),
        _ => return None,
    })
}

pub fn all() -> Vec<Fixture> {
    NAMES
        .iter()
        .map(|n| by_name(n).expect("listed fixture"))
        .collect()
}
