//! Step measures, seeded path simulation and the moment/entropy statistics
//! of a random walk `x_n = h_1 ⋯ h_n` with i.i.d. increments.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{ActingGroup, ExtElement, ThetaCache};
use crate::morphisms::LinearFit;

/// Tolerance on the total mass of a step measure.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Independent stream for one path. Streams are keyed by the path index so
/// results do not depend on how paths are scheduled across workers.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenerationCheck {
    /// Every element of the gauge ball of this radius must be a product of
    /// support elements.
    Radius(usize),
    Waived,
}

/// Cap on the number of distinct products kept by the generation check.
const GENERATION_CHECK_BUDGET: usize = 2_000_000;

/// A finitely supported probability measure on the extension.
#[derive(Clone, Debug)]
pub struct StepMeasure {
    atoms: Vec<(ExtElement, f64)>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for StepMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

impl StepMeasure {
    pub fn new(
        group: &ActingGroup,
        atoms: Vec<(ExtElement, f64)>,
        check: GenerationCheck,
    ) -> Result<StepMeasure> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut seen = HashSet::new();
        for (g, weight) in &atoms {
            group.check(g)?;
            if !(weight.is_finite() && *weight > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "weight {weight} of {g} is not positive"
                )));
            }
            if !seen.insert(g) {
                return Err(Error::InvalidMeasure(format!("duplicate atom {g}")));
            }
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        if let GenerationCheck::Radius(radius) = check {
            let support: Vec<ExtElement> = atoms.iter().map(|(g, _)| g.clone()).collect();
            if let Some(missing) = first_unreachable(group, &support, radius)? {
                return Err(Error::InvalidMeasure(format!(
                    "support does not generate the group as a semigroup: {missing} is not reached"
                )));
            }
        }
        let sampler = WeightedIndex::new(atoms.iter().map(|(_, w)| *w))
            .map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Ok(StepMeasure { atoms, sampler })
    }

    pub fn point_mass(group: &ActingGroup, g: ExtElement) -> Result<StepMeasure> {
        StepMeasure::new(group, vec![(g, 1.0)], GenerationCheck::Waived)
    }

    pub fn uniform(
        group: &ActingGroup,
        support: Vec<ExtElement>,
        check: GenerationCheck,
    ) -> Result<StepMeasure> {
        let p = 1.0 / support.len().max(1) as f64;
        StepMeasure::new(group, support.into_iter().map(|g| (g, p)).collect(), check)
    }

    pub fn atoms(&self) -> &[(ExtElement, f64)] {
        &self.atoms
    }

    pub fn sample<'s, R: rand::Rng>(&'s self, rng: &mut R) -> &'s ExtElement {
        &self.atoms[self.sampler.sample(rng)].0
    }
}

/// Breadth-first search over products of support elements, up to product
/// length `4 · radius`. Returns an element of the ball that was not reached.
fn first_unreachable(
    group: &ActingGroup,
    support: &[ExtElement],
    radius: usize,
) -> Result<Option<ExtElement>> {
    let target: HashSet<ExtElement> = group.ball(radius).into_iter().collect();
    let mut cache = ThetaCache::new(group);
    let mut reached: HashSet<ExtElement> = HashSet::new();
    let mut frontier: Vec<ExtElement> = vec![group.identity()];
    let mut covered = 0;
    for _ in 0..(4 * radius).max(1) {
        let mut next = Vec::new();
        for x in &frontier {
            for h in support {
                let y = cache.multiply(x, h);
                if reached.insert(y.clone()) {
                    if target.contains(&y) {
                        covered += 1;
                    }
                    next.push(y);
                }
            }
        }
        if covered == target.len() {
            return Ok(None);
        }
        if reached.len() > GENERATION_CHECK_BUDGET {
            return Err(Error::Budget(format!(
                "semigroup generation check exceeded {GENERATION_CHECK_BUDGET} elements"
            )));
        }
        frontier = next;
    }
    let mut missing: Vec<_> = target.difference(&reached).cloned().collect();
    missing.sort();
    Ok(missing.into_iter().next())
}

/// `Σ μ(g)|g|`.
pub fn first_moment(mu: &StepMeasure) -> f64 {
    mu.atoms.iter().map(|(g, p)| p * g.gauge_length() as f64).sum()
}

/// `Σ μ(g) log(1 + |g|)`.
pub fn log_moment(mu: &StepMeasure) -> f64 {
    mu.atoms
        .iter()
        .map(|(g, p)| p * (g.gauge_length() as f64).ln_1p())
        .sum()
}

/// Shannon entropy in nats.
pub fn entropy(mu: &StepMeasure) -> f64 {
    -mu.atoms.iter().map(|(_, p)| p * p.ln()).sum::<f64>()
}

/// Simulates paths one at a time, reusing a `Θ(p)` cache.
#[derive(Debug)]
pub struct Walker<'a> {
    measure: &'a StepMeasure,
    cache: ThetaCache<'a>,
}

impl<'a> Walker<'a> {
    pub fn new(group: &'a ActingGroup, measure: &'a StepMeasure) -> Walker<'a> {
        Walker {
            measure,
            cache: ThetaCache::new(group),
        }
    }

    pub fn group(&self) -> &'a ActingGroup {
        self.cache.group()
    }

    pub fn cache(&mut self) -> &mut ThetaCache<'a> {
        &mut self.cache
    }

    /// Runs path `path` for up to `n_steps` steps. `visit(n, x_n)` is called
    /// for `n = 0, 1, …`; returning `false` stops the path early.
    pub fn walk(
        &mut self,
        seed: u64,
        path: u64,
        n_steps: usize,
        mut visit: impl FnMut(usize, &ExtElement) -> bool,
    ) -> ExtElement {
        let mut rng = path_rng(seed, path);
        let mut x = self.cache.group().identity();
        if !visit(0, &x) {
            return x;
        }
        for n in 1..=n_steps {
            let h = self.measure.sample(&mut rng);
            self.cache.multiply_in_place(&mut x, h);
            if !visit(n, &x) {
                break;
            }
        }
        x
    }

    pub fn endpoint(&mut self, seed: u64, path: u64, n_steps: usize) -> ExtElement {
        self.walk(seed, path, n_steps, |_, _| true)
    }
}

/// Runs `f` for every path index in parallel and returns results in path order.
pub fn for_each_path<T, F>(group: &ActingGroup, measure: &StepMeasure, n_paths: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Walker<'_>, u64) -> T + Sync + Send,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map_init(|| Walker::new(group, measure), |walker, i| f(walker, i))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Storage {
    /// Every position `x_0..x_n` of every path.
    Full,
    /// Terminal positions only.
    Streaming,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathStorage {
    Full(Vec<Vec<ExtElement>>),
    Terminal(Vec<ExtElement>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathBatch {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub storage: PathStorage,
}

impl PathBatch {
    pub fn terminal(&self, path: usize) -> &ExtElement {
        match &self.storage {
            PathStorage::Full(paths) => paths[path].last().expect("x_0 is always stored"),
            PathStorage::Terminal(xs) => &xs[path],
        }
    }

    pub fn terminals(&self) -> impl Iterator<Item = &ExtElement> {
        (0..self.n_paths).map(move |i| self.terminal(i))
    }

    pub fn path(&self, path: usize) -> Option<&[ExtElement]> {
        match &self.storage {
            PathStorage::Full(paths) => Some(&paths[path]),
            PathStorage::Terminal(_) => None,
        }
    }
}

pub fn sample_paths(
    group: &ActingGroup,
    measure: &StepMeasure,
    seed: u64,
    n_paths: usize,
    n_steps: usize,
    storage: Storage,
) -> PathBatch {
    let storage = match storage {
        Storage::Full => PathStorage::Full(for_each_path(group, measure, n_paths, |w, i| {
            let mut xs = Vec::with_capacity(n_steps + 1);
            w.walk(seed, i, n_steps, |_, x| {
                xs.push(x.clone());
                true
            });
            xs
        })),
        Storage::Streaming => PathStorage::Terminal(for_each_path(group, measure, n_paths, |w, i| {
            w.endpoint(seed, i, n_steps)
        })),
    };
    PathBatch {
        seed,
        n_paths,
        n_steps,
        storage,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Estimate {
                value: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Mean of `|x_n| / n` over the terminal positions.
pub fn drift_estimate(batch: &PathBatch) -> Result<Estimate> {
    if batch.n_steps == 0 || batch.n_paths == 0 {
        return Err(Error::InvalidArgument(
            "drift needs at least one path and one step".into(),
        ));
    }
    let n = batch.n_steps as f64;
    let xs: Vec<f64> = batch.terminals().map(|x| x.gauge_length() as f64 / n).collect();
    Ok(Estimate::from_samples(&xs))
}

/// Total variation distance `½ Σ |p − q|` between two finitely supported laws.
pub fn total_variation<K: Eq + Hash>(p: &HashMap<K, f64>, q: &HashMap<K, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, pk) in p {
        sum += (pk - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, qk) in q {
        if !p.contains_key(k) {
            sum += qk.abs();
        }
    }
    0.5 * sum
}

/// Empirical law of a sample.
pub fn empirical_law<K: Eq + Hash + Clone>(samples: impl IntoIterator<Item = K>) -> HashMap<K, f64> {
    let mut counts: HashMap<K, usize> = HashMap::new();
    let mut n = 0usize;
    for s in samples {
        *counts.entry(s).or_default() += 1;
        n += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / n as f64))
        .collect()
}

/// Exact `μ * ν` by enumerating support pairs.
pub fn convolve(group: &ActingGroup, mu: &StepMeasure, nu: &StepMeasure) -> HashMap<ExtElement, f64> {
    let mut cache = ThetaCache::new(group);
    let mut out: HashMap<ExtElement, f64> = HashMap::new();
    for (g, p) in &mu.atoms {
        for (h, q) in &nu.atoms {
            *out.entry(cache.multiply(g, h)).or_default() += p * q;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyDiagnostic {
    pub n: usize,
    pub samples: usize,
    pub plug_in: f64,
    /// Plug-in entropy plus `(K − 1) / 2N`.
    pub miller_madow: f64,
    pub distinct: usize,
    /// Good–Turing coverage `1 − f₁/N`.
    pub coverage: f64,
    /// Set when coverage is below `EntropyOptions::coverage_floor`.
    pub biased: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyRateEstimate {
    pub value: f64,
    pub diagnostics: Vec<EntropyDiagnostic>,
    /// `H_n / n` against `1/n`; the intercept is the estimate.
    pub fit: Option<LinearFit>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyOptions {
    pub max_distinct: usize,
    pub max_total_steps: usize,
    pub coverage_floor: f64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions {
            max_distinct: 20_000_000,
            max_total_steps: 2_000_000_000,
            coverage_floor: 0.9,
        }
    }
}

pub fn asymptotic_entropy_estimate(
    group: &ActingGroup,
    measure: &StepMeasure,
    seed: u64,
    n_paths: usize,
    depths: &[usize],
) -> Result<EntropyRateEstimate> {
    asymptotic_entropy_estimate_with(group, measure, seed, n_paths, depths, &EntropyOptions::default())
}

/// Plug-in (Miller–Madow corrected) entropy of the law of `x_n` for each
/// requested `n`, extrapolated linearly in `1/n`.
pub fn asymptotic_entropy_estimate_with(
    group: &ActingGroup,
    measure: &StepMeasure,
    seed: u64,
    n_paths: usize,
    depths: &[usize],
    opts: &EntropyOptions,
) -> Result<EntropyRateEstimate> {
    if depths.is_empty() || depths.contains(&0) || n_paths < 2 {
        return Err(Error::InvalidArgument(
            "entropy rate needs positive depths and at least two samples".into(),
        ));
    }
    let total: usize = depths.iter().map(|n| n.saturating_mul(n_paths)).sum();
    if total > opts.max_total_steps {
        return Err(Error::Budget(format!(
            "{total} simulated steps exceed the budget of {}",
            opts.max_total_steps
        )));
    }
    let mut diagnostics = Vec::with_capacity(depths.len());
    for &n in depths {
        let mut xs = for_each_path(group, measure, n_paths, |w, i| w.endpoint(seed, i, n));
        xs.par_sort_unstable();
        let mut counts: Vec<usize> = Vec::new();
        let mut start = 0;
        for i in 1..=xs.len() {
            if i == xs.len() || xs[i] != xs[start] {
                counts.push(i - start);
                start = i;
            }
        }
        if counts.len() > opts.max_distinct {
            return Err(Error::Budget(format!(
                "{} distinct positions at n = {n} exceed {}",
                counts.len(),
                opts.max_distinct
            )));
        }
        let total = n_paths as f64;
        let plug_in = -counts
            .iter()
            .map(|&c| {
                let p = c as f64 / total;
                p * p.ln()
            })
            .sum::<f64>();
        let distinct = counts.len();
        let singletons = counts.iter().filter(|&&c| c == 1).count();
        let coverage = 1.0 - singletons as f64 / total;
        diagnostics.push(EntropyDiagnostic {
            n,
            samples: n_paths,
            plug_in,
            miller_madow: plug_in + (distinct as f64 - 1.0) / (2.0 * total),
            distinct,
            coverage,
            biased: coverage < opts.coverage_floor,
        });
    }
    let (value, fit) = if diagnostics.len() == 1 {
        (diagnostics[0].miller_madow / diagnostics[0].n as f64, None)
    } else {
        let xs: Vec<f64> = diagnostics.iter().map(|d| 1.0 / d.n as f64).collect();
        let ys: Vec<f64> = diagnostics.iter().map(|d| d.miller_madow / d.n as f64).collect();
        let fit = LinearFit::fit(&xs, &ys);
        (fit.intercept, Some(fit))
    };
    Ok(EntropyRateEstimate {
        value,
        diagnostics,
        fit,
    })
}

/// Aggregated moments of a measure, as reported by the `moments` command.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentSummary {
    pub first_moment: f64,
    pub log_moment: f64,
    pub entropy: f64,
    pub atoms: usize,
}

pub fn moment_summary(mu: &StepMeasure) -> MomentSummary {
    MomentSummary {
        first_moment: first_moment(mu),
        log_moment: log_moment(mu),
        entropy: entropy(mu),
        atoms: mu.atoms.len(),
    }
}

/// Sorted copy of a law, for deterministic output.
pub fn sorted_law<K: Ord + Clone>(law: &HashMap<K, f64>) -> BTreeMap<K, f64> {
    law.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::ActingKind;
    use crate::morphisms::Automorphism;
    use crate::words::ReducedWord;

    fn srw_f2() -> (ActingGroup, StepMeasure) {
        let g = ActingGroup::trivial(2);
        let atoms = ["a", "A", "b", "B"]
            .iter()
            .map(|s| g.parse_element(s, "").unwrap())
            .collect();
        let mu = StepMeasure::uniform(&g, atoms, GenerationCheck::Radius(2)).unwrap();
        (g, mu)
    }

    #[test]
    fn measure_validation() {
        let g = ActingGroup::trivial(2);
        let a = g.parse_element("a", "").unwrap();
        let b = g.parse_element("b", "").unwrap();
        assert!(StepMeasure::new(
            &g,
            vec![(a.clone(), 0.5), (b.clone(), 0.4)],
            GenerationCheck::Waived
        )
        .is_err());
        assert!(StepMeasure::new(
            &g,
            vec![(a.clone(), 0.5), (a.clone(), 0.5)],
            GenerationCheck::Waived
        )
        .is_err());
        assert!(StepMeasure::new(
            &g,
            vec![(a.clone(), 1.5), (b.clone(), -0.5)],
            GenerationCheck::Waived
        )
        .is_err());
        assert!(StepMeasure::new(&g, vec![], GenerationCheck::Waived).is_err());
        // {a, b} does not generate F2 as a semigroup.
        let err = StepMeasure::new(
            &g,
            vec![(a.clone(), 0.5), (b.clone(), 0.5)],
            GenerationCheck::Radius(1),
        );
        assert!(matches!(err, Err(Error::InvalidMeasure(_))));
        assert!(StepMeasure::new(&g, vec![(a, 0.5), (b, 0.5)], GenerationCheck::Waived).is_ok());
    }

    #[test]
    fn twisted_support_generates() {
        let alpha = Automorphism::parse(2, &["a", "ab"], &["a", "Ab"]).unwrap();
        let g = ActingGroup::new(2, ActingKind::IntLattice(1), vec![alpha]).unwrap();
        // Without b the walk never leaves <a> ⋊ Z.
        let support = ["a:0", "A:0", "1:1", "1:-1"]
            .iter()
            .map(|s| {
                let (w, p) = s.split_once(':').unwrap();
                g.parse_element(w, p).unwrap()
            })
            .collect::<Vec<_>>();
        assert!(StepMeasure::uniform(&g, support.clone(), GenerationCheck::Radius(1)).is_err());
        let mut full = support;
        full.push(g.parse_element("b", "0").unwrap());
        full.push(g.parse_element("B", "0").unwrap());
        assert!(StepMeasure::uniform(&g, full, GenerationCheck::Radius(2)).is_ok());
    }

    #[test]
    fn moments_examples() {
        let g = ActingGroup::trivial(2);
        let (_, srw) = srw_f2();
        assert!((entropy(&srw) - 4f64.ln()).abs() < 1e-12);
        assert!((first_moment(&srw) - 1.0).abs() < 1e-12);
        let point = StepMeasure::point_mass(&g, g.parse_element("abA", "").unwrap()).unwrap();
        assert_eq!(entropy(&point), 0.0);
        assert_eq!(first_moment(&point), 3.0);
        assert!(log_moment(&point) <= first_moment(&point));
    }

    #[test]
    fn point_mass_path_is_deterministic() {
        let g = ActingGroup::trivial(2);
        let a = g.parse_element("a", "").unwrap();
        let mu = StepMeasure::point_mass(&g, a).unwrap();
        let batch = sample_paths(&g, &mu, 7, 3, 5, Storage::Full);
        let path = batch.path(1).unwrap();
        let expected: Vec<String> = ["1", "a", "aa", "aaa", "aaaa", "aaaaa"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let got: Vec<String> = path.iter().map(|x| x.w.to_string()).collect();
        assert_eq!(got, expected);
        let drift = drift_estimate(&batch).unwrap();
        assert_eq!(drift.value, 1.0);
        assert_eq!(drift.stderr, 0.0);
    }

    #[test]
    fn batches_are_reproducible() {
        let (g, mu) = srw_f2();
        let b1 = sample_paths(&g, &mu, 42, 20, 50, Storage::Full);
        let b2 = sample_paths(&g, &mu, 42, 20, 50, Storage::Full);
        assert_eq!(b1, b2);
        let b3 = sample_paths(&g, &mu, 43, 20, 50, Storage::Full);
        assert_ne!(b1, b3);
        let streaming = sample_paths(&g, &mu, 42, 20, 50, Storage::Streaming);
        assert!(b1.terminals().eq(streaming.terminals()));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let (g, mu) = srw_f2();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_paths(&g, &mu, 9, 64, 40, Storage::Streaming))
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn first_step_follows_mu() {
        let (g, mu) = srw_f2();
        let batch = sample_paths(&g, &mu, 3, 40_000, 1, Storage::Streaming);
        let law = empirical_law(batch.terminals().cloned());
        let exact: HashMap<_, _> = mu.atoms().iter().cloned().collect();
        assert!(total_variation(&law, &exact) < 0.01);
    }

    #[test]
    fn convolution_of_srw() {
        let (g, mu) = srw_f2();
        let c = convolve(&g, &mu, &mu);
        let e = g.identity();
        assert!((c[&e] - 0.25).abs() < 1e-12);
        assert!((c[&g.parse_element("ab", "").unwrap()] - 1.0 / 16.0).abs() < 1e-12);
        assert_eq!(c.len(), 13);
        assert!((c.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tv_basics() {
        let p: HashMap<u8, f64> = [(0, 0.5), (1, 0.5)].into_iter().collect();
        let q: HashMap<u8, f64> = [(1, 0.5), (2, 0.5)].into_iter().collect();
        assert!((total_variation(&p, &q) - 0.5).abs() < 1e-12);
        assert_eq!(total_variation(&p, &p), 0.0);
    }

    #[test]
    fn entropy_rate_of_point_mass_is_zero() {
        let g = ActingGroup::trivial(2);
        let mu = StepMeasure::point_mass(&g, g.parse_element("a", "").unwrap()).unwrap();
        let est = asymptotic_entropy_estimate(&g, &mu, 1, 100, &[4, 8]).unwrap();
        assert!(est.value.abs() < 1e-12);
        assert!(est.diagnostics.iter().all(|d| d.distinct == 1));
    }

    #[test]
    fn entropy_rate_budget() {
        let (g, mu) = srw_f2();
        let opts = EntropyOptions {
            max_total_steps: 10,
            ..EntropyOptions::default()
        };
        assert!(matches!(
            asymptotic_entropy_estimate_with(&g, &mu, 1, 100, &[4], &opts),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn moment_monotonicity() {
        let (g, mu) = srw_f2();
        assert!(entropy(&mu) <= (mu.atoms().len() as f64).ln() + 1e-12);
        assert!(first_moment(&mu) >= log_moment(&mu));
        let w = ReducedWord::parse(2, "ab").unwrap();
        let far = StepMeasure::uniform(
            &g,
            vec![
                g.free_element(w.clone()).unwrap(),
                g.free_element(w.invert()).unwrap(),
            ],
            GenerationCheck::Waived,
        )
        .unwrap();
        assert!(first_moment(&far) >= log_moment(&far));
    }
}
