//! The action of the extension on boundary rays of `F_d`, hitting measures on
//! cylinders, stationarity residuals, convergence traces and first-return
//! sub-sampling.
//!
//! The limit point of a path is read off as the longest common prefix of
//! `x_n · ξ` over a fixed set of probe rays `ξ`.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{ActingGroup, ActingPart, ExtElement, SublatticeSpec, ThetaCache};
use crate::morphisms::Automorphism;
use crate::walk::{for_each_path, path_rng, total_variation, StepMeasure, Walker};
use crate::words::{BoundaryRay, Letter, ReducedWord};

/// Default ceiling on the fraction of unresolved paths.
pub const UNRESOLVED_CEILING: f64 = 0.05;

/// Flushes the per-worker table of probe images past this many entries.
const PROBE_CACHE_CAPACITY: usize = 1 << 15;

/// Empirical law of the first `depth` letters of a boundary point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylinderDistribution {
    pub depth: usize,
    pub rank: usize,
    /// Number of samples entering the table.
    pub sample_count: usize,
    /// Fraction of simulated paths excluded because their prefix did not
    /// resolve to `depth` letters.
    pub unresolved_fraction: f64,
    pub table: BTreeMap<ReducedWord, f64>,
}

impl CylinderDistribution {
    /// Normalizes a table of counts. Every key must be a reduced word of
    /// length `depth`.
    pub fn from_counts(
        rank: usize,
        depth: usize,
        counts: BTreeMap<ReducedWord, usize>,
        unresolved_fraction: f64,
    ) -> Result<CylinderDistribution> {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(Error::InvalidArgument("no samples to tabulate".into()));
        }
        if let Some(w) = counts.keys().find(|w| w.len() != depth || w.rank() != rank) {
            return Err(Error::InvalidArgument(format!(
                "{w} is not a depth-{depth} cylinder"
            )));
        }
        let table = counts
            .into_iter()
            .map(|(w, c)| (w, c as f64 / total as f64))
            .collect();
        Ok(CylinderDistribution {
            depth,
            rank,
            sample_count: total,
            unresolved_fraction,
            table,
        })
    }

    /// Exact harmonic measure of the simple random walk on `F_rank`: first
    /// letter uniform, then each of the `2·rank − 1` non-backtracking letters.
    pub fn simple_random_walk(rank: usize, depth: usize) -> CylinderDistribution {
        let cylinders = crate::words::words_of_length(rank, depth);
        let p = 1.0 / cylinders.len() as f64;
        CylinderDistribution {
            depth,
            rank,
            sample_count: 0,
            unresolved_fraction: 0.0,
            table: cylinders.into_iter().map(|w| (w, p)).collect(),
        }
    }

    pub fn frequency(&self, w: &ReducedWord) -> f64 {
        self.table.get(w).copied().unwrap_or(0.0)
    }

    /// The induced law on cylinders of depth `k ≤ depth`.
    pub fn marginal(&self, k: usize) -> Result<CylinderDistribution> {
        if k > self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot marginalize depth {} to {k}",
                self.depth
            )));
        }
        let mut table: BTreeMap<ReducedWord, f64> = BTreeMap::new();
        for (w, p) in &self.table {
            *table.entry(w.prefix(k)).or_default() += p;
        }
        Ok(CylinderDistribution {
            depth: k,
            table,
            ..self.clone()
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.table.values().sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.table.values().copied().fold(0.0, f64::max)
    }

    pub fn total_variation(&self, other: &CylinderDistribution) -> f64 {
        let p: HashMap<_, _> = self.table.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let q: HashMap<_, _> = other.table.iter().map(|(k, v)| (k.clone(), *v)).collect();
        total_variation(&p, &q)
    }

    /// Draws cylinders; used to resample boundary points.
    pub fn sampler(&self) -> Result<CylinderSampler> {
        let words: Vec<ReducedWord> = self.table.keys().cloned().collect();
        let index = WeightedIndex::new(self.table.values().copied())
            .map_err(|e| Error::InvalidArgument(format!("empty cylinder table: {e}")))?;
        Ok(CylinderSampler { words, index })
    }
}

#[derive(Clone, Debug)]
pub struct CylinderSampler {
    words: Vec<ReducedWord>,
    index: WeightedIndex<f64>,
}

impl CylinderSampler {
    pub fn sample<'s, R: rand::Rng>(&'s self, rng: &mut R) -> &'s ReducedWord {
        &self.words[self.index.sample(rng)]
    }

    /// A ray in the drawn cylinder: the cylinder word followed by its last
    /// letter repeated forever.
    pub fn sample_ray<R: rand::Rng>(&self, rng: &mut R) -> BoundaryRay {
        extend_periodically(self.sample(rng))
    }
}

/// `c · ℓ^∞` where `ℓ` is the last letter of `c`; the letter `a` for empty `c`.
pub fn extend_periodically(c: &ReducedWord) -> BoundaryRay {
    let last = c.last().unwrap_or(Letter::new(1, false));
    let cycle = ReducedWord::new(c.rank(), [last]).expect("single letter");
    BoundaryRay::new(c.clone(), cycle).expect("a word followed by its last letter is reduced")
}

/// Probe rays used when none are configured: `x₂^∞` and `x₂⁻¹x₁^∞`, or
/// `x₁^{±∞}` in rank one.
pub fn default_probes(rank: usize) -> Vec<BoundaryRay> {
    let specs: [&str; 2] = if rank >= 2 {
        ["(b)", "B(a)"]
    } else {
        ["(a)", "(A)"]
    };
    specs
        .iter()
        .map(|s| BoundaryRay::parse(rank, s).expect("well-formed probe"))
        .collect()
}

/// First `depth` letters of `g · r`, through the truncated-prefix action.
pub fn act_on_ray(
    group: &ActingGroup,
    g: &ExtElement,
    r: &BoundaryRay,
    depth: usize,
    margin: usize,
) -> Result<ReducedWord> {
    group.check(g)?;
    r.head().check_rank(group.rank())?;
    let theta = group.theta_of(&g.p)?;
    let image = theta.boundary_apply(r, depth + g.w.len(), margin)?;
    let moved = g.w.multiply(&image)?;
    if moved.len() < depth {
        return Err(Error::TruncationOverflow {
            depth,
            available: moved.len(),
        });
    }
    Ok(moved.prefix(depth))
}

/// `g · r` computed exactly on the eventually periodic representation.
pub fn act_on_ray_exact(group: &ActingGroup, g: &ExtElement, r: &BoundaryRay) -> Result<BoundaryRay> {
    group.check(g)?;
    let theta = group.theta_of(&g.p)?;
    Ok(theta.apply_ray(r)?.left_multiply(&g.w))
}

/// `w · r` read lazily: the first `keep` letters of `w`, then `r` from
/// letter `skip` on.
#[derive(Clone, Copy, Debug)]
struct Translated<'a> {
    w: &'a [Letter],
    keep: usize,
    ray: &'a BoundaryRay,
    skip: usize,
}

impl<'a> Translated<'a> {
    fn new(w: &'a ReducedWord, ray: &'a BoundaryRay) -> Self {
        let letters = w.letters();
        let n = letters.len();
        let cancel = (0..n)
            .take_while(|&i| letters[n - 1 - i] == ray.letter(i).inverse())
            .count();
        Translated {
            w: letters,
            keep: n - cancel,
            ray,
            skip: cancel,
        }
    }

    #[inline]
    fn letter(&self, i: usize) -> Letter {
        if i < self.keep {
            self.w[i]
        } else {
            self.ray.letter(self.skip + i - self.keep)
        }
    }
}

/// Per-worker state for translating probe rays by walk positions.
#[derive(Debug)]
pub struct ProbeTracker<'a> {
    cache: ThetaCache<'a>,
    probes: Vec<BoundaryRay>,
    images: HashMap<ActingPart, Vec<BoundaryRay>>,
}

impl<'a> ProbeTracker<'a> {
    pub fn new(group: &'a ActingGroup, probes: &[BoundaryRay]) -> ProbeTracker<'a> {
        ProbeTracker {
            cache: ThetaCache::new(group),
            probes: probes.to_vec(),
            images: HashMap::new(),
        }
    }

    fn images(&mut self, p: &ActingPart) -> &[BoundaryRay] {
        if !self.images.contains_key(p) {
            if self.images.len() >= PROBE_CACHE_CAPACITY {
                self.images.clear();
            }
            let theta = self.cache.get(p).clone();
            let imgs = self
                .probes
                .iter()
                .map(|r| theta.apply_ray(r).expect("probe rank checked"))
                .collect();
            self.images.insert(p.clone(), imgs);
        }
        &self.images[p]
    }

    /// Longest common prefix of `{x · ξ}` over the probes, capped at `cap`.
    pub fn common_prefix(&mut self, x: &ExtElement, cap: usize) -> usize {
        let images = self.images(&x.p);
        let translated: Vec<Translated<'_>> = images.iter().map(|r| Translated::new(&x.w, r)).collect();
        let first = translated[0];
        (0..cap)
            .take_while(|&i| {
                let l = first.letter(i);
                translated[1..].iter().all(|t| t.letter(i) == l)
            })
            .count()
    }

    /// The first `depth` letters shared by all translated probes, if they agree
    /// that far.
    pub fn resolved_prefix(&mut self, x: &ExtElement, depth: usize) -> Option<ReducedWord> {
        if self.common_prefix(x, depth) < depth {
            return None;
        }
        let images = self.images(&x.p);
        let t = Translated::new(&x.w, &images[0]);
        Some(ReducedWord::new(x.w.rank(), (0..depth).map(|i| t.letter(i))).expect("prefix of a reduced ray"))
    }
}

fn check_probes(group: &ActingGroup, probes: &[BoundaryRay]) -> Result<()> {
    if probes.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two probe rays are required".into(),
        ));
    }
    let mut seen = HashSet::new();
    for r in probes {
        if r.rank() != group.rank() {
            return Err(Error::RankMismatch {
                expected: group.rank(),
                found: r.rank(),
            });
        }
        if !seen.insert(r) {
            return Err(Error::InvalidArgument(format!("probe {r} is repeated")));
        }
    }
    Ok(())
}

/// Bounded check that products of at most `max_len` support elements can
/// return to `lattice`: some nonempty product has its acting part in it.
pub fn check_lattice_reachable(
    group: &ActingGroup,
    measure: &StepMeasure,
    lattice: &SublatticeSpec,
    max_len: usize,
) -> Result<()> {
    lattice.validate(group.kind())?;
    let steps: HashSet<ActingPart> = measure.atoms().iter().map(|(g, _)| g.p.clone()).collect();
    let mut frontier: HashSet<ActingPart> = HashSet::from([ActingPart::identity(group.kind())]);
    for _ in 0..max_len {
        let mut next = HashSet::new();
        for p in &frontier {
            for s in &steps {
                let q = p.multiply(s)?;
                if lattice.contains(&q) {
                    return Ok(());
                }
                next.insert(q);
            }
        }
        if next.len() > 1_000_000 {
            break;
        }
        frontier = next;
    }
    Err(Error::InvalidMeasure(format!(
        "no product of at most {max_len} steps returns to the sublattice"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HittingOptions {
    pub probes: Vec<BoundaryRay>,
    /// Sample each path at its last visit to this sublattice instead of at
    /// its terminal position.
    pub return_lattice: Option<SublatticeSpec>,
    pub unresolved_ceiling: f64,
}

impl HittingOptions {
    pub fn new(rank: usize) -> HittingOptions {
        HittingOptions {
            probes: default_probes(rank),
            return_lattice: None,
            unresolved_ceiling: UNRESOLVED_CEILING,
        }
    }
}

pub fn empirical_hitting_measure(
    group: &ActingGroup,
    measure: &StepMeasure,
    seed: u64,
    n_paths: usize,
    n_steps: usize,
    depth: usize,
    opts: &HittingOptions,
) -> Result<CylinderDistribution> {
    if depth == 0 || n_paths == 0 {
        return Err(Error::InvalidArgument(
            "depth and n_paths must be positive".into(),
        ));
    }
    check_probes(group, &opts.probes)?;
    if let Some(lattice) = &opts.return_lattice {
        check_lattice_reachable(group, measure, lattice, 8)?;
    }
    let prefixes: Vec<Option<ReducedWord>> = (0..n_paths as u64)
        .into_par_iter()
        .map_init(
            || {
                (
                    Walker::new(group, measure),
                    ProbeTracker::new(group, &opts.probes),
                )
            },
            |(walker, tracker), i| {
                let x = match &opts.return_lattice {
                    None => walker.endpoint(seed, i, n_steps),
                    Some(lattice) => {
                        // Locate the last return, then replay the path up to it.
                        let mut last = 0;
                        walker.walk(seed, i, n_steps, |n, x| {
                            if lattice.contains(&x.p) {
                                last = n;
                            }
                            true
                        });
                        walker.endpoint(seed, i, last)
                    }
                };
                tracker.resolved_prefix(&x, depth)
            },
        )
        .collect();
    let mut counts: BTreeMap<ReducedWord, usize> = BTreeMap::new();
    let mut unresolved = 0usize;
    for p in prefixes {
        match p {
            Some(w) => *counts.entry(w).or_default() += 1,
            None => unresolved += 1,
        }
    }
    let fraction = unresolved as f64 / n_paths as f64;
    if fraction > opts.unresolved_ceiling || counts.is_empty() {
        return Err(Error::ConvergenceFailure {
            fraction,
            ceiling: opts.unresolved_ceiling,
        });
    }
    CylinderDistribution::from_counts(group.rank(), depth, counts, fraction)
}

/// Total variation between `λ̂` and `μ * λ̂`, both read at `depth`.
///
/// Boundary points are drawn from `λ̂` at its own depth and extended
/// periodically; tabulating at a smaller `depth` keeps the letters introduced
/// by the extension out of the comparison.
pub fn stationarity_residual(
    group: &ActingGroup,
    lambda: &CylinderDistribution,
    measure: &StepMeasure,
    seed: u64,
    n_resample: usize,
    depth: usize,
) -> Result<f64> {
    if depth == 0 || n_resample == 0 {
        return Err(Error::InvalidArgument(
            "depth and n_resample must be positive".into(),
        ));
    }
    if lambda.rank != group.rank() {
        return Err(Error::RankMismatch {
            expected: group.rank(),
            found: lambda.rank,
        });
    }
    let reference = lambda.marginal(depth)?;
    let sampler = lambda.sampler()?;
    let thetas: Vec<Automorphism> = measure
        .atoms()
        .iter()
        .map(|(g, _)| group.theta_of(&g.p))
        .collect::<Result<_>>()?;
    let index = WeightedIndex::new(measure.atoms().iter().map(|(_, p)| *p))
        .map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    let pushed: Vec<ReducedWord> = (0..n_resample as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let xi = sampler.sample_ray(&mut rng);
            let j = index.sample(&mut rng);
            let g = &measure.atoms()[j].0;
            let moved = thetas[j]
                .apply_ray(&xi)
                .expect("rank checked")
                .left_multiply(&g.w);
            moved.prefix(depth)
        })
        .collect();
    let mut counts: BTreeMap<ReducedWord, usize> = BTreeMap::new();
    for w in pushed {
        *counts.entry(w).or_default() += 1;
    }
    let pushed = CylinderDistribution::from_counts(group.rank(), depth, counts, 0.0)?;
    Ok(reference.total_variation(&pushed))
}

/// Common-prefix lengths of translated probes along one path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackedPath {
    /// Steps at which a length was recorded.
    pub steps: Vec<u32>,
    pub lengths: Vec<u32>,
}

impl TrackedPath {
    pub fn final_length(&self) -> u32 {
        self.lengths.last().copied().unwrap_or(0)
    }

    /// Whether the recorded lengths never decrease from step `burn_in` on.
    pub fn monotone_after(&self, burn_in: usize) -> bool {
        let start = self.steps.partition_point(|&s| (s as usize) < burn_in);
        self.lengths[start..].windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub probes: Vec<BoundaryRay>,
    pub depth: usize,
    pub n_steps: usize,
    pub paths: Vec<TrackedPath>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub n_paths: usize,
    pub depth: usize,
    pub burn_in: usize,
    pub monotone_fraction: f64,
    pub median_final_length: f64,
    pub unresolved_fraction: f64,
}

impl ConvergenceTrace {
    pub fn monotone_fraction(&self, burn_in: usize) -> f64 {
        let ok = self.paths.iter().filter(|p| p.monotone_after(burn_in)).count();
        ok as f64 / self.paths.len().max(1) as f64
    }

    pub fn median_final_length(&self) -> f64 {
        let mut finals: Vec<u32> = self.paths.iter().map(TrackedPath::final_length).collect();
        finals.sort_unstable();
        match finals.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => finals[n / 2] as f64,
            n => (finals[n / 2 - 1] as f64 + finals[n / 2] as f64) / 2.0,
        }
    }

    /// Fraction of paths whose final length is below the tracking depth.
    pub fn unresolved_fraction(&self) -> f64 {
        let bad = self
            .paths
            .iter()
            .filter(|p| (p.final_length() as usize) < self.depth)
            .count();
        bad as f64 / self.paths.len().max(1) as f64
    }

    pub fn summary(&self, burn_in: usize) -> TraceSummary {
        TraceSummary {
            n_paths: self.paths.len(),
            depth: self.depth,
            burn_in,
            monotone_fraction: self.monotone_fraction(burn_in),
            median_final_length: self.median_final_length(),
            unresolved_fraction: self.unresolved_fraction(),
        }
    }
}

/// Records, per path and step, the common-prefix length of the translated
/// probes capped at `depth`. With a lattice, only return times are recorded.
#[allow(clippy::too_many_arguments)]
pub fn track_convergence(
    group: &ActingGroup,
    measure: &StepMeasure,
    seed: u64,
    n_paths: usize,
    n_steps: usize,
    probes: &[BoundaryRay],
    depth: usize,
    lattice: Option<&SublatticeSpec>,
) -> Result<ConvergenceTrace> {
    check_probes(group, probes)?;
    if let Some(l) = lattice {
        check_lattice_reachable(group, measure, l, 8)?;
    }
    let paths = (0..n_paths as u64)
        .into_par_iter()
        .map_init(
            || (Walker::new(group, measure), ProbeTracker::new(group, probes)),
            |(walker, tracker), i| {
                let mut steps = Vec::new();
                let mut lengths = Vec::new();
                walker.walk(seed, i, n_steps, |n, x| {
                    if lattice.is_none_or(|l| l.contains(&x.p)) {
                        steps.push(n as u32);
                        lengths.push(tracker.common_prefix(x, depth) as u32);
                    }
                    true
                });
                TrackedPath { steps, lengths }
            },
        )
        .collect();
    Ok(ConvergenceTrace {
        probes: probes.to_vec(),
        depth,
        n_steps,
        paths,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstReturnSample {
    pub position: ExtElement,
    pub time: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstReturnBatch {
    pub samples: Vec<FirstReturnSample>,
    /// Paths that did not return within the step budget.
    pub exhausted: usize,
    pub mean_return_time: f64,
    pub mean_gauge_length: f64,
}

impl FirstReturnBatch {
    pub fn exhausted_fraction(&self) -> f64 {
        self.exhausted as f64 / (self.samples.len() + self.exhausted).max(1) as f64
    }
}

/// Position of path `path` at its `k`-th visit to the lattice after time 0.
fn kth_return(
    walker: &mut Walker<'_>,
    lattice: &SublatticeSpec,
    seed: u64,
    path: u64,
    k: usize,
    step_budget: usize,
) -> Option<FirstReturnSample> {
    let mut visits = 0;
    let mut hit = None;
    let x = walker.walk(seed, path, step_budget, |n, x| {
        if n >= 1 && lattice.contains(&x.p) {
            visits += 1;
            if visits == k {
                hit = Some(n);
                return false;
            }
        }
        true
    });
    hit.map(|time| FirstReturnSample { position: x, time })
}

/// Samples of `μ⁰`, the law of `x_τ` with `τ = min{n ≥ 1 : x_n ∈ G⁰}`.
#[allow(clippy::too_many_arguments)]
pub fn first_return_sampler(
    group: &ActingGroup,
    measure: &StepMeasure,
    lattice: &SublatticeSpec,
    seed: u64,
    n_samples: usize,
    step_budget: usize,
    exhausted_ceiling: f64,
) -> Result<FirstReturnBatch> {
    kth_return_sampler(
        group,
        measure,
        lattice,
        seed,
        n_samples,
        1,
        step_budget,
        exhausted_ceiling,
    )
}

/// Positions at the `k`-th return time; `k = 1` is the first-return sampler.
#[allow(clippy::too_many_arguments)]
pub fn kth_return_sampler(
    group: &ActingGroup,
    measure: &StepMeasure,
    lattice: &SublatticeSpec,
    seed: u64,
    n_samples: usize,
    k: usize,
    step_budget: usize,
    exhausted_ceiling: f64,
) -> Result<FirstReturnBatch> {
    if k == 0 || n_samples == 0 {
        return Err(Error::InvalidArgument("k and n_samples must be positive".into()));
    }
    check_lattice_reachable(group, measure, lattice, 8)?;
    let raw = for_each_path(group, measure, n_samples, |walker, i| {
        kth_return(walker, lattice, seed, i, k, step_budget)
    });
    let exhausted = raw.iter().filter(|s| s.is_none()).count();
    let samples: Vec<FirstReturnSample> = raw.into_iter().flatten().collect();
    let batch = FirstReturnBatch {
        mean_return_time: mean(samples.iter().map(|s| s.time as f64)),
        mean_gauge_length: mean(samples.iter().map(|s| s.position.gauge_length() as f64)),
        samples,
        exhausted,
    };
    if batch.exhausted_fraction() > exhausted_ceiling {
        return Err(Error::Budget(format!(
            "{exhausted} of {n_samples} paths did not return within {step_budget} steps"
        )));
    }
    Ok(batch)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}
