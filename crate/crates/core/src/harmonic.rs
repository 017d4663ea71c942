//! Bounded harmonic functions through the Poisson formula
//! `f(g) = ∫ F(g·ξ) dλ(ξ)`, for boundary functions `F` that depend on finitely
//! many letters.

use std::collections::BTreeMap;
use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{extend_periodically, CylinderDistribution};
use crate::error::{Error, Result};
use crate::groups::{ActingGroup, ExtElement};
use crate::walk::StepMeasure;
use crate::words::{words_of_length, BoundaryRay, Letter, ReducedWord};

/// A function on `∂F_d` that only reads the first `depth` letters.
/// Cylinders absent from the table take the value 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderFunction {
    rank: usize,
    depth: usize,
    table: BTreeMap<ReducedWord, f64>,
    sup: f64,
}

impl CylinderFunction {
    pub fn new(rank: usize, depth: usize, table: BTreeMap<ReducedWord, f64>) -> Result<CylinderFunction> {
        for (w, v) in &table {
            if w.len() != depth || w.rank() != rank {
                return Err(Error::InvalidArgument(format!(
                    "{w} is not a depth-{depth} cylinder"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("value {v} on {w} is not finite")));
            }
        }
        let sup = table.values().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(CylinderFunction {
            rank,
            depth,
            table,
            sup,
        })
    }

    pub fn constant(rank: usize, c: f64) -> CylinderFunction {
        CylinderFunction::new(rank, 0, BTreeMap::from([(ReducedWord::identity(rank), c)]))
            .expect("empty cylinder")
    }

    pub fn indicator(cylinder: &ReducedWord) -> CylinderFunction {
        CylinderFunction::new(
            cylinder.rank(),
            cylinder.len(),
            BTreeMap::from([(cylinder.clone(), 1.0)]),
        )
        .expect("single cylinder")
    }

    pub fn from_fn(rank: usize, depth: usize, f: impl Fn(&ReducedWord) -> f64) -> Result<CylinderFunction> {
        let table = words_of_length(rank, depth)
            .into_iter()
            .map(|w| {
                let v = f(&w);
                (w, v)
            })
            .collect();
        CylinderFunction::new(rank, depth, table)
    }

    /// Reads `cylinder,value` rows; the header row is required.
    pub fn from_csv<R: Read>(rank: usize, reader: R) -> Result<CylinderFunction> {
        let mut rows = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header_ok = rows
            .headers()
            .map(|h| h.iter().eq(["cylinder", "value"]))
            .unwrap_or(false);
        if !header_ok {
            return Err(Error::InvalidArgument("expected header `cylinder,value`".into()));
        }
        let mut table = BTreeMap::new();
        let mut depth = None;
        for rec in rows.records() {
            let rec = rec.map_err(|e| Error::InvalidArgument(format!("cylinder CSV: {e}")))?;
            let w = ReducedWord::parse(rank, &rec[0])?;
            let v: f64 = rec[1]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value {:?}", &rec[1])))?;
            if *depth.get_or_insert(w.len()) != w.len() {
                return Err(Error::InvalidArgument("cylinders of mixed depth".into()));
            }
            if table.insert(w.clone(), v).is_some() {
                return Err(Error::InvalidArgument(format!("cylinder {w} listed twice")));
            }
        }
        let depth = depth.ok_or_else(|| Error::InvalidArgument("no cylinders".into()))?;
        CylinderFunction::new(rank, depth, table)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn table(&self) -> &BTreeMap<ReducedWord, f64> {
        &self.table
    }

    pub fn value_on_prefix(&self, prefix: &ReducedWord) -> f64 {
        self.table.get(&prefix.prefix(self.depth)).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, r: &BoundaryRay) -> f64 {
        self.value_on_prefix(&r.prefix(self.depth))
    }

    pub fn add(&self, other: &CylinderFunction) -> Result<CylinderFunction> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                expected: self.rank,
                found: other.rank,
            });
        }
        let depth = self.depth.max(other.depth);
        CylinderFunction::from_fn(self.rank, depth, |w| {
            self.value_on_prefix(w) + other.value_on_prefix(w)
        })
    }
}

/// Weighted boundary points used for every evaluation, so estimates at
/// different group elements share their randomness.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySamples {
    rank: usize,
    depth: usize,
    cylinders: Vec<ReducedWord>,
    weights: Vec<f64>,
    /// Sample size behind the weights; drives standard errors. Zero marks an
    /// exact table.
    effective_size: usize,
}

impl BoundarySamples {
    /// Uses the table itself: each cylinder weighted by its frequency.
    pub fn from_distribution(lambda: &CylinderDistribution) -> BoundarySamples {
        BoundarySamples {
            rank: lambda.rank,
            depth: lambda.depth,
            cylinders: lambda.table.keys().cloned().collect(),
            weights: lambda.table.values().copied().collect(),
            effective_size: lambda.sample_count,
        }
    }

    /// `n_mc` independent draws from the table, equally weighted.
    pub fn draw(lambda: &CylinderDistribution, seed: u64, n_mc: usize) -> Result<BoundarySamples> {
        if n_mc == 0 {
            return Err(Error::InvalidArgument("n_mc must be positive".into()));
        }
        let sampler = lambda.sampler()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts: BTreeMap<ReducedWord, usize> = BTreeMap::new();
        for _ in 0..n_mc {
            *counts.entry(sampler.sample(&mut rng).clone()).or_default() += 1;
        }
        Ok(BoundarySamples {
            rank: lambda.rank,
            depth: lambda.depth,
            weights: counts.values().map(|&c| c as f64 / n_mc as f64).collect(),
            cylinders: counts.into_keys().collect(),
            effective_size: n_mc,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn effective_size(&self) -> usize {
        self.effective_size
    }
}

/// Two rays in the cylinder `c` that part right after it.
fn extensions(c: &ReducedWord) -> (BoundaryRay, BoundaryRay) {
    let first = extend_periodically(c);
    let last = c.last().unwrap_or(Letter::new(1, false));
    // In rank one the cylinder has a single extension.
    let Some(other) = Letter::all(c.rank()).find(|&l| l != last && l != last.inverse()) else {
        return (first.clone(), first);
    };
    let mut head = c.clone();
    let second = if c.is_empty() {
        BoundaryRay::new(head, ReducedWord::new(c.rank(), [other]).expect("letter")).expect("reduced")
    } else {
        head.push(other);
        extend_periodically(&head)
    };
    (first, second)
}

/// Values `F(g·ξ_i)` at each sample. The sample depth must be large enough
/// that the value does not depend on how a cylinder is extended.
fn values_at(
    group: &ActingGroup,
    f: &CylinderFunction,
    g: &ExtElement,
    samples: &BoundarySamples,
) -> Result<Vec<f64>> {
    if f.depth == 0 {
        return Ok(vec![
            f.value_on_prefix(&ReducedWord::identity(f.rank));
            samples.cylinders.len()
        ]);
    }
    let theta = group.theta_of(&g.p)?;
    samples
        .cylinders
        .iter()
        .map(|c| {
            let (x, y) = extensions(c);
            let px = theta.apply_ray(&x)?.left_multiply(&g.w).prefix(f.depth);
            let py = theta.apply_ray(&y)?.left_multiply(&g.w).prefix(f.depth);
            if px != py {
                return Err(Error::TruncationOverflow {
                    depth: f.depth,
                    available: px
                        .letters()
                        .iter()
                        .zip(py.letters())
                        .take_while(|(a, b)| a == b)
                        .count(),
                });
            }
            Ok(f.value_on_prefix(&px))
        })
        .collect()
}

fn weighted_mean_and_stderr(values: &[f64], samples: &BoundarySamples) -> (f64, f64) {
    let mean: f64 = values.iter().zip(&samples.weights).map(|(v, w)| v * w).sum();
    if samples.effective_size == 0 {
        return (mean, 0.0);
    }
    let var: f64 = values
        .iter()
        .zip(&samples.weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum();
    (mean, (var / samples.effective_size as f64).sqrt())
}

/// Rounding tolerance for sums over an exact boundary table.
const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoissonValue {
    pub value: f64,
    pub stderr: f64,
}

fn check_ranks(group: &ActingGroup, f: &CylinderFunction, samples: &BoundarySamples) -> Result<()> {
    for found in [f.rank, samples.rank] {
        if found != group.rank() {
            return Err(Error::RankMismatch {
                expected: group.rank(),
                found,
            });
        }
    }
    Ok(())
}

/// `f(g) = ∫ F(g·ξ) dλ̂(ξ)`.
pub fn poisson_eval(
    group: &ActingGroup,
    f: &CylinderFunction,
    g: &ExtElement,
    samples: &BoundarySamples,
) -> Result<PoissonValue> {
    check_ranks(group, f, samples)?;
    group.check(g)?;
    if f.depth == 0 {
        return Ok(PoissonValue {
            value: f.value_on_prefix(&ReducedWord::identity(f.rank)),
            stderr: 0.0,
        });
    }
    let values = values_at(group, f, g, samples)?;
    let (value, stderr) = weighted_mean_and_stderr(&values, samples);
    Ok(PoissonValue { value, stderr })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub element: ExtElement,
    pub value: f64,
    /// `f(g) − Σ_h μ(h) f(g·h)`.
    pub residual: f64,
    /// Standard error of the residual, computed from the per-sample
    /// differences so the correlation between the terms is accounted for.
    pub stderr: f64,
}

impl ResidualEntry {
    /// `|residual| / stderr`. With a zero standard error (exact boundary
    /// table) a residual at rounding level counts as 0.
    pub fn z_score(&self) -> f64 {
        if self.stderr > 0.0 {
            self.residual.abs() / self.stderr
        } else if self.residual.abs() <= EXACT_TOLERANCE {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicityReport {
    pub max_residual: f64,
    /// Largest residual measured in its own standard errors.
    pub max_z: f64,
    pub entries: Vec<ResidualEntry>,
}

/// Mean-value defect of the Poisson transform of `F` on `test_set`.
pub fn harmonicity_residual(
    group: &ActingGroup,
    measure: &StepMeasure,
    f: &CylinderFunction,
    samples: &BoundarySamples,
    test_set: &[ExtElement],
) -> Result<HarmonicityReport> {
    check_ranks(group, f, samples)?;
    let entries = test_set
        .par_iter()
        .map(|g| {
            group.check(g)?;
            let base = values_at(group, f, g, samples)?;
            // Σ_h μ(h)(F(gξ) − F(ghξ)) vanishes exactly when F(ghξ) = F(gξ).
            let mut diff = vec![0.0; base.len()];
            for (h, p) in measure.atoms() {
                let gh = group.ext_multiply(g, h)?;
                for ((d, b), v) in diff.iter_mut().zip(&base).zip(values_at(group, f, &gh, samples)?) {
                    *d += p * (b - v);
                }
            }
            let (value, _) = weighted_mean_and_stderr(&base, samples);
            let (residual, stderr) = weighted_mean_and_stderr(&diff, samples);
            Ok(ResidualEntry {
                element: g.clone(),
                value,
                residual,
                stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_residual = entries.iter().map(|e| e.residual.abs()).fold(0.0, f64::max);
    let max_z = entries.iter().map(ResidualEntry::z_score).fold(0.0, f64::max);
    Ok(HarmonicityReport {
        max_residual,
        max_z,
        entries,
    })
}
