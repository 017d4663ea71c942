//! Automorphisms of a free group given by generator-image tables.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::words::{common_prefix_length, words_of_length, BoundaryRay, Letter, ReducedWord};

/// An automorphism together with a verified inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Automorphism {
    rank: usize,
    image: Vec<ReducedWord>,
    inverse_image: Vec<ReducedWord>,
}

impl Automorphism {
    /// Builds an automorphism from the images of the generators and the
    /// images under the declared inverse. Both compositions are checked to
    /// fix every generator.
    pub fn new(image: Vec<ReducedWord>, inverse_image: Vec<ReducedWord>) -> Result<Automorphism> {
        let rank = image.len();
        if inverse_image.len() != rank {
            return Err(Error::RankMismatch {
                expected: rank,
                found: inverse_image.len(),
            });
        }
        for w in image.iter().chain(&inverse_image) {
            w.check_rank(rank)?;
        }
        let phi = Automorphism {
            rank,
            image,
            inverse_image,
        };
        for g in 1..=rank {
            let x = ReducedWord::generator(rank, g);
            let there_and_back = phi.apply_unchecked(&phi.apply_inverse_unchecked(&x));
            let back_and_there = phi.apply_inverse_unchecked(&phi.apply_unchecked(&x));
            if there_and_back != x || back_and_there != x {
                return Err(Error::InverseMismatch {
                    generator: Letter::new(g, false).to_char(),
                });
            }
        }
        Ok(phi)
    }

    /// Parses image words given in the letter encoding.
    pub fn parse(rank: usize, image: &[&str], inverse_image: &[&str]) -> Result<Automorphism> {
        if image.len() != rank || inverse_image.len() != rank {
            return Err(Error::RankMismatch {
                expected: rank,
                found: image.len().min(inverse_image.len()),
            });
        }
        let parse_all = |v: &[&str]| -> Result<Vec<ReducedWord>> {
            v.iter().map(|s| ReducedWord::parse(rank, s)).collect()
        };
        Automorphism::new(parse_all(image)?, parse_all(inverse_image)?)
    }

    pub fn identity(rank: usize) -> Automorphism {
        let gens: Vec<_> = (1..=rank).map(|g| ReducedWord::generator(rank, g)).collect();
        Automorphism {
            rank,
            image: gens.clone(),
            inverse_image: gens,
        }
    }

    /// Conjugation `x ↦ g x g⁻¹`.
    pub fn inner(g: &ReducedWord) -> Automorphism {
        let rank = g.rank();
        let gi = g.invert();
        let conj = |a: &ReducedWord, x: ReducedWord, b: &ReducedWord| {
            a.multiply(&x).and_then(|y| y.multiply(b)).expect("same rank")
        };
        let image = (1..=rank)
            .map(|i| conj(g, ReducedWord::generator(rank, i), &gi))
            .collect();
        let inverse_image = (1..=rank)
            .map(|i| conj(&gi, ReducedWord::generator(rank, i), g))
            .collect();
        Automorphism {
            rank,
            image,
            inverse_image,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn images(&self) -> &[ReducedWord] {
        &self.image
    }

    pub fn inverse_images(&self) -> &[ReducedWord] {
        &self.inverse_image
    }

    pub fn max_image_len(&self) -> usize {
        self.image
            .iter()
            .chain(&self.inverse_image)
            .map(ReducedWord::len)
            .max()
            .unwrap_or(0)
    }

    pub fn is_identity(&self) -> bool {
        self.image
            .iter()
            .enumerate()
            .all(|(i, w)| w.len() == 1 && w.letters()[0] == Letter::new(i + 1, false))
    }

    pub fn apply(&self, w: &ReducedWord) -> Result<ReducedWord> {
        w.check_rank(self.rank)?;
        Ok(self.apply_unchecked(w))
    }

    pub(crate) fn apply_unchecked(&self, w: &ReducedWord) -> ReducedWord {
        apply_table(&self.image, self.rank, w.letters())
    }

    pub(crate) fn apply_letters(&self, letters: &[Letter]) -> ReducedWord {
        apply_table(&self.image, self.rank, letters)
    }

    pub fn apply_inverse(&self, w: &ReducedWord) -> Result<ReducedWord> {
        w.check_rank(self.rank)?;
        Ok(self.apply_inverse_unchecked(w))
    }

    fn apply_inverse_unchecked(&self, w: &ReducedWord) -> ReducedWord {
        apply_table(&self.inverse_image, self.rank, w.letters())
    }

    pub fn inverse(&self) -> Automorphism {
        Automorphism {
            rank: self.rank,
            image: self.inverse_image.clone(),
            inverse_image: self.image.clone(),
        }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                expected: self.rank,
                found: other.rank,
            });
        }
        Ok(self.compose_unchecked(other))
    }

    pub(crate) fn compose_unchecked(&self, other: &Automorphism) -> Automorphism {
        let image = other.image.iter().map(|w| self.apply_unchecked(w)).collect();
        let inverse_image = self
            .inverse_image
            .iter()
            .map(|w| other.apply_inverse_unchecked(w))
            .collect();
        Automorphism {
            rank: self.rank,
            image,
            inverse_image,
        }
    }

    /// `k`-fold composition; negative `k` iterates the declared inverse.
    pub fn power(&self, k: i64) -> Automorphism {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Automorphism::identity(self.rank);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose_unchecked(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.compose_unchecked(&sq);
            }
        }
        acc
    }

    /// Exact image of an eventually periodic ray:
    /// `φ(h · c^∞) = φ(h) · φ(c)^∞`, with `φ(c)` cyclically reduced.
    pub fn apply_ray(&self, r: &BoundaryRay) -> Result<BoundaryRay> {
        r.head().check_rank(self.rank)?;
        let head = self.apply_unchecked(r.head());
        let (core, conj) = self.apply_unchecked(r.cycle()).cyclic_reduce();
        let mut prefix = head;
        prefix.append_reduced(conj.letters());
        Ok(BoundaryRay::from_parts(prefix, core))
    }

    /// Applies the automorphism to the first `depth + margin` letters of the
    /// ray and returns the first `depth` letters of the reduced image.
    ///
    /// A letter of the truncated image survives only if it agrees with the
    /// image of the whole ray; the tail of a truncated image can still cancel
    /// against letters beyond the cut. The result is therefore independent of
    /// the margin whenever it is `Ok`.
    pub fn boundary_apply(&self, r: &BoundaryRay, depth: usize, margin: usize) -> Result<ReducedWord> {
        if depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        r.head().check_rank(self.rank)?;
        let img = self.apply_unchecked(&r.prefix(depth + margin));
        let exact = self.apply_ray(r)?;
        let available = exact.common_prefix_length_with_word(&img);
        if available < depth {
            return Err(Error::TruncationOverflow { depth, available });
        }
        Ok(img.prefix(depth))
    }

    /// Margin used when `self` is the `k`-th power of a generator automorphism:
    /// `|k| · (max image length) · 2`.
    pub fn default_margin(generator: &Automorphism, k: i64) -> usize {
        (k.unsigned_abs() as usize)
            .saturating_mul(generator.max_image_len())
            .saturating_mul(2)
    }
}

// Inverse letters map to inverted images, walked backwards in place.
fn apply_table(image: &[ReducedWord], rank: usize, letters: &[Letter]) -> ReducedWord {
    let mut out = ReducedWord::identity(rank);
    for &l in letters {
        let img = &image[l.generator() - 1];
        if l.is_inverse() {
            for &m in img.letters().iter().rev() {
                out.push(m.inverse());
            }
        } else {
            out.append_reduced(img.letters());
        }
    }
    out
}

pub fn apply(phi: &Automorphism, w: &ReducedWord) -> Result<ReducedWord> {
    phi.apply(w)
}

pub fn compose(phi: &Automorphism, psi: &Automorphism) -> Result<Automorphism> {
    phi.compose(psi)
}

pub fn power(phi: &Automorphism, k: i64) -> Automorphism {
    phi.power(k)
}

pub fn boundary_apply(
    phi: &Automorphism,
    r: &BoundaryRay,
    depth: usize,
    margin: usize,
) -> Result<ReducedWord> {
    phi.boundary_apply(r, depth, margin)
}

/// Ordinary least squares `y ≈ intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> LinearFit {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = my - slope * mx;
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
        LinearFit {
            slope,
            intercept,
            r_squared,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GrowthKind {
    Polynomial,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub kind: GrowthKind,
    pub degree_estimate: Option<u32>,
    /// Nats per iteration.
    pub rate_estimate: Option<f64>,
    pub iterations_used: usize,
    /// `|core(φ^m(x_i))|` for `m = 0..=iterations_used`, one row per generator.
    pub per_generator_lengths: Vec<Vec<usize>>,
    pub polynomial_fit: LinearFit,
    pub exponential_fit: LinearFit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthOptions {
    /// Minimum R² separation between the two models.
    pub fit_gap: f64,
    /// Iteration stops once any tracked word exceeds this length.
    pub max_word_len: usize,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions {
            fit_gap: 0.15,
            max_word_len: 4_000_000,
        }
    }
}

pub fn classify_growth(phi: &Automorphism, max_iter: usize) -> Result<GrowthReport> {
    classify_growth_with(phi, max_iter, &GrowthOptions::default())
}

/// Iterates `φ` on the conjugacy classes of the generators and fits the
/// largest cyclically reduced length against `log(1+m)` and against `m`.
pub fn classify_growth_with(
    phi: &Automorphism,
    max_iter: usize,
    opts: &GrowthOptions,
) -> Result<GrowthReport> {
    if max_iter < 8 {
        return Err(Error::InvalidArgument(format!(
            "max_iter must be at least 8, got {max_iter}"
        )));
    }
    let d = phi.rank();
    let mut words: Vec<ReducedWord> = (1..=d).map(|g| ReducedWord::generator(d, g)).collect();
    let mut lengths: Vec<Vec<usize>> = words.iter().map(|w| vec![w.cyclic_length()]).collect();
    let mut iterations_used = 0;
    for _ in 0..max_iter {
        if words.iter().any(|w| w.len() > opts.max_word_len) {
            break;
        }
        // Tracking the cyclic core keeps the conjugacy class and drops the
        // conjugator, so inner twists of φ see the same series and budget.
        for (w, row) in words.iter_mut().zip(lengths.iter_mut()) {
            *w = phi.apply_unchecked(w).cyclic_reduce().0;
            row.push(w.len());
        }
        iterations_used += 1;
    }
    if iterations_used < 2 {
        return Err(Error::Budget(format!(
            "word length exceeded {} after {iterations_used} iterations",
            opts.max_word_len
        )));
    }
    let series: Vec<f64> = (0..=iterations_used)
        .map(|m| lengths.iter().map(|row| row[m]).max().unwrap_or(1).max(1) as f64)
        .collect();
    let ys: Vec<f64> = series.iter().map(|l| l.ln()).collect();
    let ms: Vec<f64> = (0..=iterations_used).map(|m| m as f64).collect();
    let log_ms: Vec<f64> = ms.iter().map(|m| m.ln_1p()).collect();
    let polynomial_fit = LinearFit::fit(&log_ms, &ys);
    let exponential_fit = LinearFit::fit(&ms, &ys);
    let per_generator_lengths = lengths;

    let constant = ys.iter().all(|y| (y - ys[0]).abs() < 1e-12);
    let kind = if constant {
        GrowthKind::Polynomial
    } else if (polynomial_fit.r_squared - exponential_fit.r_squared).abs() < opts.fit_gap {
        return Err(Error::Inconclusive {
            polynomial: polynomial_fit,
            exponential: exponential_fit,
        });
    } else if polynomial_fit.r_squared > exponential_fit.r_squared {
        GrowthKind::Polynomial
    } else {
        GrowthKind::Exponential
    };
    let (degree_estimate, rate_estimate) = match kind {
        GrowthKind::Polynomial => (Some(polynomial_fit.slope.round().max(0.0) as u32), None),
        GrowthKind::Exponential => (None, Some(exponential_fit.slope.max(0.0))),
    };
    if kind == GrowthKind::Exponential && exponential_fit.slope <= 0.0 {
        return Err(Error::Inconclusive {
            polynomial: polynomial_fit,
            exponential: exponential_fit,
        });
    }
    Ok(GrowthReport {
        kind,
        degree_estimate,
        rate_estimate,
        iterations_used,
        per_generator_lengths,
        polynomial_fit,
        exponential_fit,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CancellationBound {
    pub value: usize,
    pub search_length: usize,
}

/// Default cap on the number of word pairs examined.
pub const CANCELLATION_BUDGET: usize = 50_000_000;

pub fn cancellation_bound(phi: &Automorphism, search_length: usize) -> Result<CancellationBound> {
    cancellation_bound_with(phi, search_length, CANCELLATION_BUDGET)
}

/// Maximum cancellation between `φ(u)` and `φ(v)` over nonempty reduced
/// `u`, `v` with `|u|, |v| ≤ L` and `u · v` reduced. Exhaustive.
pub fn cancellation_bound_with(
    phi: &Automorphism,
    search_length: usize,
    pair_budget: usize,
) -> Result<CancellationBound> {
    if search_length == 0 {
        return Err(Error::InvalidArgument("search length must be at least 1".into()));
    }
    let d = phi.rank();
    let words: Vec<ReducedWord> = (1..=search_length).flat_map(|k| words_of_length(d, k)).collect();
    let pairs = words.len().saturating_mul(words.len());
    if pairs > pair_budget {
        return Err(Error::Budget(format!(
            "{pairs} word pairs exceed the budget of {pair_budget}"
        )));
    }
    let images: Vec<ReducedWord> = words.iter().map(|w| phi.apply_unchecked(w)).collect();
    let inverted: Vec<ReducedWord> = images.iter().map(ReducedWord::invert).collect();
    let mut value = 0;
    for (u, ui) in words.iter().zip(&inverted) {
        let tail = u.last().expect("nonempty");
        for (v, vi) in words.iter().zip(&images) {
            if v.first() == Some(tail.inverse()) {
                continue;
            }
            value = value.max(common_prefix_length(ui, vi));
        }
    }
    Ok(CancellationBound { value, search_length })
}
