//! Randomization tests on thresholded eigenvalue distances for matched pairs,
//! conjunctive double randomization and censored double randomization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{symmetrize, BipartiteMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{distinct_sorted, indicator, pad_sorted, OutcomeMatrix};

/// Redraws allowed when a resampled assignment leaves a group too small.
pub const MAX_REDRAWS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Design {
    MatchedPairs,
    Conjunctive,
    Censored,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport<T: Scalar> {
    pub statistic: T,
    pub resampled: Vec<T>,
    pub p_value: T,
    pub seed: u64,
    pub design: Design,
}

/// `(1 + #{resampled >= statistic}) / (A + 1)`.
pub fn p_value<T: Scalar>(statistic: T, resampled: &[T]) -> T {
    let hits = resampled.iter().filter(|&&s| s >= statistic).count();
    T::count(1 + hits) / T::count(resampled.len() + 1)
}

/// Independent generator for resample `index` under `seed`.
pub fn resample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn spectra_on_grid<T: Scalar>(m: &OutcomeMatrix<T>, grid: &[T]) -> Result<Vec<Vec<T>>> {
    grid.iter()
        .map(|&t| Ok(indicator(m, t)?.spectrum()?.values.to_vec()))
        .collect()
}

fn sq_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let len = a.len().max(b.len());
    let (pa, pb) = (pad_sorted(a, len), pad_sorted(b, len));
    pa.iter().zip(&pb).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn sup_distance<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| sq_distance(x, y))
        .fold(T::zero(), |m, d| m.max(d))
}

/// `sup_y Σ_r (λ_r1(y) - λ_r0(y))²` over the grid, each arm normalized by
/// its own size and zero-padded to a common length.
pub fn eig_distance_stat<T: Scalar>(
    m1: &OutcomeMatrix<T>,
    m0: &OutcomeMatrix<T>,
    grid: &[T],
) -> Result<T> {
    if grid.is_empty() {
        return Err(Error::Empty("threshold grid"));
    }
    Ok(sup_distance(&spectra_on_grid(m1, grid)?, &spectra_on_grid(m0, grid)?))
}

fn pooled_values<'a, T: Scalar>(ms: impl IntoIterator<Item = &'a OutcomeMatrix<T>>) -> Vec<T> {
    let mut v: Vec<T> = ms
        .into_iter()
        .flat_map(|m| m.entries().iter().copied())
        .collect();
    distinct_sorted(&mut v)
}

fn check_resamples(a: usize) -> Result<()> {
    if a < 1 {
        return Err(Error::InvalidArgument("number of resamples must be at least 1".into()));
    }
    Ok(())
}

fn check_pi<T: Scalar>(pi: T) -> Result<()> {
    if !(pi > T::zero() && pi < T::one()) {
        return Err(Error::InvalidArgument(format!("pi = {pi} outside (0, 1)")));
    }
    Ok(())
}

fn finish<T: Scalar>(statistic: T, resampled: Vec<T>, seed: u64, design: Design) -> TestReport<T> {
    let p = p_value(statistic, &resampled);
    TestReport {
        statistic,
        resampled,
        p_value: p,
        seed,
        design,
    }
}

/// Matched-pairs design: each resample swaps the arms within every pair
/// independently with probability one half.
pub fn matched_pair_test<T: Scalar>(
    pairs: &[(OutcomeMatrix<T>, OutcomeMatrix<T>)],
    a: usize,
    seed: u64,
) -> Result<TestReport<T>> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair list"));
    }
    check_resamples(a)?;
    let spectra: Vec<(Vec<Vec<T>>, Vec<Vec<T>>)> = pairs
        .par_iter()
        .map(|(m1, m0)| {
            let grid = pooled_values([m1, m0]);
            Ok((spectra_on_grid(m1, &grid)?, spectra_on_grid(m0, &grid)?))
        })
        .collect::<Result<_>>()?;
    let stat_of = |swaps: &[bool]| {
        spectra
            .iter()
            .zip(swaps)
            .map(|((s1, s0), &sw)| if sw { sup_distance(s0, s1) } else { sup_distance(s1, s0) })
            .fold(T::zero(), |m, d| m.max(d))
    };
    let statistic = stat_of(&vec![false; pairs.len()]);
    let resampled: Vec<T> = (0..a)
        .into_par_iter()
        .map(|k| {
            let mut rng = resample_rng(seed, k as u64);
            let swaps: Vec<bool> = (0..pairs.len()).map(|_| rng.gen_bool(0.5)).collect();
            stat_of(&swaps)
        })
        .collect();
    Ok(finish(statistic, resampled, seed, Design::MatchedPairs))
}

fn groups_of(labels: &[u8]) -> Result<[Vec<usize>; 2]> {
    let mut g = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        match l {
            1 => g[0].push(i),
            2 => g[1].push(i),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "group label {l} at position {i} is not 1 or 2"
                )))
            }
        }
    }
    Ok(g)
}

fn conjunctive_stat<T: Scalar>(
    y: &BipartiteMatrix<T>,
    buyers: &[u8],
    sellers: &[u8],
    grid: &[T],
) -> Result<Option<T>> {
    let b = groups_of(buyers)?;
    let s = groups_of(sellers)?;
    if b.iter().chain(s.iter()).any(|g| g.is_empty()) {
        return Ok(None);
    }
    let mut cells = Vec::with_capacity(4);
    for rows in &b {
        for cols in &s {
            let sym = symmetrize(&y.select(rows, cols)?);
            cells.push(spectra_on_grid(&sym, grid)?);
        }
    }
    let mut stat = T::zero();
    for i in 0..cells.len() {
        for j in i..cells.len() {
            stat = stat.max(sup_distance(&cells[i], &cells[j]));
        }
    }
    Ok(Some(stat))
}

/// Draws labels in {1, 2} with `P(label = 1) = pi`.
pub fn draw_labels<R: Rng, T: Scalar>(rng: &mut R, n: usize, pi: T) -> Vec<u8> {
    let p = pi.to_f64_lossy();
    (0..n).map(|_| if rng.gen_bool(p) { 1 } else { 2 }).collect()
}

/// Conjunctive double randomization on a buyer × seller outcome matrix.
pub fn conjunctive_test<T: Scalar>(
    y: &BipartiteMatrix<T>,
    buyer_groups: &[u8],
    seller_groups: &[u8],
    pi: T,
    a: usize,
    seed: u64,
) -> Result<TestReport<T>> {
    check_pi(pi)?;
    check_resamples(a)?;
    if buyer_groups.len() != y.n_rows() || seller_groups.len() != y.n_cols() {
        return Err(Error::Dimension(format!(
            "labels ({}, {}) do not match matrix shape {:?}",
            buyer_groups.len(),
            seller_groups.len(),
            y.shape()
        )));
    }
    let mut vals: Vec<T> = y.entries().iter().copied().collect();
    vals.push(T::zero());
    let grid = distinct_sorted(&mut vals);
    let statistic = conjunctive_stat(y, buyer_groups, seller_groups, &grid)?.ok_or_else(|| {
        Error::InvalidArgument("observed assignment leaves a buyer or seller group empty".into())
    })?;
    let resampled: Vec<T> = (0..a)
        .into_par_iter()
        .map(|k| {
            let mut rng = resample_rng(seed, k as u64);
            for _ in 0..MAX_REDRAWS {
                let b = draw_labels(&mut rng, y.n_rows(), pi);
                let s = draw_labels(&mut rng, y.n_cols(), pi);
                if let Some(t) = conjunctive_stat(y, &b, &s, &grid)? {
                    return Ok(t);
                }
            }
            Err(Error::Resample {
                retries: MAX_REDRAWS,
                reason: format!("resample {k} kept leaving a group empty"),
            })
        })
        .collect::<Result<_>>()?;
    Ok(finish(statistic, resampled, seed, Design::Conjunctive))
}

/// Bernoulli(pi) subset of `0..n` with at least `min` members.
pub fn draw_subset<R: Rng, T: Scalar>(rng: &mut R, n: usize, pi: T, min: usize) -> Option<Vec<usize>> {
    let p = pi.to_f64_lossy();
    for _ in 0..MAX_REDRAWS {
        let idx: Vec<usize> = (0..n).filter(|_| rng.gen_bool(p)).collect();
        if idx.len() >= min {
            return Some(idx);
        }
    }
    None
}

/// Censored double randomization: resamples are principal submatrices of the
/// control matrix compared against the fixed control spectra.
pub fn censored_test<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    pi: T,
    a: usize,
    seed: u64,
) -> Result<TestReport<T>> {
    check_pi(pi)?;
    check_resamples(a)?;
    if y0.n() < 2 {
        return Err(Error::InvalidArgument("control set needs at least two agents".into()));
    }
    let grid = pooled_values([y1, y0]);
    let s0 = spectra_on_grid(y0, &grid)?;
    let statistic = sup_distance(&spectra_on_grid(y1, &grid)?, &s0);
    let resampled: Vec<T> = (0..a)
        .into_par_iter()
        .map(|k| {
            let mut rng = resample_rng(seed, k as u64);
            let idx = draw_subset(&mut rng, y0.n(), pi, 2).ok_or_else(|| Error::Resample {
                retries: MAX_REDRAWS,
                reason: format!("resample {k} selected fewer than two agents"),
            })?;
            Ok(sup_distance(&spectra_on_grid(&y0.principal(&idx), &grid)?, &s0))
        })
        .collect::<Result<_>>()?;
    Ok(finish(statistic, resampled, seed, Design::Censored))
}
