//! Bootstrap roots `tau_n (Pi* - Pi_hat)` under three resampling schemes.
//!
//! Draw `b` uses its own random stream derived from `(seed, b)`, so an
//! ensemble is identical whatever the thread count.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Contributions;
use crate::error::{RankError, Result};
use crate::rng::stream_rng;
use crate::scalar::{from_usize, Real};

/// Which resampling scheme produced an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Empirical,
    PairsCluster,
    CircularBlock { block_size: usize },
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Empirical => write!(f, "empirical"),
            Scheme::PairsCluster => write!(f, "pairs-cluster"),
            Scheme::CircularBlock { block_size } => write!(f, "circular-block(b={block_size})"),
        }
    }
}

/// Bootstrap draws of the scaled estimation error, each m x k.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble<T: Real> {
    pub draws: Vec<DMatrix<T>>,
    pub scheme: Scheme,
    pub seed: u64,
}

impl<T: Real> BootstrapEnsemble<T> {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

fn check_draws(draws: usize) -> Result<()> {
    if draws == 0 {
        return Err(RankError::InvalidArgument("number of bootstrap draws must be positive".into()));
    }
    Ok(())
}

/// Multinomial counts from `n` uniform draws over `categories` cells.
pub fn multinomial_counts<R: Rng>(rng: &mut R, n: usize, categories: usize) -> Vec<u32> {
    let mut counts = vec![0u32; categories];
    for _ in 0..n {
        counts[rng.gen_range(0..categories)] += 1;
    }
    counts
}

/// Scaled root for weights on the columns of `columns`:
/// `(sum_i w_i col_i - total * centre) / sqrt(n)`.
fn weighted_root<T: Real>(
    columns: &DMatrix<T>,
    weights: &[u32],
    centre: &DVector<T>,
    n: usize,
    shape: (usize, usize),
) -> DMatrix<T> {
    let mut acc = DVector::<T>::zeros(columns.nrows());
    for (i, &w) in weights.iter().enumerate() {
        if w != 0 {
            acc.axpy(T::from_u32(w).expect("small count"), &columns.column(i), T::one());
        }
    }
    acc -= centre;
    acc /= from_usize::<T>(n).sqrt();
    DMatrix::from_column_slice(shape.0, shape.1, acc.as_slice())
}

/// Nonparametric bootstrap: each draw reweights the `n` observations by a
/// multinomial count vector with `n` trials.
pub fn draw_empirical<T: Real>(contribs: &Contributions<T>, draws: usize, seed: u64) -> Result<BootstrapEnsemble<T>> {
    check_draws(draws)?;
    let n = contribs.len();
    if n < 2 {
        return Err(RankError::InsufficientData { needed: 2, got: n });
    }
    let centre = contribs.mean_vec() * from_usize::<T>(n);
    let shape = (contribs.rows(), contribs.cols());
    let out = (0..draws)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let w = multinomial_counts(&mut rng, n, n);
            weighted_root(contribs.columns(), &w, &centre, n, shape)
        })
        .collect();
    Ok(BootstrapEnsemble { draws: out, scheme: Scheme::Empirical, seed })
}

/// Pairs cluster bootstrap: clusters are resampled with replacement and each
/// carries all its observations. The root is
/// `n^{-1/2} sum_g W_g (S_g - n_g Pi_hat)` with `S_g` the cluster sum.
pub fn draw_cluster<T: Real>(
    contribs: &Contributions<T>,
    cluster_ids: &[usize],
    draws: usize,
    seed: u64,
) -> Result<BootstrapEnsemble<T>> {
    check_draws(draws)?;
    let n = contribs.len();
    if cluster_ids.len() != n {
        return Err(RankError::InvalidInput(format!(
            "{} cluster labels for {n} observations",
            cluster_ids.len()
        )));
    }
    let (sums, sizes) = cluster_sums(contribs, cluster_ids);
    let groups = sizes.len();
    if groups < 2 {
        return Err(RankError::InsufficientData { needed: 2, got: groups });
    }
    let mean = contribs.mean_vec();
    let mut centred = sums;
    for (g, mut col) in centred.column_iter_mut().enumerate() {
        col.axpy(-from_usize::<T>(sizes[g]), &mean, T::one());
    }
    let zero = DVector::<T>::zeros(mean.len());
    let shape = (contribs.rows(), contribs.cols());
    let out = (0..draws)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let w = multinomial_counts(&mut rng, groups, groups);
            weighted_root(&centred, &w, &zero, n, shape)
        })
        .collect();
    Ok(BootstrapEnsemble { draws: out, scheme: Scheme::PairsCluster, seed })
}

/// Sums of vectorised contributions per cluster, clusters in order of first
/// appearance, and the cluster sizes.
pub fn cluster_sums<T: Real>(contribs: &Contributions<T>, cluster_ids: &[usize]) -> (DMatrix<T>, Vec<usize>) {
    let mut index = std::collections::HashMap::new();
    let mut order = Vec::new();
    for &id in cluster_ids {
        index.entry(id).or_insert_with(|| {
            order.push(id);
            order.len() - 1
        });
    }
    let mut sums = DMatrix::<T>::zeros(contribs.rows() * contribs.cols(), order.len());
    let mut sizes = vec![0usize; order.len()];
    for (i, id) in cluster_ids.iter().enumerate() {
        let g = index[id];
        sizes[g] += 1;
        let mut col = sums.column_mut(g);
        col += contribs.columns().column(i);
    }
    (sums, sizes)
}

/// Circular block bootstrap: `ceil(n/b)` blocks of `b` consecutive indices
/// with wraparound, starts drawn uniformly, truncated to `n` indices.
pub fn draw_circular_block<T: Real>(
    contribs: &Contributions<T>,
    block_size: usize,
    draws: usize,
    seed: u64,
) -> Result<BootstrapEnsemble<T>> {
    check_draws(draws)?;
    let n = contribs.len();
    if n < 2 {
        return Err(RankError::InsufficientData { needed: 2, got: n });
    }
    if block_size == 0 || block_size > n {
        return Err(RankError::InvalidArgument(format!("block size {block_size} must be in 1..={n}")));
    }
    let blocks = n.div_ceil(block_size);
    let centre = contribs.mean_vec() * from_usize::<T>(n);
    let shape = (contribs.rows(), contribs.cols());
    let out = (0..draws)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let starts: Vec<usize> = (0..blocks).map(|_| rng.gen_range(0..n)).collect();
            let w = block_counts(&starts, block_size, n);
            weighted_root(contribs.columns(), &w, &centre, n, shape)
        })
        .collect();
    Ok(BootstrapEnsemble {
        draws: out,
        scheme: Scheme::CircularBlock { block_size },
        seed,
    })
}

/// Occurrence counts of each index when the blocks starting at `starts` are
/// concatenated and truncated to `n`.
pub(crate) fn block_counts(starts: &[usize], block_size: usize, n: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    let mut taken = 0;
    'outer: for &s in starts {
        for j in 0..block_size {
            if taken == n {
                break 'outer;
            }
            counts[(s + j) % n] += 1;
            taken += 1;
        }
    }
    counts
}
