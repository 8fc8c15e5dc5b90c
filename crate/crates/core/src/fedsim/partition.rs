//! Assignment of sample indices to workers.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Random permutation of `0..n` cut into `k` shards whose sizes differ by at
/// most one (the first `n % k` shards are one larger).
pub fn partition_iid<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidInput("cannot partition over zero workers".into()));
    }
    if n < k {
        return Err(Error::InvalidInput(format!("{n} samples cannot cover {k} workers")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    Ok(split_even(&idx, k))
}

/// Class-skewed split: for each class a random half is spread evenly over all
/// `k` workers and the other half evenly over the `group_size` workers of
/// group `c mod (k / group_size)`.
pub fn partition_noniid<R: Rng + ?Sized>(
    labels: &[usize],
    k: usize,
    group_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if k == 0 || group_size == 0 || !k.is_multiple_of(group_size) {
        return Err(Error::InvalidInput(format!(
            "group_size {group_size} must divide the worker count {k}"
        )));
    }
    let groups = k / group_size;
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    if num_classes < groups {
        return Err(Error::InvalidInput(format!(
            "{num_classes} classes cannot feed {groups} worker groups"
        )));
    }
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut shards = vec![Vec::new(); k];
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(rng);
        let half = members.len() / 2;
        // Rotate which workers absorb remainders so no index is favored.
        for (j, chunk) in split_even(&members[..half], k).into_iter().enumerate() {
            shards[(c + j) % k].extend(chunk);
        }
        let group = c % groups;
        for (j, chunk) in split_even(&members[half..], group_size).into_iter().enumerate() {
            shards[group * group_size + (c + j) % group_size].extend(chunk);
        }
    }
    Ok(shards)
}

fn split_even(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let base = items.len() / k;
    let extra = items.len() % k;
    let mut out = Vec::with_capacity(k);
    let mut at = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        out.push(items[at..at + len].to_vec());
        at += len;
    }
    out
}
