//! Chain structure of finite element sets: longest chains, the
//! t-chain-free predicate, and partition into antichains by chain level.
//!
//! A chain of length t is a set of t + 1 pairwise comparable elements, so
//! "t-chain free" means every comparable subset has at most t elements.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::lattices::{LatticeCtx, LatticeElem};

/// Longest chain found in an element set, with one witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    /// Number of elements in a longest chain (0 for the empty set).
    pub height: usize,
    /// A longest chain, strictly increasing.
    pub witness: Vec<LatticeElem>,
}

fn sorted_by_rank(ctx: &LatticeCtx, elems: &[LatticeElem]) -> Result<Vec<(u32, LatticeElem)>> {
    let set: BTreeSet<&LatticeElem> = elems.iter().collect();
    let mut keyed = set
        .into_iter()
        .map(|e| Ok((ctx.rank(e)?, e.clone())))
        .collect::<Result<Vec<_>>>()?;
    keyed.sort();
    Ok(keyed)
}

/// Levels of the longest-chain-ending-here dynamic program. Entry `i` is
/// paired with the predecessor index witnessing it.
fn chain_levels(
    ctx: &LatticeCtx,
    keyed: &[(u32, LatticeElem)],
) -> Result<(Vec<usize>, Vec<Option<usize>>)> {
    let mut level = vec![1usize; keyed.len()];
    let mut prev: Vec<Option<usize>> = vec![None; keyed.len()];
    for i in 0..keyed.len() {
        for j in 0..i {
            // Elements of equal rank are never strictly comparable.
            if keyed[j].0 < keyed[i].0
                && level[j] + 1 > level[i]
                && ctx.leq(&keyed[j].1, &keyed[i].1)?
            {
                level[i] = level[j] + 1;
                prev[i] = Some(j);
            }
        }
    }
    Ok((level, prev))
}

/// Finds a longest chain in the given elements (duplicates ignored).
pub fn longest_chain(ctx: &LatticeCtx, elems: &[LatticeElem]) -> Result<ChainReport> {
    let keyed = sorted_by_rank(ctx, elems)?;
    if keyed.is_empty() {
        return Ok(ChainReport {
            height: 0,
            witness: vec![],
        });
    }
    let (level, prev) = chain_levels(ctx, &keyed)?;
    let best = (0..keyed.len()).max_by_key(|&i| level[i]).expect("nonempty");
    let mut witness = Vec::with_capacity(level[best]);
    let mut cur = Some(best);
    while let Some(i) = cur {
        witness.push(keyed[i].1.clone());
        cur = prev[i];
    }
    witness.reverse();
    Ok(ChainReport {
        height: level[best],
        witness,
    })
}

/// Whether no chain in the set has more than `t` elements.
pub fn is_chain_free(ctx: &LatticeCtx, elems: &[LatticeElem], t: u64) -> Result<bool> {
    Ok(longest_chain(ctx, elems)?.height as u64 <= t)
}

/// Partitions the set into antichains by longest-chain level: block `i`
/// holds the elements whose longest chain ending there has `i + 1`
/// elements. The number of blocks equals the longest chain length.
pub fn mirsky_antichains(
    ctx: &LatticeCtx,
    elems: &[LatticeElem],
) -> Result<Vec<Vec<LatticeElem>>> {
    let keyed = sorted_by_rank(ctx, elems)?;
    let (level, _) = chain_levels(ctx, &keyed)?;
    let height = level.iter().copied().max().unwrap_or(0);
    let mut layers = vec![Vec::new(); height];
    for (i, (_, e)) in keyed.iter().enumerate() {
        layers[level[i] - 1].push(e.clone());
    }
    Ok(layers)
}
