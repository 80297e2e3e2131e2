//! Exact expansion of `E tr(Z^{2N})` for a Hermitian hollow `Z` with
//! independent circularly symmetric entries `|z_ij| ~ |r_ij|`.
//!
//! `||Z^N||_F^2 = tr(Z^{2N})` expands into closed walks of length 2N on K
//! vertices without self-loops. Circular symmetry kills every walk unless
//! each edge is crossed equally often in both directions; an edge crossed c
//! times each way contributes `E|z|^{2c} = B_{c+1,M}`. Walks are grouped by
//! shape (restricted-growth vertex labelling), and each shape with v
//! distinct vertices occurs `K (K-1) ... (K-v+1)` times.

use std::collections::BTreeMap;

use super::special::b_am;
use crate::error::{Error, Result};

/// Largest N accepted by the expansion (the shape count grows like the
/// Bell numbers of 2N).
pub const MAX_WALK_TERMS: usize = 6;

/// One group of walk shapes: `count` shapes, each on `vertices` distinct
/// vertices, with edge multiplicities `edge_orders` (sorted, each entry c
/// standing for a factor `B_{c+1,M}`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkTerm {
    pub vertices: usize,
    pub edge_orders: Vec<usize>,
    pub count: u64,
}

/// All non-vanishing walk shapes of length 2N, grouped.
pub fn walk_terms(terms: usize) -> Result<Vec<WalkTerm>> {
    if !(1..=MAX_WALK_TERMS).contains(&terms) {
        return Err(Error::Parameter(format!(
            "walk expansion supports N in 1..={MAX_WALK_TERMS}, got {terms}"
        )));
    }
    let len = 2 * terms;
    let mut groups: BTreeMap<(usize, Vec<usize>), u64> = BTreeMap::new();
    let mut seq = vec![0usize; len];
    extend(&mut seq, 1, 0, &mut groups);
    Ok(groups
        .into_iter()
        .map(|((vertices, edge_orders), count)| WalkTerm {
            vertices,
            edge_orders,
            count,
        })
        .collect())
}

fn extend(seq: &mut [usize], pos: usize, max_label: usize, groups: &mut BTreeMap<(usize, Vec<usize>), u64>) {
    let len = seq.len();
    if pos == len {
        if seq[len - 1] == seq[0] {
            return;
        }
        if let Some(orders) = balanced_edge_orders(seq) {
            *groups.entry((max_label + 1, orders)).or_insert(0) += 1;
        }
        return;
    }
    for v in 0..=max_label + 1 {
        if v == seq[pos - 1] {
            continue;
        }
        seq[pos] = v;
        extend(seq, pos + 1, max_label.max(v), groups);
    }
}

/// Per undirected edge, the number of crossings in each direction, or
/// `None` if some edge is unbalanced.
fn balanced_edge_orders(seq: &[usize]) -> Option<Vec<usize>> {
    let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, &a) in seq.iter().enumerate() {
        let b = seq[(i + 1) % seq.len()];
        *directed.entry((a, b)).or_insert(0) += 1;
    }
    let mut orders = Vec::new();
    for (&(a, b), &c) in &directed {
        if directed.get(&(b, a)) != Some(&c) {
            return None;
        }
        if a < b {
            orders.push(c);
        }
    }
    orders.sort_unstable();
    Some(orders)
}

/// `E ||Z^N||_F^2` from the walk expansion with moments `B_{c+1,M}`.
pub fn epsilon_walk_expansion(antennas: usize, users: usize, terms: usize) -> Result<f64> {
    let moments: Vec<f64> = (0..=terms)
        .map(|c| b_am(c as f64 + 1.0, antennas))
        .collect::<Result<_>>()?;
    let k = users as f64;
    Ok(walk_terms(terms)?
        .iter()
        .map(|t| {
            let placements: f64 = (0..t.vertices).map(|i| k - i as f64).product();
            let weight: f64 = t.edge_orders.iter().map(|&c| moments[c]).product();
            t.count as f64 * placements * weight
        })
        .sum())
}
