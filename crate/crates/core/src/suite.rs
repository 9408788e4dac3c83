//! The exhaustive small-sequent suite shared by the cross-checks.

use std::collections::BTreeSet;

use crate::matrix::Sequent;
use crate::syntax::{Formula, Signature};

/// Bounds of the suite. Sequents with overlapping sides are skipped since
/// they hold everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteBounds {
    pub vars: u32,
    pub max_depth: usize,
    pub max_side: usize,
    /// Cap on the summed depth of all formulas in a sequent.
    pub max_total_depth: usize,
}

impl Default for SuiteBounds {
    fn default() -> Self {
        SuiteBounds {
            vars: 2,
            max_depth: 2,
            max_side: 2,
            max_total_depth: 2,
        }
    }
}

/// All formulas over `p1..p{vars}` of depth at most `max_depth`, ordered by
/// depth then structurally.
pub fn formulas_up_to(sig: &Signature, vars: u32, max_depth: usize) -> Vec<Formula> {
    let mut layers: Vec<Vec<Formula>> = vec![(1..=vars).map(Formula::var).collect()];
    for d in 1..=max_depth {
        let below: Vec<&Formula> = layers.iter().flatten().collect();
        let mut layer = BTreeSet::new();
        for c in 0..sig.len() {
            let k = sig.arity(c);
            if k == 0 {
                if d == 1 {
                    layer.insert(Formula::app(c, Vec::new()));
                }
                continue;
            }
            let mut idx = vec![0usize; k];
            loop {
                let args: Vec<Formula> = idx.iter().map(|&i| below[i].clone()).collect();
                if args.iter().any(|a| a.depth() == d - 1) {
                    layer.insert(Formula::app(c, args));
                }
                if !crate::matrix::bump(&mut idx, below.len()) {
                    break;
                }
            }
        }
        layers.push(layer.into_iter().collect());
    }
    layers.into_iter().flatten().collect()
}

/// Every sequent within the bounds, in a fixed order.
pub fn sequents(sig: &Signature, bounds: SuiteBounds) -> Vec<Sequent> {
    let pool = formulas_up_to(sig, bounds.vars, bounds.max_depth);
    let sides = subsets(&pool, bounds.max_side, bounds.max_total_depth);
    let mut out = Vec::new();
    for g in &sides {
        let used: usize = g.iter().map(|&i| pool[i].depth()).sum();
        for d in &sides {
            let total: usize = used + d.iter().map(|&i| pool[i].depth()).sum::<usize>();
            if total > bounds.max_total_depth || g.iter().any(|i| d.contains(i)) {
                continue;
            }
            out.push(Sequent::new(
                g.iter().map(|&i| pool[i].clone()),
                d.iter().map(|&i| pool[i].clone()),
            ));
        }
    }
    out
}

/// Index sets of size at most `max` whose summed depth stays in budget.
fn subsets(pool: &[Formula], max: usize, budget: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![(Vec::new(), 0usize)];
    for _ in 0..max {
        let mut next = Vec::new();
        for (set, cost) in &frontier {
            let start = set.last().map_or(0, |&l: &usize| l + 1);
            for (i, f) in pool.iter().enumerate().skip(start) {
                let c = cost + f.depth();
                if c <= budget {
                    let mut s: Vec<usize> = set.clone();
                    s.push(i);
                    out.push(s.clone());
                    next.push((s, c));
                }
            }
        }
        frontier = next;
    }
    out
}
