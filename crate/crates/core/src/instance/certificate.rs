use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Thirds;

use super::{IsingInstance, Term};

/// Terms up to this many spins are minimized by exhaustive enumeration.
pub const MAX_ENUMERATED_SPINS: usize = 24;

/// Largest intermediate table scope allowed during variable elimination.
const MAX_ELIMINATION_WIDTH: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub certified: bool,
    /// Sum of per-term minima; a lower bound on the ground energy, and equal
    /// to it when certified.
    pub ground_energy: Thirds,
    pub planted_energy: Thirds,
    pub decomposition_matches: bool,
    /// Terms whose minimum the planted state does not attain.
    pub failing_terms: Vec<usize>,
}

/// Prove that the planted state minimizes every term of the decomposition.
pub fn frustration_certificate(inst: &IsingInstance) -> Result<Certificate> {
    if inst.decomposition().is_empty() {
        return Err(Error::param("instance carries no decomposition"));
    }
    let planted = inst.planted_state();
    let mut ground = Thirds::ZERO;
    let mut failing = Vec::new();
    for (i, term) in inst.decomposition().iter().enumerate() {
        let min = minimize_term(term)?;
        if term.energy(planted) != min {
            failing.push(i);
        }
        ground += min;
    }
    let matches = inst.decomposition_matches();
    Ok(Certificate {
        certified: failing.is_empty() && matches,
        ground_energy: ground,
        planted_energy: inst.energy(planted)?,
        decomposition_matches: matches,
        failing_terms: failing,
    })
}

/// Exact minimum energy of a single term.
///
/// Small terms are enumerated; larger ones go through min-sum variable
/// elimination, which is exact as long as no intermediate table exceeds
/// the width cap.
pub fn minimize_term(term: &Term) -> Result<Thirds> {
    let support = term.support();
    let local: HashMap<u32, usize> = support.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let m = support.len();
    let mut h = vec![0i64; m];
    for &(q, v) in &term.h {
        h[local[&q]] += v.0;
    }
    let mut bonds: HashMap<(usize, usize), i64> = HashMap::new();
    for &(e, v) in &term.j {
        let (a, b) = (local[&e.0], local[&e.1]);
        *bonds.entry((a.min(b), a.max(b))).or_default() += v.0;
    }
    let mut bonds: Vec<((usize, usize), i64)> = bonds.into_iter().filter(|(_, v)| *v != 0).collect();
    bonds.sort_unstable();
    let min = if m <= MAX_ENUMERATED_SPINS {
        enumerate_min(&h, &bonds)
    } else {
        eliminate_min(&h, &bonds)?
    };
    Ok(Thirds(min))
}

fn enumerate_min(h: &[i64], bonds: &[((usize, usize), i64)]) -> i64 {
    let m = h.len();
    let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); m];
    for &((a, b), v) in bonds {
        adj[a].push((b, v));
        adj[b].push((a, v));
    }
    let mut s = vec![1i64; m];
    let mut e: i64 = h.iter().sum::<i64>() + bonds.iter().map(|(_, v)| v).sum::<i64>();
    let mut best = e;
    // Gray-code walk: step k flips the lowest set bit of k.
    for k in 1u64..(1u64 << m) {
        let i = k.trailing_zeros() as usize;
        let local: i64 = h[i] + adj[i].iter().map(|&(j, v)| v * s[j]).sum::<i64>();
        e -= 2 * s[i] * local;
        s[i] = -s[i];
        best = best.min(e);
    }
    best
}

struct Factor {
    scope: Vec<usize>,
    table: Vec<i64>,
}

impl Factor {
    fn value(&self, lookup: impl Fn(usize) -> usize) -> i64 {
        let mut idx = 0usize;
        for (bit, &v) in self.scope.iter().enumerate() {
            idx |= lookup(v) << bit;
        }
        self.table[idx]
    }
}

fn spin(bit: usize) -> i64 {
    1 - 2 * bit as i64
}

fn eliminate_min(h: &[i64], bonds: &[((usize, usize), i64)]) -> Result<i64> {
    let m = h.len();
    let mut factors: Vec<Option<Factor>> = Vec::new();
    for (i, &v) in h.iter().enumerate() {
        if v != 0 {
            factors.push(Some(Factor { scope: vec![i], table: vec![v, -v] }));
        }
    }
    for &((a, b), v) in bonds {
        let table = (0..4).map(|idx| v * spin(idx & 1) * spin(idx >> 1)).collect();
        factors.push(Some(Factor { scope: vec![a, b], table }));
    }
    let mut constant = 0i64;
    let mut remaining: Vec<bool> = vec![true; m];

    for _ in 0..m {
        // min-degree choice
        let mut best: Option<(usize, Vec<usize>)> = None;
        for v in (0..m).filter(|&v| remaining[v]) {
            let mut scope: Vec<usize> = factors
                .iter()
                .flatten()
                .filter(|f| f.scope.contains(&v))
                .flat_map(|f| f.scope.iter().copied())
                .filter(|&u| u != v)
                .collect();
            scope.sort_unstable();
            scope.dedup();
            if best.as_ref().is_none_or(|(_, s)| scope.len() < s.len()) {
                best = Some((v, scope));
            }
        }
        let (v, scope) = best.expect("a variable remains");
        remaining[v] = false;
        if scope.len() > MAX_ELIMINATION_WIDTH {
            return Err(Error::Capability(format!(
                "term needs an elimination table over {} spins (cap {MAX_ELIMINATION_WIDTH})",
                scope.len()
            )));
        }
        let involved: Vec<Factor> = factors
            .iter_mut()
            .filter(|f| f.as_ref().is_some_and(|f| f.scope.contains(&v)))
            .map(|f| f.take().expect("present"))
            .collect();
        if involved.is_empty() {
            continue;
        }
        let pos: HashMap<usize, usize> = scope.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let table: Vec<i64> = (0..1usize << scope.len())
            .map(|assign| {
                (0..2usize)
                    .map(|xv| {
                        involved
                            .iter()
                            .map(|f| f.value(|u| if u == v { xv } else { assign >> pos[&u] & 1 }))
                            .sum::<i64>()
                    })
                    .min()
                    .expect("two branches")
            })
            .collect();
        if scope.is_empty() {
            constant += table[0];
        } else {
            factors.push(Some(Factor { scope, table }));
        }
        factors.retain(Option::is_some);
    }
    Ok(constant + factors.iter().flatten().map(|f| f.table[0]).sum::<i64>())
}
