//! Relative cohomology ranks computed exactly over the rationals.

use crate::forms::DecOperators;
use crate::{Error, Result};
use serde::Serialize;
use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

type Row = Vec<(usize, i128)>;

/// r <- a r - b s, then divided by the content.
fn combine(r: &Row, a: i128, s: &Row, b: i128) -> Result<Row> {
    let mut out = Vec::with_capacity(r.len() + s.len());
    let (mut i, mut j) = (0, 0);
    let mul = |x: i128, y: i128| x.checked_mul(y).ok_or(Error::Overflow);
    while i < r.len() || j < s.len() {
        let (c, v) = match (r.get(i), s.get(j)) {
            (Some(&(cr, vr)), Some(&(cs, vs))) if cr == cs => {
                i += 1;
                j += 1;
                (cr, mul(a, vr)?.checked_sub(mul(b, vs)?).ok_or(Error::Overflow)?)
            }
            (Some(&(cr, vr)), Some(&(cs, _))) if cr < cs => {
                i += 1;
                (cr, mul(a, vr)?)
            }
            (Some(&(cr, vr)), None) => {
                i += 1;
                (cr, mul(a, vr)?)
            }
            (_, Some(&(cs, vs))) => {
                j += 1;
                (cs, mul(b, vs)?.checked_neg().ok_or(Error::Overflow)?)
            }
            (None, None) => unreachable!(),
        };
        if v != 0 {
            out.push((c, v));
        }
    }
    let g = out.iter().fold(0i128, |g, &(_, v)| gcd(g, v));
    if g > 1 {
        for e in out.iter_mut() {
            e.1 /= g;
        }
    }
    Ok(out)
}

/// Rank over Q of an integer matrix given as (row, col, value) triplets.
///
/// Sparse fraction-free elimination: rows are processed shortest first,
/// unit pivots are preferred and each updated row is reduced by its content.
pub fn exact_rank(nrows: usize, ncols: usize, entries: &[(usize, usize, i64)]) -> Result<usize> {
    let mut rows: Vec<Row> = vec![Vec::new(); nrows];
    for &(i, j, v) in entries {
        if i >= nrows || j >= ncols {
            return Err(Error::Dimension(format!("entry ({i}, {j}) outside {nrows}x{ncols}")));
        }
        if v != 0 {
            rows[i].push((j, v as i128));
        }
    }
    for r in rows.iter_mut() {
        r.sort_by_key(|e| e.0);
        let mut merged: Row = Vec::with_capacity(r.len());
        for &(c, v) in r.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|e| e.1 != 0);
        *r = merged;
    }
    let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncols];
    for (i, r) in rows.iter().enumerate() {
        for &(c, _) in r {
            cols[c].insert(i);
        }
    }
    let mut done = vec![false; nrows];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        rows.iter().enumerate().filter(|(_, r)| !r.is_empty()).map(|(i, r)| Reverse((r.len(), i))).collect();
    let mut rank = 0;
    while let Some(Reverse((len, i))) = heap.pop() {
        if done[i] || rows[i].len() != len {
            continue;
        }
        if rows[i].is_empty() {
            done[i] = true;
            continue;
        }
        let pivot = rows[i]
            .iter()
            .min_by_key(|&&(c, v)| (v.abs() != 1, v.unsigned_abs(), cols[c].len(), c))
            .copied()
            .unwrap();
        let (pc, pv) = pivot;
        done[i] = true;
        rank += 1;
        let prow = std::mem::take(&mut rows[i]);
        for &(c, _) in &prow {
            cols[c].remove(&i);
        }
        let targets: Vec<usize> = cols[pc].iter().copied().collect();
        for s in targets {
            let sv = match rows[s].binary_search_by_key(&pc, |e| e.0) {
                Ok(k) => rows[s][k].1,
                Err(_) => continue,
            };
            let new = if pv.abs() == 1 {
                combine(&rows[s], 1, &prow, sv * pv)?
            } else {
                combine(&rows[s], pv, &prow, sv)?
            };
            for &(c, _) in &rows[s] {
                cols[c].remove(&s);
            }
            for &(c, _) in &new {
                cols[c].insert(s);
            }
            rows[s] = new;
            if !rows[s].is_empty() {
                heap.push(Reverse((rows[s].len(), s)));
            }
        }
    }
    Ok(rank)
}

#[derive(Debug, Clone, Serialize)]
pub struct CohomologyReport {
    /// dim H^p for p = 0..=d
    pub dims: Vec<usize>,
    /// rank of the reduced d_p for p = 0..d
    pub ranks: Vec<usize>,
    /// number of free cochains per degree
    pub cochains: Vec<usize>,
}

impl CohomologyReport {
    pub fn h(&self, p: usize) -> usize {
        self.dims[p]
    }
}

/// Relative cohomology of the complex behind `ops`: ker d_p / im d_{p-1} on
/// cochains vanishing on marked boundary simplices.
pub fn relative_cohomology(ops: &DecOperators) -> Result<CohomologyReport> {
    let d = ops.dim();
    let mut ranks = Vec::with_capacity(d);
    for p in 0..d {
        let entries: Vec<(usize, usize, i64)> = ops
            .incidence(p)
            .iter()
            .filter_map(|&(i, j, s)| match (ops.position(p + 1, i), ops.position(p, j)) {
                (Some(r), Some(c)) => Some((r, c, s as i64)),
                _ => None,
            })
            .collect();
        ranks.push(exact_rank(ops.n(p + 1), ops.n(p), &entries)?);
    }
    let cochains: Vec<usize> = (0..=d).map(|p| ops.n(p)).collect();
    let dims = (0..=d)
        .map(|p| {
            let out = if p < d { ranks[p] } else { 0 };
            let inn = if p > 0 { ranks[p - 1] } else { 0 };
            cochains[p] - out - inn
        })
        .collect();
    Ok(CohomologyReport { dims, ranks, cochains })
}

/// Compares harmonic kernel dimensions with cohomology in degrees 1..d-1.
pub fn check_harmonic_match(report: &CohomologyReport, kernel_dims: &[(usize, usize)]) -> Result<()> {
    for &(p, k) in kernel_dims {
        if p == 0 || p + 1 > report.dims.len() - 1 {
            continue;
        }
        if report.dims[p] != k {
            return Err(Error::Spectral(format!(
                "harmonic kernel in degree {p} has dimension {k}, cohomology has {}",
                report.dims[p]
            )));
        }
    }
    Ok(())
}
