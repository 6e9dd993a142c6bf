//! Cochains, incidence matrices and twisted Whitney mass matrices with
//! relative boundary conditions.
//!
//! Relative conditions remove every degree of freedom that lies in a marked
//! boundary facet. All reduced operators act on the remaining ones.

pub mod whitney;

use crate::linalg::{self, Sparse, SparseSpd};
use crate::mesh::{Marker, SimplicialComplex};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use whitney::{mass_element, CellGeometry};

/// Piecewise constant permittivity and permeability by region tag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Material {
    regions: BTreeMap<u32, (f64, f64)>,
}

impl Material {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn with_region(mut self, tag: u32, epsilon: f64, mu: f64) -> Result<Self> {
        if !(epsilon.is_finite() && mu.is_finite() && epsilon > 0.0 && mu > 0.0) {
            return Err(Error::Material(format!("region {tag}: epsilon and mu must be positive")));
        }
        self.regions.insert(tag, (epsilon, mu));
        Ok(self)
    }

    pub fn eps_mu(&self, tag: u32) -> (f64, f64) {
        self.regions.get(&tag).copied().unwrap_or((1.0, 1.0))
    }

    /// Weight of p-forms: eps^2 mu (eps mu)^(-p).
    pub fn tau(&self, tag: u32, p: usize) -> f64 {
        let (e, m) = self.eps_mu(tag);
        e * e * m * (e * m).powi(-(p as i32))
    }

    pub fn is_trivial(&self) -> bool {
        self.regions.values().all(|&(e, m)| e == 1.0 && m == 1.0)
    }

    /// Bounds c, C with c <= tau_p <= C over all regions and degrees up to d.
    pub fn bounds(&self, d: usize) -> (f64, f64) {
        let mut lo: f64 = 1.0;
        let mut hi: f64 = 1.0;
        for &tag in self.regions.keys() {
            for p in 0..=d {
                lo = lo.min(self.tau(tag, p));
                hi = hi.max(self.tau(tag, p));
            }
        }
        (lo, hi)
    }

    pub fn regions(&self) -> impl Iterator<Item = (u32, f64, f64)> + '_ {
        self.regions.iter().map(|(&t, &(e, m))| (t, e, m))
    }

    /// Cells with a non-unit material must stay away from the outer boundary.
    pub fn validate(&self, cx: &SimplicialComplex) -> Result<()> {
        let outer = cx.on_boundary(0, Some(Marker::Outer));
        let d = cx.dim();
        for t in 0..cx.count(d) {
            let (e, m) = self.eps_mu(cx.tags()[t]);
            if (e != 1.0 || m != 1.0) && cx.simplex(d, t).iter().any(|&v| outer[v]) {
                return Err(Error::Material(format!(
                    "region {} touches the outer boundary",
                    cx.tags()[t]
                )));
            }
        }
        Ok(())
    }
}

/// Integer incidence d_p : C^p -> C^{p+1} as (row, col, sign) triplets on
/// all simplices.
pub fn incidence(cx: &SimplicialComplex, p: usize) -> Vec<(usize, usize, i8)> {
    let q = p + 1;
    let mut out = Vec::with_capacity(cx.count(q) * (q + 1));
    for i in 0..cx.count(q) {
        for (k, &f) in cx.faces(q, i).iter().enumerate() {
            out.push((i, f, if k % 2 == 0 { 1 } else { -1 }));
        }
    }
    out
}

/// Assembled operators of one complex with one material.
#[derive(Debug, Clone)]
pub struct DecOperators {
    dim: usize,
    counts: Vec<usize>,
    kept: Vec<Vec<usize>>,
    pos: Vec<Vec<usize>>,
    d_int: Vec<Vec<(usize, usize, i8)>>,
    d: Vec<Sparse>,
    mass: Vec<Sparse>,
    mass_unit: Vec<Sparse>,
    mass_chol: Vec<SparseSpd>,
    mass_unit_chol: Vec<SparseSpd>,
    twisted: bool,
}

/// Global Whitney mass matrix of degree p on all simplices, optionally with
/// the material weight.
pub fn assemble_mass(cx: &SimplicialComplex, p: usize, material: Option<&Material>) -> Sparse {
    let d = cx.dim();
    let mut trips = Vec::new();
    for t in 0..cx.count(d) {
        let g = CellGeometry::new(&cx.cell_vertices(t));
        let w = material.map_or(1.0, |m| m.tau(cx.tags()[t], p));
        let loc = mass_element(&g, p);
        let idx = cx.cell_subsimplices(t, p);
        let k = idx.len();
        for a in 0..k {
            for b in 0..k {
                trips.push((idx[a], idx[b], w * loc[a * k + b]));
            }
        }
    }
    linalg::sparse(cx.count(p), cx.count(p), &trips)
}

fn restrict_sparse(a: &Sparse, rows: &[usize], cols: &[usize], nr: usize, nc: usize) -> Sparse {
    let trips: Vec<(usize, usize, f64)> = linalg::triplets(a)
        .into_iter()
        .filter_map(|(i, j, v)| {
            let (r, c) = (rows[i], cols[j]);
            (r != usize::MAX && c != usize::MAX).then_some((r, c, v))
        })
        .collect();
    linalg::sparse(nr, nc, &trips)
}

impl DecOperators {
    pub fn new(cx: &SimplicialComplex, material: &Material) -> Result<Self> {
        material.validate(cx)?;
        let dim = cx.dim();
        let counts = cx.counts();
        let mut kept = Vec::with_capacity(dim + 1);
        let mut pos = Vec::with_capacity(dim + 1);
        for p in 0..=dim {
            let bnd = cx.on_boundary(p, None);
            let k: Vec<usize> = (0..counts[p]).filter(|&i| !bnd[i]).collect();
            let mut ps = vec![usize::MAX; counts[p]];
            for (r, &i) in k.iter().enumerate() {
                ps[i] = r;
            }
            kept.push(k);
            pos.push(ps);
        }
        let d_int: Vec<_> = (0..dim).map(|p| incidence(cx, p)).collect();
        let d: Vec<Sparse> = (0..dim)
            .map(|p| {
                let trips: Vec<(usize, usize, f64)> = d_int[p]
                    .iter()
                    .filter_map(|&(i, j, s)| {
                        let (r, c) = (pos[p + 1][i], pos[p][j]);
                        (r != usize::MAX && c != usize::MAX).then_some((r, c, s as f64))
                    })
                    .collect();
                linalg::sparse(kept[p + 1].len(), kept[p].len(), &trips)
            })
            .collect();
        let twisted = !material.is_trivial();
        let mut mass = Vec::with_capacity(dim + 1);
        let mut mass_unit = Vec::with_capacity(dim + 1);
        let mut mass_chol = Vec::with_capacity(dim + 1);
        let mut mass_unit_chol = Vec::new();
        for p in 0..=dim {
            let n = kept[p].len();
            let mt = restrict_sparse(&assemble_mass(cx, p, Some(material)), &pos[p], &pos[p], n, n);
            let mu = if twisted {
                restrict_sparse(&assemble_mass(cx, p, None), &pos[p], &pos[p], n, n)
            } else {
                mt.clone()
            };
            mass_chol.push(SparseSpd::new(&mt)?);
            if twisted {
                mass_unit_chol.push(SparseSpd::new(&mu)?);
            }
            mass.push(mt);
            mass_unit.push(mu);
        }
        Ok(DecOperators { dim, counts, kept, pos, d_int, d, mass, mass_unit, mass_chol, mass_unit_chol, twisted })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of free (reduced) degrees of freedom in degree p.
    pub fn n(&self, p: usize) -> usize {
        if p > self.dim {
            0
        } else {
            self.kept[p].len()
        }
    }

    pub fn total(&self, p: usize) -> usize {
        self.counts[p]
    }

    pub fn kept(&self, p: usize) -> &[usize] {
        &self.kept[p]
    }

    /// Reduced position of a simplex, or `None` if it lies on the boundary.
    pub fn position(&self, p: usize, i: usize) -> Option<usize> {
        let r = self.pos[p][i];
        (r != usize::MAX).then_some(r)
    }

    pub fn is_twisted(&self) -> bool {
        self.twisted
    }

    pub fn incidence(&self, p: usize) -> &[(usize, usize, i8)] {
        &self.d_int[p]
    }

    /// Reduced d_p.
    pub fn d(&self, p: usize) -> &Sparse {
        &self.d[p]
    }

    pub fn mass(&self, p: usize) -> &Sparse {
        &self.mass[p]
    }

    pub fn mass_unit(&self, p: usize) -> &Sparse {
        &self.mass_unit[p]
    }

    pub fn apply_d(&self, p: usize, x: &[f64]) -> Vec<f64> {
        if p >= self.dim {
            return Vec::new();
        }
        linalg::spmv(&self.d[p], x)
    }

    pub fn apply_mass(&self, p: usize, x: &[f64]) -> Vec<f64> {
        linalg::spmv(&self.mass[p], x)
    }

    pub fn solve_mass(&self, p: usize, b: &[f64]) -> Vec<f64> {
        self.mass_chol[p].solve(b)
    }

    pub fn mass_factor(&self, p: usize) -> &SparseSpd {
        &self.mass_chol[p]
    }

    pub fn inner(&self, p: usize, x: &[f64], y: &[f64]) -> f64 {
        linalg::inner(&self.mass[p], x, y)
    }

    pub fn norm(&self, p: usize, x: &[f64]) -> f64 {
        self.inner(p, x, x).max(0.0).sqrt()
    }

    /// Weak codifferential from degree p to p-1: M^{-1} d^T M.
    pub fn codiff(&self, p: usize, x: &[f64]) -> Vec<f64> {
        assert!(p >= 1 && p <= self.dim);
        let y = linalg::spmv_t(&self.d[p - 1], &self.apply_mass(p, x));
        self.solve_mass(p - 1, &y)
    }

    /// Hodge Laplacian d codiff + codiff d applied to a p-cochain.
    pub fn laplacian(&self, p: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        if p > 0 {
            out = self.apply_d(p - 1, &self.codiff(p, x));
        }
        if p < self.dim {
            linalg::axpy(1.0, &self.codiff(p + 1, &self.apply_d(p, x)), &mut out);
        }
        out
    }

    /// Codifferential of the unit material, M1^{-1} d^T M1 with M1 untwisted.
    pub fn codiff_unit(&self, p: usize, x: &[f64]) -> Vec<f64> {
        if !self.twisted {
            return self.codiff(p, x);
        }
        let y = linalg::spmv_t(&self.d[p - 1], &linalg::spmv(&self.mass_unit[p], x));
        self.mass_unit_chol[p - 1].solve(&y)
    }

    /// Inverse material weight on a cochain: M_p^{-1} M_p^{(1)} x.
    pub fn tau_inv(&self, p: usize, x: &[f64]) -> Vec<f64> {
        if !self.twisted {
            return x.to_vec();
        }
        self.solve_mass(p, &linalg::spmv(&self.mass_unit[p], x))
    }

    pub fn restrict(&self, p: usize, full: &[f64]) -> Vec<f64> {
        self.kept[p].iter().map(|&i| full[i]).collect()
    }

    pub fn extend(&self, p: usize, reduced: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.counts[p]];
        for (r, &i) in self.kept[p].iter().enumerate() {
            out[i] = reduced[r];
        }
        out
    }

    /// Relative residual of M_{p-1} codiff_p x = d^T M_p x over probe vectors.
    pub fn adjointness_residual(&self, p: usize) -> f64 {
        let n = self.n(p);
        let mut worst: f64 = 0.0;
        for s in 0..3 {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 + s * 13) % 11) as f64 - 5.0).collect();
            let lhs = self.apply_mass(p - 1, &self.codiff(p, &x));
            let rhs = linalg::spmv_t(&self.d[p - 1], &self.apply_mass(p, &x));
            let num = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den = linalg::norm(&rhs).max(f64::MIN_POSITIVE);
            worst = worst.max(num / den);
        }
        worst
    }
}

/// Checks d_{p+1} d_p = 0 exactly on the integer incidence matrices.
pub fn d_squared_vanishes(cx: &SimplicialComplex) -> bool {
    let d = cx.dim();
    for p in 0..d.saturating_sub(1) {
        let a = incidence(cx, p);
        let b = incidence(cx, p + 1);
        let mut rows_a: Vec<Vec<(usize, i64)>> = vec![Vec::new(); cx.count(p + 1)];
        for &(i, j, s) in &a {
            rows_a[i].push((j, s as i64));
        }
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(i, k, s) in &b {
            for &(j, t) in &rows_a[k] {
                *acc.entry((i, j)).or_default() += s as i64 * t;
            }
        }
        if acc.values().any(|&v| v != 0) {
            return false;
        }
    }
    true
}
