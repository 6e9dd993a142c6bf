//! Harmonic forms, capacitor potentials, the modified projector Q_eps and
//! the Hodge-Helmholtz split.

use crate::forms::DecOperators;
use crate::linalg::{self, DenseSpd};
use crate::mesh::{Marker, SimplicialComplex};
use crate::spectral::{LaplaceOperator, SpectralDecomposition};
use crate::{Error, Result};
use faer::Mat;
use serde::Serialize;

/// M-orthonormal basis of harmonic p-forms.
///
/// In degree 1 with an obstacle the basis is ordered as
/// `[topological..., charge..., psi_L]`: charge forms are gradients of
/// potentials that are constant on each obstacle component, and the last
/// vector is the normalised field of the capacitor potential.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub p: usize,
    pub vectors: Vec<Vec<f64>>,
    pub n_top: usize,
    pub n_charge: usize,
    pub gap_ratio: f64,
}

impl HarmonicBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Max |<psi_i, psi_j> - delta_ij|.
    pub fn orthonormality_defect(&self, ops: &DecOperators) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ops.inner(self.p, a, b) - want).abs());
            }
        }
        worst
    }
}

/// Largest-magnitude entry made positive.
fn orient(v: &mut [f64]) {
    if let Some(k) = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a))) {
        if v[k] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Kernel basis of a decomposition with deterministic signs.
pub fn harmonic_basis(dec: &SpectralDecomposition) -> HarmonicBasis {
    let k = dec.kernel_basis();
    let vectors = (0..k.ncols())
        .map(|j| {
            let mut v = linalg::col_vec(k.as_ref(), j);
            orient(&mut v);
            v
        })
        .collect::<Vec<_>>();
    HarmonicBasis { p: dec.p, n_top: vectors.len(), vectors, n_charge: 0, gap_ratio: dec.gap_ratio }
}

/// Solution of the discrete Dirichlet problem for 0-forms.
#[derive(Debug, Clone, Serialize)]
pub struct Capacitor {
    /// potential on all vertices (boundary values included)
    pub potential: Vec<f64>,
    pub capacity: f64,
    /// normalised field du / sqrt(capacity) on free edges
    pub psi: Vec<f64>,
}

/// Harmonic extension of boundary vertex values `g` (full length; interior
/// entries ignored). Returns the full potential.
pub fn harmonic_extension(cx: &SimplicialComplex, ops: &DecOperators, g: &[f64]) -> Result<Vec<f64>> {
    let nv = cx.count(0);
    let bmat = boundary_gradient(ops, g);
    let rhs = linalg::spmv_t(ops.d(0), &ops.apply_mass(1, &bmat));
    let stiff = linalg::sp_sp(&linalg::transpose(ops.d(0)), &linalg::sp_sp(ops.mass(1), ops.d(0)));
    let ur = if ops.n(0) > 0 {
        let f = linalg::SparseSpd::new(&stiff)?;
        f.solve(&rhs.iter().map(|x| -x).collect::<Vec<_>>())
    } else {
        Vec::new()
    };
    let mut u = g.to_vec();
    u.resize(nv, 0.0);
    for (r, &i) in ops.kept(0).iter().enumerate() {
        u[i] = ur[r];
    }
    Ok(u)
}

/// Contribution of boundary vertex values to the gradient on free edges.
fn boundary_gradient(ops: &DecOperators, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ops.n(1)];
    for &(e, v, s) in ops.incidence(0) {
        if let (Some(r), None) = (ops.position(1, e), ops.position(0, v)) {
            out[r] += s as f64 * u[v];
        }
    }
    out
}

/// Gradient of a full vertex function restricted to free edges.
pub fn full_gradient(ops: &DecOperators, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ops.n(1)];
    for &(e, v, s) in ops.incidence(0) {
        if let Some(r) = ops.position(1, e) {
            out[r] += s as f64 * u[v];
        }
    }
    out
}

fn obstacle_components(cx: &SimplicialComplex) -> Vec<Vec<usize>> {
    let d = cx.dim();
    cx.boundary_components()
        .into_iter()
        .filter(|c| c.marker == Marker::Obstacle)
        .map(|c| {
            let mut vs: Vec<usize> = c.facets.iter().flat_map(|&f| cx.simplex(d - 1, f).to_vec()).collect();
            vs.sort();
            vs.dedup();
            vs
        })
        .collect()
}

/// Potential equal to one on the given obstacle components and zero on the
/// rest of the boundary.
fn charge_potential(cx: &SimplicialComplex, ops: &DecOperators, comps: &[Vec<usize>]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; cx.count(0)];
    for c in comps {
        for &v in c {
            g[v] = 1.0;
        }
    }
    harmonic_extension(cx, ops, &g)
}

/// Capacitor potential (one on the obstacle, zero on the outer boundary),
/// its capacity <du, du>_M and the normalised field.
pub fn capacity(cx: &SimplicialComplex, ops: &DecOperators) -> Result<Capacitor> {
    if !cx.is_connected() {
        return Err(Error::Precondition("the carved domain is disconnected".into()));
    }
    let comps = obstacle_components(cx);
    if comps.is_empty() {
        return Err(Error::Precondition("no obstacle boundary".into()));
    }
    let potential = charge_potential(cx, ops, &comps)?;
    let du = full_gradient(ops, &potential);
    let capacity = ops.inner(1, &du, &du);
    let psi = du.iter().map(|x| x / capacity.sqrt()).collect();
    Ok(Capacitor { potential, capacity, psi })
}

/// Harmonic 1-forms split into topological and charge parts.
pub fn harmonic_basis_with_charges(
    cx: &SimplicialComplex,
    ops: &DecOperators,
    dec: &SpectralDecomposition,
    cap: &Capacitor,
) -> Result<HarmonicBasis> {
    if dec.p != 1 {
        return Err(Error::Dimension("charge splitting applies to 1-forms".into()));
    }
    let kernel = dec.kernel_basis();
    let big_l = kernel.ncols();
    let comps = obstacle_components(cx);
    let mut charge: Vec<Vec<f64>> = vec![cap.psi.clone()];
    let mut cands = Vec::new();
    for c in &comps {
        let u = charge_potential(cx, ops, std::slice::from_ref(c))?;
        cands.push(full_gradient(ops, &u));
    }
    // Gram-Schmidt against psi_L; the sum of all components is dependent
    let mut others: Vec<Vec<f64>> = Vec::new();
    for mut v in cands {
        let n0 = ops.norm(1, &v);
        for q in charge.iter().chain(others.iter()) {
            let a = ops.inner(1, &v, q);
            linalg::axpy(-a, q, &mut v);
        }
        let n = ops.norm(1, &v);
        if n > 1e-6 * n0 {
            v.iter_mut().for_each(|x| *x /= n);
            others.push(v);
        }
    }
    let n_charge = others.len() + 1;
    if n_charge > big_l {
        return Err(Error::Spectral(format!(
            "{n_charge} charge forms exceed the harmonic dimension {big_l}"
        )));
    }
    charge = others.into_iter().chain(charge).collect();
    let n_top = big_l - n_charge;
    let mut top = Vec::new();
    if n_top > 0 {
        let mut r = kernel.clone();
        for q in &charge {
            let mq = ops.apply_mass(1, q);
            for j in 0..big_l {
                let a: f64 = (0..r.nrows()).map(|i| r[(i, j)] * mq[i]).sum();
                for i in 0..r.nrows() {
                    r[(i, j)] -= a * q[i];
                }
            }
        }
        let mr = linalg::sp_mul(ops.mass(1), &r);
        let g = r.transpose() * &mr;
        let (vals, w) = linalg::eigh(&g)?;
        for j in (big_l - n_top..big_l).rev() {
            let mut v = linalg::col_vec((&r * w.col(j).as_mat()).as_ref(), 0);
            let n = vals[j].max(f64::MIN_POSITIVE).sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            top.push(v);
        }
    }
    let mut vectors: Vec<Vec<f64>> = top.into_iter().chain(charge).collect();
    for v in vectors.iter_mut().take(big_l - 1) {
        orient(v);
    }
    Ok(HarmonicBasis { p: 1, vectors, n_top, n_charge, gap_ratio: dec.gap_ratio })
}

/// Radial cutoff around the obstacle: one inside `r_in`, zero beyond the
/// support radius r_in + (eps_fit / eps) (r_end - r_in), quintic smoothstep in
/// between. At eps = eps_fit the support reaches the farthest vertex; the
/// outer boundary needs no clearance because the capacitor potential already
/// vanishes there.
#[derive(Debug, Clone, Serialize)]
pub struct Cutoff {
    pub center: [f64; 3],
    pub r_in: f64,
    pub r_end: f64,
    pub eps_fit: f64,
}

impl Cutoff {
    pub fn from_geometry(cx: &SimplicialComplex, eps_fit: f64) -> Result<Self> {
        let obs = cx.on_boundary(0, Some(Marker::Obstacle));
        let c = cx.coords();
        let ov: Vec<usize> = (0..obs.len()).filter(|&v| obs[v]).collect();
        if ov.is_empty() {
            return Err(Error::Precondition("cutoff needs an obstacle".into()));
        }
        let mut center = [0.0; 3];
        for &v in &ov {
            for a in 0..3 {
                center[a] += c[v][a] / ov.len() as f64;
            }
        }
        let dist = |v: usize| ((0..3).map(|a| (c[v][a] - center[a]).powi(2)).sum::<f64>()).sqrt();
        let r_obs = ov.iter().map(|&v| dist(v)).fold(0.0, f64::max);
        let r_far = (0..c.len()).map(dist).fold(0.0, f64::max);
        if !(r_far > r_obs) {
            return Err(Error::Precondition("no vertex lies outside the obstacle radius".into()));
        }
        let gap = r_far - r_obs;
        Ok(Cutoff { center, r_in: r_obs + 0.05 * gap, r_end: r_far, eps_fit })
    }

    pub fn value(&self, x: &[f64; 3], eps: f64) -> f64 {
        let r = ((0..3).map(|a| (x[a] - self.center[a]).powi(2)).sum::<f64>()).sqrt();
        let t = ((r - self.r_in) * eps / (self.eps_fit * (self.r_end - self.r_in))).clamp(0.0, 1.0);
        1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

/// Q_eps = I - Q0_eps with Q0_eps x = sum_{j<L} <x, psi_j> psi_j + <x, psi_L> psi_eps.
/// Without an obstacle it is I - P0.
#[derive(Debug, Clone)]
pub struct ProjectorQ {
    basis: Vec<Vec<f64>>,
    psi_eps: Option<Vec<f64>>,
    mass: linalg::Sparse,
    pub eps: f64,
}

impl ProjectorQ {
    /// Plain complement of the harmonic projector.
    pub fn plain(ops: &DecOperators, basis: &HarmonicBasis) -> Self {
        ProjectorQ { basis: basis.vectors.clone(), psi_eps: None, mass: ops.mass(1).clone(), eps: 0.0 }
    }

    pub fn build(
        cx: &SimplicialComplex,
        ops: &DecOperators,
        basis: &HarmonicBasis,
        cap: &Capacitor,
        eps: f64,
        cutoff: &Cutoff,
    ) -> Result<Self> {
        if !(eps >= cutoff.eps_fit * (1.0 - 1e-12)) {
            return Err(Error::Precondition(format!(
                "eps = {eps} is below the smallest supported value {}",
                cutoff.eps_fit
            )));
        }
        if basis.n_charge == 0 {
            return Err(Error::Precondition("harmonic basis has no capacitor field".into()));
        }
        let w: Vec<f64> = cap
            .potential
            .iter()
            .zip(cx.coords())
            .map(|(u, x)| u * cutoff.value(x, eps))
            .collect();
        let psi_eps: Vec<f64> = full_gradient(ops, &w).iter().map(|x| x / cap.capacity.sqrt()).collect();
        Ok(ProjectorQ { basis: basis.vectors.clone(), psi_eps: Some(psi_eps), mass: ops.mass(1).clone(), eps })
    }

    /// The M-orthonormal harmonic basis, psi_L last.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn psi_eps(&self) -> Option<&[f64]> {
        self.psi_eps.as_deref()
    }

    pub fn apply_q0(&self, x: &[f64]) -> Vec<f64> {
        let mx = linalg::spmv(&self.mass, x);
        let mut out = vec![0.0; x.len()];
        let l = self.basis.len();
        for (j, psi) in self.basis.iter().enumerate() {
            let a = linalg::dot(&mx, psi);
            match (&self.psi_eps, j + 1 == l) {
                (Some(pe), true) => linalg::axpy(a, pe, &mut out),
                _ => linalg::axpy(a, psi, &mut out),
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let q0 = self.apply_q0(x);
        x.iter().zip(&q0).map(|(a, b)| a - b).collect()
    }
}

/// phi = d delta phi1 + delta d phi1 + phi0 with phi0 harmonic.
#[derive(Debug, Clone)]
pub struct Helmholtz {
    pub exact: Vec<f64>,
    pub coexact: Vec<f64>,
    pub harmonic: Vec<f64>,
    pub potential: Vec<f64>,
}

/// Solves Delta phi1 = (I - P0) phi with phi1 orthogonal to the kernel via
/// a bordered dense system.
pub fn helmholtz(
    ops: &DecOperators,
    lap: &LaplaceOperator,
    dec: &SpectralDecomposition,
    phi: &[f64],
) -> Result<Helmholtz> {
    let p = lap.p;
    let n = lap.n();
    let k = dec.kernel_basis();
    let l = k.ncols();
    let mk = &lap.m * &k;
    let mut a = Mat::<f64>::zeros(n + l, n + l);
    a.submatrix_mut(0, 0, n, n).copy_from(&lap.s);
    a.submatrix_mut(0, n, n, l).copy_from(&mk);
    a.submatrix_mut(n, 0, l, n).copy_from(mk.transpose());
    let p0 = dec.project_kernel(phi);
    let rest: Vec<f64> = phi.iter().zip(&p0).map(|(a, b)| a - b).collect();
    let mrest = ops.apply_mass(p, &rest);
    let mut rhs = Mat::<f64>::zeros(n + l, 1);
    for i in 0..n {
        rhs[(i, 0)] = mrest[i];
    }
    use faer::linalg::solvers::Solve;
    let sol = a.partial_piv_lu().solve(&rhs);
    let phi1: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let exact = if p >= 1 { ops.apply_d(p - 1, &ops.codiff(p, &phi1)) } else { vec![0.0; n] };
    let coexact = if p < ops.dim() { ops.codiff(p + 1, &ops.apply_d(p, &phi1)) } else { vec![0.0; n] };
    let harmonic: Vec<f64> = (0..n).map(|i| phi[i] - exact[i] - coexact[i]).collect();
    Ok(Helmholtz { exact, coexact, harmonic, potential: phi1 })
}

/// Dense inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &Mat<f64>) -> Result<Mat<f64>> {
    Ok(DenseSpd::new(a)?.solve_mat(&Mat::identity(a.nrows(), a.ncols())))
}
