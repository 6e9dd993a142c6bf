//! Renormalised vacuum stress-energy of the obstacle complex relative to the
//! reference complex.
//!
//! Kernels of D1 = (Delta^{-1/2} - Delta_0^{-1/2}) codiff d on 1-forms and
//! D2 = d (Delta^{-1/2} - Delta_0^{-1/2}) codiff on 2-forms are stored in the
//! Whitney basis on the free degrees of freedom of the obstacle complex: the
//! operator acts on coefficient vectors as K M. The local trace of a cell is
//! the sum of K_ab against the element mass matrix, so cell sums reproduce
//! the matrix trace tr(K M) exactly.
//!
//! Only Delta_1 is ever decomposed; D2 is written as d_1 f(Delta_1) d_1^T.

use crate::forms::whitney::{cross_element, mass_element, tensor_element, CellGeometry};
use crate::forms::{DecOperators, Material};
use crate::linalg::{self, Sparse};
use crate::mesh::canned::VoxelInfo;
use crate::mesh::{ObstacleScenario, SimplicialComplex};
use crate::spectral::{self, KernelPolicy, LaplaceOperator, SpectralDecomposition};
use crate::{Error, Result};
use faer::Mat;
use serde::Serialize;
use std::collections::BTreeMap;

/// Which operator difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Which {
    D1,
    D2,
}

/// How Delta^{-1/2} is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Eigen,
    /// resolvent integral with Gauss-Legendre nodes
    Quadrature { nodes: usize },
}

struct Side {
    ops: DecOperators,
    lap: LaplaceOperator,
    dec: SpectralDecomposition,
}

impl Side {
    fn new(cx: &SimplicialComplex, material: &Material) -> Result<Self> {
        let ops = DecOperators::new(cx, material)?;
        let (lap, dec) = spectral::decompose(&ops, 1)?;
        Ok(Side { ops, lap, dec })
    }

    fn inv_sqrt(&self) -> Result<Vec<f64>> {
        self.dec.multipliers(|l| 1.0 / l.sqrt(), KernelPolicy::Exclude)
    }

    /// Kernel matrix of f(Delta) codiff d (D1) or d f(Delta) codiff (D2).
    fn kernel(&self, which: Which, method: Method) -> Result<Mat<f64>> {
        let d1 = self.ops.d(1);
        let v = &self.dec.vectors;
        match (which, method) {
            (Which::D1, Method::Eigen) => {
                let f = self.inv_sqrt()?;
                let u = linalg::sp_mul(d1, v);
                let mu = linalg::sp_mul(self.ops.mass(2), &u);
                let g = u.transpose() * &mu;
                let fg = Mat::from_fn(g.nrows(), g.ncols(), |i, j| f[i] * g[(i, j)]);
                Ok(v * fg * v.transpose())
            }
            (Which::D2, Method::Eigen) => {
                let f = self.inv_sqrt()?;
                let u = linalg::sp_mul(d1, v);
                let uf = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * f[j]);
                Ok(uf * u.transpose())
            }
            (Which::D1, Method::Quadrature { nodes }) => {
                let c1 = linalg::sp_sp(&linalg::transpose(d1), &linalg::sp_sp(self.ops.mass(2), d1));
                let op = self.lap.resolvent_integral(&linalg::to_dense(&c1), nodes, self.dec.quadrature_scale())?;
                let t = self.ops.mass_factor(1).solve_mat(&op.transpose().to_owned());
                Ok(t.transpose().to_owned())
            }
            (Which::D2, Method::Quadrature { nodes }) => {
                let b = linalg::to_dense(&linalg::transpose(d1));
                let r = self.lap.resolvent_integral(&b, nodes, self.dec.quadrature_scale())?;
                Ok(linalg::sp_mul(d1, &r))
            }
        }
    }
}

/// Operator difference on the free degrees of freedom of the obstacle side.
#[derive(Debug, Clone)]
pub struct OperatorDifference {
    pub which: Which,
    pub kernel: Mat<f64>,
}

impl OperatorDifference {
    pub fn degree(&self) -> usize {
        match self.which {
            Which::D1 => 1,
            Which::D2 => 2,
        }
    }

    /// Relative Frobenius norm of K - K^T.
    pub fn asymmetry(&self) -> f64 {
        linalg::asymmetry(self.kernel.as_ref())
    }
}

/// Per-cell stress values; `h` is the spatial tensor, `t0k` the energy flux.
#[derive(Debug, Clone, Serialize)]
pub struct CellStress {
    pub cell: usize,
    pub centroid: [f64; 3],
    pub volume: f64,
    pub t00: f64,
    pub h: [[f64; 3]; 3],
    pub t0k: [f64; 3],
    /// the cell has a vertex on the boundary
    pub near_boundary: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StressReport {
    pub cells: Vec<CellStress>,
    /// -1/4 (tr D1 M1 + tr D2 M2) as matrix traces
    pub trace_total: f64,
    /// sum of T00 times volume over cells
    pub cell_sum: f64,
    pub trace_identity_residual: f64,
    /// max |T0k| relative to the unsymmetrised control
    pub t0k_residual: f64,
    /// max |T0k| of the unsymmetrised control
    pub t0k_control: f64,
    pub d1_asymmetry: f64,
    /// max over cells of |tr H - T00|
    pub tensor_trace_residual: f64,
    /// max over cells of |H - H^T|
    pub tensor_asymmetry: f64,
}

impl StressReport {
    pub fn max_abs_t00(&self) -> f64 {
        self.cells.iter().fold(0.0, |m, c| m.max(c.t00.abs()))
    }

    /// Largest absolute entry of any output field.
    pub fn max_abs(&self) -> f64 {
        self.cells.iter().fold(0.0f64, |m, c| {
            let h = c.h.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let s = c.t0k.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            m.max(c.t00.abs()).max(h).max(s)
        })
    }
}

/// Resolvent difference on a window of interior edges.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventDecay {
    pub window: usize,
    pub lambdas: Vec<f64>,
    /// Frobenius norm of the coefficient-space difference on the window
    pub norms: Vec<f64>,
    /// least-squares log-log slope on the upper half of the grid
    pub slope_upper: f64,
    /// trapezoidal sum of lambda^2 times the norm
    pub weighted_sum: f64,
}

/// Both sides of an obstacle scenario with their Delta_1 decompositions.
pub struct StressContext<'a> {
    scenario: &'a ObstacleScenario,
    material: Material,
    sigma: Side,
    reference: Option<Side>,
    /// obstacle-side free index to reference-side free index, per degree
    maps: [Vec<usize>; 3],
}

impl<'a> StressContext<'a> {
    pub fn new(scenario: &'a ObstacleScenario, material: &Material) -> Result<Self> {
        if scenario.carved.dim() != 3 {
            return Err(Error::Dimension("stress-energy needs a three-dimensional complex".into()));
        }
        let sigma = Side::new(&scenario.carved, material)?;
        let reference = if scenario.has_obstacle() { Some(Side::new(&scenario.reference, material)?) } else { None };
        let mut maps: [Vec<usize>; 3] = Default::default();
        for (p, map) in maps.iter_mut().enumerate() {
            *map = match &reference {
                None => (0..sigma.ops.n(p)).collect(),
                Some(r) => sigma
                    .ops
                    .kept(p)
                    .iter()
                    .map(|&full| {
                        r.ops.position(p, scenario.injection(p)[full]).ok_or_else(|| {
                            Error::Dimension(format!("free {p}-simplex {full} is constrained on the reference side"))
                        })
                    })
                    .collect::<Result<_>>()?,
            };
        }
        Ok(StressContext { scenario, material: material.clone(), sigma, reference, maps })
    }

    pub fn ops(&self) -> &DecOperators {
        &self.sigma.ops
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.sigma.dec
    }

    pub fn operator_difference(&self, which: Which, method: Method) -> Result<OperatorDifference> {
        let mut k = self.sigma.kernel(which, method)?;
        if let Some(r) = &self.reference {
            let k0 = r.kernel(which, method)?;
            let map = &self.maps[if which == Which::D1 { 1 } else { 2 }];
            for j in 0..k.ncols() {
                for i in 0..k.nrows() {
                    k[(i, j)] -= k0[(map[i], map[j])];
                }
            }
        } else {
            k = Mat::zeros(k.nrows(), k.ncols());
        }
        Ok(OperatorDifference { which, kernel: k })
    }

    /// T00, the Maxwell tensor and the energy flux per cell.
    pub fn report(&self, method: Method) -> Result<StressReport> {
        let d1 = self.operator_difference(Which::D1, method)?;
        let d2 = self.operator_difference(Which::D2, method)?;
        self.assemble(&d1, &d2)
    }

    pub fn assemble(&self, d1: &OperatorDifference, d2: &OperatorDifference) -> Result<StressReport> {
        let ops = &self.sigma.ops;
        if d1.which != Which::D1 || d2.which != Which::D2 || d1.kernel.nrows() != ops.n(1) || d2.kernel.nrows() != ops.n(2) {
            return Err(Error::Dimension("operator differences do not match the obstacle complex".into()));
        }
        let k1 = &d1.kernel;
        let k2 = &d2.kernel;
        // energy flux kernels: the symmetrised E-B block and its control
        let dt = ops.d(1);
        let anti = Mat::from_fn(k1.nrows(), k1.ncols(), |i, j| 0.25 * (k1[(i, j)] - k1[(j, i)]));
        let flux = linalg::sp_mul(dt, &anti.transpose().to_owned());
        let control = linalg::sp_mul(dt, &(k1.transpose() * faer::Scale(0.25)));

        let cx = &self.scenario.carved;
        let bnd = cx.on_boundary(0, None);
        let mut cells = Vec::with_capacity(cx.count(3));
        let (mut flux_max, mut control_max) = (0.0f64, 0.0f64);
        for t in 0..cx.count(3) {
            let g = CellGeometry::new(&cx.cell_vertices(t));
            let tag = cx.tags()[t];
            let (tau1, tau2) = (self.material.tau(tag, 1), self.material.tau(tag, 2));
            let edges = local_positions(ops, cx, t, 1);
            let faces = local_positions(ops, cx, t, 2);
            let (m1, m2) = (mass_element(&g, 1), mass_element(&g, 2));
            let (n1, n2) = (tensor_element(&g, 1), tensor_element(&g, 2));
            let cr = cross_element(&g);
            let mut lt1 = 0.0;
            let mut lt2 = 0.0;
            let mut h = [[0.0; 3]; 3];
            for (a, ia) in edges.iter().enumerate() {
                let Some(ia) = *ia else { continue };
                for (b, ib) in edges.iter().enumerate() {
                    let Some(ib) = *ib else { continue };
                    let kab = k1[(ia, ib)];
                    lt1 += kab * tau1 * m1[a * 6 + b];
                    add_scaled(&mut h, 0.5 * kab * tau1, &n1[a * 6 + b]);
                }
            }
            for (a, ia) in faces.iter().enumerate() {
                let Some(ia) = *ia else { continue };
                for (b, ib) in faces.iter().enumerate() {
                    let Some(ib) = *ib else { continue };
                    let kab = k2[(ia, ib)];
                    lt2 += kab * tau2 * m2[a * 4 + b];
                    add_scaled(&mut h, 0.5 * kab * tau2, &n2[a * 4 + b]);
                }
            }
            let mut s = [0.0; 3];
            let mut s_bad = [0.0; 3];
            for (a, ia) in edges.iter().enumerate() {
                let Some(ia) = *ia else { continue };
                for (b, ib) in faces.iter().enumerate() {
                    let Some(ib) = *ib else { continue };
                    let c = &cr[a * 4 + b];
                    for k in 0..3 {
                        s[k] += tau2 * flux[(ib, ia)] * c[k];
                        s_bad[k] += tau2 * control[(ib, ia)] * c[k];
                    }
                }
            }
            let vol = g.volume;
            let t00 = -0.25 * (lt1 + lt2) / vol;
            for (j, row) in h.iter_mut().enumerate() {
                for v in row.iter_mut() {
                    *v /= vol;
                }
                row[j] += t00;
            }
            let s = s.map(|x| x / vol);
            flux_max = flux_max.max(s.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            control_max = control_max.max(s_bad.iter().fold(0.0f64, |m, v| m.max(v.abs() / vol)));
            cells.push(CellStress {
                cell: t,
                centroid: cx.cell_centroid(t),
                volume: vol,
                t00,
                h,
                t0k: s,
                near_boundary: cx.simplex(3, t).iter().any(|&v| bnd[v]),
            });
        }
        let trace_total = -0.25 * (matrix_trace(k1, ops.mass(1)) + matrix_trace(k2, ops.mass(2)));
        let cell_sum: f64 = cells.iter().map(|c| c.t00 * c.volume).sum();
        let scale = trace_total.abs().max(cells.iter().map(|c| (c.t00 * c.volume).abs()).sum::<f64>());
        let trace_identity_residual = if scale > 0.0 { (cell_sum - trace_total).abs() / scale } else { 0.0 };
        let tensor_trace_residual = cells
            .iter()
            .map(|c| (c.h[0][0] + c.h[1][1] + c.h[2][2] - c.t00).abs())
            .fold(0.0, f64::max);
        let tensor_asymmetry = cells
            .iter()
            .map(|c| {
                let mut m = 0.0f64;
                for i in 0..3 {
                    for j in 0..3 {
                        m = m.max((c.h[i][j] - c.h[j][i]).abs());
                    }
                }
                m
            })
            .fold(0.0, f64::max);
        Ok(StressReport {
            cells,
            trace_total,
            cell_sum,
            trace_identity_residual,
            t0k_residual: if control_max > 0.0 { flux_max / control_max } else { 0.0 },
            t0k_control: control_max,
            d1_asymmetry: d1.asymmetry(),
            tensor_trace_residual,
            tensor_asymmetry,
        })
    }

    /// Free edges whose vertices all lie at edge-graph distance at least
    /// `depth` from the boundary.
    pub fn interior_window(&self, depth: usize) -> Vec<usize> {
        let cx = &self.scenario.carved;
        let dist = boundary_distance(cx);
        let ops = &self.sigma.ops;
        (0..ops.n(1))
            .filter(|&i| cx.simplex(1, ops.kept(1)[i]).iter().all(|&v| dist[v] >= depth))
            .collect()
    }

    /// Frobenius norm of the difference of the resolvents (Delta + l^2)^{-1}
    /// on 1-forms, restricted to `window`, for each l in `lambdas`.
    pub fn resolvent_decay(&self, window: &[usize], lambdas: &[f64]) -> Result<ResolventDecay> {
        if window.is_empty() {
            return Err(Error::Precondition("resolvent window is empty".into()));
        }
        if lambdas.len() < 4 || lambdas.windows(2).any(|w| !(w[1] > w[0])) || !(lambdas[0] > 0.0) {
            return Err(Error::Precondition("lambda grid must be positive, increasing and have at least 4 points".into()));
        }
        let sig = window_resolvent(&self.sigma, window, lambdas);
        let norms: Vec<f64> = match &self.reference {
            None => vec![0.0; lambdas.len()],
            Some(r) => {
                let w0: Vec<usize> = window.iter().map(|&i| self.maps[1][i]).collect();
                let refr = window_resolvent(r, &w0, lambdas);
                sig.iter()
                    .zip(&refr)
                    .map(|(a, b)| {
                        let d = a - b;
                        linalg::frobenius(d.as_ref())
                    })
                    .collect()
            }
        };
        let half = lambdas.len() / 2;
        let slope_upper = fit_slope(&lambdas[half..], &norms[half..]);
        let weighted_sum = lambdas
            .windows(2)
            .zip(norms.windows(2))
            .map(|(l, n)| 0.5 * (l[1] - l[0]) * (l[0] * l[0] * n[0] + l[1] * l[1] * n[1]))
            .sum();
        Ok(ResolventDecay { window: window.len(), lambdas: lambdas.to_vec(), norms, slope_upper, weighted_sum })
    }
}

fn add_scaled(h: &mut [[f64; 3]; 3], a: f64, t: &[[f64; 3]; 3]) {
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] += a * t[i][j];
        }
    }
}

fn local_positions(ops: &DecOperators, cx: &SimplicialComplex, t: usize, p: usize) -> Vec<Option<usize>> {
    cx.cell_subsimplices(t, p).iter().map(|&s| ops.position(p, s)).collect()
}

/// sum_ab K_ab M_ab
fn matrix_trace(k: &Mat<f64>, m: &Sparse) -> f64 {
    linalg::triplets(m).into_iter().map(|(i, j, v)| k[(i, j)] * v).sum()
}

fn boundary_distance(cx: &SimplicialComplex) -> Vec<usize> {
    let bnd = cx.on_boundary(0, None);
    let mut dist: Vec<usize> = bnd.iter().map(|&b| if b { 0 } else { usize::MAX }).collect();
    let mut frontier: Vec<usize> = (0..dist.len()).filter(|&v| bnd[v]).collect();
    let mut adj = vec![Vec::new(); dist.len()];
    for e in 0..cx.count(1) {
        let s = cx.simplex(1, e);
        adj[s[0]].push(s[1]);
        adj[s[1]].push(s[0]);
    }
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        let mut next = Vec::new();
        for v in frontier {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = level;
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    dist
}

/// Window block of V diag(1/(mu + l^2)) V^T M for every l.
fn window_resolvent(side: &Side, window: &[usize], lambdas: &[f64]) -> Vec<Mat<f64>> {
    let v = &side.dec.vectors;
    let mv = linalg::sp_mul(side.ops.mass(1), v);
    let n = v.ncols();
    let w = window.len();
    let left = Mat::from_fn(w, n, |i, k| v[(window[i], k)]);
    let right = Mat::from_fn(n, w, |k, j| mv[(window[j], k)]);
    let mu: Vec<f64> = (0..n).map(|k| if side.dec.is_kernel(k) { 0.0 } else { side.dec.eigenvalues[k] }).collect();
    lambdas
        .iter()
        .map(|&l| {
            let scaled = Mat::from_fn(w, n, |i, k| left[(i, k)] / (mu[k] + l * l));
            scaled * &right
        })
        .collect()
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, &v)| v > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-spaced grid from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Divergence of the voxel-averaged Maxwell tensor.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceLevel {
    pub h: f64,
    pub evaluated: usize,
    /// voxels skipped because a material interface is adjacent
    pub flagged: usize,
    pub rms: f64,
    pub max: f64,
    pub per_voxel: Vec<([usize; 3], [f64; 3])>,
}

/// Central-difference divergence sum_j d_j H_jk of voxel averages, at voxels
/// whose centres lie in the box `region` and whose six neighbours exist.
/// `cell_voxel` gives the voxel of every cell of the obstacle complex.
pub fn divergence_residual(
    report: &StressReport,
    cx: &SimplicialComplex,
    material: &Material,
    voxels: &VoxelInfo,
    cell_voxel: &[[usize; 3]],
    region: ([f64; 3], [f64; 3]),
) -> Result<DivergenceLevel> {
    if cell_voxel.len() != report.cells.len() {
        return Err(Error::Dimension("voxel map does not match the stress report".into()));
    }
    let mut acc: BTreeMap<[usize; 3], ([[f64; 3]; 3], f64, bool)> = BTreeMap::new();
    for (c, v) in report.cells.iter().zip(cell_voxel) {
        let e = acc.entry(*v).or_insert(([[0.0; 3]; 3], 0.0, false));
        add_scaled(&mut e.0, c.volume, &c.h);
        e.1 += c.volume;
        let (eps, mu) = material.eps_mu(cx.tags()[c.cell]);
        e.2 |= eps != 1.0 || mu != 1.0;
    }
    let avg: BTreeMap<[usize; 3], ([[f64; 3]; 3], bool)> = acc
        .into_iter()
        .map(|(k, (h, vol, twisted))| (k, (h.map(|r| r.map(|x| x / vol)), twisted)))
        .collect();
    let hstep = voxels.h;
    let inside = |v: &[usize; 3]| (0..3).all(|a| {
        let c = (v[a] as f64 + 0.5) * hstep;
        c > region.0[a] && c < region.1[a]
    });
    let mut per_voxel = Vec::new();
    let mut flagged = 0;
    for (v, (_, twisted)) in avg.iter().filter(|(v, _)| inside(v)) {
        let mut nbrs = Vec::with_capacity(6);
        for a in 0..3 {
            if v[a] == 0 {
                break;
            }
            let mut lo = *v;
            lo[a] -= 1;
            let mut hi = *v;
            hi[a] += 1;
            match (avg.get(&lo), avg.get(&hi)) {
                (Some(l), Some(h)) => nbrs.push((l, h)),
                _ => break,
            }
        }
        if nbrs.len() < 3 {
            continue;
        }
        if *twisted || nbrs.iter().any(|(l, h)| l.1 || h.1) {
            flagged += 1;
            continue;
        }
        let mut div = [0.0; 3];
        for (j, (l, h)) in nbrs.iter().enumerate() {
            for (k, d) in div.iter_mut().enumerate() {
                *d += (h.0[j][k] - l.0[j][k]) / (2.0 * hstep);
            }
        }
        per_voxel.push((*v, div));
    }
    if per_voxel.is_empty() {
        return Err(Error::Precondition("no voxel qualifies for the divergence residual".into()));
    }
    let norms: Vec<f64> = per_voxel.iter().map(|(_, d)| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()).collect();
    let rms = (norms.iter().map(|x| x * x).sum::<f64>() / norms.len() as f64).sqrt();
    let max = norms.iter().copied().fold(0.0, f64::max);
    Ok(DivergenceLevel { h: hstep, evaluated: per_voxel.len(), flagged, rms, max, per_voxel })
}

/// Voxel of every cell of the obstacle complex.
pub fn carved_cell_voxels(scenario: &ObstacleScenario, voxels: &VoxelInfo) -> Vec<[usize; 3]> {
    scenario.injection(3).iter().map(|&r| voxels.cell_voxel[r]).collect()
}
