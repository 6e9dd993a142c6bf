//! Dense relative Hodge Laplacians, their generalized eigendecomposition,
//! matrix functions and the resolvent quadrature for inverse square roots.

use crate::forms::DecOperators;
use crate::linalg::{self, DenseSpd, Sparse};
use crate::{Error, Result};
use faer::Mat;
use gauss_quad::GaussLegendre;
use std::f64::consts::FRAC_PI_2;

/// Relative kernel threshold: eigenvalues below this fraction of the largest
/// one count as zero modes.
pub const KERNEL_RTOL: f64 = 1e-8;

/// Stiffness pencil (S, M) of the Laplacian in degree p, both dense.
/// S = M d M^{-1} d^T M + d^T M d.
#[derive(Debug, Clone)]
pub struct LaplaceOperator {
    pub p: usize,
    pub s: Mat<f64>,
    pub m: Mat<f64>,
    /// relative asymmetry of S before symmetrisation
    pub asymmetry: f64,
}

impl LaplaceOperator {
    pub fn assemble(ops: &DecOperators, p: usize) -> Result<Self> {
        if p > ops.dim() {
            return Err(Error::Dimension(format!("degree {p} exceeds dimension {}", ops.dim())));
        }
        let n = ops.n(p);
        let mut s = Mat::<f64>::zeros(n, n);
        if p < ops.dim() {
            let md = linalg::sp_sp(ops.mass(p + 1), ops.d(p));
            let b = linalg::sp_sp(&linalg::transpose(ops.d(p)), &md);
            s += linalg::to_dense(&b);
        }
        if p >= 1 {
            let y = linalg::sp_sp(&linalg::transpose(ops.d(p - 1)), ops.mass(p));
            let yd = linalg::to_dense(&y);
            let x = ops.mass_factor(p - 1).solve_mat(&yd);
            s += yd.transpose() * &x;
        }
        let asymmetry = linalg::asymmetry(s.as_ref());
        linalg::symmetrize(&mut s);
        Ok(LaplaceOperator { p, s, m: linalg::to_dense(ops.mass(p)), asymmetry })
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    /// (2/pi) int_0^inf (S + l^2 M)^{-1} B dl, with l = scale tan(theta) and
    /// Gauss-Legendre in theta.
    pub fn resolvent_integral(&self, b: &Mat<f64>, nodes: usize, scale: f64) -> Result<Mat<f64>> {
        if nodes == 0 || !(scale > 0.0) {
            return Err(Error::Precondition("quadrature needs nodes > 0 and a positive scale".into()));
        }
        let rule = GaussLegendre::new(std::num::NonZeroUsize::new(nodes).unwrap());
        let mut acc = Mat::<f64>::zeros(b.nrows(), b.ncols());
        for &(x, w) in rule.as_node_weight_pairs() {
            let theta = (x + 1.0) * FRAC_PI_2 / 2.0;
            let wt = w * FRAC_PI_2 / 2.0;
            let lam = scale * theta.tan();
            let jac = scale / theta.cos().powi(2);
            let shifted = &self.s + &self.m * faer::Scale(lam * lam);
            let y = DenseSpd::new(&shifted)?.solve_mat(b);
            acc += &y * faer::Scale(wt * jac / FRAC_PI_2);
        }
        Ok(acc)
    }

    /// Delta^{-1/2} x by resolvent quadrature. The kernel component of x must
    /// vanish; `kernel` supplies an M-orthonormal kernel basis to check that.
    pub fn inverse_sqrt_quadrature(
        &self,
        x: &[f64],
        kernel: Option<&Mat<f64>>,
        nodes: usize,
        scale: f64,
    ) -> Result<Vec<f64>> {
        let mut x = x.to_vec();
        if let Some(k) = kernel {
            let mx = &self.m * linalg::column(&x);
            let c = k.transpose() * &mx;
            let proj = k * &c;
            let pn = linalg::frobenius(proj.as_ref());
            let xn = linalg::norm(&x);
            if pn > 1e-8 * xn.max(f64::MIN_POSITIVE) {
                return Err(Error::Precondition(format!(
                    "kernel component {pn:.3e} of the argument is not negligible"
                )));
            }
            for i in 0..x.len() {
                x[i] -= proj[(i, 0)];
            }
        }
        let b = &self.m * linalg::column(&x);
        Ok(linalg::col_vec(self.resolvent_integral(&b, nodes, scale)?.as_ref(), 0))
    }
}

/// How a spectral function treats kernel eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelPolicy {
    /// evaluate the function at the computed eigenvalue
    Include,
    /// drop kernel components
    Exclude,
    /// use a fixed value on the kernel
    Replace(f64),
}

/// Generalized eigendecomposition S v = l^2 M v with M-orthonormal vectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub p: usize,
    pub eigenvalues: Vec<f64>,
    pub vectors: Mat<f64>,
    pub kernel_dim: usize,
    /// first nonzero eigenvalue over the largest kernel eigenvalue (or over
    /// the threshold when the kernel is empty)
    pub gap_ratio: f64,
    pub threshold: f64,
    mass: Sparse,
}

impl SpectralDecomposition {
    pub fn compute(lap: &LaplaceOperator, ops: &DecOperators) -> Result<Self> {
        let (eigenvalues, vectors) = linalg::generalized_eigh(&lap.s, &lap.m)?;
        let lmax = eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        let threshold = KERNEL_RTOL * lmax;
        let kernel_dim = eigenvalues.iter().take_while(|&&l| l < threshold).count();
        let gap_ratio = match (kernel_dim, eigenvalues.get(kernel_dim)) {
            (_, None) => f64::INFINITY,
            (0, Some(&l)) => l / threshold.max(f64::MIN_POSITIVE),
            (k, Some(&l)) => l / eigenvalues[k - 1].abs().max(f64::MIN_POSITIVE),
        };
        Ok(SpectralDecomposition {
            p: lap.p,
            eigenvalues,
            vectors,
            kernel_dim,
            gap_ratio,
            threshold,
            mass: ops.mass(lap.p).clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_kernel(&self, i: usize) -> bool {
        i < self.kernel_dim
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Smallest nonzero eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.get(self.kernel_dim).copied().unwrap_or(0.0)
    }

    /// Angular frequencies sqrt(l^2), zero on the kernel.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n()).map(|i| if self.is_kernel(i) { 0.0 } else { self.eigenvalues[i].max(0.0).sqrt() }).collect()
    }

    /// Relative residuals |S v - l^2 M v| / |S| per eigenpair (max-column norm
    /// of S as scale).
    pub fn residuals(&self, lap: &LaplaceOperator) -> Vec<f64> {
        let sv = &lap.s * &self.vectors;
        let mv = &lap.m * &self.vectors;
        let scale = self.lambda_max().abs().max(f64::MIN_POSITIVE);
        (0..self.n())
            .map(|j| {
                let mut r = 0.0;
                let mut vn = 0.0;
                for i in 0..self.n() {
                    r += (sv[(i, j)] - self.eigenvalues[j] * mv[(i, j)]).powi(2);
                    vn += mv[(i, j)].powi(2);
                }
                r.sqrt() / (scale * vn.sqrt().max(f64::MIN_POSITIVE))
            })
            .collect()
    }

    /// Expansion coefficients V^T M x.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        let mx = linalg::spmv(&self.mass, x);
        let c = self.vectors.transpose() * linalg::column(&mx);
        linalg::col_vec(c.as_ref(), 0)
    }

    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        linalg::col_vec((&self.vectors * linalg::column(c)).as_ref(), 0)
    }

    pub fn multipliers(&self, f: impl Fn(f64) -> f64, policy: KernelPolicy) -> Result<Vec<f64>> {
        (0..self.n())
            .map(|i| {
                let v = if self.is_kernel(i) {
                    match policy {
                        KernelPolicy::Include => f(self.eigenvalues[i].max(0.0)),
                        KernelPolicy::Exclude => 0.0,
                        KernelPolicy::Replace(v) => v,
                    }
                } else {
                    f(self.eigenvalues[i])
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Spectral(format!("function is not finite at eigenvalue {}", self.eigenvalues[i])))
                }
            })
            .collect()
    }

    /// f(Delta) x.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64, x: &[f64], policy: KernelPolicy) -> Result<Vec<f64>> {
        let m = self.multipliers(f, policy)?;
        let c = self.coefficients(x);
        let scaled: Vec<f64> = c.iter().zip(&m).map(|(a, b)| a * b).collect();
        Ok(self.synthesize(&scaled))
    }

    /// Coefficient-space map: V diag(m) V^T M as a dense matrix.
    pub fn function_matrix(&self, mult: &[f64]) -> Mat<f64> {
        let n = self.n();
        let vm = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * mult[j]);
        let vtm = self.vectors.transpose() * linalg::to_dense(&self.mass);
        vm * vtm
    }

    /// M-orthonormal kernel basis (columns).
    pub fn kernel_basis(&self) -> Mat<f64> {
        self.vectors.subcols(0, self.kernel_dim).to_owned()
    }

    /// Orthogonal projection onto the kernel.
    pub fn project_kernel(&self, x: &[f64]) -> Vec<f64> {
        let c = self.coefficients(x);
        let mut kc = vec![0.0; self.n()];
        kc[..self.kernel_dim].copy_from_slice(&c[..self.kernel_dim]);
        self.synthesize(&kc)
    }

    /// Scale for the resolvent quadrature: geometric mean of the spectral
    /// bounds.
    pub fn quadrature_scale(&self) -> f64 {
        let lo = self.lambda_min().max(f64::MIN_POSITIVE);
        let hi = self.lambda_max().max(lo);
        (lo * hi).powf(0.25)
    }

    pub fn mass(&self) -> &Sparse {
        &self.mass
    }
}

/// Assembles and decomposes the Laplacian in one step.
pub fn decompose(ops: &DecOperators, p: usize) -> Result<(LaplaceOperator, SpectralDecomposition)> {
    let lap = LaplaceOperator::assemble(ops, p)?;
    let dec = SpectralDecomposition::compute(&lap, ops)?;
    Ok((lap, dec))
}

pub use crate::hodge::ProjectorQ;
