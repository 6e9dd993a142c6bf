//! One-particle structure of the quantised field: Cauchy data of the
//! propagator, the Krein embedding kappa, the pairings G and G_Z, the
//! two-point function of the field strength and its Wick extension, and
//! Gaussian expectations in the zero-mode sector.
//!
//! Complex products are linear in the first argument and antilinear in the
//! second. With that choice Im<kappa(f1), kappa(f2)> = G(f1, f2) - G_Z(f1, f2)
//! and omega(f1, f2) - omega(f2, f1) = -i G(codiff f1, codiff f2).

use crate::forms::DecOperators;
use crate::hodge::ProjectorQ;
use crate::linalg;
use crate::profile::{kernel_integral, Profile, Trig};
use crate::spectral::{KernelPolicy, SpectralDecomposition};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

/// g(t) times a pair of spatial cochains. For spacetime 1-forms the pair is
/// (f0, f_sigma) meaning f0 dt + f_sigma; for 2-forms it is (alpha, beta)
/// meaning alpha ^ dt + beta.
#[derive(Debug, Clone)]
pub struct FormTerm {
    pub profile: Profile,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TestForm {
    pub degree: usize,
    pub terms: Vec<FormTerm>,
}

fn neg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

impl TestForm {
    pub fn new(ops: &DecOperators, degree: usize, terms: Vec<FormTerm>) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::Dimension(format!("test forms have degree 1 or 2, not {degree}")));
        }
        let (na, nb) = (ops.n(degree - 1), ops.n(degree));
        for t in &terms {
            if t.a.len() != na || t.b.len() != nb {
                return Err(Error::Dimension(format!(
                    "degree {degree} term needs cochains of length {na} and {nb}, got {} and {}",
                    t.a.len(),
                    t.b.len()
                )));
            }
        }
        Ok(TestForm { degree, terms })
    }

    pub fn zero(degree: usize) -> Self {
        TestForm { degree, terms: Vec::new() }
    }

    /// A single term g(t) (a, b).
    pub fn single(ops: &DecOperators, degree: usize, profile: Profile, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(ops, degree, vec![FormTerm { profile, a, b }])
    }

    /// Spacetime d of the 0-form g(t) u: g' u dt + g d u.
    pub fn gradient(ops: &DecOperators, profile: Profile, u: &[f64]) -> Self {
        let zero_a = vec![0.0; ops.n(0)];
        TestForm {
            degree: 1,
            terms: vec![
                FormTerm { profile: profile.derivative(), a: u.to_vec(), b: vec![0.0; ops.n(1)] },
                FormTerm { profile, a: zero_a, b: ops.apply_d(0, u) },
            ],
        }
    }

    pub fn time_derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| FormTerm { profile: t.profile.derivative(), a: t.a.clone(), b: t.b.clone() })
            .collect();
        TestForm { degree: self.degree, terms }
    }

    /// Pullback under the time flow by dt.
    pub fn shifted(&self, dt: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| FormTerm { profile: t.profile.shifted(dt), a: t.a.clone(), b: t.b.clone() })
            .collect();
        TestForm { degree: self.degree, terms }
    }

    /// Spacetime codifferential of a 2-form:
    /// codiff(alpha ^ dt + beta) = (codiff alpha) dt - alpha' + codiff beta.
    pub fn codiff(&self, ops: &DecOperators) -> Result<Self> {
        if self.degree != 2 {
            return Err(Error::Dimension("codifferential is implemented on 2-forms".into()));
        }
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            terms.push(FormTerm { profile: t.profile.clone(), a: ops.codiff(1, &t.a), b: ops.codiff(2, &t.b) });
            terms.push(FormTerm { profile: t.profile.derivative(), a: vec![0.0; ops.n(0)], b: neg(&t.a) });
        }
        Ok(TestForm { degree: 1, terms })
    }

    /// Spacetime d of a 1-form: d(f0 dt + f) = (d f0 - f') ^ dt + d f.
    pub fn exterior(&self, ops: &DecOperators) -> Result<Self> {
        if self.degree != 1 {
            return Err(Error::Dimension("exterior derivative is implemented on 1-forms".into()));
        }
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            terms.push(FormTerm { profile: t.profile.clone(), a: ops.apply_d(0, &t.a), b: ops.apply_d(1, &t.b) });
            terms.push(FormTerm { profile: t.profile.derivative(), a: neg(&t.b), b: vec![0.0; ops.n(2)] });
        }
        Ok(TestForm { degree: 2, terms })
    }

    /// Wave operator on a 1-form, componentwise d^2/dt^2 + Delta.
    pub fn wave(&self, ops: &DecOperators) -> Result<Self> {
        if self.degree != 1 {
            return Err(Error::Dimension("wave operator is implemented on 1-forms".into()));
        }
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            terms.push(FormTerm { profile: t.profile.derivative().derivative(), a: t.a.clone(), b: t.b.clone() });
            terms.push(FormTerm { profile: t.profile.clone(), a: ops.laplacian(0, &t.a), b: ops.laplacian(1, &t.b) });
        }
        Ok(TestForm { degree: 1, terms })
    }
}

/// Data at t = 0 of G f = phi dt + A.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub phi: Vec<f64>,
    pub a: Vec<f64>,
    pub phi_dot: Vec<f64>,
    pub a_dot: Vec<f64>,
}

/// Element of the Krein space: complex 0-cochain plus complex 1-cochain in
/// the range of P.
#[derive(Debug, Clone)]
pub struct KreinVector {
    pub scalar_re: Vec<f64>,
    pub scalar_im: Vec<f64>,
    pub vector_re: Vec<f64>,
    pub vector_im: Vec<f64>,
}

/// Mean and spread of a field-strength observable in the Gaussian state of
/// the zero-mode sector.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroModeReport {
    pub mean: f64,
    pub variance: f64,
    /// -sum_k int <alpha, psi_k> e_k, valid when alpha stays away from the
    /// support of Delta psi_eps
    pub shortcut_mean: f64,
    pub support_disjoint: bool,
    /// position coordinates of the observable in the zero-mode sector
    pub positions: Vec<f64>,
    /// momentum coordinates; zero for field-strength observables
    pub momenta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GaussianParams {
    pub e_top: Vec<f64>,
    pub e_q: Vec<f64>,
    pub sigma_top: f64,
    pub sigma_q: f64,
}

/// All quantum pairings on one complex.
pub struct QuantumContext<'a> {
    pub ops: &'a DecOperators,
    pub dec0: &'a SpectralDecomposition,
    pub dec1: &'a SpectralDecomposition,
    pub q: &'a ProjectorQ,
    /// number of topological directions among the harmonic basis
    pub n_top: usize,
}

/// Relative size of a kernel component that still counts as roundoff.
const KERNEL_LEAK: f64 = 1e-8;

impl<'a> QuantumContext<'a> {
    pub fn new(
        ops: &'a DecOperators,
        dec0: &'a SpectralDecomposition,
        dec1: &'a SpectralDecomposition,
        q: &'a ProjectorQ,
        n_top: usize,
    ) -> Result<Self> {
        if dec0.p != 0 || dec1.p != 1 {
            return Err(Error::Dimension("need decompositions of degrees 0 and 1".into()));
        }
        if q.basis().len() != dec1.kernel_dim {
            return Err(Error::Precondition(format!(
                "projector has {} harmonic vectors but the 1-form kernel has dimension {}",
                q.basis().len(),
                dec1.kernel_dim
            )));
        }
        Ok(QuantumContext { ops, dec0, dec1, q, n_top })
    }

    /// Cauchy data of G f for a 1-form f:
    /// phi(0) = -int sin(s w)/w f0(s) ds, phi'(0) = int cos(s w) f0(s) ds,
    /// and the same for A with the 1-form Laplacian.
    pub fn propagate_g(&self, f: &TestForm) -> Result<CauchyData> {
        if f.degree != 1 {
            return Err(Error::Dimension("propagate_g takes a 1-form".into()));
        }
        let (w0, w1) = (self.dec0.frequencies(), self.dec1.frequencies());
        let mut c = [vec![0.0; w0.len()], vec![0.0; w1.len()], vec![0.0; w0.len()], vec![0.0; w1.len()]];
        for t in &f.terms {
            let ka = self.dec0.coefficients(&t.a);
            let kb = self.dec1.coefficients(&t.b);
            let s0 = kernel_integral(&t.profile, Trig::Sinc, 0.0, None, &w0)?;
            let c0 = kernel_integral(&t.profile, Trig::Cos, 0.0, None, &w0)?;
            let s1 = kernel_integral(&t.profile, Trig::Sinc, 0.0, None, &w1)?;
            let c1 = kernel_integral(&t.profile, Trig::Cos, 0.0, None, &w1)?;
            for i in 0..w0.len() {
                c[0][i] += s0[i] * ka[i];
                c[2][i] += c0[i] * ka[i];
            }
            for i in 0..w1.len() {
                c[1][i] += s1[i] * kb[i];
                c[3][i] += c1[i] * kb[i];
            }
        }
        Ok(CauchyData {
            phi: self.dec0.synthesize(&c[0]),
            a: self.dec1.synthesize(&c[1]),
            phi_dot: self.dec0.synthesize(&c[2]),
            a_dot: self.dec1.synthesize(&c[3]),
        })
    }

    /// Symplectic form of Cauchy data with the Lorentzian sign on scalars.
    pub fn symplectic(&self, d1: &CauchyData, d2: &CauchyData) -> f64 {
        let o = self.ops;
        -o.inner(0, &d1.phi_dot, &d2.phi) + o.inner(1, &d1.a_dot, &d2.a) + o.inner(0, &d1.phi, &d2.phi_dot)
            - o.inner(1, &d1.a, &d2.a_dot)
    }

    pub fn pairing_g(&self, f1: &TestForm, f2: &TestForm) -> Result<f64> {
        Ok(self.symplectic(&self.propagate_g(f1)?, &self.propagate_g(f2)?))
    }

    /// -<A1, Q0 A2'> + <A2, Q0 A1'>
    pub fn gz_data(&self, d1: &CauchyData, d2: &CauchyData) -> f64 {
        let o = self.ops;
        -o.inner(1, &d1.a, &self.q.apply_q0(&d2.a_dot)) + o.inner(1, &d2.a, &self.q.apply_q0(&d1.a_dot))
    }

    pub fn gz(&self, f1: &TestForm, f2: &TestForm) -> Result<f64> {
        Ok(self.gz_data(&self.propagate_g(f1)?, &self.propagate_g(f2)?))
    }

    fn inverse_quarter(&self, dec: &SpectralDecomposition, x: &[f64]) -> Result<Vec<f64>> {
        let k = dec.project_kernel(x);
        let p = dec.p;
        let (nk, nx) = (self.ops.norm(p, &k), self.ops.norm(p, x));
        if nk > KERNEL_LEAK * nx.max(f64::MIN_POSITIVE) && nk > 0.0 {
            return Err(Error::Spectral(format!(
                "a kernel component of relative size {:.3e} reaches Delta^(-1/4) in degree {p}",
                nk / nx
            )));
        }
        dec.apply_function(|l| l.powf(-0.25), x, KernelPolicy::Exclude)
    }

    /// kappa = (D^{1/4} phi + i D^{-1/4} phi') + (D^{1/4} A + i D^{-1/4} Q A').
    pub fn kappa_data(&self, d: &CauchyData) -> Result<KreinVector> {
        let quarter = |l: f64| l.powf(0.25);
        Ok(KreinVector {
            scalar_re: self.dec0.apply_function(quarter, &d.phi, KernelPolicy::Exclude)?,
            scalar_im: self.inverse_quarter(self.dec0, &d.phi_dot)?,
            vector_re: self.dec1.apply_function(quarter, &d.a, KernelPolicy::Exclude)?,
            vector_im: self.inverse_quarter(self.dec1, &self.q.apply(&d.a_dot))?,
        })
    }

    pub fn kappa(&self, f: &TestForm) -> Result<KreinVector> {
        self.kappa_data(&self.propagate_g(f)?)
    }

    /// -<s1, s2> + <v1, v2>, linear in the first slot.
    pub fn krein_product(&self, k1: &KreinVector, k2: &KreinVector) -> Result<Complex64> {
        if k1.scalar_re.len() != k2.scalar_re.len() || k1.vector_re.len() != k2.vector_re.len() {
            return Err(Error::Dimension("Krein vectors from different complexes".into()));
        }
        let o = self.ops;
        let herm = |p: usize, a: &[f64], b: &[f64], c: &[f64], d: &[f64]| {
            Complex64::new(o.inner(p, a, c) + o.inner(p, b, d), o.inner(p, b, c) - o.inner(p, a, d))
        };
        Ok(herm(1, &k1.vector_re, &k1.vector_im, &k2.vector_re, &k2.vector_im)
            - herm(0, &k1.scalar_re, &k1.scalar_im, &k2.scalar_re, &k2.scalar_im))
    }

    /// Krein vectors kappa(codiff f) of a batch of 2-forms.
    pub fn field_vectors(&self, forms: &[TestForm]) -> Result<Vec<KreinVector>> {
        forms.iter().map(|f| self.kappa(&f.codiff(self.ops)?)).collect()
    }

    /// omega(f1, f2) = 1/2 <kappa(codiff f2), kappa(codiff f1)>.
    pub fn omega2_f(&self, f1: &TestForm, f2: &TestForm) -> Result<Complex64> {
        let k = self.field_vectors(&[f1.clone(), f2.clone()])?;
        Ok(0.5 * self.krein_product(&k[1], &k[0])?)
    }

    /// Quasifree n-point value: sum over pairings (i < j) of products of
    /// omega(f_i, f_j).
    pub fn wick_npoint(&self, forms: &[TestForm]) -> Result<Complex64> {
        let n = forms.len();
        if n % 2 == 1 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let k = self.field_vectors(forms)?;
        let mut w = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                w[i][j] = 0.5 * self.krein_product(&k[j], &k[i])?;
            }
        }
        Ok(wick_sum(&w, &(0..n).collect::<Vec<_>>()))
    }

    /// Expectation and variance of the field-strength observable of f in the
    /// Gaussian state centred on E_top + E_q. Position coordinates pair A(0)
    /// with psi_1 .. psi_{L-1}, psi_eps; momenta pair A'(0) with psi_k.
    pub fn zero_mode_expectation(&self, params: &GaussianParams, f: &TestForm) -> Result<ZeroModeReport> {
        let o = self.ops;
        let basis = self.q.basis();
        let l = basis.len();
        if !(params.sigma_top > 0.0 && params.sigma_q > 0.0) {
            return Err(Error::Precondition("Gaussian widths must be positive".into()));
        }
        let e: Vec<f64> = params.e_top.iter().zip(&params.e_q).map(|(a, b)| a + b).collect();
        let coeff = |x: &[f64], range: std::ops::Range<usize>| -> f64 {
            let mut r = x.to_vec();
            for k in range {
                linalg::axpy(-o.inner(1, x, &basis[k]), &basis[k], &mut r);
            }
            o.norm(1, &r) / o.norm(1, x).max(f64::MIN_POSITIVE)
        };
        if coeff(&params.e_top, 0..self.n_top) > 1e-8 || coeff(&params.e_q, self.n_top..l) > 1e-8 {
            return Err(Error::Precondition("E_top and E_q must lie in their harmonic sectors".into()));
        }
        let d = self.propagate_g(&f.codiff(o)?)?;
        let mut positions: Vec<f64> = basis.iter().map(|psi| o.inner(1, &d.a, psi)).collect();
        if let (Some(pe), true) = (self.q.psi_eps(), l > 0) {
            positions[l - 1] = o.inner(1, &d.a, pe);
        }
        let momenta: Vec<f64> = basis.iter().map(|psi| o.inner(1, &d.a_dot, psi)).collect();
        let ek: Vec<f64> = basis.iter().map(|psi| o.inner(1, &e, psi)).collect();
        let sigma = |k: usize| if k < self.n_top { params.sigma_top } else { params.sigma_q };
        let mean = -(0..l).map(|k| positions[k] * ek[k]).sum::<f64>();
        let variance = (0..l)
            .map(|k| sigma(k).powi(2) * positions[k].powi(2) + momenta[k].powi(2) / (4.0 * sigma(k).powi(2)))
            .sum();
        let mut shortcut_mean = 0.0;
        for t in &f.terms {
            let integral = kernel_integral(&t.profile, Trig::Cos, 0.0, None, &[0.0])?[0];
            shortcut_mean += integral * o.inner(1, &t.a, &e);
        }
        Ok(ZeroModeReport {
            mean,
            variance,
            shortcut_mean,
            support_disjoint: self.support_disjoint(f),
            positions,
            momenta,
        })
    }

    /// Whether no alpha part of f shares a vertex with the support of
    /// Delta psi_eps.
    fn support_disjoint(&self, f: &TestForm) -> bool {
        let Some(pe) = self.q.psi_eps() else { return true };
        let lap = self.ops.laplacian(1, pe);
        let scale = lap.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let d0 = self.ops.d(0);
        let touched = |x: &[f64], tol: f64| -> Vec<bool> {
            let mut mark = vec![false; self.ops.n(0)];
            for (i, j, _) in linalg::triplets(d0) {
                if x[i].abs() > tol {
                    mark[j] = true;
                }
            }
            mark
        };
        let hot = touched(&lap, 1e-10 * scale);
        f.terms.iter().all(|t| {
            let s = t.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mine = touched(&t.a, 1e-14 * s);
            !mine.iter().zip(&hot).any(|(a, b)| *a && *b)
        })
    }
}

fn wick_sum(w: &[Vec<Complex64>], idx: &[usize]) -> Complex64 {
    if idx.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let first = idx[0];
    let mut total = Complex64::new(0.0, 0.0);
    for k in 1..idx.len() {
        let rest: Vec<usize> = idx[1..].iter().enumerate().filter(|&(m, _)| m + 1 != k).map(|(_, &v)| v).collect();
        total += w[first][idx[k]] * wick_sum(w, &rest);
    }
    total
}
