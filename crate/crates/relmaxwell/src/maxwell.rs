//! Spectral time evolution of the discrete Maxwell system and of its
//! Lorenz-gauge potentials.
//!
//! Fields: E is a 1-cochain, B a 2-cochain, with
//! dE/dt = codiff B - tau^{-1} j, dB/dt = -dE, dB = 0, codiff E = -tau^{-1} rho.
//! Each component solves a forced wave equation that is propagated exactly
//! in the eigenbasis of the corresponding Laplacian.

use crate::forms::DecOperators;
use crate::linalg;
use crate::profile::{kernel_integral, Profile, Trig};
use crate::spectral::SpectralDecomposition;
use crate::{Error, Result};
use serde::Serialize;

/// A separable forcing term g(t) f.
pub type Forcing = (Profile, Vec<f64>);

/// Solution of u'' + Delta u = sum_k g_k(t) f_k at time t with data at t0.
#[derive(Debug, Clone)]
pub struct WaveSolution {
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
}

pub fn propagate(
    dec: &SpectralDecomposition,
    u0: &[f64],
    v0: &[f64],
    forcing: &[Forcing],
    t0: f64,
    t: f64,
) -> Result<WaveSolution> {
    let dt = t - t0;
    let w = dec.frequencies();
    let c0 = dec.coefficients(u0);
    let c1 = dec.coefficients(v0);
    let mut cu = vec![0.0; w.len()];
    let mut cv = vec![0.0; w.len()];
    for i in 0..w.len() {
        let (c, s) = ((w[i] * dt).cos(), sinc(w[i], dt));
        cu[i] = c * c0[i] + s * c1[i];
        cv[i] = -w[i] * w[i] * s * c0[i] + c * c1[i];
    }
    if dt != 0.0 {
        for (g, f) in forcing {
            let cf = dec.coefficients(f);
            let ks = kernel_integral(g, Trig::Sinc, t, Some((t0, t)), &w)?;
            let kc = kernel_integral(g, Trig::Cos, t, Some((t0, t)), &w)?;
            for i in 0..w.len() {
                cu[i] += ks[i] * cf[i];
                cv[i] += kc[i] * cf[i];
            }
        }
    }
    Ok(WaveSolution { u: dec.synthesize(&cu), u_dot: dec.synthesize(&cv) })
}

/// sin(w t) / w with the limit t at w = 0.
pub fn sinc(w: f64, t: f64) -> f64 {
    if (w * t).abs() < 1e-8 {
        t
    } else {
        (w * t).sin() / w
    }
}

/// Charge density and current as sums of separable terms. The pairing is
/// J = -rho dt + j; conservation means d rho/dt = delta j with the
/// codifferential of the unit material.
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub rho: Vec<Forcing>,
    pub j: Vec<Forcing>,
}

impl Sources {
    pub fn none() -> Self {
        Self::default()
    }

    /// j = h'(t) j0 and rho = h(t) delta j0, conserved by construction.
    pub fn conserved(ops: &DecOperators, h: Profile, j0: Vec<f64>) -> Self {
        let r0 = ops.codiff_unit(1, &j0);
        Sources { rho: vec![(h.clone(), r0)], j: vec![(h.derivative(), j0)] }
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty() && self.j.is_empty()
    }

    fn eval(terms: &[Forcing], t: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (g, f) in terms {
            linalg::axpy(g.eval(t), f, &mut out);
        }
        out
    }

    pub fn rho_at(&self, ops: &DecOperators, t: f64) -> Vec<f64> {
        Self::eval(&self.rho, t, ops.n(0))
    }

    pub fn j_at(&self, ops: &DecOperators, t: f64) -> Vec<f64> {
        Self::eval(&self.j, t, ops.n(1))
    }

    /// max over sample times of |d rho/dt - delta j| in the mass norm.
    pub fn continuity_defect(&self, ops: &DecOperators, times: &[f64]) -> f64 {
        let drho: Vec<Forcing> = self.rho.iter().map(|(g, f)| (g.derivative(), f.clone())).collect();
        times
            .iter()
            .map(|&t| {
                let mut a = Self::eval(&drho, t, ops.n(0));
                linalg::axpy(-1.0, &ops.codiff_unit(1, &self.j_at(ops, t)), &mut a);
                ops.norm(0, &a)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct MaxwellState {
    pub t: f64,
    pub e: Vec<f64>,
    pub b: Vec<f64>,
    pub e_dot: Vec<f64>,
    pub b_dot: Vec<f64>,
}

/// Absolute residual norms, each in the mass norm of its degree.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    /// dB/dt + dE
    pub faraday: f64,
    /// dE/dt - codiff B + tau^{-1} j
    pub ampere: f64,
    /// dB
    pub magnetic_gauss: f64,
    /// codiff E + tau^{-1} rho
    pub electric_gauss: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.faraday.max(self.ampere).max(self.magnetic_gauss).max(self.electric_gauss)
    }
}

/// Maxwell evolution on one complex, using the spectral decompositions of
/// the 1- and 2-form Laplacians.
pub struct MaxwellSystem<'a> {
    pub ops: &'a DecOperators,
    pub dec1: &'a SpectralDecomposition,
    pub dec2: &'a SpectralDecomposition,
}

impl<'a> MaxwellSystem<'a> {
    pub fn new(ops: &'a DecOperators, dec1: &'a SpectralDecomposition, dec2: &'a SpectralDecomposition) -> Result<Self> {
        if dec1.p != 1 || dec2.p != 2 {
            return Err(Error::Dimension("need decompositions of degrees 1 and 2".into()));
        }
        Ok(MaxwellSystem { ops, dec1, dec2 })
    }

    pub fn energy(&self, st: &MaxwellState) -> f64 {
        0.5 * (self.ops.inner(1, &st.e, &st.e) + self.ops.inner(2, &st.b, &st.b))
    }

    fn magnetic_gauss(&self, b: &[f64]) -> f64 {
        if self.ops.dim() > 2 {
            self.ops.norm(3, &self.ops.apply_d(2, b))
        } else {
            0.0
        }
    }

    fn electric_gauss(&self, e: &[f64], sources: &Sources, t: f64) -> f64 {
        let ops = self.ops;
        let mut g = ops.codiff(1, e);
        linalg::axpy(1.0, &ops.tau_inv(0, &sources.rho_at(ops, t)), &mut g);
        ops.norm(0, &g)
    }

    /// Time derivatives implied by the evolution equations.
    pub fn rates(&self, e: &[f64], b: &[f64], sources: &Sources, t: f64) -> (Vec<f64>, Vec<f64>) {
        let ops = self.ops;
        let mut e_dot = ops.codiff(2, b);
        linalg::axpy(-1.0, &ops.tau_inv(1, &sources.j_at(ops, t)), &mut e_dot);
        let b_dot: Vec<f64> = ops.apply_d(1, e).iter().map(|x| -x).collect();
        (e_dot, b_dot)
    }

    /// A state at time t whose rates follow from the evolution equations.
    pub fn state(&self, t: f64, e: Vec<f64>, b: Vec<f64>, sources: &Sources) -> MaxwellState {
        let (e_dot, b_dot) = self.rates(&e, &b, sources, t);
        MaxwellState { t, e, b, e_dot, b_dot }
    }

    /// Fields at each target time from the constrained state `s0`.
    pub fn evolve(&self, s0: &MaxwellState, sources: &Sources, targets: &[f64]) -> Result<Vec<MaxwellState>> {
        let v = self.magnetic_gauss(&s0.b) + self.electric_gauss(&s0.e, sources, s0.t);
        if v > 1e-8 {
            return Err(Error::Precondition(format!("initial data violate the constraints by {v:.3e}")));
        }
        let (e_dot0, b_dot0) = self.rates(&s0.e, &s0.b, sources, s0.t);
        let (fe, fb) = (self.forcing_e(sources), self.forcing_b(sources));
        targets
            .iter()
            .map(|&t| {
                let e = propagate(self.dec1, &s0.e, &e_dot0, &fe, s0.t, t)?;
                let b = propagate(self.dec2, &s0.b, &b_dot0, &fb, s0.t, t)?;
                Ok(MaxwellState { t, e: e.u, b: b.u, e_dot: e.u_dot, b_dot: b.u_dot })
            })
            .collect()
    }

    /// E'' + Delta E = -d tau^{-1} rho - tau^{-1} j'
    fn forcing_e(&self, s: &Sources) -> Vec<Forcing> {
        let ops = self.ops;
        let mut out = Vec::new();
        for (g, r) in &s.rho {
            let v: Vec<f64> = ops.apply_d(0, &ops.tau_inv(0, r)).iter().map(|x| -x).collect();
            out.push((g.clone(), v));
        }
        for (g, j) in &s.j {
            let v: Vec<f64> = ops.tau_inv(1, j).iter().map(|x| -x).collect();
            out.push((g.derivative(), v));
        }
        out
    }

    /// B'' + Delta B = d tau^{-1} j
    fn forcing_b(&self, s: &Sources) -> Vec<Forcing> {
        s.j.iter().map(|(g, j)| (g.clone(), self.ops.apply_d(1, &self.ops.tau_inv(1, j)))).collect()
    }

    pub fn residuals(&self, st: &MaxwellState, sources: &Sources) -> Residuals {
        let ops = self.ops;
        let (e_dot, b_dot) = self.rates(&st.e, &st.b, sources, st.t);
        let mut f = st.b_dot.clone();
        linalg::axpy(-1.0, &b_dot, &mut f);
        let mut a = st.e_dot.clone();
        linalg::axpy(-1.0, &e_dot, &mut a);
        Residuals {
            faraday: ops.norm(2, &f),
            ampere: ops.norm(1, &a),
            magnetic_gauss: self.magnetic_gauss(&st.b),
            electric_gauss: self.electric_gauss(&st.e, sources, st.t),
        }
    }
}

/// Lorenz-gauge potentials: phi'' + Delta phi = -tau^{-1} rho and
/// A'' + Delta A = tau^{-1} j, with phi = phi' = 0 at t = 0.
pub struct PotentialSystem<'a> {
    pub ops: &'a DecOperators,
    pub dec0: &'a SpectralDecomposition,
    pub dec1: &'a SpectralDecomposition,
}

#[derive(Debug, Clone)]
pub struct PotentialState {
    pub t: f64,
    pub phi: Vec<f64>,
    pub phi_dot: Vec<f64>,
    pub a: Vec<f64>,
    pub a_dot: Vec<f64>,
}

impl<'a> PotentialSystem<'a> {
    pub fn new(ops: &'a DecOperators, dec0: &'a SpectralDecomposition, dec1: &'a SpectralDecomposition) -> Result<Self> {
        if dec0.p != 0 || dec1.p != 1 {
            return Err(Error::Dimension("need decompositions of degrees 0 and 1".into()));
        }
        Ok(PotentialSystem { ops, dec0, dec1 })
    }

    /// Potentials at each target time. A Maxwell field with data E0 is
    /// obtained from a_dot0 = -E0.
    pub fn evolve(&self, a0: &[f64], a_dot0: &[f64], sources: &Sources, targets: &[f64]) -> Result<Vec<PotentialState>> {
        let ops = self.ops;
        let g = ops.norm(0, &ops.codiff(1, a0));
        if g > 1e-8 {
            return Err(Error::Precondition(format!("A0 is not co-closed: |codiff A0| = {g:.3e}")));
        }
        let fphi: Vec<Forcing> = sources
            .rho
            .iter()
            .map(|(g, r)| (g.clone(), ops.tau_inv(0, r).iter().map(|x| -x).collect()))
            .collect();
        let fa: Vec<Forcing> = sources.j.iter().map(|(g, j)| (g.clone(), ops.tau_inv(1, j))).collect();
        let zero = vec![0.0; ops.n(0)];
        targets
            .iter()
            .map(|&t| {
                let phi = propagate(self.dec0, &zero, &zero, &fphi, 0.0, t)?;
                let a = propagate(self.dec1, a0, a_dot0, &fa, 0.0, t)?;
                Ok(PotentialState { t, phi: phi.u, phi_dot: phi.u_dot, a: a.u, a_dot: a.u_dot })
            })
            .collect()
    }

    /// Mass norm of the spacetime codifferential phi' + codiff A.
    pub fn gauge_residual(&self, st: &PotentialState) -> f64 {
        let mut g = st.phi_dot.clone();
        linalg::axpy(1.0, &self.ops.codiff(1, &st.a), &mut g);
        self.ops.norm(0, &g)
    }

    /// E = d phi - A', B = dA.
    pub fn fields(&self, st: &PotentialState) -> (Vec<f64>, Vec<f64>) {
        let mut e = self.ops.apply_d(0, &st.phi);
        linalg::axpy(-1.0, &st.a_dot, &mut e);
        (e, self.ops.apply_d(1, &st.a))
    }
}
