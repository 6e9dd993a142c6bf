//! Scalar time profiles and their integrals against the wave propagator
//! kernels cos(w(t0 - s)) and sin(w(t0 - s)) / w.

use crate::{Error, Result};
use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// p((t - center) / half_width) on |t - center| <= half_width, zero
    /// outside; `coeffs` are ascending polynomial coefficients
    Bump { center: f64, half_width: f64, coeffs: Vec<f64> },
    /// the `order`-th derivative of a Dirac delta at `center`
    Impulse { center: f64, order: usize },
}

impl Profile {
    /// (1 - x^2)^k on the window, k >= 3 keeps two continuous derivatives.
    pub fn bump(center: f64, half_width: f64, k: usize) -> Self {
        let mut coeffs = vec![1.0];
        for _ in 0..k {
            let mut next = vec![0.0; coeffs.len() + 2];
            for (i, c) in coeffs.iter().enumerate() {
                next[i] += c;
                next[i + 2] -= c;
            }
            coeffs = next;
        }
        Profile::Bump { center, half_width, coeffs }
    }

    pub fn impulse(center: f64) -> Self {
        Profile::Impulse { center, order: 0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Bump { center, half_width, coeffs } => {
                let x = (t - center) / half_width;
                if x.abs() > 1.0 {
                    0.0
                } else {
                    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
                }
            }
            Profile::Impulse { .. } => 0.0,
        }
    }

    pub fn derivative(&self) -> Self {
        match self {
            Profile::Bump { center, half_width, coeffs } => {
                let d: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c / half_width).collect();
                Profile::Bump { center: *center, half_width: *half_width, coeffs: if d.is_empty() { vec![0.0] } else { d } }
            }
            Profile::Impulse { center, order } => Profile::Impulse { center: *center, order: order + 1 },
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        match self {
            Profile::Bump { center, half_width, coeffs } => {
                Profile::Bump { center: center + dt, half_width: *half_width, coeffs: coeffs.clone() }
            }
            Profile::Impulse { center, order } => Profile::Impulse { center: center + dt, order: *order },
        }
    }

    /// Closed interval outside of which the profile vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Profile::Bump { center, half_width, .. } => (center - half_width, center + half_width),
            Profile::Impulse { center, .. } => (*center, *center),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    /// cos(w (t0 - s))
    Cos,
    /// sin(w (t0 - s)) / w, equal to t0 - s at w = 0
    Sinc,
}

fn base(trig: Trig, w: f64, tau: f64) -> f64 {
    match trig {
        Trig::Cos => (w * tau).cos(),
        Trig::Sinc => {
            if w * tau.abs() < 1e-8 {
                tau * (1.0 - (w * tau).powi(2) / 6.0)
            } else {
                (w * tau).sin() / w
            }
        }
    }
}

/// m-th derivative in s of the kernel at tau = t0 - s.
fn kernel_derivative(trig: Trig, m: usize, w: f64, tau: f64) -> f64 {
    let w2 = -w * w;
    match (trig, m % 2) {
        (Trig::Cos, 0) => w2.powi((m / 2) as i32) * base(Trig::Cos, w, tau),
        (Trig::Cos, _) => w * w * w2.powi(((m - 1) / 2) as i32) * base(Trig::Sinc, w, tau),
        (Trig::Sinc, 0) => w2.powi((m / 2) as i32) * base(Trig::Sinc, w, tau),
        (Trig::Sinc, _) => -w2.powi(((m - 1) / 2) as i32) * base(Trig::Cos, w, tau),
    }
}

/// Gauss points per panel in the composite rule.
const PANEL_NODES: usize = 16;

/// For every frequency w: the integral of K(s) g(s) over `range` (all of R
/// when `None`), K being the chosen kernel centred at t0.
///
/// Impulses use the distributional rule int K delta^(m)(s - c) = (-1)^m K^(m)(c).
/// Bumps use composite Gauss-Legendre with panels no wider than pi / w_max.
pub fn kernel_integral(
    profile: &Profile,
    trig: Trig,
    t0: f64,
    range: Option<(f64, f64)>,
    freqs: &[f64],
) -> Result<Vec<f64>> {
    let (lo, hi) = range.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    match profile {
        Profile::Impulse { center, order } => {
            let c = *center;
            if range.is_some() && (c == lo || c == hi) && lo != hi {
                return Err(Error::Precondition(format!("impulse at t = {c} sits on an integration limit")));
            }
            let (a, b) = (lo.min(hi), lo.max(hi));
            let sign = if hi < lo { -1.0 } else { 1.0 };
            if c < a || c > b || a == b {
                return Ok(vec![0.0; freqs.len()]);
            }
            let s = if order % 2 == 0 { 1.0 } else { -1.0 };
            Ok(freqs.iter().map(|&w| sign * s * kernel_derivative(trig, *order, w, t0 - c)).collect())
        }
        Profile::Bump { .. } => {
            let (sa, sb) = profile.support();
            let (a, b, sign) = if hi >= lo { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
            let (a, b) = (a.max(sa), b.min(sb));
            let mut out = vec![0.0; freqs.len()];
            if b <= a {
                return Ok(out);
            }
            let wmax = freqs.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            let panels = ((b - a) * wmax / PI).ceil().max(1.0) as usize + 1;
            let rule = GaussLegendre::new(std::num::NonZeroUsize::new(PANEL_NODES).unwrap());
            let hpan = (b - a) / panels as f64;
            for k in 0..panels {
                let pa = a + k as f64 * hpan;
                for &(x, wt) in rule.as_node_weight_pairs() {
                    let s = pa + 0.5 * hpan * (x + 1.0);
                    let g = profile.eval(s) * 0.5 * hpan * wt * sign;
                    if g == 0.0 {
                        continue;
                    }
                    for (o, &w) in out.iter_mut().zip(freqs) {
                        *o += g * base(trig, w, t0 - s);
                    }
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        let b = Profile::bump(1.0, 0.5, 3);
        assert_eq!(b.eval(1.0), 1.0);
        assert_eq!(b.eval(1.5), 0.0);
        assert!((b.eval(1.25) - 0.75f64.powi(3)).abs() < 1e-15);
        let d = b.derivative();
        let h = 1e-6;
        assert!((d.eval(1.2) - (b.eval(1.2 + h) - b.eval(1.2 - h)) / (2.0 * h)).abs() < 1e-6);
    }

    #[test]
    fn cos_moment_of_bump() {
        // int (1-x^2)^3 dx over [-1, 1] = 32/35
        let b = Profile::bump(0.0, 1.0, 3);
        let v = kernel_integral(&b, Trig::Cos, 0.0, None, &[0.0]).unwrap();
        assert!((v[0] - 32.0 / 35.0).abs() < 1e-13);
    }

    #[test]
    fn impulse_derivative_rule() {
        let w = 1.7;
        let p = Profile::Impulse { center: 0.3, order: 1 };
        let v = kernel_integral(&p, Trig::Sinc, 1.0, None, &[w]).unwrap()[0];
        // -(d/ds) sin(w(1-s))/w at s = 0.3 equals cos(w 0.7)
        assert!((v - (w * 0.7).cos()).abs() < 1e-14);
    }

    #[test]
    fn derivative_profile_integrates_by_parts() {
        let b = Profile::bump(0.2, 0.8, 4);
        let w = [0.0, 0.5, 3.0, 11.0];
        let lhs = kernel_integral(&b.derivative(), Trig::Sinc, 2.0, None, &w).unwrap();
        let rhs = kernel_integral(&b, Trig::Cos, 2.0, None, &w).unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            // int K g' = - int K' g and d/ds sinc(t0 - s) = -cos
            assert!((l - r).abs() < 1e-12);
        }
    }
}
