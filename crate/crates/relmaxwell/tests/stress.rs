mod common;

use proptest::prelude::*;
use relmaxwell::forms::Material;
use relmaxwell::linalg;
use relmaxwell::mesh::{canned, ObstacleScenario};
use relmaxwell::stress::{self, Method, StressContext, StressReport, Which};
use relmaxwell::Error;
use std::collections::BTreeMap;
use std::sync::OnceLock;

fn slab() -> &'static ObstacleScenario {
    static S: OnceLock<ObstacleScenario> = OnceLock::new();
    S.get_or_init(|| common::scenario("slab:1"))
}

fn slab_ctx() -> &'static StressContext<'static> {
    static C: OnceLock<StressContext<'static>> = OnceLock::new();
    C.get_or_init(|| StressContext::new(slab(), &Material::vacuum()).unwrap())
}

fn slab_report() -> &'static StressReport {
    static R: OnceLock<StressReport> = OnceLock::new();
    R.get_or_init(|| slab_ctx().report(Method::Eigen).unwrap())
}

fn rel_frobenius(a: &faer::Mat<f64>, b: &faer::Mat<f64>) -> f64 {
    let d = a - b;
    linalg::frobenius(d.as_ref()) / linalg::frobenius(a.as_ref())
}

#[test]
fn empty_obstacle_gives_identically_zero_stress() {
    let g = canned::build("ball:1").unwrap();
    let sc = ObstacleScenario::carve(g.reference, &[]).unwrap();
    let ctx = StressContext::new(&sc, &Material::vacuum()).unwrap();
    let r = ctx.report(Method::Eigen).unwrap();
    assert_eq!(r.max_abs(), 0.0);
    assert_eq!(r.trace_total, 0.0);
    let w = ctx.interior_window(1);
    let dec = ctx.decomposition();
    let d = ctx.resolvent_decay(&w, &stress::log_grid(dec.lambda_min(), dec.lambda_max(), 6)).unwrap();
    assert!(d.norms.iter().all(|n| *n == 0.0));
}

#[test]
fn cell_traces_sum_to_the_matrix_trace() {
    let ctx = slab_ctx();
    let ops = ctx.ops();
    let r = slab_report();
    let k1 = ctx.operator_difference(Which::D1, Method::Eigen).unwrap();
    let k2 = ctx.operator_difference(Which::D2, Method::Eigen).unwrap();
    let tr = |k: &faer::Mat<f64>, p: usize| {
        let km = k * linalg::to_dense(ops.mass(p));
        (0..km.nrows()).map(|i| km[(i, i)]).sum::<f64>()
    };
    let want = -0.25 * (tr(&k1.kernel, 1) + tr(&k2.kernel, 2));
    assert!((r.trace_total - want).abs() <= 1e-10 * want.abs().max(1.0));
    let sum: f64 = r.cells.iter().map(|c| c.t00 * c.volume).sum();
    assert!((sum - want).abs() <= 1e-10 * want.abs().max(1.0));
    assert!(r.trace_identity_residual <= 1e-10);
}

#[test]
fn eigen_and_resolvent_paths_agree() {
    let ctx = slab_ctx();
    for which in [Which::D1, Which::D2] {
        let a = ctx.operator_difference(which, Method::Eigen).unwrap();
        let b = ctx.operator_difference(which, Method::Quadrature { nodes: 40 }).unwrap();
        assert!(rel_frobenius(&a.kernel, &b.kernel) <= 1e-8, "{which:?}");
        assert!(a.asymmetry() < 1e-10, "{which:?}");
    }
}

#[test]
fn tensor_and_flux_identities() {
    let r = slab_report();
    let scale = r.max_abs();
    assert!(scale > 0.0);
    assert!(r.t0k_control > 0.0);
    assert!(r.t0k_residual <= 1e-8);
    assert!(r.tensor_trace_residual <= 1e-10 * scale);
    assert!(r.tensor_asymmetry <= 1e-10 * scale);
    for c in &r.cells {
        let tr = c.h[0][0] + c.h[1][1] + c.h[2][2];
        assert!((tr - c.t00).abs() <= 1e-10 * scale);
    }
}

#[test]
fn energy_density_decays_away_from_the_obstacle() {
    let sc = slab();
    let v = canned::build("slab:1").unwrap().voxels.unwrap();
    let cv = stress::carved_cell_voxels(sc, &v);
    let mut ray: BTreeMap<usize, (f64, f64, bool)> = BTreeMap::new();
    for (c, vx) in slab_report().cells.iter().zip(&cv) {
        if vx[1] == 1 && vx[2] == 1 {
            let e = ray.entry(vx[0]).or_default();
            e.0 += c.t00 * c.volume;
            e.1 += c.volume;
            e.2 |= c.near_boundary;
        }
    }
    let at = |i: usize| {
        let (s, vol, near) = ray[&i];
        assert!(!near, "voxel {i} touches the boundary");
        (s / vol).abs()
    };
    assert!(at(3) > at(4), "{} {}", at(3), at(4));
}

#[test]
fn resolvent_difference_decays_fast() {
    let ctx = slab_ctx();
    let dec = ctx.decomposition();
    let w = ctx.interior_window(1);
    let d = ctx.resolvent_decay(&w, &stress::log_grid(dec.lambda_min(), dec.lambda_max(), 16)).unwrap();
    assert!(d.slope_upper <= -3.0, "{}", d.slope_upper);
    assert!(d.weighted_sum.is_finite() && d.weighted_sum > 0.0);
}

#[test]
fn bad_inputs_are_reported() {
    let ctx = slab_ctx();
    let lams = [1.0, 2.0, 3.0, 4.0];
    assert!(matches!(ctx.resolvent_decay(&[], &lams), Err(Error::Precondition(_))));
    assert!(matches!(ctx.resolvent_decay(&[0], &[1.0, 0.5, 2.0, 3.0]), Err(Error::Precondition(_))));
    assert!(matches!(ctx.resolvent_decay(&[0], &lams[..3]), Err(Error::Precondition(_))));
    let k1 = ctx.operator_difference(Which::D1, Method::Eigen).unwrap();
    assert!(matches!(ctx.assemble(&k1, &k1), Err(Error::Dimension(_))));
    let v = canned::build("slab:1").unwrap().voxels.unwrap();
    let region = ([0.0; 3], [9.0; 3]);
    let err = stress::divergence_residual(slab_report(), &slab().carved, &Material::vacuum(), &v, &[], region);
    assert!(matches!(err, Err(Error::Dimension(_))));
}

proptest! {
    #[test]
    fn log_grid_is_geometric(lo in 1e-3f64..1.0, ratio in 1.5f64..1e3, n in 2usize..30) {
        let g = stress::log_grid(lo, lo * ratio, n);
        prop_assert_eq!(g.len(), n);
        prop_assert!((g[0] - lo).abs() <= 1e-12 * lo);
        prop_assert!((g[n - 1] - lo * ratio).abs() <= 1e-9 * lo * ratio);
        let q = g[1] / g[0];
        for w in g.windows(2) {
            prop_assert!((w[1] / w[0] - q).abs() < 1e-9);
        }
    }
}
