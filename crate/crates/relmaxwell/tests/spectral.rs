mod common;

use proptest::prelude::*;
use relmaxwell::forms::DecOperators;
use relmaxwell::linalg;
use relmaxwell::spectral::{decompose, KernelPolicy, SpectralDecomposition};
use relmaxwell::Error;
use std::sync::OnceLock;

#[test]
fn eigenpairs_are_accurate_and_mass_orthonormal() {
    let (_, ops) = common::carved_ops("balls:2");
    for p in 0..=3 {
        let (lap, dec) = decompose(&ops, p).unwrap();
        assert!(lap.asymmetry < 1e-12);
        let worst = dec.residuals(&lap).into_iter().fold(0.0, f64::max);
        assert!(worst < 1e-10, "degree {p}: residual {worst:e}");
        let mv = linalg::sp_mul(ops.mass(p), &dec.vectors);
        let g = dec.vectors.transpose() * &mv;
        let n = g.nrows();
        let defect = faer::Mat::from_fn(n, n, |i, j| g[(i, j)] - if i == j { 1.0 } else { 0.0 });
        assert!(linalg::frobenius(defect.as_ref()) < 1e-9 * n as f64, "degree {p}");
        assert!(dec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn kernel_and_gap_on_two_obstacles() {
    let (_, ops) = common::carved_ops("balls:2");
    let (_, dec) = decompose(&ops, 1).unwrap();
    assert_eq!(dec.kernel_dim, 2);
    assert!(dec.gap_ratio > 1e3);
    assert!(dec.lambda_min() > 0.0 && dec.lambda_min() <= dec.lambda_max());
    let k = dec.kernel_basis();
    for j in 0..k.ncols() {
        let h = linalg::col_vec(k.as_ref(), j);
        assert!(ops.norm(1, &ops.laplacian(1, &h)) < 1e-9);
    }
}

#[test]
fn inverse_laplacian_inverts_the_sparse_operator() {
    let (_, ops) = common::carved_ops("solid_torus");
    let (_, dec) = decompose(&ops, 1).unwrap();
    let mut r = common::rng(2);
    let mut x = common::random(&mut r, ops.n(1));
    let k = dec.project_kernel(&x);
    linalg::axpy(-1.0, &k, &mut x);
    let y = dec.apply_function(|l| 1.0 / l, &x, KernelPolicy::Exclude).unwrap();
    let back = ops.laplacian(1, &y);
    let mut d = back.clone();
    linalg::axpy(-1.0, &x, &mut d);
    assert!(ops.norm(1, &d) < 1e-9 * ops.norm(1, &x));
}

#[test]
fn resolvent_quadrature_matches_eigen_inverse_square_root() {
    let (_, ops) = common::carved_ops("balls:1");
    let (lap, dec) = decompose(&ops, 1).unwrap();
    let mut r = common::rng(3);
    let mut x = common::random(&mut r, ops.n(1));
    let k = dec.project_kernel(&x);
    linalg::axpy(-1.0, &k, &mut x);
    let eig = dec.apply_function(|l| l.powf(-0.5), &x, KernelPolicy::Exclude).unwrap();
    let kb = dec.kernel_basis();
    let quad = lap.inverse_sqrt_quadrature(&x, Some(&kb), 60, dec.quadrature_scale()).unwrap();
    let mut d = quad.clone();
    linalg::axpy(-1.0, &eig, &mut d);
    assert!(ops.norm(1, &d) < 1e-8 * ops.norm(1, &eig), "{:e}", ops.norm(1, &d) / ops.norm(1, &eig));
}

#[test]
fn quadrature_refuses_kernel_components() {
    let (_, ops) = common::carved_ops("balls:1");
    let (lap, dec) = decompose(&ops, 1).unwrap();
    let kb = dec.kernel_basis();
    let h = linalg::col_vec(kb.as_ref(), 0);
    let err = lap.inverse_sqrt_quadrature(&h, Some(&kb), 20, 1.0).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    assert!(matches!(lap.resolvent_integral(&linalg::column(&h), 0, 1.0), Err(Error::Precondition(_))));
}

#[test]
fn singular_functions_on_the_kernel_are_errors() {
    let (_, ops) = common::carved_ops("balls:1");
    let (_, dec) = decompose(&ops, 1).unwrap();
    let x = vec![1.0; ops.n(1)];
    assert!(matches!(dec.apply_function(|l| 1.0 / l, &x, KernelPolicy::Include), Err(Error::Spectral(_))));
    assert!(dec.apply_function(|l| 1.0 / l, &x, KernelPolicy::Replace(0.0)).is_ok());
}

fn cached(slot: &'static OnceLock<(DecOperators, SpectralDecomposition)>, name: &str, p: usize) -> &'static (DecOperators, SpectralDecomposition) {
    slot.get_or_init(|| {
        let (_, ops) = common::carved_ops(name);
        let (_, dec) = decompose(&ops, p).unwrap();
        (ops, dec)
    })
}

static BALL2: OnceLock<(DecOperators, SpectralDecomposition)> = OnceLock::new();
static SLAB1: OnceLock<(DecOperators, SpectralDecomposition)> = OnceLock::new();

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn functional_calculus_is_multiplicative(seed in any::<u64>(), a in 0.1f64..2.0, b in -1.0f64..1.0) {
        let (ops, dec) = cached(&BALL2, "ball:1", 2);
        let mut r = common::rng(seed);
        let x = common::random(&mut r, ops.n(2));
        let f = |l: f64| (-a * l).exp();
        let g = |l: f64| (b * l.sqrt()).cos();
        let fg = dec.apply_function(|l| f(l) * g(l), &x, KernelPolicy::Include).unwrap();
        let two = dec.apply_function(f, &dec.apply_function(g, &x, KernelPolicy::Include).unwrap(), KernelPolicy::Include).unwrap();
        prop_assert!(common::max_abs_diff(&fg, &two) < 1e-9 * (1.0 + common::max_abs(&fg)));
    }

    #[test]
    fn coefficients_and_synthesis_are_inverse(seed in any::<u64>()) {
        let (ops, dec) = cached(&SLAB1, "slab:1", 1);
        let mut r = common::rng(seed);
        let x = common::random(&mut r, ops.n(1));
        prop_assert!(common::max_abs_diff(&dec.synthesize(&dec.coefficients(&x)), &x) < 1e-10);
    }
}
