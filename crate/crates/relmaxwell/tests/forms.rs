mod common;

use proptest::prelude::*;
use relmaxwell::forms::{assemble_mass, d_squared_vanishes, incidence, DecOperators, Material};
use relmaxwell::linalg;
use relmaxwell::mesh::{canned, format, SimplicialComplex};
use relmaxwell::Error;

const TET: &str = "relmaxwell-mesh 1\ndim 3\nvertices 4\n0 0 0\n2 0 0\n0 1 0\n0.3 0.2 1.5\n\
simplices 1 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\nsimplices 2 4\n0 1 2\n0 1 3\n0 2 3\n1 2 3\ncells 1\n0 0 1 2 3\nend\n";

fn tet() -> SimplicialComplex {
    format::parse_complex(TET).unwrap()
}

fn full_d(cx: &SimplicialComplex, p: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; cx.count(p + 1)];
    for (i, j, s) in incidence(cx, p) {
        y[i] += s as f64 * x[j];
    }
    y
}

fn quad(m: &linalg::Sparse, x: &[f64]) -> f64 {
    linalg::dot(x, &linalg::spmv(m, x))
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Twists the cells of ball:1 that sit strictly inside, away from the outer
/// boundary, with region tag 2.
fn twisted_ball() -> (SimplicialComplex, Material) {
    let g = canned::build("ball:1").unwrap();
    let cx = common::retag(&g.reference, |c, old| {
        if old == 0 && c.iter().all(|&x| x > 1.0 && x < 5.0) {
            2
        } else {
            old
        }
    });
    let sc = relmaxwell::mesh::ObstacleScenario::carve(cx, &g.obstacle_tags).unwrap();
    (sc.carved, Material::vacuum().with_region(2, 2.5, 0.7).unwrap())
}

#[test]
fn scalar_mass_matches_closed_form() {
    let cx = tet();
    let vol = cx.cell_volume(0);
    assert!((vol - 0.5).abs() < 1e-14);
    let m = linalg::to_dense(&assemble_mass(&cx, 0, None));
    for i in 0..4 {
        for j in 0..4 {
            let want = vol / 20.0 * if i == j { 2.0 } else { 1.0 };
            assert!((m[(i, j)] - want).abs() < 1e-14);
        }
    }
    let m3 = linalg::to_dense(&assemble_mass(&cx, 3, None));
    assert!((m3[(0, 0)] - 1.0 / vol).abs() < 1e-14);
}

#[test]
fn whitney_one_forms_reproduce_constant_gradients() {
    let cx = tet();
    let vol = cx.cell_volume(0);
    let g = [0.7, -1.3, 0.4];
    let u: Vec<f64> = cx.coords().iter().map(|x| dot3(g, *x) + 0.25).collect();
    let c = full_d(&cx, 0, &u);
    let m1 = assemble_mass(&cx, 1, None);
    assert!((quad(&m1, &c) - vol * dot3(g, g)).abs() < 1e-12);
}

#[test]
fn whitney_two_forms_reproduce_constant_curls() {
    // A = a x X / 2 has curl a; line integrals of a linear field are exact at midpoints
    let cx = tet();
    let vol = cx.cell_volume(0);
    let a = [0.3, 0.9, -0.5];
    let field = |x: [f64; 3]| [0.5 * (a[1] * x[2] - a[2] * x[1]), 0.5 * (a[2] * x[0] - a[0] * x[2]), 0.5 * (a[0] * x[1] - a[1] * x[0])];
    let xs = cx.coords();
    let c: Vec<f64> = (0..cx.count(1))
        .map(|e| {
            let s = cx.simplex(1, e);
            let (p, q) = (xs[s[0]], xs[s[1]]);
            let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0];
            dot3(field(mid), sub(q, p))
        })
        .collect();
    let b = full_d(&cx, 1, &c);
    let m2 = assemble_mass(&cx, 2, None);
    assert!((quad(&m2, &b) - vol * dot3(a, a)).abs() < 1e-12);
    assert!(common::max_abs(&full_d(&cx, 2, &b)) < 1e-14);
}

#[test]
fn material_weight_scales_each_degree() {
    let m = Material::vacuum().with_region(4, 2.0, 3.0).unwrap();
    for p in 0..=3 {
        let want = 2f64.powi(2 - p as i32) * 3f64.powi(1 - p as i32);
        assert!((m.tau(4, p) - want).abs() < 1e-14 * want);
        assert_eq!(m.tau(9, p), 1.0);
    }
    let g = canned::build("box:1").unwrap();
    let cx = common::retag(&g.reference, |_, _| 4);
    for p in 0..=3 {
        let plain = linalg::to_dense(&assemble_mass(&cx, p, None));
        let twisted = linalg::to_dense(&assemble_mass(&cx, p, Some(&m)));
        let diff = &twisted - &plain * faer::Scale(m.tau(4, p));
        assert!(linalg::frobenius(diff.as_ref()) < 1e-12 * linalg::frobenius(plain.as_ref()));
    }
}

#[test]
fn material_touching_outer_boundary_is_rejected() {
    let g = canned::build("box:1").unwrap();
    let cx = common::retag(&g.reference, |_, _| 4);
    let m = Material::vacuum().with_region(4, 2.0, 1.0).unwrap();
    assert!(matches!(DecOperators::new(&cx, &m), Err(Error::Material(_))));
    assert!(matches!(Material::vacuum().with_region(1, -1.0, 1.0), Err(Error::Material(_))));
}

#[test]
fn d_squared_vanishes_on_every_small_geometry() {
    for name in ["box:1", "balls:2", "ball:1", "slab:1", "solid_torus", "hopf_link", "wormhole_obstacle"] {
        assert!(d_squared_vanishes(&canned::build(name).unwrap().reference), "{name}");
        assert!(d_squared_vanishes(&common::scenario(name).carved), "{name}");
    }
}

#[test]
fn relative_conditions_drop_boundary_dofs() {
    let (sc, ops) = common::carved_ops("ball:1");
    for p in 0..=3 {
        let bnd = sc.carved.on_boundary(p, None);
        assert_eq!(ops.n(p), bnd.iter().filter(|b| !**b).count());
        assert!(ops.kept(p).iter().all(|&i| !bnd[i]));
    }
}

#[test]
fn vacuum_operators_have_no_twist() {
    let (_, ops) = common::carved_ops("ball:1");
    let mut r = common::rng(5);
    let x = common::random(&mut r, ops.n(1));
    assert!(!ops.is_twisted());
    assert_eq!(ops.tau_inv(1, &x), x);
    assert_eq!(ops.codiff_unit(1, &x), ops.codiff(1, &x));
}

#[test]
fn twisted_adjointness_residual_is_roundoff() {
    let (cx, mat) = twisted_ball();
    let ops = DecOperators::new(&cx, &mat).unwrap();
    assert!(ops.is_twisted());
    for p in 1..=3 {
        assert!(ops.adjointness_residual(p) < 1e-12, "degree {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn codifferential_is_the_weighted_adjoint(seed in any::<u64>(), p in 1usize..=3) {
        let (cx, mat) = twisted_ball();
        let ops = DecOperators::new(&cx, &mat).unwrap();
        let mut r = common::rng(seed);
        let x = common::random(&mut r, ops.n(p));
        let y = common::random(&mut r, ops.n(p - 1));
        let lhs = ops.inner(p - 1, &ops.codiff(p, &x), &y);
        let rhs = ops.inner(p, &x, &ops.apply_d(p - 1, &y));
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (lhs.abs() + rhs.abs() + 1.0));
    }

    #[test]
    fn laplacian_is_symmetric_and_nonnegative(seed in any::<u64>(), p in 0usize..=3) {
        let (_, ops) = common::carved_ops("balls:1");
        let mut r = common::rng(seed);
        let x = common::random(&mut r, ops.n(p));
        let y = common::random(&mut r, ops.n(p));
        let a = ops.inner(p, &ops.laplacian(p, &x), &y);
        let b = ops.inner(p, &x, &ops.laplacian(p, &y));
        prop_assert!((a - b).abs() <= 1e-10 * (a.abs() + b.abs() + 1.0));
        prop_assert!(ops.inner(p, &ops.laplacian(p, &x), &x) >= -1e-10);
    }

    #[test]
    fn mass_matrices_are_positive(seed in any::<u64>(), p in 0usize..=3) {
        let (_, ops) = common::carved_ops("slab:1");
        let mut r = common::rng(seed);
        let x = common::random(&mut r, ops.n(p));
        prop_assert!(ops.inner(p, &x, &x) > 0.0);
        let back = ops.solve_mass(p, &ops.apply_mass(p, &x));
        prop_assert!(common::max_abs_diff(&back, &x) < 1e-10);
    }

    #[test]
    fn restrict_inverts_extend(seed in any::<u64>(), p in 0usize..=3) {
        let (_, ops) = common::carved_ops("ball:1");
        let mut r = common::rng(seed);
        let x = common::random(&mut r, ops.n(p));
        let full = ops.extend(p, &x);
        prop_assert_eq!(full.len(), ops.total(p));
        prop_assert_eq!(ops.restrict(p, &full), x);
    }
}
