mod common;

use proptest::prelude::*;
use relmaxwell::mesh::{canned, format, Marker, ObstacleScenario};
use relmaxwell::Error;

const SMALL: &[&str] = &["box:1", "balls:1", "balls:2", "ball:1", "slab:1", "solid_torus", "wormhole", "wormhole_obstacle"];

#[test]
fn canned_geometries_round_trip_through_text() {
    for name in SMALL {
        let g = canned::build(name).unwrap();
        let text = format::write_complex(&g.reference);
        let again = format::parse_complex(&text).unwrap();
        assert_eq!(again, g.reference, "{name}");
        assert_eq!(format::write_complex(&again), text, "{name}");
    }
}

#[test]
fn euler_characteristic_of_punctured_boxes() {
    // a box minus N disjoint balls retracts onto a wedge of N spheres
    for n in 1..=3 {
        let sc = common::scenario(&format!("balls:{n}"));
        let chi: i64 = sc.carved.counts().iter().enumerate().map(|(p, &c)| if p % 2 == 0 { c as i64 } else { -(c as i64) }).sum();
        assert_eq!(chi, 1 + n as i64);
    }
    // the complement of an unknotted solid torus in a ball is S^1 v S^2
    let sc = common::scenario("solid_torus");
    let chi: i64 = sc.carved.counts().iter().enumerate().map(|(p, &c)| if p % 2 == 0 { c as i64 } else { -(c as i64) }).sum();
    assert_eq!(chi, 1);
}

#[test]
fn boundary_components_match_obstacle_count() {
    for n in 1..=3 {
        let sc = common::scenario(&format!("balls:{n}"));
        let comps = sc.carved.boundary_components();
        assert_eq!(comps.len(), n + 1);
        assert_eq!(comps.iter().filter(|c| c.marker == Marker::Obstacle).count(), n);
        assert_eq!(comps.iter().filter(|c| c.marker == Marker::Outer).count(), 1);
    }
}

#[test]
fn carving_preserves_oriented_simplices() {
    let sc = common::scenario("ball:1");
    for p in 0..=3 {
        let inj = sc.injection(p);
        assert_eq!(inj.len(), sc.carved.count(p));
        for (i, &r) in inj.iter().enumerate() {
            let a: Vec<[f64; 3]> = sc.carved.simplex(p, i).iter().map(|&v| sc.carved.coords()[v]).collect();
            let b: Vec<[f64; 3]> = sc.reference.simplex(p, r).iter().map(|&v| sc.reference.coords()[v]).collect();
            assert_eq!(a, b);
        }
    }
    let removed = sc.removed(3);
    assert_eq!(removed.len() + sc.carved.count(3), sc.reference.count(3));
    assert!(removed.iter().all(|&t| sc.reference.tags()[t] == canned::OBSTACLE_TAG));
}

#[test]
fn carving_without_obstacle_cells_is_rejected() {
    let g = canned::build("box:1").unwrap();
    assert!(matches!(ObstacleScenario::carve(g.reference, &[7]), Err(Error::Mesh(_))));
}

#[test]
fn bad_canned_names_are_configuration_errors() {
    for bad in ["nope", "ball:0", "ball:x", "balls(9)", "balls(2", "box:9"] {
        assert!(matches!(canned::build(bad), Err(Error::Config { .. })), "{bad}");
    }
    assert_eq!(canned::build("balls:3").unwrap().expected_cohomology, Some([3, 0]));
    assert_eq!(canned::build("balls(3)").unwrap().expected_cohomology, Some([3, 0]));
}

#[test]
fn catalogue_lists_every_family() {
    let names: Vec<&str> = canned::catalogue().iter().map(|c| c.0).collect();
    for want in ["balls(N):r", "hopf_link", "wormhole_obstacle", "concentric_spheres:r", "solid_torus:r"] {
        assert!(names.contains(&want), "{want}");
    }
}

#[test]
fn parse_errors_report_lines() {
    let err = format::parse_complex("relmaxwell-mesh 2\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    let text = "relmaxwell-mesh 1\ndim 2\nvertices 3\n0 0 0\n1 0 0\n0 1 0\nsimplices 1 3\n0 1\n0 2\n1 2\ncells 1\n0 0 1 5\nend\n";
    let err = format::parse_complex(text).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 12, .. }), "{err}");
    let err = format::parse_complex("relmaxwell-mesh 1\ndim 2\nvertices 3\n0 0 0\n").unwrap_err();
    assert!(matches!(err, Error::Parse { .. }), "{err}");
}

#[test]
fn gmsh_requires_nodes_and_version() {
    assert!(matches!(format::parse_gmsh("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n"), Err(Error::Parse { .. })));
    assert!(matches!(format::parse_gmsh("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"), Err(Error::Parse { .. })));
}

#[test]
fn missing_file_is_io_error() {
    let err = format::load_complex(std::path::Path::new("/nonexistent/mesh.txt")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn retagging_keeps_cell_order() {
    let g = canned::build("ball:1").unwrap();
    let cx = common::retag(&g.reference, |_, old| old + 10);
    assert_eq!(cx.counts(), g.reference.counts());
    for t in 0..cx.count(3) {
        assert_eq!(cx.tags()[t], g.reference.tags()[t] + 10);
        assert_eq!(cx.cell_centroid(t), g.reference.cell_centroid(t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coordinates_round_trip_exactly(c in prop::collection::vec(-1e6f64..1e6, 12), tag in 0u32..1000) {
        let mut text = String::from("relmaxwell-mesh 1\ndim 3\nvertices 4\n");
        for k in 0..4 {
            text.push_str(&format!("{} {} {}\n", c[3 * k], c[3 * k + 1], c[3 * k + 2]));
        }
        text.push_str("simplices 1 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\nsimplices 2 4\n0 1 2\n0 1 3\n0 2 3\n1 2 3\n");
        text.push_str(&format!("cells 1\n{tag} 0 1 2 3\nend\n"));
        // degenerate or negatively oriented draws are rejected; that is fine
        if let Ok(cx) = format::parse_complex(&text) {
            let again = format::parse_complex(&format::write_complex(&cx)).unwrap();
            prop_assert_eq!(&again, &cx);
            prop_assert_eq!(again.tags()[0], tag);
        }
    }

    #[test]
    fn refinement_scales_counts(r in 1usize..3) {
        let g = canned::build(&format!("slab:{r}")).unwrap();
        let v = g.voxels.unwrap();
        prop_assert_eq!(v.dims, [6 * r, 3 * r, 3 * r]);
        prop_assert_eq!(g.reference.count(3), 6 * v.dims.iter().product::<usize>());
        prop_assert!((g.reference.total_volume() - 54.0).abs() < 1e-9);
    }
}
