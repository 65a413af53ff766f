use super::*;
use crate::complex::build::{
    boundary_of_top, circle, cube, delta_torus, point, quotient, segment, simplex, torus,
    Identification,
};
use crate::scalar::rat_int;

fn counts(cx: &CornerComplex) -> Vec<usize> {
    let Some(n) = cx.dim() else { return vec![] };
    (0..=n).map(|d| cx.cells_of_dim(d).count()).collect()
}

#[test]
fn empty_complex_is_valid() {
    let cx = CornerComplex::new();
    assert!(cx.validate().is_ok());
    assert_eq!(cx.dim(), None);
    assert!(cx.boundary_components().is_empty());
}

#[test]
fn square_depths_and_strata() {
    let sq = cube(2);
    sq.validate().unwrap();
    assert_eq!(counts(&sq), vec![4, 4, 1]);
    let depths = sq.depths();
    for cell in sq.cells() {
        let expected = 2 - cell.dim();
        assert_eq!(depths[&cell.key], expected, "cell {}", cell.key);
    }
    // The depth-1 stratum has four components (the open edges), each closing up to
    // an interval with its endpoints.
    let s1 = sq.stratum(1);
    assert_eq!(s1.len(), 4);
    for comp in &s1 {
        assert_eq!(counts(comp), vec![2, 1]);
    }
    // The depth-2 stratum is the four corners.
    let s2 = sq.stratum(2);
    assert_eq!(s2.len(), 4);
    for comp in &s2 {
        assert_eq!(counts(comp), vec![1]);
    }
}

#[test]
fn segment_boundary_signs() {
    let seg = segment("t", rat_int(0), rat_int(1));
    seg.validate().unwrap();
    let comps = seg.boundary_components();
    assert_eq!(comps.len(), 2);
    let sign_of = |name: &str| -> i8 {
        let key = CellKey::atom(name);
        comps
            .iter()
            .find(|c| c.facets.contains(&key))
            .unwrap()
            .complex
            .cell(&key)
            .sign
    };
    assert_eq!(sign_of("t.0"), -1);
    assert_eq!(sign_of("t.1"), 1);
}

#[test]
fn cylinder_boundary_is_two_opposite_circles() {
    let cyl = circle("c").product(&segment("t", rat_int(0), rat_int(1)));
    cyl.validate().unwrap();
    let depths = cyl.depths();
    for cell in cyl.cells() {
        let on_end = match &cell.key {
            CellKey::Pair(_, b) => {
                matches!(&**b, CellKey::Atom(s) if s == "t.0" || s == "t.1")
            }
            _ => false,
        };
        assert_eq!(depths[&cell.key], usize::from(on_end), "cell {}", cell.key);
    }

    let comps = cyl.boundary_components();
    assert_eq!(comps.len(), 2);
    let bottom = &comps[0];
    let top = &comps[1];
    assert_eq!(counts(&bottom.complex), vec![2, 2]);
    assert_eq!(bottom.facets.len(), 2);

    // The two ends are the same circle with opposite induced orientations.
    let rename: std::collections::BTreeMap<CellKey, CellKey> = bottom
        .complex
        .keys()
        .map(|k| {
            let CellKey::Pair(a, _) = k else { panic!() };
            (k.clone(), CellKey::pair(a, &CellKey::atom("t.1")))
        })
        .collect();
    assert_eq!(bottom.complex.relabeled(&rename).reverse(), top.complex);
}

#[test]
fn solid_cube_depths_and_boundary() {
    let c3 = cube(3);
    c3.validate().unwrap();
    assert_eq!(counts(&c3), vec![8, 12, 6, 1]);
    let depths = c3.depths();
    for cell in c3.cells() {
        assert_eq!(depths[&cell.key], 3 - cell.dim(), "cell {}", cell.key);
    }
    let comps = c3.boundary_components();
    assert_eq!(comps.len(), 6);
    for comp in &comps {
        assert_eq!(counts(&comp.complex), vec![4, 4, 1]);
    }
}

#[test]
fn cube_boundary_sphere_is_closed() {
    let sphere = boundary_of_top(&cube(3)).unwrap();
    sphere.validate().unwrap();
    assert_eq!(counts(&sphere), vec![8, 12, 6]);
    assert!(sphere.boundary_components().is_empty());
    for (key, d) in sphere.depths() {
        assert_eq!(d, 0, "cell {key}");
    }
}

#[test]
fn product_torus_is_closed() {
    let t2 = torus(2);
    t2.validate().unwrap();
    assert_eq!(counts(&t2), vec![4, 8, 4]);
    assert!(t2.boundary_components().is_empty());
    assert!(t2.depths().values().all(|d| *d == 0));
}

#[test]
fn delta_torus_is_closed() {
    let t = delta_torus();
    t.validate().unwrap();
    assert_eq!(counts(&t), vec![1, 3, 2]);
    assert!(t.boundary_components().is_empty());
    assert!(t.depths().values().all(|d| *d == 0));
}

#[test]
fn simplex_depths_match_codimension() {
    let s3 = simplex(3);
    s3.validate().unwrap();
    assert_eq!(counts(&s3), vec![4, 6, 4, 1]);
    let depths = s3.depths();
    for cell in s3.cells() {
        assert_eq!(depths[&cell.key], 3 - cell.dim());
    }
}

#[test]
fn product_depth_is_additive() {
    let a = simplex(2);
    let b = segment("t", rat_int(0), rat_int(1));
    let prod = a.product(&b);
    prod.validate().unwrap();
    let da = a.depths();
    let db = b.depths();
    let dp = prod.depths();
    for ka in a.keys() {
        for kb in b.keys() {
            let kp = CellKey::pair(ka, kb);
            assert_eq!(dp[&kp], da[ka] + db[kb], "cell {kp}");
        }
    }
}

#[test]
fn product_with_closed_factor_keeps_sheet_shape() {
    // Boundary of circle x interval x circle: two tori.
    let cyl = circle("a")
        .product(&segment("t", rat_int(0), rat_int(1)))
        .product(&circle("b"));
    cyl.validate().unwrap();
    let comps = cyl.boundary_components();
    assert_eq!(comps.len(), 2);
    for comp in &comps {
        assert_eq!(counts(&comp.complex), vec![4, 8, 4]);
        assert!(comp.complex.validate().is_ok());
        assert!(comp.complex.boundary_components().is_empty());
    }
}

#[test]
fn reverse_is_involutive_and_commutes_with_product() {
    let a = cube(2);
    let b = circle("c");
    assert_eq!(a.reverse().reverse(), a);
    // Non-top signs are gauge, so reversal commutes with products up to gauge.
    let lhs = a.reverse().product(&b);
    let rhs = a.product(&b).reverse();
    assert_ne!(lhs, rhs);
    assert!(lhs.gauge_equivalent(&rhs));
}

#[test]
fn boundary_of_reversed_complex_is_reversed_boundary() {
    let cyl = circle("c").product(&segment("t", rat_int(0), rat_int(1)));
    let comps = cyl.boundary_components();
    let comps_rev = cyl.reverse().boundary_components();
    assert_eq!(comps.len(), comps_rev.len());
    for (c, r) in comps.iter().zip(&comps_rev) {
        assert_eq!(c.facets, r.facets);
        assert_eq!(c.complex.reverse(), r.complex);
    }
}

#[test]
fn one_square_torus_by_gluing() {
    let sq = cube(2);
    let left = CellKey::pair(&CellKey::atom("x1.0"), &CellKey::atom("x2"));
    let right = CellKey::pair(&CellKey::atom("x1.1"), &CellKey::atom("x2"));
    let bottom = CellKey::pair(&CellKey::atom("x1"), &CellKey::atom("x2.0"));
    let top = CellKey::pair(&CellKey::atom("x1"), &CellKey::atom("x2.1"));
    let glued = quotient(
        &sq,
        vec![
            Identification {
                keep: left,
                drop: right,
                map: crate::geometry::AffineMap::identity(1),
            },
            Identification {
                keep: bottom,
                drop: top,
                map: crate::geometry::AffineMap::identity(1),
            },
        ],
    )
    .unwrap();
    glued.validate().unwrap();
    assert_eq!(counts(&glued), vec![1, 2, 1]);
    assert!(glued.boundary_components().is_empty());
    assert!(glued.depths().values().all(|d| *d == 0));
}

#[test]
fn inconsistent_gluing_is_rejected() {
    // Gluing the left edge of a square to itself with a flip forces the two
    // endpoint vertices together inconsistently with a second flip gluing.
    let sq = cube(2);
    let left = CellKey::pair(&CellKey::atom("x1.0"), &CellKey::atom("x2"));
    let flip = crate::geometry::AffineMap::from_rows(vec![vec![-rat_int(1)]], vec![rat_int(1)]);
    let err = quotient(
        &sq,
        vec![Identification {
            keep: left.clone(),
            drop: left,
            map: flip,
        }],
    );
    assert!(err.is_err());
}

#[test]
fn validation_catches_missing_attachment() {
    let mut sq = cube(2);
    let bottom = Attachment {
        parent: CellKey::pair(&CellKey::atom("x1"), &CellKey::atom("x2")),
        child: CellKey::pair(&CellKey::atom("x1"), &CellKey::atom("x2.0")),
        map: crate::geometry::AffineMap::from_rows(
            vec![vec![rat_int(1)], vec![rat_int(0)]],
            vec![rat_int(0), rat_int(0)],
        ),
    };
    sq.attachments.remove(&bottom);
    let report = sq.validation_report();
    assert!(!report.is_ok());
    assert!(report
        .diagnostics
        .iter()
        .any(|d| d.contains("covered by 0 attachments")));
}

#[test]
fn validation_catches_orientation_mismatch() {
    let mut sphere = boundary_of_top(&cube(3)).unwrap();
    let some_face = sphere.top_cells()[0].key.clone();
    sphere.cell_mut(&some_face).sign *= -1;
    let report = sphere.validation_report();
    assert!(report
        .diagnostics
        .iter()
        .any(|d| d.contains("inconsistent orientations")));
}

#[test]
fn point_and_identity_cases() {
    let p = point("p");
    p.validate().unwrap();
    assert_eq!(p.dim(), Some(0));
    assert!(p.boundary_components().is_empty());
    assert_eq!(p.depths()[&CellKey::atom("p")], 0);

    let same = p.same_up_to_orientation(&p);
    assert_eq!(same, Some(1));
    let rev = p.reverse();
    assert_eq!(p.same_up_to_orientation(&rev), Some(-1));
}

#[test]
fn routes_are_deduplicated_across_corners() {
    let sq = cube(2);
    let corner = CellKey::pair(&CellKey::atom("x1.0"), &CellKey::atom("x2.0"));
    let routes = sq.routes_up();
    let to_top: Vec<_> = routes[&corner]
        .iter()
        .filter(|(anc, _)| sq.cell(anc).dim() == 2)
        .collect();
    // Both edge factorizations compose to the same corner embedding.
    assert_eq!(to_top.len(), 1);
}
