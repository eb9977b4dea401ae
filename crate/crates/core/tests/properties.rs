mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use patchup::io::{read_cloud, write_cloud, CloudFormat};
use patchup::metrics::{chamfer_l1, chamfer_l2, emd};
use patchup::{
    bicubic_eval, decode_rotation, fit_patch, patch_lift, upsample, BicubicCoeffs, KnnIndex, LocalPatch, Point3,
    PointCloud, Rotation6D, UpsampleConfig,
};

fn point(range: f64) -> impl Strategy<Value = Point3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn cloud(min: usize, max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(point(10.0), min..max).prop_map(|v| PointCloud::new(v).unwrap())
}

fn non_degenerate_6d() -> impl Strategy<Value = (Point3, Point3)> {
    (point(5.0), point(5.0)).prop_filter("independent columns", |(a, b)| {
        let (na, nb) = (a.norm(), b.norm());
        na > 1e-3 && nb > 1e-3 && a.cross(*b).norm() > 1e-3 * na * nb
    })
}

proptest! {
    #[test]
    fn rotation_is_orthonormal_and_scale_invariant((a1, a2) in non_degenerate_6d(), s1 in 1e-3f64..1e3, s2 in 1e-3f64..1e3) {
        let r = decode_rotation(&Rotation6D::new(a1, a2)).unwrap();
        prop_assert!(r.orthonormality_error() <= 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
        let scaled = decode_rotation(&Rotation6D::new(a1 * s1, a2 * s2)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((r.m[i][j] - scaled.m[i][j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bicubic_matches_naive_loop(c in prop::array::uniform16(-10.0f64..10.0), u in -2.0f64..2.0, v in -2.0f64..2.0) {
        let got = bicubic_eval(&BicubicCoeffs(c), u, v);
        let want = common::naive_bicubic(&c, u, v);
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn flat_patch_lifts_into_tangent_plane((a1, a2) in non_degenerate_6d(), o in point(10.0), du in -1.0f64..1.0, dv in -1.0f64..1.0, s in 0.01f64..10.0) {
        let rot = decode_rotation(&Rotation6D::new(a1, a2)).unwrap();
        let patch = LocalPatch::new(o, rot, BicubicCoeffs::ZERO, s).unwrap();
        let p = patch_lift(&patch, du, dv);
        prop_assert!((p - o).dot(rot.col(2)).abs() <= 1e-12 * (1.0 + s));
    }

    #[test]
    fn lifted_children_sit_on_their_patch(c in prop::array::uniform16(-1.0f64..1.0), (a1, a2) in non_degenerate_6d(), o in point(5.0), du in -0.5f64..0.5, dv in -0.5f64..0.5) {
        let rot = decode_rotation(&Rotation6D::new(a1, a2)).unwrap();
        let patch = LocalPatch::new(o, rot, BicubicCoeffs(c), 0.3).unwrap();
        let p = patch_lift(&patch, du, dv);
        prop_assert!(patch.surface_residual(p).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_matches_brute_force(c in cloud(1, 400), q in point(12.0), k in 1usize..64) {
        let k = k.min(c.len());
        let index = KnnIndex::build(&c);
        let got: Vec<usize> = index.knn(q, k).unwrap().iter().map(|n| n.index).collect();
        prop_assert_eq!(got, common::brute_knn(c.points(), q, k));
    }

    #[test]
    fn chamfer_axioms(p in cloud(1, 60), q in cloud(1, 60)) {
        let a = chamfer_l2(&p, &q).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert_eq!(a, chamfer_l2(&q, &p).unwrap());
        prop_assert_eq!(chamfer_l2(&p, &p).unwrap(), 0.0);
        let b = chamfer_l1(&p, &q).unwrap();
        prop_assert!(b >= 0.0);
        prop_assert_eq!(b, chamfer_l1(&q, &p).unwrap());
    }

    #[test]
    fn emd_is_rigid_invariant(p in cloud(2, 40), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let q = common::random_cloud(&mut rng, p.len(), 10.0);
        let r = common::random_rotation(&mut rng);
        let t = common::random_point(&mut rng, 5.0);
        let before = emd(&p, &q).unwrap().value;
        let after = emd(&common::rigid(&p, &r, t), &common::rigid(&q, &r, t)).unwrap().value;
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn xyz_and_ply_reload_to_tolerance(c in cloud(1, 200)) {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("c.ply");
        write_cloud(&c, &bin, CloudFormat::PlyBinaryLe).unwrap();
        prop_assert_eq!(read_cloud(&bin).unwrap(), c.clone());
        let txt = dir.path().join("c.xyz");
        write_cloud(&c, &txt, CloudFormat::Xyz).unwrap();
        let back = read_cloud(&txt).unwrap();
        for (a, b) in back.points().iter().zip(c.points()) {
            prop_assert!(a.dist(*b) <= 1e-7 * (1.0 + b.norm()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_is_rigid_equivariant(seed in any::<u64>(), parent in 0usize..200) {
        let mut rng = common::rng(seed);
        let c = patchup::shapes::Shape::Torus.sample(200, seed).unwrap();
        let r = common::random_rotation(&mut rng);
        let t = common::random_point(&mut rng, 10.0);
        let moved = common::rigid(&c, &r, t);
        let a = fit_patch(&c, &KnnIndex::build(&c), parent, 16).unwrap();
        let b = fit_patch(&moved, &KnnIndex::build(&moved), parent, 16).unwrap();
        prop_assert!((a.rms_residual - b.rms_residual).abs() <= 1e-9);
        prop_assert!((a.displacement_loss - b.displacement_loss).abs() <= 1e-9);
        prop_assert!(a.rms_residual <= a.displacement_loss.sqrt() + 1e-12);
    }

    #[test]
    fn output_count_is_product_of_ratios(n in 20usize..200, ratios in prop::collection::vec(1usize..4, 1..3), seed in any::<u64>()) {
        let c = patchup::shapes::Shape::Sphere.sample(n, seed).unwrap();
        let cfg = UpsampleConfig { ratios: ratios.clone(), k: 8, ..Default::default() };
        let out = upsample(&c, &cfg).unwrap();
        prop_assert_eq!(out.len(), n * ratios.iter().product::<usize>());
    }

    #[test]
    fn planar_cloud_stays_planar(seed in any::<u64>(), m in 1usize..6) {
        let mut rng = common::rng(seed);
        let flat = patchup::shapes::Shape::Plane.sample(300, seed).unwrap();
        let r = common::random_rotation(&mut rng);
        let t = common::random_point(&mut rng, 3.0);
        let c = common::rigid(&flat, &r, t);
        let n = r.col(2);
        let out = upsample(&c, &UpsampleConfig { ratios: vec![m], ..Default::default() }).unwrap();
        let worst = out.points().iter().map(|p| (*p - t).dot(n).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-9, "max deviation {}", worst);
    }
}

#[test]
fn zero_coefficient_patch_is_flat() {
    let rot = decode_rotation(&Rotation6D::from_slice([1.0, 1.0, 0.0, 0.0, 1.0, 1.0])).unwrap();
    let patch = LocalPatch::new(Point3::new(1.0, 2.0, 3.0), rot, BicubicCoeffs::ZERO, 2.0).unwrap();
    let p = patch_lift(&patch, 0.3, -0.7);
    assert_abs_diff_eq!((p - patch.origin).dot(rot.col(2)), 0.0, epsilon = 1e-12);
}
