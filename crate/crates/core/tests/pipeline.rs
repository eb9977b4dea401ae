mod common;

use patchup::shapes::{fibonacci_sphere, Shape};
use patchup::upsampler::upsample_stages;
use patchup::{add_noise, fit_patch, upsample, KnnIndex, OffsetPattern, Point3, PointCloud, UpsampleConfig};

fn mean_radial_error(c: &PointCloud) -> f64 {
    c.points().iter().map(|p| (p.norm() - 1.0).abs()).sum::<f64>() / c.len() as f64
}

#[test]
fn sphere_x4_stays_close_to_surface() {
    let input = fibonacci_sphere(2048).unwrap();
    let cfg = UpsampleConfig { ratios: vec![4], ..Default::default() };
    let out = upsample(&input, &cfg).unwrap();
    assert_eq!(out.len(), 8192);
    let err = mean_radial_error(&out);
    assert!(err <= 5e-3, "mean radial error {}", err);
}

#[test]
fn halton_pattern_also_tracks_the_sphere() {
    let input = fibonacci_sphere(1024).unwrap();
    let cfg = UpsampleConfig {
        ratios: vec![4],
        offset_pattern: OffsetPattern::Halton,
        rng_seed: 3,
        ..Default::default()
    };
    let err = mean_radial_error(&upsample(&input, &cfg).unwrap());
    assert!(err <= 5e-3, "mean radial error {}", err);
}

#[test]
fn plane_at_height_fits_exactly() {
    let flat = Shape::Plane.sample(2048, 11).unwrap();
    let lifted = PointCloud::new(flat.points().iter().map(|p| *p + Point3::new(0.0, 0.0, 0.7)).collect()).unwrap();
    let index = KnnIndex::build(&lifted);
    for parent in [0, 100, 2047] {
        let r = fit_patch(&lifted, &index, parent, 16).unwrap();
        assert!(r.rms_residual <= 1e-9);
        assert!(r.displacement_loss <= 1e-18);
    }
}

#[test]
fn north_pole_fit_reduces_residual() {
    let mut pts = fibonacci_sphere(2047).unwrap().into_points();
    pts.push(Point3::new(0.0, 0.0, 1.0));
    let c = PointCloud::new(pts).unwrap();
    let r = fit_patch(&c, &KnnIndex::build(&c), 2047, 16).unwrap();
    assert!(r.displacement_loss > 0.0);
    assert!(r.rms_residual < r.displacement_loss.sqrt());
}

#[test]
fn ratio_one_stage_returns_input() {
    let input = Shape::Saddle.sample(300, 2).unwrap();
    let out = upsample(&input, &UpsampleConfig { ratios: vec![1], ..Default::default() }).unwrap();
    assert_eq!(out, input);
}

#[test]
fn every_parent_survives_with_pinning() {
    let input = Shape::Torus.sample(400, 5).unwrap();
    let stages = upsample_stages(&input, &UpsampleConfig { ratios: vec![3], ..Default::default() }).unwrap();
    let out = &stages[0].cloud;
    for (i, p) in input.points().iter().enumerate() {
        assert_eq!(out[3 * i], *p);
    }
}

#[test]
fn noise_sigma_matches_requested_level() {
    let input = Shape::Sphere.sample(20000, 1).unwrap();
    let noisy = add_noise(&input, 0.01, 9);
    let sigma = 0.01 * input.diagonal();
    let deltas: Vec<f64> = noisy
        .points()
        .iter()
        .zip(input.points())
        .flat_map(|(a, b)| {
            let d = *a - *b;
            [d.x, d.y, d.z]
        })
        .collect();
    let var = deltas.iter().map(|d| d * d).sum::<f64>() / deltas.len() as f64;
    let rel = (var.sqrt() - sigma).abs() / sigma;
    assert!(rel <= 0.02, "relative std error {}", rel);
}

#[test]
fn k_above_n_is_rejected() {
    let input = Shape::Sphere.sample(10, 0).unwrap();
    let err = upsample(&input, &UpsampleConfig::default()).unwrap_err();
    assert!(matches!(err, patchup::Error::KTooLarge { k: 16, n: 10 }));
}

#[test]
fn collinear_parents_are_duplicated() {
    let line: Vec<Point3> = (0..40).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
    let c = PointCloud::new(line).unwrap();
    let stages = upsample_stages(&c, &UpsampleConfig { ratios: vec![2], k: 8, ..Default::default() }).unwrap();
    assert_eq!(stages[0].degenerate_count(), 40);
    assert_eq!(stages[0].cloud[1], c[0]);
}
