use nalgebra::Point3;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::*;
use crate::fixtures::{grid, volume, ELEVATION};

fn flat(n: usize, cost: f64) -> ElevationVolume {
    volume(grid(n, n, |_, _| 0.0, (0.0, 0.0), |_, _| (cost, true)))
}

fn space(v: &ElevationVolume) -> ElevationStateSpace<'_> {
    ElevationStateSpace::with_defaults(v).unwrap()
}

fn euclid(v: &ElevationVolume, step: f64) -> ElevationStateSpace<'_> {
    let mut p = SpaceParams::for_voxel_size(1.0);
    p.motion_step = step;
    ElevationStateSpace::new(v, p, MotionModel::default()).unwrap()
}

fn st(x: f64, y: f64, z: f64) -> ElevationState {
    ElevationState::new(x, y, 0.0, z)
}

/// Two horizontal layers over the same footprint, terrain at z=0 and z=`gap`.
fn two_layers(gap: f64) -> ElevationVolume {
    let mut s = grid(12, 12, |_, _| 0.0, (0.0, 0.0), |_, _| (5.0, true));
    s.extend(grid(12, 12, |_, _| gap, (0.0, 0.0), |_, _| (9.0, true)));
    volume(s)
}

#[test]
fn wrap_range() {
    assert_eq!(wrap_angle(PI), PI);
    assert_eq!(wrap_angle(-PI), PI);
    assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    assert!((wrap_angle(0.1 - 4.0 * PI) - 0.1).abs() < 1e-12);
}

#[test]
fn snap_exact_hit() {
    let v = flat(5, 0.0);
    let s = space(&v).snap_to_surface(2.0, 3.0).unwrap();
    assert_eq!(v.elevated(s.surfel), Point3::new(2.0, 3.0, ELEVATION));
    assert_eq!(s.z, ELEVATION);
}

#[test]
fn snap_prefers_nearer_surfel() {
    let v = flat(5, 0.0);
    let sp = space(&v);
    // 0.4 m from (1, 2), 0.6 m from (2, 2)
    let s = sp.snap_to_surface(1.4, 2.0).unwrap();
    let brute = (0..v.len())
        .min_by(|&a, &b| {
            let da = (v.elevated(a).x - 1.4).hypot(v.elevated(a).y - 2.0);
            let db = (v.elevated(b).x - 1.4).hypot(v.elevated(b).y - 2.0);
            da.total_cmp(&db)
        })
        .unwrap();
    assert_eq!(s.surfel, brute);
    assert_eq!(v.elevated(s.surfel).x, 1.0);
}

#[test]
fn snap_off_map() {
    let v = flat(5, 0.0);
    assert!(matches!(
        space(&v).snap_to_surface(55.0, 2.0),
        Err(Error::OffSurface { .. })
    ));
}

#[test]
fn snap_tie_prefers_lower() {
    let v = two_layers(5.0);
    let s = space(&v).snap_to_surface(3.0, 3.0).unwrap();
    assert!((s.z - ELEVATION).abs() < 1e-12);
}

fn brute_closest_z(v: &ElevationVolume, x: f64, y: f64, z: f64, r: f64) -> f64 {
    (0..v.len())
        .filter(|&i| (v.elevated(i).x - x).hypot(v.elevated(i).y - y) <= r)
        .map(|i| v.surface_z(i, x, y))
        .min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs()))
        .unwrap()
}

#[test]
fn snap_near_keeps_layer() {
    let v = two_layers(5.0);
    let sp = space(&v);
    let lower = sp.snap_near(&st(3.5, 3.5, 0.4), 3.5, 3.5).unwrap();
    assert_eq!(lower.z, brute_closest_z(&v, 3.5, 3.5, 0.4, 1.5));
    assert!((lower.z - ELEVATION).abs() < 1e-12);
    let upper = sp.snap_near(&st(3.5, 3.5, 5.3), 3.5, 3.5).unwrap();
    assert_eq!(upper.z, brute_closest_z(&v, 3.5, 3.5, 5.3, 1.5));
    assert!((upper.z - 5.0 - ELEVATION).abs() < 1e-12);
}

#[test]
fn states_on_each_layer_are_valid() {
    let v = two_layers(5.0);
    let sp = space(&v);
    assert!(sp.is_state_valid(&st(4.0, 4.0, ELEVATION)));
    assert!(sp.is_state_valid(&st(4.0, 4.0, 5.0 + ELEVATION)));
    assert!(!sp.is_state_valid(&st(4.0, 4.0, 2.5)));
}

#[test]
fn state_validity() {
    let v = volume(grid(6, 6, |_, _| 0.0, (0.0, 0.0), |i, _| (0.0, i != 3)));
    let sp = space(&v);
    assert!(sp.is_state_valid(&st(1.0, 1.0, ELEVATION)));
    assert!(!sp.is_state_valid(&st(3.0, 1.0, ELEVATION)));
    assert!(!sp.is_state_valid(&st(1.0, 1.0, ELEVATION + 2.0)));
    assert!(!sp.is_state_valid(&st(1.0, 1.0, f64::NAN)));
    assert!(!sp.is_state_valid(&st(40.0, 1.0, ELEVATION)));
}

#[test]
fn distances() {
    let e = MotionModel::default();
    let d = MotionModel::dubins(1.0);
    let a = ElevationState::new(1.0, 2.0, 0.3, 0.5);
    assert_eq!(e.distance(&a, &a), 0.0);
    assert!(d.distance(&a, &a).abs() < 1e-12);
    let b = ElevationState { z: 2.5, ..a };
    assert!((e.distance(&a, &b) - 2.0).abs() < 1e-12);
    assert!((d.distance(&a, &b) - 2.0).abs() < 1e-12);
    let c = ElevationState {
        x: 4.0,
        y: 6.0,
        ..a
    };
    assert!((e.distance(&a, &c) - 5.0).abs() < 1e-12);
}

#[test]
fn interpolate_degenerate() {
    let v = flat(5, 0.0);
    let a = st(1.0, 1.0, ELEVATION);
    assert_eq!(space(&v).interpolate_motion(&a, &a), vec![a]);
}

#[test]
fn interpolate_flat_straight() {
    let v = flat(12, 0.0);
    let sp = euclid(&v, 1.0);
    let a = st(0.0, 5.0, ELEVATION);
    let b = st(10.0, 5.0, ELEVATION);
    let states = sp.interpolate_motion(&a, &b);
    assert_eq!(states.len(), 11);
    for (k, s) in states.iter().enumerate() {
        assert!((s.x - k as f64).abs() < 1e-12);
        assert_eq!(s.z, ELEVATION);
    }
}

#[test]
fn interpolate_climbs_ramp() {
    let slope = 0.2;
    let v = volume(grid(
        15,
        5,
        |x, _| slope * x,
        (slope, 0.0),
        |_, _| (10.0, true),
    ));
    let sp = space(&v);
    let a = sp.lift(1.0, 2.0, 0.0, None).unwrap();
    let b = sp.lift(12.3, 2.0, 0.0, None).unwrap();
    let states = sp.interpolate_motion(&a, &b);
    assert!(states.len() > 10);
    for w in states.windows(2) {
        assert!(w[1].z > w[0].z, "{} !> {}", w[1].z, w[0].z);
    }
    // surfel heights along the line: z follows the ramp plane
    for s in &states {
        let expected = slope * s.x + ELEVATION * (1.0f64 + slope * slope).sqrt();
        assert!((s.z - expected).abs() < 1e-9);
    }
}

#[test]
fn motion_validity() {
    let v = volume(grid(
        12,
        12,
        |_, _| 0.0,
        (0.0, 0.0),
        |i, j| (0.0, !(i == 6 && j < 10)),
    ));
    let sp = space(&v);
    let a = st(2.0, 2.0, ELEVATION);
    assert!(sp.is_motion_valid(&a, &st(2.0, 9.0, ELEVATION)));
    // crosses the non-traversable column x = 6
    assert!(!sp.is_motion_valid(&a, &st(10.0, 2.0, ELEVATION)));
    // around the end of the wall
    assert!(sp.is_motion_valid(&st(2.0, 10.5, ELEVATION), &st(10.0, 10.5, ELEVATION)));
}

#[test]
fn ledge_is_rejected() {
    let v = volume(grid(
        12,
        6,
        |x, _| if x >= 6.0 { 1.0 } else { 0.0 },
        (0.0, 0.0),
        |_, _| (0.0, true),
    ));
    let sp = space(&v);
    let a = st(2.0, 2.0, ELEVATION);
    let b = st(9.0, 2.0, 1.0 + ELEVATION);
    assert!(sp.is_state_valid(&a) && sp.is_state_valid(&b));
    assert!(!sp.is_motion_valid(&a, &b));
}

#[test]
fn motion_must_arrive_on_target_layer() {
    let v = two_layers(5.0);
    let sp = space(&v);
    let a = st(2.0, 2.0, ELEVATION);
    assert!(sp.is_motion_valid(&a, &st(8.0, 8.0, ELEVATION)));
    assert!(!sp.is_motion_valid(&a, &st(8.0, 8.0, 5.0 + ELEVATION)));
}

#[test]
fn dubins_motion_follows_curve() {
    let v = flat(20, 0.0);
    let mut p = SpaceParams::for_voxel_size(1.0);
    p.motion_step = 0.25;
    let sp = ElevationStateSpace::new(&v, p, MotionModel::dubins(2.0)).unwrap();
    let a = ElevationState::new(5.0, 5.0, 0.0, ELEVATION);
    let b = ElevationState::new(5.0, 11.0, PI, ELEVATION);
    let states = sp.interpolate_motion(&a, &b);
    let path = dubins_shortest_path(a.pose(), b.pose(), 2.0);
    for w in states.windows(2) {
        assert!((w[1].x - w[0].x).hypot(w[1].y - w[0].y) <= 0.25 + 1e-9);
    }
    let trace = sp.trace_motion(&a, b.pose(), Some(b.z)).unwrap();
    assert!((trace.length - path.length()).abs() < 1e-9);
}

#[test]
fn sampler_rejects_empty_support() {
    let v = flat(3, 0.0);
    let mut json: serde_json::Value = serde_json::from_str(&v.to_json().unwrap()).unwrap();
    for s in json["surfels"].as_array_mut().unwrap() {
        s["traversable"] = serde_json::Value::Bool(false);
    }
    let blocked = ElevationVolume::from_json(&json.to_string()).unwrap();
    assert!(matches!(
        sample_valid_state(&blocked, &SamplerConfig::default()),
        Err(Error::NoValidSamples)
    ));
}

fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn equal_costs_sample_uniformly() {
    let v = flat(5, 40.0);
    let mut sampler = SurfelSampler::new(&v, &SamplerConfig::default()).unwrap();
    let mut counts = vec![0u64; v.len()];
    for _ in 0..10_000 {
        counts[sampler.sample_surfel()] += 1;
    }
    let p = chi_square_p(&counts, &vec![1.0 / v.len() as f64; v.len()]);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn two_surfel_inverse_cost() {
    let v = volume(grid(
        2,
        1,
        |_, _| 0.0,
        (0.0, 0.0),
        |i, _| (if i == 0 { 10.0 } else { 20.0 }, true),
    ));
    let mut sampler = SurfelSampler::new(
        &v,
        &SamplerConfig {
            seed: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let n = 30_000;
    let first = (0..n).filter(|_| sampler.sample_surfel() == 0).count();
    assert!((first as f64 / n as f64 - 2.0 / 3.0).abs() < 0.02);
}

#[test]
fn uniform_bias_ignores_cost() {
    let v = volume(grid(
        2,
        1,
        |_, _| 0.0,
        (0.0, 0.0),
        |i, _| (if i == 0 { 1.0 } else { 200.0 }, true),
    ));
    let cfg = SamplerConfig {
        bias: SamplerBias::UniformValid,
        ..Default::default()
    };
    let mut sampler = SurfelSampler::new(&v, &cfg).unwrap();
    let n = 20_000;
    let first = (0..n).filter(|_| sampler.sample_surfel() == 0).count();
    assert!((first as f64 / n as f64 - 0.5).abs() < 0.02);
}

#[test]
fn scoo_single_state() {
    let v = flat(5, 100.0);
    assert_eq!(
        space(&v).scoo_cost(&[st(1.0, 1.0, ELEVATION)]).unwrap(),
        0.0
    );
}

#[test]
fn scoo_uniform_cost_line() {
    let v = flat(14, 100.0);
    let sp = space(&v);
    for n in [1usize, 2, 7, 40] {
        let path: Vec<_> = (0..=n)
            .map(|k| st(1.0 + 10.0 * k as f64 / n as f64, 4.0, ELEVATION))
            .collect();
        let c = sp.scoo_cost(&path).unwrap();
        assert!((c - 1000.0).abs() <= 10.0, "n = {n}: {c}");
    }
}

#[test]
fn scoo_rejects_invalid_state() {
    let v = flat(5, 100.0);
    let path = [st(1.0, 1.0, ELEVATION), st(1.0, 2.0, 9.0)];
    assert!(matches!(
        space(&v).scoo_cost(&path),
        Err(Error::InvalidPathState(1))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scoo_is_additive(xs in proptest::collection::vec(0.0f64..9.0, 2..12), split in 0usize..11) {
        let v = volume(grid(10, 10, |_, _| 0.0, (0.0, 0.0), |i, j| ((i * 10 + j) as f64, true)));
        let sp = space(&v);
        let path: Vec<_> = xs.iter().enumerate().map(|(k, &x)| st(x, (k % 9) as f64, ELEVATION)).collect();
        let k = split.min(path.len() - 1);
        let whole = sp.scoo_cost(&path).unwrap();
        let parts = sp.scoo_cost(&path[..=k]).unwrap() + sp.scoo_cost(&path[k..]).unwrap();
        prop_assert!((whole - parts).abs() < 1e-9);
    }

    #[test]
    fn euclidean_distance_is_a_pseudometric(
        a in (-10.0f64..10.0, -10.0f64..10.0, -4.0f64..4.0, -3.0f64..3.0),
        b in (-10.0f64..10.0, -10.0f64..10.0, -4.0f64..4.0, -3.0f64..3.0),
    ) {
        let m = MotionModel::default();
        let a = ElevationState::new(a.0, a.1, a.2, a.3);
        let b = ElevationState::new(b.0, b.1, b.2, b.3);
        prop_assert!(m.distance(&a, &b) >= 0.0);
        prop_assert!((m.distance(&a, &b) - m.distance(&b, &a)).abs() < 1e-12);
        prop_assert_eq!(m.distance(&a, &a), 0.0);
        prop_assert!(MotionModel::dubins(1.5).distance(&a, &b) >= 0.0);
    }

    #[test]
    fn sampled_states_are_valid(seed in any::<u64>(), bias in prop_oneof![Just(SamplerBias::UniformValid), Just(SamplerBias::CostWeighted)]) {
        let slope = 0.15;
        let v = volume(grid(10, 10, |x, _| slope * x, (slope, 0.0), |i, j| ((i * j) as f64, (i + j) % 4 != 0)));
        let sp = space(&v);
        let mut sampler = SurfelSampler::new(&v, &SamplerConfig { bias, seed, max_cost: 255.0 }).unwrap();
        for _ in 0..50 {
            let s = sampler.sample();
            prop_assert!(sp.is_state_valid(&s));
            prop_assert!(s.yaw > -PI && s.yaw <= PI);
        }
    }

    #[test]
    fn single_layer_snap_near_matches_snap(x in 0.0f64..9.0, y in 0.0f64..9.0, dx in -0.5f64..0.5, dy in -0.5f64..0.5) {
        let slope = 0.2;
        let v = volume(grid(10, 10, |x, _| slope * x, (slope, 0.0), |_, _| (1.0, true)));
        let sp = space(&v);
        let reference = sp.lift(x, y, 0.0, None).unwrap();
        let (qx, qy) = (x + dx, y + dy);
        let near = sp.snap_near(&reference, qx, qy).unwrap();
        let plain = sp.snap_to_surface(qx, qy).unwrap();
        prop_assert_eq!(near, plain);
    }

    #[test]
    fn chained_interpolation_stays_on_lower_layer(
        gap in 1.0f64..6.0,
        ax in 1.0f64..10.0, ay in 1.0f64..10.0, bx in 1.0f64..10.0, by in 1.0f64..10.0,
    ) {
        let v = two_layers(gap);
        let sp = space(&v);
        let a = st(ax, ay, ELEVATION);
        let b = st(bx, by, ELEVATION);
        for s in sp.interpolate_motion(&a, &b) {
            prop_assert!((s.z - ELEVATION).abs() < 1e-9);
        }
        prop_assert!(sp.is_motion_valid(&a, &b));
    }
}
