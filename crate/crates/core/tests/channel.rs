mod oracles;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lumen_rem::channel::{lambertian_order, los_gain, nlos_gain, discretize_walls};
use lumen_rem::scene::{led_layout, preset_scene, Preset};
use lumen_rem::{ChannelModel, Point3, Room, Scene};

fn random_scene(rng: &mut ChaCha8Rng) -> Scene {
    let room = Room::new(rng.random_range(3.0..7.0), rng.random_range(3.0..7.0), rng.random_range(2.5..3.5)).unwrap();
    let leds = if rng.random_bool(0.5) { 1 } else { 4 };
    let mut scene = preset_scene::<f64>(Preset::Mid, leds).unwrap();
    scene.room = room;
    for (t, p) in scene.transmitters.iter_mut().zip(led_layout(&room, leds).unwrap()) {
        t.position = p;
        t.hpa_deg = rng.random_range(20.0..75.0);
        t.power_mw = rng.random_range(100.0..2000.0);
    }
    scene.receiver.fov_deg = rng.random_range(40.0..90.0);
    scene.wall_reflectance = rng.random_range(0.05..0.95);
    scene.validate().unwrap();
    scene
}

fn random_position(rng: &mut ChaCha8Rng, room: &Room, k: usize) -> Point3 {
    let mut p = Point3::new(
        rng.random_range(0.0..room.lx),
        rng.random_range(0.0..room.ly),
        rng.random_range(0.0..1.7),
    );
    // Every third position hugs a wall, where the quadrature refines.
    match k % 3 {
        1 => p.x = rng.random_range(0.001..0.05),
        2 => p.y = room.ly - rng.random_range(0.001..0.05),
        _ => {}
    }
    p
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn lambertian_order_at_sixty_degrees_is_one() {
    assert!((lambertian_order(60.0f64).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn nlos_matches_brute_force_on_random_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..4 {
        let scene = random_scene(&mut rng);
        let edge = rng.random_range(0.15..0.4);
        let model = ChannelModel::new(&scene, edge).unwrap();
        let patches = discretize_walls(&scene.room, edge).unwrap();
        for k in 0..5 {
            let p = random_position(&mut rng, &scene.room, k);
            for (i, tx) in scene.transmitters.iter().enumerate() {
                let want = oracles::naive_nlos_gain(&scene, i, [p.x, p.y, p.z], edge);
                let fast = model.nlos_gain(i, p).unwrap();
                let free = nlos_gain(tx, &scene.receiver, p, &patches, scene.wall_reflectance).unwrap();
                assert!(want > 0.0);
                assert!(rel(fast, want) < 1e-12, "model {fast} vs oracle {want}");
                assert!(rel(free, want) < 1e-12, "free fn {free} vs oracle {want}");
            }
        }
    }
}

#[test]
fn los_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let scene = random_scene(&mut rng);
        for k in 0..10 {
            let p = random_position(&mut rng, &scene.room, k);
            for (i, tx) in scene.transmitters.iter().enumerate() {
                let got = los_gain(tx, &scene.receiver, p).unwrap();
                let want = oracles::naive_los_gain(&scene, i, [p.x, p.y, p.z]);
                assert!(rel(got, want) < 1e-12, "{got} vs {want}");
            }
        }
    }
}

#[test]
fn halving_patch_edge_changes_power_by_under_one_percent() {
    let scene = preset_scene::<f64>(Preset::Mid, 1).unwrap();
    let coarse = ChannelModel::new(&scene, 0.2).unwrap();
    let fine = ChannelModel::new(&scene, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let p = Point3::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), rng.random_range(0.0..1.7));
        let a = coarse.received_power(p).unwrap().total_mw();
        let b = fine.received_power(p).unwrap().total_mw();
        assert!(rel(a, b) < 0.01, "{p:?}: {a} vs {b}");
    }
}

#[test]
fn single_led_presets_are_mirror_and_rotation_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for preset in Preset::ALL {
        let scene = preset_scene::<f64>(preset, 1).unwrap();
        let model = ChannelModel::new(&scene, 0.2).unwrap();
        let (lx, ly) = (scene.room.lx, scene.room.ly);
        for _ in 0..10 {
            let (x, y, z) = (rng.random_range(0.0..lx), rng.random_range(0.0..ly), rng.random_range(0.0..1.7));
            let base = model.received_power(Point3::new(x, y, z)).unwrap().total_mw();
            for (u, v) in [(lx - x, y), (x, ly - y), (lx - x, ly - y), (ly - y, x), (y, x)] {
                let other = model.received_power(Point3::new(u, v, z)).unwrap().total_mw();
                assert!(rel(base, other) < 1e-6, "{preset}: ({x},{y}) -> ({u},{v})");
            }
        }
    }
}

#[test]
fn four_leds_contribute_equally_at_the_center() {
    for preset in Preset::ALL {
        let scene = preset_scene::<f64>(preset, 4).unwrap();
        let model = ChannelModel::new(&scene, 0.2).unwrap();
        let c = Point3::new(scene.room.lx / 2.0, scene.room.ly / 2.0, 1.0);
        let b = model.received_power(c).unwrap();
        assert_eq!(b.per_tx.len(), 4);
        let (l0, n0) = b.per_tx[0];
        for &(l, n) in &b.per_tx {
            assert!(rel(l, l0) < 1e-6 && rel(n, n0) < 1e-6);
        }
        let los: f64 = b.per_tx.iter().map(|p| p.0).sum();
        let nlos: f64 = b.per_tx.iter().map(|p| p.1).sum();
        assert!(rel(b.p_los_mw, los) < 1e-12 && rel(b.p_nlos_mw, nlos) < 1e-12);
        assert!(rel(b.total_mw(), 4.0 * (l0 + n0)) < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_is_positive_and_split_consistently(x in 0.0..5.0f64, y in 0.0..5.0f64, z in 0.0..1.7f64) {
        let scene = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let model = ChannelModel::new(&scene, 0.25).unwrap();
        let b = model.received_power(Point3::new(x, y, z)).unwrap();
        prop_assert!(b.p_los_mw > 0.0 && b.p_nlos_mw > 0.0);
        prop_assert_eq!(b.total_mw(), b.p_los_mw + b.p_nlos_mw);
    }

    #[test]
    fn reflected_gain_is_linear_in_reflectance(rho in 0.0..1.0f64, x in 0.1..4.9f64, y in 0.1..4.9f64) {
        let scene = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let full = ChannelModel::new(&scene.with_reflectance(1.0), 0.25).unwrap();
        let part = ChannelModel::new(&scene.with_reflectance(rho), 0.25).unwrap();
        let p = Point3::new(x, y, 0.8);
        let a = full.nlos_gain(0, p).unwrap();
        let b = part.nlos_gain(0, p).unwrap();
        prop_assert!((b - rho * a).abs() <= 1e-12 * a);
    }

    #[test]
    fn los_gain_falls_with_height_gap(x in 0.0..5.0f64, y in 0.0..5.0f64, z in 0.0..1.6f64) {
        let scene = preset_scene::<f64>(Preset::Mid, 1).unwrap();
        let tx = &scene.transmitters[0];
        let below = los_gain(tx, &scene.receiver, Point3::new(x, y, z)).unwrap();
        let above = los_gain(tx, &scene.receiver, Point3::new(2.5, 2.5, z + 0.1)).unwrap();
        let under = los_gain(tx, &scene.receiver, Point3::new(2.5, 2.5, z)).unwrap();
        prop_assert!(under >= below);
        prop_assert!(above > under);
    }
}
