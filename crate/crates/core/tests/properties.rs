mod common;

use proptest::prelude::*;

use viewplan::raster::{render, Camera, RenderScale, SceneGeometry};
use viewplan::reward::{sqrt_gain, DensityField, ViewDensities};
use viewplan::scene::{is_feasible_step, neighbors, HeightMap, RobotConfig, RobotState};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gain_shrinks_as_prior_grows(b in 0.0..1e7f64, extra in 0.0..1e5f64, c in 0.0..1e5f64) {
        prop_assert!(sqrt_gain(b, c) >= sqrt_gain(b + extra, c));
        prop_assert!(sqrt_gain(b, c) >= 0.0);
    }

    #[test]
    fn field_reward_is_order_free_for_disjoint_slots(a in 0.0..1e4f64, b in 0.0..1e4f64) {
        let mut x = DensityField::new(1, 3);
        x.add_view(0, &ViewDensities::from_sorted(vec![(0, a)]));
        x.add_view(1, &ViewDensities::from_sorted(vec![(2, b)]));
        let mut y = DensityField::new(1, 3);
        y.add_view(1, &ViewDensities::from_sorted(vec![(2, b)]));
        y.add_view(0, &ViewDensities::from_sorted(vec![(0, a)]));
        prop_assert_eq!(x.view_reward(), y.view_reward());
    }

    #[test]
    fn neighbors_are_exactly_the_feasible_steps(
        x in 0u32..6, y in 0u32..6, theta in 0u32..8, turn in 0u32..4, seed in 0u64..1000,
    ) {
        let map = random_map(&mut rng(seed), 6, 6, 2.0, 8.0);
        let cfg = RobotConfig { num_headings: 8, max_turn: turn, ..RobotConfig::default() };
        let s = RobotState::new(x, y, theta, 0);
        let next = neighbors(&s, &cfg, &map);
        for nx in 0..6 {
            for ny in 0..6 {
                for nt in 0..8 {
                    let to = RobotState::new(nx, ny, nt, 1);
                    prop_assert_eq!(next.contains(&to), is_feasible_step(&s, &to, &cfg, &map));
                }
            }
        }
    }

    #[test]
    fn every_pixel_has_one_owner(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let map = random_map(&mut r, 5, 5, 2.0, 6.0);
        let actors = vec![random_actor(&mut r, 0, (10.0, 10.0), 1)];
        let geometry = SceneGeometry::new(&map, &actors, 0);
        let pose = camera_toward(&mut r, (10.0, 10.0), actors[0].poses[0].position);
        let camera = Camera::new(&pose, &small_intrinsics(), RenderScale::new(0.25).unwrap());
        let view = render(&camera, &geometry);
        let faces: u64 = view.face_counts().values().sum();
        prop_assert_eq!(faces + view.background_count(), camera.pixel_count() as u64);
    }

    #[test]
    fn flat_maps_block_nothing(cols in 1usize..8, rows in 1usize..8) {
        let map = HeightMap::flat(cols, rows, 1.5).unwrap();
        prop_assert!((0..cols).all(|x| (0..rows).all(|y| map.height(x, y) == 0.0)));
    }
}
