use std::sync::Arc;

use proptest::prelude::*;

use soc_lander::config::Config;
use soc_lander::environment::{builtin_levels, Input, Level, WorldState, ZoneKind};

fn open_level(zone: &str) -> Arc<Level> {
    let text = format!(
        "level t width 400 height 400\nborder 400 0 400\nborder 0 0 400\n{zone}\nspawn 200 396\n"
    );
    Arc::new(Level::parse(&text).unwrap())
}

#[test]
fn builtin_levels_round_trip_through_the_file_format() {
    for level in builtin_levels() {
        let text = level.to_file_string();
        let again = Level::parse(&text).unwrap();
        assert_eq!(*level, again, "level {}", level.id);
    }
}

#[test]
fn stochastic_zone_mean_matches_drift() {
    let level = open_level("zone stochastic 390 10 0.2 0.3");
    let env = Config::default().env;
    let mut world = WorldState::new(level, &env, 11);
    let mut total = 0.0;
    let mut n = 0u32;
    while !world.done {
        let y = world.ship.y;
        let obs = world.step(Input::None).unwrap();
        if y <= 390.0 && y > 10.0 {
            total += obs.perceived_dx;
            n += 1;
        }
    }
    assert!(n > 200);
    let mean = total / f64::from(n);
    let bound = 3.0 * 0.3 / f64::from(n).sqrt();
    assert!((mean - 0.2).abs() < bound, "mean {mean} over {n} steps, bound {bound}");
}

#[test]
fn stochastic_noise_is_seeded() {
    let level = open_level("zone stochastic 390 10 0.2 0.3");
    let env = Config::default().env;
    let run = |seed| {
        let mut w = WorldState::new(level.clone(), &env, seed);
        (0..50).map(|_| w.step(Input::None).unwrap().ship_x).collect::<Vec<_>>()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn hidden_zones_are_not_observed() {
    let level = open_level("zone hidden_medium 390 10 0.7");
    let env = Config::default().env;
    let mut world = WorldState::new(level, &env, 0);
    for _ in 0..20 {
        let obs = world.step(Input::None).unwrap();
        assert!(obs.marked_zones.is_empty());
        assert!(obs.visible_zone.is_none());
    }
}

#[test]
fn marked_zone_is_observed_with_its_kind() {
    let level = open_level("zone marked_medium 390 10 0.5");
    let env = Config::default().env;
    let mut world = WorldState::new(level, &env, 0);
    let mut obs = world.observe();
    assert_eq!(obs.marked_zones.len(), 1);
    assert_eq!(obs.visible_zone_kind(), None);
    while obs.ship_y > 380.0 {
        obs = world.step(Input::None).unwrap();
    }
    assert_eq!(obs.visible_zone_kind(), Some(ZoneKind::MarkedMedium));
}

proptest! {
    #[test]
    fn drift_adds_to_the_input(drift in -1.0f64..1.0, dir in 0usize..3) {
        let input = [Input::Left, Input::None, Input::Right][dir];
        let level = open_level(&format!("zone hidden_light 399 10 {drift}"));
        let env = Config::default().env;
        let mut world = WorldState::new(level, &env, 0);
        let x0 = world.ship.x;
        let obs = world.step(input).unwrap();
        let expected = input.direction() * env.step_size + drift;
        prop_assert!((obs.perceived_dx - expected).abs() < 1e-12);
        prop_assert!((obs.ship_x - x0 - expected).abs() < 1e-12);
    }

    #[test]
    fn outside_zones_only_the_input_moves_the_ship(dir in 0usize..3) {
        let input = [Input::Left, Input::None, Input::Right][dir];
        let level = open_level("zone hidden_medium 100 50 0.7");
        let env = Config::default().env;
        let mut world = WorldState::new(level, &env, 0);
        let obs = world.step(input).unwrap();
        prop_assert_eq!(obs.perceived_dx, input.direction() * env.step_size);
    }
}
