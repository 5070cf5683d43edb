use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::level::{BorderPoint, Level, Obstacle, ZoneKind};
use super::{EnvError, Input};
use crate::config::EnvConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ship {
    pub x: f64,
    pub y: f64,
    pub half_width: f64,
}

/// A marked zone as the agent (or a human player) sees it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkedZone {
    pub kind: ZoneKind,
    pub y_top: f64,
    pub y_bottom: f64,
    pub drift_per_step: f64,
}

/// What the world exposes after a step. Hidden and stochastic zones never
/// appear here.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub step: u64,
    pub ship_x: f64,
    pub ship_y: f64,
    pub half_width: f64,
    pub visible_borders: Vec<BorderPoint>,
    pub visible_obstacles: Vec<Obstacle>,
    /// Marked zones within the lookahead.
    pub marked_zones: Vec<MarkedZone>,
    /// Marked zone the ship is currently inside, if any.
    pub visible_zone: Option<MarkedZone>,
    /// Realised lateral displacement of the last step.
    pub perceived_dx: f64,
    pub crashed: bool,
    pub done: bool,
}

impl Observation {
    pub fn visible_zone_kind(&self) -> Option<ZoneKind> {
        self.visible_zone.map(|z| z.kind)
    }

    pub fn corridor_at(&self, y: f64) -> (f64, f64) {
        super::level::corridor_at(&self.visible_borders, y)
    }

    pub fn corridor_at_ship(&self) -> (f64, f64) {
        self.corridor_at(self.ship_y)
    }
}

/// True iff the ship's footprint leaves the corridor at its height or
/// overlaps an obstacle. Touching an edge is not a crash.
pub fn crash_check(ship: &Ship, level: &Level) -> bool {
    let (left, right) = level.corridor_at(ship.y);
    let (x0, x1) = (ship.x - ship.half_width, ship.x + ship.half_width);
    if x0 < left || x1 > right {
        return true;
    }
    let (y0, y1) = (ship.y - ship.half_width, ship.y + ship.half_width);
    level
        .obstacles
        .iter()
        .any(|o| x0 < o.x_right && x1 > o.x_left && y0 < o.y_top && y1 > o.y_bottom)
}

#[derive(Clone, Debug)]
pub struct WorldState {
    pub ship: Ship,
    pub level: Arc<Level>,
    /// Number of completed steps; one step is 50 ms of simulated time.
    pub step: u64,
    pub crashed: bool,
    pub done: bool,
    pub last_dx: f64,
    env: EnvConfig,
    rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(level: Arc<Level>, env: &EnvConfig, seed: u64) -> Self {
        let ship = Ship {
            x: level.spawn_x,
            y: level.spawn_y,
            half_width: env.ship_half_width,
        };
        Self {
            ship,
            level,
            step: 0,
            crashed: false,
            done: false,
            last_dx: 0.0,
            env: env.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Advances one step: descend, apply the steering input plus any drift
    /// (and noise) of zones at the ship's height, then check for crashes.
    pub fn step(&mut self, input: Input) -> Result<Observation, EnvError> {
        if self.done {
            return Err(EnvError::SteppedAfterDone);
        }
        let mut dx = input.direction() * self.env.step_size;
        for zone in self.level.zones.iter().filter(|z| z.contains_y(self.ship.y)) {
            dx += zone.drift_per_step;
            if zone.kind == ZoneKind::Stochastic && zone.noise_sigma > 0.0 {
                let z: f64 = self.rng.sample(StandardNormal);
                dx += zone.noise_sigma * z;
            }
        }
        self.ship.x += dx;
        self.ship.y -= self.env.descent_speed;
        self.step += 1;
        self.last_dx = dx;
        if crash_check(&self.ship, &self.level) {
            self.crashed = true;
            self.done = true;
        } else if self.ship.y <= 0.0 {
            self.done = true;
        }
        Ok(self.observe())
    }

    pub fn observe(&self) -> Observation {
        let y = self.ship.y;
        let floor = match self.env.lookahead {
            Some(depth) => y - depth,
            None => f64::NEG_INFINITY,
        };
        let profile = &self.level.border_profile;
        // keep one breakpoint on either side of the window for interpolation
        let first = profile.iter().rposition(|b| b.y >= y).unwrap_or(0);
        let last = profile
            .iter()
            .position(|b| b.y <= floor)
            .unwrap_or(profile.len() - 1)
            .max(first + 1)
            .min(profile.len() - 1);
        let visible_borders = profile[first..=last].to_vec();
        let reach = self.ship.half_width;
        let visible_obstacles = self
            .level
            .obstacles
            .iter()
            .filter(|o| o.y_bottom < y + reach && o.y_top > floor)
            .cloned()
            .collect();
        let marked_zones: Vec<MarkedZone> = self
            .level
            .zones
            .iter()
            .filter(|z| z.kind.is_marked() && z.y_bottom < y && z.y_top > floor)
            .map(|z| MarkedZone {
                kind: z.kind,
                y_top: z.y_top,
                y_bottom: z.y_bottom,
                drift_per_step: z.drift_per_step,
            })
            .collect();
        let visible_zone = marked_zones
            .iter()
            .find(|z| y > z.y_bottom && y <= z.y_top)
            .copied();
        Observation {
            step: self.step,
            ship_x: self.ship.x,
            ship_y: y,
            half_width: self.ship.half_width,
            visible_borders,
            visible_obstacles,
            marked_zones,
            visible_zone,
            perceived_dx: self.last_dx,
            crashed: self.crashed,
            done: self.done,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn level(extra: &str) -> Arc<Level> {
        let text = format!(
            "level t width 40 height 50\nborder 50 0 40\nborder 0 0 40\n{extra}spawn 20 48\n"
        );
        Arc::new(Level::parse(&text).unwrap())
    }

    fn world(extra: &str) -> WorldState {
        WorldState::new(level(extra), &Config::default().env, 7)
    }

    #[test]
    fn neutral_step_only_descends() {
        let mut w = world("");
        let obs = w.step(Input::None).unwrap();
        assert_eq!(obs.perceived_dx, 0.0);
        assert_eq!(obs.ship_y, 47.5);
        assert_eq!(obs.ship_x, 20.0);
        assert_eq!(w.step, 1);
    }

    #[test]
    fn drift_adds_to_steering() {
        let d = 0.3;
        let mut w = world(&format!("zone hidden_light 50 10 {d}\n"));
        let obs = w.step(Input::Left).unwrap();
        assert_eq!(obs.perceived_dx, -1.0 + d);
        assert!(obs.visible_zone.is_none() && obs.marked_zones.is_empty());
    }

    #[test]
    fn obstacle_overlap_crashes() {
        let mut w = world("obstacle 19 21 47.5 40\n");
        let obs = w.step(Input::None).unwrap();
        assert!(obs.crashed && obs.done);
        assert_eq!(w.step(Input::None), Err(EnvError::SteppedAfterDone));
    }

    #[test]
    fn crash_boundaries_are_open() {
        let lvl = level("obstacle 22 30 20 10\n");
        let ship = |x, y| Ship { x, y, half_width: 1.0 };
        assert!(!crash_check(&ship(20.0, 30.0), &lvl));
        assert!(crash_check(&ship(39.5, 30.0), &lvl));
        assert!(!crash_check(&ship(39.0, 30.0), &lvl));
        // touching the obstacle's left edge and top edge
        assert!(!crash_check(&ship(21.0, 15.0), &lvl));
        assert!(!crash_check(&ship(25.0, 21.0), &lvl));
        assert!(crash_check(&ship(21.5, 15.0), &lvl));
    }

    #[test]
    fn landing_ends_episode() {
        let mut w = world("");
        let mut n = 0;
        while !w.done {
            w.step(Input::None).unwrap();
            n += 1;
        }
        assert!(!w.crashed);
        assert_eq!(n, 96);
        assert_eq!(w.ship.x, 20.0);
    }

    #[test]
    fn lookahead_limits_visibility() {
        let mut cfg = Config::default().env;
        cfg.lookahead = Some(5.0);
        let w = WorldState::new(level("obstacle 2 6 20 18\nzone marked_light 30 25 0.3\n"), &cfg, 1);
        let obs = w.observe();
        assert!(obs.visible_obstacles.is_empty() && obs.marked_zones.is_empty());
        let full = world("obstacle 2 6 20 18\nzone marked_light 30 25 0.3\n").observe();
        assert_eq!(full.visible_obstacles.len(), 1);
        assert_eq!(full.marked_zones.len(), 1);
        assert!(full.visible_zone.is_none());
    }
}
