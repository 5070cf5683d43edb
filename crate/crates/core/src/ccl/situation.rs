use std::fmt;

use crate::environment::{Observation, ZoneKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObstacleAhead {
    None,
    Left,
    Center,
    Right,
    Multiple,
}

impl ObstacleAhead {
    pub fn as_str(self) -> &'static str {
        match self {
            ObstacleAhead::None => "none",
            ObstacleAhead::Left => "left",
            ObstacleAhead::Center => "center",
            ObstacleAhead::Right => "right",
            ObstacleAhead::Multiple => "multiple",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Corridor {
    Wide,
    Narrow,
}

impl Corridor {
    pub fn as_str(self) -> &'static str {
        match self {
            Corridor::Wide => "wide",
            Corridor::Narrow => "narrow",
        }
    }
}

/// What the cognitive layer recognises about its surroundings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Situation {
    pub zone_kind: Option<ZoneKind>,
    pub obstacle_ahead: ObstacleAhead,
    pub corridor: Corridor,
}

impl Situation {
    /// Canonical `zone/obstacle/corridor` symbol, e.g. `marked_light/none/wide`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn fields(&self) -> [&'static str; 3] {
        [
            self.zone_kind.map_or("none", ZoneKind::as_str),
            self.obstacle_ahead.as_str(),
            self.corridor.as_str(),
        ]
    }
}

impl fmt::Display for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [z, o, c] = self.fields();
        write!(f, "{z}/{o}/{c}")
    }
}

/// Corridors narrower than this (world units) count as narrow.
pub const NARROW_CORRIDOR: f64 = 24.0;

fn lateral_class(x: f64, left: f64, right: f64) -> ObstacleAhead {
    let frac = (x - left) / (right - left);
    if frac < 1.0 / 3.0 {
        ObstacleAhead::Left
    } else if frac > 2.0 / 3.0 {
        ObstacleAhead::Right
    } else {
        ObstacleAhead::Center
    }
}

/// Classifies the observation by the marked zone at the ship, the lateral
/// position of the nearest obstacle row ahead, and the corridor width.
pub fn detect_situation(obs: &Observation) -> Situation {
    let (left, right) = obs.corridor_at_ship();
    let corridor = if right - left < NARROW_CORRIDOR {
        Corridor::Narrow
    } else {
        Corridor::Wide
    };

    let ahead: Vec<_> = obs
        .visible_obstacles
        .iter()
        .filter(|o| o.y_bottom < obs.ship_y + obs.half_width)
        .collect();
    let obstacle_ahead = match ahead
        .iter()
        .max_by(|a, b| a.y_top.total_cmp(&b.y_top))
    {
        None => ObstacleAhead::None,
        Some(nearest) => {
            let mut classes: Vec<ObstacleAhead> = ahead
                .iter()
                .filter(|o| o.y_top > nearest.y_bottom && o.y_bottom < nearest.y_top)
                .map(|o| {
                    let (l, r) = obs.corridor_at(0.5 * (o.y_top + o.y_bottom));
                    lateral_class(o.center_x(), l, r)
                })
                .collect();
            classes.dedup();
            if classes.len() > 1 {
                ObstacleAhead::Multiple
            } else {
                classes[0]
            }
        }
    };

    Situation {
        zone_kind: obs.visible_zone_kind(),
        obstacle_ahead,
        corridor,
    }
}
