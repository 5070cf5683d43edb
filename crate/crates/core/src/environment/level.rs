//! Level geometry and the line-based level-file format.

use std::fmt;
use std::str::FromStr;

use super::EnvError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZoneKind {
    MarkedLight,
    MarkedMedium,
    Stochastic,
    HiddenLight,
    HiddenMedium,
}

impl ZoneKind {
    pub const ALL: [ZoneKind; 5] = [
        ZoneKind::MarkedLight,
        ZoneKind::MarkedMedium,
        ZoneKind::Stochastic,
        ZoneKind::HiddenLight,
        ZoneKind::HiddenMedium,
    ];

    /// Marked zones are drawn in the level and known to the agent.
    pub fn is_marked(self) -> bool {
        matches!(self, ZoneKind::MarkedLight | ZoneKind::MarkedMedium)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ZoneKind::MarkedLight => "marked_light",
            ZoneKind::MarkedMedium => "marked_medium",
            ZoneKind::Stochastic => "stochastic",
            ZoneKind::HiddenLight => "hidden_light",
            ZoneKind::HiddenMedium => "hidden_medium",
        }
    }
}

impl fmt::Display for ZoneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ZoneKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ZoneKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceZone {
    pub y_top: f64,
    pub y_bottom: f64,
    pub kind: ZoneKind,
    /// Signed lateral drift per step.
    pub drift_per_step: f64,
    /// Standard deviation of per-step noise, stochastic zones only.
    pub noise_sigma: f64,
}

impl DisturbanceZone {
    /// Zones act on ships with `y_bottom < y <= y_top`.
    pub fn contains_y(&self, y: f64) -> bool {
        y > self.y_bottom && y <= self.y_top
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    pub x_left: f64,
    pub x_right: f64,
    pub y_top: f64,
    pub y_bottom: f64,
}

impl Obstacle {
    pub fn center_x(&self) -> f64 {
        0.5 * (self.x_left + self.x_right)
    }
}

/// One border breakpoint: the open corridor at height `y` is `(left_x, right_x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BorderPoint {
    pub y: f64,
    pub left_x: f64,
    pub right_x: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub id: String,
    pub width: f64,
    pub height: f64,
    /// Sorted by descending `y`.
    pub border_profile: Vec<BorderPoint>,
    pub obstacles: Vec<Obstacle>,
    pub zones: Vec<DisturbanceZone>,
    pub spawn_x: f64,
    pub spawn_y: f64,
}

/// Linear interpolation of a descending border profile; clamps outside it.
pub fn corridor_at(profile: &[BorderPoint], y: f64) -> (f64, f64) {
    let first = profile[0];
    let last = profile[profile.len() - 1];
    if y >= first.y {
        return (first.left_x, first.right_x);
    }
    if y <= last.y {
        return (last.left_x, last.right_x);
    }
    for pair in profile.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if y <= a.y && y >= b.y {
            if a.y == b.y {
                return (a.left_x, a.right_x);
            }
            let t = (a.y - y) / (a.y - b.y);
            return (
                a.left_x + t * (b.left_x - a.left_x),
                a.right_x + t * (b.right_x - a.right_x),
            );
        }
    }
    (last.left_x, last.right_x)
}

impl Level {
    pub fn corridor_at(&self, y: f64) -> (f64, f64) {
        corridor_at(&self.border_profile, y)
    }

    /// Parses the level-file format. Errors carry 1-based line numbers.
    pub fn parse(text: &str) -> Result<Level, EnvError> {
        let mut header: Option<(String, f64, f64)> = None;
        let mut borders = Vec::new();
        let mut obstacles = Vec::new();
        let mut zones = Vec::new();
        let mut spawn: Option<(f64, f64)> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let err = |message: String| EnvError::Parse { line, message };
            let num = |tok: &str| -> Result<f64, EnvError> {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("`{tok}` is not a number")))
            };
            let arity = |n: &[usize]| -> Result<(), EnvError> {
                if n.contains(&tokens.len()) {
                    Ok(())
                } else {
                    Err(err(format!(
                        "`{}` takes {} fields, found {}",
                        tokens[0],
                        n.iter().map(|k| (k - 1).to_string()).collect::<Vec<_>>().join(" or "),
                        tokens.len() - 1
                    )))
                }
            };
            match tokens[0] {
                "level" => {
                    arity(&[6])?;
                    if tokens[2] != "width" || tokens[4] != "height" {
                        return Err(err("expected `level <id> width <w> height <h>`".into()));
                    }
                    if header.is_some() {
                        return Err(err("duplicate `level` line".into()));
                    }
                    header = Some((tokens[1].to_string(), num(tokens[3])?, num(tokens[5])?));
                }
                "border" => {
                    arity(&[4])?;
                    borders.push(BorderPoint {
                        y: num(tokens[1])?,
                        left_x: num(tokens[2])?,
                        right_x: num(tokens[3])?,
                    });
                }
                "obstacle" => {
                    arity(&[5])?;
                    obstacles.push(Obstacle {
                        x_left: num(tokens[1])?,
                        x_right: num(tokens[2])?,
                        y_top: num(tokens[3])?,
                        y_bottom: num(tokens[4])?,
                    });
                }
                "zone" => {
                    arity(&[5, 6])?;
                    let kind: ZoneKind = tokens[1]
                        .parse()
                        .map_err(|_| err(format!("unknown zone kind `{}`", tokens[1])))?;
                    let noise_sigma = if tokens.len() == 6 { num(tokens[5])? } else { 0.0 };
                    zones.push(DisturbanceZone {
                        y_top: num(tokens[2])?,
                        y_bottom: num(tokens[3])?,
                        kind,
                        drift_per_step: num(tokens[4])?,
                        noise_sigma,
                    });
                }
                "spawn" => {
                    arity(&[3])?;
                    if spawn.is_some() {
                        return Err(err("duplicate `spawn` line".into()));
                    }
                    spawn = Some((num(tokens[1])?, num(tokens[2])?));
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }

        let (id, width, height) = header.ok_or(EnvError::Parse {
            line: 0,
            message: "missing `level` line".into(),
        })?;
        let (spawn_x, spawn_y) = spawn.ok_or(EnvError::Parse {
            line: 0,
            message: "missing `spawn` line".into(),
        })?;
        let level = Level {
            id,
            width,
            height,
            border_profile: borders,
            obstacles,
            zones,
            spawn_x,
            spawn_y,
        };
        level.validate()?;
        Ok(level)
    }

    /// Checks every geometric invariant, including that the spawn point lies
    /// strictly inside the corridor.
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |field: &str, message: String| {
            Err(EnvError::InvariantViolation {
                field: field.to_string(),
                message,
            })
        };
        if self.width <= 0.0 || self.height <= 0.0 {
            return bad("width/height", "must be positive".into());
        }
        if self.border_profile.len() < 2 {
            return bad("border", "at least two breakpoints are required".into());
        }
        for pair in self.border_profile.windows(2) {
            if pair[1].y >= pair[0].y {
                return bad("border.y", format!("{} does not descend below {}", pair[1].y, pair[0].y));
            }
        }
        for b in &self.border_profile {
            if b.left_x >= b.right_x {
                return bad("border.left_x", format!("{} >= right_x {} at y {}", b.left_x, b.right_x, b.y));
            }
        }
        for o in &self.obstacles {
            if o.x_left >= o.x_right {
                return bad("obstacle.x_left", format!("{} >= x_right {}", o.x_left, o.x_right));
            }
            if o.y_top <= o.y_bottom {
                return bad("obstacle.y_top", format!("{} <= y_bottom {}", o.y_top, o.y_bottom));
            }
        }
        for z in &self.zones {
            if z.y_top <= z.y_bottom {
                return bad("zone.y_top", format!("{} <= y_bottom {}", z.y_top, z.y_bottom));
            }
            if z.noise_sigma < 0.0 {
                return bad("zone.noise_sigma", "must be non-negative".into());
            }
            if z.noise_sigma > 0.0 && z.kind != ZoneKind::Stochastic {
                return bad("zone.noise_sigma", format!("only stochastic zones carry noise, not {}", z.kind));
            }
        }
        if self.spawn_y <= 0.0 || self.spawn_y > self.height {
            return bad("spawn.y", format!("{} outside (0, {}]", self.spawn_y, self.height));
        }
        let (l, r) = self.corridor_at(self.spawn_y);
        if self.spawn_x <= l || self.spawn_x >= r {
            return bad("spawn.x", format!("{} outside corridor ({l}, {r})", self.spawn_x));
        }
        Ok(())
    }

    /// Serialises back into the level-file format.
    pub fn to_file_string(&self) -> String {
        let mut s = format!("level {} width {} height {}\n", self.id, self.width, self.height);
        for b in &self.border_profile {
            s.push_str(&format!("border {} {} {}\n", b.y, b.left_x, b.right_x));
        }
        for o in &self.obstacles {
            s.push_str(&format!(
                "obstacle {} {} {} {}\n",
                o.x_left, o.x_right, o.y_top, o.y_bottom
            ));
        }
        for z in &self.zones {
            s.push_str(&format!(
                "zone {} {} {} {}",
                z.kind, z.y_top, z.y_bottom, z.drift_per_step
            ));
            if z.kind == ZoneKind::Stochastic {
                s.push_str(&format!(" {}", z.noise_sigma));
            }
            s.push('\n');
        }
        s.push_str(&format!("spawn {} {}\n", self.spawn_x, self.spawn_y));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# plain corridor
level open width 40 height 20
border 20 0 40
border 0 0 40
spawn 20 18
";

    #[test]
    fn parses_borders_only_level() {
        let level = Level::parse(MINIMAL).unwrap();
        assert_eq!(level.id, "open");
        assert!(level.obstacles.is_empty() && level.zones.is_empty());
        assert_eq!(level.border_profile.len(), 2);
    }

    #[test]
    fn interpolates_cone() {
        let profile = [
            BorderPoint { y: 100.0, left_x: 0.0, right_x: 40.0 },
            BorderPoint { y: 0.0, left_x: 10.0, right_x: 30.0 },
        ];
        assert_eq!(corridor_at(&profile, 50.0), (5.0, 35.0));
        assert_eq!(corridor_at(&profile, 200.0), (0.0, 40.0));
        assert_eq!(corridor_at(&profile, -3.0), (10.0, 30.0));
    }

    #[test]
    fn rejects_inverted_obstacle() {
        let text = format!("{MINIMAL}obstacle 12 12 10 8\n");
        match Level::parse(&text) {
            Err(EnvError::InvariantViolation { field, .. }) => assert_eq!(field, "obstacle.x_left"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_line_numbers() {
        let text = "level x width 40 height 20\nborder 20 0 forty\n";
        assert_eq!(
            Level::parse(text),
            Err(EnvError::Parse {
                line: 2,
                message: "`forty` is not a number".into()
            })
        );
        let text = "level x width 40 height 20\n\nwall 1 2\n";
        assert!(matches!(Level::parse(text), Err(EnvError::Parse { line: 3, .. })));
        let text = "level x width 40 height 20\nzone windy 1 0 0.3\n";
        assert!(matches!(Level::parse(text), Err(EnvError::Parse { line: 2, .. })));
    }

    #[test]
    fn rejects_unsorted_borders_and_bad_spawn() {
        let text = "level x width 40 height 20\nborder 0 0 40\nborder 20 0 40\nspawn 20 10\n";
        assert!(matches!(Level::parse(text), Err(EnvError::InvariantViolation { .. })));
        let text = "level x width 40 height 20\nborder 20 0 40\nborder 0 0 40\nspawn 50 10\n";
        assert!(matches!(
            Level::parse(text),
            Err(EnvError::InvariantViolation { field, .. }) if field == "spawn.x"
        ));
    }

    #[test]
    fn file_round_trip() {
        let text = format!(
            "{MINIMAL}obstacle 4.5 9 12 10\nzone stochastic 15 5 0.2 0.3\nzone hidden_light 9 3 -0.3\n"
        );
        let level = Level::parse(&text).unwrap();
        let again = Level::parse(&level.to_file_string()).unwrap();
        assert_eq!(level, again);
        assert_eq!(level.to_file_string(), again.to_file_string());
    }
}
