//! Cognitive control layer: situation detection, action-field selection,
//! the high-level sense of control and action monitoring.
//!
//! The layer runs one production per 50 ms step. It reads only the situated
//! state buffer, never the world itself.

mod library;
mod situation;

use std::sync::Arc;

pub use library::{
    ActionIntention, BiasSpec, IntentionLibrary, LibraryError, TargetRegion, DEFAULT_LIBRARY,
};
pub use situation::{detect_situation, Corridor, ObstacleAhead, Situation, NARROW_CORRIDOR};

use crate::config::CclConfig;
use crate::environment::Observation;
use crate::scl::{MovementGoal, SclFeedback};

/// Ordered (most reliable first) set of intentions for one situation.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionField {
    pub intentions: Vec<ActionIntention>,
    pub situation: Situation,
}

impl ActionField {
    pub fn is_depleted(&self) -> bool {
        self.intentions.iter().all(|i| i.tried)
    }
}

/// Filters the library entry for `sit` by reliability and sorts it,
/// most reliable first. Ties keep library order.
pub fn generate_action_field(
    lib: &IntentionLibrary,
    sit: &Situation,
    threshold: f64,
) -> ActionField {
    let mut intentions: Vec<ActionIntention> = lib
        .lookup(sit)
        .into_iter()
        .filter(|i| i.reliability >= threshold)
        .map(|mut i| {
            i.tried = false;
            i
        })
        .collect();
    intentions.sort_by(|a, b| b.reliability.total_cmp(&a.reliability));
    ActionField {
        intentions,
        situation: *sit,
    }
}

/// Everything the CCL reads: the latest observation and SCL feedback, each
/// stamped with the step that produced it.
#[derive(Clone, Debug)]
pub struct SituatedStateBuffer {
    pub step: u64,
    pub observation: Observation,
    pub feedback: SclFeedback,
    pub feedback_step: u64,
    pub goal: MovementGoal,
    pub intention: Option<ActionIntention>,
}

/// Outcome of one CCL production.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CclDecision {
    pub trigger: bool,
    /// Set when a new intention was selected this step.
    pub selected: Option<ActionIntention>,
    pub regenerated: bool,
}

#[derive(Clone, Debug)]
pub struct CclState {
    /// HL SoC in tenths; `hl_soc()` is always an exact multiple of 0.1.
    hl_tenths: u8,
    pub current_intention: Option<ActionIntention>,
    pub field: ActionField,
    pub ccl_threshold: f64,
    pub grace_until: u64,
    pub library: Arc<IntentionLibrary>,
    pub situation: Option<Situation>,
    /// Count of `select_action` calls so far.
    pub selections: u64,
    pub grace_steps: u64,
    pub reliability_threshold: f64,
}

impl CclState {
    pub fn new(cfg: &CclConfig, ccl_threshold: f64, library: Arc<IntentionLibrary>) -> Self {
        let empty = Situation {
            zone_kind: None,
            obstacle_ahead: ObstacleAhead::None,
            corridor: Corridor::Wide,
        };
        Self {
            hl_tenths: (cfg.initial_hl_soc * 10.0).round() as u8,
            current_intention: None,
            field: ActionField {
                intentions: Vec::new(),
                situation: empty,
            },
            ccl_threshold,
            grace_until: 0,
            library,
            situation: None,
            selections: 0,
            grace_steps: cfg.grace_steps,
            reliability_threshold: cfg.reliability_threshold,
        }
    }

    pub fn hl_soc(&self) -> f64 {
        f64::from(self.hl_tenths) / 10.0
    }

    pub fn set_hl_soc(&mut self, value: f64) {
        self.hl_tenths = (value.clamp(0.0, 1.0) * 10.0).round() as u8;
    }

    /// Steps up by 0.1 when the LL SoC is above the HL SoC, down by 0.1 when
    /// it is more than 0.1 below, otherwise holds.
    pub fn hl_soc_update(&mut self, ll_soc: f64) {
        let hl = self.hl_soc();
        let lower = (f64::from(self.hl_tenths) - 1.0) / 10.0;
        if ll_soc > hl {
            self.hl_tenths = (self.hl_tenths + 1).min(10);
        } else if ll_soc < lower {
            self.hl_tenths = self.hl_tenths.saturating_sub(1);
        }
    }

    /// Fires when the HL SoC is strictly below the CCL threshold and the
    /// grace window has passed.
    pub fn monitor_action(&self, now: u64) -> bool {
        self.hl_soc() < self.ccl_threshold && now >= self.grace_until
    }

    pub fn in_grace(&self, now: u64) -> bool {
        now < self.grace_until
    }

    /// Rebuilds the action field for `sit` from the library.
    pub fn regenerate_field(&mut self, sit: Situation) {
        self.field = generate_action_field(&self.library, &sit, self.reliability_threshold);
        self.situation = Some(sit);
    }

    /// Takes the most reliable untried intention. A depleted field is
    /// regenerated from the same library and selection starts over. Arms the
    /// grace window. Returns the intention and whether the field was rebuilt.
    pub fn select_action(&mut self, now: u64) -> (ActionIntention, bool) {
        let mut regenerated = false;
        if self.field.is_depleted() {
            let sit = self.field.situation;
            self.regenerate_field(sit);
            regenerated = true;
        }
        let chosen = match self.field.intentions.iter_mut().find(|i| !i.tried) {
            Some(slot) => {
                slot.tried = true;
                *slot
            }
            // every entry is below the reliability threshold
            None => self
                .library
                .default_intentions()
                .first()
                .copied()
                .unwrap_or_else(|| ActionIntention::new(TargetRegion::Center, 0.0)),
        };
        self.current_intention = Some(chosen);
        self.grace_until = now + self.grace_steps;
        self.selections += 1;
        (chosen, regenerated)
    }

    /// One production cycle on the buffer contents. The situation is
    /// re-detected, the HL SoC updated, and then either a pending
    /// situation change or the action monitor may cause a selection. At
    /// most one selection happens per step and never inside the grace
    /// window (except for the very first selection).
    pub fn tick(&mut self, buffer: &SituatedStateBuffer) -> CclDecision {
        let now = buffer.step;
        let sit = detect_situation(&buffer.observation);
        self.hl_soc_update(buffer.feedback.ll_soc);

        let mut decision = CclDecision {
            trigger: false,
            selected: None,
            regenerated: false,
        };
        if self.current_intention.is_none() {
            self.regenerate_field(sit);
            let (chosen, _) = self.select_action(now);
            decision.selected = Some(chosen);
            decision.regenerated = true;
            return decision;
        }
        if self.in_grace(now) {
            return decision;
        }
        if self.situation != Some(sit) {
            self.regenerate_field(sit);
            let (chosen, _) = self.select_action(now);
            decision.selected = Some(chosen);
            decision.regenerated = true;
            return decision;
        }
        if self.monitor_action(now) {
            decision.trigger = true;
            let (chosen, regenerated) = self.select_action(now);
            decision.selected = Some(chosen);
            decision.regenerated = regenerated;
        }
        decision
    }
}

/// Movement goal derived from a symbolic intention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoalCommand {
    pub goal: MovementGoal,
    pub target_x: f64,
    /// Compensation handed to the SCL while a marked zone is visible.
    pub compensation_bias: Option<f64>,
}

/// Requests `goal_gain` of the remaining distance to `target_x`, nothing
/// once within the arrival tolerance.
pub fn goal_toward(target_x: f64, ship_x: f64, cfg: &CclConfig, max_step: f64) -> MovementGoal {
    let distance = target_x - ship_x;
    if distance.abs() < cfg.arrival_tolerance {
        return MovementGoal::hold();
    }
    MovementGoal::new(cfg.goal_gain * distance, max_step)
}

/// Maps the intention's region onto the corridor at the ship's height.
pub fn intention_to_goal(
    intention: &ActionIntention,
    obs: &Observation,
    cfg: &CclConfig,
    max_step: f64,
) -> GoalCommand {
    let (left, right) = obs.corridor_at_ship();
    let target_x = left + intention.target_region.fraction() * (right - left);
    let goal = goal_toward(target_x, obs.ship_x, cfg, max_step);
    let compensation_bias = obs.visible_zone.map(|zone| match intention.bias {
        BiasSpec::Auto => -zone.drift_per_step,
        BiasSpec::Fixed(b) => b,
    });
    GoalCommand {
        goal,
        target_x,
        compensation_bias,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::environment::{BorderPoint, MarkedZone, ZoneKind};
    use crate::scl::SclFeedback;

    fn cfg() -> CclConfig {
        Config::default().ccl
    }

    #[test]
    fn goal_inside_tolerance_holds() {
        assert_eq!(goal_toward(20.4, 20.0, &cfg(), 1.0), MovementGoal::hold());
        assert_eq!(goal_toward(22.0, 20.0, &cfg(), 1.0).target_dx, 0.5);
    }

    fn state(threshold: f64) -> CclState {
        CclState::new(
            &Config::default().ccl,
            threshold,
            Arc::new(IntentionLibrary::default()),
        )
    }

    fn open_obs(x: f64, zone: Option<MarkedZone>) -> Observation {
        Observation {
            step: 0,
            ship_x: x,
            ship_y: 100.0,
            half_width: 1.0,
            visible_borders: vec![
                BorderPoint { y: 200.0, left_x: 0.0, right_x: 40.0 },
                BorderPoint { y: 0.0, left_x: 0.0, right_x: 40.0 },
            ],
            visible_obstacles: vec![],
            marked_zones: zone.into_iter().collect(),
            visible_zone: zone,
            perceived_dx: 0.0,
            crashed: false,
            done: false,
        }
    }

    fn lib3() -> IntentionLibrary {
        IntentionLibrary::parse(
            "intent */*/* left 0.6\nintent */*/* center 0.9\nintent */*/* right 0.4\n",
        )
        .unwrap()
    }

    fn any_sit() -> Situation {
        Situation {
            zone_kind: None,
            obstacle_ahead: ObstacleAhead::None,
            corridor: Corridor::Wide,
        }
    }

    #[test]
    fn hl_update_branches() {
        let mut s = state(0.3);
        s.hl_soc_update(0.7);
        assert_eq!(s.hl_soc(), 0.6);
        s.set_hl_soc(0.5);
        s.hl_soc_update(0.45);
        assert_eq!(s.hl_soc(), 0.5);
        s.hl_soc_update(0.3);
        assert_eq!(s.hl_soc(), 0.4);
    }

    #[test]
    fn hl_saturates() {
        let mut s = state(0.3);
        s.set_hl_soc(0.0);
        for _ in 0..10 {
            s.hl_soc_update(1.0);
        }
        assert_eq!(s.hl_soc(), 1.0);
        s.hl_soc_update(1.0);
        assert_eq!(s.hl_soc(), 1.0);
        s.set_hl_soc(0.0);
        s.hl_soc_update(0.0);
        assert_eq!(s.hl_soc(), 0.0);
    }

    #[test]
    fn monitor_is_strict_and_respects_grace() {
        let mut s = state(0.3);
        s.hl_tenths = 2;
        assert!(s.monitor_action(10));
        s.hl_tenths = 3;
        assert!(!s.monitor_action(10));
        let mut s = state(0.3);
        s.hl_tenths = 1;
        s.grace_until = 16;
        assert!(!s.monitor_action(15));
        assert!(s.monitor_action(16));
    }

    #[test]
    fn field_filters_and_sorts() {
        let field = generate_action_field(&lib3(), &any_sit(), 0.5);
        let regions: Vec<_> = field.intentions.iter().map(|i| i.target_region).collect();
        assert_eq!(regions, [TargetRegion::Center, TargetRegion::Left]);
        assert!(generate_action_field(&lib3(), &any_sit(), 0.95).intentions.is_empty());
    }

    #[test]
    fn unseen_situation_gets_center() {
        let lib = IntentionLibrary::parse("intent none/left/wide right 0.9\n").unwrap();
        let field = generate_action_field(&lib, &any_sit(), 0.5);
        assert_eq!(field.intentions.len(), 1);
        assert_eq!(field.intentions[0].target_region, TargetRegion::Center);
    }

    #[test]
    fn selection_walks_field_then_regenerates() {
        let mut s = state(0.5);
        s.library = Arc::new(lib3());
        s.reliability_threshold = 0.0;
        s.regenerate_field(any_sit());
        let picks: Vec<_> = (0..4).map(|n| s.select_action(n * 10)).collect();
        assert_eq!(picks[0].0.target_region, TargetRegion::Center);
        assert_eq!(picks[1].0.target_region, TargetRegion::Left);
        assert_eq!(picks[2].0.target_region, TargetRegion::Right);
        assert_eq!(picks[3].0.target_region, TargetRegion::Center);
        assert!(!picks[2].1 && picks[3].1);
        assert_eq!(s.grace_until, 36);
    }

    #[test]
    fn single_intention_field_repeats() {
        let mut s = state(0.5);
        s.library = Arc::new(IntentionLibrary::parse("intent */*/* left 0.8\n").unwrap());
        s.regenerate_field(any_sit());
        for n in 0..5u64 {
            let now = 100 + 7 * n;
            let (i, regenerated) = s.select_action(now);
            assert_eq!(i.target_region, TargetRegion::Left);
            assert_eq!(regenerated, n > 0);
            assert_eq!(s.grace_until, now + 6);
        }
    }

    #[test]
    fn goal_mapping() {
        let center = ActionIntention::new(TargetRegion::Center, 0.9);
        let cmd = intention_to_goal(&center, &open_obs(20.0, None), &cfg(), 1.0);
        assert_eq!(cmd.goal.target_dx, 0.0);
        assert_eq!(cmd.compensation_bias, None);

        let far = ActionIntention::new(TargetRegion::FarRight, 0.9);
        let cmd = intention_to_goal(&far, &open_obs(1.5, None), &cfg(), 1.0);
        assert_eq!(cmd.goal.target_dx, 1.0);
        assert_eq!(cmd.target_x, 36.0);

        let zone = MarkedZone {
            kind: ZoneKind::MarkedLight,
            y_top: 150.0,
            y_bottom: 50.0,
            drift_per_step: 0.3,
        };
        let cmd = intention_to_goal(&center, &open_obs(20.0, Some(zone)), &cfg(), 1.0);
        assert_eq!(cmd.compensation_bias, Some(-0.3));
    }

    #[test]
    fn tick_selects_at_start_then_monitors() {
        let mut s = state(0.7);
        let mut buffer = SituatedStateBuffer {
            step: 0,
            observation: open_obs(20.0, None),
            feedback: SclFeedback { ll_soc: 0.0, perceived_dx: 0.0, position: 20.0 },
            feedback_step: 0,
            goal: MovementGoal::hold(),
            intention: None,
        };
        let d = s.tick(&buffer);
        assert!(d.selected.is_some() && !d.trigger);
        for step in 1..6 {
            buffer.step = step;
            let d = s.tick(&buffer);
            assert!(d.selected.is_none(), "selected inside grace at {step}");
        }
        buffer.step = 6;
        let d = s.tick(&buffer);
        assert!(d.trigger && d.selected.is_some());
    }
}
