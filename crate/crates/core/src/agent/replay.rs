use std::sync::Arc;

use super::{AgentError, EpisodeTrace, TRACE_SCHEMA};
use crate::environment::{Level, WorldState};

#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    pub step: u64,
    pub field: &'static str,
    pub recorded: String,
    pub replayed: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayReport {
    pub steps_checked: usize,
    pub divergences: Vec<Divergence>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.divergences.is_empty()
    }

    pub fn first(&self) -> Option<&Divergence> {
        self.divergences.first()
    }
}

/// Re-simulates the recorded inputs with the recorded seed and environment
/// settings and compares every recorded ship state.
pub fn replay(trace: &EpisodeTrace, level: Arc<Level>) -> Result<ReplayReport, AgentError> {
    if trace.meta.schema != TRACE_SCHEMA {
        return Err(AgentError::SchemaMismatch(format!(
            "trace schema {}, this build reads {TRACE_SCHEMA}",
            trace.meta.schema
        )));
    }
    let mut world = WorldState::new(level, &trace.meta.config.env, trace.meta.seed);
    let mut report = ReplayReport::default();
    for r in &trace.records {
        if world.done {
            report.divergences.push(Divergence {
                step: r.step,
                field: "done",
                recorded: "false".into(),
                replayed: "true".into(),
            });
            break;
        }
        world.step(r.input)?;
        report.steps_checked += 1;
        let mut check = |field, recorded: String, replayed: String| {
            if recorded != replayed {
                report.divergences.push(Divergence { step: r.step, field, recorded, replayed });
            }
        };
        check("x", r.x.to_string(), world.ship.x.to_string());
        check("y", r.y.to_string(), world.ship.y.to_string());
        check("crashed", r.crashed.to_string(), world.crashed.to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{run_episode, AgentConfig};
    use crate::environment::builtin_level;

    #[test]
    fn clean_trace_replays() {
        let level = builtin_level("c").unwrap();
        let t = run_episode(level.clone(), &AgentConfig::full(0.5, 0.5, 4)).unwrap();
        let rep = replay(&t, level).unwrap();
        assert!(rep.is_clean(), "{:?}", rep.first());
        assert_eq!(rep.steps_checked, t.records.len());
    }

    #[test]
    fn tampered_x_found_at_its_step() {
        let level = builtin_level("a").unwrap();
        let mut t = run_episode(level.clone(), &AgentConfig::full(0.5, 0.5, 4)).unwrap();
        t.records[40].x += 0.25;
        let rep = replay(&t, level).unwrap();
        assert_eq!(rep.divergences.len(), 1);
        assert_eq!(rep.first().unwrap().step, 40);
        assert_eq!(rep.first().unwrap().field, "x");
    }

    #[test]
    fn other_seed_diverges_in_stochastic_zone() {
        let level = builtin_level("c").unwrap();
        let mut t = run_episode(level.clone(), &AgentConfig::full(0.5, 0.5, 4)).unwrap();
        t.meta.seed = 5;
        let rep = replay(&t, level.clone()).unwrap();
        let zone = &level.zones[0];
        let first = rep.first().expect("diverges");
        // the first noisy step is the one taken from just below the zone top
        let r = &t.records[first.step as usize];
        assert!(r.y + 0.5 <= zone.y_top && r.y + 0.5 > zone.y_bottom);
        let prev = first.step as usize - 1;
        assert!(t.records[prev].y + 0.5 > zone.y_top);
    }
}
