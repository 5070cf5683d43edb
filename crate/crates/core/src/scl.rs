//! Sensorimotor control layer: a damped-spring motor plant driven toward the
//! current movement goal, compensation of inferred external forces, and the
//! low-level sense of control.

use std::fmt;
use std::str::FromStr;

use crate::config::SclConfig;
use crate::environment::{Input, Observation};
use crate::prob::{DiscreteDistribution, Domain, LayerBelief};

/// Number of discrete movement states in the SCL belief.
pub const MOVEMENT_STATES: usize = 7;

/// Intended lateral displacement for the upcoming step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovementGoal {
    pub target_dx: f64,
}

impl MovementGoal {
    /// Clamps `target_dx` to `[-max_step, max_step]`.
    pub fn new(target_dx: f64, max_step: f64) -> Self {
        Self {
            target_dx: target_dx.clamp(-max_step, max_step),
        }
    }

    pub fn hold() -> Self {
        Self { target_dx: 0.0 }
    }
}

/// How the SCL gain is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KMode {
    /// `F / (F + pi)` from the movement belief each step.
    Dynamic,
    Fixed(f64),
}

impl fmt::Display for KMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KMode::Dynamic => f.write_str("dynamic"),
            KMode::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for KMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "dynamic" {
            return Ok(KMode::Dynamic);
        }
        match s.parse::<f64>() {
            Ok(k) if (0.0..=1.0).contains(&k) => Ok(KMode::Fixed(k)),
            _ => Err(format!("K must be `dynamic` or a number in [0, 1], got `{s}`")),
        }
    }
}

/// Second-order plant whose equilibrium is the requested displacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotorPlant {
    pub position: f64,
    pub velocity: f64,
    pub k_spring: f64,
    pub c_damp: f64,
}

impl MotorPlant {
    pub fn new(k_spring: f64, c_damp: f64) -> Self {
        debug_assert!(c_damp * c_damp >= 4.0 * k_spring);
        Self {
            position: 0.0,
            velocity: 0.0,
            k_spring,
            c_damp,
        }
    }

    /// Integrates one simulation step toward `equilibrium`.
    pub fn advance(&mut self, equilibrium: f64, substeps: u32) {
        let dt = 1.0 / f64::from(substeps);
        for _ in 0..substeps {
            let accel = self.k_spring * (equilibrium - self.position) - self.c_damp * self.velocity;
            self.velocity += accel * dt;
            self.position += self.velocity * dt;
        }
    }
}

/// What the SCL reports upward each tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SclFeedback {
    pub ll_soc: f64,
    pub perceived_dx: f64,
    pub position: f64,
}

#[derive(Clone, Debug)]
pub struct SclState {
    pub plant: MotorPlant,
    pub ll_soc: f64,
    /// Running estimate of the external lateral force, units per step.
    pub inferred_force: f64,
    pub gain: f64,
    pub k_mode: KMode,
    pub likelihood_sigma: f64,
    pub movement_belief: DiscreteDistribution,
    /// Free energy and precision of the most recent belief update.
    pub free_energy: f64,
    pub precision: f64,
    /// Consequence expected from the last emitted input, without drift.
    pub last_predicted_dx: f64,
    /// Movement goal of the last tick.
    pub last_intended_dx: f64,
    pub last_commanded_dx: f64,
    pub quantizer: Quantizer,
    step_size: f64,
    cfg: SclConfig,
    movement_values: Vec<f64>,
}

/// Gaussian likelihood normalised to a peak of 1.
pub fn movement_likelihood(perceived_dx: f64, intended_dx: f64, sigma: f64) -> f64 {
    let d = perceived_dx - intended_dx;
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Maps a continuous command onto the three available inputs by sign and
/// dead zone.
pub fn quantize(commanded_dx: f64, dead_zone: f64) -> Input {
    if commanded_dx.abs() < dead_zone {
        Input::None
    } else if commanded_dx > 0.0 {
        Input::Right
    } else {
        Input::Left
    }
}

/// Dead-zone quantiser with error feedback. A full input is emitted as soon
/// as the accumulated command points its way and the excess is carried
/// over, so the mean input over a run of steps follows the command. Commands inside the dead
/// zone emit nothing and clear the carry.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quantizer {
    pub carry: f64,
}

impl Quantizer {
    pub fn emit(&mut self, commanded_dx: f64, dead_zone: f64, step_size: f64) -> Input {
        if commanded_dx.abs() < dead_zone {
            self.carry = 0.0;
            return Input::None;
        }
        let v = commanded_dx + self.carry;
        let input = if v * commanded_dx > 0.0 {
            quantize(commanded_dx, 0.0)
        } else {
            Input::None
        };
        self.carry = v - input.direction() * step_size;
        input
    }
}

fn movement_domain(step_size: f64) -> (Domain, Vec<f64>) {
    let half = (MOVEMENT_STATES / 2) as i32;
    let values: Vec<f64> = (-half..=half)
        .map(|i| f64::from(i) * step_size / f64::from(half))
        .collect();
    let labels = (-half..=half).map(|i| format!("{i:+}/{half}"));
    (Domain::new(labels).expect("unique labels"), values)
}

impl SclState {
    pub fn new(cfg: &SclConfig, k_mode: KMode, step_size: f64) -> Self {
        let (domain, movement_values) = movement_domain(step_size);
        let gain = match k_mode {
            KMode::Fixed(k) => k,
            KMode::Dynamic => 0.5,
        };
        Self {
            plant: MotorPlant::new(cfg.k_spring, cfg.c_damp),
            ll_soc: cfg.initial_ll_soc,
            inferred_force: 0.0,
            gain,
            k_mode,
            likelihood_sigma: cfg.likelihood_sigma,
            movement_belief: DiscreteDistribution::uniform(domain),
            free_energy: 0.0,
            precision: 0.0,
            last_predicted_dx: 0.0,
            last_intended_dx: 0.0,
            last_commanded_dx: 0.0,
            quantizer: Quantizer::default(),
            step_size,
            cfg: cfg.clone(),
            movement_values,
        }
    }

    pub fn max_step(&self) -> f64 {
        self.step_size
    }

    pub fn dead_zone(&self) -> f64 {
        self.cfg.dead_zone * self.step_size
    }

    pub fn compensation_offset(&self) -> f64 {
        -self.inferred_force
    }

    /// Replaces the force estimate with a top-down value (a compensation
    /// strategy chosen by the cognitive layer). The next `compensate` then
    /// weighs it against the observed residual with the SCL gain.
    pub fn set_force_prior(&mut self, force: f64) {
        self.inferred_force = force;
    }

    /// Moves the plant toward the goal plus compensation and returns the
    /// clamped command together with its quantised input.
    pub fn plant_step(&mut self, goal: MovementGoal) -> (f64, Input) {
        let equilibrium = goal.target_dx + self.compensation_offset();
        self.plant.advance(equilibrium, self.cfg.plant_substeps);
        let max = self.max_step();
        let commanded = self.plant.position.clamp(-max, max);
        self.last_commanded_dx = commanded;
        let input = self.quantizer.emit(commanded, self.dead_zone(), self.step_size);
        (commanded, input)
    }

    pub fn compensate(&mut self, predicted_dx: f64, perceived_dx: f64) {
        let residual = perceived_dx - predicted_dx;
        self.inferred_force += self.gain * (residual - self.inferred_force);
    }

    pub fn ll_soc_update(&mut self, perceived_dx: f64, intended_dx: f64) {
        let p = movement_likelihood(perceived_dx, intended_dx, self.likelihood_sigma);
        self.ll_soc = (self.ll_soc + self.gain * (p - self.ll_soc)).clamp(0.0, 1.0);
    }

    fn likelihood_over_domain(&self, center: f64) -> Vec<f64> {
        self.movement_values
            .iter()
            .map(|v| movement_likelihood(*v, center, self.likelihood_sigma))
            .collect()
    }

    /// Integrates the intended (top-down) and perceived (bottom-up) movement
    /// into the movement belief; in dynamic mode the resulting gain becomes
    /// the SCL gain.
    pub fn update_movement_belief(&mut self, intended_dx: f64, perceived_dx: f64) -> LayerBelief {
        let prior = self.movement_belief.smoothed(self.cfg.belief_forgetting);
        let top_down = self.likelihood_over_domain(intended_dx);
        let bottom_up = self.likelihood_over_domain(perceived_dx);
        let belief = LayerBelief::integrate(&prior, &top_down, &bottom_up)
            .expect("likelihoods share the movement domain");
        self.movement_belief = belief.posterior.clone();
        self.free_energy = belief.free_energy;
        self.precision = belief.precision;
        match self.k_mode {
            KMode::Dynamic => self.gain = belief.gain,
            KMode::Fixed(k) => self.gain = k,
        }
        belief
    }

    /// One SCL tick: compensate for the last step's deviation, drive the
    /// plant, update the LL SoC and the movement belief. The intended
    /// movement scored by the LL SoC is the forward prediction of the last
    /// input: its displacement plus the inferred force.
    pub fn tick(&mut self, goal: MovementGoal, obs: &Observation) -> (Input, SclFeedback) {
        let perceived = obs.perceived_dx;
        self.compensate(self.last_predicted_dx, perceived);
        let (_, input) = self.plant_step(goal);
        self.ll_soc_update(perceived, self.last_intended_dx);
        self.update_movement_belief(self.last_intended_dx, perceived);
        self.last_predicted_dx = input.direction() * self.step_size;
        self.last_intended_dx = self.last_predicted_dx + self.inferred_force;
        let feedback = SclFeedback {
            ll_soc: self.ll_soc,
            perceived_dx: perceived,
            position: obs.ship_x,
        };
        (input, feedback)
    }
}
