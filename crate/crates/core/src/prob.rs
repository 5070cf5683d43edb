//! Discrete-distribution numerics and the precision-weighted belief update
//! shared by both control layers.
//!
//! A layer holds a distribution over its discrete state domain. Each step it
//! receives a top-down prediction and a bottom-up evidence distribution, and
//! blends them with a Kalman-style gain that is itself a function of the
//! layer's free energy and the precision of its prediction error.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Tolerance on the total probability mass of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Weight of the uniform component mixed into evidence before KL terms.
pub const SMOOTHING_WEIGHT: f64 = 1e-6;
/// Lower bound on the prediction-error variance.
pub const VARIANCE_FLOOR: f64 = 1e-8;
/// Upper bound on precision, `ln(1 / VARIANCE_FLOOR)`.
pub const PRECISION_CEILING: f64 = 18.420_680_743_952_367;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("duplicate domain label `{0}`")]
    DuplicateLabel(String),
    #[error("distributions are defined over different domains")]
    DomainMismatch,
    #[error("evidence has zero mass at state {index} where the prediction is positive")]
    AbsoluteContinuityViolation { index: usize },
    #[error("prediction error needs at least 2 entries, got {0}")]
    LengthTooSmall(usize),
    #[error("gain {0} outside [0, 1]")]
    GainOutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// Ordered, duplicate-free list of state labels. Cloning is cheap.
#[derive(Clone, PartialEq, Eq)]
pub struct Domain(Arc<[String]>);

impl Domain {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ProbError::InvalidDistribution("empty domain".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(ProbError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Domain(labels.into()))
    }

    /// Domain labelled `"1"`, `"2"`, ... `"n"`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    fn same_as(&self, other: &Domain) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Probability vector over a finite ordered domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    domain: Domain,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates that `probs` is a proper distribution over `domain`.
    pub fn new(domain: Domain, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != domain.len() {
            return Err(ProbError::InvalidDistribution(format!(
                "{} probabilities for a domain of {} states",
                probs.len(),
                domain.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(ProbError::InvalidDistribution(format!(
                "entry {bad} is not a finite non-negative number"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(ProbError::InvalidDistribution(format!(
                "mass sums to {total}"
            )));
        }
        Ok(Self { domain, probs })
    }

    /// Normalises non-negative weights into a distribution.
    pub fn from_weights(domain: Domain, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(ProbError::InvalidDistribution(
                "weights must be non-negative with positive finite total".into(),
            ));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(domain, probs)
    }

    pub fn uniform(domain: Domain) -> Self {
        let n = domain.len();
        Self {
            domain,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(domain: Domain, index: usize) -> Result<Self> {
        if index >= domain.len() {
            return Err(ProbError::InvalidDistribution(format!(
                "point mass index {index} outside domain"
            )));
        }
        let mut probs = vec![0.0; domain.len()];
        probs[index] = 1.0;
        Ok(Self { domain, probs })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Mixes with the uniform distribution at `weight` and renormalises.
    pub fn smoothed(&self, weight: f64) -> Self {
        let n = self.probs.len() as f64;
        let mut probs: Vec<f64> = self
            .probs
            .iter()
            .map(|p| (1.0 - weight) * p + weight / n)
            .collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self {
            domain: self.domain.clone(),
            probs,
        }
    }

    /// Pointwise product with a likelihood vector, renormalised (Bayes rule).
    /// Falls back to the likelihood alone when the product has no mass.
    pub fn bayes(&self, likelihood: &[f64]) -> Result<Self> {
        if likelihood.len() != self.probs.len() {
            return Err(ProbError::DomainMismatch);
        }
        let product: Vec<f64> = self
            .probs
            .iter()
            .zip(likelihood)
            .map(|(p, l)| p * l)
            .collect();
        if product.iter().sum::<f64>() > 0.0 {
            Self::from_weights(self.domain.clone(), product)
        } else {
            Self::from_weights(self.domain.clone(), likelihood.to_vec())
        }
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.domain.same_as(&other.domain) {
            Ok(())
        } else {
            Err(ProbError::DomainMismatch)
        }
    }
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &DiscreteDistribution) -> f64 {
    -p.probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `D_KL(p || q) = sum p_i ln(p_i / q_i)`.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    p.check_domain(q)?;
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(ProbError::AbsoluteContinuityViolation { index: i });
        }
        total += pi * (pi / qi).ln();
    }
    // rounding can leave a tiny negative value when p == q
    Ok(total.max(0.0))
}

/// Log inverse population variance of a prediction-error vector, clamped to
/// `[0, PRECISION_CEILING]`.
pub fn precision_of_error(pred_error: &[f64]) -> Result<f64> {
    let n = pred_error.len();
    if n < 2 {
        return Err(ProbError::LengthTooSmall(n));
    }
    let mean = pred_error.iter().sum::<f64>() / n as f64;
    let var = pred_error.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64;
    let pi = (1.0 / var.max(VARIANCE_FLOOR)).ln();
    Ok(pi.clamp(0.0, PRECISION_CEILING))
}

/// Entropy of the prediction plus its divergence from the evidence.
/// `evidence` is expected to be smoothed already.
pub fn free_energy(pred: &DiscreteDistribution, evidence: &DiscreteDistribution) -> Result<f64> {
    Ok(entropy(pred) + kl_divergence(pred, evidence)?)
}

/// `F / (F + pi)`; `0.5` when both are zero.
pub fn kalman_gain(free_energy: f64, precision: f64) -> f64 {
    let f = free_energy.max(0.0);
    let pi = precision.max(0.0);
    if f + pi == 0.0 {
        0.5
    } else {
        (f / (f + pi)).clamp(0.0, 1.0)
    }
}

/// Convex blend `(1 - K) * top_down + K * bottom_up`.
pub fn belief_update(
    top_down: &DiscreteDistribution,
    bottom_up: &DiscreteDistribution,
    gain: f64,
) -> Result<DiscreteDistribution> {
    top_down.check_domain(bottom_up)?;
    if !(0.0..=1.0).contains(&gain) {
        return Err(ProbError::GainOutOfRange(gain));
    }
    let probs = top_down
        .probs
        .iter()
        .zip(&bottom_up.probs)
        .map(|(a, b)| (1.0 - gain) * a + gain * b)
        .collect();
    Ok(DiscreteDistribution {
        domain: top_down.domain.clone(),
        probs,
    })
}

/// Index of the most probable state; ties go to the lowest index.
pub fn argmax_index(p: &DiscreteDistribution) -> usize {
    let mut best = 0;
    for (i, &x) in p.probs.iter().enumerate().skip(1) {
        if x > p.probs[best] {
            best = i;
        }
    }
    best
}

/// Label of the most probable state; ties go to the lowest index.
pub fn argmax_state(p: &DiscreteDistribution) -> &str {
    &p.domain.labels()[argmax_index(p)]
}

/// One layer's belief after integrating a top-down prediction with
/// bottom-up evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerBelief {
    pub prior: DiscreteDistribution,
    pub top_down: DiscreteDistribution,
    pub bottom_up: DiscreteDistribution,
    pub posterior: DiscreteDistribution,
    pub free_energy: f64,
    pub precision: f64,
    pub gain: f64,
}

impl LayerBelief {
    /// Runs one update: both likelihoods are combined with the empirical
    /// `prior`, free energy and precision give the gain, and the gain blends
    /// the two resulting posteriors.
    pub fn integrate(
        prior: &DiscreteDistribution,
        top_down_likelihood: &[f64],
        bottom_up_likelihood: &[f64],
    ) -> Result<Self> {
        let top_down = prior.bayes(top_down_likelihood)?;
        let bottom_up = prior.bayes(bottom_up_likelihood)?;
        Self::from_posteriors(prior.clone(), top_down, bottom_up)
    }

    pub fn from_posteriors(
        prior: DiscreteDistribution,
        top_down: DiscreteDistribution,
        bottom_up: DiscreteDistribution,
    ) -> Result<Self> {
        let evidence = bottom_up.smoothed(SMOOTHING_WEIGHT);
        let free_energy = free_energy(&top_down, &evidence)?;
        let error: Vec<f64> = bottom_up
            .probs
            .iter()
            .zip(&top_down.probs)
            .map(|(b, t)| b - t)
            .collect();
        let precision = precision_of_error(&error)?;
        let gain = kalman_gain(free_energy, precision);
        let posterior = belief_update(&top_down, &bottom_up, gain)?;
        Ok(Self {
            prior,
            top_down,
            bottom_up,
            posterior,
            free_energy,
            precision,
            gain,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(Domain::numbered(p.len()).unwrap(), p.to_vec()).unwrap()
    }

    #[test]
    fn entropy_of_uniform_and_point_mass() {
        let u = DiscreteDistribution::uniform(Domain::numbered(4).unwrap());
        assert!((entropy(&u) - 1.386_294_361_119_890_6).abs() < 1e-12);
        let pm = DiscreteDistribution::point_mass(Domain::numbered(4).unwrap(), 2).unwrap();
        assert_eq!(entropy(&pm), 0.0);
    }

    #[test]
    fn entropy_matches_frozen_summation() {
        // -(0.7 ln 0.7 + 0.2 ln 0.2 + 0.1 ln 0.1), summed at 50 digits
        let expected = 0.801_818_552_543_337_3;
        assert!((entropy(&dist(&[0.7, 0.2, 0.1])) - expected).abs() < 1e-14);
    }

    #[test]
    fn kl_identity_and_analytic_case() {
        let p = dist(&[0.2, 0.5, 0.3]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let pm = dist(&[1.0, 0.0]);
        let u = dist(&[0.5, 0.5]);
        assert!((kl_divergence(&pm, &u).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_rejects_zero_evidence_and_mismatched_domains() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[1.0, 0.0]);
        assert_eq!(
            kl_divergence(&p, &q),
            Err(ProbError::AbsoluteContinuityViolation { index: 1 })
        );
        let other = DiscreteDistribution::uniform(Domain::new(["a", "b"]).unwrap());
        assert_eq!(kl_divergence(&p, &other), Err(ProbError::DomainMismatch));
        assert!(kl_divergence(&p, &q.smoothed(SMOOTHING_WEIGHT)).unwrap().is_finite());
    }

    #[test]
    fn precision_cases() {
        // population variance 1
        assert!(precision_of_error(&[1.0, -1.0]).unwrap().abs() < 1e-15);
        let s = (-0.5f64).exp();
        assert!((precision_of_error(&[s, -s]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(precision_of_error(&[0.0; 5]).unwrap(), PRECISION_CEILING);
        assert!((PRECISION_CEILING - 1e8f64.ln()).abs() < 1e-12);
        // variance > 1 clamps to zero
        assert_eq!(precision_of_error(&[3.0, -3.0]).unwrap(), 0.0);
        assert_eq!(precision_of_error(&[1.0]), Err(ProbError::LengthTooSmall(1)));
    }

    #[test]
    fn free_energy_cases() {
        let u = DiscreteDistribution::uniform(Domain::numbered(4).unwrap());
        assert!((free_energy(&u, &u).unwrap() - 4f64.ln()).abs() < 1e-12);
        let pm = dist(&[0.0, 1.0, 0.0]);
        assert_eq!(free_energy(&pm, &pm).unwrap(), 0.0);
    }

    #[test]
    fn gain_cases() {
        assert_eq!(kalman_gain(0.0, 2.0), 0.0);
        assert_eq!(kalman_gain(0.7, 0.7), 0.5);
        assert_eq!(kalman_gain(0.0, 0.0), 0.5);
        assert!((kalman_gain(1.386, 0.693) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn belief_update_endpoints_and_midpoint() {
        let a = dist(&[1.0, 0.0]);
        let b = dist(&[0.0, 1.0]);
        assert_eq!(belief_update(&a, &b, 0.0).unwrap(), a);
        assert_eq!(belief_update(&a, &b, 1.0).unwrap(), b);
        assert_eq!(belief_update(&a, &b, 0.5).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(
            belief_update(&a, &b, 1.5),
            Err(ProbError::GainOutOfRange(1.5))
        );
    }

    #[test]
    fn argmax_and_ties() {
        assert_eq!(argmax_state(&dist(&[0.1, 0.8, 0.1])), "2");
        assert_eq!(argmax_state(&dist(&[0.25; 4])), "1");
    }

    #[test]
    fn construction_rejects_bad_input() {
        let d = Domain::numbered(2).unwrap();
        assert!(DiscreteDistribution::new(d.clone(), vec![0.6, 0.6]).is_err());
        assert!(DiscreteDistribution::new(d.clone(), vec![1.2, -0.2]).is_err());
        assert!(DiscreteDistribution::new(d, vec![1.0]).is_err());
        assert!(matches!(
            Domain::new(["x", "x"]),
            Err(ProbError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn layer_gain_grows_with_mismatch() {
        let prior = DiscreteDistribution::uniform(Domain::numbered(5).unwrap());
        let peak = |c: usize| -> Vec<f64> {
            (0..5)
                .map(|i| (-((i as f64 - c as f64).powi(2)) / 2.0).exp())
                .collect()
        };
        let agree = LayerBelief::integrate(&prior, &peak(2), &peak(2)).unwrap();
        let clash = LayerBelief::integrate(&prior, &peak(0), &peak(4)).unwrap();
        assert_eq!(agree.precision, PRECISION_CEILING);
        assert!(clash.gain > agree.gain);
        assert!((clash.posterior.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
