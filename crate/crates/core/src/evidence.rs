//! Evidence and Bayes-factor result types, plus posterior model
//! probabilities for a finite model set.

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// How a log-evidence value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvidenceMethod {
    ClosedForm,
    Grid,
    /// Likelihood-derived prior construction (squared, tempered, subset,
    /// powered variants); the value is a ratio of likelihood integrals.
    LikelihoodPrior,
    /// Ratio of baseline-prior integrals (partial / fractional recipes).
    BaselineRatio,
    /// Hyperprior mixture over a model family.
    Hierarchical,
}

/// A log marginal likelihood with provenance.
#[derive(Clone, Debug)]
pub struct EvidenceResult {
    pub log_z: f64,
    pub method: EvidenceMethod,
    /// Grid shape when `method` involved numeric integration.
    pub grid_points: Option<Vec<usize>>,
    /// Tail-mass rationale inherited from a truncated parameter space.
    pub truncation_note: Option<String>,
}

impl EvidenceResult {
    pub fn closed_form(log_z: f64) -> Self {
        EvidenceResult {
            log_z,
            method: EvidenceMethod::ClosedForm,
            grid_points: None,
            truncation_note: None,
        }
    }

    pub fn with_method(log_z: f64, method: EvidenceMethod) -> Self {
        EvidenceResult {
            log_z,
            method,
            grid_points: None,
            truncation_note: None,
        }
    }
}

/// A Bayes factor between two models, kept in log space, with a note on the
/// recipe that produced the two evidences (needed to judge whether arbitrary
/// prior constants have cancelled).
#[derive(Clone, Debug)]
pub struct BayesFactorReport {
    pub log_z_num: f64,
    pub log_z_den: f64,
    pub log_bf: f64,
    pub recipe: String,
}

impl BayesFactorReport {
    pub fn bf(&self) -> f64 {
        self.log_bf.exp()
    }
}

/// Ratio of two evidences as a [`BayesFactorReport`].
///
/// Both log-evidences must be finite: a Bayes factor against a model with
/// zero (or failed) evidence is reported as an error rather than ±inf.
pub fn bayes_factor(
    numerator: &EvidenceResult,
    denominator: &EvidenceResult,
    recipe: impl Into<String>,
) -> Result<BayesFactorReport> {
    if !numerator.log_z.is_finite() || !denominator.log_z.is_finite() {
        return Err(Error::NonFinite(format!(
            "bayes_factor needs finite log-evidences, got {} / {}",
            numerator.log_z, denominator.log_z
        )));
    }
    Ok(BayesFactorReport {
        log_z_num: numerator.log_z,
        log_z_den: denominator.log_z,
        log_bf: numerator.log_z - denominator.log_z,
        recipe: recipe.into(),
    })
}

/// Posterior probabilities of a finite set of models from their
/// log-evidences and prior model probabilities.
///
/// The priors must be non-negative and sum to 1 within 1e-12. Models with
/// zero prior probability keep exactly zero posterior probability. The
/// result is invariant (up to rounding) under a common shift of all
/// log-evidences, since only differences enter.
pub fn posterior_model_probs(log_zs: &[f64], model_priors: &[f64]) -> Result<Vec<f64>> {
    if log_zs.is_empty() {
        return Err(Error::EmptyData("posterior_model_probs needs >= 1 model"));
    }
    if log_zs.len() != model_priors.len() {
        return Err(Error::LengthMismatch(format!(
            "{} evidences vs {} model priors",
            log_zs.len(),
            model_priors.len()
        )));
    }
    let mut sum = 0.0;
    for &p in model_priors {
        if p.is_nan() || p < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "model prior {p} is negative or NaN"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "model priors sum to {sum}, expected 1 within 1e-12"
        )));
    }
    let weighted: Vec<f64> = log_zs
        .iter()
        .zip(model_priors)
        .map(|(&lz, &p)| {
            assert!(!lz.is_nan(), "posterior_model_probs fed NaN log-evidence");
            if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                lz + p.ln()
            }
        })
        .collect();
    let norm = log_sum_exp(&weighted);
    if norm == f64::NEG_INFINITY {
        return Err(Error::NonFinite(
            "every model has zero weighted evidence".into(),
        ));
    }
    Ok(weighted.iter().map(|&w| (w - norm).exp()).collect())
}
