//! Cheap model-comparison diagnostics that sit beside the evidence
//! machinery: the Occam factor of a computed evidence, grid-extrema sanity
//! bounds, classical information criteria, and the fitting/penalty split of
//! a uniform-box evidence.
//!
//! Information criteria here are costs: lower is better. That is the
//! opposite orientation to log evidence, where higher is better; callers
//! comparing the two routes should compare `-2 * log_z` against the
//! criterion value so both sides rank the same way.

use crate::error::{Error, Result};

/// Slack applied to log-scale comparisons against likelihood extrema.
/// Absorbs accumulation error without hiding genuine violations.
const LOG_SLACK: f64 = 1e-9;

/// Which penalty schedule an information criterion uses.
///
/// Each kind maps the number of observations to a penalty scale applied per
/// parameter; see [`CriterionKind::penalty_scale`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionKind {
    /// Penalty scale ½·ln(number of observations).
    Bic,
    /// Constant penalty scale 1, independent of the sample size.
    Aic,
    /// Penalty scale ln(ln(number of observations)). Negative below e
    /// observations, so the kind requires at least 2 and the penalty only
    /// starts rewarding parsimony past ~2.72 observations.
    Hqic,
}

impl CriterionKind {
    /// Smallest sample size the penalty schedule is defined for.
    fn min_obs(self) -> f64 {
        match self {
            CriterionKind::Hqic => 2.0,
            _ => 1.0,
        }
    }

    /// Penalty scale as a function of the number of observations `d_y`.
    ///
    /// Errors when `d_y` is not finite or is below the kind's minimum (1,
    /// or 2 for [`CriterionKind::Hqic`] where ln ln needs ln d_y > 0).
    pub fn penalty_scale(self, d_y: f64) -> Result<f64> {
        if !d_y.is_finite() || d_y < self.min_obs() {
            return Err(Error::InvalidArgument(format!(
                "{self:?} needs at least {} observations, got {d_y}",
                self.min_obs()
            )));
        }
        Ok(match self {
            CriterionKind::Bic => 0.5 * d_y.ln(),
            CriterionKind::Aic => 1.0,
            CriterionKind::Hqic => d_y.ln().ln(),
        })
    }
}

/// Information-criterion cost `-2·log_like_max + 2·scale·d_theta`, where
/// `scale` is the kind's penalty scale at `d_y` observations.
///
/// The first term rewards fit, the second charges each of the `d_theta`
/// parameters. Lower cost is better. `d_theta` must be at least 1; a model
/// with no free parameters has no penalty and its cost is just
/// `-2·log_like_max`, computed directly rather than through this function.
pub fn info_criterion(
    log_like_max: f64,
    d_theta: usize,
    d_y: f64,
    kind: CriterionKind,
) -> Result<f64> {
    if !log_like_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "maximum log-likelihood must be finite, got {log_like_max}"
        )));
    }
    if d_theta == 0 {
        return Err(Error::InvalidArgument(
            "information criterion needs at least one parameter".into(),
        ));
    }
    let scale = kind.penalty_scale(d_y)?;
    Ok(-2.0 * log_like_max + 2.0 * scale * d_theta as f64)
}

/// Occam factor `W = exp(log_z - log_like_max)` of a computed evidence.
///
/// W measures how much of the likelihood's peak survives averaging over the
/// prior: 1 for a prior concentrated at the maximum, shrinking toward 0 as
/// the prior spreads over regions the data rule out. An evidence above the
/// likelihood maximum cannot arise from averaging, so `log_z` more than
/// 1e-9 above `log_like_max` is reported as an error rather than clamped;
/// overshoot inside that slack rounds down to exactly 1.
pub fn occam_factor(log_z: f64, log_like_max: f64) -> Result<f64> {
    if !log_z.is_finite() || !log_like_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "occam factor needs finite logs, got log_z = {log_z}, log_like_max = {log_like_max}"
        )));
    }
    let diff = log_z - log_like_max;
    if diff > LOG_SLACK {
        return Err(Error::InvalidArgument(format!(
            "evidence exceeds the likelihood maximum by {diff:e} in log; \
             an averaged likelihood cannot beat its own peak"
        )));
    }
    Ok(diff.min(0.0).exp())
}

/// Whether a log evidence lies between the likelihood extrema observed on
/// the evaluation grid, with 1e-9 log slack on both sides.
///
/// An evidence under a proper prior is a weighted average of likelihood
/// values, so it can never escape `[like_min, like_max]`. The extrema here
/// are grid extrema, not global ones: the check validates the quadrature's
/// internal consistency, not the true likelihood range. Non-finite inputs
/// fail the comparison and return false.
pub fn bounds_check(log_z: f64, log_like_min_on_grid: f64, log_like_max_on_grid: f64) -> bool {
    log_z >= log_like_min_on_grid - LOG_SLACK && log_z <= log_like_max_on_grid + LOG_SLACK
}

/// Fitting/penalty split of an evidence under a uniform prior on a box
/// with side `delta` in each of `d_theta` dimensions.
#[derive(Clone, Copy, Debug)]
pub struct BoxDecomposition {
    /// Log of the likelihood integrated (unnormalized) over the box.
    pub fitting: f64,
    /// `-d_theta·ln(delta)`: the charge for the prior volume.
    pub penalty: f64,
    /// Evidence under the uniform box prior; always exactly
    /// `fitting + penalty`.
    pub log_z: f64,
}

/// Splits the log evidence of a uniform box prior into a fitting term (the
/// raw likelihood mass in the box) and a volume penalty `-d_theta·ln delta`.
///
/// The box has side `delta` per dimension, so the prior density is
/// `delta^-d_theta` and the evidence factors exactly; `log_z` is computed
/// as the sum of the two returned terms, making the reconstruction
/// `fitting + penalty == log_z` hold bit for bit. `log_int_like_over_box`
/// may be negative infinity (a box where the likelihood vanishes); it must
/// not be NaN.
pub fn box_penalty_decomposition(
    delta: f64,
    d_theta: usize,
    log_int_like_over_box: f64,
) -> Result<BoxDecomposition> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "box side must be positive and finite, got {delta}"
        )));
    }
    if log_int_like_over_box.is_nan() {
        return Err(Error::InvalidArgument(
            "box likelihood integral is NaN".into(),
        ));
    }
    let fitting = log_int_like_over_box;
    let penalty = -(d_theta as f64) * delta.ln();
    Ok(BoxDecomposition {
        fitting,
        penalty,
        log_z: fitting + penalty,
    })
}
