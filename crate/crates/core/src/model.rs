//! Parameter spaces and the model abstraction shared by every evidence
//! backend in the crate.

use crate::error::{Error, Result};

/// One parameter dimension: nominal support plus the finite window actually
/// used for numeric integration.
///
/// For bounded supports the window is the support itself. For unbounded
/// supports the caller picks a finite window and records why the mass outside
/// it is negligible (the note travels with every evidence result computed on
/// the space).
#[derive(Clone, Debug)]
pub struct DimSpec {
    pub lower: f64,
    pub upper: f64,
    pub window: (f64, f64),
}

impl DimSpec {
    fn validate(&self) -> Result<()> {
        if self.lower.is_nan() || self.upper.is_nan() || self.lower >= self.upper {
            return Err(Error::InvalidArgument(format!(
                "dimension bounds must satisfy lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        let (a, b) = self.window;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!(
                "integration window must be finite with a < b, got [{a}, {b}]"
            )));
        }
        if a < self.lower || b > self.upper {
            return Err(Error::InvalidArgument(format!(
                "integration window [{a}, {b}] escapes the support [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Parameter space of a model: dimension count, per-dimension supports, and
/// the finite box used for grid integration.
#[derive(Clone, Debug)]
pub struct ParamSpace {
    dims: Vec<DimSpec>,
    truncation_note: Option<String>,
}

impl ParamSpace {
    /// Space with finite support equal to the integration window.
    pub fn bounded(bounds: &[(f64, f64)]) -> Result<Self> {
        let dims = bounds
            .iter()
            .map(|&(lo, hi)| DimSpec {
                lower: lo,
                upper: hi,
                window: (lo, hi),
            })
            .collect();
        Self::from_dims(dims, None)
    }

    /// Space with possibly infinite supports truncated to finite windows.
    /// `note` records the tail-mass rationale for the truncation.
    pub fn truncated(dims: Vec<DimSpec>, note: impl Into<String>) -> Result<Self> {
        Self::from_dims(dims, Some(note.into()))
    }

    fn from_dims(dims: Vec<DimSpec>, truncation_note: Option<String>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument(
                "parameter space needs at least one dimension".into(),
            ));
        }
        for d in &dims {
            d.validate()?;
        }
        Ok(ParamSpace {
            dims,
            truncation_note,
        })
    }

    pub fn n_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, d: usize) -> &DimSpec {
        &self.dims[d]
    }

    /// Finite integration windows, one per dimension.
    pub fn windows(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| d.window).collect()
    }

    pub fn truncation_note(&self) -> Option<&str> {
        self.truncation_note.as_deref()
    }

    /// Center of the integration box. Used as the anchor point when improper
    /// baseline log-priors are re-centered so that additive constants cancel.
    pub fn window_center(&self) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| 0.5 * (d.window.0 + d.window.1))
            .collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dims.len()
            && theta
                .iter()
                .zip(&self.dims)
                .all(|(&t, d)| t >= d.lower && t <= d.upper)
    }
}

/// A Bayesian model bound to its observed data: log-likelihood and log-prior
/// evaluators over a common parameter space.
///
/// Both evaluators work on the log scale with `NEG_INFINITY` for zero
/// density. `log_prior` may be unnormalized or outright improper; the two
/// flags say what the numbers mean:
///
/// * `prior_is_proper`: exp(log_prior) integrates to a finite value;
/// * `prior_log_norm_known`: it integrates to exactly 1, so evidence values
///   computed from it are absolute rather than known only up to a constant.
pub trait BayesModel: Sync {
    fn space(&self) -> &ParamSpace;

    /// Log-likelihood of the full dataset at `theta`.
    fn log_like(&self, theta: &[f64]) -> f64;

    /// Log prior density at `theta` (possibly unnormalized).
    fn log_prior(&self, theta: &[f64]) -> f64;

    fn prior_is_proper(&self) -> bool {
        true
    }

    fn prior_log_norm_known(&self) -> bool {
        true
    }

    /// Unnormalized log posterior, the integrand of the evidence integral.
    fn log_post_unnorm(&self, theta: &[f64]) -> f64 {
        let lp = self.log_prior(theta);
        // Avoid -inf + inf = NaN when the prior excludes a region where the
        // likelihood diverges (cannot happen for finite likelihoods, cheap
        // to guard anyway).
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.log_like(theta) + lp
    }
}

/// Models whose observations are conditionally independent given `theta`,
/// so the likelihood of any index subset factorizes per observation.
///
/// This is what data-splitting constructions (training subsets, partial and
/// intrinsic Bayes factors, posterior predictive checks) require.
pub trait SubsetLikelihood: BayesModel {
    fn n_obs(&self) -> usize;

    /// Log-likelihood of the single observation `i`.
    fn log_like_point(&self, theta: &[f64], i: usize) -> f64;

    /// Log-likelihood of the observations named by `indices`.
    fn log_like_subset(&self, theta: &[f64], indices: &[usize]) -> f64 {
        indices
            .iter()
            .map(|&i| self.log_like_point(theta, i))
            .sum()
    }
}

/// Ad-hoc model from a pair of closures. The workhorse for tests, for
/// wrapping likelihoods that only exist as formulas, and for building
/// derived models (tempered, power-prior, ...) on the fly.
pub struct FnModel<L, P>
where
    L: Fn(&[f64]) -> f64 + Sync,
    P: Fn(&[f64]) -> f64 + Sync,
{
    space: ParamSpace,
    log_like: L,
    log_prior: P,
    proper: bool,
    norm_known: bool,
}

impl<L, P> FnModel<L, P>
where
    L: Fn(&[f64]) -> f64 + Sync,
    P: Fn(&[f64]) -> f64 + Sync,
{
    /// Model with a proper, normalized prior.
    pub fn new(space: ParamSpace, log_like: L, log_prior: P) -> Self {
        FnModel {
            space,
            log_like,
            log_prior,
            proper: true,
            norm_known: true,
        }
    }

    /// Mark the prior as improper (used as a baseline weight only).
    pub fn improper(mut self) -> Self {
        self.proper = false;
        self.norm_known = false;
        self
    }

    /// Mark the prior as proper but normalized only up to a constant.
    pub fn unnormalized(mut self) -> Self {
        self.norm_known = false;
        self
    }
}

impl<L, P> BayesModel for FnModel<L, P>
where
    L: Fn(&[f64]) -> f64 + Sync,
    P: Fn(&[f64]) -> f64 + Sync,
{
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        (self.log_like)(theta)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        (self.log_prior)(theta)
    }

    fn prior_is_proper(&self) -> bool {
        self.proper
    }

    fn prior_log_norm_known(&self) -> bool {
        self.norm_known
    }
}
