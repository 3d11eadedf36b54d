//! Evidence constructions that stay meaningful when the prior is improper
//! or arbitrarily diffuse.
//!
//! Every function here forms a ratio of two integrals against the same
//! baseline weight, so any constant scale on that weight cancels: the
//! numerator carries the full likelihood (possibly raised or augmented) and
//! the denominator normalizes with a tempered, trained, or historical
//! factor. On top of the ratio family sit hyperparameter selection by
//! evidence maximization and marginalization over a hyperprior.
//!
//! Numerical hygiene: baseline log-densities are centered by their value at
//! the window center before exponentiation. The shift cancels exactly in
//! every ratio, and it makes results from a flat baseline bit-identical
//! under rescaling of that baseline.

use crate::error::{Error, Result};
use crate::evidence::{bayes_factor, BayesFactorReport, EvidenceMethod, EvidenceResult};
use crate::logspace::log_sum_exp;
use crate::model::{BayesModel, SubsetLikelihood};
use crate::quadrature::Integrator;

/// Log-density surface over the parameter, passed wherever a construction
/// takes an extra likelihood term (historical data, training subsets, new
/// observations).
pub type LogDensity<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

/// Default training fraction for a dataset of `n` observations: one
/// observation's worth, β = 1/n.
pub fn minimal_training_beta(n: usize) -> f64 {
    assert!(n >= 1, "training fraction needs a nonempty dataset");
    1.0 / n as f64
}

/// Exponents on likelihood factors must keep the denominator integrable and
/// never exceed the data's own weight.
fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "likelihood exponent must lie in (0, 1], got {beta}"
        )));
    }
    Ok(())
}

/// Additive constant removed from every baseline log-density evaluation.
/// Evaluated once at the window center; zero when the baseline vanishes
/// there, since any finite anchor works equally well.
fn centering_constant<M: BayesModel + ?Sized>(model: &M) -> f64 {
    let anchor = model.space().window_center();
    let k = model.log_prior(&anchor);
    if k.is_finite() {
        k
    } else {
        0.0
    }
}

fn ratio_result(num: f64, den: f64, method: EvidenceMethod) -> Result<EvidenceResult> {
    if den == f64::NEG_INFINITY {
        return Err(Error::NonNormalizable(
            "ratio denominator integrates to zero; the implied prior cannot \
             be normalized"
                .into(),
        ));
    }
    Ok(EvidenceResult::with_method(num - den, method))
}

/// Split of observation indices 0..n into a training block and a test
/// block. The two blocks are disjoint, nonempty, and together cover every
/// index exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataPartition {
    train: Vec<usize>,
    test: Vec<usize>,
    n: usize,
}

impl DataPartition {
    pub fn new(n: usize, train: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::InvalidArgument(
                "both partition blocks must be nonempty".into(),
            ));
        }
        let mut seen = vec![false; n];
        for &i in train.iter().chain(test.iter()) {
            if i >= n {
                return Err(Error::InvalidArgument(format!(
                    "index {i} out of range for {n} observations"
                )));
            }
            if seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "index {i} appears twice in the partition"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidArgument(
                "partition blocks must cover every observation".into(),
            ));
        }
        Ok(DataPartition { train, test, n })
    }

    /// First `k` observations train, the rest test.
    pub fn prefix(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!(
                "prefix length {k} must satisfy 1 <= k < n = {n}"
            )));
        }
        Self::new(n, (0..k).collect(), (k..n).collect())
    }

    /// All n single-observation training sets, one partition per index.
    pub fn leave_one_in(n: usize) -> Result<Vec<Self>> {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "leave-one-in needs at least two observations".into(),
            ));
        }
        (0..n)
            .map(|i| {
                let test = (0..n).filter(|&j| j != i).collect();
                Self::new(n, vec![i], test)
            })
            .collect()
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    fn check_model(&self, n_obs: usize) -> Result<()> {
        if self.n != n_obs {
            return Err(Error::LengthMismatch(format!(
                "partition covers {} observations but the model holds {n_obs}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Evidence with the squared likelihood in the numerator:
/// `Z = ∫ ℓ² g̃ / ∫ ℓ g̃`. Equivalent to using the baseline posterior
/// itself as the prior. Special case β = 1 of [`tempered_evidence`].
pub fn idea1_evidence<M, I>(model: &M, integrator: &I) -> Result<EvidenceResult>
where
    M: BayesModel + ?Sized,
    I: Integrator + ?Sized,
{
    tempered_evidence(model, 1.0, integrator)
}

/// Evidence with a tempered-posterior prior:
/// `Z(β) = ∫ ℓ^(β+1) g̃ / ∫ ℓ^β g̃` for β in (0, 1].
///
/// β = 1 recovers [`idea1_evidence`] bit for bit; β → 0 approaches the
/// evidence under the baseline restricted to the window and normalized
/// there.
pub fn tempered_evidence<M, I>(model: &M, beta: f64, integrator: &I) -> Result<EvidenceResult>
where
    M: BayesModel + ?Sized,
    I: Integrator + ?Sized,
{
    check_beta(beta)?;
    let k = centering_constant(model);
    let up = beta + 1.0;
    let num = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        up * model.log_like(t) + lp
    })?;
    let den = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        beta * model.log_like(t) + lp
    })?;
    ratio_result(num, den, EvidenceMethod::LikelihoodPrior)
}

/// Evidence with the training-block posterior as prior:
/// `Z = ∫ ℓ_full g̃ / ∫ ℓ_train g̃`. The likelihood must factorize per
/// observation for the training restriction to mean anything.
pub fn subset_prior_evidence<M, I>(
    model: &M,
    partition: &DataPartition,
    integrator: &I,
) -> Result<EvidenceResult>
where
    M: SubsetLikelihood + ?Sized,
    I: Integrator + ?Sized,
{
    partition.check_model(model.n_obs())?;
    let k = centering_constant(model);
    let num = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        model.log_like(t) + lp
    })?;
    let den = training_integral(model, partition, integrator, k)?;
    ratio_result(num, den, EvidenceMethod::LikelihoodPrior)
}

fn training_integral<M, I>(
    model: &M,
    partition: &DataPartition,
    integrator: &I,
    k: f64,
) -> Result<f64>
where
    M: SubsetLikelihood + ?Sized,
    I: Integrator + ?Sized,
{
    integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        model.log_like_subset(t, partition.train()) + lp
    })
}

/// Arithmetic mean of [`subset_prior_evidence`] over several partitions,
/// computed with one shared numerator integral and averaged in log space.
pub fn averaged_subset_evidence<M, I>(
    model: &M,
    partitions: &[DataPartition],
    integrator: &I,
) -> Result<EvidenceResult>
where
    M: SubsetLikelihood + ?Sized,
    I: Integrator + ?Sized,
{
    if partitions.is_empty() {
        return Err(Error::EmptyData("partition list"));
    }
    let k = centering_constant(model);
    let num = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        model.log_like(t) + lp
    })?;
    let mut terms = Vec::with_capacity(partitions.len());
    for p in partitions {
        p.check_model(model.n_obs())?;
        let den = training_integral(model, p, integrator, k)?;
        if den == f64::NEG_INFINITY {
            return Err(Error::NonNormalizable(
                "a training block has zero likelihood mass".into(),
            ));
        }
        terms.push(num - den);
    }
    let log_z = log_sum_exp(&terms) - (terms.len() as f64).ln();
    Ok(EvidenceResult::with_method(
        log_z,
        EvidenceMethod::LikelihoodPrior,
    ))
}

/// Partial Bayes factor: both models are normalized by the evidence of the
/// same training block before being compared, which cancels the arbitrary
/// constants of improper baselines on both sides.
pub fn partial_bf<A, B, I, J>(
    num_model: &A,
    den_model: &B,
    partition: &DataPartition,
    num_integrator: &I,
    den_integrator: &J,
) -> Result<BayesFactorReport>
where
    A: SubsetLikelihood + ?Sized,
    B: SubsetLikelihood + ?Sized,
    I: Integrator + ?Sized,
    J: Integrator + ?Sized,
{
    let zn = trained_evidence(num_model, partition, num_integrator)?;
    let zd = trained_evidence(den_model, partition, den_integrator)?;
    bayes_factor(
        &zn,
        &zd,
        format!(
            "partial Bayes factor, trained on {} of {} observations",
            partition.train().len(),
            partition.n_obs()
        ),
    )
}

fn trained_evidence<M, I>(
    model: &M,
    partition: &DataPartition,
    integrator: &I,
) -> Result<EvidenceResult>
where
    M: SubsetLikelihood + ?Sized,
    I: Integrator + ?Sized,
{
    partition.check_model(model.n_obs())?;
    let k = centering_constant(model);
    let num = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        model.log_like(t) + lp
    })?;
    let den = training_integral(model, partition, integrator, k)?;
    ratio_result(num, den, EvidenceMethod::BaselineRatio)
}

/// Fractional-training evidence: `Z(β) = ∫ ℓ g̃ / ∫ ℓ^β g̃`, the whole
/// likelihood normalized by a β-weighted share of itself. β = 1 gives
/// exactly log Z = 0.
pub fn fractional_evidence<M, I>(model: &M, beta: f64, integrator: &I) -> Result<EvidenceResult>
where
    M: BayesModel + ?Sized,
    I: Integrator + ?Sized,
{
    check_beta(beta)?;
    let k = centering_constant(model);
    let num = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        model.log_like(t) + lp
    })?;
    let den = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        beta * model.log_like(t) + lp
    })?;
    ratio_result(num, den, EvidenceMethod::BaselineRatio)
}

/// Fractional Bayes factor: ratio of [`fractional_evidence`] values at a
/// common training fraction.
pub fn fractional_bf<A, B, I, J>(
    num_model: &A,
    den_model: &B,
    beta: f64,
    num_integrator: &I,
    den_integrator: &J,
) -> Result<BayesFactorReport>
where
    A: BayesModel + ?Sized,
    B: BayesModel + ?Sized,
    I: Integrator + ?Sized,
    J: Integrator + ?Sized,
{
    let zn = fractional_evidence(num_model, beta, num_integrator)?;
    let zd = fractional_evidence(den_model, beta, den_integrator)?;
    bayes_factor(
        &zn,
        &zd,
        format!("fractional Bayes factor, training fraction beta = {beta}"),
    )
}

/// Evidence under a power prior built from historical data:
/// `Z = ∫ ℓ ℓ_hist^β g̃ / ∫ ℓ_hist^β g̃`, with `log_like_hist` the log
/// likelihood of the historical dataset as a function of the parameter.
/// Feeding the model's own likelihood back in reproduces
/// [`tempered_evidence`].
pub fn power_prior_evidence<M, I>(
    model: &M,
    log_like_hist: &LogDensity<'_>,
    beta: f64,
    integrator: &I,
) -> Result<EvidenceResult>
where
    M: BayesModel + ?Sized,
    I: Integrator + ?Sized,
{
    check_beta(beta)?;
    let k = centering_constant(model);
    let num = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        model.log_like(t) + beta * log_like_hist(t) + lp
    })?;
    let den = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        beta * log_like_hist(t) + lp
    })?;
    ratio_result(num, den, EvidenceMethod::LikelihoodPrior)
}

/// Evidence under an expected-posterior prior: the prior is the average of
/// the posteriors induced by each training likelihood, so the evidence is
/// the mean of the per-training ratios
/// `∫ ℓ ℓ_r g̃ / ∫ ℓ_r g̃`.
///
/// Errors with [`Error::NonNormalizable`] if any training posterior has
/// zero mass.
pub fn expected_posterior_evidence<M, I>(
    model: &M,
    training: &[&LogDensity<'_>],
    integrator: &I,
) -> Result<EvidenceResult>
where
    M: BayesModel + ?Sized,
    I: Integrator + ?Sized,
{
    if training.is_empty() {
        return Err(Error::EmptyData("training likelihood list"));
    }
    let k = centering_constant(model);
    let mut terms = Vec::with_capacity(training.len());
    for (r, llh) in training.iter().enumerate() {
        let den = integrator.log_integral(&|t: &[f64]| {
            let lp = model.log_prior(t) - k;
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            llh(t) + lp
        })?;
        if den == f64::NEG_INFINITY {
            return Err(Error::NonNormalizable(format!(
                "training set {r} has zero likelihood mass; its posterior \
                 cannot enter the prior mixture"
            )));
        }
        let num = integrator.log_integral(&|t: &[f64]| {
            let lp = model.log_prior(t) - k;
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            model.log_like(t) + llh(t) + lp
        })?;
        terms.push(num - den);
    }
    let log_z = log_sum_exp(&terms) - (terms.len() as f64).ln();
    Ok(EvidenceResult::with_method(
        log_z,
        EvidenceMethod::LikelihoodPrior,
    ))
}

/// [`expected_posterior_evidence`] with the training likelihoods taken from
/// blocks of the model's own data.
pub fn expected_posterior_evidence_subsets<M, I>(
    model: &M,
    partitions: &[DataPartition],
    integrator: &I,
) -> Result<EvidenceResult>
where
    M: SubsetLikelihood + ?Sized,
    I: Integrator + ?Sized,
{
    for p in partitions {
        p.check_model(model.n_obs())?;
    }
    let closures: Vec<Box<LogDensity<'_>>> = partitions
        .iter()
        .map(|p| {
            let train = p.train().to_vec();
            Box::new(move |t: &[f64]| model.log_like_subset(t, &train))
                as Box<LogDensity<'_>>
        })
        .collect();
    let refs: Vec<&LogDensity<'_>> =
        closures.iter().map(|b| b.as_ref() as _).collect();
    expected_posterior_evidence(model, &refs, integrator)
}

/// Log posterior predictive density of new data:
/// `ln p(new | data) = ln ∫ ℓ_new ℓ g̃ - ln ∫ ℓ g̃`, with `log_like_new`
/// the log likelihood of the new observations as a function of the
/// parameter.
pub fn posterior_predictive_log<M, I>(
    model: &M,
    log_like_new: &LogDensity<'_>,
    integrator: &I,
) -> Result<f64>
where
    M: BayesModel + ?Sized,
    I: Integrator + ?Sized,
{
    let k = centering_constant(model);
    let num = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        log_like_new(t) + model.log_like(t) + lp
    })?;
    let den = integrator.log_integral(&|t: &[f64]| {
        let lp = model.log_prior(t) - k;
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        model.log_like(t) + lp
    })?;
    if den == f64::NEG_INFINITY {
        return Err(Error::NonNormalizable(
            "posterior has zero mass on the window; predictive density \
             undefined"
                .into(),
        ));
    }
    Ok(num - den)
}

/// Winner of an evidence scan over hyperparameter candidates.
#[derive(Clone, Debug)]
pub struct EmpiricalBayesChoice {
    pub index: usize,
    pub hyper: f64,
    pub result: EvidenceResult,
}

/// Pick the hyperparameter with the largest evidence. Ties keep the
/// earliest candidate, so a deterministic candidate order gives a
/// deterministic choice.
pub fn empirical_bayes(
    hypers: &[f64],
    mut eval: impl FnMut(f64) -> Result<EvidenceResult>,
) -> Result<EmpiricalBayesChoice> {
    if hypers.is_empty() {
        return Err(Error::EmptyData("hyperparameter candidates"));
    }
    let mut best: Option<EmpiricalBayesChoice> = None;
    for (index, &hyper) in hypers.iter().enumerate() {
        let result = eval(hyper)?;
        if result.log_z.is_nan() {
            return Err(Error::NonFinite(format!(
                "evidence at hyperparameter {hyper} is NaN"
            )));
        }
        let better = match &best {
            None => true,
            Some(b) => result.log_z > b.result.log_z,
        };
        if better {
            best = Some(EmpiricalBayesChoice {
                index,
                hyper,
                result,
            });
        }
    }
    Ok(best.expect("candidate list is nonempty"))
}

/// Discrete hyperprior: nodes with log prior masses. Weights must sum to 1,
/// so constructing one doubles as a propriety assertion.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperPriorSpec {
    nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl HyperPriorSpec {
    /// Midpoint discretization of a uniform density on [lo, hi]: n nodes,
    /// each carrying mass 1/n.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "uniform hyperprior needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "uniform hyperprior needs at least one node".into(),
            ));
        }
        let h = (hi - lo) / n as f64;
        let log_w = -(n as f64).ln();
        Ok(HyperPriorSpec {
            nodes: (0..n).map(|j| lo + (j as f64 + 0.5) * h).collect(),
            log_weights: vec![log_w; n],
        })
    }

    /// All mass on a single hyperparameter value.
    pub fn point_mass(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "point mass needs a finite node, got {nu}"
            )));
        }
        Ok(HyperPriorSpec {
            nodes: vec![nu],
            log_weights: vec![0.0],
        })
    }

    /// Explicit nodes and log masses; the masses must sum to 1 within 1e-6.
    pub fn from_nodes(nodes: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyData("hyperprior nodes"));
        }
        if nodes.len() != log_weights.len() {
            return Err(Error::LengthMismatch(format!(
                "{} nodes but {} weights",
                nodes.len(),
                log_weights.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("hyperprior node".into()));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::NonFinite("hyperprior weight".into()));
        }
        let total = log_sum_exp(&log_weights);
        if total.abs() > 1e-6 {
            return Err(Error::NonNormalizable(format!(
                "hyperprior masses sum to exp({total:.3e}), not 1"
            )));
        }
        Ok(HyperPriorSpec { nodes, log_weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
}

/// Marginalize the evidence over a hyperprior:
/// `Z = Σ_j Z(ν_j) w_j` on the log scale. A point mass returns the
/// evidence at its node unchanged.
pub fn hierarchical_evidence(
    hyper: &HyperPriorSpec,
    mut eval: impl FnMut(f64) -> Result<EvidenceResult>,
) -> Result<EvidenceResult> {
    let mut terms = Vec::with_capacity(hyper.nodes.len());
    for (&nu, &lw) in hyper.nodes.iter().zip(hyper.log_weights.iter()) {
        let r = eval(nu)?;
        if r.log_z.is_nan() {
            return Err(Error::NonFinite(format!(
                "evidence at hypernode {nu} is NaN"
            )));
        }
        terms.push(r.log_z + lw);
    }
    Ok(EvidenceResult::with_method(
        log_sum_exp(&terms),
        EvidenceMethod::Hierarchical,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::{normal_logpdf, GaussianMeanModel, GaussianMeanObserved};
    use crate::discrete::{
        geometric_log_evidence, poisson_log_evidence, poisson_log_pmf, GeometricObserved,
        PoissonObserved, PoissonPrior,
    };
    use crate::model::{DimSpec, FnModel, ParamSpace};
    use crate::quadrature::GridIntegrator;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// One Gaussian observation with a flat improper weight on the mean,
    /// shifted by a constant on the log scale.
    fn flat_gaussian(
        y: f64,
        sigma: f64,
        half_width: f64,
        log_shift: f64,
    ) -> FnModel<impl Fn(&[f64]) -> f64 + Sync, impl Fn(&[f64]) -> f64 + Sync> {
        let space = ParamSpace::truncated(
            vec![DimSpec {
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
                window: (y - half_width, y + half_width),
            }],
            "window spans many likelihood widths around the datum",
        )
        .unwrap();
        FnModel::new(
            space,
            move |t: &[f64]| normal_logpdf(y, t[0], sigma),
            move |_: &[f64]| log_shift,
        )
        .improper()
    }

    /// Poisson counts under a flat improper rate weight with an adjustable
    /// log-scale constant, for shift-invariance checks on subset paths.
    struct ShiftedPoisson {
        data: Vec<u64>,
        space: ParamSpace,
        shift: f64,
    }

    impl ShiftedPoisson {
        fn new(data: Vec<u64>, upper: f64, shift: f64) -> Self {
            ShiftedPoisson {
                data,
                space: ParamSpace::bounded(&[(0.0, upper)]).unwrap(),
                shift,
            }
        }
    }

    impl crate::model::BayesModel for ShiftedPoisson {
        fn space(&self) -> &ParamSpace {
            &self.space
        }
        fn log_like(&self, t: &[f64]) -> f64 {
            self.data.iter().map(|&y| poisson_log_pmf(y, t[0])).sum()
        }
        fn log_prior(&self, _: &[f64]) -> f64 {
            self.shift
        }
        fn prior_is_proper(&self) -> bool {
            false
        }
        fn prior_log_norm_known(&self) -> bool {
            false
        }
    }

    impl SubsetLikelihood for ShiftedPoisson {
        fn n_obs(&self) -> usize {
            self.data.len()
        }
        fn log_like_point(&self, t: &[f64], i: usize) -> f64 {
            poisson_log_pmf(self.data[i], t[0])
        }
    }

    #[test]
    fn idea1_gaussian_single_datum_closed_form() {
        // ∫ N(y; θ, σ)² dθ = 1/(2σ√π) and ∫ N(y; θ, σ) dθ = 1.
        let sigma = 0.9;
        let model = flat_gaussian(1.7, sigma, 14.0 * sigma, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 400_000).unwrap();
        let z = idea1_evidence(&model, &integrator).unwrap();
        let expected = (2.0 * sigma * PI.sqrt()).recip().ln();
        assert_abs_diff_eq!(z.log_z, expected, epsilon = 1e-8);
        assert_eq!(z.method, EvidenceMethod::LikelihoodPrior);
    }

    #[test]
    fn tempered_at_one_is_bitwise_idea1() {
        let model = flat_gaussian(0.4, 1.3, 16.0, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 150_000).unwrap();
        let a = idea1_evidence(&model, &integrator).unwrap().log_z;
        let b = tempered_evidence(&model, 1.0, &integrator).unwrap().log_z;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn tempered_small_beta_approaches_window_uniform() {
        let sigma = 1.0;
        let hw = 12.0;
        let model = flat_gaussian(0.0, sigma, hw, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 200_000).unwrap();
        let z = tempered_evidence(&model, 1e-6, &integrator).unwrap().log_z;
        // Likelihood integrates to 1 over the wide window, so the uniform
        // evidence is 1/(window width).
        let expected = -(2.0 * hw).ln();
        assert_abs_diff_eq!(z, expected, epsilon = 1e-4);
    }

    #[test]
    fn beta_validation_rejects_out_of_range() {
        let model = flat_gaussian(0.0, 1.0, 10.0, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 1000).unwrap();
        for bad in [0.0, -0.3, 1.5, f64::NAN, f64::INFINITY] {
            assert!(tempered_evidence(&model, bad, &integrator).is_err());
            assert!(fractional_evidence(&model, bad, &integrator).is_err());
        }
    }

    #[test]
    fn subset_evidence_matches_closed_form_ratio() {
        let data = vec![1u64, 2, 0, 3];
        let model = PoissonObserved::new(data.clone(), PoissonPrior::ImproperFlat).unwrap();
        let integrator = GridIntegrator::for_space(model.space(), 400_000).unwrap();
        let part = DataPartition::prefix(4, 2).unwrap();
        let z = subset_prior_evidence(&model, &part, &integrator).unwrap();
        let expected = poisson_log_evidence(&data, PoissonPrior::ImproperFlat).unwrap()
            - poisson_log_evidence(&data[..2], PoissonPrior::ImproperFlat).unwrap();
        assert_abs_diff_eq!(z.log_z, expected, epsilon = 1e-6);
    }

    #[test]
    fn averaged_subset_matches_per_partition_mean() {
        let data = vec![1u64, 2, 0, 3];
        let model = PoissonObserved::new(data.clone(), PoissonPrior::ImproperFlat).unwrap();
        let integrator = GridIntegrator::for_space(model.space(), 300_000).unwrap();
        let parts = vec![
            DataPartition::new(4, vec![0, 1], vec![2, 3]).unwrap(),
            DataPartition::new(4, vec![2, 3], vec![0, 1]).unwrap(),
        ];
        let avg = averaged_subset_evidence(&model, &parts, &integrator)
            .unwrap()
            .log_z;
        let zf = poisson_log_evidence(&data, PoissonPrior::ImproperFlat).unwrap();
        let r1 = zf - poisson_log_evidence(&data[..2], PoissonPrior::ImproperFlat).unwrap();
        let r2 = zf - poisson_log_evidence(&data[2..], PoissonPrior::ImproperFlat).unwrap();
        let expected = (0.5 * (r1.exp() + r2.exp())).ln();
        assert_abs_diff_eq!(avg, expected, epsilon = 1e-6);
    }

    #[test]
    fn averaged_subset_with_singleton_training_recovers_full_ratio_mean() {
        let data = vec![2u64, 0, 3];
        let model = PoissonObserved::new(data.clone(), PoissonPrior::ImproperFlat).unwrap();
        let integrator = GridIntegrator::for_space(model.space(), 300_000).unwrap();
        let parts = DataPartition::leave_one_in(3).unwrap();
        let avg = averaged_subset_evidence(&model, &parts, &integrator)
            .unwrap()
            .log_z;
        // Every single-count flat-Poisson training evidence is exactly 1,
        // so the average collapses to the full improper evidence.
        let expected = poisson_log_evidence(&data, PoissonPrior::ImproperFlat).unwrap();
        assert_abs_diff_eq!(avg, expected, epsilon = 1e-6);
    }

    #[test]
    fn partial_bf_matches_intrinsic_summand() {
        let data = vec![2u64, 0, 3];
        let pois = PoissonObserved::new(data.clone(), PoissonPrior::ImproperFlat).unwrap();
        let geo = GeometricObserved::new(data.clone()).unwrap();
        let int_p = GridIntegrator::for_space(pois.space(), 400_000).unwrap();
        let int_g = GridIntegrator::for_space(geo.space(), 400_000).unwrap();
        let part = DataPartition::new(3, vec![1], vec![0, 2]).unwrap();
        let report = partial_bf(&pois, &geo, &part, &int_p, &int_g).unwrap();
        let z1f = poisson_log_evidence(&data, PoissonPrior::ImproperFlat).unwrap();
        let z1t = poisson_log_evidence(&data[1..2], PoissonPrior::ImproperFlat).unwrap();
        let z2f = geometric_log_evidence(&data).unwrap();
        let z2t = geometric_log_evidence(&data[1..2]).unwrap();
        let expected = (z1f - z1t) - (z2f - z2t);
        assert_abs_diff_eq!(report.log_bf, expected, epsilon = 1e-6);
        assert!(report.recipe.contains("trained on 1 of 3"));
    }

    #[test]
    fn fractional_beta_one_is_exactly_unity() {
        let model = flat_gaussian(2.3, 0.7, 10.0, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 120_000).unwrap();
        let z = fractional_evidence(&model, 1.0, &integrator).unwrap().log_z;
        assert_eq!(z.to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn fractional_gaussian_closed_form() {
        // ∫ N^β dθ = (2πσ²)^((1-β)/2) / √β on an unbounded window, so
        // log Z(β) = -((1-β)/2) ln(2πσ²) + (ln β)/2.
        let sigma = 1.4;
        let beta = 0.25;
        let model = flat_gaussian(-0.6, sigma, 16.0 * sigma, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 400_000).unwrap();
        let z = fractional_evidence(&model, beta, &integrator).unwrap().log_z;
        let expected = -(1.0 - beta) / 2.0 * (2.0 * PI * sigma * sigma).ln() + beta.ln() / 2.0;
        assert_abs_diff_eq!(z, expected, epsilon = 1e-8);
    }

    #[test]
    fn fractional_bf_of_model_against_itself_is_zero() {
        let model = flat_gaussian(0.0, 1.0, 12.0, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 50_000).unwrap();
        let report = fractional_bf(&model, &model, 0.5, &integrator, &integrator).unwrap();
        assert_eq!(report.log_bf, 0.0);
        assert!(report.recipe.contains("beta = 0.5"));
    }

    #[test]
    fn power_prior_on_own_data_equals_tempering() {
        let prior = GaussianMeanModel::new(1.0, 0.0, 3.0).unwrap();
        let model = GaussianMeanObserved::new(prior, vec![1.0, 2.5]).unwrap();
        let integrator = GridIntegrator::for_space(model.space(), 300_000).unwrap();
        let beta = 0.37;
        let own = |t: &[f64]| model.log_like(t);
        let a = power_prior_evidence(&model, &own, beta, &integrator)
            .unwrap()
            .log_z;
        let b = tempered_evidence(&model, beta, &integrator).unwrap().log_z;
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn expected_posterior_two_singleton_trainings_gaussian() {
        // Flat baseline: the posterior from one training value a is
        // N(θ; a, σ), so each mixture component's evidence for datum y is
        // N(y; a, √2 σ).
        let sigma = 1.0;
        let y = 0.8;
        let model = flat_gaussian(y, sigma, 18.0, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 400_000).unwrap();
        let (a, b) = (-0.5, 1.9);
        let ta = move |t: &[f64]| normal_logpdf(a, t[0], sigma);
        let tb = move |t: &[f64]| normal_logpdf(b, t[0], sigma);
        let z = expected_posterior_evidence(&model, &[&ta, &tb], &integrator)
            .unwrap()
            .log_z;
        let s2 = (2.0f64).sqrt() * sigma;
        let expected = (0.5
            * (normal_logpdf(y, a, s2).exp() + normal_logpdf(y, b, s2).exp()))
        .ln();
        assert_abs_diff_eq!(z, expected, epsilon = 1e-8);
    }

    #[test]
    fn expected_posterior_subset_route_matches_closure_route() {
        let data = vec![1u64, 3, 0, 2];
        let model = PoissonObserved::new(data, PoissonPrior::ImproperFlat).unwrap();
        let integrator = GridIntegrator::for_space(model.space(), 200_000).unwrap();
        let parts = vec![
            DataPartition::prefix(4, 2).unwrap(),
            DataPartition::new(4, vec![2, 3], vec![0, 1]).unwrap(),
        ];
        let via_subsets = expected_posterior_evidence_subsets(&model, &parts, &integrator)
            .unwrap()
            .log_z;
        let c0 = |t: &[f64]| model.log_like_subset(t, &[0, 1]);
        let c1 = |t: &[f64]| model.log_like_subset(t, &[2, 3]);
        let via_closures = expected_posterior_evidence(&model, &[&c0, &c1], &integrator)
            .unwrap()
            .log_z;
        assert_eq!(via_subsets.to_bits(), via_closures.to_bits());
    }

    #[test]
    fn expected_posterior_rejects_zero_mass_training() {
        let model = flat_gaussian(0.0, 1.0, 10.0, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 2_000).unwrap();
        let dead = |_: &[f64]| f64::NEG_INFINITY;
        let err = expected_posterior_evidence(&model, &[&dead], &integrator).unwrap_err();
        assert!(matches!(err, Error::NonNormalizable(_)));
    }

    #[test]
    fn posterior_predictive_matches_conjugate_form() {
        let sigma = 1.1;
        let prior = GaussianMeanModel::new(sigma, 0.3, 2.0).unwrap();
        let data = vec![1.3, -0.4, 2.9, 0.75];
        let model = GaussianMeanObserved::new(prior.clone(), data.clone()).unwrap();
        let integrator = GridIntegrator::for_space(model.space(), 400_000).unwrap();
        let y_new = 0.5;
        let ll_new = move |t: &[f64]| normal_logpdf(y_new, t[0], sigma);
        let lp = posterior_predictive_log(&model, &ll_new, &integrator).unwrap();
        let (mu_post, sd_post) = prior.posterior(&data).unwrap();
        let expected = normal_logpdf(y_new, mu_post, (sd_post * sd_post + sigma * sigma).sqrt());
        assert_abs_diff_eq!(lp, expected, epsilon = 1e-8);
    }

    #[test]
    fn predicting_own_data_under_flat_weight_is_bitwise_idea1() {
        let (y, sigma) = (1.7, 0.9);
        let model = flat_gaussian(y, sigma, 14.0 * sigma, 0.0);
        let integrator = GridIntegrator::for_space(model.space(), 150_000).unwrap();
        let again = move |t: &[f64]| normal_logpdf(y, t[0], sigma);
        let pp = posterior_predictive_log(&model, &again, &integrator).unwrap();
        let z1 = idea1_evidence(&model, &integrator).unwrap().log_z;
        assert_eq!(pp.to_bits(), z1.to_bits());
    }

    #[test]
    fn empirical_bayes_finds_evidence_peak() {
        let data = vec![1.3, -0.4, 2.9, 0.75, 1.05, -1.6];
        let hypers: Vec<f64> = (0..60).map(|i| 0.05 * (i as f64 + 1.0)).collect();
        let eval = |s0: f64| GaussianMeanModel::new(1.0, 0.0, s0)?.log_evidence(&data);
        let choice = empirical_bayes(&hypers, eval).unwrap();
        // Independent scan.
        let mut best_i = 0;
        let mut best_z = f64::NEG_INFINITY;
        for (i, &s0) in hypers.iter().enumerate() {
            let z = GaussianMeanModel::new(1.0, 0.0, s0)
                .unwrap()
                .log_evidence(&data)
                .unwrap()
                .log_z;
            if z > best_z {
                best_z = z;
                best_i = i;
            }
        }
        assert_eq!(choice.index, best_i);
        assert_eq!(choice.hyper, hypers[best_i]);
        assert_eq!(choice.result.log_z, best_z);
        assert!(choice.index > 0 && choice.index < hypers.len() - 1);
    }

    #[test]
    fn empirical_bayes_tie_keeps_first_candidate() {
        let hypers = [4.0, 2.0, 7.0];
        let choice =
            empirical_bayes(&hypers, |_| Ok(EvidenceResult::closed_form(-1.0))).unwrap();
        assert_eq!(choice.index, 0);
        assert_eq!(choice.hyper, 4.0);
    }

    #[test]
    fn hierarchical_point_mass_is_identity() {
        let spec = HyperPriorSpec::point_mass(3.3).unwrap();
        let z = hierarchical_evidence(&spec, |nu| {
            assert_eq!(nu, 3.3);
            Ok(EvidenceResult::closed_form(-4.2))
        })
        .unwrap();
        assert_eq!(z.log_z.to_bits(), (-4.2f64).to_bits());
        assert_eq!(z.method, EvidenceMethod::Hierarchical);
    }

    #[test]
    fn hierarchical_constant_evidence_passes_through() {
        let spec = HyperPriorSpec::uniform(0.0, 1.0, 7).unwrap();
        let z = hierarchical_evidence(&spec, |_| Ok(EvidenceResult::closed_form(-2.5))).unwrap();
        assert_abs_diff_eq!(z.log_z, -2.5, epsilon = 1e-12);
    }

    #[test]
    fn hierarchical_uniform_matches_direct_average() {
        let spec = HyperPriorSpec::uniform(1.0, 3.0, 4).unwrap();
        let z = hierarchical_evidence(&spec, |nu| Ok(EvidenceResult::closed_form(nu.ln())))
            .unwrap()
            .log_z;
        let mean: f64 = spec.nodes().iter().sum::<f64>() / 4.0;
        assert_abs_diff_eq!(z, mean.ln(), epsilon = 1e-12);
    }

    #[test]
    fn hyperprior_validation() {
        assert!(HyperPriorSpec::uniform(2.0, 1.0, 5).is_err());
        assert!(HyperPriorSpec::uniform(0.0, 1.0, 0).is_err());
        assert!(HyperPriorSpec::point_mass(f64::NAN).is_err());
        let bad = HyperPriorSpec::from_nodes(vec![0.0, 1.0], vec![0.0, 0.0]);
        assert!(matches!(bad.unwrap_err(), Error::NonNormalizable(_)));
        let ok = HyperPriorSpec::from_nodes(
            vec![0.0, 1.0],
            vec![0.5f64.ln(), 0.5f64.ln()],
        );
        assert!(ok.is_ok());
        assert!(HyperPriorSpec::from_nodes(vec![0.0], vec![0.1, 0.2]).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(DataPartition::new(4, vec![0, 1], vec![1, 2, 3]).is_err());
        assert!(DataPartition::new(4, vec![0], vec![2, 3]).is_err());
        assert!(DataPartition::new(4, vec![0, 7], vec![1, 2, 3]).is_err());
        assert!(DataPartition::new(3, vec![], vec![0, 1, 2]).is_err());
        assert!(DataPartition::prefix(5, 0).is_err());
        assert!(DataPartition::prefix(5, 5).is_err());
        let p = DataPartition::prefix(5, 2).unwrap();
        assert_eq!(p.train(), &[0, 1]);
        assert_eq!(p.test(), &[2, 3, 4]);
        let all = DataPartition::leave_one_in(3).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[1].train(), &[1]);
        assert_eq!(all[1].test(), &[0, 2]);
    }

    #[test]
    fn minimal_training_fraction() {
        assert_eq!(minimal_training_beta(4), 0.25);
        assert_eq!(minimal_training_beta(1), 1.0);
    }

    #[test]
    #[should_panic]
    fn minimal_training_fraction_rejects_empty() {
        minimal_training_beta(0);
    }

    #[test]
    fn flat_baseline_rescaling_leaves_subset_paths_bit_identical() {
        let data = vec![1u64, 2, 0, 3];
        let base = ShiftedPoisson::new(data.clone(), 60.0, 0.0);
        let shifted = ShiftedPoisson::new(data, 60.0, 17.3);
        let integrator = GridIntegrator::for_space(base.space(), 100_000).unwrap();
        let part = DataPartition::prefix(4, 2).unwrap();
        let a = subset_prior_evidence(&base, &part, &integrator).unwrap().log_z;
        let b = subset_prior_evidence(&shifted, &part, &integrator)
            .unwrap()
            .log_z;
        assert_eq!(a.to_bits(), b.to_bits());
        let pa = averaged_subset_evidence(
            &base,
            &DataPartition::leave_one_in(4).unwrap(),
            &integrator,
        )
        .unwrap()
        .log_z;
        let pb = averaged_subset_evidence(
            &shifted,
            &DataPartition::leave_one_in(4).unwrap(),
            &integrator,
        )
        .unwrap()
        .log_z;
        assert_eq!(pa.to_bits(), pb.to_bits());
    }

    #[test]
    fn proper_prior_unnormalized_shift_is_tolerably_invariant() {
        let sigma = 1.0;
        let y = 0.9;
        let space = ParamSpace::bounded(&[(-12.0, 12.0)]).unwrap();
        let like = move |t: &[f64]| normal_logpdf(y, t[0], sigma);
        let prior = |t: &[f64]| normal_logpdf(t[0], 0.0, 2.0);
        let shifted_prior = |t: &[f64]| normal_logpdf(t[0], 0.0, 2.0) + 5.0;
        let m0 = FnModel::new(space.clone(), like, prior);
        let m1 = FnModel::new(space, like, shifted_prior).unnormalized();
        let integrator = GridIntegrator::for_space(m0.space(), 200_000).unwrap();
        let a = idea1_evidence(&m0, &integrator).unwrap().log_z;
        let b = idea1_evidence(&m1, &integrator).unwrap().log_z;
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn flat_shift_bit_invariance(c in -100.0f64..100.0) {
            let base = flat_gaussian(0.6, 1.0, 12.0, 0.0);
            let shifted = flat_gaussian(0.6, 1.0, 12.0, c);
            let integrator = GridIntegrator::for_space(base.space(), 30_000).unwrap();
            let a1 = idea1_evidence(&base, &integrator).unwrap().log_z;
            let b1 = idea1_evidence(&shifted, &integrator).unwrap().log_z;
            prop_assert_eq!(a1.to_bits(), b1.to_bits());
            let a2 = fractional_evidence(&base, 0.3, &integrator).unwrap().log_z;
            let b2 = fractional_evidence(&shifted, 0.3, &integrator).unwrap().log_z;
            prop_assert_eq!(a2.to_bits(), b2.to_bits());
        }
    }
}
