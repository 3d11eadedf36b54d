//! Closed-form Gaussian evidence.
//!
//! Two conjugate settings where the marginal likelihood has an exact
//! expression: a Gaussian likelihood with known variance and a Gaussian
//! prior on its mean, and normal linear regression with a Gaussian prior on
//! the coefficient vector. Both serve as oracles for the grid backend and as
//! the engine behind the shrinking-evidence and nested-model-comparison
//! experiments. The module also hosts the unit-information prior
//! construction and two prior-scale diagnostics (expected signal-to-noise
//! ratio and expected explained-variance fraction).

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::evidence::EvidenceResult;
use crate::model::{BayesModel, DimSpec, ParamSpace, SubsetLikelihood};

/// Log density of N(mean, sd²) at `x`.
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

fn positive_finite(value: f64, name: &str) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Gaussian observations with known noise scale and a Gaussian prior on the
/// unknown mean: y_i ~ N(θ, σ²), θ ~ N(μ₀, σ₀²).
#[derive(Clone, Copy, Debug)]
pub struct GaussianMeanModel {
    pub sigma_like: f64,
    pub mu0: f64,
    pub sigma0: f64,
}

impl GaussianMeanModel {
    pub fn new(sigma_like: f64, mu0: f64, sigma0: f64) -> Result<Self> {
        positive_finite(sigma_like, "likelihood sd")?;
        positive_finite(sigma0, "prior sd")?;
        if !mu0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "prior mean must be finite, got {mu0}"
            )));
        }
        Ok(GaussianMeanModel {
            sigma_like,
            mu0,
            sigma0,
        })
    }

    /// Unit-information prior for this likelihood, centered at `mu0`: the
    /// prior carries as much information as a single observation, which for
    /// a Gaussian mean is simply sd = σ.
    pub fn uip(sigma_like: f64, mu0: f64) -> Result<Self> {
        Self::new(sigma_like, mu0, sigma_like)
    }

    /// Posterior mean and sd given `data`. Precision-weighted average of the
    /// prior mean and the sample mean.
    pub fn posterior(&self, data: &[f64]) -> Result<(f64, f64)> {
        if data.is_empty() {
            return Err(Error::EmptyData("gaussian mean posterior"));
        }
        let n = data.len() as f64;
        let ybar = data.iter().sum::<f64>() / n;
        let prec0 = 1.0 / (self.sigma0 * self.sigma0);
        let prec_like = n / (self.sigma_like * self.sigma_like);
        let prec_post = prec0 + prec_like;
        let mu_post = (self.mu0 * prec0 + ybar * prec_like) / prec_post;
        Ok((mu_post, prec_post.sqrt().recip()))
    }

    /// Exact log marginal likelihood.
    ///
    /// Factorizes the likelihood through the sample mean: with σ_n² = σ²/n
    /// and v_y the biased sample variance,
    ///
    /// ```text
    /// ln Z = -(n/2) ln(2πσ²) - ½ ln(1 + σ₀²/σ_n²)
    ///        - ½ [ v_y/σ_n² + (ȳ-μ₀)²/(σ_n²+σ₀²) ]
    /// ```
    pub fn log_evidence(&self, data: &[f64]) -> Result<EvidenceResult> {
        if data.is_empty() {
            return Err(Error::EmptyData("gaussian mean evidence"));
        }
        let n = data.len() as f64;
        let ybar = data.iter().sum::<f64>() / n;
        let vy = data.iter().map(|y| (y - ybar) * (y - ybar)).sum::<f64>() / n;
        let s2 = self.sigma_like * self.sigma_like;
        let sn2 = s2 / n;
        let s02 = self.sigma0 * self.sigma0;
        let log_z = -0.5 * n * (2.0 * std::f64::consts::PI * s2).ln()
            - 0.5 * (1.0 + s02 / sn2).ln()
            - 0.5 * (vy / sn2 + (ybar - self.mu0) * (ybar - self.mu0) / (sn2 + s02));
        Ok(EvidenceResult::closed_form(log_z))
    }

    /// Log-likelihood of the full dataset at mean `theta`.
    pub fn log_like(&self, theta: f64, data: &[f64]) -> f64 {
        data.iter()
            .map(|&y| normal_logpdf(y, theta, self.sigma_like))
            .sum()
    }

    /// Maximum of the log-likelihood over θ (attained at the sample mean).
    pub fn max_log_like(&self, data: &[f64]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyData("gaussian mean max log-likelihood"));
        }
        let n = data.len() as f64;
        let ybar = data.iter().sum::<f64>() / n;
        Ok(self.log_like(ybar, data))
    }
}

/// A [`GaussianMeanModel`] bound to a dataset, exposing the generic model
/// interface so grid quadrature and the data-splitting constructions can
/// drive it.
#[derive(Clone, Debug)]
pub struct GaussianMeanObserved {
    pub model: GaussianMeanModel,
    data: Vec<f64>,
    space: ParamSpace,
}

impl GaussianMeanObserved {
    /// The integration window spans both the prior bulk (μ₀ ± 12 σ₀) and the
    /// likelihood bulk (ȳ ± 12 σ/√n); mass outside is below e⁻⁷² of either
    /// factor's peak and cannot move log-evidences at the tolerances used
    /// in this crate.
    pub fn new(model: GaussianMeanModel, data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData("gaussian mean observations"));
        }
        let n = data.len() as f64;
        let ybar = data.iter().sum::<f64>() / n;
        let sn = model.sigma_like / n.sqrt();
        let lo = (model.mu0 - 12.0 * model.sigma0).min(ybar - 12.0 * sn);
        let hi = (model.mu0 + 12.0 * model.sigma0).max(ybar + 12.0 * sn);
        let space = ParamSpace::truncated(
            vec![DimSpec {
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
                window: (lo, hi),
            }],
            "window covers prior and likelihood bulk to 12 sd; excluded mass < 1e-31",
        )?;
        Ok(GaussianMeanObserved { model, data, space })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl BayesModel for GaussianMeanObserved {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        self.model.log_like(theta[0], &self.data)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        normal_logpdf(theta[0], self.model.mu0, self.model.sigma0)
    }
}

impl SubsetLikelihood for GaussianMeanObserved {
    fn n_obs(&self) -> usize {
        self.data.len()
    }

    fn log_like_point(&self, theta: &[f64], i: usize) -> f64 {
        normal_logpdf(self.data[i], theta[0], self.model.sigma_like)
    }
}

/// Gaussian prior on a coefficient vector: mean and full covariance.
#[derive(Clone, Debug)]
pub struct GaussianPriorSpec {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Normal linear regression y = Xβ + ε with ε ~ N(0, σ²I) and independent
/// Gaussian priors β_j ~ N(m_j, s_j²).
#[derive(Clone, Debug)]
pub struct LinRegModel {
    design: DMatrix<f64>,
    pub sigma_like: f64,
    prior_mean: DVector<f64>,
    prior_sd: DVector<f64>,
}

impl LinRegModel {
    pub fn new(
        design_rows: &[Vec<f64>],
        sigma_like: f64,
        prior_mean: &[f64],
        prior_sd: &[f64],
    ) -> Result<Self> {
        positive_finite(sigma_like, "likelihood sd")?;
        let n = design_rows.len();
        if n == 0 {
            return Err(Error::EmptyData("regression design"));
        }
        let p = design_rows[0].len();
        if p == 0 || design_rows.iter().any(|r| r.len() != p) {
            return Err(Error::LengthMismatch(
                "design rows must share one positive width".into(),
            ));
        }
        if prior_mean.len() != p || prior_sd.len() != p {
            return Err(Error::LengthMismatch(format!(
                "design has {p} columns but prior has {} means / {} sds",
                prior_mean.len(),
                prior_sd.len()
            )));
        }
        for &s in prior_sd {
            positive_finite(s, "prior sd")?;
        }
        if prior_mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("prior means must be finite".into()));
        }
        let design = DMatrix::from_row_slice(
            n,
            p,
            &design_rows.iter().flatten().copied().collect::<Vec<_>>(),
        );
        Ok(LinRegModel {
            design,
            sigma_like,
            prior_mean: DVector::from_row_slice(prior_mean),
            prior_sd: DVector::from_row_slice(prior_sd),
        })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn n_obs(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_coef(&self) -> usize {
        self.design.ncols()
    }

    pub fn prior(&self) -> GaussianPriorSpec {
        let p = self.n_coef();
        let mut cov = DMatrix::zeros(p, p);
        for j in 0..p {
            cov[(j, j)] = self.prior_sd[j] * self.prior_sd[j];
        }
        GaussianPriorSpec {
            mean: self.prior_mean.clone(),
            cov,
        }
    }

    /// Exact log marginal likelihood via the prior predictive
    /// y ~ N(X m, σ²I + X Σ₀ Xᵀ).
    pub fn log_evidence(&self, y: &[f64]) -> Result<EvidenceResult> {
        let log_z = linreg_log_evidence_with_prior(&self.design, self.sigma_like, &self.prior(), y)?;
        Ok(EvidenceResult::closed_form(log_z))
    }

    /// Log-likelihood at a coefficient vector.
    pub fn log_like(&self, beta: &[f64], y: &[f64]) -> Result<f64> {
        if beta.len() != self.n_coef() || y.len() != self.n_obs() {
            return Err(Error::LengthMismatch(format!(
                "beta has {} entries (need {}), y has {} (need {})",
                beta.len(),
                self.n_coef(),
                y.len(),
                self.n_obs()
            )));
        }
        let beta = DVector::from_row_slice(beta);
        let fitted = &self.design * beta;
        Ok(y.iter()
            .zip(fitted.iter())
            .map(|(&yi, &fi)| normal_logpdf(yi, fi, self.sigma_like))
            .sum())
    }

    /// Log prior density at a coefficient vector.
    pub fn log_prior(&self, beta: &[f64]) -> f64 {
        beta.iter()
            .enumerate()
            .map(|(j, &b)| normal_logpdf(b, self.prior_mean[j], self.prior_sd[j]))
            .sum()
    }
}

/// Seeded draw from the straight-line truth y = β0 + β1 x + σ ε, with
/// covariates x ~ N(0, x_scale²). One ChaCha8 stream per seed, covariates
/// first and noise second, so the seed pins down the whole dataset.
/// Returns (x, y).
pub fn simulate_regression(
    d_y: usize,
    beta0: f64,
    beta1: f64,
    x_scale: f64,
    sigma_like: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if d_y == 0 {
        return Err(Error::EmptyData("regression draw"));
    }
    positive_finite(sigma_like, "likelihood sd")?;
    if !(beta0.is_finite() && beta1.is_finite() && x_scale.is_finite() && x_scale >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficients must be finite and the covariate scale nonnegative, \
             got beta0 = {beta0}, beta1 = {beta1}, x_scale = {x_scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..d_y)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x_scale * z
        })
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let z: f64 = StandardNormal.sample(&mut rng);
            beta0 + beta1 * xi + sigma_like * z
        })
        .collect();
    Ok((x, y))
}

/// Log marginal likelihood of linear regression under an arbitrary Gaussian
/// coefficient prior (full covariance), via the prior predictive
/// y ~ N(X m, σ²I + X Σ₀ Xᵀ).
pub fn linreg_log_evidence_with_prior(
    design: &DMatrix<f64>,
    sigma_like: f64,
    prior: &GaussianPriorSpec,
    y: &[f64],
) -> Result<f64> {
    positive_finite(sigma_like, "likelihood sd")?;
    let n = design.nrows();
    let p = design.ncols();
    if y.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{} responses for {n} design rows",
            y.len()
        )));
    }
    if prior.mean.len() != p || prior.cov.nrows() != p || prior.cov.ncols() != p {
        return Err(Error::LengthMismatch(format!(
            "prior shaped {}x{} for {p} columns",
            prior.cov.nrows(),
            prior.cov.ncols()
        )));
    }
    let mut marginal_cov = design * &prior.cov * design.transpose();
    for i in 0..n {
        marginal_cov[(i, i)] += sigma_like * sigma_like;
    }
    let chol = Cholesky::new(marginal_cov).ok_or_else(|| {
        Error::SingularCovariance(format!(
            "marginal covariance σ²I + XΣ₀Xᵀ failed to factor (σ = {sigma_like:e}, \
             prior sd scale ~ {:.3e})",
            prior.cov.diagonal().amax().sqrt()
        ))
    })?;
    let resid = DVector::from_row_slice(y) - design * &prior.mean;
    let alpha = chol.solve(&resid);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + resid.dot(&alpha)))
}

/// Unit-information prior for a regression design: zero-mean (or given-mean)
/// Gaussian whose covariance equals the inverse Fisher information of a
/// single average observation, n σ² (XᵀX)⁻¹. In the linear model this is
/// the classical g-prior with g = n.
pub fn uip_prior(
    design: &DMatrix<f64>,
    sigma_like: f64,
    prior_mean: &[f64],
) -> Result<GaussianPriorSpec> {
    positive_finite(sigma_like, "likelihood sd")?;
    let p = design.ncols();
    if prior_mean.len() != p {
        return Err(Error::LengthMismatch(format!(
            "{} prior means for {p} columns",
            prior_mean.len()
        )));
    }
    let xtx = design.transpose() * design;
    let chol = Cholesky::new(xtx).ok_or_else(|| {
        Error::SingularCovariance(
            "XᵀX is singular (collinear design columns); unit-information prior undefined".into(),
        )
    })?;
    let inv = chol.inverse();
    let scale = design.nrows() as f64 * sigma_like * sigma_like;
    Ok(GaussianPriorSpec {
        mean: DVector::from_row_slice(prior_mean),
        cov: inv * scale,
    })
}

/// Expected signal-to-noise ratio E[βᵀXᵀXβ] / (n σ²) under a zero-mean prior
/// with independent coefficients (the model's own diagonal prior).
pub fn prior_expected_snr(model: &LinRegModel) -> Result<f64> {
    let prior = model.prior();
    prior_expected_snr_with_prior(&model.design, model.sigma_like, &prior)
}

/// Expected signal-to-noise ratio under an arbitrary zero-mean Gaussian
/// prior: tr(XᵀX Σ₀) / (n σ²).
pub fn prior_expected_snr_with_prior(
    design: &DMatrix<f64>,
    sigma_like: f64,
    prior: &GaussianPriorSpec,
) -> Result<f64> {
    positive_finite(sigma_like, "likelihood sd")?;
    if prior.mean.amax() != 0.0 {
        return Err(Error::InvalidArgument(
            "expected SNR is defined for zero-mean coefficient priors".into(),
        ));
    }
    let xtx = design.transpose() * design;
    let prod = xtx * &prior.cov;
    Ok(prod.trace() / (design.nrows() as f64 * sigma_like * sigma_like))
}

/// Monte Carlo estimate of the prior-expected explained-variance fraction
/// E[R²] = E[w/(1+w)] with w(β) = βᵀXᵀXβ/(nσ²) and β drawn from the model's
/// prior. Deterministic for a given seed.
pub fn prior_expected_r2(model: &LinRegModel, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "expected R² needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xtx = model.design.transpose() * &model.design;
    let p = model.n_coef();
    let denom = model.n_obs() as f64 * model.sigma_like * model.sigma_like;
    let mut acc = 0.0;
    let mut beta = DVector::zeros(p);
    for _ in 0..n_samples {
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            beta[j] = model.prior_mean[j] + model.prior_sd[j] * z;
        }
        let w = (&xtx * &beta).dot(&beta) / denom;
        acc += w / (1.0 + w);
    }
    Ok(acc / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnModel;
    use crate::quadrature::{evidence_grid, GridSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const DATUM: f64 = 2.078;

    fn six_points() -> Vec<f64> {
        // Arbitrary but fixed multi-observation dataset.
        vec![1.3, -0.4, 2.9, 0.75, 1.05, -1.6]
    }

    #[test]
    fn single_datum_evidence_is_marginal_normal() {
        // With one observation the marginal is y ~ N(μ₀, σ² + σ₀²).
        for &(mu0, s, s0) in &[(0.0, 1.0, 3.0), (-1.5, 2.0, 0.7), (4.0, 0.5, 10.0)] {
            let m = GaussianMeanModel::new(s, mu0, s0).unwrap();
            let z = m.log_evidence(&[DATUM]).unwrap().log_z;
            let expect = normal_logpdf(DATUM, mu0, (s * s + s0 * s0).sqrt());
            assert_relative_eq!(z, expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn evidence_matches_grid_across_prior_scales() {
        for &s0 in &[0.5, 1.0, 3.0, 10.0, 100.0] {
            let m = GaussianMeanModel::new(1.0, 0.0, s0).unwrap();
            let closed = m.log_evidence(&[DATUM]).unwrap().log_z;
            let obs = GaussianMeanObserved::new(m, vec![DATUM]).unwrap();
            let grid = GridSpec::for_space(obs.space(), 1_000_000).unwrap();
            let numeric = evidence_grid(&obs, &grid).unwrap().log_z;
            assert!(
                ((closed - numeric) / closed).abs() < 1e-6,
                "sigma0 = {s0}: closed {closed} vs grid {numeric}"
            );
        }
    }

    #[test]
    fn multi_datum_evidence_matches_grid() {
        let m = GaussianMeanModel::new(1.7, 0.4, 2.5).unwrap();
        let data = six_points();
        let closed = m.log_evidence(&data).unwrap().log_z;
        let obs = GaussianMeanObserved::new(m, data).unwrap();
        let grid = GridSpec::for_space(obs.space(), 400_000).unwrap();
        let numeric = evidence_grid(&obs, &grid).unwrap().log_z;
        assert_relative_eq!(closed, numeric, max_relative = 1e-8);
    }

    #[test]
    fn posterior_matches_grid_moments() {
        let m = GaussianMeanModel::new(1.0, -0.3, 2.0).unwrap();
        let data = six_points();
        let (mu, sd) = m.posterior(&data).unwrap();
        // Grid oracle: normalized first/second moments of ℓ(θ)·g(θ).
        let obs = GaussianMeanObserved::new(m, data).unwrap();
        let grid = GridSpec::for_space(obs.space(), 200_000).unwrap();
        let (mut mass, mut m1, mut m2) = (0.0, 0.0, 0.0);
        let mode = {
            let (c, _) = m.posterior(obs.data()).unwrap();
            obs.log_post_unnorm(&[c])
        };
        for i in 0..grid.total_points() {
            let t = grid.node(i)[0];
            let w = (obs.log_post_unnorm(&[t]) - mode).exp();
            mass += w;
            m1 += w * t;
            m2 += w * t * t;
        }
        let mean = m1 / mass;
        let var = m2 / mass - mean * mean;
        assert_abs_diff_eq!(mu, mean, epsilon = 1e-9);
        assert_abs_diff_eq!(sd, var.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn posterior_limits() {
        let data = vec![DATUM];
        // Vague prior: posterior follows the data.
        let vague = GaussianMeanModel::new(1.0, 0.0, 1e8).unwrap();
        let (mu, sd) = vague.posterior(&data).unwrap();
        assert_abs_diff_eq!(mu, DATUM, epsilon = 1e-10);
        assert_abs_diff_eq!(sd, 1.0, epsilon = 1e-10);
        // Dogmatic prior: posterior stays at the prior mean.
        let dogmatic = GaussianMeanModel::new(1.0, 0.5, 1e-8).unwrap();
        let (mu, _) = dogmatic.posterior(&data).unwrap();
        assert_abs_diff_eq!(mu, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn evidence_shrinks_with_prior_width() {
        let mut last = f64::INFINITY;
        for &s0 in &[3.0, 10.0, 100.0, 1000.0] {
            let m = GaussianMeanModel::new(1.0, 0.0, s0).unwrap();
            let z = m.log_evidence(&[DATUM]).unwrap().log_z;
            assert!(z < last, "evidence failed to shrink at sigma0 = {s0}");
            last = z;
        }
    }

    #[test]
    fn tight_prior_recovers_likelihood_at_prior_mean() {
        let m = GaussianMeanModel::new(1.0, 0.3, 1e-8).unwrap();
        let z = m.log_evidence(&[DATUM]).unwrap().log_z;
        assert_abs_diff_eq!(z, m.log_like(0.3, &[DATUM]), epsilon = 1e-6);
    }

    #[test]
    fn max_log_like_is_at_sample_mean() {
        let m = GaussianMeanModel::new(1.3, 0.0, 1.0).unwrap();
        let data = six_points();
        let peak = m.max_log_like(&data).unwrap();
        for &t in &[-0.5, 0.0, 0.63, 0.64, 2.0] {
            assert!(m.log_like(t, &data) <= peak + 1e-12);
        }
    }

    #[test]
    fn uip_gaussian_mean_sd_equals_sigma() {
        let m = GaussianMeanModel::uip(2.0, 0.0).unwrap();
        assert_eq!(m.sigma0, 2.0);
    }

    fn toy_design() -> Vec<Vec<f64>> {
        // Intercept and an equally spaced covariate on [0, 1].
        (0..4).map(|i| vec![1.0, i as f64 / 3.0]).collect()
    }

    #[test]
    fn intercept_only_regression_equals_gaussian_mean() {
        let data = six_points();
        let rows: Vec<Vec<f64>> = data.iter().map(|_| vec![1.0]).collect();
        let reg = LinRegModel::new(&rows, 1.3, &[0.2], &[2.4]).unwrap();
        let gm = GaussianMeanModel::new(1.3, 0.2, 2.4).unwrap();
        let a = reg.log_evidence(&data).unwrap().log_z;
        let b = gm.log_evidence(&data).unwrap().log_z;
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn regression_evidence_matches_two_dim_grid() {
        let reg = LinRegModel::new(&toy_design(), 1.0, &[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let y = vec![1.1, 1.2, 1.8, 2.3];
        let closed = reg.log_evidence(&y).unwrap().log_z;

        // Posterior-centered box: Σ_post = (XᵀX/σ² + Σ₀⁻¹)⁻¹.
        let x = reg.design().clone();
        let mut prec = x.transpose() * &x;
        for j in 0..2 {
            prec[(j, j)] += 1.0 / 4.0;
        }
        let cov = Cholesky::new(prec).unwrap().inverse();
        let xty = x.transpose() * DVector::from_row_slice(&y);
        let mean = &cov * xty;
        let bounds: Vec<(f64, f64)> = (0..2)
            .map(|j| {
                let s = cov[(j, j)].sqrt();
                (mean[j] - 10.0 * s, mean[j] + 10.0 * s)
            })
            .collect();
        let space = ParamSpace::bounded(&bounds).unwrap();
        let grid = GridSpec::new(&[2000, 2000], &space.windows()).unwrap();
        let model = FnModel::new(
            space,
            |b: &[f64]| reg.log_like(b, &y).unwrap(),
            |b: &[f64]| reg.log_prior(b),
        );
        let numeric = evidence_grid(&model, &grid).unwrap().log_z;
        assert_abs_diff_eq!(closed, numeric, epsilon = 1e-5);
    }

    #[test]
    fn widening_both_priors_rescales_evidence() {
        // Once both prior sds dwarf the likelihood, Z scales as 1/(s₀s₁).
        let y = vec![1.1, 1.2, 1.8, 2.3];
        let z = |s: f64| {
            LinRegModel::new(&toy_design(), 1.0, &[0.0, 0.0], &[s, s])
                .unwrap()
                .log_evidence(&y)
                .unwrap()
                .log_z
        };
        let drop = z(1e5) - z(1e6);
        assert_abs_diff_eq!(drop, 2.0 * std::f64::consts::LN_10, epsilon = 1e-4);
    }

    #[test]
    fn snr_closed_form_matches_monte_carlo() {
        let reg = LinRegModel::new(&toy_design(), 1.5, &[0.0, 0.0], &[1.0, 3.0]).unwrap();
        let exact = prior_expected_snr(&reg).unwrap();
        // MC oracle with the same prior.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let xtx = reg.design().transpose() * reg.design();
        let mut acc = 0.0;
        let k = 200_000;
        for _ in 0..k {
            let z0: f64 = StandardNormal.sample(&mut rng);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let b = DVector::from_row_slice(&[z0 * 1.0, z1 * 3.0]);
            acc += (&xtx * &b).dot(&b) / (4.0 * 1.5 * 1.5);
        }
        let mc = acc / k as f64;
        assert_relative_eq!(exact, mc, max_relative = 0.02);
    }

    #[test]
    fn snr_rejects_nonzero_prior_mean() {
        let reg = LinRegModel::new(&toy_design(), 1.0, &[0.5, 0.0], &[1.0, 1.0]).unwrap();
        assert!(prior_expected_snr(&reg).is_err());
    }

    #[test]
    fn uip_identity_design_covariance() {
        // X = I, σ = 1, n = p: covariance must be n·I.
        let eye: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let x = DMatrix::from_row_slice(3, 3, &eye.iter().flatten().copied().collect::<Vec<_>>());
        let prior = uip_prior(&x, 1.0, &[0.0, 0.0, 0.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 3.0 } else { 0.0 };
                assert_abs_diff_eq!(prior.cov[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn uip_expected_snr_is_coefficient_count() {
        let x = DMatrix::from_row_slice(4, 2, &toy_design().concat());
        let prior = uip_prior(&x, 1.7, &[0.0, 0.0]).unwrap();
        let snr = prior_expected_snr_with_prior(&x, 1.7, &prior).unwrap();
        assert_abs_diff_eq!(snr, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn uip_rejects_collinear_design() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let x = DMatrix::from_row_slice(3, 2, &rows.concat());
        assert!(matches!(
            uip_prior(&x, 1.0, &[0.0, 0.0]),
            Err(Error::SingularCovariance(_))
        ));
    }

    #[test]
    fn expected_r2_limits_and_monotonicity() {
        let design = toy_design();
        let r2_at = |s: f64| {
            let m = LinRegModel::new(&design, 1.0, &[0.0, 0.0], &[s, s]).unwrap();
            prior_expected_r2(&m, 40_000, 7).unwrap()
        };
        assert!(r2_at(1e-9) < 1e-8, "R² must vanish with the prior scale");
        assert!(r2_at(1e6) > 0.99, "R² must saturate for huge prior scale");
        let (a, b, c) = (r2_at(0.1), r2_at(1.0), r2_at(10.0));
        assert!(a < b && b < c, "R² must grow with prior scale: {a} {b} {c}");
    }

    #[test]
    fn marginal_covariance_underflow_is_reported() {
        // σ so small that σ² underflows, combined with duplicated design
        // rows, leaves a rank-1 marginal covariance.
        let rows = vec![vec![1.0], vec![1.0]];
        let reg = LinRegModel::new(&rows, 1e-170, &[0.0], &[1.0]).unwrap();
        match reg.log_evidence(&[0.1, 0.2]) {
            Err(Error::SingularCovariance(msg)) => assert!(msg.contains("1e-170")),
            other => panic!("expected singular covariance, got {other:?}"),
        }
    }

    #[test]
    fn evidence_rejects_empty_data() {
        let m = GaussianMeanModel::new(1.0, 0.0, 1.0).unwrap();
        assert!(m.log_evidence(&[]).is_err());
        assert!(m.posterior(&[]).is_err());
    }

    #[test]
    fn regression_draws_are_seeded_and_shaped() {
        let (x, y) = simulate_regression(40, 1.0, 1.0, 2.0, 1.0, 10).unwrap();
        assert_eq!(x.len(), 40);
        assert_eq!(y.len(), 40);
        let again = simulate_regression(40, 1.0, 1.0, 2.0, 1.0, 10).unwrap();
        assert_eq!((x.clone(), y.clone()), again);
        assert_ne!(x, simulate_regression(40, 1.0, 1.0, 2.0, 1.0, 11).unwrap().0);
        // Residuals about the true line are unit-scale noise, covariates
        // carry the requested spread.
        let resid_var =
            x.iter().zip(&y).map(|(&xi, &yi)| (yi - 1.0 - xi).powi(2)).sum::<f64>() / 40.0;
        assert!((0.4..2.5).contains(&resid_var), "residual variance {resid_var}");
        let x_var = x.iter().map(|&v| v * v).sum::<f64>() / 40.0;
        assert!((1.6..10.0).contains(&x_var), "covariate variance {x_var}");
        assert!(simulate_regression(0, 1.0, 1.0, 2.0, 1.0, 1).is_err());
        assert!(simulate_regression(5, 1.0, 1.0, -0.1, 1.0, 1).is_err());
        assert!(simulate_regression(5, 1.0, f64::NAN, 1.0, 1.0, 1).is_err());
    }
}
