//! Count-data models with closed-form evidence, and the two model-selection
//! experiments built on them: evidence shrinkage under a widening uniform
//! prior box, and intrinsic (training-sample) Bayes factors.
//!
//! The competing models throughout are a Poisson with unknown rate θ and a
//! geometric on {0, 1, 2, ...} with unknown success probability φ. Their
//! evidences reduce to gamma and beta integrals:
//!
//! * Poisson, flat improper weight on (0, ∞):
//!   `ln Z̃₁ = lnΓ(s+1) - (s+1) ln n - Σ lnΓ(yᵢ+1)` with `s = Σ yᵢ`;
//! * Poisson, uniform prior on [0, L]: the same plus
//!   `ln P(s+1, nL) - ln L`, with P the regularized lower incomplete gamma;
//! * geometric, uniform prior on [0, 1]: `ln B(n+1, s+1)`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::model::{BayesModel, DimSpec, ParamSpace, SubsetLikelihood};

/// Prior on the Poisson rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PoissonPrior {
    /// Flat improper weight 1 on (0, ∞); evidence is defined only up to a
    /// constant and must be consumed by ratio constructions.
    ImproperFlat,
    /// Proper uniform density 1/L on [0, L].
    BoundedUniform { l: f64 },
}

/// `ln P(a, x)` for the regularized lower incomplete gamma function.
///
/// Mid-range arguments delegate to the series / continued-fraction
/// implementation behind [`gamma_lr`]. Far in the upper tail
/// (x > a + 40√a + 100) the result saturates to exactly 0 = ln 1; in the
/// deep lower tail, where P underflows, the defining series is evaluated
/// directly in log space.
fn ln_gamma_lr(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x > a + 40.0 * a.sqrt() + 100.0 {
        // 1 - P is below ~e^-700 here; ln P is 0 to double precision.
        return 0.0;
    }
    if x < a {
        let p = gamma_lr(a, x);
        if p < 1e-290 {
            // γ(a,x) = x^a e^-x Σ_k x^k / (a(a+1)···(a+k)), all terms
            // positive and decaying since x < a.
            let mut term = 1.0 / a;
            let mut sum = term;
            let mut k = 0.0;
            while term > sum * 1e-17 {
                term *= x / (a + 1.0 + k);
                sum += term;
                k += 1.0;
            }
            return a * x.ln() - x + sum.ln() - ln_gamma(a);
        }
        return p.ln();
    }
    gamma_lr(a, x).ln()
}

/// Log pmf of Poisson(θ) at count `y` (zero density for θ outside (0, ∞),
/// with the boundary convention 0⁰ = 1 at θ = 0, y = 0).
pub fn poisson_log_pmf(y: u64, theta: f64) -> f64 {
    if theta < 0.0 {
        return f64::NEG_INFINITY;
    }
    if theta == 0.0 {
        return if y == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let yf = y as f64;
    yf * theta.ln() - theta - ln_gamma(yf + 1.0)
}

/// Log pmf of the geometric distribution on {0, 1, ...} at `y`:
/// φ(1-φ)^y.
pub fn geometric_log_pmf(y: u64, phi: f64) -> f64 {
    if !(phi > 0.0 && phi <= 1.0) {
        return f64::NEG_INFINITY;
    }
    // ln(1-φ) through ln_1p keeps precision as φ → 1.
    phi.ln() + y as f64 * (-phi).ln_1p()
}

fn stats(data: &[u64]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyData("count dataset"));
    }
    let n = data.len() as f64;
    let s = data.iter().map(|&y| y as f64).sum::<f64>();
    Ok((n, s))
}

/// Log evidence of the Poisson model under the chosen rate prior.
///
/// The improper-flat value is a likelihood integral, not a probability; the
/// bounded value is a proper evidence and never exceeds it by more than the
/// -ln L dilution (P ≤ 1 throughout).
pub fn poisson_log_evidence(data: &[u64], prior: PoissonPrior) -> Result<f64> {
    let (n, s) = stats(data)?;
    let sum_lgamma: f64 = data.iter().map(|&y| ln_gamma(y as f64 + 1.0)).sum();
    let flat = ln_gamma(s + 1.0) - (s + 1.0) * n.ln() - sum_lgamma;
    match prior {
        PoissonPrior::ImproperFlat => Ok(flat),
        PoissonPrior::BoundedUniform { l } => {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "uniform box width must be positive and finite, got {l}"
                )));
            }
            Ok(flat + ln_gamma_lr(s + 1.0, n * l) - l.ln())
        }
    }
}

/// Log evidence of the geometric model under a uniform prior on φ ∈ [0, 1]:
/// `ln B(n+1, s+1)`.
pub fn geometric_log_evidence(data: &[u64]) -> Result<f64> {
    let (n, s) = stats(data)?;
    Ok(ln_beta(n + 1.0, s + 1.0))
}

/// Poisson draw by cumulative-probability inversion: one uniform variate,
/// then a walk along the pmf. Exact given the stream, with no rejection
/// steps, so a fixed rng state always yields the same count.
pub fn sample_poisson<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> u64 {
    assert!(
        theta > 0.0 && theta < 700.0,
        "poisson rate out of supported range: {theta}"
    );
    let u: f64 = rng.gen();
    let mut p = (-theta).exp();
    let mut cdf = p;
    let mut k = 0u64;
    let cap = (theta + 40.0 * theta.sqrt() + 200.0) as u64;
    while u >= cdf && k < cap {
        k += 1;
        p *= theta / k as f64;
        cdf += p;
    }
    k
}

/// Geometric draw on {0, 1, ...} by the same cumulative inversion.
pub fn sample_geometric<R: Rng + ?Sized>(phi: f64, rng: &mut R) -> u64 {
    assert!(phi > 0.0 && phi <= 1.0, "geometric parameter out of (0, 1]: {phi}");
    let u: f64 = rng.gen();
    let q = 1.0 - phi;
    let mut p = phi;
    let mut cdf = p;
    let mut k = 0u64;
    while u >= cdf && p > 0.0 {
        k += 1;
        p *= q;
        cdf += p;
    }
    k
}

/// One row of a sweep: the swept parameter value, dataset size, the range of
/// Bayes factors seen across runs, and how many runs picked the wrong model.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub d_y: usize,
    pub min_bf: f64,
    pub max_bf: f64,
    pub errors: usize,
    pub runs: usize,
    pub seed: u64,
}

/// Result of a repeated-simulation sweep, serializable as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "param,Dy,min_bf,max_bf,errors,runs,seed";

    /// CSV with LF line endings and floats at 17 significant digits (enough
    /// to round-trip an f64 exactly).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                crate::textio::float17(r.param),
                r.d_y,
                crate::textio::float17(r.min_bf),
                crate::textio::float17(r.max_bf),
                r.errors,
                r.runs,
                r.seed
            )?;
        }
        Ok(())
    }
}

/// Per-run generator stream: run index r uses seed + r, so run r's dataset
/// does not depend on how many runs were requested and sweeps can be
/// extended without disturbing existing rows.
fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64))
}

/// Evidence-shrinkage sweep: data are drawn from Poisson(θ_true) and the
/// Poisson-vs-geometric Bayes factor is computed with the Poisson rate given
/// a uniform prior on [0, L] for each box width L in turn.
///
/// The same `n_runs` datasets are reused across box widths, so rows are
/// directly comparable: as L grows past the likelihood bulk the Poisson
/// evidence dilutes as 1/L and each run's BF₁₂ falls, making the error count
/// (runs with BF₁₂ < 1, i.e. the true model rejected) nondecreasing in L.
pub fn lindley_sweep(
    theta_true: f64,
    d_y: usize,
    box_widths: &[f64],
    n_runs: usize,
    seed: u64,
) -> Result<SweepResult> {
    if d_y == 0 || n_runs == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs d_y >= 1 and n_runs >= 1".into(),
        ));
    }
    if box_widths.is_empty() {
        return Err(Error::EmptyData("box width list"));
    }
    let datasets: Vec<Vec<u64>> = (0..n_runs)
        .map(|r| {
            let mut rng = run_rng(seed, r);
            (0..d_y).map(|_| sample_poisson(theta_true, &mut rng)).collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(box_widths.len());
    for &l in box_widths {
        let mut errors = 0usize;
        let mut min_log_bf = f64::INFINITY;
        let mut max_log_bf = f64::NEG_INFINITY;
        for data in &datasets {
            let z1 = poisson_log_evidence(data, PoissonPrior::BoundedUniform { l })?;
            let z2 = geometric_log_evidence(data)?;
            let log_bf = z1 - z2;
            if log_bf < 0.0 {
                errors += 1;
            }
            min_log_bf = min_log_bf.min(log_bf);
            max_log_bf = max_log_bf.max(log_bf);
        }
        rows.push(SweepRow {
            param: l,
            d_y,
            min_bf: min_log_bf.exp(),
            max_bf: max_log_bf.exp(),
            errors,
            runs: n_runs,
            seed,
        });
    }
    Ok(SweepResult { rows })
}

/// Direction of the training-sample correction in [`log_ibf12`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IbfMode {
    /// Only the Poisson model (whose flat rate weight is improper) is
    /// trained; the geometric model keeps its proper uniform prior.
    OneSided,
    /// Both models are trained on the same single datum.
    Symmetric,
}

/// Which model generated the data in an [`ibf_experiment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountModel {
    Poisson,
    Geometric,
}

/// Log intrinsic Bayes factor of Poisson over geometric: the arithmetic
/// mean, over every single-datum training set {yᵢ}, of the trained Bayes
/// factor. Ratios are formed in log space and averaged through one
/// [`log_sum_exp`], so the result is finite whenever the summands are.
pub fn log_ibf12(data: &[u64], mode: IbfMode) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(
            "intrinsic Bayes factor needs >= 2 observations, so a training \
             datum always leaves test data"
                .into(),
        ));
    }
    let z1 = poisson_log_evidence(data, PoissonPrior::ImproperFlat)?;
    let z2 = geometric_log_evidence(data)?;
    let log_terms: Vec<f64> = data
        .iter()
        .map(|&yi| {
            let train = [yi];
            // Single-datum flat-Poisson training evidence is exactly 0 in
            // log space (the gamma integral equals y!), but is computed
            // through the same path as any other subset for uniformity.
            let z1_train = poisson_log_evidence(&train, PoissonPrior::ImproperFlat)?;
            let one_sided = (z1 - z1_train) - z2;
            Ok(match mode {
                IbfMode::OneSided => one_sided,
                IbfMode::Symmetric => {
                    let z2_train = geometric_log_evidence(&train)?;
                    one_sided + z2_train
                }
            })
        })
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&log_terms) - (data.len() as f64).ln())
}

/// Intrinsic Bayes factor on the linear scale; see [`log_ibf12`].
pub fn ibf12(data: &[u64], mode: IbfMode) -> Result<f64> {
    Ok(log_ibf12(data, mode)?.exp())
}

/// Repeated-simulation IBF study: draw `n_runs` datasets of size `d_y` from
/// the named true model and count how often the intrinsic Bayes factor picks
/// the wrong one (a BF of exactly 1 counts as no error).
pub fn ibf_experiment(
    true_model: CountModel,
    true_param: f64,
    d_y: usize,
    n_runs: usize,
    seed: u64,
    mode: IbfMode,
) -> Result<SweepResult> {
    if d_y < 2 || n_runs == 0 {
        return Err(Error::InvalidArgument(
            "IBF experiment needs d_y >= 2 and n_runs >= 1".into(),
        ));
    }
    let mut errors = 0usize;
    let mut min_log = f64::INFINITY;
    let mut max_log = f64::NEG_INFINITY;
    for r in 0..n_runs {
        let mut rng = run_rng(seed, r);
        let data: Vec<u64> = (0..d_y)
            .map(|_| match true_model {
                CountModel::Poisson => sample_poisson(true_param, &mut rng),
                CountModel::Geometric => sample_geometric(true_param, &mut rng),
            })
            .collect();
        let log_bf = log_ibf12(&data, mode)?;
        let wrong = match true_model {
            CountModel::Poisson => log_bf < 0.0,
            CountModel::Geometric => log_bf > 0.0,
        };
        if wrong {
            errors += 1;
        }
        min_log = min_log.min(log_bf);
        max_log = max_log.max(log_bf);
    }
    Ok(SweepResult {
        rows: vec![SweepRow {
            param: true_param,
            d_y,
            min_bf: min_log.exp(),
            max_bf: max_log.exp(),
            errors,
            runs: n_runs,
            seed,
        }],
    })
}

/// Poisson counts bound to a rate prior, exposed through the generic model
/// interface for grid cross-checks and ratio constructions.
#[derive(Clone, Debug)]
pub struct PoissonObserved {
    data: Vec<u64>,
    prior: PoissonPrior,
    space: ParamSpace,
}

impl PoissonObserved {
    pub fn new(data: Vec<u64>, prior: PoissonPrior) -> Result<Self> {
        let (n, s) = stats(&data)?;
        let space = match prior {
            PoissonPrior::BoundedUniform { l } => {
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "uniform box width must be positive and finite, got {l}"
                    )));
                }
                ParamSpace::bounded(&[(0.0, l)])?
            }
            PoissonPrior::ImproperFlat => {
                // Rate posterior under the flat weight is Gamma(s+1, n);
                // the window ends deep in its upper tail.
                let w = (s + 1.0 + 40.0 * (s + 1.0).sqrt() + 100.0) / n;
                ParamSpace::truncated(
                    vec![DimSpec {
                        lower: 0.0,
                        upper: f64::INFINITY,
                        window: (0.0, w),
                    }],
                    "window covers the Gamma(s+1, n) likelihood bulk past 40 sd",
                )?
            }
        };
        Ok(PoissonObserved { data, prior, space })
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn prior(&self) -> PoissonPrior {
        self.prior
    }

    /// Closed-form log evidence for this dataset and prior.
    pub fn log_evidence(&self) -> Result<f64> {
        poisson_log_evidence(&self.data, self.prior)
    }
}

impl BayesModel for PoissonObserved {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        self.data
            .iter()
            .map(|&y| poisson_log_pmf(y, theta[0]))
            .sum()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        match self.prior {
            PoissonPrior::ImproperFlat => {
                if theta[0] >= 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            PoissonPrior::BoundedUniform { l } => {
                if (0.0..=l).contains(&theta[0]) {
                    -l.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn prior_is_proper(&self) -> bool {
        matches!(self.prior, PoissonPrior::BoundedUniform { .. })
    }

    fn prior_log_norm_known(&self) -> bool {
        self.prior_is_proper()
    }
}

impl SubsetLikelihood for PoissonObserved {
    fn n_obs(&self) -> usize {
        self.data.len()
    }

    fn log_like_point(&self, theta: &[f64], i: usize) -> f64 {
        poisson_log_pmf(self.data[i], theta[0])
    }
}

/// Geometric counts with the uniform prior on φ, exposed through the generic
/// model interface.
#[derive(Clone, Debug)]
pub struct GeometricObserved {
    data: Vec<u64>,
    space: ParamSpace,
}

impl GeometricObserved {
    pub fn new(data: Vec<u64>) -> Result<Self> {
        stats(&data)?;
        Ok(GeometricObserved {
            data,
            space: ParamSpace::bounded(&[(0.0, 1.0)])?,
        })
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn log_evidence(&self) -> Result<f64> {
        geometric_log_evidence(&self.data)
    }
}

impl BayesModel for GeometricObserved {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        self.data
            .iter()
            .map(|&y| geometric_log_pmf(y, theta[0]))
            .sum()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        if (0.0..=1.0).contains(&theta[0]) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl SubsetLikelihood for GeometricObserved {
    fn n_obs(&self) -> usize {
        self.data.len()
    }

    fn log_like_point(&self, theta: &[f64], i: usize) -> f64 {
        geometric_log_pmf(self.data[i], theta[0])
    }
}
