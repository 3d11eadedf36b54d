//! Deterministic grid quadrature in log space.
//!
//! Evidence integrals here are low-dimensional (1-D and 2-D throughout) but
//! their integrands live on wildly different log scales, so integration is a
//! single stabilized [`log_sum_exp`] over grid nodes rather than a sum of
//! densities. Node placement, evaluation order, and the reduction order are
//! all fixed functions of the [`GridSpec`], which makes every integral
//! bit-reproducible for a given spec regardless of thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evidence::{EvidenceMethod, EvidenceResult};
use crate::logspace::log_sum_exp;
use crate::model::{BayesModel, ParamSpace};

/// Node placement rule. Midpoint is the default: it never places a node on
/// the box boundary, which lets integrands be singular at the edges (period
/// at zero, improper densities at the origin) without special-casing.
/// Trapezoid exists for cross-checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureRule {
    Midpoint,
    Trapezoid,
}

/// Default ceiling on total grid nodes; guards against accidentally
/// requesting a grid that cannot be evaluated in reasonable time.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Evaluations are chunked for parallel node evaluation; values land in a
/// preallocated buffer indexed by node, so the reduction sees the same
/// sequence no matter how many threads ran.
const PAR_CHUNK: usize = 8_192;
const PAR_THRESHOLD: usize = 1 << 16;

/// A rectangular evaluation grid: per-dimension node counts over a finite
/// box, a placement rule, and a node budget.
#[derive(Clone, Debug)]
pub struct GridSpec {
    points_per_dim: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    rule: QuadratureRule,
    budget: usize,
    /// Cell width (midpoint) or node spacing (trapezoid) per dimension.
    steps: Vec<f64>,
}

impl GridSpec {
    /// Midpoint grid with the default budget.
    pub fn new(points_per_dim: &[usize], bounds: &[(f64, f64)]) -> Result<Self> {
        Self::with_rule(points_per_dim, bounds, QuadratureRule::Midpoint)
    }

    pub fn with_rule(
        points_per_dim: &[usize],
        bounds: &[(f64, f64)],
        rule: QuadratureRule,
    ) -> Result<Self> {
        if points_per_dim.is_empty() || points_per_dim.len() != bounds.len() {
            return Err(Error::LengthMismatch(format!(
                "{} point counts vs {} bounds",
                points_per_dim.len(),
                bounds.len()
            )));
        }
        for &n in points_per_dim {
            if n < 2 {
                return Err(Error::InvalidArgument(format!(
                    "need at least 2 points per dimension, got {n}"
                )));
            }
        }
        for &(a, b) in bounds {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!(
                    "grid bounds must be finite with a < b, got [{a}, {b}]"
                )));
            }
        }
        let steps = points_per_dim
            .iter()
            .zip(bounds)
            .map(|(&n, &(a, b))| match rule {
                QuadratureRule::Midpoint => (b - a) / n as f64,
                QuadratureRule::Trapezoid => (b - a) / (n - 1) as f64,
            })
            .collect();
        let spec = GridSpec {
            points_per_dim: points_per_dim.to_vec(),
            bounds: bounds.to_vec(),
            rule,
            budget: DEFAULT_NODE_BUDGET,
            steps,
        };
        spec.check_budget()?;
        Ok(spec)
    }

    /// Grid over a model's integration windows with `points` nodes in every
    /// dimension.
    pub fn for_space(space: &ParamSpace, points: usize) -> Result<Self> {
        let bounds = space.windows();
        Self::new(&vec![points; bounds.len()], &bounds)
    }

    /// Replace the node budget (validated against the current shape).
    pub fn with_budget(mut self, budget: usize) -> Result<Self> {
        self.budget = budget;
        self.check_budget()?;
        Ok(self)
    }

    fn check_budget(&self) -> Result<()> {
        let total = self.total_points_wide();
        if total > self.budget as u128 {
            return Err(Error::BudgetExceeded {
                requested: total,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn total_points_wide(&self) -> u128 {
        self.points_per_dim
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }

    pub fn total_points(&self) -> usize {
        self.total_points_wide() as usize
    }

    pub fn n_dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn points_per_dim(&self) -> &[usize] {
        &self.points_per_dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Log of the volume element attached to an interior node.
    pub fn log_cell_volume(&self) -> f64 {
        self.steps.iter().map(|h| h.ln()).sum()
    }

    /// Coordinates of the node with row-major flat index `flat`
    /// (last dimension fastest).
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut coord = vec![0.0; self.n_dims()];
        self.fill_node(flat, &mut coord);
        coord
    }

    fn fill_node(&self, flat: usize, coord: &mut [f64]) {
        let mut rem = flat;
        for d in (0..self.points_per_dim.len()).rev() {
            let n = self.points_per_dim[d];
            let i = rem % n;
            rem /= n;
            let (a, _) = self.bounds[d];
            coord[d] = match self.rule {
                QuadratureRule::Midpoint => a + (i as f64 + 0.5) * self.steps[d],
                QuadratureRule::Trapezoid => a + i as f64 * self.steps[d],
            };
        }
    }

    /// Log of the node's quadrature weight relative to the volume element
    /// (0 for midpoint everywhere; -ln 2 per boundary-touching dimension for
    /// trapezoid).
    fn log_node_weight(&self, flat: usize) -> f64 {
        match self.rule {
            QuadratureRule::Midpoint => 0.0,
            QuadratureRule::Trapezoid => {
                let mut rem = flat;
                let mut edges = 0u32;
                for d in (0..self.points_per_dim.len()).rev() {
                    let n = self.points_per_dim[d];
                    let i = rem % n;
                    rem /= n;
                    if i == 0 || i == n - 1 {
                        edges += 1;
                    }
                }
                -(edges as f64) * std::f64::consts::LN_2
            }
        }
    }
}

/// `ln ∫ exp(f(θ)) dθ` over the grid box.
///
/// `f` is evaluated at every node (in parallel for large grids; the stored
/// order is by node index either way) and reduced by one [`log_sum_exp`]
/// pass in node order. A NaN from `f` is an error identifying the offending
/// node; `NEG_INFINITY` marks zero density and participates normally.
pub fn log_integrate<F>(f: F, grid: &GridSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid.check_budget()?;
    let total = grid.total_points();
    let ndims = grid.n_dims();
    let mut values = vec![0.0f64; total];

    let eval_chunk = |chunk_start: usize, out: &mut [f64]| {
        let mut coord = vec![0.0f64; ndims];
        for (j, slot) in out.iter_mut().enumerate() {
            let flat = chunk_start + j;
            grid.fill_node(flat, &mut coord);
            *slot = f(&coord) + grid.log_node_weight(flat);
        }
    };

    if total >= PAR_THRESHOLD {
        values
            .par_chunks_mut(PAR_CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| eval_chunk(ci * PAR_CHUNK, chunk));
    } else {
        eval_chunk(0, &mut values);
    }

    if let Some(bad) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::NanAtNode {
            node: grid.node(bad),
        });
    }
    Ok(log_sum_exp(&values) + grid.log_cell_volume())
}

/// Grid evidence `ln ∫ ℓ(y|θ) g(θ) dθ` for a model with a proper prior.
///
/// Improper priors are rejected: their evidence is defined only up to an
/// arbitrary constant and must go through one of the constructions in
/// [`crate::objective`] instead.
pub fn evidence_grid<M: BayesModel + ?Sized>(model: &M, grid: &GridSpec) -> Result<EvidenceResult> {
    if !model.prior_is_proper() {
        return Err(Error::ImproperPrior(
            "grid evidence needs a proper prior; improper baselines only make sense \
             inside ratio constructions where their constant cancels"
                .into(),
        ));
    }
    if grid.n_dims() != model.space().n_dims() {
        return Err(Error::LengthMismatch(format!(
            "grid has {} dims, model space has {}",
            grid.n_dims(),
            model.space().n_dims()
        )));
    }
    let log_z = log_integrate(|theta| model.log_post_unnorm(theta), grid)?;
    Ok(EvidenceResult {
        log_z,
        method: EvidenceMethod::Grid,
        grid_points: Some(grid.points_per_dim().to_vec()),
        truncation_note: model.space().truncation_note().map(str::to_owned),
    })
}

/// Outcome of [`refine_until`]: the finest integral computed, the grid that
/// produced it, and whether the doubling sequence met the tolerance. A
/// non-converged outcome is returned flagged rather than as an error so the
/// caller can still inspect the value.
#[derive(Clone, Debug)]
pub struct RefineOutcome {
    pub log_integral: f64,
    pub grid: GridSpec,
    pub converged: bool,
    /// |Δ log-integral| between the last two refinement levels.
    pub last_delta: f64,
}

/// Double the per-dimension node count (starting from 16) until two
/// successive log-integrals differ by less than `tol`, the per-dimension
/// count would exceed `max_points_per_dim`, or the node budget is hit.
pub fn refine_until<F>(
    f: F,
    bounds: &[(f64, f64)],
    tol: f64,
    max_points_per_dim: usize,
) -> Result<RefineOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "refinement tolerance must be positive, got {tol}"
        )));
    }
    let mut n = 16usize.min(max_points_per_dim).max(2);
    let mut grid = GridSpec::new(&vec![n; bounds.len()], bounds)?;
    let mut value = log_integrate(&f, &grid)?;
    let mut delta = f64::INFINITY;
    loop {
        let next_n = match n.checked_mul(2) {
            Some(m) if m <= max_points_per_dim => m,
            _ => break,
        };
        let next_grid = match GridSpec::new(&vec![next_n; bounds.len()], bounds) {
            Ok(g) => g,
            // Budget exhausted before the tolerance: stop and report what
            // we have, flagged.
            Err(Error::BudgetExceeded { .. }) => break,
            Err(e) => return Err(e),
        };
        let next = log_integrate(&f, &next_grid)?;
        delta = log_delta(next, value);
        n = next_n;
        grid = next_grid;
        value = next;
        if delta < tol {
            return Ok(RefineOutcome {
                log_integral: value,
                grid,
                converged: true,
                last_delta: delta,
            });
        }
    }
    Ok(RefineOutcome {
        log_integral: value,
        grid,
        converged: false,
        last_delta: delta,
    })
}

/// Difference between log values, treating a pair of `-inf` (two exact
/// zeros) as agreement.
fn log_delta(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Anything that can evaluate `ln ∫ exp(w(θ)) dθ` over a model's window.
///
/// Grid quadrature implements this generically; model-specific closed forms
/// can stand in wherever an integrator is accepted, which is how the ratio
/// constructions stay backend-agnostic.
pub trait Integrator: Sync {
    fn log_integral(&self, w: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<f64>;
}

/// [`Integrator`] backed by [`log_integrate`] on a fixed grid.
#[derive(Clone, Debug)]
pub struct GridIntegrator {
    pub grid: GridSpec,
}

impl GridIntegrator {
    pub fn new(grid: GridSpec) -> Self {
        GridIntegrator { grid }
    }

    /// Grid over a model space's integration windows.
    pub fn for_space(space: &ParamSpace, points_per_dim: usize) -> Result<Self> {
        Ok(GridIntegrator {
            grid: GridSpec::for_space(space, points_per_dim)?,
        })
    }
}

impl Integrator for GridIntegrator {
    fn log_integral(&self, w: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<f64> {
        log_integrate(w, &self.grid)
    }
}

/// Numeric check that a model flagged as carrying a normalized proper prior
/// actually integrates to 1 over its window. Returns the log prior mass.
pub fn prior_log_mass<M: BayesModel + ?Sized>(model: &M, points_per_dim: usize) -> Result<f64> {
    let grid = GridSpec::for_space(model.space(), points_per_dim)?;
    log_integrate(|theta| model.log_prior(theta), &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnModel;
    use approx::assert_abs_diff_eq;

    fn std_normal_logpdf(x: f64) -> f64 {
        -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    #[test]
    fn unit_box_constant_integrand() {
        let grid = GridSpec::new(&[1000], &[(0.0, 1.0)]).unwrap();
        let v = log_integrate(|_| 0.0, &grid).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_density_from_log_integrand() {
        // exp(ln x) = x on (0, 2]: integral 2. Midpoint never touches the
        // singular endpoint and is exact for linear integrands.
        let grid = GridSpec::new(&[100_000], &[(0.0, 2.0)]).unwrap();
        let v = log_integrate(|t| t[0].ln(), &grid).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn normal_density_normalizes() {
        let grid = GridSpec::new(&[100_000], &[(-8.0, 8.0)]).unwrap();
        let v = log_integrate(|t| std_normal_logpdf(t[0]), &grid).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn trapezoid_matches_midpoint_on_smooth_integrand() {
        let bounds = [(-6.0, 6.0)];
        let mid = GridSpec::new(&[20_000], &bounds).unwrap();
        let trap = GridSpec::with_rule(&[20_001], &bounds, QuadratureRule::Trapezoid).unwrap();
        let a = log_integrate(|t| std_normal_logpdf(t[0]), &mid).unwrap();
        let b = log_integrate(|t| std_normal_logpdf(t[0]), &trap).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-6);
    }

    #[test]
    fn two_dim_product_splits_into_one_dim_factors() {
        let g2 = GridSpec::new(&[900, 1100], &[(-7.0, 7.0), (-6.5, 6.5)]).unwrap();
        let v2 = log_integrate(|t| std_normal_logpdf(t[0]) + std_normal_logpdf(2.0 * t[1]), &g2)
            .unwrap();
        let ga = GridSpec::new(&[900], &[(-7.0, 7.0)]).unwrap();
        let gb = GridSpec::new(&[1100], &[(-6.5, 6.5)]).unwrap();
        let va = log_integrate(|t| std_normal_logpdf(t[0]), &ga).unwrap();
        let vb = log_integrate(|t| std_normal_logpdf(2.0 * t[0]), &gb).unwrap();
        assert_abs_diff_eq!(v2, va + vb, epsilon = 1e-8);
    }

    #[test]
    fn box_halves_combine_to_whole() {
        let f = |t: &[f64]| std_normal_logpdf(t[0] - 0.37);
        let whole = GridSpec::new(&[4096], &[(-8.0, 8.0)]).unwrap();
        let left = GridSpec::new(&[2048], &[(-8.0, 0.0)]).unwrap();
        let right = GridSpec::new(&[2048], &[(0.0, 8.0)]).unwrap();
        let w = log_integrate(f, &whole).unwrap();
        let l = log_integrate(f, &left).unwrap();
        let r = log_integrate(f, &right).unwrap();
        assert_abs_diff_eq!(log_sum_exp(&[l, r]), w, epsilon = 1e-10);
    }

    #[test]
    fn translation_of_integrand_translates_integral() {
        let grid = GridSpec::new(&[5000], &[(-5.0, 5.0)]).unwrap();
        let base = log_integrate(|t| std_normal_logpdf(t[0]), &grid).unwrap();
        let shifted = log_integrate(|t| std_normal_logpdf(t[0]) - 500.0, &grid).unwrap();
        assert_abs_diff_eq!(shifted, base - 500.0, epsilon = 1e-12);
    }

    #[test]
    fn doubling_at_convergence_changes_little() {
        let g1 = GridSpec::new(&[262_144], &[(-8.0, 8.0)]).unwrap();
        let g2 = GridSpec::new(&[524_288], &[(-8.0, 8.0)]).unwrap();
        let a = log_integrate(|t| std_normal_logpdf(t[0]), &g1).unwrap();
        let b = log_integrate(|t| std_normal_logpdf(t[0]), &g2).unwrap();
        assert!((a - b).abs() < 1e-8, "doubling moved integral by {}", a - b);
    }

    #[test]
    fn budget_is_enforced() {
        let err = GridSpec::new(&[4000, 4000], &[(0.0, 1.0), (0.0, 1.0)]).unwrap_err();
        match err {
            Error::BudgetExceeded { requested, budget } => {
                assert_eq!(requested, 16_000_000);
                assert_eq!(budget, DEFAULT_NODE_BUDGET);
            }
            other => panic!("wrong error: {other}"),
        }
        // Raising the budget admits the same grid shape.
        assert!(GridSpec::new(&[2000, 2000], &[(0.0, 1.0), (0.0, 1.0)])
            .unwrap()
            .with_budget(4_000_001)
            .is_ok());
    }

    #[test]
    fn nan_integrand_names_the_node() {
        let grid = GridSpec::new(&[16], &[(0.0, 1.0)]).unwrap();
        let err = log_integrate(
            |t| if t[0] > 0.5 { f64::NAN } else { 0.0 },
            &grid,
        )
        .unwrap_err();
        match err {
            Error::NanAtNode { node } => assert!(node[0] > 0.5),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn zero_density_everywhere_is_log_zero() {
        let grid = GridSpec::new(&[64], &[(0.0, 1.0)]).unwrap();
        let v = log_integrate(|_| f64::NEG_INFINITY, &grid).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn repeat_evaluation_is_bit_identical() {
        let grid = GridSpec::new(&[400, 300], &[(-4.0, 4.0), (-3.0, 3.0)]).unwrap();
        let f = |t: &[f64]| std_normal_logpdf(t[0]) + std_normal_logpdf(t[1] - 0.2);
        let a = log_integrate(f, &grid).unwrap();
        let b = log_integrate(f, &grid).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn evidence_grid_delta_prior_recovers_likelihood() {
        // Uniform prior on a box of width 1e-6 around θ*: evidence collapses
        // to the likelihood at θ*.
        let theta_star = 0.7311;
        let half = 5e-7;
        let space =
            crate::model::ParamSpace::bounded(&[(theta_star - half, theta_star + half)]).unwrap();
        let like = |t: &[f64]| std_normal_logpdf(t[0] - 1.0);
        let model = FnModel::new(space, like, move |_: &[f64]| -(2.0 * half).ln());
        let grid = GridSpec::for_space(model.space(), 64).unwrap();
        let z = evidence_grid(&model, &grid).unwrap();
        assert_abs_diff_eq!(z.log_z, like(&[theta_star]), epsilon = 1e-6);
        assert_eq!(z.method, EvidenceMethod::Grid);
        assert_eq!(z.grid_points.as_deref(), Some(&[64][..]));
    }

    #[test]
    fn evidence_grid_rejects_improper_prior() {
        let space = crate::model::ParamSpace::bounded(&[(0.0, 1.0)]).unwrap();
        let model = FnModel::new(space, |_: &[f64]| 0.0, |_: &[f64]| 0.0).improper();
        let grid = GridSpec::for_space(model.space(), 16).unwrap();
        assert!(matches!(
            evidence_grid(&model, &grid),
            Err(Error::ImproperPrior(_))
        ));
    }

    #[test]
    fn refine_until_converges_on_smooth_density() {
        let out = refine_until(
            |t: &[f64]| std_normal_logpdf(t[0]),
            &[(-8.0, 8.0)],
            1e-9,
            1 << 22,
        )
        .unwrap();
        assert!(out.converged);
        assert!(out.last_delta < 1e-9);
        assert_abs_diff_eq!(out.log_integral, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn refine_until_flags_unresolvable_oscillation() {
        // Oscillation with ~160k periods on the box: hopeless below 64
        // points per dimension, so the outcome must come back flagged.
        let out = refine_until(
            |t: &[f64]| 100.0 * (1.0e6 * t[0]).sin(),
            &[(0.0, 1.0)],
            1e-10,
            64,
        )
        .unwrap();
        assert!(!out.converged);
        assert!(out.last_delta >= 1e-10);
    }

    #[test]
    fn prior_mass_check_sees_normalized_prior() {
        let space = crate::model::ParamSpace::bounded(&[(0.0, 4.0)]).unwrap();
        let model = FnModel::new(space, |_: &[f64]| 0.0, |_: &[f64]| -(4.0f64).ln());
        let mass = prior_log_mass(&model, 1024).unwrap();
        assert_abs_diff_eq!(mass, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn integrator_trait_object_matches_direct_call() {
        let grid = GridSpec::new(&[2048], &[(-6.0, 6.0)]).unwrap();
        let direct = log_integrate(|t| std_normal_logpdf(t[0]), &grid).unwrap();
        let igr: &dyn Integrator = &GridIntegrator::new(grid.clone());
        let via_trait = igr
            .log_integral(&|t: &[f64]| std_normal_logpdf(t[0]))
            .unwrap();
        assert_eq!(direct.to_bits(), via_trait.to_bits());
    }
}
