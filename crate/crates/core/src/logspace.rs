//! Log-domain reductions.
//!
//! Everything downstream (quadrature, evidence ratios, model averaging) works
//! on log densities, with `f64::NEG_INFINITY` standing for zero density. NaN
//! is never a value here: it is treated as a bug in the caller and panics.

/// Log of a sum of exponentials, `ln Σ exp(v_i)`, stabilized by shifting out
/// the maximum so that inputs anywhere below ~700 cannot overflow.
///
/// Returns `NEG_INFINITY` when every input is `NEG_INFINITY` (a sum of
/// zeros). The reduction order is the slice order, so results are exactly
/// reproducible for a given input sequence.
///
/// # Panics
/// Panics on an empty slice or on any NaN input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "log_sum_exp of empty sequence");
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        assert!(!v.is_nan(), "log_sum_exp input contains NaN");
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        // All terms are zero; the +inf case falls through and returns inf.
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Log of the arithmetic mean of exponentials, `ln ((1/n) Σ exp(v_i))`.
///
/// # Panics
/// Same contract as [`log_sum_exp`].
pub fn log_mean_exp(values: &[f64]) -> f64 {
    log_sum_exp(values) - (values.len() as f64).ln()
}

/// Incremental log-sum-exp accumulator for streaming reductions that cannot
/// hold all terms at once. `merge` is associative in exact arithmetic; users
/// that need bit-reproducibility must keep the merge order fixed.
#[derive(Clone, Copy, Debug)]
pub struct LogSumAcc {
    max: f64,
    /// Sum of exp(v - max) over everything absorbed so far.
    scaled: f64,
    empty: bool,
}

impl LogSumAcc {
    pub fn new() -> Self {
        LogSumAcc {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
            empty: true,
        }
    }

    pub fn add(&mut self, v: f64) {
        assert!(!v.is_nan(), "log-sum accumulator fed NaN");
        self.empty = false;
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            if self.max > f64::NEG_INFINITY {
                self.scaled = self.scaled * (self.max - v).exp() + 1.0;
            } else {
                self.scaled = 1.0;
            }
            self.max = v;
        } else {
            self.scaled += (v - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        assert!(!self.empty, "log-sum accumulator drained while empty");
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_equal_large_terms() {
        // ln(e^1000 + e^1000) = 1000 + ln 2, which plain exponentiation
        // cannot reach without overflow.
        let got = log_sum_exp(&[1000.0, 1000.0]);
        assert_eq!(got, 1000.0 + std::f64::consts::LN_2);
    }

    #[test]
    fn matches_naive_sum_in_safe_range() {
        let v = [-3.0f64, -1.5, 0.25, 2.0];
        let naive: f64 = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_exp(&v), naive, max_relative = 1e-15);
    }

    #[test]
    fn all_neg_infinity_is_neg_infinity() {
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn neg_infinity_terms_drop_out() {
        let got = log_sum_exp(&[f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY]);
        assert_eq!(got, 0.0);
    }

    #[test]
    #[should_panic(expected = "empty")]
    fn empty_input_panics() {
        log_sum_exp(&[]);
    }

    #[test]
    #[should_panic(expected = "NaN")]
    fn nan_input_panics() {
        log_sum_exp(&[0.0, f64::NAN]);
    }

    #[test]
    fn mean_of_identical_terms_is_the_term() {
        let got = log_mean_exp(&[-7.25; 11]);
        assert_relative_eq!(got, -7.25, max_relative = 1e-15);
    }

    #[test]
    fn accumulator_agrees_with_slice_reduction() {
        let v = [-900.0, -899.5, -905.0, f64::NEG_INFINITY, -898.75];
        let mut acc = LogSumAcc::new();
        for &x in &v {
            acc.add(x);
        }
        assert_relative_eq!(acc.value(), log_sum_exp(&v), max_relative = 1e-14);
    }
}
