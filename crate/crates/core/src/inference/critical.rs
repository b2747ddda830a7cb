//! Order-statistic critical values and bootstrap p-values.

use crate::error::{RankError, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha >= T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(RankError::InvalidArgument(format!("level {} must lie in [0, 1)", to_f64(alpha))))
    }
}

/// The `floor(B (1 - alpha))`-th smallest draw, i.e. the empirical
/// `1 - alpha` quantile of the bootstrap distribution.
pub fn critical_value<T: Real>(draws: &[T], alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    if draws.iter().any(|x| x != x) {
        return Err(RankError::InvalidInput("bootstrap draw is NaN".into()));
    }
    let b = draws.len();
    // The small offset keeps exact products such as 100 * 0.95 from
    // flooring to 94 after rounding.
    let position = (from_usize::<T>(b) * (T::one() - alpha) + lit(1e-9)).floor();
    let j = position.to_usize().unwrap_or(0).min(b);
    if j < 1 {
        return Err(RankError::InsufficientDraws { draws: b, alpha: to_f64(alpha) });
    }
    let mut sorted = draws.to_vec();
    let (_, value, _) = sorted.select_nth_unstable_by(j - 1, |a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(*value)
}

/// `(1 + #{draws >= statistic}) / (B + 1)`.
pub fn bootstrap_p_value<T: Real>(draws: &[T], statistic: T) -> T {
    let exceed = draws.iter().filter(|&&d| d >= statistic).count();
    from_usize::<T>(1 + exceed) / from_usize::<T>(draws.len() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_values() {
        let draws: Vec<f64> = (1..=10).rev().map(|x| x as f64).collect();
        assert_eq!(critical_value(&draws, 0.05).unwrap(), 9.0);
        assert_eq!(critical_value(&draws, 0.5).unwrap(), 5.0);
        assert_eq!(critical_value(&draws, 0.0).unwrap(), 10.0);
        assert!(matches!(critical_value(&draws, 0.95), Err(RankError::InsufficientDraws { .. })));
        assert!(critical_value(&draws, 1.0).is_err());
        assert!(critical_value(&draws, -0.1).is_err());
    }

    #[test]
    fn exact_products_do_not_lose_an_index() {
        let draws: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        assert_eq!(critical_value(&draws, 0.05).unwrap(), 95.0);
        assert_eq!(critical_value(&draws, 0.1).unwrap(), 90.0);
    }

    #[test]
    fn p_value_extremes() {
        let draws: Vec<f64> = (0..499).map(|x| x as f64).collect();
        assert_eq!(bootstrap_p_value(&draws, -1.0), 1.0);
        assert_eq!(bootstrap_p_value(&draws, 1e9), 1.0 / 500.0);
    }

    proptest! {
        #[test]
        fn critical_value_is_monotone_in_level(
            draws in proptest::collection::vec(-10.0f64..10.0, 20..200),
            a in 0.01f64..0.5,
            gap in 0.0f64..0.4,
        ) {
            let tight = critical_value(&draws, a).unwrap();
            let loose = critical_value(&draws, a + gap).unwrap();
            prop_assert!(loose <= tight);
        }

        #[test]
        fn rejection_agrees_with_p_value(
            draws in proptest::collection::vec(0.0f64..10.0, 19..400),
            stat in 0.0f64..12.0,
        ) {
            // stat > c_{1-alpha} leaves at most B - floor(B(1-alpha)) draws above it.
            let alpha = 0.1;
            let c = critical_value(&draws, alpha).unwrap();
            let p = bootstrap_p_value(&draws, stat);
            let b = draws.len() as f64;
            if stat > c {
                prop_assert!(p <= alpha + 2.0 / (b + 1.0) + 1e-12);
            }
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
