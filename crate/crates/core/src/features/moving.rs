//! Moving averages and guarded percent change over price histories.

/// Mean of the last `min(n, len)` values; `None` for an empty history.
pub fn sma(values: &[f64], n: usize) -> Option<f64> {
    assert!(n >= 1, "window must be at least 1");
    if values.is_empty() {
        return None;
    }
    let tail = &values[values.len().saturating_sub(n)..];
    Some(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Smoothing factor for an `n`-period exponential moving average.
pub fn ema_alpha(n: usize) -> f64 {
    2.0 / (n as f64 + 1.0)
}

/// Exponential moving average seeded with the first value.
pub fn ema(values: &[f64], n: usize) -> Option<f64> {
    assert!(n >= 1, "window must be at least 1");
    let alpha = ema_alpha(n);
    let (first, rest) = values.split_first()?;
    Some(rest.iter().fold(*first, |acc, &x| alpha * x + (1.0 - alpha) * acc))
}

/// `(current - previous) / previous`, missing on a zero or missing base.
pub fn percent_change(current: Option<f64>, previous: Option<f64>) -> Option<f64> {
    match (current, previous) {
        (Some(c), Some(p)) if p != 0.0 && c.is_finite() && p.is_finite() => Some((c - p) / p),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sma_windows() {
        assert_eq!(sma(&[100.0], 2), Some(100.0));
        assert_eq!(sma(&[100.0, 200.0], 2), Some(150.0));
        assert_eq!(sma(&[100.0, 200.0, 400.0], 2), Some(300.0));
        assert_eq!(sma(&[], 3), None);
    }

    #[test]
    fn ema_cases() {
        assert_eq!(ema(&[7.0], 3), Some(7.0));
        let v = ema(&[100.0, 200.0], 2).unwrap();
        assert!((v - 500.0 / 3.0).abs() < 1e-12, "{v}");
        assert_eq!(ema(&[], 2), None);
    }

    #[test]
    fn percent_change_cases() {
        assert_eq!(percent_change(Some(150.0), Some(100.0)), Some(0.5));
        assert_eq!(percent_change(Some(0.0), Some(100.0)), Some(-1.0));
        assert_eq!(percent_change(Some(100.0), Some(0.0)), None);
        assert_eq!(percent_change(None, Some(1.0)), None);
    }

    proptest! {
        #[test]
        fn ema_of_constant_series(c in -1e6f64..1e6, len in 1usize..20, n in 1usize..10) {
            let v = vec![c; len];
            let e = ema(&v, n).unwrap();
            prop_assert!((e - c).abs() <= 1e-9 * c.abs().max(1.0));
        }
    }
}
