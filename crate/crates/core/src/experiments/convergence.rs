//! Convergence detection on evaluation curves.

/// Tolerance under which two evaluation returns count as unchanged.
pub const CONVERGENCE_TOL: f64 = 1e-9;

/// Earliest evaluation step from which every later return stays within `tol` of the
/// final return, provided that stable stretch covers at least `window` steps.
pub fn detect_convergence(series: &[(u64, f64)], window: u64, tol: f64) -> Option<u64> {
    let &(last_step, last) = series.last()?;
    let mut start = series.len() - 1;
    while start > 0 && (series[start - 1].1 - last).abs() <= tol {
        start -= 1;
    }
    let step = series[start].0;
    (last_step - step >= window).then_some(step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn steps(values: &[f64], every: u64, first: u64) -> Vec<(u64, f64)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (first + i as u64 * every, v))
            .collect()
    }

    #[test]
    fn constant_series_converges_at_start() {
        let s = steps(&[0.5; 101], 100, 0);
        assert_eq!(detect_convergence(&s, 2000, CONVERGENCE_TOL), Some(0));
    }

    #[test]
    fn change_at_last_evaluation_is_not_converged() {
        let mut v = vec![0.5; 100];
        v.push(0.7);
        assert_eq!(detect_convergence(&steps(&v, 100, 0), 2000, CONVERGENCE_TOL), None);
    }

    #[test]
    fn stabilising_at_three_thousand() {
        let v: Vec<f64> = (0..=100).map(|i| if i < 30 { i as f64 } else { 1.0 }).collect();
        let s = steps(&v, 100, 0);
        assert_eq!(detect_convergence(&s, 2000, CONVERGENCE_TOL), Some(3000));
        assert_eq!(detect_convergence(&s, 7000, CONVERGENCE_TOL), Some(3000));
        assert_eq!(detect_convergence(&s, 7001, CONVERGENCE_TOL), None);
    }

    #[test]
    fn tiny_wobble_counts_as_stable() {
        let s = steps(&[0.0, 1.0, 1.0 + 1e-12, 1.0], 10, 10);
        assert_eq!(detect_convergence(&s, 20, CONVERGENCE_TOL), Some(20));
    }

    #[test]
    fn empty_series() {
        assert_eq!(detect_convergence(&[], 0, CONVERGENCE_TOL), None);
    }

    proptest! {
        #[test]
        fn detected_suffix_is_stable(values in prop::collection::vec(0u8..3, 1..60), window in 0u64..400) {
            let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
            let s = steps(&v, 10, 10);
            if let Some(c) = detect_convergence(&s, window, CONVERGENCE_TOL) {
                let last = *v.last().unwrap();
                prop_assert!(s.iter().filter(|(t, _)| *t >= c).all(|(_, x)| *x == last));
                prop_assert!(s.last().unwrap().0 - c >= window);
                if let Some(prev) = s.iter().rev().find(|(t, _)| *t < c) {
                    prop_assert!(prev.1 != last);
                }
            }
        }
    }
}
