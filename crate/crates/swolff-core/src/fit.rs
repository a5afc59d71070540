//! Log-log slope estimation for truncation-order checks.

/// Least-squares slope of `ln r` against `ln eps`.
///
/// Points with nonpositive or vanishing residual are dropped (they indicate
/// the residual underflowed, i.e. decay faster than any power at the probed
/// scale). If fewer than two points survive, `f64::INFINITY` is returned so
/// `slope >= threshold` checks treat an identically-zero residual as passing.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(eps, r)| *eps > 0.0 && *r > 1e-290)
        .map(|&(eps, r)| (eps.ln(), r.ln()))
        .collect();
    if usable.len() < 2 {
        return f64::INFINITY;
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|(x, _)| x).sum();
    let sy: f64 = usable.iter().map(|(_, y)| y).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = usable.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Geometric grid `top, top/2, ..., top/2^(count-1)`, descending.
pub fn halving_grid(top: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| top / (1u64 << k) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let pts: Vec<(f64, f64)> = halving_grid(0.1, 5).into_iter().map(|e| (e, 3.0 * e.powi(4))).collect();
        assert!((log_log_slope(&pts) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_residuals_count_as_infinite_order() {
        let pts = vec![(0.1, 0.0), (0.05, 0.0)];
        assert_eq!(log_log_slope(&pts), f64::INFINITY);
    }
}
