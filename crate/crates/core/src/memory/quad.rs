use crate::quadrature::integrate_adaptive;

/// Composite midpoint rule `k Σ_{j<n} g(s_j)` on `[0, n k]`.
pub fn midpoint_sum(g: &dyn Fn(f64) -> f64, n: usize, k: f64) -> f64 {
    (0..n).map(|j| g((j as f64 + 0.5) * k)).sum::<f64>() * k
}

/// Signed midpoint-rule error `k Σ g(s_j) − ∫₀^{nk} g`, accumulated panel
/// by panel as `∫ (g(s_j) − g(s)) ds` so that no large terms cancel.
pub fn quadrature_error(g: &dyn Fn(f64) -> f64, n: usize, k: f64) -> f64 {
    (0..n)
        .map(|j| {
            let a = j as f64 * k;
            let mid = g(a + 0.5 * k);
            integrate_adaptive(&|s| mid - g(s), a, a + k, 1e-17)
        })
        .sum()
}

/// Peano kernel of the composite midpoint rule for the error functional
/// above: `−(s − t_j)²/2` on the left half of panel `j` and
/// `−(s − t_{j+1})²/2` on the right half.
pub fn peano_kernel(s: f64, k: f64) -> f64 {
    let j = (s / k).floor();
    let a = j * k;
    let b = a + k;
    if s - a <= 0.5 * k {
        -0.5 * (s - a) * (s - a)
    } else {
        -0.5 * (b - s) * (b - s)
    }
}

/// The midpoint error written as `Σ_j ∫ ψ(s) g''(s) ds`, integrated half
/// panel by half panel.
pub fn peano_error(g2: &dyn Fn(f64) -> f64, n: usize, k: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..n {
        let a = j as f64 * k;
        let m = a + 0.5 * k;
        let b = a + k;
        sum += integrate_adaptive(&|s| -0.5 * (s - a) * (s - a) * g2(s), a, m, 1e-16);
        sum += integrate_adaptive(&|s| -0.5 * (b - s) * (b - s) * g2(s), m, b, 1e-16);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_linears() {
        assert_eq!(quadrature_error(&|_| 1.0, 7, 0.1), 0.0);
        assert!(quadrature_error(&|s| s, 7, 0.1).abs() < 1e-14);
        assert_eq!(peano_error(&|_| 0.0, 7, 0.1), 0.0);
    }

    #[test]
    fn kernel_is_continuous_and_nonpositive() {
        let k = 0.2;
        for i in 0..200 {
            let s = i as f64 * 0.0071;
            assert!(peano_kernel(s, k) <= 0.0);
            assert!(peano_kernel(s, k) >= -k * k / 8.0 - 1e-15);
        }
    }
}
