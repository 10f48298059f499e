use super::matrix::DenseMatrix;

/// Proximal map of `tau * |.|`: `sign(x) * max(|x| - tau, 0)`.
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let mag = x.abs() - tau;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// Element-wise [`soft_threshold`].
pub fn soft_threshold_matrix(x: &DenseMatrix, tau: f64) -> DenseMatrix {
    x.map(|v| soft_threshold(v, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_cases() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn is_prox_of_l1(x in -10.0f64..10.0, tau in 0.0f64..5.0) {
            let objective = |z: f64| tau * z.abs() + 0.5 * (z - x).powi(2);
            let step = 1e-3;
            let mut best = (f64::INFINITY, 0.0);
            let mut z = -15.0;
            while z <= 15.0 {
                let f = objective(z);
                if f < best.0 {
                    best = (f, z);
                }
                z += step;
            }
            prop_assert!((soft_threshold(x, tau) - best.1).abs() <= step);
        }
    }
}
