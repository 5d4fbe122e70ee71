use crate::linalg::{soft_threshold, soft_threshold_mut, DenseMatrix, SmoothingOperator};

/// `argmin_W ½‖W − C‖²_S + τ‖W‖₁`, column-separable.
///
/// Soft thresholding when `S = I`; otherwise accelerated proximal gradient
/// with constant momentum (μ = λ_min(S), L = λ_max(S)) started from `warm`.
/// Returns the minimizer and the iteration count.
pub fn prox_l1_metric(
    s: &SmoothingOperator,
    c: &DenseMatrix,
    tau: f64,
    warm: Option<&DenseMatrix>,
    tol: f64,
    max_iter: usize,
) -> (DenseMatrix, usize) {
    if s.is_identity() || tau == 0.0 {
        return (soft_threshold(c, tau), 0);
    }
    let l = s.eig_max();
    let kappa = l / s.eig_min();
    let momentum = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    let t = 1.0 / l;
    let sc = s.s() * c;
    let mut w = match warm {
        Some(w0) if w0.shape() == c.shape() => w0.clone(),
        _ => soft_threshold(c, tau),
    };
    let mut y = w.clone();
    for it in 0..max_iter {
        let grad = s.s() * &y - &sc;
        let mut next = &y - grad * t;
        soft_threshold_mut(&mut next, t * tau);
        let step = &next - &w;
        let delta = step.norm();
        y = &next + step * momentum;
        w = next;
        if delta <= tol * w.norm().max(f64::MIN_POSITIVE) {
            return (w, it + 1);
        }
    }
    (w, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{build_difference_penalty, build_smoother, l1_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn objective(s: &SmoothingOperator, c: &DenseMatrix, tau: f64, w: &DenseMatrix) -> f64 {
        let d = w - c;
        0.5 * d.dot(&(s.s() * &d)) + tau * l1_norm(w)
    }

    #[test]
    fn identity_is_soft_threshold() {
        let s = SmoothingOperator::identity(3);
        let c = DenseMatrix::from_column_slice(3, 1, &[2.0, -0.5, 0.1]);
        let (w, it) = prox_l1_metric(&s, &c, 0.3, None, 1e-12, 100);
        assert_eq!(it, 0);
        assert!((w[0] - 1.7).abs() < 1e-15 && (w[1] + 0.2).abs() < 1e-15 && w[2] == 0.0);
    }

    #[test]
    fn optimal_against_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = build_smoother(&build_difference_penalty(15, 2).unwrap(), 2.0).unwrap();
        let c = DenseMatrix::from_fn(15, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let (w, _) = prox_l1_metric(&s, &c, 0.4, None, 1e-14, 100_000);
        let best = objective(&s, &c, 0.4, &w);
        assert!(w.iter().any(|&a| a == 0.0));
        for _ in 0..300 {
            let pert = DenseMatrix::from_fn(15, 2, |_, _| (rng.random::<f64>() - 0.5) * 1e-3);
            assert!(best <= objective(&s, &c, 0.4, &(&w + pert)) + 1e-12);
        }
    }
}
