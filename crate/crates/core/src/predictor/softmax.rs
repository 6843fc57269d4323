//! Softmax and multiclass cross-entropy for a row-major weight matrix of
//! shape `classes × dim`.

/// Stabilized softmax: the max logit is subtracted before exponentiation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn logits(weights: &[f64], classes: usize, x: &[f64]) -> Vec<f64> {
    let dim = x.len();
    debug_assert_eq!(weights.len(), classes * dim);
    weights
        .chunks_exact(dim)
        .map(|row| row.iter().zip(x).map(|(w, xi)| w * xi).sum())
        .collect()
}

/// `-log p[target]` computed through log-sum-exp.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

/// Summed cross-entropy over `rows` and its gradient with respect to the
/// weights. The gradient is accumulated into `grad`.
pub fn cross_entropy_sum(
    weights: &[f64],
    classes: usize,
    rows: &[(&[f64], usize)],
    grad: &mut [f64],
) -> f64 {
    let mut loss = 0.0;
    for (x, target) in rows {
        let z = logits(weights, classes, x);
        loss += cross_entropy(&z, *target);
        let p = softmax(&z);
        let dim = x.len();
        for (c, pc) in p.iter().enumerate() {
            let delta = pc - if c == *target { 1.0 } else { 0.0 };
            let row = &mut grad[c * dim..(c + 1) * dim];
            for (g, xi) in row.iter_mut().zip(x.iter()) {
                *g += delta * xi;
            }
        }
    }
    loss
}

/// Training objective `Σ_i −log p̂_{i,y_i} + λ‖W‖²` and its gradient.
pub fn objective(weights: &[f64], classes: usize, rows: &[(&[f64], usize)], l2: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; weights.len()];
    let mut loss = cross_entropy_sum(weights, classes, rows, &mut grad);
    loss += l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += 2.0 * l2 * w;
    }
    (loss, grad)
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logits_uniform() {
        let p = softmax(&[0.0; 6]);
        assert!(p.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));
        assert!((cross_entropy(&[0.0; 6], 2) - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn peaked_logits() {
        let p = softmax(&[10.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(argmax(&p), 0);
        // e^10 / (e^10 + 5)
        let expected = 1.0 / (1.0 + 5.0 * (-10f64).exp());
        assert!((p[0] - expected).abs() < 1e-15);
        assert!(p[0] > 0.99);
    }

    #[test]
    fn huge_logits_stay_finite() {
        let p = softmax(&[1000.0, 999.0, -1000.0]);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!(cross_entropy(&[1000.0, 999.0, -1000.0], 2).is_finite());
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[0.1, 0.4, 0.1, 0.1, 0.4]), 1);
    }
}
