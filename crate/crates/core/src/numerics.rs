//! Deterministic reductions.

/// Pairwise (cascade) summation: a fixed binary tree over the input order,
/// so serial and parallel producers that fill the same slice agree bitwise.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Weighted pairwise sum Σ w_k x_k.
pub fn weighted_sum(weights: &[f64], xs: &[f64]) -> f64 {
    assert_eq!(weights.len(), xs.len());
    let prod: Vec<f64> = weights.iter().zip(xs).map(|(w, x)| w * x).collect();
    pairwise_sum(&prod)
}

/// Least-squares slope of log(err) against log(m): the observed order is its negative.
pub fn observed_order(ms: &[usize], errs: &[f64]) -> f64 {
    assert_eq!(ms.len(), errs.len());
    let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}
