//! Deterministic equal-weight quadrature over grid nodes.
//!
//! Nodes are cut into fixed blocks; each block is reduced by pairwise
//! summation and the block sums again pairwise.  The tree depends only on the
//! node count, so any thread count gives bit-identical results.

use rayon::prelude::*;

use crate::numerics::pairwise_sum;

/// Nodes per block.
pub const BLOCK: usize = 1024;

/// Integrates a k-component node function over [0,1)^n (weights 1/len).
///
/// `init` builds per-block scratch space; `f(scratch, node, out)` writes the
/// k values at `node` into `out`.
pub fn integrate<W, I, F>(len: usize, k: usize, init: I, f: F) -> Vec<f64>
where
    I: Fn() -> W + Sync,
    F: Fn(&mut W, usize, &mut [f64]) + Sync,
{
    let sums = block_sums(len, k, &init, &f);
    let inv = 1.0 / len as f64;
    (0..k)
        .map(|c| {
            let col: Vec<f64> = sums.iter().map(|b| b[c]).collect();
            pairwise_sum(&col) * inv
        })
        .collect()
}

fn block_sums<W, I, F>(len: usize, k: usize, init: &I, f: &F) -> Vec<Vec<f64>>
where
    I: Fn() -> W + Sync,
    F: Fn(&mut W, usize, &mut [f64]) + Sync,
{
    let blocks = len.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(len);
            let mut scratch = init();
            let mut vals = vec![0.0; (end - start) * k];
            for (slot, node) in (start..end).enumerate() {
                f(&mut scratch, node, &mut vals[slot * k..(slot + 1) * k]);
            }
            (0..k)
                .map(|c| {
                    let col: Vec<f64> = (0..end - start).map(|s| vals[s * k + c]).collect();
                    pairwise_sum(&col)
                })
                .collect()
        })
        .collect()
}

/// Componentwise maximum of |f| over nodes (order-independent).
pub fn sup<W, I, F>(len: usize, k: usize, init: I, f: F) -> Vec<f64>
where
    I: Fn() -> W + Sync,
    F: Fn(&mut W, usize, &mut [f64]) + Sync,
{
    (0..len.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(len);
            let mut scratch = init();
            let mut out = vec![0.0f64; k];
            let mut vals = vec![0.0; k];
            for node in start..end {
                f(&mut scratch, node, &mut vals);
                for (o, v) in out.iter_mut().zip(&vals) {
                    *o = o.max(v.abs());
                }
            }
            out
        })
        .reduce(
            || vec![0.0; k],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        )
}

/// Node values collected in node order.
pub fn collect<W, I, F>(len: usize, k: usize, init: I, f: F) -> Vec<f64>
where
    I: Fn() -> W + Sync,
    F: Fn(&mut W, usize, &mut [f64]) + Sync,
{
    let mut out = vec![0.0; len * k];
    out.par_chunks_mut(BLOCK * k).enumerate().for_each(|(b, chunk)| {
        let mut scratch = init();
        for (slot, vals) in chunk.chunks_mut(k).enumerate() {
            f(&mut scratch, b * BLOCK + slot, vals);
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_constants_and_is_deterministic() {
        let len = 5000;
        let v = integrate(len, 2, || (), |_, node, out| {
            out[0] = 1.0;
            out[1] = (node as f64 * 0.37).sin();
        });
        assert!((v[0] - 1.0).abs() < 1e-15);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let w = pool.install(|| {
            integrate(len, 2, || (), |_, node, out| {
                out[0] = 1.0;
                out[1] = (node as f64 * 0.37).sin();
            })
        });
        assert_eq!(v, w);
    }
}
