//! Uniform periodic lattice on [0,1)^n.

/// m points per axis, node index Σ i_μ m^μ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    m: usize,
}

impl Grid {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(n >= 1 && m >= 1);
        Grid { n, m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            out.push(idx % self.m);
            idx /= self.m;
        }
        out
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().rev().fold(0, |acc, &i| acc * self.m + i % self.m)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi(idx)
            .into_iter()
            .map(|i| i as f64 / self.m as f64)
            .collect()
    }

    /// Node reached by moving `delta` steps along axis μ (periodic).
    pub fn shift(&self, idx: usize, mu: usize, delta: i64) -> usize {
        let stride = self.m.pow(mu as u32);
        let i = (idx / stride) % self.m;
        let m = self.m as i64;
        let j = ((i as i64 + delta) % m + m) % m;
        idx - i * stride + j as usize * stride
    }

    /// Node nearest to a point, if the point lies on the lattice.
    pub fn node_at(&self, x: &[f64]) -> Option<usize> {
        let multi: Option<Vec<usize>> = x
            .iter()
            .map(|&v| {
                let s = v.rem_euclid(1.0) * self.m as f64;
                let r = s.round();
                ((s - r).abs() < 1e-9).then_some(r as usize % self.m)
            })
            .collect();
        multi.map(|mi| self.index(&mi))
    }
}
