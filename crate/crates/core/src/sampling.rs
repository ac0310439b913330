//! Deterministic sample sets for the empirical checks: a uniform grid on
//! one-dimensional sets, seeded uniform draws otherwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::parallel::Execution;
use crate::sets::FeasibleSet;

/// Sample count, seed and execution mode shared by every check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Sampling {
    pub fn new(samples: usize) -> Self {
        Sampling {
            samples,
            seed: 0,
            execution: Execution::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// `samples` feasible points.
    pub fn points(&self, set: &FeasibleSet) -> Vec<Vec<f64>> {
        if let Some((lo, hi)) = set.interval() {
            return grid(lo, hi, self.samples).into_iter().map(|v| vec![v]).collect();
        }
        let mut rng = self.rng();
        (0..self.samples).map(|_| set.sample_uniform(&mut rng)).collect()
    }

    /// `samples` pairs of distinct feasible points. In one dimension these
    /// are neighbours on a grid of `samples + 1` points, so local secant
    /// ratios are probed at every location.
    pub fn pairs(&self, set: &FeasibleSet) -> Vec<(Vec<f64>, Vec<f64>)> {
        if let Some((lo, hi)) = set.interval() {
            let g = grid(lo, hi, self.samples + 1);
            return g.windows(2).map(|w| (vec![w[0]], vec![w[1]])).collect();
        }
        let mut rng = self.rng();
        let mut out = Vec::with_capacity(self.samples);
        while out.len() < self.samples {
            let u = set.sample_uniform(&mut rng);
            let v = set.sample_uniform(&mut rng);
            if linalg::dist(&u, &v) > 0.0 {
                out.push((u, v));
            }
        }
        out
    }

    /// Pairs whose separation is at least `min_fraction` of the set diameter.
    pub fn separated_pairs(
        &self,
        set: &FeasibleSet,
        min_fraction: f64,
    ) -> Vec<(Vec<f64>, Vec<f64>)> {
        let min_sep = min_fraction * set.diameter();
        let mut rng = self.rng();
        let mut out = Vec::with_capacity(self.samples);
        while out.len() < self.samples {
            let u = set.sample_uniform(&mut rng);
            let v = set.sample_uniform(&mut rng);
            if linalg::dist(&u, &v) >= min_sep {
                out.push((u, v));
            }
        }
        out
    }
}

/// `n` equally spaced points covering `[lo, hi]` inclusive.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
