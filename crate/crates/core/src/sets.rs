//! Compact convex feasible sets with Euclidean projection and linear
//! minimization oracles.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{QoptError, Result};
use crate::linalg;

/// Absolute tolerance used for feasibility checks throughout the crate.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// JSON form of a feasible set, e.g. `{"kind":"box","lower":[-1],"upper":[1]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Simplex {
        dimension: usize,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
}

fn unit_scale() -> f64 {
    1.0
}

/// A validated compact convex set. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetSpec", into = "SetSpec")]
pub struct FeasibleSet {
    spec: SetSpec,
}

impl TryFrom<SetSpec> for FeasibleSet {
    type Error = QoptError;

    fn try_from(spec: SetSpec) -> Result<Self> {
        match &spec {
            SetSpec::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(QoptError::invalid(
                        "box bounds must be nonempty and of equal length",
                    ));
                }
                if !linalg::all_finite(lower) || !linalg::all_finite(upper) {
                    return Err(QoptError::invalid("box bounds must be finite"));
                }
                if let Some(i) = lower.iter().zip(upper).position(|(l, u)| !(l < u)) {
                    return Err(QoptError::invalid(format!(
                        "box requires lower < upper in every coordinate (coordinate {i})"
                    )));
                }
            }
            SetSpec::Ball { center, radius } => {
                if center.is_empty() || !linalg::all_finite(center) {
                    return Err(QoptError::invalid("ball center must be nonempty and finite"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(QoptError::invalid("ball radius must be positive"));
                }
            }
            SetSpec::Simplex { dimension, scale } => {
                if *dimension < 2 {
                    return Err(QoptError::invalid(
                        "simplex dimension must be at least 2 (positive diameter)",
                    ));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(QoptError::invalid("simplex scale must be positive"));
                }
            }
        }
        Ok(FeasibleSet { spec })
    }
}

impl From<FeasibleSet> for SetSpec {
    fn from(set: FeasibleSet) -> Self {
        set.spec
    }
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        SetSpec::Box { lower, upper }.try_into()
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        SetSpec::Ball { center, radius }.try_into()
    }

    /// `{x >= 0 : sum(x) = scale}`.
    pub fn simplex(dimension: usize, scale: f64) -> Result<Self> {
        SetSpec::Simplex { dimension, scale }.try_into()
    }

    pub fn spec(&self) -> &SetSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        match &self.spec {
            SetSpec::Box { lower, .. } => lower.len(),
            SetSpec::Ball { center, .. } => center.len(),
            SetSpec::Simplex { dimension, .. } => *dimension,
        }
    }

    fn check_dim(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(QoptError::invalid(format!(
                "{what} has dimension {} but the set has dimension {}",
                x.len(),
                self.dimension()
            )));
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x, "point")?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.spec {
            SetSpec::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            SetSpec::Ball { center, radius } => {
                let offset = linalg::sub(x, center);
                let r = linalg::norm(&offset);
                if r <= *radius {
                    x.to_vec()
                } else {
                    linalg::add_scaled(center, radius / r, &offset)
                }
            }
            SetSpec::Simplex { scale, .. } => project_simplex(x, *scale),
        }
    }

    /// A minimizer of `<g, v>` over the set. Ties go to the lowest coordinate
    /// index; `g = 0` yields the canonical vertex.
    pub fn lmo(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(g, "direction")?;
        Ok(self.lmo_unchecked(g))
    }

    pub(crate) fn lmo_unchecked(&self, g: &[f64]) -> Vec<f64> {
        match &self.spec {
            // g_i = 0 picks the lower bound, which makes g = 0 land on the
            // lower corner (the canonical vertex).
            SetSpec::Box { lower, upper } => g
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(gi, (l, u))| if *gi < 0.0 { *u } else { *l })
                .collect(),
            SetSpec::Ball { center, radius } => {
                let n = linalg::norm(g);
                if n == 0.0 {
                    let mut v = center.clone();
                    v[0] += radius;
                    v
                } else {
                    linalg::add_scaled(center, -radius / n, g)
                }
            }
            SetSpec::Simplex { dimension, scale } => {
                let mut best = 0;
                for (i, gi) in g.iter().enumerate() {
                    if *gi < g[best] {
                        best = i;
                    }
                }
                let mut v = vec![0.0; *dimension];
                v[best] = *scale;
                v
            }
        }
    }

    /// Exact Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        match &self.spec {
            SetSpec::Box { lower, upper } => linalg::dist(lower, upper),
            SetSpec::Ball { radius, .. } => 2.0 * radius,
            SetSpec::Simplex { scale, .. } => scale * std::f64::consts::SQRT_2,
        }
    }

    /// True iff the Euclidean distance from `x` to the set is at most `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        if !(tol >= 0.0) {
            return Err(QoptError::invalid("membership tolerance must be nonnegative"));
        }
        self.check_dim(x, "point")?;
        Ok(self.contains_unchecked(x, tol))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64], tol: f64) -> bool {
        if !linalg::all_finite(x) {
            return false;
        }
        linalg::dist(x, &self.project_unchecked(x)) <= tol
    }

    /// Midpoint of a box, center of a ball, barycenter of a simplex.
    pub fn center_point(&self) -> Vec<f64> {
        match &self.spec {
            SetSpec::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            SetSpec::Ball { center, .. } => center.clone(),
            SetSpec::Simplex { dimension, scale } => vec![scale / *dimension as f64; *dimension],
        }
    }

    /// The vertex returned by `lmo(0)`.
    pub fn canonical_vertex(&self) -> Vec<f64> {
        self.lmo_unchecked(&vec![0.0; self.dimension()])
    }

    /// Vertices of a box or simplex (`None` for a ball). Box vertex count is
    /// `2^dim`, so callers should keep the dimension small.
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match &self.spec {
            SetSpec::Box { lower, upper } => {
                let d = lower.len();
                Some(
                    (0..1usize << d)
                        .map(|mask| {
                            (0..d)
                                .map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] })
                                .collect()
                        })
                        .collect(),
                )
            }
            SetSpec::Simplex { dimension, scale } => Some(
                (0..*dimension)
                    .map(|i| {
                        let mut v = vec![0.0; *dimension];
                        v[i] = *scale;
                        v
                    })
                    .collect(),
            ),
            SetSpec::Ball { .. } => None,
        }
    }

    /// One point drawn uniformly from the set.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.spec {
            SetSpec::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect(),
            SetSpec::Ball { center, radius } => {
                let d = center.len();
                let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let n = linalg::norm(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                linalg::add_scaled(center, r / n, &dir)
            }
            SetSpec::Simplex { dimension, scale } => {
                let e: Vec<f64> = (0..*dimension).map(|_| Exp1.sample(rng)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| scale * v / s).collect()
            }
        }
    }

    /// For one-dimensional sets, the interval `[lo, hi]`.
    pub fn interval(&self) -> Option<(f64, f64)> {
        if self.dimension() != 1 {
            return None;
        }
        match &self.spec {
            SetSpec::Box { lower, upper } => Some((lower[0], upper[0])),
            SetSpec::Ball { center, radius } => Some((center[0] - radius, center[0] + radius)),
            SetSpec::Simplex { .. } => None,
        }
    }
}

/// Sort-based projection onto `{x >= 0, sum x = scale}`.
pub fn project_simplex(x: &[f64], scale: f64) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - scale) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}
