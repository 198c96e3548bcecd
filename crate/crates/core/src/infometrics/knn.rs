//! Brute-force k-nearest-neighbour estimators.

use rand::Rng;
use rayon::prelude::*;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::rng::stream;

/// Magnitude of the uniform jitter added before neighbour searches so that
/// repeated points do not produce zero distances.
pub const JITTER: f64 = 1e-10;
const JITTER_SEED: u64 = 0x6a69_7474_6572;

/// `n` points of dimension `dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Shape(format!("{} values do not form rows of dimension {dim}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample points"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows of unequal length".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn jittered(&self, stream_id: u64) -> Self {
        let mut rng = stream(JITTER_SEED, stream_id);
        let data = self.data.iter().map(|v| v + rng.random_range(-JITTER..JITTER)).collect();
        Self { dim: self.dim, data }
    }
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-th smallest value (1-based `k`) of `v`; reorders `v`.
fn kth(v: &mut [f64], k: usize) -> f64 {
    *v.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

/// Kraskov–Stögbauer–Grassberger estimator #1 of `I(X; Y)` in nats, with
/// max-norm neighbourhoods:
/// `ψ(k) + ψ(n) − ⟨ψ(n_x + 1) + ψ(n_y + 1)⟩`.
pub fn ksg_mi(x: &Points, y: &Points, k: usize) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: y.len() });
    }
    if k == 0 || n <= k {
        return Err(Error::InsufficientData(format!("KSG needs n > k ≥ 1 (n = {n}, k = {k})")));
    }
    let (x, y) = (x.jittered(1), y.jittered(2));
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n]),
            |(dx, dy, dz), i| {
                for j in 0..n {
                    dx[j] = max_dist(x.row(i), x.row(j));
                    dy[j] = max_dist(y.row(i), y.row(j));
                    dz[j] = if j == i { f64::INFINITY } else { dx[j].max(dy[j]) };
                }
                let eps = kth(dz, k);
                let nx = (0..n).filter(|&j| j != i && dx[j] < eps).count();
                let ny = (0..n).filter(|&j| j != i && dy[j] < eps).count();
                digamma((nx + 1) as f64) + digamma((ny + 1) as f64)
            },
        )
        .collect();
    let mean = terms.iter().sum::<f64>() / n as f64;
    Ok(digamma(k as f64) + digamma(n as f64) - mean)
}

/// k-NN estimate of `KL(p ‖ q)` in nats:
/// `(d/n) Σ ln(ν_k(i)/ρ_k(i)) + ln(m/(n − 1))`, Euclidean distances.
pub fn knn_kl(p: &Points, q: &Points, k: usize) -> Result<f64> {
    let (n, m, d) = (p.len(), q.len(), p.dim());
    if q.dim() != d {
        return Err(Error::LengthMismatch { expected: d, actual: q.dim() });
    }
    if k == 0 || n <= k || m < k {
        return Err(Error::InsufficientData(format!("k-NN KL needs n > k and m ≥ k (n = {n}, m = {m}, k = {k})")));
    }
    let (p, q) = (p.jittered(3), q.jittered(4));
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; m]),
            |(dp, dq), i| {
                for j in 0..n {
                    dp[j] = if j == i { f64::INFINITY } else { sq_dist(p.row(i), p.row(j)) };
                }
                for j in 0..m {
                    dq[j] = sq_dist(p.row(i), q.row(j));
                }
                let rho = kth(dp, k).sqrt();
                let nu = kth(dq, k).sqrt();
                (nu / rho).ln()
            },
        )
        .collect();
    Ok(d as f64 / n as f64 * terms.iter().sum::<f64>() + (m as f64 / (n as f64 - 1.0)).ln())
}
