//! Monte Carlo estimates of total rewards over a finite horizon.

use std::collections::BTreeSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{FiniteMdp, Pair, StationaryPolicy};
use crate::scalar::Scalar;

/// A policy that may look at the whole state path. `path` ends with the
/// current state; the return value is a global action index admissible
/// there.
pub trait PolicyProgram {
    fn choose(&mut self, m: &FiniteMdp<f64>, path: &[usize], rng: &mut dyn RngCore) -> usize;

    /// The underlying stationary policy, if any; enables the
    /// policy-specific stopping set and tail bound.
    fn stationary(&self) -> Option<&StationaryPolicy<f64>> {
        None
    }

    /// Resets per-trajectory state.
    fn start(&mut self) {}
}

/// Stationary randomized policy with precomputed cumulative rows.
#[derive(Clone, Debug)]
pub struct StationaryProgram {
    policy: StationaryPolicy<f64>,
    cumulative: Vec<Vec<f64>>,
}

impl StationaryProgram {
    pub fn new<S: Scalar>(p: &StationaryPolicy<S>) -> Self {
        let policy = StationaryPolicy { rows: p.rows.iter().map(|r| r.iter().map(|v| v.to_f64()).collect()).collect() };
        let cumulative = policy
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .scan(0.0, |acc, w| {
                        *acc += w;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Self { policy, cumulative }
    }
}

fn sample_index(cumulative: &[f64], u: f64) -> usize {
    let total = cumulative.last().copied().unwrap_or(1.0);
    let target = u * total;
    cumulative.iter().position(|&c| target < c).unwrap_or(cumulative.len() - 1)
}

impl PolicyProgram for StationaryProgram {
    fn choose(&mut self, m: &FiniteMdp<f64>, path: &[usize], rng: &mut dyn RngCore) -> usize {
        let x = *path.last().expect("non-empty path");
        let u: f64 = rng.random();
        m.admissible[x][sample_index(&self.cumulative[x], u)]
    }

    fn stationary(&self) -> Option<&StationaryPolicy<f64>> {
        Some(&self.policy)
    }
}

/// History-dependent policy from a closure.
pub struct FnPolicy<F>(pub F);

impl<F> PolicyProgram for FnPolicy<F>
where
    F: FnMut(&FiniteMdp<f64>, &[usize], &mut dyn RngCore) -> usize,
{
    fn choose(&mut self, m: &FiniteMdp<f64>, path: &[usize], rng: &mut dyn RngCore) -> usize {
        (self.0)(m, path, rng)
    }
}

#[derive(Clone, Debug)]
pub struct SimulationOptions {
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    /// Stop a trajectory once it enters a closed set where every value that
    /// can still be collected is zero.
    pub early_stop: bool,
}

impl SimulationOptions {
    pub fn new(horizon: usize, samples: usize, seed: u64) -> Self {
        Self { horizon, samples, seed, early_stop: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionEstimate {
    pub criterion: String,
    pub mean: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub half_width: f64,
    /// Bound on the expected absolute tail beyond the horizon, when a
    /// geometric certificate exists.
    pub truncation_bound: Option<f64>,
}

impl CriterionEstimate {
    pub fn covers(&self, v: f64) -> bool {
        (self.mean - v).abs() <= self.half_width
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationEstimate {
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub estimates: Vec<CriterionEstimate>,
}

/// Greatest set `Z` closed under `rows(x)` successors where every pair that
/// may be used has zero reward and constraint values.
fn zero_trap(m: &FiniteMdp<f64>, chain: Option<&[Vec<f64>]>, used: impl Fn(Pair) -> bool) -> BTreeSet<usize> {
    let n = m.n_states();
    let mut z: BTreeSet<usize> = (0..n).collect();
    loop {
        let before = z.len();
        let current = z.clone();
        z.retain(|&x| {
            m.admissible[x].iter().all(|&a| {
                let p = Pair::new(x, a);
                !used(p)
                    || (m.criteria().iter().all(|h| h.get(&p).is_none_or(|v| *v == 0.0))
                        && match chain {
                            Some(c) => c[x].iter().enumerate().all(|(y, q)| *q == 0.0 || current.contains(&y)),
                            None => m.successors(p).all(|y| current.contains(&y)),
                        })
            })
        });
        if z.len() == before {
            return z;
        }
    }
}

/// `sum_{t >= horizon} sup P(X_t outside z)` bound with `L = |outside|`
/// and `rho = max_x P(still outside after L steps)`, when `rho < 1`.
pub fn tail_bound(m: &FiniteMdp<f64>, chain: Option<&[Vec<f64>]>, z: &BTreeSet<usize>, horizon: usize) -> Option<f64> {
    let n = m.n_states();
    let outside: Vec<usize> = (0..n).filter(|x| !z.contains(x)).collect();
    if outside.is_empty() {
        return Some(0.0);
    }
    let l = outside.len();
    let mut v = vec![0.0; n];
    for &x in &outside {
        v[x] = 1.0;
    }
    for _ in 0..l {
        let mut next = vec![0.0; n];
        for &x in &outside {
            next[x] = match chain {
                Some(c) => c[x].iter().zip(&v).map(|(q, w)| q * w).sum(),
                None => m.admissible[x]
                    .iter()
                    .map(|&a| m.row(Pair::new(x, a)).iter().map(|(y, q)| q * v[*y]).sum::<f64>())
                    .fold(0.0, f64::max),
            };
        }
        v = next;
    }
    let rho = v.iter().copied().fold(0.0, f64::max);
    if rho >= 1.0 {
        return None;
    }
    Some(l as f64 * rho.powi((horizon / l) as i32) / (1.0 - rho))
}

/// Simulates `n` trajectories of length `horizon` from the initial
/// distribution and estimates every criterion with a 95% interval.
/// Deterministic given the seed.
pub fn simulate_policy<S: Scalar>(
    model: &FiniteMdp<S>,
    policy: &mut dyn PolicyProgram,
    opts: &SimulationOptions,
) -> SimulationEstimate {
    let m: FiniteMdp<f64> = model.convert();
    let n = m.n_states();
    let stationary = policy.stationary().cloned();
    let chain = stationary.as_ref().map(|p| p.chain(&m));
    let z = match &stationary {
        Some(p) => zero_trap(&m, chain.as_deref(), |q| p.prob(&m, q) > 0.0),
        None => zero_trap(&m, None, |_| true),
    };

    let mut init_cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in &m.initial {
        acc += v;
        init_cum.push(acc);
    }
    // Dense tables indexed by `x * n_actions + a`.
    let na = m.actions.len();
    let mut trans_cum: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n * na];
    for (p, row) in &m.transition {
        let mut acc = 0.0;
        trans_cum[p.state * na + p.action] = row
            .iter()
            .map(|(y, q)| {
                acc += q;
                (*y, acc)
            })
            .collect();
    }
    let criteria = m.criteria();
    let k = criteria.len();
    let mut values = vec![vec![0.0f64; n * na]; k];
    for (i, h) in criteria.iter().enumerate() {
        for (p, v) in h.iter() {
            values[i][p.state * na + p.action] = *v;
        }
    }

    let in_z: Vec<bool> = (0..n).map(|x| opts.early_stop && z.contains(&x)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sums = vec![0.0f64; k];
    let mut sq = vec![0.0f64; k];
    let mut path = Vec::with_capacity(opts.horizon + 1);
    for _ in 0..opts.samples {
        policy.start();
        path.clear();
        let u: f64 = rng.random();
        let mut x = sample_index(&init_cum, u);
        let mut total = vec![0.0f64; k];
        for _ in 0..opts.horizon {
            if in_z[x] {
                break;
            }
            path.push(x);
            let a = policy.choose(&m, &path, &mut rng);
            let pid = x * na + a;
            for (t, h) in total.iter_mut().zip(&values) {
                *t += h[pid];
            }
            let row = &trans_cum[pid];
            let u: f64 = rng.random();
            let target = u * row.last().map(|r| r.1).unwrap_or(1.0);
            x = row.iter().find(|(_, c)| target < *c).map(|r| r.0).unwrap_or_else(|| row.last().unwrap().0);
        }
        for i in 0..k {
            sums[i] += total[i];
            sq[i] += total[i] * total[i];
        }
    }

    let ns = opts.samples as f64;
    let tail = tail_bound(&m, chain.as_deref(), &z, opts.horizon);
    let names = std::iter::once("reward".to_string()).chain(m.constraints.iter().map(|c| c.name.clone()));
    let estimates = names
        .enumerate()
        .map(|(i, criterion)| {
            let mean = sums[i] / ns;
            let var = if opts.samples > 1 { ((sq[i] - ns * mean * mean) / (ns - 1.0)).max(0.0) } else { 0.0 };
            let hmax = values[i].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            CriterionEstimate {
                criterion,
                mean,
                half_width: 1.96 * (var / ns).sqrt(),
                truncation_bound: tail.map(|t| t * hmax),
            }
        })
        .collect();
    SimulationEstimate { horizon: opts.horizon, samples: opts.samples, seed: opts.seed, estimates }
}
