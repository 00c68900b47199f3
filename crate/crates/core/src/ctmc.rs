//! The topology-switching continuous-time Markov chain.
//!
//! A [`CtmcSpec`] carries symbolic leave rates; [`CtmcSpec::at`] evaluates
//! them for a concrete `n`, producing a time-homogeneous [`Chain`] that the
//! analysis functions and the simulator work with.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::rate::RateExpr;
use crate::topology::TopologySpec;
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

fn validate_transition_probs(k: usize, p: &[Vec<f64>]) -> Result<()> {
    if p.len() != k {
        return Err(Error::config(format!("ctmc has {k} states but p has {} rows", p.len())));
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != k {
            return Err(Error::config(format!("p row {i} has {} entries, expected {k}", row.len())));
        }
        if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::config(format!("p row {i} has an entry outside [0, 1]")));
        }
        if k == 1 {
            continue;
        }
        if row[i] != 0.0 {
            return Err(Error::config(format!("p[{i}][{i}] must be 0, got {}", row[i])));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::config(format!("p row {i} sums to {sum}, expected 1")));
        }
    }
    Ok(())
}

/// Symbolic CTMC description: one topology per state, leave rates `q`
/// (possibly `n`-dependent) and jump probabilities `p` with `p[i][i] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtmcSpec {
    pub states: Vec<TopologySpec>,
    #[serde(rename = "q")]
    pub leave_rates: Vec<RateExpr>,
    #[serde(rename = "p")]
    pub transition_probs: Vec<Vec<f64>>,
}

impl CtmcSpec {
    /// A single, never-switching topology.
    pub fn single(topology: TopologySpec) -> Self {
        CtmcSpec {
            states: vec![topology],
            leave_rates: vec![RateExpr::constant(1.0)],
            transition_probs: vec![vec![0.0]],
        }
    }

    /// Two states that alternate, each leaving at `rate`.
    pub fn alternating(a: TopologySpec, b: TopologySpec, rate: RateExpr) -> Self {
        CtmcSpec {
            states: vec![a, b],
            leave_rates: vec![rate.clone(), rate],
            transition_probs: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        }
    }

    /// States arranged on a cycle, jumping to either cycle neighbor with probability 1/2.
    pub fn cycle(states: Vec<TopologySpec>, rate: RateExpr) -> Self {
        let k = states.len();
        let mut p = vec![vec![0.0; k]; k];
        for (i, row) in p.iter_mut().enumerate() {
            match k {
                1 => {}
                2 => row[1 - i] = 1.0,
                _ => {
                    row[(i + 1) % k] += 0.5;
                    row[(i + k - 1) % k] += 0.5;
                }
            }
        }
        CtmcSpec {
            leave_rates: vec![rate; k],
            states,
            transition_probs: p,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Structural checks that do not depend on `n`.
    pub fn validate(&self) -> Result<()> {
        let k = self.states.len();
        if k == 0 {
            return Err(Error::config("ctmc needs at least one state"));
        }
        if self.leave_rates.len() != k {
            return Err(Error::config(format!(
                "ctmc has {k} states but {} leave rates",
                self.leave_rates.len()
            )));
        }
        validate_transition_probs(k, &self.transition_probs)
    }

    /// Evaluates the leave rates at `n` and returns the concrete chain.
    pub fn at(&self, n: usize) -> Result<Chain> {
        self.validate()?;
        let k = self.states.len();
        let q: Vec<f64> = if k == 1 {
            vec![0.0]
        } else {
            self.leave_rates.iter().map(|r| r.eval(n)).collect()
        };
        if let Some((i, bad)) = q.iter().enumerate().find(|(_, &x)| k > 1 && !(x.is_finite() && x > 0.0)) {
            return Err(Error::config(format!(
                "leave rate {} of state {i} evaluates to {bad} at n = {n}",
                self.leave_rates[i]
            )));
        }
        Ok(Chain {
            q,
            p: DMatrix::from_fn(k, k, |i, j| self.transition_probs[i][j]),
        })
    }
}

/// A CTMC with numeric leave rates. With one state the leave rate is 0 and
/// the chain never switches.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    q: Vec<f64>,
    p: DMatrix<f64>,
}

impl Chain {
    /// Builds a chain from numeric rates; `p` is row-major `K x K`.
    pub fn new(q: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        let k = q.len();
        if k == 0 {
            return Err(Error::config("ctmc needs at least one state"));
        }
        validate_transition_probs(k, &p)?;
        if k > 1 {
            if let Some(bad) = q.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::config(format!("leave rate {bad} is not positive")));
            }
        }
        Ok(Chain {
            q: if k == 1 { vec![0.0] } else { q },
            p: DMatrix::from_fn(k, k, |i, j| p[i][j]),
        })
    }

    pub fn num_states(&self) -> usize {
        self.q.len()
    }

    pub fn leave_rate(&self, state: usize) -> f64 {
        self.q[state]
    }

    pub fn leave_rates(&self) -> &[f64] {
        &self.q
    }

    pub fn jump_prob(&self, from: usize, to: usize) -> f64 {
        self.p[(from, to)]
    }

    /// Draws the state entered when leaving `from`, given `u` uniform in `[0, 1)`.
    pub fn next_state(&self, from: usize, u: f64) -> usize {
        let k = self.num_states();
        let mut acc = 0.0;
        let mut last = from;
        for j in 0..k {
            let pj = self.p[(from, j)];
            if pj <= 0.0 {
                continue;
            }
            acc += pj;
            last = j;
            if u < acc {
                return j;
            }
        }
        last
    }

    pub fn generator(&self) -> DMatrix<f64> {
        generator_matrix(self)
    }

    pub fn stationary(&self) -> Result<DVector<f64>> {
        stationary_distribution(&self.generator())
    }

    /// Draws a state from the stationary distribution.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, pi: &DVector<f64>, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &w) in pi.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        pi.len() - 1
    }
}

/// `Q[i][j] = q_i p_ij` off the diagonal, `Q[i][i] = -q_i`.
pub fn generator_matrix(chain: &Chain) -> DMatrix<f64> {
    let k = chain.num_states();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            -chain.q[i]
        } else {
            chain.q[i] * chain.p[(i, j)]
        }
    })
}

/// States reachable from `start` along positive off-diagonal rates (or their reverse).
fn reachable(q: &DMatrix<f64>, start: usize, reverse: bool) -> Vec<bool> {
    let k = q.nrows();
    let mut seen = vec![false; k];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(i) = stack.pop() {
        for j in 0..k {
            let rate = if reverse { q[(j, i)] } else { q[(i, j)] };
            if i != j && rate > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn check_irreducible(q: &DMatrix<f64>) -> Result<()> {
    let forward = reachable(q, 0, false);
    let unreachable: Vec<usize> = (0..q.nrows()).filter(|&i| !forward[i]).collect();
    if !unreachable.is_empty() {
        return Err(Error::Analysis(format!(
            "chain is reducible: states {unreachable:?} are unreachable from state 0"
        )));
    }
    let backward = reachable(q, 0, true);
    let trapped: Vec<usize> = (0..q.nrows()).filter(|&i| !backward[i]).collect();
    if !trapped.is_empty() {
        return Err(Error::Analysis(format!(
            "chain is reducible: state 0 is unreachable from states {trapped:?}"
        )));
    }
    Ok(())
}

/// Solves `pi Q = 0`, `sum(pi) = 1` by a dense LU solve.
pub fn stationary_distribution(q: &DMatrix<f64>) -> Result<DVector<f64>> {
    let k = q.nrows();
    if k == 0 || q.ncols() != k {
        return Err(Error::Analysis("generator must be a non-empty square matrix".into()));
    }
    if k == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    check_irreducible(q)?;
    // Transpose so the unknown is a column; swap the last balance equation
    // for the normalisation constraint.
    let mut a = q.transpose();
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Analysis("generator is numerically singular".into()))?;
    Ok(pi)
}

/// Mean and variance of a return interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Phase-type moments of the entry-to-next-entry interval of `target`.
///
/// The target is split into a transient start copy and an absorbing copy;
/// all jumps into the target are redirected to the absorbing copy. With `S`
/// the sub-generator over {start copy, other states} and `alpha` the
/// indicator of the start copy, `mean = -alpha S^-1 1` and
/// `variance = 2 alpha S^-2 1 - mean^2`.
pub fn return_time_moments(chain: &Chain, target: usize) -> Result<ReturnMoments> {
    let k = chain.num_states();
    if k < 2 {
        return Err(Error::Analysis("return times need at least two states".into()));
    }
    if target >= k {
        return Err(Error::Analysis(format!("target state {target} out of range 0..{k}")));
    }
    check_irreducible(&chain.generator())?;
    // Transient index 0 is the start copy of `target`; the rest are the other states.
    let originals: Vec<usize> = std::iter::once(target)
        .chain((0..k).filter(|&i| i != target))
        .collect();
    let s = DMatrix::from_fn(k, k, |a, b| {
        let i = originals[a];
        if a == b {
            -chain.q[i]
        } else if b == 0 {
            0.0
        } else {
            chain.q[i] * chain.p[(i, originals[b])]
        }
    });
    let lu = s.lu();
    let singular = || Error::Analysis("transient sub-generator is singular".into());
    let x = lu.solve(&DVector::from_element(k, 1.0)).ok_or_else(singular)?;
    let y = lu.solve(&x).ok_or_else(singular)?;
    let mean = -x[0];
    let variance = 2.0 * y[0] - mean * mean;
    if !(mean.is_finite() && variance.is_finite()) {
        return Err(singular());
    }
    Ok(ReturnMoments { mean, variance })
}

/// One constant-state segment of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub state: usize,
    pub entry_time: f64,
}

fn holding_time<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Samples a path over `[0, horizon]`, starting from the stationary distribution.
pub fn sample_trajectory<R: Rng + ?Sized>(chain: &Chain, rng: &mut R, horizon: f64) -> Result<Vec<Segment>> {
    let pi = chain.stationary()?;
    let mut state = chain.sample_stationary(&pi, rng);
    let mut t = 0.0;
    let mut out = vec![Segment { state, entry_time: 0.0 }];
    if chain.num_states() == 1 {
        return Ok(out);
    }
    loop {
        t += holding_time(rng, chain.q[state]);
        if t >= horizon {
            return Ok(out);
        }
        state = chain.next_state(state, rng.random());
        out.push(Segment { state, entry_time: t });
    }
}

/// Fraction of `[0, horizon]` spent in each state along a trajectory.
pub fn occupancy(trajectory: &[Segment], num_states: usize, horizon: f64) -> Vec<f64> {
    let mut time = vec![0.0; num_states];
    for (idx, seg) in trajectory.iter().enumerate() {
        let end = trajectory.get(idx + 1).map_or(horizon, |s| s.entry_time);
        time[seg.state] += end - seg.entry_time;
    }
    time.iter().map(|x| x / horizon).collect()
}

/// Monte-Carlo estimate of the return-interval moments from `returns` sampled intervals.
pub fn mc_return_moments<R: Rng + ?Sized>(
    chain: &Chain,
    target: usize,
    returns: usize,
    rng: &mut R,
) -> Result<ReturnMoments> {
    if chain.num_states() < 2 || target >= chain.num_states() || returns < 2 {
        return Err(Error::Analysis("need >= 2 states, a valid target and >= 2 returns".into()));
    }
    check_irreducible(&chain.generator())?;
    let mut samples = Vec::with_capacity(returns);
    let mut state = target;
    let mut elapsed = 0.0;
    while samples.len() < returns {
        elapsed += holding_time(rng, chain.q[state]);
        state = chain.next_state(state, rng.random());
        if state == target {
            samples.push(elapsed);
            elapsed = 0.0;
        }
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(ReturnMoments { mean, variance })
}

/// Generator, stationary law and per-state return moments of a chain.
#[derive(Debug, Clone, Serialize)]
pub struct CtmcAnalysis {
    pub leave_rates: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    /// Infinity norm of `pi Q`.
    pub residual: f64,
    /// Empty for single-state chains.
    pub return_moments: Vec<ReturnMoments>,
}

pub fn analyze(chain: &Chain) -> Result<CtmcAnalysis> {
    let q = chain.generator();
    let pi = stationary_distribution(&q)?;
    let residual = (pi.transpose() * &q).amax();
    let return_moments = if chain.num_states() >= 2 {
        (0..chain.num_states())
            .map(|t| return_time_moments(chain, t))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(CtmcAnalysis {
        leave_rates: chain.q.clone(),
        q: q.row_iter().map(|r| r.iter().copied().collect()).collect(),
        pi: pi.iter().copied().collect(),
        residual,
        return_moments,
    })
}
