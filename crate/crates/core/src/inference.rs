//! Light-state disaggregation from summed readings.
//!
//! A reading `K` is explained by every subset of per-luminaire contributions
//! whose sum lies within `epsilon` of `K`. Candidate sums are always checked
//! with [`config_sum`], so the search order never changes which subsets pass.

use crate::error::InferenceError;
use crate::scene::MAX_LUMINAIRES;
use crate::transport::{config_sum, LightConfig};

/// Above this many luminaires the meet-in-the-middle search is used.
pub const DFS_MAX_LUMINAIRES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PerfectSumQuery {
    contributions: Vec<f64>,
    target: f64,
    epsilon: f64,
}

impl PerfectSumQuery {
    pub fn new(contributions: Vec<f64>, target: f64, epsilon: f64) -> Result<Self, InferenceError> {
        if contributions.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(InferenceError::InvalidContribution);
        }
        if !target.is_finite() || !epsilon.is_finite() || epsilon < 0.0 {
            return Err(InferenceError::InvalidTolerance);
        }
        if contributions.len() > MAX_LUMINAIRES {
            return Err(InferenceError::TooMany(contributions.len()));
        }
        Ok(Self {
            contributions,
            target,
            epsilon,
        })
    }

    pub fn contributions(&self) -> &[f64] {
        &self.contributions
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn n(&self) -> usize {
        self.contributions.len()
    }

    fn accepts(&self, mask: u32) -> bool {
        let s = config_sum(&self.contributions, LightConfig::from_index(mask, self.n()));
        (s - self.target).abs() <= self.epsilon
    }

    /// Widening applied to the pruning window so that partial sums taken in
    /// a different order never discard a subset that passes the final check.
    fn slack(&self) -> f64 {
        let total: f64 = self.contributions.iter().sum();
        1e-9 * (1.0 + total + self.target.abs())
    }

    fn config(&self, mask: u32) -> LightConfig {
        LightConfig::from_index(mask, self.n())
    }
}

/// All configurations whose summed contribution is within `epsilon` of the
/// target, in ascending configuration index.
pub fn perfect_sum(query: &PerfectSumQuery) -> Vec<LightConfig> {
    if query.n() > DFS_MAX_LUMINAIRES {
        perfect_sum_mitm(query)
    } else {
        perfect_sum_dfs(query)
    }
}

/// Depth-first search over contributions sorted largest first, pruning with
/// suffix sums.
pub fn perfect_sum_dfs(query: &PerfectSumQuery) -> Vec<LightConfig> {
    let x = &query.contributions;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut suffix = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix[i] = suffix[i + 1] + sorted[i];
    }

    struct Search<'a> {
        query: &'a PerfectSumQuery,
        order: &'a [usize],
        sorted: &'a [f64],
        suffix: &'a [f64],
        lo: f64,
        hi: f64,
        found: Vec<u32>,
    }

    impl Search<'_> {
        fn visit(&mut self, depth: usize, mask: u32, partial: f64) {
            if partial > self.hi || partial + self.suffix[depth] < self.lo {
                return;
            }
            if depth == self.sorted.len() {
                if self.query.accepts(mask) {
                    self.found.push(mask);
                }
                return;
            }
            let bit = 1u32 << self.order[depth];
            self.visit(depth + 1, mask | bit, partial + self.sorted[depth]);
            self.visit(depth + 1, mask, partial);
        }
    }

    let slack = query.slack();
    let mut search = Search {
        query,
        order: &order,
        sorted: &sorted,
        suffix: &suffix,
        lo: query.target - query.epsilon - slack,
        hi: query.target + query.epsilon + slack,
        found: Vec::new(),
    };
    search.visit(0, 0, 0.0);
    let mut found = search.found;
    found.sort_unstable();
    found.into_iter().map(|m| query.config(m)).collect()
}

fn half_sums(x: &[f64], offset: usize) -> Vec<(f64, u32)> {
    let mut sums = vec![(0.0, 0u32)];
    for (i, &v) in x.iter().enumerate() {
        let bit = 1u32 << (offset + i);
        let extended: Vec<_> = sums.iter().map(|&(s, m)| (s + v, m | bit)).collect();
        sums.extend(extended);
    }
    sums
}

/// Meet-in-the-middle: enumerate both halves, sort one, and range-search it
/// for every sum of the other.
pub fn perfect_sum_mitm(query: &PerfectSumQuery) -> Vec<LightConfig> {
    let x = &query.contributions;
    let split = x.len() / 2;
    let left = half_sums(&x[..split], 0);
    let mut right = half_sums(&x[split..], split);
    right.sort_by(|a, b| a.0.total_cmp(&b.0));

    let slack = query.slack();
    let lo = query.target - query.epsilon - slack;
    let hi = query.target + query.epsilon + slack;
    let mut found = Vec::new();
    for &(ls, lm) in &left {
        let start = right.partition_point(|r| ls + r.0 < lo);
        for &(rs, rm) in &right[start..] {
            if ls + rs > hi {
                break;
            }
            let mask = lm | rm;
            if query.accepts(mask) {
                found.push(mask);
            }
        }
    }
    found.sort_unstable();
    found.into_iter().map(|m| query.config(m)).collect()
}

/// Configurations whose sum is closest to the target. Used only when the
/// caller opts into a fallback for readings that match nothing.
pub fn nearest_sum(query: &PerfectSumQuery) -> Vec<LightConfig> {
    let mut best = f64::INFINITY;
    let mut found = Vec::new();
    for config in LightConfig::all(query.n()) {
        let gap = (config_sum(&query.contributions, config) - query.target).abs();
        if gap < best {
            best = gap;
            found.clear();
        }
        if gap == best {
            found.push(config);
        }
    }
    found
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub candidates: Vec<LightConfig>,
    /// Accuracy against ground truth, when it was supplied.
    pub mean_accuracy: Option<f64>,
    /// No subset matched within epsilon.
    pub no_solution: bool,
}

/// Runs [`perfect_sum`] and scores the candidates. With `nearest_fallback`,
/// an empty answer is replaced by the nearest-sum configurations while
/// `no_solution` still reports the miss.
pub fn infer(
    query: &PerfectSumQuery,
    truth: Option<LightConfig>,
    nearest_fallback: bool,
) -> InferenceResult {
    let mut candidates = perfect_sum(query);
    let no_solution = candidates.is_empty();
    if no_solution && nearest_fallback {
        candidates = nearest_sum(query);
    }
    InferenceResult {
        mean_accuracy: truth.map(|t| jaccard_accuracy(t, &candidates)),
        candidates,
        no_solution,
    }
}

/// Jaccard index of two on-sets; two all-off configurations score 1.
pub fn jaccard(a: LightConfig, b: LightConfig) -> f64 {
    let union = (a.index() | b.index()).count_ones();
    if union == 0 {
        return 1.0;
    }
    (a.index() & b.index()).count_ones() as f64 / union as f64
}

/// Mean Jaccard index between `truth` and each candidate; 0 when there are
/// no candidates.
pub fn jaccard_accuracy(truth: LightConfig, candidates: &[LightConfig]) -> f64 {
    if candidates.is_empty() {
        log::debug!("no candidates for configuration {truth}; accuracy 0");
        return 0.0;
    }
    candidates.iter().map(|&c| jaccard(truth, c)).sum::<f64>() / candidates.len() as f64
}

/// Per-luminaire verdict of one sensor: +1 on, -1 off, 0 undetermined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteVector {
    pub votes: Vec<i8>,
}

/// Luminaires a sensor can see at all.
pub fn in_range_mask(values: &[f64]) -> Vec<bool> {
    values.iter().map(|&x| x > 0.0).collect()
}

/// Majority verdict over a sensor's candidate list. Out-of-range luminaires
/// and split decisions vote 0.
pub fn sensor_votes(candidates: &[LightConfig], range_mask: &[bool]) -> VoteVector {
    let votes = range_mask
        .iter()
        .enumerate()
        .map(|(i, &in_range)| {
            if !in_range {
                return 0;
            }
            let on = candidates.iter().filter(|c| c.is_on(i)).count();
            match (2 * on).cmp(&candidates.len()) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            }
        })
        .collect();
    VoteVector { votes }
}

/// Sums votes across sensors; a positive total means on, anything else off.
pub fn fuse_votes(all_votes: &[VoteVector]) -> Result<LightConfig, InferenceError> {
    let first = all_votes.first().ok_or(InferenceError::NoVotes)?;
    let n = first.votes.len();
    let mut totals = vec![0i32; n];
    for v in all_votes {
        if v.votes.len() != n {
            return Err(InferenceError::LengthMismatch {
                expected: n,
                found: v.votes.len(),
            });
        }
        for (t, &x) in totals.iter_mut().zip(&v.votes) {
            *t += i32::from(x);
        }
    }
    for (i, _) in totals.iter().enumerate().filter(|(_, &t)| t == 0) {
        log::debug!("luminaire {i}: vote tie, reporting off");
    }
    let bits: Vec<bool> = totals.iter().map(|&t| t > 0).collect();
    Ok(LightConfig::from_bits(&bits))
}
