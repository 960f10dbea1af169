//! Sensor placement planning.
//!
//! A sensor position is scored by how many light configurations produce a
//! reading that no other configuration comes within `tau` of. Application
//! states are (configuration `p`, door state `q`) pairs with id
//! `q * 2^n + p`.
//!
//! Cover instances come in two granularities. With [`Membership::State`] a
//! position covers `(p, q)` when its reading for `p` is distinct under `q`.
//! With [`Membership::Luminaire`] the elements are `(p, q, i)` triples and a
//! position covers one when every configuration whose reading lies within
//! `tau` of `p`'s agrees on luminaire `i`. A state is then known once the
//! chosen positions jointly resolve all of its luminaires, which lets
//! sensors in rooms closed off from each other combine.

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::error::CoverError;
use crate::transport::ContributionMatrix;

/// Distinctness threshold used when none is given, in lux.
pub const DEFAULT_TAU: f64 = 0.01;

/// Universe size accepted by [`exact_min_cover`] unless overridden.
pub const DEFAULT_EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct DistinctnessVector {
    pub flags: Vec<bool>,
    pub tau: f64,
}

impl DistinctnessVector {
    pub fn score(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Flags each value whose nearest other value is more than `tau` away.
/// A lone value is always distinct. Runs in `O(k log k)` by comparing only
/// neighbours in sorted order.
pub fn distinctness_vector(values: &[f64], tau: f64) -> DistinctnessVector {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut flags = vec![false; values.len()];
    for (k, &i) in order.iter().enumerate() {
        let prev = k.checked_sub(1).map(|j| values[i] - values[order[j]]);
        let next = order.get(k + 1).map(|&j| values[j] - values[i]);
        let nearest = match (prev, next) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => f64::INFINITY,
        };
        flags[i] = nearest > tau;
    }
    DistinctnessVector { flags, tau }
}

/// Noiseless readings of all `2^n` configurations, indexed by `p`. Each sum
/// adds contributions in luminaire order, matching `config_sum`.
pub fn state_sums(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut sums = vec![0.0; 1 << n];
    for p in 1..sums.len() {
        let high = usize::BITS - 1 - p.leading_zeros();
        sums[p] = sums[p ^ (1 << high)] + values[high as usize];
    }
    sums
}

/// Distinctness over the readings of every light configuration.
pub fn state_distinctness(values: &[f64], tau: f64) -> DistinctnessVector {
    distinctness_vector(&state_sums(values), tau)
}

/// For each configuration, the mask of luminaires whose state is pinned
/// down by the reading: every configuration within `tau` of it agrees on
/// that bit. A distinct configuration resolves all luminaires.
pub fn resolved_luminaires(values: &[f64], tau: f64) -> Vec<u32> {
    let sums = state_sums(values);
    let len = sums.len();
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]));

    // window [lo, hi) of sorted positions within tau of each position
    let mut lo = vec![0usize; len];
    let mut hi = vec![0usize; len];
    let (mut a, mut b) = (0, 0);
    for k in 0..len {
        let v = sums[order[k]];
        while v - sums[order[a]] > tau {
            a += 1;
        }
        b = b.max(k + 1);
        while b < len && sums[order[b]] - v <= tau {
            b += 1;
        }
        lo[k] = a;
        hi[k] = b;
    }

    let mut resolved = vec![0u32; len];
    let mut prefix = vec![0u32; len + 1];
    for i in 0..values.len() {
        for k in 0..len {
            prefix[k + 1] = prefix[k] + (order[k] >> i & 1) as u32;
        }
        for k in 0..len {
            let ones = prefix[hi[k]] - prefix[lo[k]];
            if ones == 0 || ones as usize == hi[k] - lo[k] {
                resolved[order[k]] |= 1 << i;
            }
        }
    }
    resolved
}

/// Sum of per-door-state scores at one candidate point.
pub fn aggregate_distinctness(matrix: &ContributionMatrix, tau: f64, point: usize) -> usize {
    (0..matrix.door_state_count())
        .map(|q| state_distinctness(matrix.values(point, q), tau).score())
        .sum()
}

/// Scores of every point for one door state.
pub fn door_state_scores(matrix: &ContributionMatrix, tau: f64, door_state: usize) -> Vec<usize> {
    (0..matrix.point_count())
        .into_par_iter()
        .map(|p| state_distinctness(matrix.values(p, door_state), tau).score())
        .collect()
}

/// Aggregate scores of every point.
pub fn aggregate_scores(matrix: &ContributionMatrix, tau: f64) -> Vec<usize> {
    (0..matrix.point_count())
        .into_par_iter()
        .map(|p| aggregate_distinctness(matrix, tau, p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    pub luminaires: usize,
    pub door_states: usize,
}

impl StateSpace {
    pub fn of(matrix: &ContributionMatrix) -> Self {
        Self {
            luminaires: matrix.luminaire_count(),
            door_states: matrix.door_state_count(),
        }
    }

    pub fn config_count(&self) -> usize {
        1 << self.luminaires
    }

    pub fn total(&self) -> usize {
        self.config_count() * self.door_states
    }

    pub fn id(&self, config: usize, door_state: usize) -> usize {
        door_state * self.config_count() + config
    }

    /// Inverse of [`StateSpace::id`]: `(config, door_state)`.
    pub fn split(&self, id: usize) -> (usize, usize) {
        (id % self.config_count(), id / self.config_count())
    }

    /// Number of cover elements under the given membership.
    pub fn element_count(&self, membership: Membership) -> usize {
        match membership {
            Membership::State => self.total(),
            Membership::Luminaire => self.total() * self.luminaires,
        }
    }

    /// Application states whose every element is in `covered`.
    pub fn covered_states(&self, covered: &FixedBitSet, membership: Membership) -> FixedBitSet {
        let mut states = FixedBitSet::with_capacity(self.total());
        for id in 0..self.total() {
            let done = match membership {
                Membership::State => covered.contains(id),
                Membership::Luminaire => {
                    (0..self.luminaires).all(|i| covered.contains(id * self.luminaires + i))
                }
            };
            states.set(id, done);
        }
        states
    }
}

/// What a candidate position is credited with covering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Membership {
    /// Whole application states the position alone tells apart.
    State,
    /// Individual luminaire states within each application state.
    #[default]
    Luminaire,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverInstance {
    pub universe: FixedBitSet,
    pub sets: Vec<FixedBitSet>,
}

impl CoverInstance {
    /// Builds an instance; sets are clipped to the universe.
    pub fn new(universe: FixedBitSet, sets: Vec<FixedBitSet>) -> Self {
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.grow(universe.len());
                s.intersect_with(&universe);
                s
            })
            .collect();
        Self { universe, sets }
    }

    /// Convenience constructor over element ids `0..size`.
    pub fn from_lists(size: usize, universe: &[usize], sets: &[Vec<usize>]) -> Self {
        let bits = |items: &[usize]| {
            let mut b = FixedBitSet::with_capacity(size);
            items.iter().for_each(|&i| b.insert(i));
            b
        };
        Self::new(bits(universe), sets.iter().map(|s| bits(s)).collect())
    }

    pub fn universe_size(&self) -> usize {
        self.universe.count_ones(..)
    }
}

/// Every point covers the states it distinguishes, over all door states.
pub fn build_cover_instance(matrix: &ContributionMatrix, tau: f64) -> CoverInstance {
    let all: Vec<usize> = (0..matrix.door_state_count()).collect();
    build_cover_instance_for(matrix, tau, &all, Membership::State)
}

/// Cover instance with the universe restricted to the given door states.
/// Element ids stay global: `q * 2^n + p` for [`Membership::State`] and
/// `(q * 2^n + p) * n + i` for [`Membership::Luminaire`].
pub fn build_cover_instance_for(
    matrix: &ContributionMatrix,
    tau: f64,
    door_states: &[usize],
    membership: Membership,
) -> CoverInstance {
    let space = StateSpace::of(matrix);
    let n = space.luminaires;
    let per_state = match membership {
        Membership::State => 1,
        Membership::Luminaire => n,
    };
    let size = space.element_count(membership);
    let mut universe = FixedBitSet::with_capacity(size);
    for &q in door_states {
        let first = space.id(0, q) * per_state;
        universe.insert_range(first..first + space.config_count() * per_state);
    }
    let sets = (0..matrix.point_count())
        .into_par_iter()
        .map(|point| {
            let mut set = FixedBitSet::with_capacity(size);
            for &q in door_states {
                let values = matrix.values(point, q);
                match membership {
                    Membership::State => {
                        let d = state_distinctness(values, tau);
                        for (p, _) in d.flags.iter().enumerate().filter(|(_, &f)| f) {
                            set.insert(space.id(p, q));
                        }
                    }
                    Membership::Luminaire => {
                        for (p, mask) in resolved_luminaires(values, tau).into_iter().enumerate() {
                            let base = space.id(p, q) * n;
                            (0..n)
                                .filter(|i| mask >> i & 1 == 1)
                                .for_each(|i| set.insert(base + i));
                        }
                    }
                }
            }
            set
        })
        .collect();
    CoverInstance { universe, sets }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSolution {
    pub chosen: Vec<usize>,
    /// Newly covered elements contributed by each chosen set, in order.
    pub gains: Vec<usize>,
    pub covered: FixedBitSet,
    pub complete: bool,
}

impl CoverSolution {
    pub fn size(&self) -> usize {
        self.chosen.len()
    }

    fn from_choice(instance: &CoverInstance, chosen: Vec<usize>) -> Self {
        let mut covered = FixedBitSet::with_capacity(instance.universe.len());
        let mut gains = Vec::with_capacity(chosen.len());
        for &c in &chosen {
            let before = covered.count_ones(..);
            covered.union_with(&instance.sets[c]);
            gains.push(covered.count_ones(..) - before);
        }
        let complete = covered == instance.universe;
        Self {
            chosen,
            gains,
            covered,
            complete,
        }
    }
}

/// Greedy approximation: repeatedly take the set covering the most
/// uncovered elements, lowest index on ties, until nothing more can be
/// covered.
pub fn greedy_set_cover(instance: &CoverInstance) -> CoverSolution {
    let mut uncovered = instance.universe.clone();
    let mut chosen = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for (i, set) in instance.sets.iter().enumerate() {
            let gain = set.intersection_count(&uncovered);
            if gain > best.map_or(0, |b| b.1) {
                best = Some((i, gain));
            }
        }
        let Some((i, _)) = best else { break };
        chosen.push(i);
        uncovered.difference_with(&instance.sets[i]);
    }
    CoverSolution::from_choice(instance, chosen)
}

/// Provably minimum cover of every coverable element by branch and bound.
/// Meant as a test oracle; refuses universes larger than `limit` (max 64).
pub fn exact_min_cover(
    instance: &CoverInstance,
    limit: usize,
) -> Result<CoverSolution, CoverError> {
    let elements: Vec<usize> = instance.universe.ones().collect();
    let limit = limit.min(64);
    if elements.len() > limit {
        return Err(CoverError::TooLarge {
            size: elements.len(),
            limit,
        });
    }
    let to_mask = |set: &FixedBitSet| {
        elements
            .iter()
            .enumerate()
            .filter(|(_, &e)| set.contains(e))
            .fold(0u64, |m, (k, _)| m | 1 << k)
    };

    // distinct non-empty masks, first occurrence wins
    let mut masks: Vec<(u64, usize)> = Vec::new();
    for (i, set) in instance.sets.iter().enumerate() {
        let m = to_mask(set);
        if m != 0 && !masks.iter().any(|&(o, _)| o == m) {
            masks.push((m, i));
        }
    }
    let target = masks.iter().fold(0u64, |acc, &(m, _)| acc | m);

    // sets containing each element, largest first
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); elements.len()];
    for (k, list) in containing.iter_mut().enumerate() {
        list.extend((0..masks.len()).filter(|&s| masks[s].0 >> k & 1 == 1));
        list.sort_by_key(|&s| std::cmp::Reverse(masks[s].0.count_ones()));
    }
    let largest = masks.iter().map(|m| m.0.count_ones()).max().unwrap_or(1);

    struct Bnb<'a> {
        masks: &'a [(u64, usize)],
        containing: &'a [Vec<usize>],
        largest: u32,
        best: Vec<usize>,
        stack: Vec<usize>,
    }

    impl Bnb<'_> {
        fn search(&mut self, remaining: u64) {
            if remaining == 0 {
                if self.stack.len() < self.best.len() {
                    self.best = self.stack.clone();
                }
                return;
            }
            let lower = (remaining.count_ones()).div_ceil(self.largest) as usize;
            if self.stack.len() + lower >= self.best.len() {
                return;
            }
            // branch on the element with the fewest covering sets
            let pivot = (0..64)
                .filter(|k| remaining >> k & 1 == 1)
                .min_by_key(|&k| self.containing[k].len())
                .expect("remaining is non-empty");
            for &s in &self.containing[pivot] {
                self.stack.push(s);
                self.search(remaining & !self.masks[s].0);
                self.stack.pop();
            }
        }
    }

    // incumbent from greedy over the compacted sets
    let mut incumbent = Vec::new();
    let mut left = target;
    while left != 0 {
        let (s, _) = masks
            .iter()
            .enumerate()
            .max_by_key(|(i, m)| ((m.0 & left).count_ones(), std::cmp::Reverse(*i)))
            .expect("target is a union of masks");
        incumbent.push(s);
        left &= !masks[s].0;
    }

    let mut bnb = Bnb {
        masks: &masks,
        containing: &containing,
        largest,
        best: incumbent,
        stack: Vec::new(),
    };
    bnb.search(target);
    let chosen = bnb.best.iter().map(|&s| masks[s].1).collect();
    Ok(CoverSolution::from_choice(instance, chosen))
}

/// `H(k) = 1 + 1/2 + ... + 1/k`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_distinctness() {
        let d = distinctness_vector(&[1.0, 2.0, 4.0], 1.0);
        assert_eq!(d.flags, vec![false, false, true]);
        assert_eq!(d.score(), 1);
        let d = distinctness_vector(&[1.0, 2.0, 4.0], 0.5);
        assert_eq!(d.flags, vec![true, true, true]);
        assert_eq!(d.score(), 3);
    }

    #[test]
    fn coincident_values() {
        for tau in [0.0, 0.5, 3.0] {
            assert_eq!(distinctness_vector(&[5.0, 5.0], tau).score(), 0);
        }
        assert_eq!(distinctness_vector(&[5.0], 100.0).flags, vec![true]);
        // equality with tau is not distinct
        assert_eq!(distinctness_vector(&[0.0, 1.0], 1.0).score(), 0);
    }

    #[test]
    fn sums_in_index_order() {
        assert_eq!(
            state_sums(&[1.0, 2.0, 4.0]),
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
        );
        assert_eq!(state_sums(&[]), vec![0.0]);
    }

    #[test]
    fn state_distinctness_examples() {
        assert_eq!(state_distinctness(&[1.0, 2.0, 4.0], 0.01).score(), 8);
        let d = state_distinctness(&[1.0, 1.0, 4.0], 0.01);
        // sums 0,1,1,2,4,5,5,6: only 0, 2, 4, 6 stand alone
        assert_eq!(
            d.flags,
            vec![true, false, false, true, true, false, false, true]
        );
        assert_eq!(state_distinctness(&[0.0, 0.0, 4.0], 0.01).score(), 0);
    }

    #[test]
    fn resolved_masks() {
        // sums 0,1,1,2,4,5,5,6: configs 1 and 2 collide, so luminaires 0
        // and 1 are unresolved there while luminaire 2 is known everywhere
        let r = resolved_luminaires(&[1.0, 1.0, 4.0], 0.01);
        assert_eq!(
            r,
            vec![0b111, 0b100, 0b100, 0b111, 0b111, 0b100, 0b100, 0b111]
        );
        // an occluded luminaire is never resolved
        let r = resolved_luminaires(&[0.0, 3.0], 0.01);
        assert_eq!(r, vec![0b10; 4]);
        // a distinct configuration resolves everything
        let d = state_distinctness(&[1.0, 1.0, 4.0], 0.01);
        let r = resolved_luminaires(&[1.0, 1.0, 4.0], 0.01);
        for (p, mask) in r.iter().enumerate() {
            assert_eq!(d.flags[p], *mask == 0b111);
        }
    }

    #[test]
    fn covered_states_need_every_luminaire() {
        let space = StateSpace {
            luminaires: 2,
            door_states: 1,
        };
        let mut covered = FixedBitSet::with_capacity(8);
        covered.insert_range(0..3); // state 0 both, state 1 luminaire 0
        let states = space.covered_states(&covered, Membership::Luminaire);
        assert_eq!(states.ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn state_space_ids() {
        let s = StateSpace {
            luminaires: 6,
            door_states: 9,
        };
        assert_eq!(s.total(), 576);
        assert_eq!(s.split(s.id(17, 4)), (17, 4));
    }

    #[test]
    fn greedy_toy() {
        let inst = CoverInstance::from_lists(4, &[1, 2, 3], &[vec![1, 2], vec![2, 3], vec![3]]);
        let sol = greedy_set_cover(&inst);
        assert_eq!(sol.chosen, vec![0, 1]);
        assert_eq!(sol.gains, vec![2, 1]);
        assert!(sol.complete);
    }

    #[test]
    fn greedy_single_set() {
        let inst = CoverInstance::from_lists(3, &[0, 1, 2], &[vec![0], vec![0, 1, 2]]);
        assert_eq!(greedy_set_cover(&inst).chosen, vec![1]);
    }

    #[test]
    fn greedy_incomplete() {
        let inst = CoverInstance::from_lists(3, &[0, 1, 2], &[vec![0], vec![1]]);
        let sol = greedy_set_cover(&inst);
        assert!(!sol.complete);
        assert_eq!(sol.chosen, vec![0, 1]);
    }

    #[test]
    fn exact_examples() {
        let inst = CoverInstance::from_lists(
            4,
            &[1, 2, 3],
            &[vec![1, 2], vec![2, 3], vec![3], vec![1, 3]],
        );
        let sol = exact_min_cover(&inst, DEFAULT_EXACT_LIMIT).unwrap();
        assert_eq!(sol.size(), 2);
        assert!(sol.complete);

        let k = 7;
        let singles: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
        let all: Vec<usize> = (0..k).collect();
        let inst = CoverInstance::from_lists(k, &all, &singles);
        assert_eq!(exact_min_cover(&inst, 24).unwrap().size(), k);

        let inst = CoverInstance::from_lists(4, &[0, 1, 2, 3], &[vec![0, 1], vec![1, 2]]);
        let sol = exact_min_cover(&inst, 24).unwrap();
        assert!(!sol.complete);
        assert_eq!(sol.covered.ones().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(sol.size(), 2);
    }

    #[test]
    fn exact_rejects_large() {
        let all: Vec<usize> = (0..30).collect();
        let inst = CoverInstance::from_lists(30, &all, std::slice::from_ref(&all));
        assert_eq!(
            exact_min_cover(&inst, 24),
            Err(CoverError::TooLarge {
                size: 30,
                limit: 24
            })
        );
    }

    #[test]
    fn sets_clipped_to_universe() {
        let inst = CoverInstance::from_lists(4, &[0, 1], &[vec![0, 3]]);
        assert_eq!(inst.sets[0].ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(3) - 11.0 / 6.0).abs() < 1e-15);
    }
}
