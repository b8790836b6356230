//! Type I / Type II feedback and integer clause weights.
//!
//! Type Ia comes in two forms. By default a literal of value 1 in a firing
//! clause is incremented unless its selector `q` fires, that is with
//! probability `(s - 1) / s`. With `boost` every such literal is
//! incremented.
//!
//! Random draws happen in a fixed order so seeded runs are reproducible:
//! for each polarity (positive first), clauses ascend; for each clause the
//! selector `r` is drawn first, then (if selected and the clause fired) the
//! update patch, then the selectors `q` in ascending literal order. Without
//! boost `q` is drawn for every literal; with boost only for the literals
//! Type Ib can reach.

use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;

use crate::automata::{Polarity, TaBank};
use crate::bits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackType {
    TypeI,
    TypeII,
}

/// Probability that a clause is selected for feedback given the vote sum
/// `v`, the target `threshold` and the training label `y`.
pub fn select_prob(v: i64, threshold: u32, y: bool) -> f64 {
    assert!(threshold >= 1, "threshold must be positive");
    let t = i64::from(threshold);
    let v = v.clamp(-t, t);
    let num = if y { t - v } else { t + v };
    num as f64 / (2 * t) as f64
}

/// Positive clauses get Type I for `y = 1` and Type II for `y = 0`; negative
/// clauses the other way round.
pub fn dispatch_feedback(polarity: Polarity, y: bool) -> FeedbackType {
    match (polarity, y) {
        (Polarity::Positive, true) | (Polarity::Negative, false) => FeedbackType::TypeI,
        (Polarity::Positive, false) | (Polarity::Negative, true) => FeedbackType::TypeII,
    }
}

/// Integer weight step. Weights only move when the clause fired; Type II
/// never takes a weight below 1.
pub fn weight_update(weight: u32, clause_output: bool, kind: FeedbackType) -> u32 {
    debug_assert!(weight >= 1);
    match (kind, clause_output) {
        (FeedbackType::TypeI, true) => weight.saturating_add(1),
        (FeedbackType::TypeII, true) if weight > 1 => weight - 1,
        _ => weight,
    }
}

/// Per-clause integer weights of one polarity, initialised to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseWeights(Vec<u32>);

impl ClauseWeights {
    pub fn new(clauses: usize) -> Self {
        Self(vec![1; clauses])
    }

    /// Panics if any weight is zero.
    pub fn from_vec(weights: Vec<u32>) -> Self {
        assert!(weights.iter().all(|&w| w >= 1), "clause weights must be >= 1");
        Self(weights)
    }

    pub fn get(&self, clause: usize) -> u32 {
        self.0[clause]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> i64 {
        self.0.iter().map(|&w| i64::from(w)).sum()
    }

    pub fn update(&mut self, clause: usize, clause_output: bool, kind: FeedbackType) {
        self.0[clause] = weight_update(self.0[clause], clause_output, kind);
    }
}

/// Literals of one clause to step up (`increment`) and down (`decrement`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackTargets {
    pub increment: Vec<u64>,
    pub decrement: Vec<u64>,
}

/// Literals eligible for Type Ib: those that are 0, or all of them when the
/// clause did not fire.
pub fn type_ib_candidates(clause_output: bool, literals: Option<&[u64]>, n_literals: usize) -> Vec<u64> {
    let words = bits::word_count(n_literals);
    let mut out = vec![u64::MAX; words];
    if clause_output {
        let lits = literals.expect("a firing clause needs its literal vector");
        for (o, &l) in out.iter_mut().zip(lits) {
            *o = !l;
        }
    }
    if let Some(last) = out.last_mut() {
        *last &= bits::tail_mask(n_literals);
    }
    out
}

/// Type Ia increments `{k | l_k = 1 and c = 1}`, restricted to `q_k = 0`
/// unless `boost`; Type Ib decrements `{k | (l_k = 0 or c = 0) and q_k = 1}`.
///
/// Panics if the clause fired and `literals` is `None`.
pub fn type_i_targets(
    clause_output: bool,
    literals: Option<&[u64]>,
    q: &[u64],
    n_literals: usize,
    boost: bool,
) -> FeedbackTargets {
    let words = bits::word_count(n_literals);
    let increment = if clause_output {
        let lits = literals.expect("a firing clause needs its literal vector");
        assert_eq!(lits.len(), words);
        if boost {
            lits.to_vec()
        } else {
            lits.iter().zip(q).map(|(l, q)| l & !q).collect()
        }
    } else {
        vec![0; words]
    };
    let decrement = type_ib_candidates(clause_output, literals, n_literals)
        .iter()
        .zip(q)
        .map(|(c, q)| c & q)
        .collect();
    FeedbackTargets { increment, decrement }
}

/// Type II increments `{k | l_k = 0 and c = 1}`: it includes zero-valued
/// literals so the clause stops firing on this input.
pub fn type_ii_targets(clause_output: bool, literals: &[u64], n_literals: usize) -> FeedbackTargets {
    let words = bits::word_count(n_literals);
    let mut increment = vec![0; words];
    if clause_output {
        for (i, &l) in increment.iter_mut().zip(literals) {
            *i = !l;
        }
        if let Some(last) = increment.last_mut() {
            *last &= bits::tail_mask(n_literals);
        }
    }
    FeedbackTargets {
        increment,
        decrement: vec![0; words],
    }
}

/// Draws `q_k ~ Bernoulli(1/s)` for each candidate literal, ascending.
pub fn draw_specificity_mask<R: Rng + ?Sized>(rng: &mut R, candidates: &[u64], specificity: &Bernoulli) -> Vec<u64> {
    let mut q = vec![0u64; candidates.len()];
    for k in bits::ones(candidates) {
        if specificity.sample(rng) {
            bits::set(&mut q, k);
        }
    }
    q
}

/// Bernoulli(1/s) sampler for the Type Ib selectors.
pub fn specificity_sampler(specificity: f64) -> Bernoulli {
    Bernoulli::new(1.0 / specificity).expect("specificity must be >= 1")
}

/// Applies Type I feedback to one clause. `literals` is the (patch) literal
/// vector the clause fired on, or `None` when it did not fire.
pub fn type_i_feedback<R: Rng + ?Sized>(
    bank: &mut TaBank,
    clause: usize,
    clause_output: bool,
    literals: Option<&[u64]>,
    specificity: &Bernoulli,
    boost: bool,
    rng: &mut R,
) {
    let n = bank.literals();
    let candidates = if boost {
        type_ib_candidates(clause_output, literals, n)
    } else {
        type_ib_candidates(false, None, n)
    };
    let q = draw_specificity_mask(rng, &candidates, specificity);
    let targets = type_i_targets(clause_output, literals, &q, n, boost);
    bank.apply_masks(clause, &targets.increment, &targets.decrement);
}

/// Applies Type II feedback to one clause; a no-op unless it fired.
pub fn type_ii_feedback(bank: &mut TaBank, clause: usize, clause_output: bool, literals: &[u64]) {
    if !clause_output {
        return;
    }
    let targets = type_ii_targets(true, literals, bank.literals());
    bank.apply_masks(clause, &targets.increment, &targets.decrement);
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::automata::LiteralVector;

    #[test]
    fn select_prob_values() {
        assert_eq!(select_prob(1, 2, true), 0.25);
        for t in [1, 2, 4, 60] {
            assert_eq!(select_prob(i64::from(t), t, true), 0.0);
            assert_eq!(select_prob(-i64::from(t), t, true), 1.0);
            assert_eq!(select_prob(i64::from(t), t, false), 1.0);
        }
        assert_eq!(select_prob(0, 4, true), 0.5);
        assert_eq!(select_prob(0, 4, false), 0.5);
        // clamping
        assert_eq!(select_prob(1000, 4, true), select_prob(4, 4, true));
        assert_eq!(select_prob(-1000, 4, false), select_prob(-4, 4, false));
    }

    #[test]
    fn dispatch_table() {
        assert_eq!(dispatch_feedback(Polarity::Positive, true), FeedbackType::TypeI);
        assert_eq!(dispatch_feedback(Polarity::Positive, false), FeedbackType::TypeII);
        assert_eq!(dispatch_feedback(Polarity::Negative, true), FeedbackType::TypeII);
        assert_eq!(dispatch_feedback(Polarity::Negative, false), FeedbackType::TypeI);
    }

    #[test]
    fn weight_rules() {
        assert_eq!(weight_update(1, true, FeedbackType::TypeII), 1);
        assert_eq!(weight_update(5, false, FeedbackType::TypeI), 5);
        assert_eq!(weight_update(5, true, FeedbackType::TypeI), 6);
        assert_eq!(weight_update(5, true, FeedbackType::TypeII), 4);
        assert_eq!(weight_update(5, false, FeedbackType::TypeII), 5);
    }

    fn lits_1001() -> LiteralVector {
        // 2 variables whose literal vector reads (1, 0, 0, 1)
        LiteralVector::from_variables(&[true, false])
    }

    #[test]
    fn type_i_without_ib() {
        let lv = lits_1001();
        let t = type_i_targets(true, Some(lv.as_words()), &[0], 4, true);
        assert_eq!(bits::ones(&t.increment), vec![0, 3]);
        assert!(bits::ones(&t.decrement).is_empty());
    }

    #[test]
    fn type_i_clause_off_decrements_everything_selected() {
        let t = type_i_targets(false, None, &[u64::MAX], 4, false);
        assert!(bits::ones(&t.increment).is_empty());
        assert_eq!(bits::ones(&t.decrement), vec![0, 1, 2, 3]);
    }

    #[test]
    fn type_i_with_full_ib() {
        let lv = lits_1001();
        let t = type_i_targets(true, Some(lv.as_words()), &[u64::MAX], 4, true);
        assert_eq!(bits::ones(&t.increment), vec![0, 3]);
        assert_eq!(bits::ones(&t.decrement), vec![1, 2]);
    }

    #[test]
    fn unboosted_ia_skips_selected_literals() {
        let lv = lits_1001();
        // q selects literals 0 and 1: literal 0 loses its Ia step, literal 1 gets Ib
        let t = type_i_targets(true, Some(lv.as_words()), &[0b0011], 4, false);
        assert_eq!(bits::ones(&t.increment), vec![3]);
        assert_eq!(bits::ones(&t.decrement), vec![1]);
        let t = type_i_targets(true, Some(lv.as_words()), &[0], 4, false);
        assert_eq!(bits::ones(&t.increment), vec![0, 3]);
    }

    #[test]
    #[should_panic]
    fn type_i_firing_needs_literals() {
        type_i_targets(true, None, &[0], 4, true);
    }

    #[test]
    fn type_ii_includes_zero_literal() {
        // literal x2 (index 1) is 0; its automaton sits at 3 with N = 3.
        let mut bank = TaBank::from_states(Polarity::Positive, 1, 4, 3, vec![4, 3, 3, 4]);
        let lv = lits_1001();
        type_ii_feedback(&mut bank, 0, true, lv.as_words());
        assert_eq!(bank.state(0, 1), 4);
        assert_eq!(bank.state(0, 2), 4);
        assert_eq!(bank.state(0, 0), 4);
        assert_eq!(bank.state(0, 3), 4);
    }

    #[test]
    fn type_ii_guards() {
        let mut bank = TaBank::from_states(Polarity::Positive, 1, 4, 3, vec![4, 3, 3, 4]);
        let before = bank.clone();
        type_ii_feedback(&mut bank, 0, false, lits_1001().as_words());
        assert_eq!(bank, before);
        let all_one = vec![0b1111u64];
        type_ii_feedback(&mut bank, 0, true, &all_one);
        assert_eq!(bank, before);
    }

    #[test]
    fn specificity_one_always_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = draw_specificity_mask(&mut rng, &[0b1010], &specificity_sampler(1.0));
        assert_eq!(q, vec![0b1010]);
    }

    #[test]
    fn weights_floor() {
        let mut w = ClauseWeights::new(3);
        for _ in 0..10 {
            w.update(1, true, FeedbackType::TypeII);
        }
        w.update(2, true, FeedbackType::TypeI);
        assert_eq!(w.as_slice(), &[1, 1, 2]);
        assert_eq!(w.total(), 4);
    }
}
