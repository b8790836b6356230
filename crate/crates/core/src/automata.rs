//! Tsetlin automata banks, literal vectors and conjunctive clause evaluation.
//!
//! A clause over `o` input variables owns `2o` automata, one per literal. The
//! first `o` literals are the variables themselves, the next `o` their
//! negations. An automaton with `N` states per action sits in `1..=2N` and
//! includes its literal when its state exceeds `N`.
//!
//! Clause and literal indices are 0-based throughout.

use rand::Rng;

use crate::bits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Include,
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> i64 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

/// Empty clauses output 1 while learning and 0 while classifying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMode {
    Learning,
    Inference,
}

/// Action chosen by an automaton in `state` with `states_per_action` states
/// per action.
///
/// Panics when `state` lies outside `1..=2N`.
#[inline]
pub fn ta_action(state: u16, states_per_action: u16) -> Action {
    assert!(
        state >= 1 && u32::from(state) <= 2 * u32::from(states_per_action),
        "automaton state {state} outside 1..={}",
        2 * u32::from(states_per_action)
    );
    if state > states_per_action {
        Action::Include
    } else {
        Action::Exclude
    }
}

/// Packed literal assignment for `o` variables: `x_1..x_o, !x_1..!x_o`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiteralVector {
    variables: usize,
    words: Vec<u64>,
}

impl LiteralVector {
    pub fn from_variables(x: &[bool]) -> Self {
        let o = x.len();
        let mut words = vec![0u64; bits::word_count(2 * o)];
        write_literals(x, &mut words);
        Self { variables: o, words }
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn literals(&self) -> usize {
        2 * self.variables
    }

    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.literals(), "literal {k} out of range");
        bits::get(&self.words, k)
    }

    pub fn as_words(&self) -> &[u64] {
        &self.words
    }

    /// Indices of the literals that are 1.
    pub fn ones(&self) -> Vec<usize> {
        bits::ones(&self.words)
    }
}

/// Writes the literals of `x` into `out`, which must hold `2 * x.len()` bits
/// and is overwritten.
pub(crate) fn write_literals(x: &[bool], out: &mut [u64]) {
    let o = x.len();
    out.fill(0);
    for (k, &v) in x.iter().enumerate() {
        if v {
            bits::set(out, k);
        } else {
            bits::set(out, o + k);
        }
    }
}

/// Evaluates a conjunction given its packed include mask.
///
/// A clause outputs 1 iff every included literal is 1. Clauses with nothing
/// included follow `mode`.
#[inline]
pub fn clause_eval(include: &[u64], literals: &[u64], mode: EvalMode) -> bool {
    debug_assert_eq!(include.len(), literals.len());
    let mut empty = true;
    for (&m, &l) in include.iter().zip(literals) {
        if m & !l != 0 {
            return false;
        }
        empty &= m == 0;
    }
    !empty || mode == EvalMode::Learning
}

/// Automaton states of one polarity: `clauses x literals`, row-major.
///
/// Alongside the raw states the bank caches a packed include mask per
/// clause, refreshed whenever a state crosses the include boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaBank {
    polarity: Polarity,
    clauses: usize,
    literals: usize,
    words: usize,
    states_per_action: u16,
    states: Vec<u16>,
    include: Vec<u64>,
}

impl TaBank {
    /// Creates a bank with every automaton drawn uniformly from `{N, N + 1}`,
    /// consuming one draw per automaton in clause-major order.
    pub fn new<R: Rng + ?Sized>(
        polarity: Polarity,
        clauses: usize,
        variables: usize,
        states_per_action: u16,
        rng: &mut R,
    ) -> Self {
        let literals = 2 * variables;
        let states = (0..clauses * literals)
            .map(|_| states_per_action + u16::from(rng.gen::<bool>()))
            .collect();
        Self::from_states(polarity, clauses, literals, states_per_action, states)
    }

    /// Builds a bank from explicit states.
    ///
    /// Panics if the dimensions disagree, `literals` is odd, or a state lies
    /// outside `1..=2N`.
    pub fn from_states(
        polarity: Polarity,
        clauses: usize,
        literals: usize,
        states_per_action: u16,
        states: Vec<u16>,
    ) -> Self {
        assert!(literals.is_multiple_of(2), "literal count must be even");
        assert_eq!(states.len(), clauses * literals, "state matrix size mismatch");
        let top = 2 * u32::from(states_per_action);
        assert!(
            states.iter().all(|&s| s >= 1 && u32::from(s) <= top),
            "state outside 1..={top}"
        );
        let words = bits::word_count(literals);
        let mut bank = Self {
            polarity,
            clauses,
            literals,
            words,
            states_per_action,
            states,
            include: vec![0; clauses * words],
        };
        for j in 0..clauses {
            for k in 0..literals {
                if bank.states[j * literals + k] > states_per_action {
                    bits::set(&mut bank.include[j * words..(j + 1) * words], k);
                }
            }
        }
        bank
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn clauses(&self) -> usize {
        self.clauses
    }

    pub fn literals(&self) -> usize {
        self.literals
    }

    pub fn variables(&self) -> usize {
        self.literals / 2
    }

    pub fn words_per_clause(&self) -> usize {
        self.words
    }

    pub fn states_per_action(&self) -> u16 {
        self.states_per_action
    }

    pub fn states(&self) -> &[u16] {
        &self.states
    }

    pub fn state(&self, clause: usize, literal: usize) -> u16 {
        assert!(clause < self.clauses && literal < self.literals);
        self.states[clause * self.literals + literal]
    }

    pub fn action(&self, clause: usize, literal: usize) -> Action {
        ta_action(self.state(clause, literal), self.states_per_action)
    }

    pub fn include_mask(&self, clause: usize) -> &[u64] {
        assert!(clause < self.clauses, "clause {clause} out of range");
        &self.include[clause * self.words..(clause + 1) * self.words]
    }

    /// `{ k | state[clause, k] > N }`.
    pub fn included_literals(&self, clause: usize) -> Vec<usize> {
        assert!(clause < self.clauses, "clause {clause} out of range");
        let row = &self.states[clause * self.literals..(clause + 1) * self.literals];
        row.iter()
            .enumerate()
            .filter(|(_, &s)| s > self.states_per_action)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn is_empty(&self, clause: usize) -> bool {
        self.include_mask(clause).iter().all(|&w| w == 0)
    }

    pub fn eval(&self, clause: usize, literals: &[u64], mode: EvalMode) -> bool {
        clause_eval(self.include_mask(clause), literals, mode)
    }

    /// Moves one automaton a step towards the top of its state space.
    pub fn increment(&mut self, clause: usize, literal: usize) {
        let idx = clause * self.literals + literal;
        let s = self.states[idx];
        if u32::from(s) < 2 * u32::from(self.states_per_action) {
            self.states[idx] = s + 1;
            if s == self.states_per_action {
                bits::set(
                    &mut self.include[clause * self.words..(clause + 1) * self.words],
                    literal,
                );
            }
        }
    }

    /// Moves one automaton a step towards state 1.
    pub fn decrement(&mut self, clause: usize, literal: usize) {
        let idx = clause * self.literals + literal;
        let s = self.states[idx];
        if s > 1 {
            self.states[idx] = s - 1;
            if s == self.states_per_action + 1 {
                bits::clear(
                    &mut self.include[clause * self.words..(clause + 1) * self.words],
                    literal,
                );
            }
        }
    }

    /// Saturating `+1` on every `(clause, literal)` pair.
    pub fn state_inc(&mut self, targets: &[(usize, usize)]) {
        for &(j, k) in targets {
            assert!(j < self.clauses && k < self.literals, "({j}, {k}) out of range");
            self.increment(j, k);
        }
    }

    /// Saturating `-1` on every `(clause, literal)` pair.
    pub fn state_dec(&mut self, targets: &[(usize, usize)]) {
        for &(j, k) in targets {
            assert!(j < self.clauses && k < self.literals, "({j}, {k}) out of range");
            self.decrement(j, k);
        }
    }

    /// Increments the literals set in `increment`, then decrements those set
    /// in `decrement`, all within one clause.
    pub fn apply_masks(&mut self, clause: usize, increment: &[u64], decrement: &[u64]) {
        assert!(clause < self.clauses, "clause {clause} out of range");
        for k in bits::ones(increment) {
            self.increment(clause, k);
        }
        for k in bits::ones(decrement) {
            self.decrement(clause, k);
        }
    }

    /// Approximate heap footprint of the states and include masks.
    pub fn memory_bytes(&self) -> usize {
        self.states.len() * std::mem::size_of::<u16>() + self.include.len() * std::mem::size_of::<u64>()
    }
}
