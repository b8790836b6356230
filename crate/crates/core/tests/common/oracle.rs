//! Naive reference implementations and randomized equivalence suites.
//!
//! Everything here works on plain `Vec<bool>` and index sets so it shares no
//! code path with the bit-packed library routines it checks.

#![allow(dead_code)]

use std::collections::BTreeSet;

use convtsetlin::automata::{clause_eval, EvalMode, LiteralVector, Polarity, TaBank};
use convtsetlin::binarize::BitImage;
use convtsetlin::bits;
use convtsetlin::convolution::{axis_origins, conv_clause_eval, PatchLayout, PatchedImage};
use convtsetlin::feedback::{select_prob, type_i_targets, type_ii_targets};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Literal values `[x, !x]` as booleans.
pub fn naive_literals(x: &[bool]) -> Vec<bool> {
    x.iter().copied().chain(x.iter().map(|v| !v)).collect()
}

/// Clause output by scanning included literals one at a time.
pub fn naive_clause(included: &[bool], literals: &[bool], learning: bool) -> bool {
    let mut any = false;
    for (k, &inc) in included.iter().enumerate() {
        if inc {
            any = true;
            if !literals[k] {
                return false;
            }
        }
    }
    any || learning
}

/// Patch origins along one axis by stepping and clamping.
pub fn naive_origins(len: usize, filter: usize, stride: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut o = 0;
    loop {
        if o + filter >= len {
            out.push(len - filter);
            break;
        }
        out.push(o);
        o += stride;
    }
    out
}

/// Variables of every patch, built straight from the image grid.
pub fn naive_patches(img: &BitImage, w: usize, d: usize) -> Vec<Vec<bool>> {
    let (width, height, layers) = img.dims();
    let xs = naive_origins(width, w, d);
    let ys = naive_origins(height, w, d);
    let mut out = Vec::new();
    for &oy in &ys {
        for &ox in &xs {
            let mut v = Vec::new();
            for z in 0..layers {
                for y in 0..w {
                    for x in 0..w {
                        v.push(img.get(ox + x, oy + y, z));
                    }
                }
            }
            for &t in &xs[..xs.len() - 1] {
                v.push(ox <= t);
            }
            for &t in &ys[..ys.len() - 1] {
                v.push(oy <= t);
            }
            out.push(v);
        }
    }
    out
}

pub fn random_bools<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<bool> {
    (0..n).map(|_| rng.gen_bool(p)).collect()
}

pub fn pack(v: &[bool]) -> Vec<u64> {
    let idx: Vec<usize> = v.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
    bits::from_indices(&idx, v.len())
}

/// Random bit-packed clause evaluations against the naive loop. Returns
/// the number of mismatches.
pub fn clause_eval_suite(cases: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut mismatches = 0;
    for _ in 0..cases {
        let o = rng.gen_range(1..=150);
        let x = random_bools(&mut rng, o, 0.5);
        // sparse inclusion so that both outputs occur
        let density = [0.0, 0.005, 0.02, 0.1][rng.gen_range(0..4)];
        let included = random_bools(&mut rng, 2 * o, density);
        let learning = rng.gen_bool(0.5);
        let mode = if learning {
            EvalMode::Learning
        } else {
            EvalMode::Inference
        };
        let lv = LiteralVector::from_variables(&x);
        let got = clause_eval(&pack(&included), lv.as_words(), mode);
        if got != naive_clause(&included, &naive_literals(&x), learning) {
            mismatches += 1;
        }
    }
    mismatches
}

/// Random convolutional evaluations against an OR over naive per-patch
/// evaluation, including the set of matching patches.
pub fn conv_or_suite(cases: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut mismatches = 0;
    for _ in 0..cases {
        let width = rng.gen_range(1..=8);
        let height = rng.gen_range(1..=8);
        let layers = rng.gen_range(1..=2);
        let w = rng.gen_range(1..=width.min(height));
        let d = rng.gen_range(1..=3);
        let img = BitImage::from_fn(width, height, layers, |_, _, _| rng.gen_bool(0.5));
        let layout = PatchLayout::convolutional(width, height, layers, w, d).unwrap();
        let patches = naive_patches(&img, w, d);
        let o = patches[0].len();
        let density = [0.0, 0.02, 0.08, 0.2][rng.gen_range(0..4)];
        let included = random_bools(&mut rng, 2 * o, density);
        let learning = rng.gen_bool(0.5);
        let mode = if learning {
            EvalMode::Learning
        } else {
            EvalMode::Inference
        };

        let expected: Vec<usize> = patches
            .iter()
            .enumerate()
            .filter(|(_, p)| naive_clause(&included, &naive_literals(p), learning))
            .map(|(b, _)| b)
            .collect();
        let packed = PatchedImage::new(&img, &layout).unwrap();
        let (fired, matching) = conv_clause_eval(&pack(&included), &packed, mode);
        if fired != !expected.is_empty() || matching != expected || layout.variables() != o {
            mismatches += 1;
        }
    }
    mismatches
}

/// Feedback target sets by set comprehension over literal indices.
pub struct NaiveTargets {
    pub ia: BTreeSet<usize>,
    pub ib: BTreeSet<usize>,
    pub ii: BTreeSet<usize>,
}

pub fn naive_targets(c: bool, lits: &[bool], q: &[bool], boost: bool) -> NaiveTargets {
    let n = lits.len();
    NaiveTargets {
        ia: (0..n).filter(|&k| lits[k] && c && (boost || !q[k])).collect(),
        ib: (0..n).filter(|&k| (!lits[k] || !c) && q[k]).collect(),
        ii: (0..n).filter(|&k| !lits[k] && c).collect(),
    }
}

fn set_of(words: &[u64]) -> BTreeSet<usize> {
    bits::ones(words).into_iter().collect()
}

/// Feedback set construction on random literal vectors and selectors, then
/// applied to random banks and compared state by state. Returns mismatches.
pub fn feedback_sets_suite(cases: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut mismatches = 0;
    for _ in 0..cases {
        let o = rng.gen_range(1..=80);
        let n = 2 * o;
        let x = random_bools(&mut rng, o, 0.5);
        let lits = naive_literals(&x);
        let q_rate = rng.gen_range(0.0..1.0);
        let q = random_bools(&mut rng, n, q_rate);
        let c = rng.gen_bool(0.5);
        let boost = rng.gen_bool(0.5);
        let want = naive_targets(c, &lits, &q, boost);
        let lv = LiteralVector::from_variables(&x);
        let t1 = type_i_targets(c, c.then(|| lv.as_words()), &pack(&q), n, boost);
        let t2 = type_ii_targets(c, lv.as_words(), n);
        if set_of(&t1.increment) != want.ia
            || set_of(&t1.decrement) != want.ib
            || set_of(&t2.increment) != want.ii
            || !bits::ones(&t2.decrement).is_empty()
        {
            mismatches += 1;
            continue;
        }

        // applied to a random bank: each targeted TA moves one step, bounded
        let big_n: u16 = rng.gen_range(1..=6);
        let states: Vec<u16> = (0..n).map(|_| rng.gen_range(1..=2 * big_n)).collect();
        let mut bank = TaBank::from_states(Polarity::Positive, 1, n, big_n, states.clone());
        bank.apply_masks(0, &t1.increment, &t1.decrement);
        let expected: Vec<u16> = (0..n)
            .map(|k| {
                let mut s = states[k];
                if want.ia.contains(&k) {
                    s = (s + 1).min(2 * big_n);
                }
                if want.ib.contains(&k) {
                    s = (s - 1).max(1);
                }
                s
            })
            .collect();
        let included: Vec<usize> = (0..n).filter(|&k| expected[k] > big_n).collect();
        if bank.states() != expected.as_slice() || bank.included_literals(0) != included {
            mismatches += 1;
        }
    }
    mismatches
}

/// Largest deviation, in standard errors, of the empirical selection
/// frequency from `select_prob` over the grid v in {-T, 0, T}, T in
/// {2, 4, 60}, y in {0, 1}.
pub fn select_prob_suite(draws: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for t in [2u32, 4, 60] {
        let ti = i64::from(t);
        for v in [-ti, 0, ti, -3 * ti, 5 * ti] {
            for y in [false, true] {
                let p = select_prob(v, t, y);
                let hits = (0..draws).filter(|_| rng.gen_bool(p)).count();
                let freq = hits as f64 / draws as f64;
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                let z = if se == 0.0 {
                    if freq == p {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (freq - p).abs() / se
                };
                worst = worst.max(z);
            }
        }
    }
    worst
}

/// Exhaustive layout counts for X, W, d <= 32. Returns mismatches.
pub fn layout_count_suite(max: usize) -> usize {
    let mut mismatches = 0;
    for x in 1..=max {
        for w in 1..=x {
            for d in 1..=max {
                let expected = (x - w).div_ceil(d) + 1;
                let origins = axis_origins(x, w, d);
                let layout = PatchLayout::convolutional(x, x, 1, w, d).unwrap();
                if origins.len() != expected
                    || layout.patches_x() != expected
                    || layout.patch_count() != expected * expected
                    || origins != naive_origins(x, w, d)
                {
                    mismatches += 1;
                }
            }
        }
    }
    mismatches
}
