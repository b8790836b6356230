//! Acceptance checks. Prints one PASS / FAIL / SKIP line per criterion.
//!
//! MNIST checks need IDX files in `CTM_MNIST_DIR`; the full-scale run
//! additionally needs `CTM_MNIST_FULL=1` and takes hours.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use convtsetlin::automata::Polarity;
use convtsetlin::binarize::generate_noisy_xor;
use convtsetlin::bits;
use convtsetlin::classifier::FitOptions;
use convtsetlin::data_io::{
    decode_dataset, decode_model, encode_dataset, encode_model, load_idx_dataset, load_idx_images, load_idx_labels,
};
use convtsetlin::interpret::{clause_to_pattern, parse_grid, render_grid};
use convtsetlin::{seeded_rng, Dataset, Error, Hyperparams, MulticlassModel};

const XOR_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const XOR_EPOCHS: usize = 250;
const XOR_AVERAGED_EPOCHS: usize = 100;
const XOR_CTM_MIN: f64 = 0.99;
const XOR_TM_MIN: f64 = 0.97;
const XOR_TM_CLAUSES: usize = 80;
const XOR_TM_THRESHOLD: u32 = 150;

const ORACLE_CASES: usize = 10_000;
const SELECT_DRAWS: usize = 100_000;
const SELECT_MAX_Z: f64 = 3.0;
const LAYOUT_MAX: usize = 32;

const MNIST_WINDOW: usize = 11;
const MNIST_OFFSET: i32 = 2;
const MNIST_SCALED_CLAUSES: usize = 250;
const MNIST_SCALED_EPOCHS: usize = 100;
const MNIST_SCALED_MIN: f64 = 0.983;
const MNIST_SMOKE_EXAMPLES: usize = 10_000;
const MNIST_SMOKE_CLAUSES: usize = 100;
const MNIST_SMOKE_EPOCHS: usize = 20;
const MNIST_SMOKE_MIN: f64 = 0.96;
const MNIST_BUDGETS: [usize; 3] = [50, 100, 250];
const MNIST_BUDGET_SEEDS: [u64; 2] = [1, 2];

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Line {
    name: &'static str,
    verdict: Verdict,
    detail: String,
}

impl Line {
    fn check(name: &'static str, ok: bool, detail: String) -> Self {
        let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        Self { name, verdict, detail }
    }

    fn skip(name: &'static str, why: &str) -> Self {
        Self {
            name,
            verdict: Verdict::Skip,
            detail: why.to_owned(),
        }
    }
}

/// Trains one XOR model and returns it with the mean test accuracy over the
/// final epochs.
fn xor_run(params: Hyperparams) -> (MulticlassModel, f64) {
    let data = generate_noisy_xor(2500, 10_000, 0.4, params.rng_seed).unwrap();
    let mut rng = seeded_rng(params.rng_seed);
    let mut model = MulticlassModel::new(params, 2, data.train.dims(), &mut rng).unwrap();
    let options = FitOptions {
        test: Some(&data.test),
        track_train_accuracy: false,
    };
    let reports = model
        .fit_with(&data.train, XOR_EPOCHS, &mut rng, options, |_| {})
        .unwrap();
    let tail = &reports[reports.len() - XOR_AVERAGED_EPOCHS..];
    let mean = tail.iter().map(|r| r.test_accuracy.unwrap()).sum::<f64>() / tail.len() as f64;
    (model, mean)
}

fn xor_seeds(base: &Hyperparams) -> Vec<(MulticlassModel, f64)> {
    std::thread::scope(|s| {
        let handles: Vec<_> = XOR_SEEDS
            .iter()
            .map(|&seed| {
                let mut p = base.clone();
                p.rng_seed = seed;
                s.spawn(move || xor_run(p))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn seed_summary(runs: &[(MulticlassModel, f64)]) -> (f64, String) {
    let mean = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
    let per: Vec<String> = runs.iter().map(|r| format!("{:.4}", r.1)).collect();
    (mean, format!("mean {mean:.4} over seeds [{}]", per.join(", ")))
}

fn xor_criteria(lines: &mut Vec<Line>) -> MulticlassModel {
    let runs = xor_seeds(&Hyperparams::noisy_xor());
    let (mean, detail) = seed_summary(&runs);
    lines.push(Line::check(
        "noisy-xor-ctm",
        mean >= XOR_CTM_MIN,
        format!("{detail}, need >= {XOR_CTM_MIN}"),
    ));

    let mut classic = Hyperparams::noisy_xor();
    classic.filter_size = None;
    classic.clauses_per_class = XOR_TM_CLAUSES;
    classic.threshold = XOR_TM_THRESHOLD;
    let (tm_mean, tm_detail) = seed_summary(&xor_seeds(&classic));
    lines.push(Line::check(
        "noisy-xor-classic-tm",
        tm_mean >= XOR_TM_MIN,
        format!("{tm_detail}, need >= {XOR_TM_MIN}"),
    ));

    runs.into_iter().next().unwrap().0
}

fn oracle_criterion() -> Line {
    let clause = oracle::clause_eval_suite(ORACLE_CASES, 101);
    let conv = oracle::conv_or_suite(ORACLE_CASES, 102);
    let feedback = oracle::feedback_sets_suite(ORACLE_CASES, 103);
    let z = oracle::select_prob_suite(SELECT_DRAWS, 104);
    let layout = oracle::layout_count_suite(LAYOUT_MAX);
    Line::check(
        "oracle-suites",
        clause + conv + feedback + layout == 0 && z <= SELECT_MAX_Z,
        format!(
            "mismatches: clause {clause}, conv {conv}, feedback {feedback}, layout {layout}; select_prob worst z {z:.2}"
        ),
    )
}

fn ctm(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_ctm"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism_criterion() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |name: &str| d.join(name).to_str().unwrap().to_owned();
    let mut ok = ctm(&["gen-xor", "--seed", "7", "--out", &p("xor")]);
    for (model, workers) in [("a.ctmm", "1"), ("b.ctmm", "1"), ("c.ctmm", "4")] {
        ok &= ctm(&[
            "train",
            "--train-data",
            &p("xor/train.ctmd"),
            "--seed",
            "7",
            "--epochs",
            "10",
            "--skip-train-acc",
            "--workers",
            workers,
            "--model",
            &p(model),
        ]);
    }
    if !ok {
        return Line::check("determinism", false, "ctm command failed".into());
    }
    let read = |n: &str| fs::read(d.join(n)).unwrap();
    let (a, b, c) = (read("a.ctmm"), read("b.ctmm"), read("c.ctmm"));
    Line::check(
        "determinism",
        a == b && a == c,
        format!(
            "two --workers 1 runs identical: {}; --workers 4 identical: {} ({} bytes)",
            a == b,
            a == c,
            a.len()
        ),
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn serialization_criterion(model: &MulticlassModel) -> Line {
    let bytes = encode_model(model);
    let model_ok = decode_model(&bytes).is_ok_and(|m| &m == model && encode_model(&m) == bytes);

    let data = generate_noisy_xor(300, 10, 0.4, 3).unwrap().train;
    let dbytes = encode_dataset(&data);
    let data_ok = decode_dataset(&dbytes)
        .is_ok_and(|d| d.images() == data.images() && d.labels() == data.labels() && encode_dataset(&d) == dbytes);

    let idx_ok = load_idx_images(fixture("two_3x2-images.idx3")).is_ok_and(|imgs| {
        imgs.len() == 2
            && imgs[0].pixels() == [0, 50, 100, 150, 200, 250]
            && imgs[1].pixels() == [255, 0, 255, 0, 255, 0]
    }) && load_idx_labels(fixture("two-labels.idx1")).is_ok_and(|l| l == vec![3, 7]);

    let mut flipped = bytes.clone();
    flipped[bytes.len() / 2] ^= 1;
    let mut magic = bytes.clone();
    magic[0] ^= 0xff;
    let typed = matches!(decode_model(&flipped), Err(Error::ChecksumMismatch { .. }))
        && matches!(decode_model(&magic), Err(Error::BadMagic { .. }))
        && matches!(
            decode_model(&bytes[..bytes.len() - 5]),
            Err(Error::CorruptLength { .. } | Error::Truncated { .. })
        );

    Line::check(
        "serialization",
        model_ok && data_ok && idx_ok && typed,
        format!(
            "model round-trip {model_ok}, dataset round-trip {data_ok}, idx fixtures {idx_ok}, typed errors {typed}"
        ),
    )
}

fn interpretability_criterion(model: &MulticlassModel) -> Line {
    let layout = model.layout();
    let o = layout.variables();
    let px = layout.pixel_variables();
    let mut round_trips = true;
    for class in 0..model.class_models().len() {
        for pol in [Polarity::Positive, Polarity::Negative] {
            let bank = model.class_model(class).bank(pol);
            for j in 0..bank.clauses() {
                let grid = render_grid(layout, bank.include_mask(j));
                let pixels: Vec<usize> = bank.included_literals(j).into_iter().filter(|&k| k % o < px).collect();
                let parsed = parse_grid(layout, &grid).unwrap();
                let again = render_grid(layout, &bits::from_indices(&parsed, layout.literals()));
                round_trips &= parsed == pixels && again == grid;
            }
        }
    }

    // upper-right origin of a 4x4 image with a 2x2 filter
    let (corner_x, corner_y) = (2, 0);
    let diagonals = [["10", "01"], ["01", "10"]];
    let found = (0..model.class_model(1).bank(Polarity::Positive).clauses())
        .map(|j| clause_to_pattern(model, 1, Polarity::Positive, j))
        .filter(|p| diagonals.iter().any(|d| p.grid == d))
        .filter(|p| p.x_range.contains(corner_x) && p.y_range.contains(corner_y))
        .count();
    Line::check(
        "interpretability",
        round_trips && found > 0,
        format!("grid round-trips {round_trips}; {found} positive class-1 clauses are corner diagonals"),
    )
}

fn mnist_split(dir: &Path, prefix: &str) -> Dataset {
    load_idx_dataset(
        dir.join(format!("{prefix}-images-idx3-ubyte")),
        dir.join(format!("{prefix}-labels-idx1-ubyte")),
        MNIST_WINDOW,
        MNIST_OFFSET,
    )
    .unwrap()
}

fn mnist_accuracy(clauses: usize, epochs: usize, seed: u64, train: &Dataset, test: &Dataset) -> f64 {
    let mut params = Hyperparams::mnist().with_clause_budget(clauses);
    params.rng_seed = seed;
    let mut rng = seeded_rng(seed);
    let mut model = MulticlassModel::new(params, 10, train.dims(), &mut rng).unwrap();
    model
        .fit_with(train, epochs, &mut rng, FitOptions::default(), |_| {})
        .unwrap();
    model.evaluate(test).unwrap().accuracy
}

fn mnist_criteria(lines: &mut Vec<Line>) {
    let names = ["mnist-scaled", "mnist-smoke", "mnist-monotone-budget"];
    let Some(dir) = std::env::var_os("CTM_MNIST_DIR").map(PathBuf::from) else {
        for n in names {
            lines.push(Line::skip(n, "CTM_MNIST_DIR not set"));
        }
        return;
    };
    let train = mnist_split(&dir, "train");
    let test = mnist_split(&dir, "t10k");
    let smoke = train.take(MNIST_SMOKE_EXAMPLES);

    if std::env::var("CTM_MNIST_FULL").as_deref() == Ok("1") {
        let acc = mnist_accuracy(MNIST_SCALED_CLAUSES, MNIST_SCALED_EPOCHS, 1, &train, &test);
        lines.push(Line::check(
            names[0],
            acc >= MNIST_SCALED_MIN,
            format!(
                "accuracy {acc:.4} on {} train examples, need >= {MNIST_SCALED_MIN}",
                train.len()
            ),
        ));
    } else {
        lines.push(Line::skip(names[0], "CTM_MNIST_FULL=1 not set"));
    }

    let acc = mnist_accuracy(MNIST_SMOKE_CLAUSES, MNIST_SMOKE_EPOCHS, 1, &smoke, &test);
    lines.push(Line::check(
        names[1],
        acc >= MNIST_SMOKE_MIN,
        format!(
            "accuracy {acc:.4} on {} train examples, need >= {MNIST_SMOKE_MIN}",
            smoke.len()
        ),
    ));

    let means: Vec<f64> = MNIST_BUDGETS
        .iter()
        .map(|&c| {
            let accs = MNIST_BUDGET_SEEDS
                .iter()
                .map(|&s| mnist_accuracy(c, MNIST_SMOKE_EPOCHS, s, &smoke, &test));
            accs.sum::<f64>() / MNIST_BUDGET_SEEDS.len() as f64
        })
        .collect();
    let monotone = means.windows(2).all(|w| w[0] <= w[1]);
    let detail: Vec<String> = MNIST_BUDGETS
        .iter()
        .zip(&means)
        .map(|(c, m)| format!("{c}: {m:.4}"))
        .collect();
    lines.push(Line::check(
        names[2],
        monotone,
        format!("mean accuracy by budget {}", detail.join(", ")),
    ));
}

#[test]
fn acceptance_criteria() {
    let mut lines = Vec::new();
    let xor_model = xor_criteria(&mut lines);
    lines.push(oracle_criterion());
    lines.push(determinism_criterion());
    lines.push(serialization_criterion(&xor_model));
    lines.push(interpretability_criterion(&xor_model));
    mnist_criteria(&mut lines);

    // written to the raw handle so the report shows without --nocapture
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for l in &lines {
        let tag = match l.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        };
        writeln!(out, "{tag} {}: {}", l.name, l.detail).unwrap();
    }
    drop(out);
    let failed: Vec<&str> = lines
        .iter()
        .filter(|l| matches!(l.verdict, Verdict::Fail))
        .map(|l| l.name)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
