//! `ctm`: train, evaluate and inspect convolutional Tsetlin machines.

mod config;

use std::fs::{self, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use convtsetlin::binarize::generate_noisy_xor;
use convtsetlin::classifier::FitOptions;
use convtsetlin::data_io::{export_dataset_binary, import_dataset_binary, load_idx_dataset, load_model, save_model};
use convtsetlin::interpret::{export_report, export_text_report};
use convtsetlin::{seeded_rng, Dataset, MulticlassModel};

use crate::config::TrainSettings;

const DEFAULT_WINDOW: usize = 11;
const DEFAULT_OFFSET: i32 = 2;
const METRICS_HEADER: &str = "epoch,train_acc,test_acc,seconds";

#[derive(Debug, Parser)]
#[command(name = "ctm", version, about = "Convolutional Tsetlin machine toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it to --model.
    Train {
        /// TOML file with the same keys as the flags (kebab-case).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Box<TrainSettings>,
    },
    /// Report accuracy and the confusion matrix of a model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: TestData,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write the highest-weight clauses per class as a report.
    Export {
        #[arg(long)]
        model: PathBuf,
        /// Clauses per class and polarity.
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
        /// Optional data for per-clause firing rates.
        #[command(flatten)]
        data: TestData,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Generate the 2D Noisy XOR problem as train.ctmd and test.ctmd.
    GenXor {
        #[arg(long = "train", default_value_t = 2500)]
        n_train: usize,
        #[arg(long = "test", default_value_t = 10_000)]
        n_test: usize,
        #[arg(long, default_value_t = 0.4)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Binarize an IDX image/label pair into a dataset file.
    Binarize {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_OFFSET, allow_hyphen_values = true)]
        offset: i32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Csv,
    Text,
}

#[derive(Debug, Clone, Default, clap::Args)]
struct TestData {
    #[arg(long)]
    test_data: Option<PathBuf>,
    #[arg(long)]
    test_images: Option<PathBuf>,
    #[arg(long)]
    test_labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = DEFAULT_OFFSET, allow_hyphen_values = true)]
    offset: i32,
}

impl TestData {
    fn load(&self) -> Result<Option<Dataset>> {
        load_split(
            self.test_data.as_deref(),
            self.test_images.as_deref(),
            self.test_labels.as_deref(),
            self.window,
            self.offset,
            "test",
        )
    }
}

fn load_split(
    data: Option<&Path>,
    images: Option<&Path>,
    labels: Option<&Path>,
    window: usize,
    offset: i32,
    which: &str,
) -> Result<Option<Dataset>> {
    match (data, images, labels) {
        (Some(d), None, None) => Ok(Some(
            import_dataset_binary(d).with_context(|| format!("reading {}", d.display()))?,
        )),
        (None, Some(i), Some(l)) => {
            Ok(Some(load_idx_dataset(i, l, window, offset).with_context(|| {
                format!("loading {} / {}", i.display(), l.display())
            })?))
        }
        (None, None, None) => Ok(None),
        (Some(_), _, _) => bail!("give either --{which}-data or --{which}-images/--{which}-labels"),
        _ => bail!("--{which}-images and --{which}-labels must be given together"),
    }
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, settings } => {
            let settings = config::resolve(&settings, config.as_deref())?;
            thread_pool(settings.workers)?.install(|| cmd_train(&settings))
        }
        Command::Eval { model, data, workers } => thread_pool(workers)?.install(|| cmd_eval(&model, &data)),
        Command::Export {
            model,
            k,
            out,
            format,
            data,
            workers,
        } => thread_pool(workers)?.install(|| cmd_export(&model, k, &out, format, &data)),
        Command::GenXor {
            n_train,
            n_test,
            noise,
            seed,
            out,
        } => cmd_gen_xor(n_train, n_test, noise, seed, &out),
        Command::Binarize {
            images,
            labels,
            window,
            offset,
            out,
        } => {
            let data = load_idx_dataset(&images, &labels, window, offset)?;
            export_dataset_binary(&data, &out)?;
            eprintln!("wrote {} images to {}", data.len(), out.display());
            Ok(())
        }
    }
}

fn cmd_train(s: &TrainSettings) -> Result<()> {
    let params = s.hyperparams()?;
    let window = s.window.unwrap_or(DEFAULT_WINDOW);
    let offset = s.offset.unwrap_or(DEFAULT_OFFSET);
    let (train, test) = match s.dataset.as_deref() {
        Some("xor") => {
            if s.train_data.is_some() || s.train_images.is_some() {
                bail!("--dataset xor cannot be combined with training files");
            }
            let xor = generate_noisy_xor(2500, 10_000, 0.4, params.rng_seed)?;
            (xor.train, Some(xor.test))
        }
        Some(other) => bail!("unknown dataset {other:?}; the only built-in dataset is `xor`"),
        None => {
            let train = load_split(
                s.train_data.as_deref(),
                s.train_images.as_deref(),
                s.train_labels.as_deref(),
                window,
                offset,
                "train",
            )?
            .context("no training data: give --dataset xor, --train-data or --train-images/--train-labels")?;
            let test = load_split(
                s.test_data.as_deref(),
                s.test_images.as_deref(),
                s.test_labels.as_deref(),
                window,
                offset,
                "test",
            )?;
            (train, test)
        }
    };
    let train = match s.train_limit {
        Some(n) => train.take(n),
        None => train,
    };
    let classes = train
        .class_count()
        .max(test.as_ref().map_or(0, Dataset::class_count))
        .max(2);

    let model_path = s.model.clone().unwrap_or_else(|| PathBuf::from("model.ctmm"));
    let mut metrics = match &s.metrics {
        Some(path) => Some(open_metrics(path)?),
        None => None,
    };

    let mut rng = seeded_rng(params.rng_seed);
    let epochs = params.epochs;
    let mut model = MulticlassModel::new(params, classes, train.dims(), &mut rng)?;
    eprintln!(
        "training on {} examples, {} classes, {} patches of {} literals",
        train.len(),
        classes,
        model.layout().patch_count(),
        model.layout().literals()
    );
    let options = FitOptions {
        test: test.as_ref(),
        track_train_accuracy: s.skip_train_acc != Some(true),
    };
    let mut io_error = None;
    model.fit_with(&train, epochs, &mut rng, options, |r| {
        let fmt = |a: Option<f64>| a.map_or(String::new(), |v| format!("{v:.6}"));
        let line = format!(
            "{},{},{},{:.3}",
            r.epoch,
            fmt(r.train_accuracy),
            fmt(r.test_accuracy),
            r.seconds
        );
        eprintln!("epoch {line}");
        if let Some(m) = metrics.as_mut() {
            if let Err(e) = writeln!(m, "{line}").and_then(|_| m.flush()) {
                io_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e).context("writing metrics");
    }
    save_model(&model, &model_path).with_context(|| format!("writing {}", model_path.display()))?;
    eprintln!("model written to {}", model_path.display());
    Ok(())
}

fn open_metrics(path: &Path) -> Result<BufWriter<fs::File>> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut w = BufWriter::new(file);
    if fresh {
        writeln!(w, "{METRICS_HEADER}")?;
    }
    Ok(w)
}

fn cmd_eval(model_path: &Path, data: &TestData) -> Result<()> {
    let model = load_model(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let test = data
        .load()?
        .context("no evaluation data: give --test-data or --test-images/--test-labels")?;
    let eval = model.evaluate(&test)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "accuracy {:.6} ({} examples)", eval.accuracy, eval.total())?;
    writeln!(out, "confusion (rows: true class, columns: predicted)")?;
    for (c, row) in eval.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>6}")).collect();
        writeln!(out, "{c:>3} {}", cells.join(""))?;
    }
    Ok(())
}

fn cmd_export(model_path: &Path, k: usize, out: &Path, format: ReportFormat, data: &TestData) -> Result<()> {
    let model = load_model(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let data = data.load()?;
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let rows = match format {
        ReportFormat::Csv => export_report(&model, k, data.as_ref(), BufWriter::new(file))?,
        ReportFormat::Text => export_text_report(&model, k, data.as_ref(), BufWriter::new(file))?,
    };
    eprintln!("wrote {rows} clauses to {}", out.display());
    Ok(())
}

fn cmd_gen_xor(n_train: usize, n_test: usize, noise: f64, seed: u64, out: &Path) -> Result<()> {
    let xor = generate_noisy_xor(n_train, n_test, noise, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    export_dataset_binary(&xor.train, out.join("train.ctmd"))?;
    export_dataset_binary(&xor.test, out.join("test.ctmd"))?;
    eprintln!(
        "wrote {} train and {} test examples to {}",
        xor.train.len(),
        xor.test.len(),
        out.display()
    );
    Ok(())
}
