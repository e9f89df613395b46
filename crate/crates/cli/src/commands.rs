use std::path::{Path, PathBuf};

use gmse_core::io::{write_atomic, FieldFormat};
use gmse_core::trainkit::TrainLog;
use gmse_core::{
    build_weight_map, gmse, make_dataset, mse, read_field, ssim_global, ssim_windowed, write_field, Dataset, Field,
    GmseParams, LossKind, Schedule, SsimParams, TrainConfig,
};

use crate::manifest::{RunManifest, MANIFEST_NAME};
use crate::{CliError, WeightArgs};

const MIN_SIDE: usize = gmse_core::synthetic::MIN_SIDE;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn params_of(args: WeightArgs) -> Result<GmseParams, CliError> {
    GmseParams::new(args.sigma, args.gamma, args.offset).map_err(|e| usage(e.to_string()))
}

fn read(path: &Path) -> Result<Field, CliError> {
    Ok(read_field(path, FieldFormat::from_path(path))?)
}

/// `value` with 12 significant digits in positional notation.
pub fn format_significant(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn record_params(m: &mut RunManifest, p: &GmseParams) {
    m.param("sigma", p.sigma());
    m.param("gamma", p.gamma());
    m.param("offset", p.offset());
}

pub fn weightmap(input: &Path, args: WeightArgs, out: &Path, pgm: Option<&Path>) -> Result<(), CliError> {
    let params = params_of(args)?;
    let mut m = RunManifest::start();
    record_params(&mut m, &params);
    let field = read(input)?;
    m.input(input)?;
    let map = build_weight_map(&field, &params)?;
    write_field(map.field(), out, FieldFormat::F32Bin)?;
    m.output(out);
    if let Some(p) = pgm {
        write_field(map.field(), p, FieldFormat::Pgm)?;
        m.output(p);
    }
    m.finish(&sidecar(out))
}

pub fn loss(
    real: &Path,
    fake: &Path,
    weighted: bool,
    args: WeightArgs,
    manifest: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut m = RunManifest::start();
    let (r, f) = (read(real)?, read(fake)?);
    m.input(real)?;
    m.input(fake)?;
    let value = if weighted {
        let params = params_of(args)?;
        record_params(&mut m, &params);
        m.param("loss", "gmse");
        gmse(&r, &f, &build_weight_map(&r, &params)?)?
    } else {
        m.param("loss", "mse");
        mse(&r, &f)?
    };
    let text = format_significant(value.get());
    m.param("value", &text);
    println!("{text}");
    m.finish(&manifest.unwrap_or_else(|| PathBuf::from("gmse-loss.manifest.json")))
}

pub fn ssim(
    a: &Path,
    b: &Path,
    dynamic_range: f64,
    k1: f64,
    k2: f64,
    windowed: bool,
    manifest: Option<PathBuf>,
) -> Result<(), CliError> {
    let params = SsimParams::new(dynamic_range, k1, k2).map_err(|e| usage(e.to_string()))?;
    let mut m = RunManifest::start();
    m.param("L", dynamic_range);
    m.param("k1", k1);
    m.param("k2", k2);
    m.param("form", if windowed { "windowed" } else { "global" });
    let (x, y) = (read(a)?, read(b)?);
    m.input(a)?;
    m.input(b)?;
    let value = if windowed {
        ssim_windowed(&x, &y, &params)?
    } else {
        ssim_global(&x, &y, &params)?
    };
    let text = format_significant(value);
    m.param("value", &text);
    println!("{text}");
    m.finish(&manifest.unwrap_or_else(|| PathBuf::from("gmse-ssim.manifest.json")))
}

fn parse_size(size: &str) -> Result<(usize, usize), CliError> {
    let bad = || usage(format!("size must look like HxW, got {size:?}"));
    let (h, w) = size.split_once(['x', 'X']).ok_or_else(bad)?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    if h < MIN_SIDE || w < MIN_SIDE {
        return Err(usage(format!("fields must be at least {MIN_SIDE}x{MIN_SIDE}, got {h}x{w}")));
    }
    Ok((h, w))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Pipeline(format!("thread pool: {e}")))
}

pub fn synth(n: usize, size: &str, seed: u64, out: &Path, threads: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let (h, w) = parse_size(size)?;
    let mut m = RunManifest::start();
    m.seeds.push(seed);
    m.param("n", n);
    m.param("size", format!("{h}x{w}"));
    let dataset = pool(threads)?.install(|| make_dataset(n, h, w, seed))?;
    dataset.write_dir(out)?;
    m.output(&out.join("manifest.csv"));
    for i in 0..n {
        m.output(&out.join(format!("field_{i:05}.f32bin")));
    }
    m.finish(&out.join(MANIFEST_NAME))
}

pub struct TrainArgs {
    pub data: PathBuf,
    pub loss: String,
    pub schedule: Option<PathBuf>,
    pub params: WeightArgs,
    pub epochs: usize,
    pub seed: u64,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub out: PathBuf,
    pub threads: usize,
}

fn read_schedule(path: &Path) -> Result<Schedule, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.parse().map_err(|e: gmse_core::Error| usage(format!("{}: {e}", path.display())))
}

fn checkpoint_table(log: &TrainLog) -> String {
    let mut s = String::from("epoch,ssim\n");
    for (epoch, v) in &log.ssim {
        s.push_str(&format!("{epoch},{v}\n"));
    }
    s
}

fn write_text(m: &mut RunManifest, path: PathBuf, text: &str) -> Result<(), CliError> {
    write_atomic(&path, text.as_bytes())?;
    m.output(&path);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let loss = match args.loss.as_str() {
        "mse" => LossKind::Mse,
        "gmse" => LossKind::Gmse(params_of(args.params)?),
        "dgmse" => match &args.schedule {
            Some(p) => LossKind::Dgmse(read_schedule(p)?),
            None => LossKind::dgmse_default(),
        },
        other => return Err(usage(format!("unknown loss {other:?}; expected mse, gmse or dgmse"))),
    };
    if args.schedule.is_some() && !matches!(loss, LossKind::Dgmse(_)) {
        return Err(usage("--schedule only applies to --loss dgmse"));
    }
    let mut config = TrainConfig::new(loss, args.epochs, args.seed);
    if let Some(lr) = args.lr {
        config.lr = lr;
    }
    if let Some(b) = args.batch_size {
        config.batch_size = b;
    }
    config.threads = args.threads;
    config.validate().map_err(|e| usage(e.to_string()))?;

    let mut m = RunManifest::start();
    m.seeds.push(args.seed);
    m.param("loss", &config.loss);
    m.param("epochs", config.epochs);
    m.param("lr", config.lr);
    m.param("batch_size", config.batch_size);
    let dataset = Dataset::read_dir(&args.data, args.seed)?;
    m.input(&args.data)?;
    if let Some(p) = &args.schedule {
        m.input(p)?;
    }
    let log = gmse_core::train(&dataset, &config)?;
    create_dir(&args.out)?;
    write_text(&mut m, args.out.join("train_log.csv"), &log.to_csv())?;
    write_text(&mut m, args.out.join("checkpoints.csv"), &checkpoint_table(&log))?;
    m.finish(&args.out.join(MANIFEST_NAME))
}

/// Parses a comma-separated run list into labelled losses.
pub fn parse_runs(spec: &str) -> Result<Vec<(String, LossKind, Option<PathBuf>)>, CliError> {
    let mut runs = Vec::new();
    for item in spec.split(',').map(str::trim) {
        let parts: Vec<&str> = item.split(':').collect();
        let run = match parts.as_slice() {
            ["mse"] => (LossKind::Mse, None),
            ["gmse"] => (LossKind::gmse_baseline(), None),
            ["dgmse"] => (LossKind::dgmse_default(), None),
            ["gmse", s, g, c] => {
                let num = |v: &str| v.parse::<f64>().map_err(|_| usage(format!("bad number {v:?} in run {item:?}")));
                let params = GmseParams::new(num(s)?, num(g)?, num(c)?).map_err(|e| usage(format!("run {item:?}: {e}")))?;
                (LossKind::Gmse(params), None)
            }
            ["dgmse", file] => {
                let path = PathBuf::from(file);
                (LossKind::Dgmse(read_schedule(&path)?), Some(path))
            }
            _ => return Err(usage(format!("malformed run {item:?}"))),
        };
        runs.push((item.to_string(), run.0, run.1));
    }
    if runs.len() < 2 {
        return Err(usage("--runs needs at least two runs to compare"));
    }
    Ok(runs)
}

pub fn compare(
    data: &Path,
    spec: &str,
    epochs: usize,
    seed: u64,
    lr: Option<f64>,
    out: &Path,
    threads: usize,
) -> Result<(), CliError> {
    let runs = parse_runs(spec)?;
    let mut m = RunManifest::start();
    m.seeds.push(seed);
    m.param("runs", spec);
    m.param("epochs", epochs);
    let mut configs = Vec::new();
    for (label, loss, schedule) in runs {
        if let Some(p) = schedule {
            m.input(&p)?;
        }
        let mut c = TrainConfig::new(loss, epochs, seed).with_label(label);
        if let Some(lr) = lr {
            c.lr = lr;
        }
        c.threads = threads;
        c.validate().map_err(|e| usage(e.to_string()))?;
        configs.push(c);
    }
    m.param("lr", configs[0].lr);
    let dataset = Dataset::read_dir(data, seed)?;
    m.input(data)?;
    let report = gmse_core::compare(&dataset, &configs)?;
    create_dir(out)?;
    write_text(&mut m, out.join("comparison.csv"), &report.to_csv())?;
    write_text(&mut m, out.join("curves.csv"), &report.curves_csv())?;
    write_text(&mut m, out.join("loss_curves.svg"), &report.to_svg())?;
    m.finish(&out.join(MANIFEST_NAME))
}
