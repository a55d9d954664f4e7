use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::json;

use uhreval::curation::caption::{self, CaptionBackend, EchoBackend, HttpCaptionBackend, HttpCaptionConfig};
use uhreval::curation::{self, ManifestRecord, ShortSideRule};
use uhreval::report::{self, Holistic, MetricReport, ReportSettings, ScoreInput};
use uhreval::{io, stats, wavelet, Error, Tensor};

use crate::{BackendArg, Cli, Command, CompareArgs, CorrelateArgs, CurateAction, FidArgs, ScoreArgs, WaveletArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_io() => 2,
            CliError::Core(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON value serializes")
    );
}

pub fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| usage(format!("cannot start worker pool: {e}")))?;
    log::debug!("using {} worker threads", pool.current_num_threads());
    pool.install(|| match cli.command {
        Command::Score(a) => score(a),
        Command::Compare(a) => compare(a),
        Command::Wavelet(a) => wavelet_cmd(a),
        Command::Curate(a) => curate(a.action),
        Command::Correlate(a) => correlate(a),
        Command::Fid(a) => fid(a),
    })
}

fn is_manifest(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"))
}

/// Resolves `--input` into labelled image files. Directory entries are
/// labelled by file name, manifest entries by their recorded path.
fn collect_inputs(input: &Path) -> Result<Vec<ScoreInput>> {
    if input.is_dir() {
        return Ok(io::list_images(input)?
            .into_iter()
            .map(|file| ScoreInput {
                label: file
                    .file_name()
                    .expect("listed files have names")
                    .to_string_lossy()
                    .into_owned(),
                file,
            })
            .collect());
    }
    if !input.exists() {
        return Err(io_err(input, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    if is_manifest(input) {
        let root = input.parent().unwrap_or(Path::new("."));
        return Ok(curation::read_manifest(input)?
            .into_iter()
            .map(|r| ScoreInput {
                file: root.join(&r.path),
                label: r.path,
            })
            .collect());
    }
    if io::is_image_path(input) {
        return Ok(vec![ScoreInput {
            label: input.to_string_lossy().into_owned(),
            file: input.to_path_buf(),
        }]);
    }
    Err(usage(format!(
        "{}: expected an image directory, a .jsonl manifest or an image file",
        input.display()
    )))
}

fn score(a: ScoreArgs) -> Result<()> {
    let settings = ReportSettings {
        patch_side: a.patch_size,
        gray_levels: a.gray_levels,
        jpeg_quality: a.jpeg_quality,
        subsampling: a.subsampling,
    };
    settings.validate().map_err(|e| usage(e.to_string()))?;
    let inputs = collect_inputs(&a.input)?;
    if inputs.is_empty() {
        return Err(usage(format!("{}: no images to score", a.input.display())));
    }
    log::info!("scoring {} images", inputs.len());
    let entries = report::score_files(&inputs, &settings)?;
    let mut rep = MetricReport::new(settings, entries)?;
    if let Some(h) = &a.holistic {
        rep = rep.with_holistic(Holistic::read(h)?);
    }
    emit(a.out.as_deref(), &rep.to_json())?;
    if let Some(p) = &a.csv {
        let file = fs::File::create(p).map_err(|e| io_err(p, e))?;
        rep.write_csv(file)?;
    }
    if let Some(p) = &a.plot {
        let file = fs::File::create(p).map_err(|e| io_err(p, e))?;
        rep.write_plot_csv(file)?;
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let ra = MetricReport::read(&a.a)?;
    let rb = MetricReport::read(&a.b)?;
    let cmp = report::compare_sets(&ra, &rb).map_err(|e| usage(e.to_string()))?;
    emit(a.out.as_deref(), &cmp.to_json())
}

/// Maps a band's value range affinely onto 0..=255.
fn band_to_png(band: &Tensor, path: &Path) -> Result<(f64, f64)> {
    let (lo, hi) = band
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let (h, w) = (band.height(), band.width());
    let img = uhreval::RgbImage::from_fn(w, h, |x, y| {
        let px = |c| {
            if scale == 0.0 {
                128
            } else {
                ((band.get(c, y, x) - lo) * scale).round() as u8
            }
        };
        [px(0), px(1), px(2)]
    })?;
    io::write_png(path, &img)?;
    Ok((lo, hi))
}

fn wavelet_cmd(a: WaveletArgs) -> Result<()> {
    let img = io::read_rgb(&a.input)?;
    let (w, h) = (img.width() & !1, img.height() & !1);
    if w == 0 || h == 0 {
        return Err(usage(format!("{}: image must be at least 2x2", a.input.display())));
    }
    let x = Tensor::from_fn(3, h, w, |c, y, x| f64::from(img.pixel(x, y)[c]))?;
    let bands = wavelet::dwt(&x)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| io_err(&a.out_dir, e))?;
    let mut summary = serde_json::Map::new();
    for b in wavelet::Subband::ALL {
        let path = a.out_dir.join(format!("{}.png", b.name()));
        let band = bands.band(b);
        let (lo, hi) = band_to_png(band, &path)?;
        summary.insert(
            b.name().into(),
            json!({
                "file": path.display().to_string(),
                "min": report::round_sig(lo),
                "max": report::round_sig(hi),
                "energy": report::round_sig(band.sum_squares()),
            }),
        );
    }
    emit_json(&json!({ "width": w, "height": h, "subbands": summary }));
    Ok(())
}

fn write_records(out: Option<&Path>, records: &[ManifestRecord]) -> Result<()> {
    match out {
        Some(p) => curation::write_manifest_file(p, records)?,
        None => curation::write_manifest(std::io::stdout().lock(), records)?,
    }
    Ok(())
}

fn curate(action: CurateAction) -> Result<()> {
    match action {
        CurateAction::Stats {
            manifest,
            min_short_side,
            rule,
        } => {
            let records = curation::read_manifest(&manifest)?;
            let s = curation::dataset_stats(&records).map_err(|e| usage(e.to_string()))?;
            let mut out = serde_json::to_value(s).expect("stats serialize");
            if let Some(t) = min_short_side {
                let rule = ShortSideRule::from(rule);
                let passing = records.iter().filter(|r| rule.passes(r, t)).count();
                out["min_short_side"] = json!(t);
                out["rule"] = json!(rule);
                out["passing"] = json!(passing);
                out["proportion"] = json!(curation::proportion_above(&records, t, rule)?);
            }
            emit_json(&out);
            Ok(())
        }
        CurateAction::Filter {
            manifest,
            min_short_side,
            rule,
            out,
        } => {
            let records = curation::read_manifest(&manifest)?;
            let kept = curation::filter_short_side_with(&records, min_short_side, rule.into());
            write_records(out.as_deref(), &kept)?;
            eprintln!("kept {} of {} records", kept.len(), records.len());
            Ok(())
        }
        CurateAction::Caption {
            manifest,
            out,
            backend,
            config,
            concurrency,
            overwrite,
        } => {
            let mut records = curation::read_manifest(&manifest)?;
            let backend: Box<dyn CaptionBackend> = match backend {
                BackendArg::Stub => Box::new(EchoBackend),
                BackendArg::Http => {
                    let mut cfg = match &config {
                        Some(p) => HttpCaptionConfig::from_file(p)?,
                        None => HttpCaptionConfig::from_env().map_err(|e| usage(e.to_string()))?,
                    };
                    cfg.image_root = manifest.parent().map(Path::to_path_buf);
                    Box::new(HttpCaptionBackend::new(cfg))
                }
            };
            let results = caption::caption_all(
                &mut records,
                &caption::PromptTemplate::image_caption(),
                backend.as_ref(),
                &caption::RetryPolicy::default(),
                concurrency,
                overwrite,
            );
            write_records(out.as_deref(), &records)?;
            let mut failures = Vec::new();
            let mut done = 0;
            for r in results.into_iter().flatten() {
                match r {
                    Ok(_) => done += 1,
                    Err(e) => failures.push(e),
                }
            }
            eprintln!("captioned {done} records, {} failed", failures.len());
            match failures.into_iter().next() {
                Some(e) => Err(e.into()),
                None => Ok(()),
            }
        }
        CurateAction::Approve {
            manifest,
            path,
            reject,
            out,
        } => {
            let mut records = curation::read_manifest(&manifest)?;
            if curation::set_approval(&mut records, &path, !reject) == 0 {
                return Err(usage(format!("no record with path {path:?}")));
            }
            write_records(Some(out.as_deref().unwrap_or(&manifest)), &records)
        }
    }
}

fn correlate(a: CorrelateArgs) -> Result<()> {
    let rep = MetricReport::read(&a.report)?;
    let values = rep.metric_by_basename(a.metric)?;
    let ratings = stats::read_ratings_csv(&a.ratings)?;
    let mut paired: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    let mut missing = Vec::new();
    for (path, rating) in ratings {
        let name = report::basename(&path);
        match values.get(&name) {
            Some(&m) => {
                if paired.insert(name.clone(), (m, rating)).is_some() {
                    return Err(usage(format!("{name} is rated more than once")));
                }
            }
            None => missing.push(name),
        }
    }
    if !missing.is_empty() {
        return Err(usage(format!("rated images missing from the report: {missing:?}")));
    }
    let (metric, rating): (Vec<f64>, Vec<f64>) = paired.into_values().unzip();
    let series = stats::RatingSeries::new(metric, rating)?;
    emit_json(&json!({
        "metric": a.metric.name(),
        "n": series.len(),
        "srcc": stats::srcc(&series)?,
        "plcc": stats::plcc(&series)?,
    }));
    Ok(())
}

fn fid(a: FidArgs) -> Result<()> {
    let ma = stats::load_moments(&a.features_a)?;
    let mb = stats::load_moments(&a.features_b)?;
    emit_json(&json!({ "fid": stats::fid_from_moments(&ma, &mb)? }));
    Ok(())
}
