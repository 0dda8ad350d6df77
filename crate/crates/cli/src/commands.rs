use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clotseg::classifier::evaluate;
use clotseg::image_io::{encode_png, encode_png_gray8, source_id_for};
use clotseg::phantom::{corpus_for_kinds, PhantomKind};
use clotseg::report::{CaseReport, Report, Timings};
use clotseg::{BinaryMask, CriterionThresholds, FilterParams, Verdict};
use clotseg_service::{CatalogError, StudyCatalog};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_IO, EXIT_OK, EXIT_VALIDATION};
use crate::inputs::{json_arg, load_image, load_roi, read, write};
use crate::{Command, PipelineOpts};

/// Batch input: image and ROI paths relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub cases: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: String,
    pub roi: String,
    /// Reference label; when absent, the ROI sidecar's label (if any) is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Verdict>,
}

pub fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Classify {
            image,
            roi,
            pipeline,
            out,
            no_timings,
        } => {
            let (params, th) = pipeline_config(&pipeline)?;
            let case = classify_case(&image, &roi, &params, &th, !no_timings)?;
            emit(&Report::from_cases(vec![case]), out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Batch {
            manifest,
            pipeline,
            out,
            no_timings,
            jobs,
        } => {
            let (params, th) = pipeline_config(&pipeline)?;
            let (report, worst) =
                batch_report(&manifest, &params, &th, !no_timings, jobs.map(usize::from))?;
            emit(&report, out.as_deref())?;
            Ok(worst)
        }
        Command::Phantom {
            kind,
            count,
            seed,
            noise,
            manifest,
            out,
        } => {
            write_phantoms(&kind.kinds(), count as usize, seed, noise, manifest, &out)?;
            Ok(EXIT_OK)
        }
        Command::Render {
            image,
            roi,
            pipeline,
            out,
        } => {
            let (params, th) = pipeline_config(&pipeline)?;
            for path in render(&image, &roi, &params, &th, &out)? {
                say(&path.display().to_string());
            }
            Ok(EXIT_OK)
        }
        Command::Serve { bind, studies } => serve(&bind, &studies).map(|()| EXIT_OK),
    }
}

fn pipeline_config(opts: &PipelineOpts) -> Result<(FilterParams, CriterionThresholds), CliError> {
    let params: FilterParams = json_arg(opts.params.as_deref(), "invalid_params")?;
    params
        .validate()
        .map_err(|e| CliError::validation("invalid_params", e.to_string()))?;
    let th: CriterionThresholds = json_arg(opts.thresholds.as_deref(), "invalid_thresholds")?;
    th.validate()?;
    Ok((params, th))
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    match out {
        Some(path) => write(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe downstream is not an error worth reporting
            let _ = stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush());
            Ok(())
        }
    }
}

/// Prints one line to stdout, ignoring a closed pipe.
fn say(line: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}").and_then(|()| stdout.flush());
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Classifies one image/ROI pair into a report case.
pub fn classify_case(
    image: &Path,
    roi: &Path,
    params: &FilterParams,
    th: &CriterionThresholds,
    timings: bool,
) -> Result<CaseReport, CliError> {
    let t0 = Instant::now();
    let slice = load_image(image)?;
    let (pair, _) = load_roi(roi)?;
    let load_ms = millis(t0);
    let t1 = Instant::now();
    let assessment = clotseg::classify(&slice, &pair.lumen, &pair.clot, params, th)?;
    let classify_ms = millis(t1);
    log::info!("{}: {}", slice.source_id, assessment.verdict);
    Ok(CaseReport {
        source_id: slice.source_id,
        image: None,
        expected: None,
        assessment: Some(assessment),
        error: None,
        timings: timings.then_some(Timings {
            load_ms,
            classify_ms,
        }),
    })
}

/// Runs every manifest case (in parallel when `jobs` allows) and returns the
/// report in manifest order plus the exit code: 0, or the most severe failure.
pub fn batch_report(
    manifest_path: &Path,
    params: &FilterParams,
    th: &CriterionThresholds,
    timings: bool,
    jobs: Option<usize>,
) -> Result<(Report, i32), CliError> {
    let manifest: Manifest = serde_json::from_slice(&read(manifest_path)?)
        .map_err(|e| CliError::validation("invalid_manifest", e.to_string()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let run_one = |entry: &ManifestEntry| -> (CaseReport, i32) {
        let image = base.join(&entry.image);
        let roi = base.join(&entry.roi);
        let expected = match entry.expected {
            Some(v) => Some(v),
            None => load_roi(&roi).ok().and_then(|(_, e)| e),
        };
        match classify_case(&image, &roi, params, th, timings) {
            Ok(mut case) => {
                case.image = Some(entry.image.clone());
                case.expected = expected;
                (case, EXIT_OK)
            }
            Err(e) => {
                log::warn!("{}: {e}", entry.image);
                let case = CaseReport {
                    source_id: source_id_for(&image),
                    image: Some(entry.image.clone()),
                    expected,
                    assessment: None,
                    error: Some(e.body()),
                    timings: None,
                };
                (case, e.exit_code())
            }
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(CaseReport, i32)> =
        pool.install(|| manifest.cases.par_iter().map(run_one).collect());
    let worst = results
        .iter()
        .map(|(_, code)| *code)
        .max_by_key(|&code| match code {
            EXIT_IO => 2,
            EXIT_VALIDATION => 1,
            _ => 0,
        })
        .unwrap_or(EXIT_OK);
    let cases = results.into_iter().map(|(c, _)| c).collect();
    Ok((Report::from_cases(cases), worst))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_phantoms(
    kinds: &[PhantomKind],
    count: usize,
    seed: u64,
    noise: f64,
    with_manifest: bool,
    out: &Path,
) -> Result<(), CliError> {
    let corpus = corpus_for_kinds(kinds, count, seed, noise)
        .map_err(|e| CliError::validation("invalid_phantom", e.to_string()))?;
    create_dir(out)?;
    let mut entries = Vec::with_capacity(corpus.len());
    for case in &corpus {
        let image = format!("{}.pgm", case.name);
        let sidecar = format!("{}.json", case.name);
        write(&out.join(&image), &case.phantom.to_pgm())?;
        let mut json =
            serde_json::to_string_pretty(&case.phantom.sidecar()).expect("sidecar serializes");
        json.push('\n');
        write(&out.join(&sidecar), json.as_bytes())?;
        say(&out.join(&image).display().to_string());
        say(&out.join(&sidecar).display().to_string());
        entries.push(ManifestEntry {
            image,
            roi: sidecar,
            expected: Some(case.phantom.expected),
        });
    }
    if with_manifest {
        let path = out.join("manifest.json");
        let mut json = serde_json::to_string_pretty(&Manifest { cases: entries })
            .expect("manifest serializes");
        json.push('\n');
        write(&path, json.as_bytes())?;
        say(&path.display().to_string());
    }
    Ok(())
}

fn mask_png(mask: &BinaryMask) -> Result<Vec<u8>, CliError> {
    let (w, h) = mask.dimensions();
    encode_png_gray8(w, h, &mask.to_u8()).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes the 9 debug renderings and returns their paths.
pub fn render(
    image: &Path,
    roi: &Path,
    params: &FilterParams,
    th: &CriterionThresholds,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let slice = load_image(image)?;
    let (pair, _) = load_roi(roi)?;
    let eval = evaluate(&slice, &pair.lumen, &pair.clot, params, th)?;
    create_dir(out)?;
    let stem = &slice.source_id;
    let mut files: Vec<(String, Vec<u8>)> = Vec::with_capacity(9);
    for (i, (name, img)) in eval.filtered.members().into_iter().enumerate() {
        let png = encode_png(img).map_err(|e| CliError::Io(e.to_string()))?;
        files.push((format!("{stem}_{i}_{name}.png"), png));
    }
    let masks = [
        ("mask_clot", &eval.masks.clot),
        ("mask_lumen", &eval.masks.lumen),
        ("mask_lumen_only", &eval.masks.lumen_only),
        ("clot_binary_closed", &eval.clot_binary),
    ];
    for (i, (name, mask)) in masks.into_iter().enumerate() {
        files.push((format!("{stem}_{}_{name}.png", i + 5), mask_png(mask)?));
    }
    let mut paths = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out.join(name);
        write(&path, &bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

fn serve(bind: &str, studies: &Path) -> Result<(), CliError> {
    let addr: SocketAddr = bind
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid --bind {bind:?}: {e}")))?;
    let catalog = StudyCatalog::load_dir(studies).map_err(|e| match e {
        CatalogError::Io { .. } => CliError::Io(e.to_string()),
        CatalogError::Image { .. } => CliError::validation("invalid_image", e.to_string()),
        CatalogError::DuplicateId(_) => CliError::validation("duplicate_study_id", e.to_string()),
    })?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Io(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::Io(e.to_string()))?;
        say(&format!("listening on http://{local}"));
        clotseg_service::serve(listener, Arc::new(catalog))
            .await
            .map_err(|e| CliError::Io(e.to_string()))
    })
}
