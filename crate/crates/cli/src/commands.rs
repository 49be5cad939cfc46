use std::error::Error;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use emp_core::bounds::{
    epsilon_bound_asymptotic, epsilon_bound_lemma, sweep, BoundReport, LossBoundInputs, SweepRow,
};
use emp_core::image::{encode_png, prune_image_global, prune_image_patch_with, read_png, Centering};
use emp_core::io::{pack_mask, parse_partition_json, parse_scores, DecisionRecord, PartitionedRecord};
use emp_core::net::{self, checkpoint, PruneExperimentResult, PruneMode, TrainConfig};
use emp_core::simplex::{certify_tight_bound, verify_proposition, CertificationCell};
use emp_core::{combine_min, emp_decide, emp_decide_partitioned};
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::{csv_bytes, db, digest, emit, json_bytes, write_atomic, RunReport, BUILD, VERSION};
use crate::svg::{Plot, Series, Style};
use crate::{
    BoundsArgs, CenteringArg, Common, DatasetArg, DemoNetArgs, Format, ImageMode, NetMode, PruneImageArgs,
    PruneScoresArgs, VerifyArgs,
};

type CmdResult = Result<u8, Box<dyn Error>>;

pub const EXIT_VERIFICATION_FAILED: u8 = 3;

fn read_input(path: &Path) -> std::io::Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        fs::read(path)
    }
}

fn text(bytes: &[u8], path: &Path) -> Result<String, Box<dyn Error>> {
    String::from_utf8(bytes.to_vec()).map_err(|_| format!("{} is not UTF-8 text", path.display()).into())
}

struct Finished<'a> {
    subcommand: &'static str,
    common: &'a Common,
    default_format: Format,
    input_digest: Option<String>,
    parameters: Value,
    outputs: Value,
    csv: Vec<u8>,
    started: Instant,
}

impl Finished<'_> {
    fn emit(self) -> Result<(), Box<dyn Error>> {
        let bytes = match self.common.format.unwrap_or(self.default_format) {
            Format::Csv => self.csv,
            Format::Json => json_bytes(&RunReport {
                subcommand: self.subcommand,
                version: VERSION,
                build: BUILD,
                input_digest: self.input_digest,
                parameters: self.parameters,
                outputs: self.outputs,
                wall_time_ms: self.started.elapsed().as_secs_f64() * 1e3,
            })?,
        };
        emit(self.common.report.as_deref(), &bytes)?;
        Ok(())
    }
}

fn write_svg(path: Option<&PathBuf>, plot: impl FnOnce() -> Plot) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, plot().render().as_bytes()),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ScoreRow {
    index: usize,
    score: f64,
    group: usize,
    kept: bool,
}

pub fn prune_scores(a: PruneScoresArgs) -> CmdResult {
    let started = Instant::now();
    let raw = read_input(&a.input)?;
    let mut scores = parse_scores(&text(&raw, &a.input)?)?;
    let mut inputs = vec![raw];
    if let Some(p) = &a.min_with {
        let other_raw = read_input(p)?;
        let other = parse_scores(&text(&other_raw, p)?)?;
        scores = combine_min(&scores, &other)?;
        inputs.push(other_raw);
    }
    let partition = match &a.partition {
        Some(p) => {
            let raw = read_input(p)?;
            let part = parse_partition_json(&text(&raw, p)?, scores.len())?;
            inputs.push(raw);
            Some(part)
        }
        None => None,
    };

    let (outputs, rows) = match &partition {
        None => {
            let d = emp_decide(&scores, a.beta)?;
            let rows = scores
                .values()
                .iter()
                .zip(&d.mask)
                .enumerate()
                .map(|(index, (&score, &kept))| ScoreRow {
                    index,
                    score,
                    group: 0,
                    kept,
                })
                .collect::<Vec<_>>();
            (serde_json::to_value(DecisionRecord::from(&d))?, rows)
        }
        Some(p) => {
            let d = emp_decide_partitioned(&scores, p, a.beta)?;
            let mask = d.global_mask();
            let mut group_of = vec![0; scores.len()];
            for (g, idx) in p.groups().iter().enumerate() {
                for &i in idx {
                    group_of[i] = g;
                }
            }
            let rows = (0..scores.len())
                .map(|index| ScoreRow {
                    index,
                    score: scores.values()[index],
                    group: group_of[index],
                    kept: mask[index],
                })
                .collect::<Vec<_>>();
            (serde_json::to_value(PartitionedRecord::from(&d))?, rows)
        }
    };
    Finished {
        subcommand: "prune-scores",
        common: &a.common,
        default_format: Format::Json,
        input_digest: Some(digest(inputs.iter().map(Vec::as_slice))),
        parameters: json!({
            "input": a.input,
            "beta": a.beta,
            "partition": a.partition,
            "min_with": a.min_with,
        }),
        outputs,
        csv: csv_bytes(&rows)?,
        started,
    }
    .emit()?;
    Ok(0)
}

pub fn bounds(a: BoundsArgs) -> CmdResult {
    let started = Instant::now();
    let loss = match a.rho {
        Some(rho) => {
            let inp = LossBoundInputs {
                rho,
                n: a.n,
                theta_l1: a.theta_l1,
                trace_h: a.trace_h,
                delta_theta_sq: a.delta_sq,
            };
            let lemma = if a.delta_sq.is_some() { Some(epsilon_bound_lemma(&inp)?) } else { None };
            Some(json!({
                "inputs": inp,
                "lemma_bound": lemma,
                "asymptotic_bound": epsilon_bound_asymptotic(&inp)?,
            }))
        }
        None => None,
    };
    let parameters = json!({
        "n": a.n,
        "nu": a.nu,
        "sweep": a.sweep,
        "observed": a.observed,
        "rho": a.rho,
        "trace_h": a.trace_h,
        "theta_l1": a.theta_l1,
        "delta_sq": a.delta_sq,
    });

    let (outputs, csv, default_format) = if a.sweep {
        let rows = sweep(a.n)?;
        write_svg(a.svg.as_ref(), || sweep_plot(a.n, &rows))?;
        (json!({ "rows": rows, "loss": loss }), csv_bytes(&rows)?, Format::Csv)
    } else if let Some(nu) = a.nu {
        let r = BoundReport::new(a.n, nu, a.observed)?;
        let csv = csv_bytes(std::slice::from_ref(&r))?;
        (json!({ "bound": r, "loss": loss }), csv, Format::Json)
    } else if let Some(l) = loss {
        #[derive(Serialize)]
        struct LossRow {
            rho: f64,
            n: usize,
            lemma_bound: Option<f64>,
            asymptotic_bound: f64,
        }
        let row = LossRow {
            rho: a.rho.unwrap_or_default(),
            n: a.n,
            lemma_bound: l["lemma_bound"].as_f64(),
            asymptotic_bound: l["asymptotic_bound"].as_f64().unwrap_or(f64::NAN),
        };
        (json!({ "loss": l }), csv_bytes(&[row])?, Format::Json)
    } else {
        return Err("bounds needs --nu, --sweep or --rho".into());
    };
    Finished {
        subcommand: "bounds",
        common: &a.common,
        default_format,
        input_digest: None,
        parameters,
        outputs,
        csv,
        started,
    }
    .emit()?;
    Ok(0)
}

fn sweep_plot(n: usize, rows: &[SweepRow]) -> Plot {
    let series = |name: &str, f: fn(&SweepRow) -> f64| Series {
        name: name.into(),
        points: rows.iter().map(|r| (r.nu as f64, f(r))).collect(),
        style: Style::Line,
    };
    Plot {
        title: format!("Retained-mass bounds, n = {n}"),
        x_label: "N_eff".into(),
        y_label: "s_eff lower bound".into(),
        series: vec![series("tight", |r| r.tight), series("trivial", |r| r.trivial)],
    }
}

#[derive(Serialize)]
struct VerifyCsvRow {
    nu: usize,
    closed_form: f64,
    brute_force_min: f64,
    phi_at_extremal: f64,
    feasible_samples: usize,
    certified_samples: Option<usize>,
    min_slack: Option<f64>,
    passed: bool,
}

pub fn verify_geometry(a: VerifyArgs) -> CmdResult {
    let started = Instant::now();
    let nus: Vec<usize> = if a.nu.is_empty() { (2..a.n.max(2)).collect() } else { a.nu.clone() };
    let report = verify_proposition(a.n, &nus, a.budget, a.seed)?;
    let cells: Vec<CertificationCell> = if a.certify > 0 {
        nus.iter()
            .map(|&nu| certify_tight_bound(a.n, nu, a.certify, a.seed ^ nu as u64))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let violations: usize = cells.iter().map(|c| c.violations).sum();
    let failures = report.failures();
    let rows: Vec<VerifyCsvRow> = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| VerifyCsvRow {
            nu: r.nu,
            closed_form: r.closed_form,
            brute_force_min: r.brute_force_min,
            phi_at_extremal: r.phi_at_extremal,
            feasible_samples: r.feasible_samples,
            certified_samples: cells.get(i).map(|c| c.samples),
            min_slack: cells.get(i).map(|c| c.min_slack),
            passed: r.passed() && cells.get(i).is_none_or(|c| c.violations == 0),
        })
        .collect();
    write_svg(a.svg.as_ref(), || Plot {
        title: format!("Brute-force minimum vs closed form, n = {}", a.n),
        x_label: "nu".into(),
        y_label: "min phi_nu over A_nu".into(),
        series: vec![
            Series {
                name: "closed form".into(),
                points: report.rows.iter().map(|r| (r.nu as f64, r.closed_form)).collect(),
                style: Style::Line,
            },
            Series {
                name: "brute force".into(),
                points: report.rows.iter().map(|r| (r.nu as f64, r.brute_force_min)).collect(),
                style: Style::Scatter,
            },
        ],
    })?;
    Finished {
        subcommand: "verify-geometry",
        common: &a.common,
        default_format: Format::Json,
        input_digest: None,
        parameters: json!({
            "n": a.n,
            "nu": nus,
            "budget": a.budget,
            "seed": a.seed,
            "certify": a.certify,
        }),
        outputs: json!({
            "failures": failures,
            "certification_violations": violations,
            "report": report,
            "certification": cells,
        }),
        csv: csv_bytes(&rows)?,
        started,
    }
    .emit()?;
    Ok(if failures == 0 && violations == 0 { 0 } else { EXIT_VERIFICATION_FAILED })
}

#[derive(Serialize)]
struct ImageCsvRow {
    channel: String,
    kept: usize,
    dropped: usize,
    sparsity: f64,
    ssim: f64,
    psnr_db: String,
}

fn db_text(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.to_string()
    }
}

pub fn prune_image(a: PruneImageArgs) -> CmdResult {
    let started = Instant::now();
    let raw = read_input(&a.input)?;
    let img = read_png(&a.input)?;
    let centering = match a.centering {
        CenteringArg::Tile => Centering::Tile,
        CenteringArg::Channel => Centering::Channel,
    };
    let out = match a.mode {
        ImageMode::Global => prune_image_global(&img, a.beta)?,
        ImageMode::Patch => prune_image_patch_with(&img, a.beta, a.patch, centering)?,
    };
    if let Some(p) = &a.output {
        let mut png = Vec::new();
        encode_png(&out.pruned, &mut png)?;
        write_atomic(p, &png)?;
    }
    let mut rows: Vec<ImageCsvRow> = out
        .channels
        .iter()
        .map(|c| ImageCsvRow {
            channel: ["r", "g", "b"][c.channel].into(),
            kept: c.kept,
            dropped: c.dropped,
            sparsity: c.sparsity,
            ssim: c.ssim,
            psnr_db: db_text(c.psnr_db),
        })
        .collect();
    let kept: usize = out.channels.iter().map(|c| c.kept).sum();
    let dropped: usize = out.channels.iter().map(|c| c.dropped).sum();
    rows.push(ImageCsvRow {
        channel: "all".into(),
        kept,
        dropped,
        sparsity: out.sparsity,
        ssim: out.ssim,
        psnr_db: db_text(out.psnr_db),
    });
    Finished {
        subcommand: "prune-image",
        common: &a.common,
        default_format: Format::Json,
        input_digest: Some(digest([raw.as_slice()])),
        parameters: json!({
            "input": a.input,
            "output": a.output,
            "mode": format!("{:?}", a.mode).to_lowercase(),
            "patch": (a.mode == ImageMode::Patch).then_some(a.patch),
            "centering": (a.mode == ImageMode::Patch).then_some(centering),
            "beta": a.beta,
        }),
        outputs: json!({
            "width": img.width(),
            "height": img.height(),
            "sparsity": out.sparsity,
            "ssim": out.ssim,
            "psnr_db": db(out.psnr_db),
            "channels": out.channels,
            "masks": out.masks.iter().map(|m| pack_mask(m)).collect::<Vec<_>>(),
        }),
        csv: csv_bytes(&rows)?,
        started,
    }
    .emit()?;
    Ok(0)
}

pub fn demo_net(a: DemoNetArgs) -> CmdResult {
    let started = Instant::now();
    let mut inputs: Vec<Vec<u8>> = Vec::new();
    let (data, default_arch) = match a.dataset {
        DatasetArg::Blobs => (net::blobs(a.samples, 2, 2, a.noise.unwrap_or(1.0), a.seed)?, vec![2, 16, 2]),
        DatasetArg::Moons => (net::two_moons(a.samples, a.noise.unwrap_or(0.15), a.seed)?, vec![2, 16, 2]),
        DatasetArg::Digits => (net::digits(a.samples, a.noise.unwrap_or(0.3), a.seed)?, vec![64, 32, 10]),
        DatasetArg::Idx => {
            let (Some(images), Some(labels)) = (&a.idx_images, &a.idx_labels) else {
                return Err("--dataset idx needs --idx-images and --idx-labels".into());
            };
            inputs.push(fs::read(images)?);
            inputs.push(fs::read(labels)?);
            let d = net::load_idx(images, labels, a.seed)?;
            let arch = vec![d.dim(), 32, d.classes()];
            (d, arch)
        }
    };
    let arch = if a.arch.is_empty() { default_arch } else { a.arch.clone() };
    let init = net::DenseNet::new(&arch, a.seed)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let trained = net::train(&init, &data, &cfg)?;
    let model = &trained.net;
    if let Some(stem) = &a.checkpoint {
        checkpoint::save(model, stem)?;
    }
    let trace = if a.trace_probes > 0 {
        Some(net::estimate_trace_h(model, &data, a.trace_probes, a.seed)?)
    } else {
        None
    };
    let modes: &[PruneMode] = match a.mode {
        NetMode::Global => &[PruneMode::Global],
        NetMode::Block => &[PruneMode::Block],
        NetMode::Both => &[PruneMode::Global, PruneMode::Block],
    };
    let rows = net::beta_sweep(model, &data, &a.betas, modes, trace.as_ref().map(|t| t.mean))?;
    let eval = if data.test().is_empty() { data.train() } else { data.test() };
    write_svg(a.svg.as_ref(), || sweep_accuracy_plot(&rows, modes))?;
    Finished {
        subcommand: "demo-net",
        common: &a.common,
        default_format: Format::Json,
        input_digest: (!inputs.is_empty()).then(|| digest(inputs.iter().map(Vec::as_slice))),
        parameters: json!({
            "dataset": format!("{:?}", a.dataset).to_lowercase(),
            "samples": a.samples,
            "noise": a.noise,
            "arch": arch,
            "train": cfg,
            "betas": a.betas,
            "modes": modes,
            "trace_probes": a.trace_probes,
        }),
        outputs: json!({
            "samples": { "train": data.train().len(), "test": data.test().len() },
            "train_loss": trained.train_loss,
            "test_loss": trained.test_loss,
            "test_accuracy": model.accuracy(&data, eval)?,
            "weights": model.weight_count(),
            "trace_h": trace,
            "rows": rows,
        }),
        csv: csv_bytes(&rows)?,
        started,
    }
    .emit()?;
    Ok(0)
}

fn sweep_accuracy_plot(rows: &[PruneExperimentResult], modes: &[PruneMode]) -> Plot {
    Plot {
        title: "Pruned test accuracy vs beta".into(),
        x_label: "beta".into(),
        y_label: "accuracy".into(),
        series: modes
            .iter()
            .map(|&m| Series {
                name: m.to_string(),
                points: rows.iter().filter(|r| r.mode == m).map(|r| (r.beta, r.pruned_acc)).collect(),
                style: Style::Line,
            })
            .collect(),
    }
}
