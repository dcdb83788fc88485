use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use ubm_core::booster::boost_traced;
use ubm_core::bounds::{
    gap_bound, kl_gaussian_product, risk_upper_bound, BoundInstance, GaussianPosterior, Matrix,
};
use ubm_core::sim::{ablate, rows_to_csv, DatasetParams, SimConfig};
use ubm_core::tenfile::{map_tensor, plane_tensor};
use ubm_core::{
    adaptive_weights, argmax_labels, confidence, one_hot, read_tensor, vote_integral, vote_naive,
    write_tensor, BoostReport, ConfusionMatrix, LabelMap, ProbMap, Tensor, TensorData,
    VicinitySpec,
};

use crate::args::{
    BoostArgs, BoundsArgs, Command, ConfArgs, EvalArgs, ExportPgmArgs, SimulateArgs, VoteArgs,
    WindowArgs,
};
use crate::pgm::encode_pgm;
use crate::CliError;

/// Row-sum tolerance for probability map inputs.
const NORMALIZED_TOLERANCE: f64 = 1e-4;

pub(crate) fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Boost(a) => cmd_boost(a, stdout),
        Command::Conf(a) => cmd_conf(a),
        Command::Vote(a) => cmd_vote(a),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Bounds(a) => cmd_bounds(a, stdout),
        Command::ExportPgm(a) => cmd_export_pgm(a),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn load_tensor(path: &Path) -> Result<Tensor, CliError> {
    read_tensor(&read_bytes(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: ubm_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_prob(path: &Path) -> Result<ProbMap, CliError> {
    let tensor = load_tensor(path)?;
    let pred = with_path(path, ProbMap::try_from(&tensor))?;
    with_path(path, pred.check_normalized(NORMALIZED_TOLERANCE))?;
    Ok(pred)
}

/// A u16 label map as is, or the argmax of an f32 probability map with its class count.
fn load_labels(path: &Path) -> Result<(LabelMap, Option<usize>), CliError> {
    let tensor = load_tensor(path)?;
    match tensor.data() {
        TensorData::F32(_) => {
            let pred = with_path(path, ProbMap::try_from(&tensor))?;
            with_path(path, pred.check_normalized(NORMALIZED_TOLERANCE))?;
            Ok((with_path(path, argmax_labels(&pred))?, Some(pred.classes())))
        }
        _ => Ok((with_path(path, LabelMap::try_from(&tensor))?, None)),
    }
}

fn class_count(
    explicit: Option<usize>,
    implied: &[Option<usize>],
    maps: &[&LabelMap],
) -> Result<usize, CliError> {
    if let Some(k) = explicit {
        if k == 0 {
            return Err(CliError::Usage("--classes must be at least 1".into()));
        }
        return Ok(k);
    }
    let from_maps = maps
        .iter()
        .filter_map(|m| m.max_label())
        .map(|l| usize::from(l) + 1)
        .max();
    implied
        .iter()
        .flatten()
        .copied()
        .chain(from_maps)
        .max()
        .ok_or_else(|| CliError::Data("no labeled pixels; pass --classes".into()))
}

fn vicinity(w: &WindowArgs) -> Result<VicinitySpec, CliError> {
    VicinitySpec::new(w.vicinity.height, w.vicinity.width, w.border)
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => write_bytes(path, text.as_bytes()),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write output: {e}"))),
    }
}

fn cmd_boost(a: BoostArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let v = vicinity(&a.window)?;
    let pred = load_prob(&a.input)?;
    let trace = boost_traced(&pred, &v, a.policy)?;
    let tensor = if a.harden {
        Tensor::from(&argmax_labels(&trace.boosted.to_prob_map())?)
    } else {
        map_tensor(
            pred.height(),
            pred.width(),
            pred.classes(),
            trace.boosted.data().to_vec(),
        )?
    };
    write_bytes(&a.out, &write_tensor(&tensor))?;
    let report = BoostReport::from_trace(&trace)?;
    emit(a.report.as_deref(), &report.to_csv(), stdout)
}

fn cmd_conf(a: ConfArgs) -> Result<(), CliError> {
    let pred = load_prob(&a.input)?;
    let conf = confidence(&pred)?;
    let plane = plane_tensor(
        pred.height(),
        pred.width(),
        conf.iter().map(|&c| c as f32).collect(),
    )?;
    write_bytes(&a.out, &write_tensor(&plane))?;
    if let Some(path) = &a.weights {
        let w = plane_tensor(pred.height(), pred.width(), adaptive_weights(&conf)?)?;
        write_bytes(path, &write_tensor(&w))?;
    }
    Ok(())
}

fn cmd_vote(a: VoteArgs) -> Result<(), CliError> {
    let v = vicinity(&a.window)?;
    let (labels, implied) = load_labels(&a.input)?;
    let classes = class_count(a.classes, &[implied], &[&labels])?;
    let p_oh = with_path(&a.input, one_hot(&labels, classes))?;
    let votes = if a.fast {
        vote_integral(&p_oh, &v)?
    } else {
        vote_naive(&p_oh, &v)?
    };
    let tensor = map_tensor(
        votes.height(),
        votes.width(),
        votes.classes(),
        votes.into_data(),
    )?;
    write_bytes(&a.out, &write_tensor(&tensor))
}

fn cmd_eval(a: EvalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let truth_tensor = load_tensor(&a.truth)?;
    let truth = with_path(&a.truth, LabelMap::try_from(&truth_tensor))?;
    let (pred, implied) = load_labels(&a.pred)?;
    let classes = class_count(a.classes, &[implied], &[&truth, &pred])?;
    let cm = ConfusionMatrix::from_labels(classes, &truth, &pred)?;
    let mut out = String::from("class,iou\n");
    for (class, iou) in cm.per_class_iou().into_iter().enumerate() {
        if let Some(iou) = iou {
            writeln!(out, "{class},{iou:.6}").expect("writing to a String cannot fail");
        }
    }
    writeln!(out, "mean,{:.6}", cm.miou()).expect("writing to a String cannot fail");
    emit(a.out.as_deref(), &out, stdout)
}

fn cmd_simulate(a: SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let usage = |e: ubm_core::Error| CliError::Usage(e.to_string());
    if a.policies.is_empty() || a.seeds.is_empty() {
        return Err(CliError::Usage(
            "at least one policy and one seed are required".into(),
        ));
    }
    let vicinities = a
        .vicinities
        .iter()
        .map(|w| VicinitySpec::new(w.height, w.width, a.border))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let params = DatasetParams {
        images: a.images,
        height: a.size,
        width: a.size,
        classes: a.classes,
        labeled_fraction: a.labeled_fraction,
        noise: a.noise,
        palette_seed: a.palette_seed,
    };
    if a.images < 2
        || a.size == 0
        || a.classes < 2
        || !(0.0..=1.0).contains(&a.labeled_fraction)
        || a.noise.is_nan()
        || a.noise < 0.0
    {
        return Err(CliError::Usage(
            "need at least 2 images, a positive size, 2+ classes, a labeled fraction in [0, 1] and noise ≥ 0".into(),
        ));
    }
    let config = SimConfig {
        lambda: a.lambda,
        lr: a.lr,
        momentum: a.momentum,
        weight_decay: a.weight_decay,
        iters: a.iters,
        warmup: a.warmup,
        batch_size: a.batch_size,
        vicinity: vicinities[0],
        policy: a.policies[0],
        harden: a.harden,
        eval_interval: a.eval_interval,
        validation_images: a.validation_images,
        seeds: a.seeds.clone(),
    };
    config.validate().map_err(usage)?;
    let rows = ablate(&params, &config, &a.policies, &vicinities, a.history)?;
    emit(a.out.as_deref(), &rows_to_csv(&rows), stdout)
}

/// Bound instance as stored on disk; matrices are lists of rows.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    labeled_weights: Vec<Vec<f64>>,
    labeled_input: Vec<f64>,
    unlabeled_weights: Vec<Vec<f64>>,
    unlabeled_input: Vec<f64>,
    offset: Vec<Vec<f64>>,
}

fn matrix(rows: &[Vec<f64>]) -> ubm_core::Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ubm_core::Error::ShapeMismatch(
            "matrix rows differ in length".into(),
        ));
    }
    Matrix::new(rows.len(), cols, rows.concat())
}

fn load_instance(path: &Path) -> Result<BoundInstance, CliError> {
    let bytes = read_bytes(path)?;
    let file: InstanceFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    with_path(
        path,
        (|| {
            Ok(BoundInstance {
                labeled_weights: matrix(&file.labeled_weights)?,
                labeled_input: file.labeled_input,
                unlabeled_weights: matrix(&file.unlabeled_weights)?,
                unlabeled_input: file.unlabeled_input,
                offset: matrix(&file.offset)?,
            })
        })(),
    )
}

fn cmd_bounds(a: BoundsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if a.n == 0 || !(a.delta > 0.0 && a.delta < 1.0) {
        return Err(CliError::Usage(format!(
            "--n must be at least 1 and --delta in (0, 1), got {} and {}",
            a.n, a.delta
        )));
    }
    if let Some(r) = a.risk {
        if !(0.0..=1.0).contains(&r) {
            return Err(CliError::Usage(format!("--risk {r} must lie in [0, 1]")));
        }
    }
    let mut rows: Vec<(&str, String, f64)> = Vec::new();
    let mode = a.mode.to_string();
    if let Some(kl) = a.kl {
        if !(kl.is_finite() && kl >= 0.0) {
            return Err(CliError::Usage(format!(
                "--kl {kl} must be finite and non-negative"
            )));
        }
        rows.push(("kl", "given".into(), kl));
        rows.push(("gap_bound", "given".into(), gap_bound(kl, a.n, a.delta)?));
        if let Some(risk) = a.risk {
            let kl_term = (kl / (2.0 * a.n as f64)).sqrt();
            let confidence_term = gap_bound(0.0, a.n, a.delta)?;
            rows.push(("kl_term", "given".into(), kl_term));
            rows.push(("confidence_term", "given".into(), confidence_term));
            rows.push((
                "risk_bound",
                "given".into(),
                risk + kl_term + confidence_term,
            ));
        }
    } else if let (Some(mu_p), Some(mu_q)) = (a.mu_p, a.mu_q) {
        let usage = |e: ubm_core::Error| CliError::Usage(e.to_string());
        let p = GaussianPosterior::new(mu_p).map_err(usage)?;
        let q = GaussianPosterior::new(mu_q).map_err(usage)?;
        let kl = kl_gaussian_product(&q, &p, a.mode).map_err(usage)?;
        rows.push(("kl", mode.clone(), kl));
        rows.push(("gap_bound", mode.clone(), gap_bound(kl, a.n, a.delta)?));
        if let Some(risk) = a.risk {
            let b = risk_upper_bound(risk, &q, &p, a.n, a.delta, a.mode)?;
            rows.push(("kl_term", mode.clone(), b.kl_term));
            rows.push(("confidence_term", mode.clone(), b.confidence_term));
            rows.push(("risk_bound", mode.clone(), b.total));
        }
    } else if let Some(path) = &a.instance {
        let instance = load_instance(path)?;
        let cmp = with_path(
            path,
            instance.compare(a.risk.unwrap_or(0.0), a.n, a.delta, a.mode),
        )?;
        rows.push(("vanilla_kl", mode.clone(), cmp.vanilla.kl));
        rows.push(("vanilla_risk_bound", mode.clone(), cmp.vanilla.total));
        rows.push(("boosted_kl", mode.clone(), cmp.boosted.kl));
        rows.push(("boosted_risk_bound", mode.clone(), cmp.boosted.total));
    } else {
        return Err(CliError::Usage(
            "one of --kl, --mu-p with --mu-q, or --instance is required".into(),
        ));
    }
    let mut out = String::from("quantity,mode,value\n");
    for (quantity, mode, value) in rows {
        writeln!(out, "{quantity},{mode},{value:.6}").expect("writing to a String cannot fail");
    }
    emit(a.out.as_deref(), &out, stdout)
}

fn cmd_export_pgm(a: ExportPgmArgs) -> Result<(), CliError> {
    let (labels, implied) = load_labels(&a.input)?;
    let classes = class_count(a.classes, &[implied], &[&labels])?;
    let pgm = encode_pgm(&labels, classes, a.palette)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.input.display())))?;
    write_bytes(&a.out, &pgm)
}
