use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::{DatasetParams, FeatureMap, SynthDataset};
use super::model::{Gradient, LinearModel, Target};
use crate::booster::{boost, BoostPolicy};
use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;
use crate::tensor::{argmax_labels, one_hot, ProbMap};
use crate::voter::VicinitySpec;

// ChaCha stream ids for the independent random sequences of one run.
const STREAM_MODEL_A: u64 = 1;
const STREAM_MODEL_B: u64 = 2;
const STREAM_LABELED: u64 = 3;
const STREAM_UNLABELED: u64 = 4;

/// Trainer settings. Defaults follow the VOC recipe where one exists
/// (λ = 1.5, momentum 0.9, weight decay 1e-4, 5×5 vicinity). The warm-up stands in for
/// the pretrained start of a real segmentation network.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lambda: f64,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub iters: usize,
    /// Leading iterations trained on labeled images only.
    pub warmup: usize,
    /// Images per batch, drawn separately from the labeled and unlabeled pools.
    pub batch_size: usize,
    pub vicinity: VicinitySpec,
    pub policy: BoostPolicy,
    /// Re-harden boosted pseudo labels with argmax before the loss.
    pub harden: bool,
    pub eval_interval: usize,
    pub validation_images: usize,
    pub seeds: Vec<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lambda: 1.5,
            lr: 0.4,
            momentum: 0.9,
            weight_decay: 1e-4,
            iters: 200,
            warmup: 100,
            batch_size: 2,
            vicinity: VicinitySpec::default(),
            policy: BoostPolicy::Ruv,
            harden: false,
            eval_interval: 50,
            validation_images: 8,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!(
                "lambda {} must be finite and non-negative",
                self.lambda
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum)
            || self.weight_decay.is_nan()
            || self.weight_decay < 0.0
        {
            return bad("momentum must be in [0, 1) and weight decay non-negative".into());
        }
        if self.iters == 0 || self.batch_size == 0 || self.eval_interval == 0 {
            return bad("iters, batch size and eval interval must be at least 1".into());
        }
        if self.validation_images == 0 {
            return bad("at least one validation image is required".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub iter: usize,
    pub miou: f64,
}

/// Result of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPair {
    pub model_a: LinearModel,
    pub model_b: LinearModel,
    /// Validation mIoU of the first model at every evaluation.
    pub history: Vec<EvalPoint>,
    /// Total loss of both models at every iteration.
    pub losses: Vec<(f64, f64)>,
}

impl TrainedPair {
    pub fn final_miou(&self) -> f64 {
        self.history.last().map_or(0.0, |p| p.miou)
    }
}

/// Held-out images for a dataset: same generator, seed + 1.
pub fn validation_set(data: &SynthDataset, images: usize) -> Result<SynthDataset> {
    SynthDataset::generate_with(
        data.seed.wrapping_add(1),
        &DatasetParams {
            images,
            ..data.params.clone()
        },
    )
}

/// mIoU of `model` over every image of `set`.
pub fn evaluate(model: &LinearModel, set: &SynthDataset) -> Result<f64> {
    let mut cm = ConfusionMatrix::new(set.classes());
    for (x, y) in set.images.iter().zip(&set.labels) {
        cm.accumulate(y, &argmax_labels(&model.forward(x)?)?)?;
    }
    Ok(cm.miou())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn pseudo_target(pred: &ProbMap, config: &SimConfig) -> Result<Vec<f32>> {
    let boosted = boost(pred, &config.vicinity, config.policy)?;
    if config.harden {
        Ok(one_hot(&argmax_labels(&boosted.to_prob_map())?, pred.classes())?.to_f32())
    } else {
        Ok(boosted.into_data())
    }
}

fn mean_grad<'a>(
    model: &LinearModel,
    items: impl ExactSizeIterator<Item = (&'a FeatureMap, Target<'a>)>,
) -> Result<(f64, Gradient)> {
    let n = items.len() as f64;
    let mut grad = Gradient::zeros(model.classes(), model.features());
    let mut loss = 0.0;
    for (x, target) in items {
        let (l, g) = model.loss_and_gradient(x, target)?;
        loss += l / n;
        grad.add_scaled(&g, 1.0 / n);
    }
    Ok((loss, grad))
}

fn run(data: &SynthDataset, config: &SimConfig, cross_supervision: bool) -> Result<TrainedPair> {
    config.validate()?;
    if data.labeled.is_empty() {
        return Err(Error::InvalidArgument(
            "the dataset has no labeled images".into(),
        ));
    }
    let features = data
        .images
        .first()
        .map(FeatureMap::features)
        .ok_or_else(|| Error::InvalidArgument("the dataset is empty".into()))?;
    let classes = data.classes();
    let validation = validation_set(data, config.validation_images)?;

    let mut model_a = LinearModel::init(
        classes,
        features,
        stream_rng(data.seed, STREAM_MODEL_A).random(),
    );
    let mut model_b = LinearModel::init(
        classes,
        features,
        stream_rng(data.seed, STREAM_MODEL_B).random(),
    );
    let mut labeled_rng = stream_rng(data.seed, STREAM_LABELED);
    let mut unlabeled_rng = stream_rng(data.seed, STREAM_UNLABELED);
    let use_unlabeled = cross_supervision && !data.unlabeled.is_empty();

    let mut history = Vec::new();
    let mut losses = Vec::with_capacity(config.iters);
    for iter in 1..=config.iters {
        let labeled: Vec<usize> = (0..config.batch_size)
            .map(|_| data.labeled[labeled_rng.random_range(0..data.labeled.len())])
            .collect();
        let labeled_items = || {
            labeled
                .iter()
                .map(|&i| (&data.images[i], Target::Hard(&data.labels[i])))
        };
        let (mut loss_a, mut grad_a) = mean_grad(&model_a, labeled_items())?;
        let (mut loss_b, mut grad_b) = mean_grad(&model_b, labeled_items())?;

        if use_unlabeled && iter > config.warmup {
            let batch: Vec<usize> = (0..config.batch_size)
                .map(|_| data.unlabeled[unlabeled_rng.random_range(0..data.unlabeled.len())])
                .collect();
            // Each model learns from the boosted pseudo label of the other.
            let mut for_a = Vec::with_capacity(batch.len());
            let mut for_b = Vec::with_capacity(batch.len());
            for &i in &batch {
                let x = &data.images[i];
                for_a.push(pseudo_target(&model_b.forward(x)?, config)?);
                for_b.push(pseudo_target(&model_a.forward(x)?, config)?);
            }
            let (ua, ga) = mean_grad(
                &model_a,
                batch
                    .iter()
                    .zip(&for_a)
                    .map(|(&i, t)| (&data.images[i], Target::Soft(t))),
            )?;
            let (ub, gb) = mean_grad(
                &model_b,
                batch
                    .iter()
                    .zip(&for_b)
                    .map(|(&i, t)| (&data.images[i], Target::Soft(t))),
            )?;
            loss_a += config.lambda * ua;
            loss_b += config.lambda * ub;
            grad_a.add_scaled(&ga, config.lambda);
            grad_b.add_scaled(&gb, config.lambda);
        }

        for loss in [loss_a, loss_b] {
            if !loss.is_finite() {
                return Err(Error::Diverged { iter, loss });
            }
        }
        losses.push((loss_a, loss_b));
        model_a.sgd_step(&grad_a, config.lr, config.momentum, config.weight_decay);
        model_b.sgd_step(&grad_b, config.lr, config.momentum, config.weight_decay);

        if iter % config.eval_interval == 0 || iter == config.iters {
            history.push(EvalPoint {
                iter,
                miou: evaluate(&model_a, &validation)?,
            });
        }
    }
    Ok(TrainedPair {
        model_a,
        model_b,
        history,
        losses,
    })
}

/// Cross pseudo supervision: for each model,
/// `L = mean_L CE(p, y) + λ · mean_U CE(p_self, boost(p_other))`.
pub fn train_cps(data: &SynthDataset, config: &SimConfig) -> Result<TrainedPair> {
    run(data, config, true)
}

/// Both models trained on the labeled pool only, with the same sampling and initialization as
/// [`train_cps`].
pub fn train_supervised(data: &SynthDataset, config: &SimConfig) -> Result<TrainedPair> {
    run(data, config, false)
}

/// One ablation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub policy: BoostPolicy,
    /// `None` for policies the vicinity does not affect.
    pub vicinity: Option<VicinitySpec>,
    pub seed: u64,
    pub iter: usize,
    pub miou: f64,
}

/// Trains every policy (and every vicinity where it matters) on every seed in
/// `config.seeds`. With `full_history` each evaluation yields a row, otherwise only the last.
pub fn ablate(
    params: &DatasetParams,
    config: &SimConfig,
    policies: &[BoostPolicy],
    vicinities: &[VicinitySpec],
    full_history: bool,
) -> Result<Vec<AblationRow>> {
    if vicinities.is_empty() && policies.iter().any(BoostPolicy::uses_vicinity) {
        return Err(Error::InvalidArgument(
            "ruv ablation needs at least one vicinity".into(),
        ));
    }
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let data = SynthDataset::generate_with(seed, params)?;
        for &policy in policies {
            let arms: Vec<Option<VicinitySpec>> = if policy.uses_vicinity() {
                vicinities.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for vicinity in arms {
                let run_config = SimConfig {
                    policy,
                    vicinity: vicinity.unwrap_or(config.vicinity),
                    ..config.clone()
                };
                let trained = train_cps(&data, &run_config)?;
                let points: &[EvalPoint] = if full_history {
                    &trained.history
                } else {
                    &trained.history[trained.history.len().saturating_sub(1)..]
                };
                rows.extend(points.iter().map(|p| AblationRow {
                    policy,
                    vicinity,
                    seed,
                    iter: p.iter,
                    miou: p.miou,
                }));
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "policy,vicinity,seed,iter,miou";

/// CSV with header `policy,vicinity,seed,iter,miou`; `-` marks an unused vicinity.
pub fn rows_to_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let vicinity = row
            .vicinity
            .map_or_else(|| "-".to_string(), |v| v.to_string());
        writeln!(
            out,
            "{},{},{},{},{:.6}",
            row.policy, vicinity, row.seed, row.iter, row.miou
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Mean final mIoU per `(policy, vicinity)` arm, in first-seen order.
pub fn mean_by_arm(rows: &[AblationRow]) -> Vec<(BoostPolicy, Option<VicinitySpec>, f64)> {
    let mut arms: Vec<(BoostPolicy, Option<VicinitySpec>, f64, usize)> = Vec::new();
    for row in rows {
        match arms
            .iter_mut()
            .find(|a| a.0 == row.policy && a.1 == row.vicinity)
        {
            Some(arm) => {
                arm.2 += row.miou;
                arm.3 += 1;
            }
            None => arms.push((row.policy, row.vicinity, row.miou, 1)),
        }
    }
    arms.into_iter()
        .map(|(p, v, sum, n)| (p, v, sum / n as f64))
        .collect()
}
