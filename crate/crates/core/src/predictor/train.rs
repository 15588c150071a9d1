use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::config::{SmoothingConfig, TrainHyperparams};
use super::metrics::auroc;
use super::model::{
    avg_input_gradient_norm, fgsm_from_gradient, EpochRecord, InputLayout, TrainedPredictor, TrainingReport,
};
use crate::error::{Error, Result};
use crate::gradcore::{logistic, softplus, Activation, AdamState, Embedding, Mlp, Network};
use crate::latentworld::{decode, DatasetItem, LabeledDataset, Split};
use crate::rng::{self, domain};

const INIT: u64 = 0;
const SHUFFLE: u64 = 1;
const DROPOUT: u64 = 2;
const PROBES: u64 = 3;

/// Mean binary cross-entropy on logits and its derivative per logit.
fn bce(logits: &[f64], labels: &[f64]) -> (f64, Vec<f64>) {
    let n = logits.len() as f64;
    let value = logits.iter().zip(labels).map(|(&f, &y)| softplus(f, 1.0) - y * f).sum::<f64>() / n;
    let grad = logits.iter().zip(labels).map(|(&f, &y)| (logistic(f) - y) / n).collect();
    (value, grad)
}

struct Evaluation {
    auroc: f64,
    loss: f64,
}

fn evaluate(net: &Network, x: &Array2<f64>, labels: &[u8]) -> Result<Evaluation> {
    let logits = net.logits(x).to_vec();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    Ok(Evaluation { auroc: auroc(&logits, labels)?, loss: bce(&logits, &y).0 })
}

fn stack(items: &[&DatasetItem], layout: &InputLayout) -> Array2<f64> {
    let mut x = Array2::zeros((items.len(), layout.flat_dim()));
    for (b, it) in items.iter().enumerate() {
        x.row_mut(b).assign(&Array1::from(it.embedding.as_slice().to_vec()));
    }
    zero_padding(&mut x, layout);
    x
}

fn zero_padding(x: &mut Array2<f64>, layout: &InputLayout) {
    let d = layout.cols;
    for (i, &pad) in layout.pad_mask.iter().enumerate() {
        if pad {
            x.columns_mut().into_iter().skip(i * d).take(d).for_each(|mut c| c.fill(0.0));
        }
    }
}

/// Trains a predictor on the dataset's train split.
///
/// Each mini-batch minimizes mean BCE plus, when enabled, `jacobian_lambda`
/// times the per-sample mean Hutchinson estimate of the squared input
/// gradient norm. With FGSM augmentation the batch is extended by one signed
/// gradient step per sample toward the opposite class, kept only if it still
/// decodes to the original sequence. Early stopping watches validation AUROC
/// (validation loss breaks ties); the best epoch's parameters are restored.
pub fn train_predictor(
    ds: &LabeledDataset,
    smoothing: &SmoothingConfig,
    hp: &TrainHyperparams,
    seed: u64,
) -> Result<TrainedPredictor> {
    smoothing.validate()?;
    hp.validate()?;
    let train: Vec<&DatasetItem> = ds.split(Split::Train).collect();
    let val: Vec<&DatasetItem> = ds.split(Split::Val).collect();
    let test: Vec<&DatasetItem> = ds.split(Split::Test).collect();
    for (name, part) in [("train", &train), ("val", &val)] {
        if !part.iter().any(|it| it.label == 0) || !part.iter().any(|it| it.label == 1) {
            return Err(Error::Training(format!("{name} split must contain both labels")));
        }
    }
    let first = &train[0].embedding;
    let layout = InputLayout::unpadded(first.rows(), first.cols());
    let codebook = &ds.world.codebook;

    let activation =
        if smoothing.softplus { Activation::Softplus { beta: hp.softplus_beta } } else { Activation::Relu };
    let mut mlp = Mlp::new(
        layout.flat_dim(),
        &hp.hidden,
        activation,
        smoothing.spectral_norm,
        &mut rng::substream(seed, &[domain::TRAIN, INIT]),
    );
    let mut adam = AdamState::new(hp.learning_rate);
    let val_x = stack(&val, &layout);
    let val_y: Vec<u8> = val.iter().map(|it| it.label).collect();

    let mut report = TrainingReport { seed, ..TrainingReport::default() };
    let mut best: Option<(Mlp, f64, f64)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..hp.max_epochs {
        order.shuffle(&mut rng::substream(seed, &[domain::TRAIN, SHUFFLE, epoch as u64]));
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (bi, idx) in order.chunks(hp.batch_size).enumerate() {
            let items: Vec<&DatasetItem> = idx.iter().map(|&i| train[i]).collect();
            let keys = [epoch as u64, bi as u64];
            let loss =
                train_batch(&mut mlp, &mut adam, &items, &layout, smoothing, hp, seed, keys, codebook, &mut report)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, reason: format!("non-finite batch loss {loss}") });
            }
            loss_sum += loss;
            batches += 1;
        }
        if !mlp.is_finite() {
            return Err(Error::Divergence { epoch, reason: "non-finite parameters".into() });
        }
        let ev = evaluate(&mlp.network(), &val_x, &val_y)?;
        report.epochs.push(EpochRecord { epoch, train_loss: loss_sum / batches as f64, val_auroc: ev.auroc });
        let improved = match &best {
            None => true,
            Some((_, a, l)) => ev.auroc > *a || (ev.auroc == *a && ev.loss < *l),
        };
        if improved {
            best = Some((mlp.clone(), ev.auroc, ev.loss));
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hp.patience {
                break;
            }
        }
    }
    let (mut mlp, val_auroc, _) = best.expect("at least one epoch ran");
    if mlp.spectral {
        mlp.power_iterate(hp.refine_iters);
    }
    report.val_auroc = val_auroc;
    let mut predictor = TrainedPredictor::new(mlp, layout, smoothing.clone(), hp.clone(), report)?;
    if test.iter().any(|it| it.label == 0) && test.iter().any(|it| it.label == 1) {
        let x = stack(&test, predictor.layout());
        let y: Vec<u8> = test.iter().map(|it| it.label).collect();
        predictor.report_mut().test_auroc = evaluate(predictor.network(), &x, &y)?.auroc;
    }
    if !test.is_empty() {
        let zs: Vec<&Embedding> = test.iter().map(|it| &it.embedding).collect();
        predictor.report_mut().avg_grad_norm = avg_input_gradient_norm(&predictor, &zs)?;
    }
    Ok(predictor)
}

#[allow(clippy::too_many_arguments)]
fn train_batch(
    mlp: &mut Mlp,
    adam: &mut AdamState,
    items: &[&DatasetItem],
    layout: &InputLayout,
    smoothing: &SmoothingConfig,
    hp: &TrainHyperparams,
    seed: u64,
    keys: [u64; 2],
    codebook: &crate::latentworld::Codebook,
    report: &mut TrainingReport,
) -> Result<f64> {
    if mlp.spectral {
        mlp.power_iterate(1);
    }
    let (net, scales) = mlp.network_with_scales();
    let x_orig = stack(items, layout);
    let mut rows: Vec<Array1<f64>> = x_orig.outer_iter().map(|r| r.to_owned()).collect();
    let mut labels: Vec<f64> = items.iter().map(|it| f64::from(it.label)).collect();

    if smoothing.fgsm_augment {
        let (f, mut g) = net.input_gradients(x_orig.clone());
        zero_padding(&mut g, layout);
        for (b, it) in items.iter().enumerate() {
            let toward = 1.0 - f64::from(it.label);
            let grad_row = g.row(b).to_vec();
            let adv = fgsm_from_gradient(&it.embedding, &grad_row, logistic(f[b]) - toward, smoothing.fgsm_epsilon);
            if decode(&adv, codebook) == it.sequence {
                rows.push(Array1::from(adv.as_slice().to_vec()));
                labels.push(f64::from(it.label));
                report.fgsm_accepted += 1;
            } else {
                report.fgsm_rejected += 1;
            }
        }
    }

    let n = rows.len();
    let mut x = Array2::zeros((n, layout.flat_dim()));
    for (b, r) in rows.iter().enumerate() {
        x.row_mut(b).assign(r);
    }
    zero_padding(&mut x, layout);

    let masks = (hp.dropout > 0.0).then(|| {
        let mut r = rng::substream(seed, &[domain::TRAIN, DROPOUT, keys[0], keys[1]]);
        let keep = 1.0 / (1.0 - hp.dropout);
        hp.hidden
            .iter()
            .map(|&h| Array2::from_shape_fn((n, h), |_| if r.random::<f64>() < hp.dropout { 0.0 } else { keep }))
            .collect::<Vec<_>>()
    });
    let cache = net.forward(x, masks.as_deref());
    let (mut loss, dlogits) = bce(cache.logits.as_slice().expect("contiguous"), &labels);

    let mut tangents = Vec::new();
    if smoothing.jacobian_on() {
        let mut r = rng::substream(seed, &[domain::TRAIN, PROBES, keys[0], keys[1]]);
        let scale = smoothing.jacobian_lambda / (n * smoothing.jacobian_probes) as f64;
        for _ in 0..smoothing.jacobian_probes {
            let mut v = Array2::from_shape_fn((n, layout.flat_dim()), |_| if r.random::<bool>() { 1.0 } else { -1.0 });
            zero_padding(&mut v, layout);
            let tc = net.tangent(&cache, v);
            loss += scale * tc.out.iter().map(|j| j * j).sum::<f64>();
            let dout = tc.out.mapv(|j| 2.0 * scale * j);
            tangents.push((tc, dout));
        }
    }
    let refs: Vec<_> = tangents.iter().map(|(tc, d)| (tc, d)).collect();
    let (eff, _) = net.backward(&cache, &Array1::from(dlogits), &refs, false);
    let grads = mlp.chain_grads(eff, &scales);
    if !grads.is_finite() {
        return Ok(f64::NAN);
    }
    adam.step(&mut mlp.param_slices_mut(), &grads.slices());
    Ok(loss)
}
