use crate::gradcore::Embedding;
use crate::latentworld::{make_dataset, Binarization, MotifSite, Split, World, WorldConfig};
use crate::predictor::{
    auroc, avg_input_gradient_norm, fgsm_perturb, train_predictor, SmoothingConfig, TrainHyperparams, TrainedPredictor,
};

fn toy_world() -> World {
    World::new(WorldConfig {
        length: 4,
        dim: 6,
        min_separation: 3.0,
        motif: vec![MotifSite { position: 1, residue: 'W', weight: 1.0 }],
        epistatic_pairs: vec![],
        ..WorldConfig::default()
    })
    .unwrap()
}

fn small_hp() -> TrainHyperparams {
    TrainHyperparams { hidden: vec![16], max_epochs: 15, ..TrainHyperparams::default() }
}

fn test_auroc(p: &TrainedPredictor, ds: &crate::latentworld::LabeledDataset) -> f64 {
    let items: Vec<_> = ds.split(Split::Test).collect();
    let scores: Vec<f64> = items.iter().map(|it| p.predict_logit(&it.embedding)).collect();
    let labels: Vec<u8> = items.iter().map(|it| it.label).collect();
    auroc(&scores, &labels).unwrap()
}

#[test]
fn separable_toy_is_learned_with_and_without_smoothing() {
    let ds = make_dataset(&toy_world(), 300, Binarization::Otsu, 1).unwrap();
    for smoothing in [SmoothingConfig::none(), SmoothingConfig::all_on()] {
        let p = train_predictor(&ds, &smoothing, &small_hp(), 3).unwrap();
        let a = test_auroc(&p, &ds);
        assert!(a > 0.95, "{} auroc {a}", smoothing.tag());
        assert!(p.report().best_epoch < p.report().epochs.len());
    }
}

#[test]
fn training_is_deterministic_given_the_seed() {
    let ds = make_dataset(&toy_world(), 200, Binarization::Otsu, 2).unwrap();
    let hp = TrainHyperparams { max_epochs: 3, ..small_hp() };
    let a = train_predictor(&ds, &SmoothingConfig::all_on(), &hp, 9).unwrap();
    let b = train_predictor(&ds, &SmoothingConfig::all_on(), &hp, 9).unwrap();
    let c = train_predictor(&ds, &SmoothingConfig::all_on(), &hp, 10).unwrap();
    assert!(a == b);
    assert!(a != c);
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let ds = make_dataset(&toy_world(), 200, Binarization::Otsu, 4).unwrap();
    let hp = TrainHyperparams { max_epochs: 2, ..small_hp() };
    let p = train_predictor(&ds, &SmoothingConfig::all_on(), &hp, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    p.save(&path).unwrap();
    let q = TrainedPredictor::load(&path).unwrap();
    assert!(p == q);
    for it in ds.split(Split::Test) {
        assert_eq!(p.predict_logit(&it.embedding).to_bits(), q.predict_logit(&it.embedding).to_bits());
    }
    std::fs::write(&path, b"not a checkpoint").unwrap();
    assert!(TrainedPredictor::load(&path).is_err());
}

#[test]
fn fgsm_moves_every_coordinate_by_epsilon_toward_the_label() {
    let ds = make_dataset(&toy_world(), 200, Binarization::Otsu, 5).unwrap();
    let hp = TrainHyperparams { max_epochs: 3, ..small_hp() };
    let p = train_predictor(&ds, &SmoothingConfig::none(), &hp, 1).unwrap();
    let z = &ds.items[0].embedding;
    let eps = 0.01;
    let up = fgsm_perturb(&p, z, eps, 1);
    let down = fgsm_perturb(&p, z, eps, 0);
    let (_, g) = p.logit_gradient(z);
    for ((&a, &b), &gi) in up.as_slice().iter().zip(z.as_slice()).zip(g.as_slice()) {
        if gi != 0.0 {
            assert!(((a - b) - eps * gi.signum()).abs() < 1e-12);
        }
    }
    assert!(p.predict_logit(&up) > p.predict_logit(z));
    assert!(p.predict_logit(&down) < p.predict_logit(z));
    assert_eq!(&fgsm_perturb(&p, z, 0.0, 1), z);
}

#[test]
fn gradient_norm_is_positive_and_needs_input() {
    let ds = make_dataset(&toy_world(), 100, Binarization::Otsu, 6).unwrap();
    let hp = TrainHyperparams { max_epochs: 1, ..small_hp() };
    let p = train_predictor(&ds, &SmoothingConfig::none(), &hp, 1).unwrap();
    let zs: Vec<&Embedding> = ds.items.iter().map(|it| &it.embedding).collect();
    assert!(avg_input_gradient_norm(&p, &zs).unwrap() > 0.0);
    assert!(avg_input_gradient_norm(&p, &[]).is_err());
}

#[test]
fn auroc_matches_pair_counting() {
    let scores = [0.1, 0.4, 0.35, 0.8, 0.4];
    let labels = [0, 0, 1, 1, 1];
    // Positive/negative pairs: (0.35 vs 0.1, 0.4) = 1 + 0, (0.8) = 2, (0.4 tie with 0.4) = 1 + 0.5.
    assert!((auroc(&scores, &labels).unwrap() - 4.5 / 6.0).abs() < 1e-12);
    assert!(auroc(&[0.1, 0.2], &[1, 1]).is_err());
}
