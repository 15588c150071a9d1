use crate::campaign::{ablation_cells, AblationConfig, CampaignConfig, Component};
use crate::Error;

#[test]
fn empty_file_is_the_default_config() {
    let cfg = CampaignConfig::from_toml("").unwrap();
    assert_eq!(cfg, CampaignConfig::default());
    assert_eq!(cfg.mccop_config().k, 5);
    assert_eq!(cfg.mccop_config().target, 1);
}

#[test]
fn config_survives_a_toml_round_trip() {
    let mut cfg = CampaignConfig { seeds: vec![4, 9], ..CampaignConfig::default() };
    cfg.mccop.alpha = 0.0;
    cfg.campaign.max_samples = Some(3);
    let back = CampaignConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn unknown_and_invalid_fields_are_config_errors() {
    for text in [
        "bogus = 1",
        "[mccop]\nkay = 5",
        "seeds = []",
        "[mccop]\ntau = 1.5",
        "[campaign]\nsource_label = 2",
        "[world]\nlength = 0",
    ] {
        assert!(matches!(CampaignConfig::from_toml(text), Err(Error::Config(_))), "{text}");
    }
}

#[test]
fn source_label_sets_every_target() {
    let cfg = CampaignConfig::from_toml("[campaign]\nsource_label = 1\n[mccop]\ntarget = 1").unwrap();
    assert_eq!(cfg.mccop_config().target, -1);
    assert_eq!(cfg.gd_config().target, -1);
    assert_eq!(cfg.hill_climb_config().target, -1);
    assert_eq!(cfg.ga_config().target, -1);
}

#[test]
fn default_grid_has_one_all_off_cell() {
    let cfg = CampaignConfig::default();
    let cells = ablation_cells(&cfg).unwrap();
    assert_eq!(cells.len(), 64);
    assert_eq!(cells.iter().filter(|c| c.is_all_off()).count(), 1);
    let tags: std::collections::BTreeSet<String> = cells.iter().map(|c| c.smoothing.tag()).collect();
    assert_eq!(tags.len(), 16);
}

#[test]
fn oversized_grids_are_refused() {
    let mut cfg = CampaignConfig {
        ablation: AblationConfig { k_values: vec![0, 3, 5], ..AblationConfig::default() },
        ..CampaignConfig::default()
    };
    assert!(matches!(ablation_cells(&cfg), Err(Error::Config(_))));
    cfg.ablation.max_cells = 96;
    assert_eq!(ablation_cells(&cfg).unwrap().len(), 96);
    cfg.ablation =
        AblationConfig { components: vec![Component::Softplus], projection: vec![], ..AblationConfig::default() };
    assert!(ablation_cells(&cfg).is_err());
}
