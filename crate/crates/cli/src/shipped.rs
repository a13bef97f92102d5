//! Experiment configs shipped with the crate, and their expansion into
//! the individual runs the suites perform.

use crate::config::ExperimentConfig;

/// Seeds of the random-smooth preservation runs.
pub const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

pub const SHIPPED: [(&str, &str); 12] = [
    ("flat", include_str!("../configs/flat.toml")),
    ("conformal", include_str!("../configs/conformal.toml")),
    ("random-smooth-2d", include_str!("../configs/random-smooth-2d.toml")),
    ("random-smooth-3d", include_str!("../configs/random-smooth-3d.toml")),
    ("kink", include_str!("../configs/kink.toml")),
    ("pullback", include_str!("../configs/pullback.toml")),
    ("pair-first", include_str!("../configs/pair-first.toml")),
    ("pair-second", include_str!("../configs/pair-second.toml")),
    ("control-first", include_str!("../configs/control-first.toml")),
    ("control-second", include_str!("../configs/control-second.toml")),
    ("mollified-base", include_str!("../configs/mollified-base.toml")),
    ("mollified-element", include_str!("../configs/mollified-element.toml")),
];

pub fn shipped(name: &str) -> ExperimentConfig {
    let (_, text) = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("no shipped config `{name}`"));
    ExperimentConfig::from_toml(text).expect("shipped configs parse")
}

/// Random-smooth configs over [`SEEDS`], mollified elements over every
/// scale; everything else as is.
pub fn expand(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let g = &cfg.generator;
    if g.family == "random-smooth" {
        return SEEDS
            .iter()
            .map(|&s| {
                let mut c = cfg.clone();
                c.generator.seed = s;
                c.name = format!("{}-seed{s}", cfg.name);
                c
            })
            .collect();
    }
    if g.family == "mollified-sequence" && g.member.as_deref().is_some_and(|m| m.starts_with("element")) {
        return (0..g.mollify_scales.len())
            .map(|i| {
                let mut c = cfg.clone();
                c.generator.member = Some(format!("element{i}"));
                c.name = format!("{}{i}", cfg.name);
                c
            })
            .collect();
    }
    vec![cfg.clone()]
}

/// Every individual run behind the shipped configs.
pub fn shipped_runs() -> Vec<ExperimentConfig> {
    SHIPPED.iter().flat_map(|(n, _)| expand(&shipped(n))).collect()
}
