//! The comparison grid: no anonymization, formant-only shifts, and the three f0
//! strategies alone and combined with each formant shift.

use crate::deid::{ComponentSelection, DeidStrategy};

use super::config::{MethodConfig, PipelineConfig, AUTO_DONOR};

/// Condition label of the disguised (child-mimicking) recordings.
pub const DISGUISE_CONDITION: &str = "child";

pub const PRESET_NAMES: [&str; 12] = [
    "none",
    "F1-3_10",
    "F1-3_20",
    "f0_15",
    "f0_15-F1-3_10",
    "f0_15-F1-3_20",
    "f0_D",
    "f0_D-F1-3_10",
    "f0_D-F1-3_20",
    "f0_S",
    "f0_S-F1-3_10",
    "f0_S-F1-3_20",
];

fn f0_strategy(code: &str) -> Option<DeidStrategy> {
    match code {
        "f0_15" => Some(DeidStrategy::ConstantShift { percent: 15.0 }),
        "f0_D" => Some(DeidStrategy::DisguiseModel {
            donor_condition: DISGUISE_CONDITION.into(),
            selection: ComponentSelection::default(),
        }),
        "f0_S" => Some(DeidStrategy::CrossGroup {
            donor_group: AUTO_DONOR.into(),
            selection: ComponentSelection::default(),
        }),
        _ => None,
    }
}

fn formant_factor(code: &str) -> Option<f64> {
    match code {
        "F1-3_10" => Some(1.1),
        "F1-3_20" => Some(1.2),
        _ => None,
    }
}

/// Full configuration of a named preset, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<PipelineConfig> {
    if !PRESET_NAMES.contains(&name) {
        return None;
    }
    let (f0, factor) = match name.split_once("-F") {
        Some((f, rest)) => (f0_strategy(f), formant_factor(&format!("F{rest}"))),
        None => (f0_strategy(name), formant_factor(name)),
    };
    let mut cfg = PipelineConfig {
        method: MethodConfig {
            label: name.into(),
            f0,
            formant_factor: factor,
        },
        ..PipelineConfig::default()
    };
    if name.starts_with("f0_D") {
        cfg.fit.conditions = vec!["modal".into(), DISGUISE_CONDITION.into()];
    }
    Some(cfg)
}

pub fn all_presets() -> Vec<(&'static str, PipelineConfig)> {
    PRESET_NAMES
        .iter()
        .map(|&n| (n, preset(n).expect("listed preset")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_complete() {
        let all = all_presets();
        assert_eq!(all.len(), 12);
        for (name, cfg) in &all {
            cfg.validate().unwrap();
            assert_eq!(&cfg.method.label, name);
        }
        let best = preset("f0_S-F1-3_20").unwrap();
        assert!(matches!(best.method.f0, Some(DeidStrategy::CrossGroup { .. })));
        assert_eq!(best.method.formant_factor, Some(1.2));
        let none = preset("none").unwrap();
        assert_eq!(none.method.f0, None);
        assert_eq!(none.method.formant_factor, None);
        assert_eq!(preset("F1-3_10").unwrap().method.formant_factor, Some(1.1));
        assert_eq!(preset("f0_D").unwrap().fit.conditions, vec!["modal", "child"]);
        assert!(preset("f0_X").is_none());
    }
}
