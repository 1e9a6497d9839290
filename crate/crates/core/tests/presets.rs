use std::path::Path;

use f0deid::pipeline::{all_presets, PipelineConfig, PRESET_NAMES};

#[test]
fn shipped_preset_files_match_the_builtin_grid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut files: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    files.sort();
    let mut want: Vec<String> = PRESET_NAMES.iter().map(|n| format!("{n}.json")).collect();
    want.sort();
    assert_eq!(files, want);
    for (name, cfg) in all_presets() {
        let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
        assert_eq!(text, cfg.to_json().unwrap(), "{name}");
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), cfg);
    }
}
