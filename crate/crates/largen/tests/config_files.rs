//! The example configurations shipped with the repository parse and validate.

use std::path::Path;

use largen::config::parse_config;

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4, "found {seen} configs in {}", dir.display());
}

#[test]
fn interacting_config_lists_four_component_counts() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/interacting.toml");
    let cfg = parse_config(&std::fs::read_to_string(dir).unwrap()).unwrap();
    assert_eq!(cfg.component_counts(), vec![4, 8, 16, 32]);
    assert!(cfg.integrator.mala);
}
