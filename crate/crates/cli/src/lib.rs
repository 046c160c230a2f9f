//! Scenario runner and verification suites for the `spectral-flow` library.

pub mod run;
pub mod scenario;
pub mod verify;

/// Scenarios shipped with the binary, by file name.
pub const BUNDLED: [(&str, &str); 3] = [
    ("single_crossing.json", include_str!("../scenarios/single_crossing.json")),
    ("zsign_dirac.json", include_str!("../scenarios/zsign_dirac.json")),
    ("circle_signature.json", include_str!("../scenarios/circle_signature.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(file, _)| *file == name || file.strip_suffix(".json") == Some(name))
        .map(|(_, text)| *text)
}
