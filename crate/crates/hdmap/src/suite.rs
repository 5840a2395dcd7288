//! The pinned scene suite shipped with the tools.

use hdmap_core::scenegen::PerceptionRange;
use serde::{Deserialize, Serialize};

const STANDARD: &str = include_str!("../suite/standard.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub description: String,
    /// `regular` or `long`.
    pub range: String,
    pub seeds: Vec<u64>,
    pub spec: String,
    pub version: String,
}

impl SuiteManifest {
    pub fn standard() -> Self {
        serde_json::from_str(STANDARD).expect("bundled manifest parses")
    }

    pub fn with_range(mut self, range: &PerceptionRange) -> Self {
        self.range = if *range == PerceptionRange::LONG { "long" } else { "regular" }.to_string();
        self
    }

    pub fn scene_file(seed: u64) -> String {
        format!("scene_{seed:03}.json")
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdmap_core::scenegen::STANDARD_SUITE_SEEDS;

    #[test]
    fn bundled_seeds_match_core() {
        let m = SuiteManifest::standard();
        assert_eq!(m.seeds, STANDARD_SUITE_SEEDS);
        assert_eq!(m.range, "regular");
    }

    #[test]
    fn scene_names_sort_by_seed() {
        let mut names: Vec<String> = STANDARD_SUITE_SEEDS.iter().map(|&s| SuiteManifest::scene_file(s)).collect();
        let sorted = {
            let mut n = names.clone();
            n.sort();
            n
        };
        assert_eq!(names, sorted);
        names.dedup();
        assert_eq!(names.len(), STANDARD_SUITE_SEEDS.len());
    }
}
