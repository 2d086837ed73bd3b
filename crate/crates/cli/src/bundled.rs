//! Recipes shipped inside the binary.

use std::path::Path;

use crate::{CliError, Recipe};

pub const BUNDLED: &[(&str, &str)] = &[
    ("gauss", include_str!("../recipes/gauss.toml")),
    ("single_l50", include_str!("../recipes/single_l50.toml")),
    ("eq7_N1", include_str!("../recipes/eq7_N1.toml")),
    ("eq7_N2", include_str!("../recipes/eq7_N2.toml")),
    ("eq7_N3", include_str!("../recipes/eq7_N3.toml")),
    ("eq8", include_str!("../recipes/eq8.toml")),
];

pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Load a recipe from a file path, falling back to a bundled name.
/// Returns the recipe and a default output name.
pub fn resolve(arg: &str) -> Result<(Recipe, String), CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("recipe")
            .to_string();
        let recipe = Recipe::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{arg}: {m}")),
            other => other,
        })?;
        return Ok((recipe, stem));
    }
    match source(arg) {
        Some(text) => Ok((Recipe::parse(text)?, arg.to_string())),
        None => Err(CliError::Parse(format!(
            "{arg}: no such file and not a bundled recipe (bundled: {})",
            names().collect::<Vec<_>>().join(", ")
        ))),
    }
}
