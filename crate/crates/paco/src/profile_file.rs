//! TOML access-profile files. See `profiles/builtin.toml` for the schema.

use std::fs;
use std::path::Path;

use paco_core::profiles::{AccessProfile, FindPathPolicy, ProfileError};
use serde::Deserialize;
use thiserror::Error;

/// The built-in profiles in file form.
pub const BUILTIN_PROFILES_TOML: &str = include_str!("../profiles/builtin.toml");

#[derive(Debug, Error)]
pub enum ProfileFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("profile {name:?}: {msg}")]
    Field { name: String, msg: String },
    #[error("profile {name:?}: {source}")]
    Profile { name: String, source: ProfileError },
    #[error("duplicate profile {0:?}")]
    Duplicate(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    profile: Vec<Stanza>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FindPath {
    Allowed,
    Forbidden,
    MinAge,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stanza {
    name: String,
    grid_factor_min: f64,
    grid_factor_max: f64,
    min_window_multiple: f64,
    find_path: FindPath,
    find_path_min_age_s: Option<u64>,
}

impl Stanza {
    fn into_profile(self) -> Result<AccessProfile, ProfileFileError> {
        let field = |msg: &str| ProfileFileError::Field {
            name: self.name.clone(),
            msg: msg.to_string(),
        };
        let policy = match (self.find_path, self.find_path_min_age_s) {
            (FindPath::Allowed, None) => FindPathPolicy::Allowed,
            (FindPath::Forbidden, None) => FindPathPolicy::Forbidden,
            (FindPath::MinAge, Some(age)) => FindPathPolicy::MinAge(age),
            (FindPath::MinAge, None) => return Err(field("find_path = \"min_age\" needs find_path_min_age_s")),
            (_, Some(_)) => return Err(field("find_path_min_age_s is only valid with find_path = \"min_age\"")),
        };
        AccessProfile::new(
            self.name.clone(),
            self.grid_factor_min,
            self.grid_factor_max,
            self.min_window_multiple,
            policy,
        )
        .map_err(|source| ProfileFileError::Profile {
            name: self.name,
            source,
        })
    }
}

pub fn parse_profiles(text: &str) -> Result<Vec<AccessProfile>, ProfileFileError> {
    let file: File = toml::from_str(text)?;
    let mut out: Vec<AccessProfile> = Vec::with_capacity(file.profile.len());
    for stanza in file.profile {
        let p = stanza.into_profile()?;
        if out.iter().any(|q| q.name == p.name) {
            return Err(ProfileFileError::Duplicate(p.name));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn load_profiles(path: &Path) -> Result<Vec<AccessProfile>, ProfileFileError> {
    parse_profiles(&fs::read_to_string(path)?)
}
