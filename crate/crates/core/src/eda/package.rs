//! Footprint-name normalization to package families and size codes.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Family name → footprint tokens that belong to it (e.g. `QFP` ← `TQFP`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PackageAliases {
    families: BTreeMap<String, Vec<String>>,
}

fn alpha_tokens(s: &str) -> Vec<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"[A-Z]+").unwrap());
    re.find_iter(&s.to_ascii_uppercase())
        .map(|m| m.as_str().to_string())
        .collect()
}

/// Imperial size code (`0402`, `0603`, ...) embedded in a footprint name.
pub fn size_code(footprint: &str) -> Option<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?:^|[^0-9])([0-9]{4})(?:[^0-9]|$)").unwrap());
    re.captures(footprint).map(|c| c[1].to_string())
}

impl PackageAliases {
    pub fn new(families: BTreeMap<String, Vec<String>>) -> Self {
        PackageAliases { families }
    }

    pub fn families(&self) -> impl Iterator<Item = &str> {
        self.families.keys().map(String::as_str)
    }

    /// Family for a single alphabetic token, if it is a known alias.
    pub fn family_of_token(&self, token: &str) -> Option<&str> {
        let token = token.to_ascii_uppercase();
        self.families
            .iter()
            .find(|(family, aliases)| **family == token || aliases.iter().any(|a| a.eq_ignore_ascii_case(&token)))
            .map(|(family, _)| family.as_str())
    }

    /// Family for a footprint or supplier package string: the first
    /// alphabetic token that is a known alias.
    pub fn family(&self, footprint: &str) -> Option<&str> {
        alpha_tokens(footprint)
            .iter()
            .find_map(|t| self.family_of_token(t))
    }

    /// Package token for a footprint: its family when known, otherwise the
    /// leading alphabetic token, otherwise the uppercased footprint.
    pub fn normalize(&self, footprint: &str) -> String {
        if let Some(f) = self.family(footprint) {
            return f.to_string();
        }
        alpha_tokens(footprint)
            .into_iter()
            .next()
            .unwrap_or_else(|| footprint.trim().to_ascii_uppercase())
    }
}
