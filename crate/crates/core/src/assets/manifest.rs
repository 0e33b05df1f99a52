//! Bundle manifest: a UTF-8 `key = value` document.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique.
//! Recognised keys:
//!
//! | key                         | value                                   |
//! |-----------------------------|-----------------------------------------|
//! | `manifest_version`          | integer, currently `1`                  |
//! | `original`                  | path to the input image (PNG)           |
//! | `outpainted`                | path to the outpainted image (PNG)      |
//! | `depth`                     | path to the depth map (PFM)             |
//! | `flow`                      | path to the Eulerian flow (FLO)         |
//! | `margin_left` .. `_bottom`  | outpaint margins in pixels              |
//! | `depth_is_disparity`        | `true` / `false` (default `false`)      |
//! | `focal_length`              | optional focal length in pixels         |
//! | `prompt`                    | optional text prompt, passed through    |
//! | `layer_count`               | number of inpainted layers (optional)   |
//! | `layer.<k>.color`           | inpainted color of layer `k` (1-based)  |
//! | `layer.<k>.mask`            | inpainting validity mask of layer `k`   |
//! | `layer.<k>.depth`           | optional provider depth for layer `k`   |
//!
//! Any other key is preserved verbatim (providers record model identifiers
//! this way).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, (usize, String)>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Manifest {
                line: line_no,
                reason: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Manifest {
                    line: line_no,
                    reason: "empty key".into(),
                });
            }
            if entries
                .insert(key.to_string(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Manifest {
                    line: line_no,
                    reason: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Manifest { entries })
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), (0, value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Manifest {
            line: 0,
            reason: format!("missing required key `{key}`"),
        })
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Manifest {
                line: *line,
                reason: format!("cannot parse `{key}` value {v:?}"),
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Serialises with the well-known keys first, in a stable order.
    pub fn render(&self) -> String {
        const ORDER: &[&str] = &[
            "manifest_version",
            "original",
            "outpainted",
            "depth",
            "flow",
            "margin_left",
            "margin_right",
            "margin_top",
            "margin_bottom",
            "depth_is_disparity",
            "focal_length",
            "prompt",
            "layer_count",
        ];
        let mut out = String::from("# ldi4d scene bundle\n");
        for key in ORDER {
            if let Some(v) = self.get(key) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        for (key, (_, v)) in &self.entries {
            if !ORDER.contains(&key.as_str()) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_line_numbers() {
        let m = Manifest::parse("# c\n\nmanifest_version = 1\nmargin_left=4\n").unwrap();
        assert_eq!(m.get("manifest_version"), Some("1"));
        assert_eq!(m.parsed::<usize>("margin_left").unwrap(), Some(4));

        let err = Manifest::parse("a = 1\nnot a pair\n").unwrap_err();
        assert!(matches!(err, Error::Manifest { line: 2, .. }));
        let err = Manifest::parse("a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, Error::Manifest { line: 2, .. }));
        let m = Manifest::parse("x = abc").unwrap();
        assert!(m.parsed::<u32>("x").is_err());
    }

    #[test]
    fn values_may_contain_equals_signs() {
        let m = Manifest::parse("prompt = a=b sky").unwrap();
        assert_eq!(m.get("prompt"), Some("a=b sky"));
        let back = Manifest::parse(&m.render()).unwrap();
        assert_eq!(back.get("prompt"), Some("a=b sky"));
    }
}
