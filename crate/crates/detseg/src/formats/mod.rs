//! Detection annotation parsers and segmentation output formats.

pub mod dota;
pub mod fair1m;
pub mod gt;
pub mod manifest;
pub mod semantic;
pub mod tile_json;
pub mod voc;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use detseg_core::{CategoryTable, InstanceAnnotation};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An object that failed a geometric check and was left out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Parsed {
    pub instances: Vec<InstanceAnnotation>,
    pub rejected: Vec<Rejected>,
}

impl Parsed {
    fn reject(&mut self, path: &str, line: usize, reason: impl fmt::Display) {
        log::warn!("{path}:{line}: rejected annotation: {reason}");
        self.rejected.push(Rejected {
            line,
            reason: reason.to_string(),
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Dota,
    Voc,
    Fair1m,
}

impl InputFormat {
    /// Guess the format from the file extension and, for XML, the elements
    /// present.
    pub fn sniff(path: &Path, text: &str) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("txt") => Ok(InputFormat::Dota),
            Some("xml") => {
                if text.contains("<bndbox") {
                    Ok(InputFormat::Voc)
                } else if text.contains("<points") {
                    Ok(InputFormat::Fair1m)
                } else if text.contains("<annotation") && !text.contains("<objects") {
                    // VOC file without objects.
                    Ok(InputFormat::Voc)
                } else {
                    Ok(InputFormat::Fair1m)
                }
            }
            _ => Err(Error::Config(format!(
                "{}: cannot tell the annotation format",
                path.display()
            ))),
        }
    }

    pub fn parse(self, text: &str, table: &CategoryTable, path: &str) -> Result<Parsed> {
        match self {
            InputFormat::Dota => dota::parse_dota(text, table, path),
            InputFormat::Voc => voc::parse_voc_xml(text, table, path),
            InputFormat::Fair1m => fair1m::parse_fair1m_xml(text, table, path),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Dota => "dota",
            InputFormat::Voc => "voc",
            InputFormat::Fair1m => "fair1m",
        })
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dota" | "txt" => Ok(InputFormat::Dota),
            "voc" | "dior" => Ok(InputFormat::Voc),
            "fair1m" => Ok(InputFormat::Fair1m),
            _ => Err(Error::Config(format!("unknown input format {s:?}"))),
        }
    }
}

/// Numbers as written by the serializers: integers without a fraction.
pub(crate) fn fmt_coord(v: f64) -> String {
    format!("{v}")
}

/// Category name with spaces turned into hyphens, so it stays one token.
pub(crate) fn token_name(table: &CategoryTable, id: u16) -> Result<String> {
    table
        .get(id)
        .map(|c| c.name.replace(' ', "-"))
        .ok_or_else(|| Error::Config(format!("category id {id} not in table")))
}
