//! DOTA-style text: one object per line,
//! `x1 y1 x2 y2 x3 y3 x4 y4 category difficult`, optionally preceded by
//! `imagesource:` and `gsd:` lines.

use detseg_core::geometry::{rbox_to_rhbox, Point, RBox};
use detseg_core::{CategoryTable, InstanceAnnotation};

use super::{fmt_coord, token_name, Parsed};
use crate::error::{Error, Result};

fn is_metadata(line: &str) -> bool {
    let lower = line.to_ascii_lowercase();
    lower.starts_with("imagesource:") || lower.starts_with("gsd:")
}

pub fn parse_dota(text: &str, table: &CategoryTable, path: &str) -> Result<Parsed> {
    let mut out = Parsed::default();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || is_metadata(line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 10 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 10 tokens, found {}", tokens.len()),
            ));
        }
        let mut coords = [0.0f64; 8];
        for (c, tok) in coords.iter_mut().zip(&tokens[..8]) {
            *c = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("non-numeric coordinate {tok:?}")))?;
        }
        let category_id = table
            .lookup(tokens[8])
            .ok_or_else(|| Error::parse(path, lineno, format!("unknown category {:?}", tokens[8])))?;
        let difficult = match tokens[9] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("difficulty must be 0 or 1, found {other:?}"),
                ))
            }
        };
        let corners = [0, 2, 4, 6].map(|i| Point::new(coords[i], coords[i + 1]));
        let rbox = match RBox::quad(corners) {
            Ok(r) => r,
            Err(e) => {
                out.reject(path, lineno, e);
                continue;
            }
        };
        let hbox = rbox.is_axis_aligned().then(|| rbox_to_rhbox(&rbox));
        let id = out.instances.len().to_string();
        out.instances
            .push(InstanceAnnotation::new(category_id, hbox, Some(rbox), difficult, id)?);
    }
    Ok(out)
}

/// Write instances back as DOTA lines. Instances without an R-Box are
/// written as their H-Box corners.
pub fn write_dota(instances: &[InstanceAnnotation], table: &CategoryTable) -> Result<String> {
    let mut out = String::new();
    for inst in instances {
        let corners: Vec<Point> = match (&inst.rbox, &inst.hbox) {
            (Some(r), _) => r.vertices().to_vec(),
            (None, Some(h)) => h.corners().to_vec(),
            (None, None) => continue,
        };
        if corners.len() != 4 {
            return Err(Error::Config(format!(
                "instance {} has {} vertices; DOTA needs 4",
                inst.source_instance_id,
                corners.len()
            )));
        }
        for p in &corners {
            out.push_str(&fmt_coord(p.x));
            out.push(' ');
            out.push_str(&fmt_coord(p.y));
            out.push(' ');
        }
        out.push_str(&token_name(table, inst.category_id)?);
        out.push_str(if inst.difficult { " 1\n" } else { " 0\n" });
    }
    Ok(out)
}
