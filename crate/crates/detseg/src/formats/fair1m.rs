//! FAIR1M-style XML: `<objects><object>` entries with a category under
//! `<possibleresult><name>` and a four-corner `<points>` polygon.

use detseg_core::geometry::{Point, RBox};
use detseg_core::{CategoryTable, InstanceAnnotation};

use super::voc::{child, child_text, escape, line_of, open};
use super::{fmt_coord, Parsed};
use crate::error::{Error, Result};

fn parse_point(raw: &str) -> Option<Point> {
    let (x, y) = raw.split_once(',')?;
    let p = Point::new(x.trim().parse().ok()?, y.trim().parse().ok()?);
    (p.x.is_finite() && p.y.is_finite()).then_some(p)
}

pub fn parse_fair1m_xml(text: &str, table: &CategoryTable, path: &str) -> Result<Parsed> {
    let doc = open(text, path, "annotation")?;
    let mut out = Parsed::default();
    let Some(objects) = child(doc.root_element(), "objects") else {
        return Ok(out);
    };
    for obj in objects.children().filter(|n| n.has_tag_name("object")) {
        let line = line_of(&doc, obj);
        let name = child(obj, "possibleresult")
            .and_then(|r| child_text(r, "name"))
            .ok_or_else(|| Error::parse(path, line, "object without <possibleresult><name>"))?;
        let category_id = table
            .lookup(name)
            .ok_or_else(|| Error::parse(path, line, format!("unknown category {name:?}")))?;
        let points_node = child(obj, "points")
            .ok_or_else(|| Error::parse(path, line, "object without <points>"))?;
        let mut points = Vec::new();
        for p in points_node.children().filter(|n| n.has_tag_name("point")) {
            let raw = p.text().unwrap_or("").trim();
            points.push(parse_point(raw).ok_or_else(|| {
                Error::parse(path, line_of(&doc, p), format!("bad point {raw:?}"))
            })?);
        }
        // Public files close the ring by repeating the first corner.
        if points.len() == 5 && points[4] == points[0] {
            points.pop();
        }
        if points.len() != 4 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 4 polygon points, found {}", points.len()),
            ));
        }
        let rbox = match RBox::quad([points[0], points[1], points[2], points[3]]) {
            Ok(r) => r,
            Err(e) => {
                out.reject(path, line, e);
                continue;
            }
        };
        let id = out.instances.len().to_string();
        out.instances
            .push(InstanceAnnotation::new(category_id, None, Some(rbox), false, id)?);
    }
    Ok(out)
}

/// Writes closed five-point rings like the public files. Instances without
/// an R-Box are written with their H-Box corners.
pub fn write_fair1m_xml(instances: &[InstanceAnnotation], table: &CategoryTable) -> Result<String> {
    let mut out = String::from("<annotation>\n  <objects>\n");
    for inst in instances {
        let name = &table
            .get(inst.category_id)
            .ok_or_else(|| Error::Config(format!("category id {} not in table", inst.category_id)))?
            .name;
        let corners: Vec<Point> = match (&inst.rbox, &inst.hbox) {
            (Some(r), _) => r.vertices().to_vec(),
            (None, Some(h)) => h.corners().to_vec(),
            (None, None) => continue,
        };
        out.push_str("    <object>\n      <coordinate>pixel</coordinate>\n      <type>rectangle</type>\n");
        out.push_str(&format!(
            "      <possibleresult><name>{}</name></possibleresult>\n      <points>\n",
            escape(name)
        ));
        for p in corners.iter().chain(corners.first()) {
            out.push_str(&format!(
                "        <point>{},{}</point>\n",
                fmt_coord(p.x),
                fmt_coord(p.y)
            ));
        }
        out.push_str("      </points>\n    </object>\n");
    }
    out.push_str("  </objects>\n</annotation>\n");
    Ok(out)
}
