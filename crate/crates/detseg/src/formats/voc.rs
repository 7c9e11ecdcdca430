//! VOC-style XML with one `<object>` per instance and an axis-aligned
//! `<bndbox>`.

use detseg_core::{CategoryTable, HBox, InstanceAnnotation};
use roxmltree::{Document, Node};

use super::{fmt_coord, Parsed};
use crate::error::{Error, Result};

pub(crate) fn line_of(doc: &Document, node: Node) -> usize {
    doc.text_pos_at(node.range().start).row as usize
}

pub(crate) fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

pub(crate) fn child_text<'a>(node: Node<'a, '_>, name: &str) -> Option<&'a str> {
    child(node, name).and_then(|c| c.text()).map(str::trim)
}

pub(crate) fn open<'a>(text: &'a str, path: &str, root: &str) -> Result<Document<'a>> {
    if text.trim().is_empty() {
        return Err(Error::Schema {
            path: path.into(),
            message: "empty document".into(),
        });
    }
    let doc = Document::parse(text).map_err(|e| Error::Schema {
        path: path.into(),
        message: e.to_string(),
    })?;
    if !doc.root_element().has_tag_name(root) {
        return Err(Error::Schema {
            path: path.into(),
            message: format!(
                "root element is <{}>, expected <{root}>",
                doc.root_element().tag_name().name()
            ),
        });
    }
    Ok(doc)
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn parse_voc_xml(text: &str, table: &CategoryTable, path: &str) -> Result<Parsed> {
    let doc = open(text, path, "annotation")?;
    let mut out = Parsed::default();
    for obj in doc.root_element().children().filter(|n| n.has_tag_name("object")) {
        let line = line_of(&doc, obj);
        let name = child_text(obj, "name")
            .ok_or_else(|| Error::parse(path, line, "object without <name>"))?;
        let category_id = table
            .lookup(name)
            .ok_or_else(|| Error::parse(path, line, format!("unknown category {name:?}")))?;
        let difficult = match child_text(obj, "difficult") {
            None | Some("0") | Some("") => false,
            Some("1") => true,
            Some(other) => {
                return Err(Error::parse(path, line, format!("difficult must be 0 or 1, found {other:?}")))
            }
        };
        let bnd = child(obj, "bndbox")
            .ok_or_else(|| Error::parse(path, line, "object without <bndbox>"))?;
        let mut v = [0.0f64; 4];
        for (slot, key) in v.iter_mut().zip(["xmin", "ymin", "xmax", "ymax"]) {
            let raw = child_text(bnd, key)
                .ok_or_else(|| Error::parse(path, line, format!("bndbox without <{key}>")))?;
            *slot = raw
                .parse()
                .map_err(|_| Error::parse(path, line, format!("non-numeric {key} {raw:?}")))?;
        }
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::parse(path, line, "non-finite coordinate"));
        }
        if v[0] > v[2] || v[1] > v[3] {
            return Err(Error::parse(
                path,
                line,
                format!("min exceeds max in bndbox {v:?}"),
            ));
        }
        let hbox = HBox::new(v[0], v[1], v[2], v[3])?;
        if hbox.area() <= 0.0 {
            out.reject(path, line, format!("zero-area box {v:?}"));
            continue;
        }
        let id = out.instances.len().to_string();
        out.instances
            .push(InstanceAnnotation::new(category_id, Some(hbox), None, difficult, id)?);
    }
    Ok(out)
}

/// Instances without an H-Box are written with their R-Box hull.
pub fn write_voc_xml(instances: &[InstanceAnnotation], table: &CategoryTable) -> Result<String> {
    let mut out = String::from("<annotation>\n");
    for inst in instances {
        let name = &table
            .get(inst.category_id)
            .ok_or_else(|| Error::Config(format!("category id {} not in table", inst.category_id)))?
            .name;
        let b = inst.outer_box();
        out.push_str("  <object>\n");
        out.push_str(&format!("    <name>{}</name>\n", escape(name)));
        out.push_str(&format!("    <difficult>{}</difficult>\n", u8::from(inst.difficult)));
        out.push_str("    <bndbox>\n");
        for (key, val) in [("xmin", b.x_min), ("ymin", b.y_min), ("xmax", b.x_max), ("ymax", b.y_max)] {
            out.push_str(&format!("      <{key}>{}</{key}>\n", fmt_coord(val)));
        }
        out.push_str("    </bndbox>\n  </object>\n");
    }
    out.push_str("</annotation>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"<annotation>
  <filename>00001.jpg</filename>
  <size><width>800</width><height>800</height><depth>3</depth></size>
  <object>
    <name>golf field</name>
    <difficult>0</difficult>
    <bndbox><xmin>10</xmin><ymin>20</ymin><xmax>30</xmax><ymax>60</ymax></bndbox>
  </object>
</annotation>"#;

    #[test]
    fn single_object() {
        let p = parse_voc_xml(ONE, &CategoryTable::sior(), "a.xml").unwrap();
        assert_eq!(p.instances.len(), 1);
        let inst = &p.instances[0];
        assert_eq!(inst.hbox, Some(HBox::new(10.0, 20.0, 30.0, 60.0).unwrap()));
        assert!(inst.rbox.is_none());
        assert_eq!(CategoryTable::sior().get(inst.category_id).unwrap().name, "golffield");
    }

    #[test]
    fn zero_objects_and_inverted_box() {
        let p = parse_voc_xml("<annotation><filename>x</filename></annotation>", &CategoryTable::sior(), "z.xml").unwrap();
        assert!(p.instances.is_empty());
        let bad = ONE.replace("<xmin>10</xmin>", "<xmin>40</xmin>");
        let err = parse_voc_xml(&bad, &CategoryTable::sior(), "b.xml").unwrap_err();
        assert!(err.to_string().starts_with("b.xml:4:"), "{err}");
    }

    #[test]
    fn zero_area_rejected() {
        let flat = ONE.replace("<xmax>30</xmax>", "<xmax>10</xmax>");
        let p = parse_voc_xml(&flat, &CategoryTable::sior(), "f.xml").unwrap();
        assert!(p.instances.is_empty());
        assert_eq!(p.rejected.len(), 1);
    }

    #[test]
    fn writer_round_trips() {
        let first = parse_voc_xml(ONE, &CategoryTable::sior(), "a.xml").unwrap();
        let xml = write_voc_xml(&first.instances, &CategoryTable::sior()).unwrap();
        assert_eq!(parse_voc_xml(&xml, &CategoryTable::sior(), "a.xml").unwrap(), first);
    }
}
