//! Category tables for the converted datasets.
//!
//! Ids run `1..=K`; `0` is reserved for background in semantic maps.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTag {
    Sota,
    Sior,
    Fast,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u16,
    pub name: String,
    pub abbreviation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub tag: DatasetTag,
    categories: Vec<Category>,
}

// (abbreviation, full name), in the published order.
const SOTA: [(&str, &str); 18] = [
    ("LV", "large vehicle"),
    ("SP", "swimming pool"),
    ("HC", "helicopter"),
    ("BR", "bridge"),
    ("PL", "plane"),
    ("SH", "ship"),
    ("SBF", "soccer ball field"),
    ("BC", "basketball court"),
    ("GTF", "ground track field"),
    ("SV", "small vehicle"),
    ("BD", "baseball diamond"),
    ("TC", "tennis court"),
    ("RA", "roundabout"),
    ("ST", "storage tanK"),
    ("HA", "harbor"),
    ("CC", "container crane"),
    ("AP", "airport"),
    ("HP", "helipad"),
];

const SIOR: [(&str, &str); 20] = [
    ("APL", "airplane"),
    ("APO", "airport"),
    ("BF", "baseballfield"),
    ("BC", "basketballcourt"),
    ("BR", "bridge"),
    ("CH", "chimney"),
    ("ESA", "expressway service area"),
    ("ETS", "expressway toll station"),
    ("DA", "dam"),
    ("GF", "golffield"),
    ("GTF", "groundtrackfield"),
    ("HA", "harbor"),
    ("OP", "overpass"),
    ("SH", "ship"),
    ("STD", "stadium"),
    ("STT", "storagetank"),
    ("TC", "tenniscourt"),
    ("TS", "trainstation"),
    ("VH", "vehicle"),
    ("WD", "windmill"),
];

const FAST: [(&str, &str); 37] = [
    ("A2", "A220"),
    ("A3", "A321"),
    ("A4", "A330"),
    ("A5", "A350"),
    ("ARJ", "ARJ21"),
    ("BF", "baseball field"),
    ("BC", "basketball court"),
    ("B3", "boeing737"),
    ("B4", "boeing747"),
    ("B7", "boeing777"),
    ("B8", "boeing787"),
    ("BR", "bridge"),
    ("BU", "bus"),
    ("C9", "C919"),
    ("CT", "cargo truck"),
    ("DCS", "dry cargo ship"),
    ("DT", "dump truck"),
    ("ES", "engineering ship"),
    ("EV", "excavator"),
    ("FB", "fishing boat"),
    ("FF", "football field"),
    ("IN", "intersection"),
    ("LCS", "liquid cargo ship"),
    ("MB", "motorboat"),
    ("OA", "other airplane"),
    ("OS", "other ship"),
    ("OV", "other vehicle"),
    ("PS", "passenger ship"),
    ("RA", "roundabout"),
    ("SC", "small car"),
    ("TC", "tennis court"),
    ("TRT", "tractor"),
    ("TRL", "trailer"),
    ("TUT", "truck tractor"),
    ("TB", "tugboat"),
    ("VA", "van"),
    ("WS", "warship"),
];

/// Lowercase and drop hyphens, underscores and whitespace.
///
/// `"Storage-Tank"`, `"storage_tank"` and `"storage tanK"` all normalize to
/// `"storagetank"`.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '-' | '_') && !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

impl CategoryTable {
    pub fn builtin(tag: DatasetTag) -> Option<Self> {
        let entries: &[(&str, &str)] = match tag {
            DatasetTag::Sota => &SOTA,
            DatasetTag::Sior => &SIOR,
            DatasetTag::Fast => &FAST,
            DatasetTag::Custom => return None,
        };
        let categories = entries
            .iter()
            .zip(1u16..)
            .map(|(&(abbr, name), id)| Category {
                id,
                name: name.to_owned(),
                abbreviation: abbr.to_owned(),
            })
            .collect();
        Some(Self { tag, categories })
    }

    pub fn sota() -> Self {
        Self::builtin(DatasetTag::Sota).expect("built-in table")
    }

    pub fn sior() -> Self {
        Self::builtin(DatasetTag::Sior).expect("built-in table")
    }

    pub fn fast() -> Self {
        Self::builtin(DatasetTag::Fast).expect("built-in table")
    }

    /// Build a table from `(name, abbreviation)` pairs; ids follow input order.
    pub fn custom<S: AsRef<str>>(entries: &[(S, S)]) -> Result<Self> {
        let categories = entries
            .iter()
            .zip(1u16..)
            .map(|((name, abbr), id)| Category {
                id,
                name: name.as_ref().to_owned(),
                abbreviation: abbr.as_ref().to_owned(),
            })
            .collect();
        let table = Self {
            tag: DatasetTag::Custom,
            categories,
        };
        table.validate()?;
        Ok(table)
    }

    /// Checks contiguous ids, unique names and unique abbreviations.
    pub fn validate(&self) -> Result<()> {
        if self.categories.len() > usize::from(u8::MAX) {
            return Err(Error::CategoryTable(
                "more than 255 categories do not fit an 8-bit semantic map".into(),
            ));
        }
        for (i, c) in self.categories.iter().enumerate() {
            if usize::from(c.id) != i + 1 {
                return Err(Error::CategoryTable(alloc::format!(
                    "category {:?} has id {}, expected {}",
                    c.name,
                    c.id,
                    i + 1
                )));
            }
            for other in &self.categories[..i] {
                if normalize_name(&other.abbreviation) == normalize_name(&c.abbreviation) {
                    return Err(Error::CategoryTable(alloc::format!(
                        "duplicate abbreviation {:?}",
                        c.abbreviation
                    )));
                }
                if normalize_name(&other.name) == normalize_name(&c.name) {
                    return Err(Error::CategoryTable(alloc::format!(
                        "duplicate name {:?}",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn get(&self, id: u16) -> Option<&Category> {
        id.checked_sub(1)
            .and_then(|i| self.categories.get(usize::from(i)))
    }

    pub fn contains_id(&self, id: u16) -> bool {
        self.get(id).is_some()
    }

    /// Resolve a source-dataset class name, matching full names first and
    /// abbreviations second.
    pub fn lookup(&self, name: &str) -> Option<u16> {
        let key = normalize_name(name);
        self.categories
            .iter()
            .find(|c| normalize_name(&c.name) == key)
            .or_else(|| {
                self.categories
                    .iter()
                    .find(|c| normalize_name(&c.abbreviation) == key)
            })
            .map(|c| c.id)
    }

    pub fn resolve(&self, name: &str) -> Result<u16> {
        self.lookup(name)
            .ok_or_else(|| Error::UnknownCategory(name.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_cardinalities() {
        assert_eq!(CategoryTable::sota().len(), 18);
        assert_eq!(CategoryTable::sior().len(), 20);
        assert_eq!(CategoryTable::fast().len(), 37);
        for t in [
            CategoryTable::sota(),
            CategoryTable::sior(),
            CategoryTable::fast(),
        ] {
            t.validate().unwrap();
        }
        assert!(CategoryTable::builtin(DatasetTag::Custom).is_none());
    }

    #[test]
    fn lookup_normalizes_source_spellings() {
        let sota = CategoryTable::sota();
        assert_eq!(sota.lookup("storage-tank"), Some(14));
        assert_eq!(sota.lookup("Large_Vehicle"), Some(1));
        assert_eq!(sota.lookup("plane"), Some(5));
        assert_eq!(sota.lookup("pl"), Some(5));
        assert_eq!(sota.lookup("car"), None);

        let sior = CategoryTable::sior();
        assert_eq!(sior.lookup("Expressway-Service-area"), Some(7));
        assert_eq!(sior.lookup("vehicle"), Some(19));

        let fast = CategoryTable::fast();
        assert_eq!(fast.lookup("Boeing737"), Some(8));
        assert_eq!(fast.lookup("Small Car"), Some(30));
        assert_eq!(fast.lookup("other-airplane"), Some(25));
        assert_eq!(fast.lookup("Football Field"), Some(21));
    }

    #[test]
    fn custom_table_rejects_duplicate_abbreviations() {
        assert!(CategoryTable::custom(&[("ship", "SH"), ("shed", "sh")]).is_err());
        let t = CategoryTable::custom(&[("ship", "SH"), ("car", "CA")]).unwrap();
        assert_eq!(t.tag, DatasetTag::Custom);
        assert_eq!(t.get(2).unwrap().name, "car");
        assert!(t.get(0).is_none());
        assert!(t.get(3).is_none());
    }

    #[test]
    fn resolve_reports_unknown_name() {
        assert_eq!(
            CategoryTable::sior().resolve("spaceship"),
            Err(Error::UnknownCategory("spaceship".into()))
        );
    }
}
