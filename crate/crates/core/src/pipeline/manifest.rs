use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 6] = ["utterance_id", "path", "speaker_id", "group", "condition", "session"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub utterance_id: String,
    pub path: String,
    pub speaker_id: String,
    pub group: String,
    pub condition: String,
    pub session: String,
}

/// Corpus listing. Relative audio paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
    pub base_dir: PathBuf,
}

/// Row predicate; empty lists match everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowFilter {
    pub groups: Vec<String>,
    pub conditions: Vec<String>,
    pub sessions: Vec<String>,
    pub speakers: Vec<String>,
    pub exclude: HashSet<String>,
}

impl RowFilter {
    pub fn matches(&self, r: &ManifestRow) -> bool {
        let ok = |list: &[String], v: &str| list.is_empty() || list.iter().any(|x| x == v);
        ok(&self.groups, &r.group)
            && ok(&self.conditions, &r.condition)
            && ok(&self.sessions, &r.session)
            && ok(&self.speakers, &r.speaker_id)
            && !self.exclude.contains(&r.utterance_id)
    }

    pub fn describe(&self) -> String {
        let part = |name: &str, list: &[String]| {
            if list.is_empty() {
                format!("{name}=*")
            } else {
                format!("{name}={{{}}}", list.join(","))
            }
        };
        format!(
            "{} {} {} {} excluded={}",
            part("group", &self.groups),
            part("condition", &self.conditions),
            part("session", &self.sessions),
            part("speaker", &self.speakers),
            self.exclude.len()
        )
    }
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self {
            rows,
            base_dir: base_dir.into(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.rows {
            if r.utterance_id.is_empty() || r.speaker_id.is_empty() || r.group.is_empty() {
                return Err(Error::Config(format!(
                    "manifest row {:?} needs an id, a speaker and a group",
                    r.utterance_id
                )));
            }
            if !seen.insert(&r.utterance_id) {
                return Err(Error::Config(format!("duplicate utterance id {:?}", r.utterance_id)));
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(input: R, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
            return Err(Error::Config(format!(
                "manifest header must be {}",
                MANIFEST_HEADER.join(",")
            )));
        }
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestRow>, _>>()?;
        Self::new(rows, base_dir)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::read(std::fs::File::open(path)?, base)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        wtr.write_record(MANIFEST_HEADER)?;
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        let p = Path::new(&row.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn get(&self, utterance_id: &str) -> Option<&ManifestRow> {
        self.rows.iter().find(|r| r.utterance_id == utterance_id)
    }

    /// Matching rows sorted by utterance id.
    pub fn select(&self, filter: &RowFilter) -> Vec<&ManifestRow> {
        let mut v: Vec<&ManifestRow> = self.rows.iter().filter(|r| filter.matches(r)).collect();
        v.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        v
    }

    pub fn groups(&self) -> BTreeSet<String> {
        self.rows.iter().map(|r| r.group.clone()).collect()
    }
}

/// Reads an exclusion list: one utterance id per line, `#` comments allowed.
pub fn read_exclusions(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}
