//! Line-delimited JSON manifest.
//!
//! The first non-blank line is a header, `{"manifest_version":1}`; each later
//! line is one [`ManifestRecord`]. Relative paths resolve against the
//! manifest's directory. A zero-byte file is an empty manifest.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub image_id: String,
    /// One activation map per fusion scale, in scale order.
    pub activation_paths: Vec<PathBuf>,
    pub labelmap_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_image_path: Option<PathBuf>,
}

impl ManifestRecord {
    pub fn referenced_paths(&self) -> impl Iterator<Item = &PathBuf> {
        self.activation_paths
            .iter()
            .chain(std::iter::once(&self.labelmap_path))
            .chain(self.gt_path.iter())
            .chain(self.source_image_path.iter())
    }

    fn resolve_against(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.activation_paths.iter_mut().for_each(fix);
        fix(&mut self.labelmap_path);
        self.gt_path.as_mut().map(fix);
        self.source_image_path.as_mut().map(fix);
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let id = &self.image_id;
        if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
            return Err(format!(
                "field `image_id` must be a non-empty file-name-safe string, got {id:?}"
            ));
        }
        if self.activation_paths.is_empty() {
            return Err("field `activation_paths` must list at least one file".into());
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    manifest_version: u32,
}

/// Parses manifest text without touching the filesystem.
pub fn parse_manifest_str(text: &str, base_dir: &Path) -> Result<Vec<ManifestRecord>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let Some((line, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    match serde_json::from_str::<Header>(header) {
        Ok(h) if h.manifest_version == MANIFEST_VERSION => {}
        Ok(h) => {
            return Err(Error::Manifest {
                line,
                message: format!("unsupported manifest_version {}", h.manifest_version),
            })
        }
        Err(e) => {
            return Err(Error::Manifest {
                line,
                message: format!("expected header {{\"manifest_version\":{MANIFEST_VERSION}}}: {e}"),
            })
        }
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, text) in lines {
        let mut rec: ManifestRecord = serde_json::from_str(text).map_err(|e| Error::Manifest {
            line,
            message: e.to_string(),
        })?;
        rec.validate()
            .map_err(|message| Error::Manifest { line, message })?;
        if !seen.insert(rec.image_id.clone()) {
            return Err(Error::DuplicateId(rec.image_id));
        }
        rec.resolve_against(base_dir);
        records.push(rec);
    }
    Ok(records)
}

/// Reads and validates a manifest, including that every referenced file exists.
pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let records = parse_manifest_str(&text, base)?;
    for rec in &records {
        if let Some(p) = rec.referenced_paths().find(|p| !p.is_file()) {
            return Err(Error::MissingFile {
                image_id: rec.image_id.clone(),
                path: p.clone(),
            });
        }
    }
    Ok(records)
}

pub fn to_manifest_string(records: &[ManifestRecord]) -> String {
    let mut out = serde_json::to_string(&Header {
        manifest_version: MANIFEST_VERSION,
    })
    .expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_manifest(records: &[ManifestRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_manifest_string(records)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "{\"manifest_version\":1}\n";

    fn rec(id: &str) -> String {
        format!(
            "{{\"image_id\":\"{id}\",\"activation_paths\":[\"a2.png\",\"a3.png\"],\"labelmap_path\":\"seg.png\"}}\n"
        )
    }

    #[test]
    fn empty_manifest() {
        assert!(parse_manifest_str("", Path::new("")).unwrap().is_empty());
        assert!(parse_manifest_str(HEADER, Path::new("")).unwrap().is_empty());
    }

    #[test]
    fn relative_paths_resolve_against_base() {
        let text = format!("{HEADER}{}", rec("img1"));
        let r = parse_manifest_str(&text, Path::new("/data")).unwrap();
        assert_eq!(r[0].activation_paths[1], PathBuf::from("/data/a3.png"));
        assert_eq!(r[0].labelmap_path, PathBuf::from("/data/seg.png"));
        assert_eq!(r[0].gt_path, None);
    }

    #[test]
    fn missing_activation_paths_names_the_field() {
        let text = format!("{HEADER}{{\"image_id\":\"x\",\"labelmap_path\":\"s.png\"}}\n");
        let err = parse_manifest_str(&text, Path::new("")).unwrap_err();
        assert!(err.to_string().contains("activation_paths"), "{err}");
        assert!(matches!(err, Error::Manifest { line: 2, .. }));

        let text = format!("{HEADER}{{\"image_id\":\"x\",\"activation_paths\":[],\"labelmap_path\":\"s.png\"}}\n");
        let err = parse_manifest_str(&text, Path::new("")).unwrap_err();
        assert!(err.to_string().contains("activation_paths"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = format!("{HEADER}{}{}", rec("same"), rec("same"));
        assert!(matches!(
            parse_manifest_str(&text, Path::new("")),
            Err(Error::DuplicateId(id)) if id == "same"
        ));
    }

    #[test]
    fn header_required_and_versioned() {
        assert!(parse_manifest_str(&rec("a"), Path::new("")).is_err());
        assert!(parse_manifest_str("{\"manifest_version\":2}\n", Path::new("")).is_err());
    }

    #[test]
    fn unsafe_ids_rejected() {
        let text = format!("{HEADER}{}", rec("../evil"));
        assert!(parse_manifest_str(&text, Path::new("")).is_err());
    }

    #[test]
    fn missing_file_names_image() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        fs::write(&path, format!("{HEADER}{}", rec("img7"))).unwrap();
        match parse_manifest(&path) {
            Err(Error::MissingFile { image_id, .. }) => assert_eq!(image_id, "img7"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serialize_round_trip() {
        let records = vec![
            ManifestRecord {
                image_id: "a".into(),
                activation_paths: vec!["/x/a.a2.png".into(), "/x/a.a3.png".into()],
                labelmap_path: "/x/a.seg.png".into(),
                gt_path: Some("/x/a.gt.png".into()),
                source_image_path: None,
            },
            ManifestRecord {
                image_id: "b".into(),
                activation_paths: vec!["/x/b.f32".into()],
                labelmap_path: "/x/b.seg.png".into(),
                gt_path: None,
                source_image_path: Some("/x/b.jpg".into()),
            },
        ];
        let text = to_manifest_string(&records);
        assert_eq!(parse_manifest_str(&text, Path::new("/elsewhere")).unwrap(), records);
    }
}
