//! Tab-separated dataset files: `head\trelation\ttail` triples, `src\ttgt`
//! links and optional one-label-per-line entity lists.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AlignmentRole, AlignmentSet, KnowledgeGraph, KnowledgeGraphBuilder};
use crate::error::{Error, Result};

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

fn fields<'a>(path: &Path, lineno: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
    if parts.len() != n || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: lineno,
            message: format!(
                "expected {n} non-empty tab-separated fields, found {}",
                parts.len()
            ),
        });
    }
    Ok(parts)
}

pub fn load_kg(triples_path: impl AsRef<Path>) -> Result<KnowledgeGraph> {
    load_into(KnowledgeGraph::builder(), triples_path.as_ref())
}

/// Like [`load_kg`], but entity ids are pre-assigned from `entities_path`
/// so entities without any triple still exist.
pub fn load_kg_with_entities(
    triples_path: impl AsRef<Path>,
    entities_path: impl AsRef<Path>,
) -> Result<KnowledgeGraph> {
    let mut builder = KnowledgeGraph::builder();
    for label in load_entity_list(entities_path)? {
        builder.entity(&label);
    }
    load_into(builder, triples_path.as_ref())
}

fn load_into(mut builder: KnowledgeGraphBuilder, path: &Path) -> Result<KnowledgeGraph> {
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(path, i + 1, line, 3)?;
        builder.triple(f[0], f[1], f[2]);
    }
    if builder.num_triples() == 0 {
        return Err(Error::NoTriples(path.to_owned()));
    }
    Ok(builder.build())
}

pub fn load_entity_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    Ok(read_lines(path)?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim_end_matches('\r').to_owned())
        .collect())
}

pub fn load_alignment(
    links_path: impl AsRef<Path>,
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
) -> Result<AlignmentSet> {
    let path = links_path.as_ref();
    let mut pairs = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(path, i + 1, line, 2)?;
        let s = kg_s.entity_id(f[0]).ok_or_else(|| Error::UnknownEntity {
            label: f[0].to_owned(),
            side: "source",
        })?;
        let t = kg_t.entity_id(f[1]).ok_or_else(|| Error::UnknownEntity {
            label: f[1].to_owned(),
            side: "target",
        })?;
        pairs.push((s, t));
    }
    AlignmentSet::new(pairs, AlignmentRole::Full)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

pub fn write_kg(kg: &KnowledgeGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for t in kg.triples() {
        writeln!(
            w,
            "{}\t{}\t{}",
            kg.entity_label(t.head),
            kg.relation_label(t.relation),
            kg.entity_label(t.tail)
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_entity_list(kg: &KnowledgeGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for label in kg.entity_labels() {
        writeln!(w, "{label}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_alignment(
    alignment: &AlignmentSet,
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for &(s, t) in alignment.pairs() {
        writeln!(w, "{}\t{}", kg_s.entity_label(s), kg_t.entity_label(t))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn counts_entities_relations_triples() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t", "a\tr\tb\na\tr\tc\n");
        let kg = load_kg(&p).unwrap();
        assert_eq!(
            (kg.num_entities(), kg.num_relations(), kg.triples().len()),
            (3, 1, 2)
        );
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t", "\n\n");
        let err = load_kg(&p).unwrap_err();
        assert!(err.to_string().contains("no triples"), "{err}");
    }

    #[test]
    fn duplicate_lines_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t", "a\tr\tb\na\tr\tb\n");
        assert_eq!(load_kg(&p).unwrap().triples().len(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t", "a\tr\tb\na\tr\n");
        match load_kg(&p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn alignment_loading() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = String::new();
        let mut t = String::new();
        let mut links = String::new();
        for i in 0..10 {
            s += &format!("s{i}\tr\ts{}\n", (i + 1) % 10);
            t += &format!("t{i}\tr\tt{}\n", (i + 1) % 10);
            links += &format!("s{i}\tt{i}\n");
        }
        let kg_s = load_kg(write(dir.path(), "s", &s)).unwrap();
        let kg_t = load_kg(write(dir.path(), "t", &t)).unwrap();
        let a = load_alignment(write(dir.path(), "l", &links), &kg_s, &kg_t).unwrap();
        assert_eq!(a.len(), 10);

        let err = load_alignment(write(dir.path(), "l2", "s1\tnope\n"), &kg_s, &kg_t).unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");

        let err =
            load_alignment(write(dir.path(), "l3", "s1\tt1\ns1\tt2\n"), &kg_s, &kg_t).unwrap_err();
        assert!(err.to_string().contains("violates 1-to-1"), "{err}");
    }

    #[test]
    fn entity_list_preassigns_isolated_entities() {
        let dir = tempfile::tempdir().unwrap();
        let ents = write(dir.path(), "e", "z\na\nb\n");
        let tri = write(dir.path(), "t", "a\tr\tb\n");
        let kg = load_kg_with_entities(&tri, &ents).unwrap();
        assert_eq!(kg.entity_labels(), ["z", "a", "b"]);
    }
}
