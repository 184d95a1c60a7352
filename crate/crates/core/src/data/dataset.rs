//! Dataset directory format.
//!
//! ```text
//! manifest.txt          key = value lines (see Manifest)
//! nodes.tsv             node_id <TAB> type <TAB> class index or "-"
//! edges_<relation>.tsv  src_id <TAB> dst_id
//! features_<type>.txt   "rows cols" then one row of space-separated values per line
//! ```
//!
//! A type declared with dimension `onehot` gets identity features and has no
//! feature file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::kv;
use crate::data::SplitSet;
use crate::diff::Tensor;
use crate::error::{Error, Result};
use crate::hin::{Hin, MetaPath, NodeType, Relation};
use crate::inputs::{FeatureStore, GraphInputs};
use crate::scalar::Scalar;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const NODES_FILE: &str = "nodes.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureDim {
    Dense(usize),
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub count: usize,
    pub dim: FeatureDim,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPathDecl {
    pub name: String,
    /// Relation sequence, `^-1` marking reversed steps.
    pub sequence: String,
}

/// ```text
/// target_type = Paper
/// classes = 3
/// type = Paper 4019 1902
/// type = Author 7167 onehot
/// relation = PA Paper Author
/// metapath = PAP PA PA^-1
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub target_type: String,
    pub classes: usize,
    pub types: Vec<TypeDecl>,
    pub relations: Vec<RelationDecl>,
    pub metapaths: Vec<MetaPathDecl>,
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut target = None;
        let mut classes = None;
        let (mut types, mut relations, mut metapaths) = (Vec::new(), Vec::new(), Vec::new());
        for e in kv::parse(text, path)? {
            let err = |msg: String| Error::data(path, e.line, msg);
            let words: Vec<&str> = e.value.split_whitespace().collect();
            match e.key.as_str() {
                "target_type" => target = Some(e.value.clone()),
                "classes" => classes = Some(e.value.parse::<usize>().map_err(|_| err(format!("bad class count {:?}", e.value)))?),
                "type" => {
                    let [name, count, dim] = words[..] else {
                        return Err(err("expected `type = <name> <count> <dim|onehot>`".into()));
                    };
                    let count = count.parse().map_err(|_| err(format!("bad node count {count:?}")))?;
                    let dim = match dim {
                        "onehot" => FeatureDim::OneHot,
                        d => FeatureDim::Dense(d.parse().map_err(|_| err(format!("bad feature dimension {d:?}")))?),
                    };
                    types.push(TypeDecl { name: name.into(), count, dim });
                }
                "relation" => {
                    let [name, src, dst] = words[..] else {
                        return Err(err("expected `relation = <name> <src_type> <dst_type>`".into()));
                    };
                    relations.push(RelationDecl { name: name.into(), src: src.into(), dst: dst.into() });
                }
                "metapath" => {
                    let Some((name, rest)) = words.split_first().filter(|(_, r)| !r.is_empty()) else {
                        return Err(err("expected `metapath = <name> <relation> ...`".into()));
                    };
                    metapaths.push(MetaPathDecl { name: (*name).into(), sequence: rest.join(" ") });
                }
                k => return Err(err(format!("unknown manifest key {k:?}"))),
            }
        }
        let missing = |what: &str| Error::data(path, 0, format!("manifest lacks `{what}`"));
        Ok(Manifest {
            target_type: target.ok_or_else(|| missing("target_type"))?,
            classes: classes.ok_or_else(|| missing("classes"))?,
            types,
            relations,
            metapaths,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "target_type = {}", self.target_type);
        let _ = writeln!(s, "classes = {}", self.classes);
        for t in &self.types {
            let dim = match t.dim {
                FeatureDim::Dense(d) => d.to_string(),
                FeatureDim::OneHot => "onehot".into(),
            };
            let _ = writeln!(s, "type = {} {} {dim}", t.name, t.count);
        }
        for r in &self.relations {
            let _ = writeln!(s, "relation = {} {} {}", r.name, r.src, r.dst);
        }
        for m in &self.metapaths {
            let _ = writeln!(s, "metapath = {} {}", m.name, m.sequence);
        }
        s
    }

    pub fn metapath_names(&self) -> Vec<String> {
        self.metapaths.iter().map(|m| m.name.clone()).collect()
    }
}

/// A loaded dataset. Features are kept dense; one-hot types hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub hin: Hin,
    pub features: Vec<Option<Tensor<f64>>>,
    /// Per target node; `None` when unlabeled.
    pub labels: Vec<Option<usize>>,
    /// Per type, the string id of every node.
    pub node_ids: Vec<Vec<String>>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn edge_file(dir: &Path, relation: &str) -> PathBuf {
    dir.join(format!("edges_{relation}.tsv"))
}

pub fn feature_file(dir: &Path, ty: &str) -> PathBuf {
    dir.join(format!("features_{ty}.txt"))
}

fn parse_features(path: &Path, rows: usize, cols: usize) -> Result<Tensor<f64>> {
    let text = read(path)?;
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| Error::data(path, 1, "empty feature file"))?;
    let dims: Vec<usize> = head.split_whitespace().map(|w| w.parse()).collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::data(path, 1, format!("bad header {head:?}")))?;
    if dims != [rows, cols] {
        return Err(Error::data(path, 1, format!("header {head:?} does not match {rows} nodes x {cols} dims")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for w in line.split_whitespace() {
            data.push(w.parse::<f64>().map_err(|_| Error::data(path, i + 1, format!("bad value {w:?}")))?);
        }
        if data.len() - before != cols {
            return Err(Error::data(path, i + 1, format!("{} values, expected {cols}", data.len() - before)));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::data(path, 0, format!("{seen} feature rows, expected {rows}")));
    }
    Tensor::new(rows, cols, data)
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let mpath = dir.join(MANIFEST_FILE);
        let manifest = Manifest::parse(&read(&mpath)?, &mpath)?;
        let type_idx: HashMap<&str, usize> =
            manifest.types.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
        let target = *type_idx
            .get(manifest.target_type.as_str())
            .ok_or_else(|| Error::data(&mpath, 0, format!("target type {:?} is not declared", manifest.target_type)))?;

        let npath = dir.join(NODES_FILE);
        let mut node_ids = vec![Vec::new(); manifest.types.len()];
        let mut labels = Vec::new();
        let mut lookup: HashMap<String, (usize, usize)> = HashMap::new();
        for (i, line) in read(&npath)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| Error::data(&npath, i + 1, msg);
            let cols: Vec<&str> = line.split('\t').collect();
            let [id, ty, label] = cols[..] else {
                return Err(err(format!("expected 3 tab-separated fields, got {}", cols.len())));
            };
            let t = *type_idx.get(ty).ok_or_else(|| err(format!("unknown node type {ty:?}")))?;
            if lookup.insert(id.to_string(), (t, node_ids[t].len())).is_some() {
                return Err(err(format!("duplicate node id {id:?}")));
            }
            node_ids[t].push(id.to_string());
            let label = match label {
                "-" => None,
                l => {
                    let y: usize = l.parse().map_err(|_| err(format!("bad label {l:?}")))?;
                    if y >= manifest.classes {
                        return Err(err(format!("label {y} outside {} classes", manifest.classes)));
                    }
                    Some(y)
                }
            };
            if t == target {
                labels.push(label);
            } else if label.is_some() {
                return Err(err(format!("node {id:?} of non-target type {ty:?} has a label")));
            }
        }
        for (t, decl) in manifest.types.iter().enumerate() {
            if node_ids[t].len() != decl.count {
                return Err(Error::data(
                    &npath,
                    0,
                    format!("{} nodes of type {}, manifest declares {}", node_ids[t].len(), decl.name, decl.count),
                ));
            }
        }

        let mut relations = Vec::new();
        for r in &manifest.relations {
            let src = *type_idx.get(r.src.as_str()).ok_or_else(|| Error::data(&mpath, 0, format!("relation {}: unknown type {:?}", r.name, r.src)))?;
            let dst = *type_idx.get(r.dst.as_str()).ok_or_else(|| Error::data(&mpath, 0, format!("relation {}: unknown type {:?}", r.name, r.dst)))?;
            let epath = edge_file(dir, &r.name);
            let mut edges = Vec::new();
            for (i, line) in read(&epath)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let err = |msg: String| Error::data(&epath, i + 1, msg);
                let Some((a, b)) = line.split_once('\t') else {
                    return Err(err("expected `src_id<TAB>dst_id`".into()));
                };
                let endpoint = |id: &str, want: usize| -> Result<usize> {
                    match lookup.get(id) {
                        Some(&(t, idx)) if t == want => Ok(idx),
                        Some(&(t, _)) => Err(err(format!(
                            "node {id:?} has type {}, relation expects {}",
                            manifest.types[t].name, manifest.types[want].name
                        ))),
                        None => Err(err(format!("unknown node id {id:?}"))),
                    }
                };
                edges.push((endpoint(a.trim(), src)?, endpoint(b.trim(), dst)?));
            }
            relations.push(Relation { name: r.name.clone(), src_type: src, dst_type: dst, edges });
        }
        let types = manifest.types.iter().map(|t| NodeType { name: t.name.clone(), count: t.count }).collect();
        let hin = Hin::new(types, relations, &manifest.target_type)?;
        for m in &manifest.metapaths {
            MetaPath::parse(&hin, &m.name, &m.sequence)?;
        }

        let features = manifest
            .types
            .iter()
            .map(|t| match t.dim {
                FeatureDim::OneHot => Ok(None),
                FeatureDim::Dense(d) => parse_features(&feature_file(dir, &t.name), t.count, d).map(Some),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { manifest, hin, features, labels, node_ids })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write(&dir.join(MANIFEST_FILE), &self.manifest.to_text())?;
        let mut nodes = String::new();
        for (t, ids) in self.node_ids.iter().enumerate() {
            let name = &self.manifest.types[t].name;
            for (i, id) in ids.iter().enumerate() {
                let label = if t == self.hin.target_type() {
                    self.labels[i].map_or("-".to_string(), |y| y.to_string())
                } else {
                    "-".to_string()
                };
                let _ = writeln!(nodes, "{id}\t{name}\t{label}");
            }
        }
        write(&dir.join(NODES_FILE), &nodes)?;
        for r in self.hin.relations() {
            let mut s = String::new();
            for &(a, b) in &r.edges {
                let _ = writeln!(s, "{}\t{}", self.node_ids[r.src_type][a], self.node_ids[r.dst_type][b]);
            }
            write(&edge_file(dir, &r.name), &s)?;
        }
        for (t, f) in self.features.iter().enumerate() {
            if let Some(x) = f {
                let mut s = format!("{} {}\n", x.rows(), x.cols());
                for r in 0..x.rows() {
                    let row: Vec<String> = x.row(r).iter().map(|v| v.to_string()).collect();
                    s.push_str(&row.join(" "));
                    s.push('\n');
                }
                write(&feature_file(dir, &self.manifest.types[t].name), &s)?;
            }
        }
        Ok(())
    }

    pub fn target_ids(&self) -> &[String] {
        &self.node_ids[self.hin.target_type()]
    }

    pub fn metapaths(&self) -> Result<Vec<MetaPath>> {
        self.manifest.metapaths.iter().map(|m| MetaPath::parse(&self.hin, &m.name, &m.sequence)).collect()
    }

    /// Model inputs over the declared meta-paths, or over `only` when given.
    pub fn graph_inputs<S: Scalar>(&self, only: Option<&[String]>) -> Result<GraphInputs<S>> {
        let mut mps = self.metapaths()?;
        if let Some(names) = only {
            for n in names {
                if !mps.iter().any(|m| m.name() == n) {
                    return Err(Error::Config(format!("unknown meta-path {n:?}")));
                }
            }
            mps.retain(|m| names.iter().any(|n| n == m.name()));
        }
        let given = self
            .features
            .iter()
            .enumerate()
            .filter_map(|(t, f)| f.as_ref().map(|x| (t, Tensor::new(x.rows(), x.cols(), x.data().iter().map(|&v| S::lit(v)).collect()).expect("same shape"))))
            .collect();
        let features = FeatureStore::with_one_hot_defaults(&self.hin, given)?;
        GraphInputs::new(self.hin.clone(), mps, features, self.manifest.classes)
    }

    /// Labels with every target node required to have one.
    pub fn dense_labels(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(v, y)| y.ok_or_else(|| Error::Dataset(format!("target node {} is unlabeled", self.target_ids()[v]))))
            .collect()
    }
}

/// `node_id<TAB>train|val|test` per target node.
pub fn splits_to_text(splits: &SplitSet, ids: &[String]) -> String {
    let mut tag = vec![""; ids.len()];
    for (name, set) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        for &v in set {
            tag[v] = name;
        }
    }
    let mut s = String::new();
    for (id, t) in ids.iter().zip(tag) {
        let _ = writeln!(s, "{id}\t{t}");
    }
    s
}

pub fn load_splits(path: &Path, ids: &[String]) -> Result<SplitSet> {
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::data(path, i + 1, msg);
        let Some((id, which)) = line.split_once('\t') else {
            return Err(err("expected `node_id<TAB>train|val|test`".into()));
        };
        let v = *index.get(id).ok_or_else(|| err(format!("unknown target node {id:?}")))?;
        match which.trim() {
            "train" => train.push(v),
            "val" => val.push(v),
            "test" => test.push(v),
            w => return Err(err(format!("unknown split {w:?}"))),
        }
    }
    SplitSet::new(train, val, test, ids.len()).map_err(|e| Error::data(path, 0, e.to_string()))
}

pub fn save_splits(path: &Path, splits: &SplitSet, ids: &[String]) -> Result<()> {
    write(path, &splits_to_text(splits, ids))
}
