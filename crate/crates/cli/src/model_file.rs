//! Versioned, self-describing text model format.
//!
//! Everything the predictor needs is embedded: method parameters, the
//! per-feature bin maps, original label values for classification, and the
//! per-iteration trees (with each iteration's base class where one applies).
//! Numbers are written with Rust's shortest round-trip float formatting, so
//! save -> load -> save is byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use abcboost_core::binning::FeatureBinMap;
use abcboost_core::logit_boost::{ClassificationModel, ModelKind, TreeSet};
use abcboost_core::lp_boost::RegressionModel;
use abcboost_core::tree::{RegressionTree, TreeNode};

use crate::error::CliError;

const MAGIC: &str = "abcboost-model v1";

/// A trained model plus the label bookkeeping needed at prediction time.
#[derive(Debug, Clone)]
pub enum Model {
    Regression(RegressionModel),
    Classification {
        model: ClassificationModel,
        /// Original label values in sorted order; class `k` reports
        /// `label_values[k]`.
        label_values: Vec<f64>,
    },
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Regression(m) => m.n_features(),
            Model::Classification { model, .. } => model.n_features(),
        }
    }

    pub fn n_iterations(&self) -> usize {
        match self {
            Model::Regression(m) => m.n_iterations(),
            Model::Classification { model, .. } => model.n_iterations(),
        }
    }

    pub fn is_classification(&self) -> bool {
        matches!(self, Model::Classification { .. })
    }

    /// Method token used in flags and file names.
    pub fn method_name(&self) -> &'static str {
        match self {
            Model::Regression(_) => "regression",
            Model::Classification { model, .. } => match model.kind() {
                ModelKind::RobustLogit => "robustlogit",
                ModelKind::Mart => "mart",
                ModelKind::AbcRobustLogit { .. } => "abcrobustlogit",
                ModelKind::AbcMart { .. } => "abcmart",
            },
        }
    }

    /// File-name suffix after the data basename, e.g.
    /// `regression_J20_v0.1_p2` or `abcrobustlogit2g10_J20_v0.1_w0`.
    pub fn file_suffix(&self) -> String {
        match self {
            Model::Regression(m) => {
                format!("regression_J{}_v{}_p{}", m.j(), m.shrinkage(), m.p())
            }
            Model::Classification { model, .. } => match model.kind() {
                ModelKind::RobustLogit => {
                    format!("robustlogit_J{}_v{}", model.j(), model.shrinkage())
                }
                ModelKind::Mart => format!("mart_J{}_v{}", model.j(), model.shrinkage()),
                ModelKind::AbcRobustLogit {
                    search,
                    gap,
                    warmup,
                } => format!(
                    "abcrobustlogit{search}g{gap}_J{}_v{}_w{warmup}",
                    model.j(),
                    model.shrinkage()
                ),
                ModelKind::AbcMart {
                    search,
                    gap,
                    warmup,
                } => format!(
                    "abcmart{search}g{gap}_J{}_v{}_w{warmup}",
                    model.j(),
                    model.shrinkage()
                ),
            },
        }
    }
}

fn write_bin_maps(out: &mut String, maps: &[FeatureBinMap]) {
    let _ = writeln!(out, "binmaps {}", maps.len());
    for map in maps {
        let _ = write!(
            out,
            "map {} {}",
            map.boundaries().len(),
            map.final_bin_len()
        );
        for b in map.boundaries() {
            let _ = write!(out, " {b}");
        }
        out.push('\n');
    }
}

fn write_tree(out: &mut String, tree: &RegressionTree) {
    let _ = write!(out, "tree {}", tree.nodes().len());
    for node in tree.nodes() {
        match node {
            TreeNode::Internal {
                feature,
                threshold_bin,
                left,
                right,
            } => {
                let _ = write!(out, " I {feature} {threshold_bin} {left} {right}");
            }
            TreeNode::Leaf { value } => {
                let _ = write!(out, " L {value}");
            }
        }
    }
    out.push('\n');
}

/// Serialize a model to its text form.
pub fn to_string(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "method {}", model.method_name());
    match model {
        Model::Regression(m) => {
            let _ = writeln!(out, "features {}", m.n_features());
            let _ = writeln!(out, "j {}", m.j());
            let _ = writeln!(out, "v {}", m.shrinkage());
            let _ = writeln!(out, "p {}", m.p());
            write_bin_maps(&mut out, m.maps());
            let _ = writeln!(out, "iterations {}", m.n_iterations());
            for tree in m.trees() {
                write_tree(&mut out, tree);
            }
        }
        Model::Classification {
            model,
            label_values,
        } => {
            let _ = writeln!(out, "features {}", model.n_features());
            let _ = writeln!(out, "j {}", model.j());
            let _ = writeln!(out, "v {}", model.shrinkage());
            match model.kind() {
                ModelKind::AbcRobustLogit {
                    search,
                    gap,
                    warmup,
                }
                | ModelKind::AbcMart {
                    search,
                    gap,
                    warmup,
                } => {
                    let _ = writeln!(out, "search {search}");
                    let _ = writeln!(out, "gap {gap}");
                    let _ = writeln!(out, "warmup {warmup}");
                }
                _ => {}
            }
            let _ = writeln!(out, "classes {}", model.n_classes());
            let _ = write!(out, "labels");
            for v in label_values {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
            write_bin_maps(&mut out, model.maps());
            let _ = writeln!(out, "iterations {}", model.n_iterations());
            for set in model.iteration_sets() {
                let base = match set.base_class {
                    Some(b) => b as i64,
                    None => -1,
                };
                let _ = writeln!(out, "set {base} {}", set.trees.len());
                for (class, tree) in &set.trees {
                    let _ = write!(out, "class {class} ");
                    write_tree(&mut out, tree);
                }
            }
        }
    }
    out
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<(), CliError> {
    fs::write(path, to_string(model))?;
    Ok(())
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, CliError> {
        self.lineno += 1;
        self.iter
            .next()
            .ok_or_else(|| CliError::ModelFormat(format!("unexpected end at line {}", self.lineno)))
    }
}

fn bad(lineno: usize, msg: impl Into<String>) -> CliError {
    CliError::ModelFormat(format!("line {lineno}: {}", msg.into()))
}

fn expect_kv<'a>(lines: &mut Lines<'a>, key: &str) -> Result<&'a str, CliError> {
    let line = lines.next()?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| bad(lines.lineno, format!("expected `{key} ...`, got {line:?}")))
}

fn parse_num<T: std::str::FromStr>(tok: &str, lineno: usize, what: &str) -> Result<T, CliError> {
    tok.parse()
        .map_err(|_| bad(lineno, format!("bad {what}: {tok:?}")))
}

fn read_bin_maps(lines: &mut Lines<'_>, d: usize) -> Result<Vec<FeatureBinMap>, CliError> {
    let count: usize = parse_num(expect_kv(lines, "binmaps")?, lines.lineno, "binmap count")?;
    if count != d {
        return Err(bad(
            lines.lineno,
            format!("binmaps {count} but features {d}"),
        ));
    }
    let mut maps = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next()?;
        let mut tok = line.split_whitespace();
        if tok.next() != Some("map") {
            return Err(bad(lines.lineno, "expected `map ...`"));
        }
        let n_boundaries: usize =
            parse_num(tok.next().unwrap_or(""), lines.lineno, "boundary count")?;
        let final_bin_len: f64 =
            parse_num(tok.next().unwrap_or(""), lines.lineno, "final bin length")?;
        let mut boundaries = Vec::with_capacity(n_boundaries);
        for _ in 0..n_boundaries {
            boundaries.push(parse_num(
                tok.next().unwrap_or(""),
                lines.lineno,
                "boundary",
            )?);
        }
        if tok.next().is_some() {
            return Err(bad(lines.lineno, "trailing tokens after boundaries"));
        }
        maps.push(
            FeatureBinMap::from_parts(boundaries, final_bin_len)
                .map_err(|e| bad(lines.lineno, e.to_string()))?,
        );
    }
    Ok(maps)
}

fn read_tree_tokens<'a>(
    tok: &mut impl Iterator<Item = &'a str>,
    lineno: usize,
) -> Result<RegressionTree, CliError> {
    if tok.next() != Some("tree") {
        return Err(bad(lineno, "expected `tree ...`"));
    }
    let n_nodes: usize = parse_num(tok.next().unwrap_or(""), lineno, "node count")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        match tok.next() {
            Some("I") => {
                let feature = parse_num(tok.next().unwrap_or(""), lineno, "feature")?;
                let threshold_bin = parse_num(tok.next().unwrap_or(""), lineno, "threshold")?;
                let left = parse_num(tok.next().unwrap_or(""), lineno, "left child")?;
                let right = parse_num(tok.next().unwrap_or(""), lineno, "right child")?;
                nodes.push(TreeNode::Internal {
                    feature,
                    threshold_bin,
                    left,
                    right,
                });
            }
            Some("L") => {
                let value = parse_num(tok.next().unwrap_or(""), lineno, "leaf value")?;
                nodes.push(TreeNode::Leaf { value });
            }
            other => return Err(bad(lineno, format!("bad node tag {other:?}"))),
        }
    }
    if tok.next().is_some() {
        return Err(bad(lineno, "trailing tokens after tree nodes"));
    }
    Ok(RegressionTree::from_nodes(nodes))
}

/// Parse a model from its text form.
pub fn from_str(text: &str) -> Result<Model, CliError> {
    let mut lines = Lines {
        iter: text.lines(),
        lineno: 0,
    };
    let magic = lines.next()?;
    if magic != MAGIC {
        return Err(bad(
            lines.lineno,
            format!("expected {MAGIC:?}, got {magic:?}"),
        ));
    }
    let method = expect_kv(&mut lines, "method")?.to_string();
    let d: usize = parse_num(expect_kv(&mut lines, "features")?, lines.lineno, "features")?;
    let j: usize = parse_num(expect_kv(&mut lines, "j")?, lines.lineno, "j")?;
    let v: f64 = parse_num(expect_kv(&mut lines, "v")?, lines.lineno, "v")?;

    if method == "regression" {
        let p: f64 = parse_num(expect_kv(&mut lines, "p")?, lines.lineno, "p")?;
        let maps = read_bin_maps(&mut lines, d)?;
        let m: usize = parse_num(
            expect_kv(&mut lines, "iterations")?,
            lines.lineno,
            "iterations",
        )?;
        let mut trees = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines.next()?;
            trees.push(read_tree_tokens(
                &mut line.split_whitespace(),
                lines.lineno,
            )?);
        }
        return Ok(Model::Regression(RegressionModel::from_parts(
            trees, v, j, p, maps,
        )));
    }

    let abc = match method.as_str() {
        "robustlogit" | "mart" => None,
        "abcrobustlogit" | "abcmart" => {
            let search: usize =
                parse_num(expect_kv(&mut lines, "search")?, lines.lineno, "search")?;
            let gap: usize = parse_num(expect_kv(&mut lines, "gap")?, lines.lineno, "gap")?;
            let warmup: usize =
                parse_num(expect_kv(&mut lines, "warmup")?, lines.lineno, "warmup")?;
            Some((search, gap, warmup))
        }
        other => return Err(bad(lines.lineno, format!("unknown method {other:?}"))),
    };
    let k: usize = parse_num(expect_kv(&mut lines, "classes")?, lines.lineno, "classes")?;
    let labels_line = expect_kv(&mut lines, "labels")?;
    let label_values: Vec<f64> = labels_line
        .split_whitespace()
        .map(|t| parse_num(t, lines.lineno, "label value"))
        .collect::<Result<_, _>>()?;
    if label_values.len() != k {
        return Err(bad(
            lines.lineno,
            format!("{} labels for {k} classes", label_values.len()),
        ));
    }
    let maps = read_bin_maps(&mut lines, d)?;
    let m: usize = parse_num(
        expect_kv(&mut lines, "iterations")?,
        lines.lineno,
        "iterations",
    )?;
    let mut sets = Vec::with_capacity(m);
    for _ in 0..m {
        let header = lines.next()?;
        let mut tok = header.split_whitespace();
        if tok.next() != Some("set") {
            return Err(bad(lines.lineno, "expected `set ...`"));
        }
        let base: i64 = parse_num(tok.next().unwrap_or(""), lines.lineno, "base class")?;
        let n_trees: usize = parse_num(tok.next().unwrap_or(""), lines.lineno, "tree count")?;
        let base_class = if base < 0 { None } else { Some(base as u32) };
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let line = lines.next()?;
            let mut tok = line.split_whitespace();
            if tok.next() != Some("class") {
                return Err(bad(lines.lineno, "expected `class ...`"));
            }
            let class: u32 = parse_num(tok.next().unwrap_or(""), lines.lineno, "class")?;
            trees.push((class, read_tree_tokens(&mut tok, lines.lineno)?));
        }
        sets.push(TreeSet { base_class, trees });
    }

    let kind = match (method.as_str(), abc) {
        ("robustlogit", None) => ModelKind::RobustLogit,
        ("mart", None) => ModelKind::Mart,
        ("abcrobustlogit", Some((search, gap, warmup))) => ModelKind::AbcRobustLogit {
            search,
            gap,
            warmup,
        },
        ("abcmart", Some((search, gap, warmup))) => ModelKind::AbcMart {
            search,
            gap,
            warmup,
        },
        _ => unreachable!("method/abc combination already validated"),
    };
    Ok(Model::Classification {
        model: ClassificationModel::from_parts(kind, k, j, v, maps, sets),
        label_values,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Model, CliError> {
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::Usage(format!(
            "cannot read model {}: {e}",
            path.as_ref().display()
        ))
    })?;
    from_str(&text)
}
