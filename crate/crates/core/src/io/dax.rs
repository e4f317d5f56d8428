//! Import of a Pegasus DAX subset: jobs, their `uses` file declarations, and
//! explicit `child`/`parent` dependencies. Anything else is rejected by name.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use roxmltree::{Document, Node};

use super::IoError;
use crate::workflow::{DataEdge, Task, Workflow};

/// Speed of the machine DAX runtimes were measured on, in MIPS.
pub const DEFAULT_REFERENCE_MIPS: f64 = 1000.0;

const BYTES_PER_MB: f64 = 1e6;

pub fn import_dax(path: impl AsRef<Path>, reference_mips: f64) -> Result<Workflow, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    let fallback = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dax");
    parse_dax(&text, &path.display().to_string(), fallback, reference_mips)
}

#[derive(Default)]
struct Job {
    inputs: BTreeMap<String, f64>,
    outputs: BTreeMap<String, f64>,
}

struct Ctx<'a, 'i> {
    doc: &'a Document<'i>,
    origin: &'a str,
}

impl Ctx<'_, '_> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn err(&self, node: Node, message: impl Into<String>) -> IoError {
        IoError::Dax { origin: self.origin.to_string(), line: self.line(node), message: message.into() }
    }

    fn unsupported(&self, node: Node) -> IoError {
        IoError::Unsupported {
            origin: self.origin.to_string(),
            line: self.line(node),
            element: node.tag_name().name().to_string(),
        }
    }

    fn attr<'n>(&self, node: Node<'n, '_>, name: &str) -> Result<&'n str, IoError> {
        node.attribute(name)
            .ok_or_else(|| self.err(node, format!("<{}> is missing `{name}`", node.tag_name().name())))
    }

    fn number(&self, node: Node, name: &str) -> Result<f64, IoError> {
        let raw = self.attr(node, name)?;
        raw.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(node, format!("`{name}` is not a number: {raw:?}")))
    }
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|n| n.is_element())
}

/// Parses DAX text. `fallback_name` is used when `<adag>` carries no name.
pub fn parse_dax(
    text: &str,
    origin: &str,
    fallback_name: &str,
    reference_mips: f64,
) -> Result<Workflow, IoError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        IoError::Syntax { origin: origin.to_string(), line: pos.row as usize, column: pos.col as usize, message: e.to_string() }
    })?;
    let cx = Ctx { doc: &doc, origin };
    let root = doc.root_element();
    if root.tag_name().name() != "adag" {
        return Err(cx.unsupported(root));
    }
    let name = root.attribute("name").unwrap_or(fallback_name).to_string();

    let mut tasks = Vec::new();
    let mut jobs: BTreeMap<String, Job> = BTreeMap::new();
    let mut deps: Vec<(String, String)> = Vec::new();

    for el in elements(root) {
        match el.tag_name().name() {
            "job" => {
                let id = cx.attr(el, "id")?.to_string();
                let runtime = cx.number(el, "runtime")?;
                let mut job = Job::default();
                for child in elements(el) {
                    match child.tag_name().name() {
                        "uses" => {
                            let file = child
                                .attribute("file")
                                .or_else(|| child.attribute("name"))
                                .ok_or_else(|| cx.err(child, "<uses> is missing `file`"))?;
                            let size = match child.attribute("size") {
                                Some(_) => cx.number(child, "size")? / BYTES_PER_MB,
                                None => 0.0,
                            };
                            let slot = match cx.attr(child, "link")? {
                                "input" => &mut job.inputs,
                                "output" => &mut job.outputs,
                                other => return Err(cx.err(child, format!("unsupported link {other:?}"))),
                            };
                            slot.insert(file.to_string(), size);
                        }
                        "argument" => {
                            if let Some(bad) = elements(child).find(|n| n.tag_name().name() != "filename") {
                                return Err(cx.unsupported(bad));
                            }
                        }
                        _ => return Err(cx.unsupported(child)),
                    }
                }
                tasks.push(Task::new(id.clone(), runtime * reference_mips));
                jobs.insert(id, job);
            }
            "child" => {
                let child = cx.attr(el, "ref")?.to_string();
                for p in elements(el) {
                    if p.tag_name().name() != "parent" {
                        return Err(cx.unsupported(p));
                    }
                    deps.push((cx.attr(p, "ref")?.to_string(), child.clone()));
                }
            }
            _ => return Err(cx.unsupported(el)),
        }
    }

    let empty = Job::default();
    let edges = deps
        .into_iter()
        .map(|(parent, child)| {
            let out = &jobs.get(&parent).unwrap_or(&empty).outputs;
            let inp = &jobs.get(&child).unwrap_or(&empty).inputs;
            let volume = out.iter().filter(|(f, _)| inp.contains_key(*f)).map(|(_, s)| s).sum();
            DataEdge::new(parent, child, volume)
        })
        .collect();

    let wf = Workflow::from_parts(name, tasks, edges, None);
    let report = wf.validate();
    if report.is_empty() {
        Ok(wf)
    } else {
        Err(IoError::Invalid { origin: origin.to_string(), report })
    }
}
