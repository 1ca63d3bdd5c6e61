//! Ballot files and JSON model documents.
//!
//! Ballot grammar, one record per line:
//!
//! ```text
//! format_version: 1        # optional, must precede the header
//! items: a, b, c, d        # header
//! a|b,c : 12               # blocks separated by `|`, ties by `,`
//! c                        # count defaults to 1; unnamed items tie last
//! ```
//!
//! `#` starts a comment. Duplicate records merge by summing counts.

use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::condition::MixtureModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::items::{ItemSet, ItemUniverse};
use crate::model::RiffleModel;

pub const FORMAT_VERSION: u64 = 1;

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, message: message.into() })
}

fn reword(e: Error) -> String {
    match e {
        Error::Domain(m) => m,
        other => other.to_string(),
    }
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut data: Option<Dataset> = None;
    let mut version_seen = false;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some(ref mut d) = data else {
            let (key, value) = line.split_once(':').map(|(a, b)| (a.trim(), b.trim())).unwrap_or((line, ""));
            match key {
                "format_version" if !version_seen => {
                    if value.parse::<u64>() != Ok(FORMAT_VERSION) {
                        return parse_err(line_no, format!("unsupported format_version {value:?}"));
                    }
                    version_seen = true;
                }
                "items" => {
                    let labels: Vec<&str> = value.split(',').map(str::trim).collect();
                    let u = ItemUniverse::new(&labels).or_else(|e| parse_err(line_no, reword(e)))?;
                    data = Some(Dataset::new(Arc::new(u)));
                }
                _ => return parse_err(line_no, "expected the `items:` header before any record"),
            }
            continue;
        };
        let (blocks, count) = match line.rsplit_once(':') {
            Some((b, c)) => {
                let c = c.trim();
                let count = match c.parse::<u64>() {
                    Ok(v) if v >= 1 => v,
                    Ok(_) => return parse_err(line_no, "count must be at least 1"),
                    Err(_) if c.starts_with('-') => return parse_err(line_no, "count must be at least 1"),
                    Err(_) => return parse_err(line_no, format!("invalid count {c:?}")),
                };
                (b, count)
            }
            None => (line, 1),
        };
        let obs = d.universe().parse_observation(blocks).or_else(|e| parse_err(line_no, reword(e)))?;
        d.push(obs, count).or_else(|e| parse_err(line_no, reword(e)))?;
    }
    data.ok_or(Error::Parse { line: text.lines().count().max(1), message: "missing `items:` header".into() })
}

/// Canonical text: version line, header, then one `blocks : count` line per
/// record in dataset order.
pub fn write_dataset(data: &Dataset) -> String {
    let u = data.universe();
    let mut s = format!("format_version: {FORMAT_VERSION}\nitems: {}\n", u.labels().join(", "));
    for r in data.records() {
        s.push_str(&format!("{} : {}\n", u.render_partial(&r.observation), r.count));
    }
    s
}

fn schema<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T> {
    Err(Error::Schema { path: path.into(), message: message.into() })
}

pub fn hierarchy_to_json(h: &Hierarchy, u: &ItemUniverse) -> Value {
    match h {
        Hierarchy::Leaf(s) => json!({ "leaf": s.iter().map(|i| u.label(i)).collect::<Vec<_>>() }),
        Hierarchy::Split { left, right, .. } => {
            json!({ "split": [hierarchy_to_json(left, u), hierarchy_to_json(right, u)] })
        }
    }
}

pub fn hierarchy_from_json(v: &Value, u: &ItemUniverse, path: &str) -> Result<Hierarchy> {
    let Some(obj) = v.as_object().filter(|o| o.len() == 1) else {
        return schema(path, "expected an object with exactly one of `leaf` or `split`");
    };
    let (key, inner) = obj.iter().next().unwrap();
    let path = format!("{path}.{key}");
    let Some(arr) = inner.as_array() else {
        return schema(path, "expected an array");
    };
    match key.as_str() {
        "leaf" => {
            let mut set = ItemSet::EMPTY;
            for (j, lab) in arr.iter().enumerate() {
                let Some(i) = lab.as_str().and_then(|l| u.index_of(l)) else {
                    return schema(format!("{path}[{j}]"), format!("unknown item {lab}"));
                };
                if !set.insert(i) {
                    return schema(format!("{path}[{j}]"), format!("duplicate item {lab}"));
                }
            }
            Hierarchy::leaf(set).or_else(|e| schema(path, reword(e)))
        }
        "split" => {
            if arr.len() != 2 {
                return schema(path, "a split has exactly two children");
            }
            let l = hierarchy_from_json(&arr[0], u, &format!("{path}[0]"))?;
            let r = hierarchy_from_json(&arr[1], u, &format!("{path}[1]"))?;
            Hierarchy::split(l, r).or_else(|e| schema(path, reword(e)))
        }
        other => schema(path, format!("unknown node kind {other:?}")),
    }
}

fn get<'a>(obj: &'a Map<String, Value>, prefix: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Schema { path: join(prefix, key), message: "missing field".into() })
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn check_fields(obj: &Map<String, Value>, prefix: &str, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => schema(join(prefix, k), "unknown field"),
        None => Ok(()),
    }
}

fn check_version(obj: &Map<String, Value>, prefix: &str) -> Result<()> {
    match get(obj, prefix, "format_version")?.as_u64() {
        Some(FORMAT_VERSION) => Ok(()),
        _ => schema(join(prefix, "format_version"), format!("expected {FORMAT_VERSION}")),
    }
}

pub fn model_to_json(m: &RiffleModel) -> Value {
    json!({
        "format_version": FORMAT_VERSION,
        "universe": m.universe().labels(),
        "hierarchy": hierarchy_to_json(m.hierarchy(), m.universe()),
        "tables": m.tables(),
    })
}

pub fn model_from_json(v: &Value, prefix: &str) -> Result<RiffleModel> {
    let Some(obj) = v.as_object() else {
        return schema(if prefix.is_empty() { "$" } else { prefix }, "expected an object");
    };
    check_fields(obj, prefix, &["format_version", "universe", "hierarchy", "tables"])?;
    check_version(obj, prefix)?;
    let upath = join(prefix, "universe");
    let Some(labels) = get(obj, prefix, "universe")?.as_array() else {
        return schema(upath, "expected an array of labels");
    };
    let mut names = Vec::with_capacity(labels.len());
    for (j, l) in labels.iter().enumerate() {
        match l.as_str() {
            Some(s) => names.push(s),
            None => return schema(format!("{upath}[{j}]"), "expected a string"),
        }
    }
    let u = Arc::new(ItemUniverse::new(&names).or_else(|e| schema(&upath, reword(e)))?);
    let hpath = join(prefix, "hierarchy");
    let h = hierarchy_from_json(get(obj, prefix, "hierarchy")?, &u, &hpath)?;
    if h.items() != u.all() {
        return schema(hpath, "hierarchy does not cover the universe");
    }
    let tpath = join(prefix, "tables");
    let Some(rows) = get(obj, prefix, "tables")?.as_array() else {
        return schema(tpath, "expected an array of tables");
    };
    let mut tables = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let Some(row) = row.as_array() else {
            return schema(format!("{tpath}[{k}]"), "expected an array of numbers");
        };
        let mut t = Vec::with_capacity(row.len());
        for (j, x) in row.iter().enumerate() {
            match x.as_f64() {
                Some(x) => t.push(x),
                None => return schema(format!("{tpath}[{k}][{j}]"), "expected a number"),
            }
        }
        tables.push(t);
    }
    RiffleModel::from_tables(u, h, tables).map_err(|e| match e {
        Error::Schema { path, message } => Error::Schema { path: join(prefix, &path), message },
        other => Error::Schema { path: tpath.clone(), message: reword(other) },
    })
}

/// Pretty JSON. Numbers use the shortest decimal that parses back to the
/// same double, so the round trip is value-exact.
pub fn save_model(m: &RiffleModel) -> String {
    let mut s = serde_json::to_string_pretty(&model_to_json(m)).unwrap();
    s.push('\n');
    s
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Schema {
        path: "$".into(),
        message: format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()),
    })
}

pub fn load_model(text: &str) -> Result<RiffleModel> {
    model_from_json(&parse_json(text)?, "")
}

pub fn save_mixture(mix: &MixtureModel) -> String {
    let comps: Vec<Value> =
        mix.components().iter().map(|(w, m)| json!({ "weight": w, "model": model_to_json(m) })).collect();
    let mut s =
        serde_json::to_string_pretty(&json!({ "format_version": FORMAT_VERSION, "components": comps })).unwrap();
    s.push('\n');
    s
}

pub fn load_mixture(text: &str) -> Result<MixtureModel> {
    let v = parse_json(text)?;
    let Some(obj) = v.as_object() else {
        return schema("$", "expected an object");
    };
    check_fields(obj, "", &["format_version", "components"])?;
    check_version(obj, "")?;
    let Some(comps) = get(obj, "", "components")?.as_array() else {
        return schema("components", "expected an array");
    };
    let mut out = Vec::with_capacity(comps.len());
    for (k, c) in comps.iter().enumerate() {
        let p = format!("components[{k}]");
        let Some(co) = c.as_object() else {
            return schema(p, "expected an object");
        };
        check_fields(co, &p, &["weight", "model"])?;
        let Some(w) = get(co, &p, "weight")?.as_f64() else {
            return schema(format!("{p}.weight"), "expected a number");
        };
        out.push((w, model_from_json(get(co, &p, "model")?, &format!("{p}.model"))?));
    }
    MixtureModel::new(out).or_else(|e| schema("components", reword(e)))
}

/// Reads a structure from either a bare hierarchy document or a model
/// document (whose tables are ignored), resolving labels in `u`.
pub fn load_hierarchy(text: &str, u: &ItemUniverse) -> Result<Hierarchy> {
    let v = parse_json(text)?;
    let h = match v.get("hierarchy") {
        Some(inner) => {
            if let Some(labels) = v.get("universe") {
                if labels != &json!(u.labels()) {
                    return schema("universe", "structure file is over a different universe");
                }
            }
            hierarchy_from_json(inner, u, "hierarchy")?
        }
        None => hierarchy_from_json(&v, u, "$")?,
    };
    if h.items() != u.all() {
        return schema("hierarchy", "hierarchy does not cover the universe");
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::seeded_rng;

    const ELECTION_ROWS: &str = "items: 1, 2, 3, 4, 5\n5|3|4|2|1 : 37\n3|4|5|1|2 : 30\n1|2|3 : 27\n3 : 1198\n4|1|3 : 15\n1|3 : 302\n3|1|2|5|4 : 186\n";

    #[test]
    fn election_rows_parse() {
        let d = parse_dataset(ELECTION_ROWS).unwrap();
        let u = d.universe().clone();
        assert_eq!(u.render_partial(&d.records()[3].observation), "3|1,2,4,5");
        assert_eq!(d.records()[3].count, 1198);
        assert!(d.records()[0].observation.is_full());
        assert_eq!(parse_dataset(&write_dataset(&d)).unwrap(), d);
    }

    #[test]
    fn line_errors() {
        let e = parse_dataset("items: 1, 2\n# c\n1|1|2 : 4\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, ref message } if message.contains("duplicate item")));
        let e = parse_dataset("items: 1, 2\n1 : 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(matches!(parse_dataset("items: 1, 2\n7\n").unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(parse_dataset("items: 1, 2\n1||2\n").unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(parse_dataset("1|2\n").unwrap_err(), Error::Parse { line: 1, .. }));
        assert!(parse_dataset("").is_err());
    }

    #[test]
    fn crlf_comments_and_version() {
        let d = parse_dataset("format_version: 1\r\nitems: a, b\r\n# x\r\nb # trailing\r\na|b : 2\r\n").unwrap();
        assert_eq!(d.len(), 2);
        assert!(parse_dataset("format_version: 2\nitems: a\n").is_err());
    }

    #[test]
    fn header_only_round_trip() {
        let d = parse_dataset("items: a, b, c\n").unwrap();
        assert!(d.is_empty());
        assert_eq!(write_dataset(&d), "format_version: 1\nitems: a, b, c\n");
    }

    #[test]
    fn model_round_trip_is_exact() {
        let u = Arc::new(ItemUniverse::new(&["x", "y", "z", "w"]).unwrap());
        let h = Hierarchy::split_sets(ItemSet::from_iter([0, 3]), ItemSet::from_iter([1, 2])).unwrap();
        let m = RiffleModel::random(u, h, 1.0, &mut seeded_rng(2)).unwrap();
        let back = load_model(&save_model(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_model(&back), save_model(&m));
    }

    #[test]
    fn schema_paths() {
        let u = Arc::new(ItemUniverse::numbered(2).unwrap());
        let m = RiffleModel::uniform(u, Hierarchy::split_sets(ItemSet::singleton(0), ItemSet::singleton(1)).unwrap())
            .unwrap();
        let mut v = model_to_json(&m);
        v["tables"][0][1] = json!(-0.5);
        let e = load_model(&v.to_string()).unwrap_err();
        assert!(matches!(e, Error::Schema { ref path, .. } if path == "tables[0][1]"), "{e}");
        let mut v = model_to_json(&m);
        v["hierarchy"]["split"][1]["leaf"][0] = json!("9");
        let e = load_model(&v.to_string()).unwrap_err();
        assert!(matches!(e, Error::Schema { ref path, .. } if path == "hierarchy.split[1].leaf[0]"), "{e}");
        let mut v = model_to_json(&m);
        v["extra"] = json!(1);
        assert!(matches!(load_model(&v.to_string()).unwrap_err(), Error::Schema { ref path, .. } if path == "extra"));
        assert!(load_model("{").is_err());
    }

    #[test]
    fn mixture_round_trip() {
        let u = Arc::new(ItemUniverse::numbered(3).unwrap());
        let h = Hierarchy::split_sets(ItemSet::singleton(0), ItemSet::from_iter([1, 2])).unwrap();
        let a = RiffleModel::random(u.clone(), h.clone(), 1.0, &mut seeded_rng(1)).unwrap();
        let b = RiffleModel::random(u, h, 1.0, &mut seeded_rng(2)).unwrap();
        let mix = MixtureModel::new(vec![(0.25, a), (0.75, b)]).unwrap();
        let back = load_mixture(&save_mixture(&mix)).unwrap();
        assert_eq!(back.components(), mix.components());
    }

    #[test]
    fn hierarchy_documents() {
        let u = ItemUniverse::numbered(3).unwrap();
        let h = Hierarchy::split_sets(ItemSet::singleton(1), ItemSet::from_iter([0, 2])).unwrap();
        let bare = hierarchy_to_json(&h, &u).to_string();
        assert_eq!(load_hierarchy(&bare, &u).unwrap(), h);
        let other = ItemUniverse::numbered(4).unwrap();
        assert!(load_hierarchy(&bare, &other).is_err());
    }
}
