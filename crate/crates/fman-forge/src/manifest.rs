//! JSON manifests: a serialized description of one chart patch — its
//! multiplication, unity, named vector fields, metrics, coidentities,
//! hermitian data, real structures, and flows — plus the built-in example
//! library. Loading parses every expression against the declared
//! coordinates and flavor and reports failures with a JSON pointer.
//!
//! Schema (all expressions are source texts over the declared coordinates):
//!
//! ```json
//! {
//!   "name": "egorov3",
//!   "flavor": "real",
//!   "dimension": 3,
//!   "coordinates": ["u1", "u2", "u3"],
//!   "domain": [[0.25, 1.25], [0.25, 1.25], [0.25, 1.25]],
//!   "multiplication": {"semisimple": true},
//!   "unity": ["1", "1", "1"],
//!   "vector_fields": [{"name": "E", "components": ["1 + u1^2", "1 + u2^2", "1 + u3^2"]}],
//!   "metrics": [{"name": "gt", "diag": ["u1", "u2", "u3"]}],
//!   "coidentities": [{"name": "eps", "components": ["u1", "u2", "u3"]}],
//!   "flows": [{"name": "primary", "velocity": "E", "metric": "gt"}]
//! }
//! ```
//!
//! A non-semisimple multiplication lists explicit one-based entries
//! `[{"i": 1, "j": 2, "k": 2, "expr": "1"}, …]` for i ≤ j; missing entries
//! are zero. A metric is either `{"diag": […]}` or `{"lower": [[g11],
//! [g21, g22], …]}` (rows of the lower triangle). In complex flavor the
//! per-coordinate domain interval applies to both the real and imaginary
//! parts. `hermitian` and `real_structures` carry diagonal entry lists and
//! are only meaningful in complex flavor. Optional `seed` and `tolerance`
//! override the run defaults.

use crate::error::{Error, Result};
use crate::expr::parse;
use crate::expr::{Expr, Flavor};
use crate::field::{mult_index, MultTable};
use crate::fmanifold::FPatch;
use crate::patch::Chart;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub name: String,
    pub flavor: String,
    pub dimension: usize,
    pub coordinates: Vec<String>,
    pub domain: Vec<[f64; 2]>,
    pub multiplication: MultDoc,
    pub unity: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vector_fields: Vec<NamedComponentsDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<MetricDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coidentities: Vec<NamedComponentsDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hermitian: Vec<NamedDiagDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub real_structures: Vec<NamedDiagDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<FlowDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MultDoc {
    Flag { semisimple: bool },
    Entries(Vec<MultEntryDoc>),
}

/// One structure constant c^k_{ij} with one-based indices, i ≤ j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultEntryDoc {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub expr: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedComponentsDoc {
    pub name: String,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedDiagDoc {
    pub name: String,
    pub diag: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowDoc {
    pub name: String,
    pub velocity: String,
    pub metric: String,
}

/// Parsed entries of one named metric.
#[derive(Clone)]
pub enum MetricEntries {
    Diag(Vec<Expr>),
    /// Lower triangle flattened row by row: g11, g21, g22, …
    Lower(Vec<Expr>),
}

#[derive(Clone)]
pub struct Flow {
    pub name: String,
    pub velocity: String,
    pub metric: String,
}

/// A validated manifest: the patch is built, every expression is parsed,
/// and every cross-reference resolves.
pub struct Manifest {
    name: String,
    flavor: Flavor,
    patch: Arc<FPatch>,
    vector_fields: Vec<(String, Vec<Expr>)>,
    metrics: Vec<(String, MetricEntries)>,
    coidentities: Vec<(String, Vec<Expr>)>,
    hermitian: Vec<(String, Vec<Expr>)>,
    real_structures: Vec<(String, Vec<Expr>)>,
    flows: Vec<Flow>,
    seed: Option<u64>,
    tolerance: Option<f64>,
}

fn schema(pointer: impl Into<String>, what: impl std::fmt::Display) -> Error {
    Error::schema(pointer, what.to_string())
}

fn parse_at(
    text: &str,
    coords: &Arc<Vec<String>>,
    flavor: Flavor,
    pointer: impl FnOnce() -> String,
) -> Result<Expr> {
    parse::parse(text, coords, flavor).map_err(|e| schema(pointer(), e))
}

fn unique_names<'a>(
    section: &str,
    names: impl Iterator<Item = &'a str>,
) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    for (idx, name) in names.enumerate() {
        if seen.contains(&name) {
            return Err(schema(
                format!("/{section}/{idx}/name"),
                format!("duplicate name `{name}`"),
            ));
        }
        seen.push(name);
    }
    Ok(())
}

impl Manifest {
    /// Parse and validate a JSON manifest text.
    pub fn from_json(text: &str) -> Result<Manifest> {
        let doc: ManifestDoc = serde_json::from_str(text)?;
        Manifest::from_doc(doc)
    }

    pub fn from_doc(doc: ManifestDoc) -> Result<Manifest> {
        let n = doc.dimension;
        if n == 0 {
            return Err(schema("/dimension", "dimension must be positive"));
        }
        let flavor = match doc.flavor.as_str() {
            "real" => Flavor::Real,
            "complex" => Flavor::Complex,
            other => {
                return Err(schema(
                    "/flavor",
                    format!("expected \"real\" or \"complex\", got \"{other}\""),
                ))
            }
        };
        if doc.coordinates.len() != n {
            return Err(schema(
                "/coordinates",
                format!("expected {n} names, got {}", doc.coordinates.len()),
            ));
        }
        if doc.domain.len() != n {
            return Err(schema(
                "/domain",
                format!("expected {n} intervals, got {}", doc.domain.len()),
            ));
        }
        for (idx, [lo, hi]) in doc.domain.iter().enumerate() {
            if !(lo < hi) {
                return Err(schema(
                    format!("/domain/{idx}"),
                    format!("interval [{lo}, {hi}] is empty"),
                ));
            }
        }
        let coords = Arc::new(doc.coordinates.clone());
        let boxes: Vec<(f64, f64)> = doc.domain.iter().map(|[lo, hi]| (*lo, *hi)).collect();
        let chart = match flavor {
            Flavor::Real => Chart::new_real(doc.name.clone(), Arc::clone(&coords), boxes),
            Flavor::Complex => Chart::new_complex(
                doc.name.clone(),
                Arc::clone(&coords),
                boxes.clone(),
                boxes,
            ),
        };

        let (table, semisimple) = match &doc.multiplication {
            MultDoc::Flag { semisimple: true } => {
                (MultTable::semisimple(&coords, flavor), true)
            }
            MultDoc::Flag { semisimple: false } => {
                return Err(schema(
                    "/multiplication/semisimple",
                    "set to true, or list explicit entries instead",
                ))
            }
            MultDoc::Entries(entries) => {
                let zero = Expr::lit(0.0, &coords, flavor);
                let mut flat = vec![zero; n * (n + 1) / 2 * n];
                let mut filled = vec![false; flat.len()];
                for (idx, e) in entries.iter().enumerate() {
                    let ptr = |field: &str| format!("/multiplication/{idx}/{field}");
                    if e.i == 0 || e.i > n {
                        return Err(schema(ptr("i"), format!("index {} out of 1..={n}", e.i)));
                    }
                    if e.j == 0 || e.j > n {
                        return Err(schema(ptr("j"), format!("index {} out of 1..={n}", e.j)));
                    }
                    if e.i > e.j {
                        return Err(schema(
                            ptr("i"),
                            format!("entries are stored for i <= j, got ({}, {})", e.i, e.j),
                        ));
                    }
                    if e.k == 0 || e.k > n {
                        return Err(schema(ptr("k"), format!("index {} out of 1..={n}", e.k)));
                    }
                    let slot = mult_index(n, e.i - 1, e.j - 1, e.k - 1);
                    if filled[slot] {
                        return Err(schema(
                            ptr("expr"),
                            format!("duplicate entry ({}, {}; {})", e.i, e.j, e.k),
                        ));
                    }
                    filled[slot] = true;
                    flat[slot] = parse_at(&e.expr, &coords, flavor, || ptr("expr"))?;
                }
                (MultTable::from_entries(n, flat), false)
            }
        };

        if doc.unity.len() != n {
            return Err(schema(
                "/unity",
                format!("expected {n} components, got {}", doc.unity.len()),
            ));
        }
        let unity = doc
            .unity
            .iter()
            .enumerate()
            .map(|(idx, t)| parse_at(t, &coords, flavor, || format!("/unity/{idx}")))
            .collect::<Result<Vec<_>>>()?;
        let patch = FPatch::new(chart, table, unity, semisimple);

        let named_components = |section: &str,
                                docs: &[NamedComponentsDoc]|
         -> Result<Vec<(String, Vec<Expr>)>> {
            unique_names(section, docs.iter().map(|d| d.name.as_str()))?;
            docs.iter()
                .enumerate()
                .map(|(idx, d)| {
                    if d.components.len() != n {
                        return Err(schema(
                            format!("/{section}/{idx}/components"),
                            format!("expected {n} components, got {}", d.components.len()),
                        ));
                    }
                    let exprs = d
                        .components
                        .iter()
                        .enumerate()
                        .map(|(ci, t)| {
                            parse_at(t, &coords, flavor, || {
                                format!("/{section}/{idx}/components/{ci}")
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((d.name.clone(), exprs))
                })
                .collect()
        };
        let vector_fields = named_components("vector_fields", &doc.vector_fields)?;
        let coidentities = named_components("coidentities", &doc.coidentities)?;

        unique_names("metrics", doc.metrics.iter().map(|d| d.name.as_str()))?;
        let mut metrics = Vec::with_capacity(doc.metrics.len());
        for (idx, d) in doc.metrics.iter().enumerate() {
            let entries = match (&d.diag, &d.lower) {
                (Some(diag), None) => {
                    if diag.len() != n {
                        return Err(schema(
                            format!("/metrics/{idx}/diag"),
                            format!("expected {n} entries, got {}", diag.len()),
                        ));
                    }
                    let exprs = diag
                        .iter()
                        .enumerate()
                        .map(|(di, t)| {
                            parse_at(t, &coords, flavor, || {
                                format!("/metrics/{idx}/diag/{di}")
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    MetricEntries::Diag(exprs)
                }
                (None, Some(rows)) => {
                    if rows.len() != n {
                        return Err(schema(
                            format!("/metrics/{idx}/lower"),
                            format!("expected {n} rows, got {}", rows.len()),
                        ));
                    }
                    let mut flat = Vec::with_capacity(n * (n + 1) / 2);
                    for (ri, row) in rows.iter().enumerate() {
                        if row.len() != ri + 1 {
                            return Err(schema(
                                format!("/metrics/{idx}/lower/{ri}"),
                                format!("row {} must have {} entries, got {}", ri + 1, ri + 1, row.len()),
                            ));
                        }
                        for (ci, t) in row.iter().enumerate() {
                            flat.push(parse_at(t, &coords, flavor, || {
                                format!("/metrics/{idx}/lower/{ri}/{ci}")
                            })?);
                        }
                    }
                    MetricEntries::Lower(flat)
                }
                _ => {
                    return Err(schema(
                        format!("/metrics/{idx}"),
                        "give exactly one of \"diag\" or \"lower\"",
                    ))
                }
            };
            metrics.push((d.name.clone(), entries));
        }

        let named_diag = |section: &str,
                          docs: &[NamedDiagDoc]|
         -> Result<Vec<(String, Vec<Expr>)>> {
            if !docs.is_empty() && flavor != Flavor::Complex {
                return Err(schema(
                    format!("/{section}"),
                    "only meaningful in complex flavor",
                ));
            }
            unique_names(section, docs.iter().map(|d| d.name.as_str()))?;
            docs.iter()
                .enumerate()
                .map(|(idx, d)| {
                    if d.diag.len() != n {
                        return Err(schema(
                            format!("/{section}/{idx}/diag"),
                            format!("expected {n} entries, got {}", d.diag.len()),
                        ));
                    }
                    let exprs = d
                        .diag
                        .iter()
                        .enumerate()
                        .map(|(di, t)| {
                            parse_at(t, &coords, flavor, || {
                                format!("/{section}/{idx}/diag/{di}")
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((d.name.clone(), exprs))
                })
                .collect()
        };
        let hermitian = named_diag("hermitian", &doc.hermitian)?;
        let real_structures = named_diag("real_structures", &doc.real_structures)?;

        unique_names("flows", doc.flows.iter().map(|d| d.name.as_str()))?;
        let mut flows = Vec::with_capacity(doc.flows.len());
        for (idx, d) in doc.flows.iter().enumerate() {
            if !vector_fields.iter().any(|(name, _)| *name == d.velocity) {
                return Err(schema(
                    format!("/flows/{idx}/velocity"),
                    format!("undefined vector field `{}`", d.velocity),
                ));
            }
            if !metrics.iter().any(|(name, _)| *name == d.metric) {
                return Err(schema(
                    format!("/flows/{idx}/metric"),
                    format!("undefined metric `{}`", d.metric),
                ));
            }
            flows.push(Flow {
                name: d.name.clone(),
                velocity: d.velocity.clone(),
                metric: d.metric.clone(),
            });
        }

        Ok(Manifest {
            name: doc.name,
            flavor,
            patch,
            vector_fields,
            metrics,
            coidentities,
            hermitian,
            real_structures,
            flows,
            seed: doc.seed,
            tolerance: doc.tolerance,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn patch(&self) -> &Arc<FPatch> {
        &self.patch
    }

    pub fn dim(&self) -> usize {
        self.patch.dim()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn tolerance(&self) -> Option<f64> {
        self.tolerance
    }

    pub fn vector_fields(&self) -> &[(String, Vec<Expr>)] {
        &self.vector_fields
    }

    pub fn metrics(&self) -> &[(String, MetricEntries)] {
        &self.metrics
    }

    pub fn coidentities(&self) -> &[(String, Vec<Expr>)] {
        &self.coidentities
    }

    pub fn hermitian(&self) -> &[(String, Vec<Expr>)] {
        &self.hermitian
    }

    pub fn real_structures(&self) -> &[(String, Vec<Expr>)] {
        &self.real_structures
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn vector_field(&self, name: &str) -> Result<&Vec<Expr>> {
        lookup(&self.vector_fields, name, "vector field")
    }

    pub fn metric(&self, name: &str) -> Result<&MetricEntries> {
        lookup(&self.metrics, name, "metric")
    }

    pub fn coidentity(&self, name: &str) -> Result<&Vec<Expr>> {
        lookup(&self.coidentities, name, "coidentity")
    }

    pub fn hermitian_entry(&self, name: &str) -> Result<&Vec<Expr>> {
        lookup(&self.hermitian, name, "hermitian data")
    }

    pub fn real_structure(&self, name: &str) -> Result<&Vec<Expr>> {
        lookup(&self.real_structures, name, "real structure")
    }

    pub fn flow(&self, name: &str) -> Result<&Flow> {
        self.flows
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::missing("flow", name))
    }

    /// The vector field a suite uses when none is named: `E` if declared,
    /// otherwise the first one.
    pub fn default_field(&self) -> Option<&str> {
        if self.vector_fields.iter().any(|(n, _)| n == "E") {
            return Some("E");
        }
        self.vector_fields.first().map(|(n, _)| n.as_str())
    }

    pub fn default_metric(&self) -> Option<&str> {
        self.metrics.first().map(|(n, _)| n.as_str())
    }
}

fn lookup<'a, T>(items: &'a [(String, T)], name: &str, kind: &str) -> Result<&'a T> {
    items
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::missing(kind, name))
}

/// Load a manifest from a file path.
pub fn load_manifest(path: impl AsRef<std::path::Path>) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    Manifest::from_json(&text)
}

/// Names and JSON sources of the built-in example library, in listing
/// order.
pub fn builtin_registry() -> Vec<(&'static str, &'static str)> {
    vec![
        ("semisimple2", include_str!("../builtins/semisimple2.json")),
        ("semisimple3", include_str!("../builtins/semisimple3.json")),
        ("semisimple4", include_str!("../builtins/semisimple4.json")),
        ("hertling2d", include_str!("../builtins/hertling2d.json")),
        ("egorov3", include_str!("../builtins/egorov3.json")),
        ("flows1d", include_str!("../builtins/flows1d.json")),
        ("ttdiag2", include_str!("../builtins/ttdiag2.json")),
    ]
}

/// Load a builtin by name.
pub fn load_builtin(name: &str) -> Result<Manifest> {
    let source = builtin_registry()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::missing("builtin", name))?;
    Manifest::from_json(source)
}

/// Resolve an argument as a builtin name first, then as a file path.
pub fn load_builtin_or_path(arg: &str) -> Result<Manifest> {
    if builtin_registry().iter().any(|(n, _)| *n == arg) {
        return load_builtin(arg);
    }
    if !std::path::Path::new(arg).exists() {
        return Err(Error::invalid(format!(
            "`{arg}` is neither a builtin manifest (see `list-builtins`) nor an existing file"
        )));
    }
    load_manifest(arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_loads_and_is_self_consistent() {
        for (name, _) in builtin_registry() {
            let m = load_builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(m.name(), name);
            assert!(m.dim() >= 1);
        }
        assert_eq!(load_builtin("semisimple3").unwrap().dim(), 3);
    }

    #[test]
    fn undefined_flow_metric_reports_the_json_pointer() {
        let text = r#"{
            "name": "bad", "flavor": "real", "dimension": 1,
            "coordinates": ["u1"], "domain": [[0.0, 1.0]],
            "multiplication": {"semisimple": true}, "unity": ["1"],
            "vector_fields": [{"name": "v", "components": ["u1"]}],
            "metrics": [{"name": "gt", "diag": ["1"]}],
            "flows": [{"name": "a", "velocity": "v", "metric": "gX"}]
        }"#;
        match Manifest::from_json(text) {
            Err(Error::Schema { pointer, what }) => {
                assert_eq!(pointer, "/flows/0/metric");
                assert!(what.contains("gX"), "{what}");
            }
            other => panic!("expected schema error, got {:?}", other.err().map(|e| e.to_string())),
        }
    }

    #[test]
    fn conj_in_real_flavor_is_a_parse_error_with_pointer() {
        let text = r#"{
            "name": "bad", "flavor": "real", "dimension": 1,
            "coordinates": ["u1"], "domain": [[0.0, 1.0]],
            "multiplication": {"semisimple": true}, "unity": ["1"],
            "vector_fields": [{"name": "v", "components": ["conj(u1)"]}]
        }"#;
        match Manifest::from_json(text) {
            Err(Error::Schema { pointer, what }) => {
                assert_eq!(pointer, "/vector_fields/0/components/0");
                assert!(what.contains("conj"), "{what}");
            }
            other => panic!("expected schema error, got {:?}", other.err().map(|e| e.to_string())),
        }
    }

    #[test]
    fn explicit_multiplication_entries_fill_the_table() {
        let m = load_builtin("hertling2d").unwrap();
        let table = m.patch().mult_table();
        // c^1_{11} = 1, c^2_{12} = 1, everything else zero.
        let p = |e: &Expr| e.eval(&[0.5, 0.75], 0).unwrap().value();
        assert_eq!(p(table.entry(0, 0, 0)), 1.0);
        assert_eq!(p(table.entry(0, 1, 1)), 1.0);
        assert_eq!(p(table.entry(0, 0, 1)), 0.0);
        assert_eq!(p(table.entry(1, 1, 0)), 0.0);
        assert_eq!(p(table.entry(1, 1, 1)), 0.0);
    }

    #[test]
    fn schema_violations_carry_precise_pointers() {
        let base = |mult: &str, unity: &str| {
            format!(
                r#"{{
                    "name": "t", "flavor": "real", "dimension": 2,
                    "coordinates": ["u1", "u2"],
                    "domain": [[0.0, 1.0], [0.0, 1.0]],
                    "multiplication": {mult}, "unity": {unity}
                }}"#
            )
        };
        let ptr = |text: &str| match Manifest::from_json(text) {
            Err(Error::Schema { pointer, .. }) => pointer,
            other => panic!("expected schema error, got {:?}", other.err().map(|e| e.to_string())),
        };
        assert_eq!(
            ptr(&base("{\"semisimple\": true}", "[\"1\"]")),
            "/unity"
        );
        assert_eq!(
            ptr(&base("{\"semisimple\": false}", "[\"1\", \"1\"]")),
            "/multiplication/semisimple"
        );
        assert_eq!(
            ptr(&base(
                "[{\"i\": 2, \"j\": 1, \"k\": 1, \"expr\": \"1\"}]",
                "[\"1\", \"1\"]"
            )),
            "/multiplication/0/i"
        );
        assert_eq!(
            ptr(&base(
                "[{\"i\": 1, \"j\": 1, \"k\": 3, \"expr\": \"1\"}]",
                "[\"1\", \"1\"]"
            )),
            "/multiplication/0/k"
        );
        assert_eq!(
            ptr(&base(
                "[{\"i\": 1, \"j\": 1, \"k\": 1, \"expr\": \"1 +\"}]",
                "[\"1\", \"1\"]"
            )),
            "/multiplication/0/expr"
        );

        // Hermitian data on a real chart is rejected as a section.
        let text = r#"{
            "name": "t", "flavor": "real", "dimension": 1,
            "coordinates": ["u1"], "domain": [[0.0, 1.0]],
            "multiplication": {"semisimple": true}, "unity": ["1"],
            "hermitian": [{"name": "H", "diag": ["1"]}]
        }"#;
        assert_eq!(ptr(text), "/hermitian");

        // Lower-triangle rows must have matching lengths.
        let text = r#"{
            "name": "t", "flavor": "real", "dimension": 2,
            "coordinates": ["u1", "u2"], "domain": [[0.0, 1.0], [0.0, 1.0]],
            "multiplication": {"semisimple": true}, "unity": ["1", "1"],
            "metrics": [{"name": "g", "lower": [["1", "0"], ["0", "1"]]}]
        }"#;
        assert_eq!(ptr(text), "/metrics/0/lower/0");
    }

    #[test]
    fn malformed_json_and_missing_files_surface_their_own_errors() {
        match Manifest::from_json("{ not json") {
            Err(Error::Json(_)) => {}
            other => panic!("expected json error, got {:?}", other.err().map(|e| e.to_string())),
        }
        match load_manifest("/nonexistent/manifest.json") {
            Err(Error::Io(_)) => {}
            other => panic!("expected i/o error, got {:?}", other.err().map(|e| e.to_string())),
        }
        match load_builtin("nosuch") {
            Err(Error::MissingObject { kind, name }) => {
                assert_eq!(kind, "builtin");
                assert_eq!(name, "nosuch");
            }
            other => panic!("expected missing object, got {:?}", other.err().map(|e| e.to_string())),
        }
    }

    #[test]
    fn lookups_resolve_names_and_defaults() {
        let m = load_builtin("egorov3").unwrap();
        assert!(m.vector_field("E").is_ok());
        assert!(m.metric("gt").is_ok());
        assert!(m.coidentity("eps").is_ok());
        assert_eq!(m.default_field(), Some("E"));
        assert_eq!(m.default_metric(), Some("gt"));
        assert!(matches!(
            m.vector_field("missing"),
            Err(Error::MissingObject { .. })
        ));
        assert_eq!(m.flow("primary").unwrap().metric, "gt");

        let t = load_builtin("ttdiag2").unwrap();
        assert_eq!(t.flavor(), Flavor::Complex);
        assert!(t.hermitian_entry("H").is_ok());
        assert!(t.real_structure("k").is_ok());
    }
}
