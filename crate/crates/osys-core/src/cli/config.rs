//! Config schema: named systems, graphs, towers, elements, and an ordered
//! query list, read from TOML or JSON into resolved core objects.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::indlimit::{Tail, Tower};
use crate::matcore::{cx, CMat, Cx, Tol};
use crate::opsys::{AouElement, ConcreteOpSys, CpMap};
use crate::uhf_graph::{graph_system, FiniteGraph, GraphTail, GraphTowerSpec, UhfSpec};

/// Config version this build reads.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config does not parse: {0}")]
    Syntax(String),
    #[error("{path}: {what}")]
    Invalid { path: String, what: String },
}

fn invalid(path: impl Into<String>, what: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), what: what.into() }
}

/// Input syntax of a config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

/// One scalar entry: a plain real or an [re, im] pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Re(f64),
    Pair([f64; 2]),
}

impl Scalar {
    pub fn cx(self) -> Cx {
        match self {
            Scalar::Re(r) => cx(r, 0.0),
            Scalar::Pair([r, i]) => cx(r, i),
        }
    }
}

/// Row-major matrix literal.
pub type MatrixSpec = Vec<Vec<Scalar>>;

pub(super) fn matrix_from_spec(path: &str, m: &MatrixSpec) -> Result<CMat, ConfigError> {
    let rows = m.len();
    if rows == 0 {
        return Err(invalid(path, "matrix literal has no rows"));
    }
    let cols = m[0].len();
    if cols == 0 {
        return Err(invalid(path, "matrix literal has an empty row"));
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(invalid(
                path,
                format!("row {} has {} entries, row 1 has {}", r + 1, row.len(), cols),
            ));
        }
    }
    Ok(CMat::from_fn(rows, cols, |r, c| m[r][c].cx()))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// "full", "diagonal", or "graph".
    pub kind: String,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub graph: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    /// Ordered pairs, 1-based; the set must be symmetric and loop-free.
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UhfConfig {
    pub n1: u64,
    #[serde(default)]
    pub prefix: Vec<u64>,
    pub period: Vec<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphTowerConfig {
    /// Name of a [uhf.*] entry giving the dimension stream.
    pub uhf: String,
    /// Names of [graphs.*] entries forming the explicit prefix.
    #[serde(default)]
    pub graphs: Vec<String>,
    /// "refine", "empty", or "complete".
    pub tail: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapBody {
    /// "star-hom" or "linear".
    pub kind: String,
    #[serde(default)]
    pub mult: Option<usize>,
    #[serde(default)]
    pub unitary: Option<MatrixSpec>,
    #[serde(default)]
    pub rows: Option<MatrixSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub source: String,
    pub target: String,
    pub kind: String,
    #[serde(default)]
    pub mult: Option<usize>,
    #[serde(default)]
    pub unitary: Option<MatrixSpec>,
    #[serde(default)]
    pub rows: Option<MatrixSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailConfig {
    CanonicalEmbed { mult: usize },
    RepeatLastMap,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerConfig {
    /// Names of [systems.*] entries, first level outward.
    pub levels: Vec<String>,
    #[serde(default)]
    pub maps: Vec<MapBody>,
    #[serde(default)]
    pub tail: Option<TailConfig>,
    pub cap: usize,
    /// Expected embedding flag; check-tower compares it to the computed one.
    #[serde(default)]
    pub embedding: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementConfig {
    pub system: String,
    pub matrix: MatrixSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmaxTermConfig {
    pub coeff: MatrixSpec,
    pub element: String,
}

/// One query; `kind` selects the variant and the other keys name inputs.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuerySpec {
    CheckTower {
        tower: String,
    },
    LimitNorm {
        tower: String,
        element: String,
        level: usize,
        #[serde(default)]
        horizon: Option<usize>,
    },
    LimitPositive {
        tower: String,
        element: String,
        level: usize,
        #[serde(default)]
        horizon: Option<usize>,
    },
    NullSpace {
        tower: String,
        element: String,
        level: usize,
        #[serde(default)]
        horizon: Option<usize>,
    },
    EqInLimit {
        tower: String,
        left: String,
        left_level: usize,
        right: String,
        right_level: usize,
        #[serde(default)]
        horizon: Option<usize>,
    },
    PullbackState {
        tower: String,
        level: usize,
        density: MatrixSpec,
        to_level: usize,
    },
    Glimm {
        a: String,
        b: String,
    },
    IsoSearch {
        a: String,
        b: String,
        #[serde(default)]
        depth: Option<usize>,
    },
    Envelope {
        graph: String,
    },
    RelationRoundtrip {
        graph: String,
    },
    Epsilon {
        graph: String,
    },
    Omin {
        system: String,
        element: String,
        #[serde(default)]
        multistarts: Option<u32>,
        #[serde(default)]
        rounds: Option<u32>,
    },
    OmaxVerify {
        system: String,
        claimed: String,
        terms: Vec<OmaxTermConfig>,
        #[serde(default)]
        alpha: Option<MatrixSpec>,
    },
    MinCommute {
        tower: String,
        right: String,
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default)]
        levels: Option<usize>,
    },
    MaxCommute {
        tower: String,
        right: String,
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default)]
        levels: Option<usize>,
    },
    CpCheck {
        map: String,
        #[serde(default)]
        level: Option<u32>,
    },
}

impl QuerySpec {
    /// The kind tag as it appears in configs and reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            QuerySpec::CheckTower { .. } => "check-tower",
            QuerySpec::LimitNorm { .. } => "limit-norm",
            QuerySpec::LimitPositive { .. } => "limit-positive",
            QuerySpec::NullSpace { .. } => "null-space",
            QuerySpec::EqInLimit { .. } => "eq-in-limit",
            QuerySpec::PullbackState { .. } => "pullback-state",
            QuerySpec::Glimm { .. } => "glimm",
            QuerySpec::IsoSearch { .. } => "iso-search",
            QuerySpec::Envelope { .. } => "envelope",
            QuerySpec::RelationRoundtrip { .. } => "relation-roundtrip",
            QuerySpec::Epsilon { .. } => "epsilon",
            QuerySpec::Omin { .. } => "omin",
            QuerySpec::OmaxVerify { .. } => "omax-verify",
            QuerySpec::MinCommute { .. } => "min-commute",
            QuerySpec::MaxCommute { .. } => "max-commute",
            QuerySpec::CpCheck { .. } => "cp-check",
        }
    }
}

/// Raw deserialized config, before name resolution.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    #[serde(default)]
    pub systems: BTreeMap<String, SystemSpec>,
    #[serde(default)]
    pub graphs: BTreeMap<String, GraphSpec>,
    #[serde(default)]
    pub uhf: BTreeMap<String, UhfConfig>,
    #[serde(default)]
    pub graph_towers: BTreeMap<String, GraphTowerConfig>,
    #[serde(default)]
    pub towers: BTreeMap<String, TowerConfig>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapConfig>,
    #[serde(default)]
    pub elements: BTreeMap<String, ElementConfig>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
}

pub fn parse_config(text: &str, format: Format) -> Result<ConfigFile, ConfigError> {
    match format {
        Format::Toml => toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string())),
        Format::Json => serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string())),
    }
}

#[derive(Clone, Debug)]
pub struct ResolvedTower {
    pub tower: Tower,
    pub declared_embedding: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct ResolvedElement {
    pub system: String,
    pub element: AouElement,
}

/// All named objects constructed and cross-checked, queries still symbolic.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub systems: BTreeMap<String, ConcreteOpSys>,
    pub graphs: BTreeMap<String, FiniteGraph>,
    pub uhf: BTreeMap<String, UhfSpec>,
    pub graph_towers: BTreeMap<String, GraphTowerSpec>,
    pub towers: BTreeMap<String, ResolvedTower>,
    pub maps: BTreeMap<String, CpMap>,
    pub elements: BTreeMap<String, ResolvedElement>,
    pub queries: Vec<QuerySpec>,
}

fn check_symmetric_edges(path: &str, spec: &GraphSpec) -> Result<Vec<(usize, usize)>, ConfigError> {
    let mut set = std::collections::BTreeSet::new();
    for &[i, j] in &spec.edges {
        if i == 0 || i > spec.n || j == 0 || j > spec.n {
            return Err(invalid(
                format!("{path}.edges"),
                format!("pair [{i}, {j}] leaves the vertex range 1..={}", spec.n),
            ));
        }
        if i == j {
            return Err(invalid(
                format!("{path}.edges"),
                format!("pair [{i}, {j}] is a loop; edge sets must be antireflexive"),
            ));
        }
        set.insert((i, j));
    }
    for &(i, j) in &set {
        if !set.contains(&(j, i)) {
            return Err(invalid(
                format!("{path}.edges"),
                format!("pair [{i}, {j}] lacks its mirror [{j}, {i}]; edge sets must be symmetric"),
            ));
        }
    }
    Ok(set.into_iter().collect())
}

fn resolve_map(
    path: &str,
    source: &ConcreteOpSys,
    target: &ConcreteOpSys,
    kind: &str,
    mult: Option<usize>,
    unitary: &Option<MatrixSpec>,
    rows: &Option<MatrixSpec>,
    tol: Tol,
) -> Result<CpMap, ConfigError> {
    match kind {
        "star-hom" => {
            let mult = mult.ok_or_else(|| {
                invalid(format!("{path}.mult"), "star-hom maps need a multiplicity")
            })?;
            let u = match unitary {
                Some(m) => Some(matrix_from_spec(&format!("{path}.unitary"), m)?),
                None => None,
            };
            CpMap::star_hom(source.clone(), target.clone(), mult, u, tol)
                .map_err(|e| invalid(path, e.to_string()))
        }
        "linear" => {
            let rows = rows.as_ref().ok_or_else(|| {
                invalid(format!("{path}.rows"), "linear maps need a coefficient matrix")
            })?;
            let coeff = matrix_from_spec(&format!("{path}.rows"), rows)?;
            CpMap::linear(source.clone(), target.clone(), coeff, tol)
                .map_err(|e| invalid(path, e.to_string()))
        }
        other => Err(invalid(
            format!("{path}.kind"),
            format!("unknown map kind {other:?}; expected \"star-hom\" or \"linear\""),
        )),
    }
}

fn require<'a, T>(
    table: &'a BTreeMap<String, T>,
    name: &str,
    path: &str,
    section: &str,
) -> Result<&'a T, ConfigError> {
    table.get(name).ok_or_else(|| {
        invalid(path, format!("references undeclared {section} {name:?}"))
    })
}

pub fn resolve(file: &ConfigFile) -> Result<Resolved, ConfigError> {
    let tol = Tol::default();
    if file.version != CONFIG_VERSION {
        return Err(invalid(
            "version",
            format!("unsupported config version {} (this build reads {CONFIG_VERSION})", file.version),
        ));
    }

    let mut graphs = BTreeMap::new();
    for (name, spec) in &file.graphs {
        let path = format!("graphs.{name}");
        if spec.n == 0 {
            return Err(invalid(format!("{path}.n"), "graphs need at least one vertex"));
        }
        let edges = check_symmetric_edges(&path, spec)?;
        let g = FiniteGraph::new(spec.n, &edges).map_err(|e| invalid(&path, e.to_string()))?;
        graphs.insert(name.clone(), g);
    }

    let mut systems = BTreeMap::new();
    for (name, spec) in &file.systems {
        let path = format!("systems.{name}");
        let sys = match spec.kind.as_str() {
            "full" => {
                let d = spec.dim.ok_or_else(|| {
                    invalid(format!("{path}.dim"), "full systems need a dimension")
                })?;
                if d == 0 {
                    return Err(invalid(format!("{path}.dim"), "dimension must be positive"));
                }
                ConcreteOpSys::full_matrix(d)
            }
            "diagonal" => {
                let d = spec.dim.ok_or_else(|| {
                    invalid(format!("{path}.dim"), "diagonal systems need a dimension")
                })?;
                if d == 0 {
                    return Err(invalid(format!("{path}.dim"), "dimension must be positive"));
                }
                ConcreteOpSys::diagonal_algebra(d)
            }
            "graph" => {
                let gname = spec.graph.as_ref().ok_or_else(|| {
                    invalid(format!("{path}.graph"), "graph systems need a graph name")
                })?;
                let g = require(&graphs, gname, &format!("{path}.graph"), "graph")?;
                graph_system(g).map_err(|e| invalid(&path, e.to_string()))?
            }
            other => {
                return Err(invalid(
                    format!("{path}.kind"),
                    format!("unknown system kind {other:?}; expected \"full\", \"diagonal\", or \"graph\""),
                ))
            }
        };
        systems.insert(name.clone(), sys);
    }

    let mut uhf = BTreeMap::new();
    for (name, spec) in &file.uhf {
        let path = format!("uhf.{name}");
        let s = UhfSpec::new(spec.n1, spec.prefix.clone(), spec.period.clone())
            .map_err(|e| invalid(&path, e.to_string()))?;
        uhf.insert(name.clone(), s);
    }

    let mut graph_towers = BTreeMap::new();
    for (name, spec) in &file.graph_towers {
        let path = format!("graph_towers.{name}");
        let u = require(&uhf, &spec.uhf, &format!("{path}.uhf"), "uhf stream")?;
        let mut prefix = Vec::new();
        for (i, gname) in spec.graphs.iter().enumerate() {
            let g = require(&graphs, gname, &format!("{path}.graphs[{i}]"), "graph")?;
            prefix.push(g.clone());
        }
        let tail = match spec.tail.as_str() {
            "refine" => GraphTail::Refine,
            "empty" => GraphTail::Empty,
            "complete" => GraphTail::Complete,
            other => {
                return Err(invalid(
                    format!("{path}.tail"),
                    format!("unknown tail {other:?}; expected \"refine\", \"empty\", or \"complete\""),
                ))
            }
        };
        let spec = GraphTowerSpec::new(u.clone(), prefix, tail)
            .map_err(|e| invalid(&path, e.to_string()))?;
        graph_towers.insert(name.clone(), spec);
    }

    let mut maps = BTreeMap::new();
    for (name, spec) in &file.maps {
        let path = format!("maps.{name}");
        let src = require(&systems, &spec.source, &format!("{path}.source"), "system")?;
        let tgt = require(&systems, &spec.target, &format!("{path}.target"), "system")?;
        let m = resolve_map(&path, src, tgt, &spec.kind, spec.mult, &spec.unitary, &spec.rows, tol)?;
        maps.insert(name.clone(), m);
    }

    let mut towers = BTreeMap::new();
    for (name, spec) in &file.towers {
        let path = format!("towers.{name}");
        if spec.levels.is_empty() {
            return Err(invalid(format!("{path}.levels"), "towers need at least one level"));
        }
        let mut levels = Vec::new();
        for (i, sname) in spec.levels.iter().enumerate() {
            let sys = require(&systems, sname, &format!("{path}.levels[{i}]"), "system")?;
            levels.push(sys.clone());
        }
        if spec.maps.len() + 1 != spec.levels.len() {
            return Err(invalid(
                format!("{path}.maps"),
                format!("{} levels need {} connecting maps, found {}",
                    spec.levels.len(), spec.levels.len() - 1, spec.maps.len()),
            ));
        }
        let mut cpmaps = Vec::new();
        for (i, body) in spec.maps.iter().enumerate() {
            let mpath = format!("{path}.maps[{i}]");
            let m = resolve_map(
                &mpath, &levels[i], &levels[i + 1],
                &body.kind, body.mult, &body.unitary, &body.rows, tol,
            )?;
            cpmaps.push(m);
        }
        let tail = match &spec.tail {
            Some(TailConfig::CanonicalEmbed { mult }) => Some(Tail::CanonicalEmbed { mult: *mult }),
            Some(TailConfig::RepeatLastMap) => Some(Tail::RepeatLastMap),
            None => None,
        };
        let tower = Tower::new(levels, cpmaps, tail, spec.cap)
            .map_err(|e| invalid(&path, e.to_string()))?;
        towers.insert(name.clone(), ResolvedTower { tower, declared_embedding: spec.embedding });
    }

    let mut elements = BTreeMap::new();
    for (name, spec) in &file.elements {
        let path = format!("elements.{name}");
        let sys = require(&systems, &spec.system, &format!("{path}.system"), "system")?;
        let mat = matrix_from_spec(&format!("{path}.matrix"), &spec.matrix)?;
        let elt = sys
            .element_from_matrix(&mat, tol)
            .map_err(|e| invalid(&format!("{path}.matrix"), e.to_string()))?;
        elements.insert(name.clone(), ResolvedElement { system: spec.system.clone(), element: elt });
    }

    for (i, q) in file.queries.iter().enumerate() {
        let qp = |field: &str| format!("queries[{i}].{field}");
        let tower_ref = |n: &String, f: &str| require(&towers, n, &qp(f), "tower").map(|_| ());
        let system_ref = |n: &String, f: &str| require(&systems, n, &qp(f), "system").map(|_| ());
        let element_ref = |n: &String, f: &str| require(&elements, n, &qp(f), "element").map(|_| ());
        let graph_ref = |n: &String, f: &str| require(&graphs, n, &qp(f), "graph").map(|_| ());
        match q {
            QuerySpec::CheckTower { tower } => tower_ref(tower, "tower")?,
            QuerySpec::LimitNorm { tower, element, .. }
            | QuerySpec::LimitPositive { tower, element, .. }
            | QuerySpec::NullSpace { tower, element, .. } => {
                tower_ref(tower, "tower")?;
                element_ref(element, "element")?;
            }
            QuerySpec::EqInLimit { tower, left, right, .. } => {
                tower_ref(tower, "tower")?;
                element_ref(left, "left")?;
                element_ref(right, "right")?;
            }
            QuerySpec::PullbackState { tower, density, .. } => {
                tower_ref(tower, "tower")?;
                matrix_from_spec(&qp("density"), density).map(|_| ())?;
            }
            QuerySpec::Glimm { a, b } => {
                require(&uhf, a, &qp("a"), "uhf stream")?;
                require(&uhf, b, &qp("b"), "uhf stream")?;
            }
            QuerySpec::IsoSearch { a, b, .. } => {
                require(&graph_towers, a, &qp("a"), "graph tower")?;
                require(&graph_towers, b, &qp("b"), "graph tower")?;
            }
            QuerySpec::Envelope { graph }
            | QuerySpec::RelationRoundtrip { graph }
            | QuerySpec::Epsilon { graph } => graph_ref(graph, "graph")?,
            QuerySpec::Omin { system, element, .. } => {
                system_ref(system, "system")?;
                element_ref(element, "element")?;
            }
            QuerySpec::OmaxVerify { system, claimed, terms, alpha } => {
                system_ref(system, "system")?;
                element_ref(claimed, "claimed")?;
                if terms.is_empty() {
                    return Err(invalid(qp("terms"), "certificates need at least one term"));
                }
                for (t, term) in terms.iter().enumerate() {
                    matrix_from_spec(&qp(&format!("terms[{t}].coeff")), &term.coeff)?;
                    element_ref(&term.element, &format!("terms[{t}].element"))?;
                }
                if let Some(a) = alpha {
                    matrix_from_spec(&qp("alpha"), a).map(|_| ())?;
                }
            }
            QuerySpec::MinCommute { tower, right, .. }
            | QuerySpec::MaxCommute { tower, right, .. } => {
                tower_ref(tower, "tower")?;
                system_ref(right, "right")?;
            }
            QuerySpec::CpCheck { map, .. } => require(&maps, map, &qp("map"), "map").map(|_| ())?,
        }
    }

    Ok(Resolved {
        systems,
        graphs,
        uhf,
        graph_towers,
        towers,
        maps,
        elements,
        queries: file.queries.clone(),
    })
}
