//! Command-line front end: the theory and report documents and one runner per
//! command.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bf_theory::{self, LieAlgebraData, BUILTIN_ALGEBRAS};
use crate::bvbfv_check::{self, CheckReport, HalfLineTheory, IntervalTheory, Residual};
use crate::error::{Error, Result};
use crate::graded_core::{
    parse_rational, rat, GradedSpace, Polarization, Rational, Series, SeriesTerm, Side, SymplecticSpace,
    TruncationCaps,
};
use crate::halfline_kernels::battery::{halfline_battery, interval_battery, BatteryConfig, NumericReport};
use crate::halfline_kernels::{
    Branch, Channel, CutoffFunction, IntervalKernels, KernelSettings, Kernels, QuadratureSpec, TensorBasis,
};
use crate::rg_flow::{
    anomaly_probe, enumerate_graphs, evaluate_series, rg_consistency_check, splitting_diagram_check,
    uv_finiteness_check, FieldPreset, FlowModel, Functional, GraphCaps, ProbeEndpoint, SplittingSample,
    SplittingTolerance, UvTolerance,
};
use crate::weyl_moyal::BoundaryAlgebraContext;

pub const SCHEMA_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = concat!("bvbfv ", env!("CARGO_PKG_VERSION"));

// ---------------------------------------------------------------------------
// Theory documents

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Halfline,
    Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub name: String,
    pub dual: String,
    pub degree: i32,
    /// Side in the polarization at 0, then (interval only) at 1.
    pub sides: Vec<Side>,
}

/// One nonzero entry `ω(row, col)`. The graded-antisymmetric partner may be
/// omitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaEntry {
    pub row: String,
    pub col: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub generators: Vec<GeneratorEntry>,
    pub omega: Vec<OmegaEntry>,
}

/// `j` for a half-line, `j0` and `j1` for an interval.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointTerms {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<SeriesTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j0: Option<Vec<SeriesTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j1: Option<Vec<SeriesTerm>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BfvTerms {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<SeriesTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<Vec<SeriesTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<Vec<SeriesTerm>>,
}

impl EndpointTerms {
    fn is_interval(&self) -> bool {
        self.j0.is_some() || self.j1.is_some()
    }
}

impl BfvTerms {
    fn is_interval(&self) -> bool {
        self.h0.is_some() || self.h1.is_some()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryDocument {
    pub schema_version: u32,
    pub space: SpaceSection,
    pub interaction: Vec<SeriesTerm>,
    #[serde(default)]
    pub boundary_terms: EndpointTerms,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bfv: Option<BfvTerms>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<TruncationCaps>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<Numerics>,
}

/// A built theory in either geometry.
#[derive(Clone, Debug)]
pub enum Theory {
    HalfLine(HalfLineTheory),
    Interval(IntervalTheory),
}

impl Theory {
    pub fn geometry(&self) -> Geometry {
        match self {
            Theory::HalfLine(_) => Geometry::Halfline,
            Theory::Interval(_) => Geometry::Interval,
        }
    }

    /// The half-line reading: the theory itself, or endpoint 0 of an interval.
    pub fn halfline(&self) -> Result<HalfLineTheory> {
        match self {
            Theory::HalfLine(t) => Ok(t.clone()),
            Theory::Interval(t) => t.endpoint_theory(0),
        }
    }
}

/// Line of the first occurrence of `"needle"` in the source, for error anchors.
fn line_of(text: Option<&str>, needle: &str) -> Option<usize> {
    let quoted = format!("\"{needle}\"");
    let text = text?;
    let pos = text.find(&quoted)?;
    Some(text[..pos].matches('\n').count() + 1)
}

fn anchored(text: Option<&str>, needle: &str, path: &str, e: Error) -> Error {
    let msg = match e {
        Error::Validation(m) | Error::Parse(m) => m,
        other => other.to_string(),
    };
    match line_of(text, needle) {
        Some(l) => Error::Validation(format!("line {l}: {path}: {msg}")),
        None => Error::Validation(format!("{path}: {msg}")),
    }
}

fn terms_to_series(
    space: &Arc<GradedSpace>,
    caps: TruncationCaps,
    terms: &[SeriesTerm],
    path: &str,
    text: Option<&str>,
) -> Result<Series> {
    for (k, t) in terms.iter().enumerate() {
        parse_rational(&t.coeff).map_err(|e| anchored(text, &t.coeff, &format!("{path}[{k}].coeff"), e))?;
        for (m, name) in t.monomial.iter().enumerate() {
            space
                .index_of(name)
                .map_err(|e| anchored(text, name, &format!("{path}[{k}].monomial[{m}]"), e))?;
        }
        if !caps.admits(t.hbar, t.monomial.len()) {
            return Err(anchored(
                text,
                &t.coeff,
                &format!("{path}[{k}]"),
                Error::Validation(format!("term exceeds truncation caps {caps:?}")),
            ));
        }
    }
    Series::from_terms(space, caps, terms).map_err(|e| anchored(text, "", path, e))
}

impl TheoryDocument {
    /// Parses and checks the schema version. Syntax errors carry the line and
    /// column reported by the JSON reader.
    pub fn parse(text: &str) -> Result<TheoryDocument> {
        let doc: TheoryDocument =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("theory document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(anchored(
                Some(text),
                "schema_version",
                "schema_version",
                Error::Validation(format!(
                    "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                    doc.schema_version
                )),
            ));
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<(TheoryDocument, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
        Ok((TheoryDocument::parse(&text)?, text))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    /// Geometry implied by the document: interval when any generator carries
    /// a second side or endpoint-indexed terms are present.
    pub fn geometry(&self) -> Geometry {
        let two_sides = self.space.generators.iter().any(|g| g.sides.len() == 2);
        let bfv = self.bfv.as_ref().is_some_and(BfvTerms::is_interval);
        if two_sides || self.boundary_terms.is_interval() || bfv {
            Geometry::Interval
        } else {
            Geometry::Halfline
        }
    }

    fn build_space(&self, text: Option<&str>) -> Result<(Arc<SymplecticSpace>, Polarization, Option<Polarization>)> {
        let mut decls = Vec::new();
        let mut pol1 = Vec::new();
        for (k, g) in self.space.generators.iter().enumerate() {
            let path = format!("space.generators[{k}]");
            let side0 = match g.sides.as_slice() {
                [s] => *s,
                [s, t] => {
                    pol1.push(*t);
                    *s
                }
                _ => {
                    return Err(anchored(
                        text,
                        &g.name,
                        &format!("{path}.sides"),
                        Error::Validation("expected one or two sides".into()),
                    ))
                }
            };
            decls.push((g.name.clone(), g.dual.clone(), g.degree, side0));
        }
        let n = decls.len();
        if !pol1.is_empty() && pol1.len() != n {
            return Err(Error::Validation(
                "space.generators: either every generator or none carries a second side".into(),
            ));
        }
        let space = GradedSpace::new(decls).map_err(|e| anchored(text, "generators", "space.generators", e))?;
        let mut omega = vec![vec![Rational::zero(); n]; n];
        let mut given = vec![vec![false; n]; n];
        for (k, e) in self.space.omega.iter().enumerate() {
            let path = format!("space.omega[{k}]");
            let r = space.index_of(&e.row).map_err(|x| anchored(text, &e.row, &format!("{path}.row"), x))?;
            let c = space.index_of(&e.col).map_err(|x| anchored(text, &e.col, &format!("{path}.col"), x))?;
            let v = parse_rational(&e.value).map_err(|x| anchored(text, &e.value, &format!("{path}.value"), x))?;
            if given[r][c] {
                return Err(anchored(text, &e.row, &path, Error::Validation("duplicate omega entry".into())));
            }
            given[r][c] = true;
            omega[r][c] = v;
        }
        for a in 0..n {
            for b in 0..n {
                if given[a][b] && !given[b][a] {
                    let sign = if space.odd(a) && space.odd(b) { 1 } else { -1 };
                    omega[b][a] = &omega[a][b] * Rational::from_integer(sign.into());
                }
            }
        }
        let pol0 = space.default_polarization();
        let sym = SymplecticSpace::new(space, omega).map_err(|e| anchored(text, "omega", "space.omega", e))?;
        let pol1 = if pol1.is_empty() { None } else { Some(Polarization(pol1)) };
        Ok((Arc::new(sym), pol0, pol1))
    }

    /// Builds the theory. `geometry` overrides the implied one; reading an
    /// interval document on the half-line takes its endpoint-0 data.
    pub fn build(
        &self,
        text: Option<&str>,
        default_caps: TruncationCaps,
        geometry: Option<Geometry>,
    ) -> Result<Theory> {
        let caps = self.caps.unwrap_or(default_caps);
        caps.validate()?;
        let (sym, pol0, pol1) = self.build_space(text)?;
        let space = sym.space().clone();
        let series = |terms: &Option<Vec<SeriesTerm>>, path: &str| -> Result<Option<Series>> {
            terms.as_ref().map(|t| terms_to_series(&space, caps, t, path, text)).transpose()
        };
        let i = terms_to_series(&space, caps, &self.interaction, "interaction", text)?;
        let zero = Series::zero(&space, caps);
        let bt = &self.boundary_terms;
        let bfv = self.bfv.clone().unwrap_or_default();
        match geometry.unwrap_or_else(|| self.geometry()) {
            Geometry::Halfline => {
                let j = match (&bt.j, &bt.j0) {
                    (Some(_), _) => series(&bt.j, "boundary_terms.j")?,
                    (None, _) => series(&bt.j0, "boundary_terms.j0")?,
                };
                let h = match (&bfv.h, &bfv.h0) {
                    (Some(_), _) => series(&bfv.h, "bfv.h")?,
                    (None, _) => series(&bfv.h0, "bfv.h0")?,
                };
                Ok(Theory::HalfLine(HalfLineTheory::new(sym, pol0, i, j.unwrap_or(zero), h)?))
            }
            Geometry::Interval => {
                let pol1 = pol1.ok_or_else(|| {
                    Error::Validation("interval geometry needs a second side for every generator".into())
                })?;
                if bt.j.is_some() || bfv.h.is_some() {
                    return Err(Error::Validation(
                        "interval documents use j0/j1 and h0/h1, not j or h".into(),
                    ));
                }
                let j0 = series(&bt.j0, "boundary_terms.j0")?.unwrap_or_else(|| zero.clone());
                let j1 = series(&bt.j1, "boundary_terms.j1")?.unwrap_or_else(|| zero.clone());
                let h0 = series(&bfv.h0, "bfv.h0")?;
                let h1 = series(&bfv.h1, "bfv.h1")?;
                Ok(Theory::Interval(IntervalTheory::new(sym, pol0, pol1, i, j0, j1, h0, h1)?))
            }
        }
    }

    fn space_section(sym: &SymplecticSpace, pol1: Option<&Polarization>) -> SpaceSection {
        let space = sym.space();
        let generators = space
            .generators()
            .iter()
            .map(|g| {
                let mut sides = vec![g.side];
                if let Some(p) = pol1 {
                    sides.push(p.side(g.index));
                }
                GeneratorEntry {
                    name: g.name.clone(),
                    dual: g.dual_name.clone(),
                    degree: g.degree,
                    sides,
                }
            })
            .collect();
        let mut omega = Vec::new();
        for a in 0..space.dim() {
            for b in a + 1..space.dim() {
                let v = sym.omega_entry(a, b);
                if !v.is_zero() {
                    omega.push(OmegaEntry {
                        row: space.generator(a).name.clone(),
                        col: space.generator(b).name.clone(),
                        value: crate::graded_core::format_rational(v),
                    });
                }
            }
        }
        SpaceSection { generators, omega }
    }

    fn nonempty(s: &Series) -> Option<Vec<SeriesTerm>> {
        (!s.is_zero()).then(|| s.to_terms())
    }

    /// Canonical document of a built theory.
    pub fn from_theory(th: &Theory, numerics: Option<Numerics>) -> TheoryDocument {
        match th {
            Theory::HalfLine(t) => TheoryDocument {
                schema_version: SCHEMA_VERSION,
                space: Self::space_section(t.symplectic(), None),
                interaction: t.i.to_terms(),
                boundary_terms: EndpointTerms {
                    j: Self::nonempty(&t.j),
                    ..Default::default()
                },
                bfv: t.h.as_ref().map(|h| BfvTerms {
                    h: Some(h.to_terms()),
                    ..Default::default()
                }),
                caps: Some(t.caps()),
                numerics,
            },
            Theory::Interval(t) => {
                let bfv = (t.h0.is_some() || t.h1.is_some()).then(|| BfvTerms {
                    h: None,
                    h0: t.h0.as_ref().map(Series::to_terms),
                    h1: t.h1.as_ref().map(Series::to_terms),
                });
                TheoryDocument {
                    schema_version: SCHEMA_VERSION,
                    space: Self::space_section(t.symplectic(), Some(t.polarization(1))),
                    interaction: t.i.to_terms(),
                    boundary_terms: EndpointTerms {
                        j: None,
                        j0: Self::nonempty(&t.j0),
                        j1: Self::nonempty(&t.j1),
                    },
                    bfv,
                    caps: Some(t.caps()),
                    numerics,
                }
            }
        }
    }

    pub fn kernels(&self) -> Result<Kernels> {
        let n = self.numerics.clone().unwrap_or_default();
        Kernels::new(KernelSettings {
            cutoff: n.cutoff.unwrap_or_default(),
            quad: n.quadrature.unwrap_or_default(),
            ..Default::default()
        })
    }
}

// ---------------------------------------------------------------------------
// Report documents

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
}

/// Column-labelled numeric table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericSection {
    pub name: String,
    pub report: NumericReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub engine_version: String,
    pub command: String,
    pub pass: bool,
    pub verdicts: Vec<Verdict>,
    pub flags: Vec<String>,
    pub checks: Vec<CheckReport>,
    pub numeric: Vec<NumericSection>,
    pub tables: Vec<Table>,
    pub details: serde_json::Map<String, Value>,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            command: command.to_string(),
            pass: true,
            verdicts: Vec::new(),
            flags: Vec::new(),
            checks: Vec::new(),
            numeric: Vec::new(),
            tables: Vec::new(),
            details: serde_json::Map::new(),
        }
    }

    pub fn verdict(&mut self, name: &str, pass: bool) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            pass,
        });
        self.pass &= pass;
    }

    pub fn flag(&mut self, f: &str) {
        if !self.flags.iter().any(|x| x == f) {
            self.flags.push(f.to_string());
        }
    }

    pub fn check(&mut self, r: CheckReport) {
        self.verdict(&r.check.clone(), r.pass);
        for f in &r.flags {
            self.flag(f);
        }
        self.checks.push(r);
    }

    pub fn numeric(&mut self, name: &str, r: NumericReport) {
        self.verdict(name, r.pass());
        if r.items.iter().any(|i| i.status == crate::halfline_kernels::battery::ItemStatus::QuadratureLimited) {
            self.flag("quadrature_limited");
        }
        self.numeric.push(NumericSection {
            name: name.to_string(),
            report: r,
        });
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn detail(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("report details serialize");
        self.details.insert(key.to_string(), v);
    }

    /// 0 when every verdict passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().all(|v| v.pass) {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Exit status for an error: 2 for rejected input, 3 for numerical or
/// internal failures.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Quadrature { .. } | Error::Gluing { .. } | Error::Internal(_) => 3,
        _ => 2,
    }
}

// ---------------------------------------------------------------------------
// Command line

fn parse_list<T: std::str::FromStr>(s: &str, n: usize, what: &str) -> Result<Vec<T>> {
    let v: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Validation(format!("{what}: cannot parse `{s}`")))?;
    if v.len() != n {
        return Err(Error::Validation(format!("{what}: expected {n} comma-separated values, got `{s}`")));
    }
    Ok(v)
}

/// Parses `max_hbar,max_degree,max_bracket_depth`.
pub fn parse_truncation_caps(s: &str) -> Result<TruncationCaps> {
    let v: Vec<u32> = parse_list(s, 3, "truncation caps")?;
    TruncationCaps::new(v[0], v[1], v[2])
}

/// Parses `max_bulk,max_boundary,max_loops`.
pub fn parse_graph_caps(s: &str) -> Result<GraphCaps> {
    let v: Vec<usize> = parse_list(s, 3, "graph caps")?;
    GraphCaps::new(v[0], v[1], v[2])
}

#[derive(Debug, Parser)]
#[command(name = "bvbfv", version, about = "Exact and numerical checks for boundary master equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Default truncation caps `max_hbar,max_degree,max_bracket_depth`,
    /// used when a document does not set its own.
    #[arg(long, global = true, env = "BVBFV_CAPS")]
    pub truncation: Option<String>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Theory document (JSON).
    pub theory: PathBuf,
    /// Override the geometry implied by the document.
    #[arg(long, value_enum)]
    pub geometry: Option<Geometry>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Theory document; defaults to BF theory of `--algebra`.
    #[arg(long, conflicts_with = "algebra")]
    pub theory: Option<PathBuf>,
    /// Built-in Lie algebra for BF theory.
    #[arg(long)]
    pub algebra: Option<String>,
    #[arg(long, value_enum)]
    pub geometry: Option<Geometry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RgCheck {
    Rg,
    Uv,
    Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelGeometry {
    Halfline,
    Interval,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Modified quantum master equation.
    CheckMqme {
        #[command(flatten)]
        source: TheoryArgs,
        /// Also check the strict quantum master equation.
        #[arg(long)]
        qme: bool,
    },
    /// Strict quantum master equation.
    CheckQme {
        #[command(flatten)]
        source: TheoryArgs,
    },
    /// BF theory from structure constants: Jacobi, flatness, BFV pair, anomaly.
    Bf {
        #[arg(long, conflicts_with = "constants", required_unless_present = "constants")]
        algebra: Option<String>,
        /// JSON file `{"name", "dim", "brackets": [{"a","b","c","value"}]}`
        /// with 1-based indices for `[t_a, t_b] = value t_c`.
        #[arg(long)]
        constants: Option<PathBuf>,
        /// Also write the BF interval theory document here.
        #[arg(long)]
        emit_theory: Option<PathBuf>,
    },
    /// Free-kernel invariant battery and a table of propagator values.
    PropagatorVerify {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 1.0, 10.0])]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.3, 1.0, 2.5])]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Tolerance for finite-difference identities; 1e-5 by default,
        /// scaled down with `--tol` when that is tightened below 1e-8.
        #[arg(long)]
        fd_tol: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6])]
        eps: Vec<f64>,
        /// Cutoff plateau and support radii `r1,r2`.
        #[arg(long, default_value = "0.05,0.1")]
        cutoff: String,
        #[arg(long, value_enum, default_value_t = KernelGeometry::Both)]
        geometry: KernelGeometry,
        /// Theory supplying the interval tensor basis; BF sl2 by default.
        #[arg(long)]
        theory: Option<PathBuf>,
    },
    /// Renormalization-group batteries on Feynman amplitudes.
    RgFlow {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Graph caps `max_bulk,max_boundary,max_loops`.
        #[arg(long, env = "BVBFV_GRAPH_CAPS", default_value = "2,0,1")]
        caps: String,
        #[arg(long, default_value = "boundary")]
        fields: String,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![RgCheck::Rg, RgCheck::Uv, RgCheck::Split])]
        checks: Vec<RgCheck>,
        #[arg(long, default_value_t = 2)]
        max_edges: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-3, 1e-4, 1e-5])]
        eps_sequence: Vec<f64>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// One-vertex boundary anomaly by integration against the algebraic side.
    AnomalyProbe {
        #[command(flatten)]
        source: SourceArgs,
        /// Endpoint of the interval: 0 (B side for BF) or 1 (A side).
        #[arg(long, default_value_t = 1)]
        endpoint: usize,
        #[arg(long, default_value = "boundary")]
        fields: String,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Seeded quick battery over the exact and numerical engines.
    Selftest {
        #[arg(long, default_value_t = 20240607)]
        seed: u64,
    },
}

/// Parses, runs and emits; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(report) => {
            let json = report.to_json();
            match &cli.out {
                Some(p) => {
                    if let Err(e) = std::fs::write(p, json + "\n") {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return 2;
                    }
                }
                None => println!("{json}"),
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<ReportDocument> {
    let caps = match &cli.truncation {
        Some(s) => parse_truncation_caps(s)?,
        None => TruncationCaps::default(),
    };
    match &cli.command {
        Command::CheckMqme { source, qme } => cmd_check_mqme(source, caps, *qme),
        Command::CheckQme { source } => cmd_check_qme(source, caps),
        Command::Bf {
            algebra,
            constants,
            emit_theory,
        } => {
            let g = match (algebra, constants) {
                (Some(a), _) => LieAlgebraData::builtin(a)?,
                (None, Some(p)) => read_constants(p)?,
                (None, None) => return Err(Error::Validation("give --algebra or --constants".into())),
            };
            cmd_bf(&g, caps, emit_theory.as_deref())
        }
        Command::PropagatorVerify {
            lambda,
            grid,
            tol,
            fd_tol,
            eps,
            cutoff,
            geometry,
            theory,
        } => {
            let rc: Vec<f64> = parse_list(cutoff, 2, "cutoff")?;
            let cfg = BatteryConfig {
                lambdas: lambda.clone(),
                xs: grid.clone(),
                eps_sequence: eps.clone(),
                tol: *tol,
                fd_tol: fd_tol.unwrap_or(1e-5 * (tol / 1e-8).min(1.0)),
                ..Default::default()
            };
            let basis = match theory {
                Some(p) => {
                    let (doc, text) = TheoryDocument::read(p)?;
                    match doc.build(Some(&text), caps, Some(Geometry::Interval))? {
                        Theory::Interval(t) => t,
                        Theory::HalfLine(_) => unreachable!("interval geometry was requested"),
                    }
                }
                None => bf_theory::build_bf_theory(&LieAlgebraData::builtin("sl2")?, caps)?,
            };
            cmd_propagator_verify(CutoffFunction::new(rc[0], rc[1])?, &cfg, *geometry, &basis)
        }
        Command::RgFlow {
            source,
            eps,
            lambda,
            caps: gcaps,
            fields,
            checks,
            max_edges,
            eps_sequence,
            tol,
        } => {
            let (theory, kernels) = load_source(source, caps, "sl2")?;
            let opts = RgOptions {
                eps: *eps,
                lambda: *lambda,
                caps: parse_graph_caps(gcaps)?,
                preset: FieldPreset::parse(fields)?,
                checks: checks.clone(),
                max_edges: *max_edges,
                eps_sequence: eps_sequence.clone(),
                tol: *tol,
            };
            cmd_rg(&theory, kernels, &opts)
        }
        Command::AnomalyProbe {
            source,
            endpoint,
            fields,
            t,
            tol,
        } => {
            let (theory, kernels) = load_source(source, caps, "nonabelian2")?;
            let algebra = if source.theory.is_none() {
                Some(LieAlgebraData::builtin(source.algebra.as_deref().unwrap_or("nonabelian2"))?)
            } else {
                None
            };
            cmd_anomaly_probe(&theory, &kernels, algebra.as_ref(), *endpoint, FieldPreset::parse(fields)?, *t, *tol)
        }
        Command::Selftest { seed } => cmd_selftest(*seed),
    }
}

fn load(source: &TheoryArgs, caps: TruncationCaps) -> Result<Theory> {
    let (doc, text) = TheoryDocument::read(&source.theory)?;
    doc.build(Some(&text), caps, source.geometry)
}

fn load_source(source: &SourceArgs, caps: TruncationCaps, default_algebra: &str) -> Result<(Theory, Kernels)> {
    match &source.theory {
        Some(p) => {
            let (doc, text) = TheoryDocument::read(p)?;
            Ok((doc.build(Some(&text), caps, source.geometry)?, doc.kernels()?))
        }
        None => {
            let g = LieAlgebraData::builtin(source.algebra.as_deref().unwrap_or(default_algebra))?;
            let th = bf_theory::build_bf_theory(&g, caps)?;
            let theory = match source.geometry {
                Some(Geometry::Halfline) => Theory::HalfLine(th.endpoint_theory(0)?),
                _ => Theory::Interval(th),
            };
            Ok((theory, Kernels::with_cutoff(CutoffFunction::default())?))
        }
    }
}

pub fn cmd_check_mqme(source: &TheoryArgs, caps: TruncationCaps, qme: bool) -> Result<ReportDocument> {
    let th = load(source, caps)?;
    let mut doc = ReportDocument::new("check-mqme");
    doc.detail("geometry", th.geometry());
    match &th {
        Theory::HalfLine(t) => {
            doc.check(bvbfv_check::check_mqme(t)?);
            if qme {
                doc.check(bvbfv_check::check_qme_halfline(t)?);
            }
        }
        Theory::Interval(t) => {
            doc.check(bvbfv_check::check_mqme_interval(t)?);
            if qme {
                doc.check(bvbfv_check::check_qme_interval(t)?);
            }
        }
    }
    Ok(doc)
}

pub fn cmd_check_qme(source: &TheoryArgs, caps: TruncationCaps) -> Result<ReportDocument> {
    let th = load(source, caps)?;
    let mut doc = ReportDocument::new("check-qme");
    doc.detail("geometry", th.geometry());
    match &th {
        Theory::HalfLine(t) => doc.check(bvbfv_check::check_qme_halfline(t)?),
        Theory::Interval(t) => doc.check(bvbfv_check::check_qme_interval(t)?),
    }
    Ok(doc)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BracketEntry {
    a: usize,
    b: usize,
    c: usize,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsFile {
    name: String,
    dim: usize,
    brackets: Vec<BracketEntry>,
}

/// Reads sparse structure constants; each bracket also sets its antisymmetric
/// partner.
pub fn read_constants(path: &Path) -> Result<LieAlgebraData> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_constants(&text)
}

pub fn parse_constants(text: &str) -> Result<LieAlgebraData> {
    let f: ConstantsFile =
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("constants document: {e}")))?;
    let mut g = LieAlgebraData::zero(&f.name, f.dim);
    for (k, e) in f.brackets.iter().enumerate() {
        let path = format!("brackets[{k}]");
        if [e.a, e.b, e.c].iter().any(|&i| i == 0 || i > f.dim) {
            return Err(anchored(
                Some(text),
                &e.value,
                &path,
                Error::Validation(format!("indices must lie in 1..={}", f.dim)),
            ));
        }
        if e.a == e.b {
            return Err(anchored(Some(text), &e.value, &path, Error::Validation("[t_a, t_a] must vanish".into())));
        }
        let v = parse_rational(&e.value).map_err(|x| anchored(Some(text), &e.value, &format!("{path}.value"), x))?;
        g.set_bracket(e.a - 1, e.b - 1, e.c - 1, v);
    }
    Ok(g)
}

pub fn cmd_bf(g: &LieAlgebraData, caps: TruncationCaps, emit: Option<&Path>) -> Result<ReportDocument> {
    let mut doc = ReportDocument::new("bf");
    doc.detail("algebra", &g.name);
    doc.detail("dim", g.dim);
    let jac = bf_theory::check_jacobi(g)?;
    let lie = jac.pass;
    doc.check(jac);
    if !lie {
        return Ok(doc);
    }
    let th = bf_theory::build_bf_theory(g, caps)?;
    doc.check(bvbfv_check::check_flatness(&th.context0()?, &th.i)?);
    let (h0, h1) = bvbfv_check::bfv_pair_interval(&th)?;
    let mut pair = CheckReport::new("bfv_pair");
    pair.push_series("H0 + I", &h0.add(&th.i)?);
    pair.push_series("H1 - I", &h1.sub(&th.i)?);
    doc.check(pair.finish());
    doc.check(bvbfv_check::check_mqme_interval(&th)?);
    let an = bf_theory::bf_anomaly_report(g, caps)?;
    if !an.anomaly_free {
        doc.flag("anomalous");
    }
    doc.check(an.report.clone());
    doc.detail("anomaly", &an);
    if let Some(p) = emit {
        let text = TheoryDocument::from_theory(&Theory::Interval(th), None).to_json();
        std::fs::write(p, text + "\n").map_err(|e| Error::Validation(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(doc)
}

pub fn cmd_propagator_verify(
    cutoff: CutoffFunction,
    cfg: &BatteryConfig,
    geometry: KernelGeometry,
    basis_theory: &IntervalTheory,
) -> Result<ReportDocument> {
    let kernels = Kernels::with_cutoff(cutoff)?;
    let mut doc = ReportDocument::new("propagator-verify");
    doc.detail("config", cfg);
    if geometry != KernelGeometry::Interval {
        doc.numeric("halfline", halfline_battery(&kernels, cfg));
    }
    if geometry != KernelGeometry::Halfline {
        let basis = TensorBasis::new(
            basis_theory.symplectic().clone(),
            basis_theory.polarization(0).clone(),
            basis_theory.polarization(1).clone(),
        )?;
        let ik = IntervalKernels::new(kernels.clone(), basis)?;
        doc.numeric("interval", interval_battery(&ik, cfg));
    }
    let mut rows = Vec::new();
    for &lam in &cfg.lambdas {
        for &x in &cfg.xs {
            for &y in &cfg.xs {
                if x == y {
                    continue;
                }
                let v = kernels.extended_propagator(lam, Branch::of(x, y), x, y)?;
                for c in [Channel::Plus0, Channel::Minus0] {
                    let mut row = vec![lam, x, y, c as usize as f64];
                    row.extend(v.coeffs[c as usize]);
                    rows.push(row);
                }
            }
        }
    }
    doc.table(Table {
        name: "extended propagator".into(),
        columns: ["lambda", "x", "y", "channel", "one", "dx", "dy", "dxdy"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    });
    Ok(doc)
}

#[derive(Clone, Debug)]
pub struct RgOptions {
    pub eps: f64,
    pub lambda: f64,
    pub caps: GraphCaps,
    pub preset: FieldPreset,
    pub checks: Vec<RgCheck>,
    pub max_edges: usize,
    pub eps_sequence: Vec<f64>,
    pub tol: f64,
}

/// Constant, linear and quadratic functionals with one sample point.
pub fn splitting_inputs(pol: &Polarization) -> (Vec<Functional>, Vec<SplittingSample>) {
    let lprime: Vec<f64> = (0..pol.0.len())
        .map(|a| if pol.side(a) == Side::LPrime { 0.5 + 0.1 * a as f64 } else { 0.0 })
        .collect();
    let samples = vec![SplittingSample {
        lprime,
        field: FieldPreset::Boundary.build(pol),
    }];
    let c1 = FieldPreset::Overlapping.build(pol).zero_form;
    let c2 = FieldPreset::Boundary.build(pol).one_form;
    let inputs = vec![
        Functional::Constant { value: 2.0 },
        Functional::Linear { coform: c1.clone() },
        Functional::Quadratic { first: c1, second: c2 },
    ];
    (inputs, samples)
}

pub fn cmd_rg(theory: &Theory, kernels: Kernels, o: &RgOptions) -> Result<ReportDocument> {
    let model = match theory {
        Theory::HalfLine(t) => FlowModel::half_line(t, kernels.clone())?,
        Theory::Interval(t) => FlowModel::interval(t, kernels.clone())?,
    };
    let pol = match theory {
        Theory::HalfLine(t) => t.polarization().clone(),
        Theory::Interval(t) => t.polarization(0).clone(),
    };
    let field = o.preset.build(&pol);
    let mut doc = ReportDocument::new("rg-flow");
    doc.detail("geometry", theory.geometry());
    doc.detail("eps", o.eps);
    doc.detail("lambda", o.lambda);
    doc.detail("graph_caps", o.caps);
    doc.detail("fields", o.preset);
    if o.checks.contains(&RgCheck::Rg) {
        let r = rg_consistency_check(&model, o.eps, o.lambda, o.caps, o.max_edges, &field, o.tol)?;
        doc.table(Table {
            name: "rg consistency".into(),
            columns: vec!["hbar".into(), "edges".into(), "lhs".into(), "rhs".into()],
            rows: r
                .rows
                .iter()
                .flat_map(|row| {
                    (0..row.lhs.len().max(row.rhs.len())).map(move |k| {
                        vec![
                            k as f64,
                            row.edges as f64,
                            row.lhs.get(k).copied().unwrap_or(0.0),
                            row.rhs.get(k).copied().unwrap_or(0.0),
                        ]
                    })
                })
                .collect(),
        });
        doc.detail("rg_graphs", r.rows.iter().map(|r| r.graph.clone()).collect::<Vec<_>>());
        doc.numeric("rg consistency", r.report);
    }
    if o.checks.contains(&RgCheck::Uv) {
        let graphs = enumerate_graphs(o.caps, &model.valences(), &model.endpoints())?;
        let mut report = NumericReport::default();
        let mut profiles = Vec::new();
        for g in graphs.iter().filter(|g| g.edge_count() <= o.max_edges) {
            let tol = UvTolerance {
                limit: o.tol,
                ..Default::default()
            };
            let u = uv_finiteness_check(&model, g, &field, o.lambda, &o.eps_sequence, tol)?;
            report.items.extend(u.report.items.iter().cloned());
            profiles.push(serde_json::json!({
                "graph": u.graph,
                "differences": u.differences,
                "rates": u.rates,
            }));
        }
        doc.detail("uv_profiles", profiles);
        doc.numeric("uv finiteness", report);
    }
    if o.checks.contains(&RgCheck::Split) {
        let hl = theory.halfline()?;
        let m = FlowModel::half_line(&hl, kernels)?;
        let (inputs, samples) = splitting_inputs(hl.polarization());
        let d = splitting_diagram_check(&m, o.eps, o.lambda, &inputs, &samples, SplittingTolerance::default())?;
        doc.detail("splitting_rows", &d.rows);
        doc.numeric("splitting diagram", d.report);
    }
    Ok(doc)
}

pub fn cmd_anomaly_probe(
    theory: &Theory,
    kernels: &Kernels,
    algebra: Option<&LieAlgebraData>,
    endpoint: usize,
    preset: FieldPreset,
    t: f64,
    tol: f64,
) -> Result<ReportDocument> {
    let (hl, end) = match (theory, endpoint) {
        (Theory::HalfLine(h), 0) => (h.clone(), ProbeEndpoint::Left),
        (Theory::HalfLine(_), _) => {
            return Err(Error::Validation("a half-line theory has only endpoint 0".into()));
        }
        (Theory::Interval(i), 0) => (i.endpoint_theory(0)?, ProbeEndpoint::Left),
        (Theory::Interval(i), 1) => (i.endpoint_theory(1)?, ProbeEndpoint::Right),
        _ => return Err(Error::Validation(format!("endpoint must be 0 or 1, got {endpoint}"))),
    };
    let field = preset.build(hl.polarization());
    let p = anomaly_probe(&hl, kernels, end, GraphCaps::new(1, 0, 0)?, &field, t, tol)?;
    let mut doc = ReportDocument::new("anomaly-probe");
    doc.detail("endpoint", endpoint);
    doc.detail("fields", preset);
    doc.detail("t", t);
    doc.table(Table {
        name: "anomaly".into(),
        columns: vec!["hbar".into(), "lhs".into(), "rhs".into()],
        rows: (0..p.lhs.len())
            .map(|k| vec![k as f64, p.lhs[k], p.rhs.get(k).copied().unwrap_or(0.0)])
            .collect(),
    });
    doc.detail("boundary_value", &p.boundary_value);
    let mut report = p.report.clone();
    if let Some(g) = algebra {
        // BF: the ħ¹ part on the A side is −½ f^{cb}_c A_b, nothing on the B side.
        let expected = if endpoint == 1 {
            let cf = bf_theory::anomaly_closed_form(g, hl.symplectic(), hl.caps())?;
            evaluate_series(&cf, &p.boundary_value).get(1).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        let got = p.lhs.get(1).copied().unwrap_or(0.0);
        report.record(
            "ħ^1 against the closed-form anomaly".into(),
            (got - expected).abs(),
            tol,
            0.0,
            crate::halfline_kernels::EvalPath::Quadrature,
        );
        doc.detail("closed_form_hbar1", expected);
    }
    doc.numeric("anomaly probe", report);
    Ok(doc)
}

/// Random series of bounded word length on a space, with small rational
/// coefficients.
pub fn random_series(
    space: &Arc<GradedSpace>,
    caps: TruncationCaps,
    rng: &mut ChaCha8Rng,
    terms: usize,
    max_len: usize,
) -> Result<Series> {
    let mut s = Series::zero(space, caps);
    for _ in 0..terms {
        let len = rng.gen_range(0..=max_len);
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..space.dim())).collect();
        let h = rng.gen_range(0..=1);
        let c = rat(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        s = s.add(&Series::monomial(space, caps, c, h, &word)?)?;
    }
    Ok(s)
}

pub fn cmd_selftest(seed: u64) -> Result<ReportDocument> {
    let mut doc = ReportDocument::new("selftest");
    doc.detail("seed", seed);
    let caps = TruncationCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let sym = bf_theory::bf_symplectic(3)?;
    let ctx = BoundaryAlgebraContext::standard(sym.clone(), caps)?;
    let mut assoc = CheckReport::new("moyal_associativity");
    for k in 0..20 {
        let a = random_series(sym.space(), caps, &mut rng, 3, 3)?;
        let b = random_series(sym.space(), caps, &mut rng, 3, 3)?;
        let c = random_series(sym.space(), caps, &mut rng, 3, 3)?;
        let l = ctx.moyal(&ctx.moyal(&a, &b)?, &c)?;
        let r = ctx.moyal(&a, &ctx.moyal(&b, &c)?)?;
        assoc.push_series(&format!("sample {k}: (a*b)*c - a*(b*c)"), &l.sub(&r)?);
    }
    doc.check(assoc.finish());

    let mut ground = CheckReport::new("bf_ground_truth");
    for name in ["sl2", "so3", "heisenberg"] {
        let th = bf_theory::build_bf_theory(&LieAlgebraData::builtin(name)?, caps)?;
        let (h0, h1) = bvbfv_check::bfv_pair_interval(&th)?;
        ground.push_series(&format!("{name}: I*I"), &th.context0()?.moyal(&th.i, &th.i)?);
        ground.push_series(&format!("{name}: H0 + I"), &h0.add(&th.i)?);
        ground.push_series(&format!("{name}: H1 - I"), &h1.sub(&th.i)?);
    }
    doc.check(ground.finish());

    let mut anomaly = CheckReport::new("bf_anomaly_closed_form");
    for name in BUILTIN_ALGEBRAS {
        let r = bf_theory::bf_anomaly_report(&LieAlgebraData::builtin(name)?, caps)?;
        if !r.report.pass {
            anomaly.push(Residual::witness(name, "engine disagrees with the closed form".into()));
        }
    }
    doc.check(anomaly.finish());

    let mut equiv = CheckReport::new("mqme_equivalence");
    for m in bf_theory::theory_family(seed, caps)?.iter().take(12) {
        let ctx = m.theory.context()?;
        if !bvbfv_check::check_flatness(&ctx, &m.theory.i)?.pass {
            continue;
        }
        let h = bvbfv_check::bfv_from_solution(&m.theory)?;
        if !bvbfv_check::check_mqme(&m.theory.with_h(Some(h.clone()))?)?.pass {
            equiv.push(Residual::witness(&m.label, "mQME fails for the induced H".into()));
        }
        let first = h.terms().next().map(|(hb, mo, _)| (hb, mo.clone()));
        if let Some((hb, mo)) = first {
            let word: Vec<usize> = mo.0.iter().map(|&i| i as usize).collect();
            let mutated = h.add(&Series::monomial(h.space(), caps, rat(1, 1), hb, &word)?)?;
            if bvbfv_check::check_mqme(&m.theory.with_h(Some(mutated))?)?.pass {
                equiv.push(Residual::witness(&m.label, "mutated H still passes".into()));
            }
        }
    }
    doc.check(equiv.finish());

    let cfg = BatteryConfig {
        lambdas: vec![1.0],
        xs: vec![0.0, 0.3],
        ..Default::default()
    };
    doc.numeric("kernel battery", halfline_battery(&Kernels::with_cutoff(CutoffFunction::default())?, &cfg));
    Ok(doc)
}
