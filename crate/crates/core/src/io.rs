//! File formats: the long results table, data-set metadata, the TOML study
//! configuration, and the output artifact set with its manifest.
//!
//! Every float written by this module carries 17 significant digits, which
//! is enough for an exact round trip of any `f64`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::aggregation::{AggregationKind, AggregationStrategy, DEFAULT_ENVIRONMENT};
use crate::diagnostics::{DiagnosticsReport, PermutationScheme};
use crate::error::{Error, Result};
use crate::imputation::{ImputationKind, ImputationStrategy, DEFAULT_THRESHOLD};
use crate::model::{DatasetMeta, MeasureSpec, PerformanceTensor};
use crate::multiverse::{Choice, DatasetFilter, MultiverseConfig, RankingTable, Trajectory, Universe};
use crate::unfolding::{Breakpoint, UnfoldOptions, UnfoldingSolution};

pub const RESULTS_HEADER: [&str; 5] = ["dataset_id", "method_id", "measure_id", "iteration", "value"];
pub const DATASETS_HEADER: [&str; 5] = ["id", "clin", "n", "n_eff", "p"];

/// Environment variable consulted for a seed when neither the command line
/// nor the configuration provides one.
pub const SEED_ENV: &str = "BENCHFOLD_SEED";

/// `v` with 17 significant digits in scientific notation; non-finite values
/// are spelled `NaN`, `inf` and `-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_line(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

fn check_header(name: &str, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            name,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

/// Read a long-format results file against known data sets and measures.
/// Methods are taken in order of first appearance.
pub fn parse_results(path: &Path, datasets: &[DatasetMeta], measures: &[MeasureSpec]) -> Result<PerformanceTensor> {
    let text = read_text(path)?;
    parse_results_str(&text, &path.display().to_string(), datasets, measures)
}

struct Slot {
    value: Option<f64>,
    line: usize,
}

pub fn parse_results_str(
    text: &str,
    name: &str,
    datasets: &[DatasetMeta],
    measures: &[MeasureSpec],
) -> Result<PerformanceTensor> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(name, csv_line(&e), e.to_string()))?;
    check_header(name, headers, &RESULTS_HEADER)?;

    let dataset_idx: HashMap<&str, usize> = datasets.iter().enumerate().map(|(i, d)| (d.id.as_str(), i)).collect();
    let measure_idx: HashMap<&str, usize> = measures.iter().enumerate().map(|(i, m)| (m.id.as_str(), i)).collect();
    let mut methods: Vec<String> = Vec::new();
    let mut method_idx: HashMap<String, usize> = HashMap::new();
    let mut cells: BTreeMap<(usize, usize, usize), BTreeMap<usize, Slot>> = BTreeMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| parse_err(name, csv_line(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let (dataset, method, measure, iteration, value) = (&record[0], &record[1], &record[2], &record[3], &record[4]);
        let d = *dataset_idx
            .get(dataset)
            .ok_or_else(|| parse_err(name, line, format!("unknown dataset `{dataset}`")))?;
        let s = *measure_idx
            .get(measure)
            .ok_or_else(|| parse_err(name, line, format!("unknown measure `{measure}`")))?;
        if method.is_empty() {
            return Err(parse_err(name, line, "empty method id"));
        }
        let m = *method_idx.entry(method.to_string()).or_insert_with(|| {
            methods.push(method.to_string());
            methods.len() - 1
        });
        let it: usize = iteration
            .parse()
            .map_err(|_| parse_err(name, line, format!("iteration `{iteration}` is not a non-negative integer")))?;
        let value = if value.is_empty() {
            None
        } else {
            match value.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => return Err(parse_err(name, line, format!("non-numeric value `{value}`"))),
            }
        };
        let cell = cells.entry((d, m, s)).or_default();
        if let Some(prev) = cell.get(&it) {
            return Err(parse_err(
                name,
                line,
                format!(
                    "duplicate entry for ({dataset}, {method}, {measure}, iteration {it}), first seen on line {}",
                    prev.line
                ),
            ));
        }
        cell.insert(it, Slot { value, line });
    }

    let label = |(d, m, s): (usize, usize, usize)| format!("({}, {}, {})", datasets[d].id, methods[m], measures[s].id);
    let mut counts: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for (&key, slots) in &cells {
        let last = slots.values().map(|s| s.line).max().unwrap_or(0);
        if let Some(missing) = (0..slots.len()).find(|i| !slots.contains_key(i)) {
            return Err(parse_err(
                name,
                last,
                format!("cell {}: iterations are not contiguous from 0 (missing {missing})", label(key)),
            ));
        }
        let (d, m, s) = key;
        match counts.get(&(d, m)) {
            Some(&(n, s0)) if n != slots.len() => {
                return Err(parse_err(
                    name,
                    last,
                    format!(
                        "iteration count mismatch for ({}, {}): {n} for {}, {} for {}",
                        datasets[d].id,
                        methods[m],
                        measures[s0].id,
                        slots.len(),
                        measures[s].id
                    ),
                ));
            }
            Some(_) => {}
            None => {
                counts.insert((d, m), (slots.len(), s));
            }
        }
    }

    let mut tensor = PerformanceTensor::new(datasets.to_vec(), methods.clone(), measures.to_vec());
    for ((d, m, s), slots) in cells {
        let values = slots.into_values().map(|s| s.value).collect();
        tensor.set_cell(&datasets[d].id, &methods[m], &measures[s].id, values)?;
    }
    Ok(tensor)
}

/// Write `tensor` in the long results format. Cells without slots are skipped.
pub fn write_results(path: &Path, tensor: &PerformanceTensor) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for (d, ds) in tensor.datasets().iter().enumerate() {
        for (m, method) in tensor.methods().iter().enumerate() {
            for (s, measure) in tensor.measures().iter().enumerate() {
                for (i, v) in tensor.cell(d, m, s).iter().enumerate() {
                    let value = v.map(format_f64).unwrap_or_default();
                    w.write_record([ds.id.as_str(), method, &measure.id, &i.to_string(), &value])
                        .map_err(csv_err)?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read data-set metadata with header `id,clin,n,n_eff,p`.
pub fn parse_datasets(path: &Path) -> Result<Vec<DatasetMeta>> {
    let text = read_text(path)?;
    parse_datasets_str(&text, &path.display().to_string())
}

pub fn parse_datasets_str(text: &str, name: &str) -> Result<Vec<DatasetMeta>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(name, csv_line(&e), e.to_string()))?;
    check_header(name, headers, &DATASETS_HEADER)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<DatasetMeta>() {
        out.push(row.map_err(|e| parse_err(name, csv_line(&e), e.to_string()))?);
    }
    Ok(out)
}

pub fn write_datasets(path: &Path, datasets: &[DatasetMeta]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for d in datasets {
        w.serialize(d).map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsOptions {
    pub permutations: usize,
    pub scheme: PermutationScheme,
    /// Start budget for the permutation test, used for the observed fit and
    /// every permuted refit alike.
    pub permutation_starts: usize,
    /// Dimensions for the scree curve; by default 1 up to min(M, 4).
    pub scree_dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            permutations: 99,
            scheme: PermutationScheme::WithinRow,
            permutation_starts: 1,
            scree_dims: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingOptions {
    pub permutations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            permutations: 50,
            seed: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    results: Option<PathBuf>,
    datasets: Option<PathBuf>,
    out: Option<PathBuf>,
    #[serde(default)]
    measures: Vec<MeasureSpec>,
    multiverse: RawMultiverse,
    #[serde(default)]
    unfolding: UnfoldOptions,
    #[serde(default)]
    diagnostics: DiagnosticsOptions,
    #[serde(default)]
    sampling: SamplingOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMultiverse {
    filters: Vec<String>,
    measures: Vec<String>,
    imputations: Vec<String>,
    #[serde(default = "default_threshold")]
    threshold: f64,
    aggregations: Vec<String>,
    #[serde(default = "default_environment")]
    environment: f64,
    #[serde(default)]
    defaults: RawDefaults,
    #[serde(default = "default_order")]
    stepwise_order: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDefaults {
    datasets: Option<String>,
    measure: Option<String>,
    imputation: Option<String>,
    aggregation: Option<String>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_environment() -> f64 {
    DEFAULT_ENVIRONMENT
}

fn default_order() -> Vec<String> {
    ["imputation", "aggregation", "measure", "datasets"].map(String::from).to_vec()
}

/// A fully resolved study configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Specs of the measures named in the option grid, in grid order.
    pub measures: Vec<MeasureSpec>,
    pub multiverse: MultiverseConfig,
    pub unfolding: UnfoldOptions,
    /// `unfolding.seed` if the file sets it.
    pub unfolding_seed: Option<u64>,
    pub diagnostics: DiagnosticsOptions,
    pub sampling: SamplingOptions,
    /// Input and output paths, resolved against the config file's directory.
    pub results: Option<PathBuf>,
    pub datasets: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn parse_config(path: &Path) -> Result<StudyConfig> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_config_str(&text, &path.display().to_string(), base)
}

fn line_of(text: &str, offset: usize) -> usize {
    1 + text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count()
}

fn parse_list<T: FromStr<Err = String>>(field: &str, items: &[String]) -> Result<Vec<T>> {
    let mut seen = std::collections::HashSet::new();
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if !seen.insert(s.as_str()) {
                return Err(Error::config(format!("{field}[{i}]"), format!("duplicate option `{s}`")));
            }
            s.parse().map_err(|e| Error::config(format!("{field}[{i}]"), e))
        })
        .collect()
}

fn pick_default<T: Clone + PartialEq>(
    choice: &str,
    given: Option<&String>,
    labels: &[String],
    options: &[T],
) -> Result<T> {
    let field = format!("multiverse.defaults.{choice}");
    match given {
        Some(label) => labels.iter().position(|l| l == label).map(|i| options[i].clone()).ok_or_else(|| {
            Error::config(field, format!("default `{label}` is not among the {choice} options"))
        }),
        None if options.len() == 1 => Ok(options[0].clone()),
        None => Err(Error::config(
            field,
            format!("required because there are {} options", options.len()),
        )),
    }
}

pub fn parse_config_str(text: &str, name: &str, base: &Path) -> Result<StudyConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| {
        parse_err(name, e.span().map_or(0, |s| line_of(text, s.start)), e.message().to_string())
    })?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::config(path, inner.message().to_string())
    })?;
    let unfolding_seed = text
        .parse::<toml::Table>()
        .ok()
        .and_then(|t| t.get("unfolding")?.get("seed")?.as_integer())
        .map(|s| s as u64);

    let mv = &raw.multiverse;
    let filters: Vec<DatasetFilter> = parse_list("multiverse.filters", &mv.filters)?;
    let kinds: Vec<ImputationKind> = parse_list("multiverse.imputations", &mv.imputations)?;
    let imputations = kinds
        .into_iter()
        .map(|k| ImputationStrategy::with_threshold(k, mv.threshold))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::config("multiverse.threshold", e.to_string()))?;
    let kinds: Vec<AggregationKind> = parse_list("multiverse.aggregations", &mv.aggregations)?;
    let aggregations = kinds
        .into_iter()
        .map(|k| AggregationStrategy::with_environment(k, mv.environment))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::config("multiverse.environment", e.to_string()))?;
    let mut seen = std::collections::HashSet::new();
    for (i, m) in mv.measures.iter().enumerate() {
        if !seen.insert(m) {
            return Err(Error::config(format!("multiverse.measures[{i}]"), format!("duplicate option `{m}`")));
        }
    }
    let order: Vec<Choice> = parse_list("multiverse.stepwise_order", &mv.stepwise_order)?;
    let stepwise_order: [Choice; 4] = order.try_into().map_err(|_| {
        Error::config(
            "multiverse.stepwise_order",
            "must list datasets, measure, imputation and aggregation once each",
        )
    })?;

    let mut measures = Vec::with_capacity(mv.measures.len());
    for (i, id) in mv.measures.iter().enumerate() {
        let spec = raw
            .measures
            .iter()
            .find(|m| &m.id == id)
            .cloned()
            .or_else(|| match id.as_str() {
                "ibrier" => Some(MeasureSpec::ibrier()),
                "cindex" => Some(MeasureSpec::cindex()),
                _ => None,
            })
            .ok_or_else(|| {
                Error::config(
                    format!("multiverse.measures[{i}]"),
                    format!("measure `{id}` has no [[measures]] entry"),
                )
            })?;
        measures.push(spec);
    }

    let d = &mv.defaults;
    let labels = |v: &[String]| v.to_vec();
    let defaults = Universe {
        filter: pick_default("datasets", d.datasets.as_ref(), &labels(&mv.filters), &filters)?,
        measure: pick_default("measure", d.measure.as_ref(), &labels(&mv.measures), &mv.measures)?,
        imputation: pick_default("imputation", d.imputation.as_ref(), &labels(&mv.imputations), &imputations)?,
        aggregation: pick_default("aggregation", d.aggregation.as_ref(), &labels(&mv.aggregations), &aggregations)?,
    };
    let multiverse = MultiverseConfig {
        filters,
        measures: mv.measures.clone(),
        imputations,
        aggregations,
        defaults,
        stepwise_order,
    };
    multiverse.validate()?;
    raw.unfolding.validate()?;
    if raw.diagnostics.permutation_starts == 0 {
        return Err(Error::config("diagnostics.permutation_starts", "must be a positive integer"));
    }
    if raw.sampling.permutations == 0 {
        return Err(Error::config("sampling.permutations", "must be a positive integer"));
    }
    let resolve = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });
    Ok(StudyConfig {
        measures,
        multiverse,
        unfolding: raw.unfolding,
        unfolding_seed,
        diagnostics: raw.diagnostics,
        sampling: raw.sampling,
        results: resolve(raw.results),
        datasets: resolve(raw.datasets),
        out: resolve(raw.out),
    })
}

/// Seed from [`SEED_ENV`], if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(SEED_ENV, format!("`{v}` is not a non-negative integer"))),
        Err(_) => Ok(None),
    }
}

/// First of: an explicit seed, a configured seed, [`SEED_ENV`], `fallback`.
pub fn resolve_seed(explicit: Option<u64>, configured: Option<u64>, fallback: u64) -> Result<u64> {
    if let Some(s) = explicit.or(configured) {
        return Ok(s);
    }
    Ok(env_seed()?.unwrap_or(fallback))
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Fixed17(PrettyFormatter<'static>);

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serialize `value` as pretty JSON with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Internal(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

/// The four options of a universe plus its key, as written to output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniverseLabel {
    pub key: String,
    pub datasets: String,
    pub measure: String,
    pub imputation: String,
    pub aggregation: String,
}

impl From<&Universe> for UniverseLabel {
    fn from(u: &Universe) -> Self {
        UniverseLabel {
            key: u.key(),
            datasets: u.option_label(Choice::Datasets),
            measure: u.option_label(Choice::Measure),
            imputation: u.option_label(Choice::Imputation),
            aggregation: u.option_label(Choice::Aggregation),
        }
    }
}

/// Contents of `unfolding.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingFile {
    pub options: UnfoldOptions,
    pub seed: u64,
    pub rows: Vec<UniverseLabel>,
    pub methods: Vec<String>,
    pub ideal_points: Vec<Vec<f64>>,
    pub object_points: Vec<Vec<f64>>,
    pub disparities: Vec<Vec<f64>>,
    pub distances: Vec<Vec<f64>>,
    pub transform: Vec<Vec<Breakpoint>>,
    pub stress_penalized: f64,
    pub stress_raw: f64,
    pub stress_normalized: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: usize,
}

impl UnfoldingFile {
    pub fn new(table: &RankingTable, solution: &UnfoldingSolution, options: &UnfoldOptions) -> Self {
        UnfoldingFile {
            options: UnfoldOptions {
                weights: None,
                ..options.clone()
            },
            seed: options.seed,
            rows: table.rows.iter().map(|r| UniverseLabel::from(&r.universe)).collect(),
            methods: table.methods.clone(),
            ideal_points: solution.z1.clone(),
            object_points: solution.z2.clone(),
            disparities: solution.disparities.clone(),
            distances: solution.distances.clone(),
            transform: solution.transform.clone(),
            stress_penalized: solution.stress_penalized,
            stress_raw: solution.stress_raw,
            stress_normalized: solution.stress_normalized,
            iterations: solution.iterations,
            converged: solution.converged,
            start: solution.start,
        }
    }
}

/// One sampled data-set group and the default-universe ranking on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixGroup {
    pub datasets: Vec<String>,
    pub ranks: Vec<f64>,
}

/// Contents of `prefix_groups.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixGroupsFile {
    pub n_perms: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub groups: Vec<PrefixGroup>,
}

/// Everything a run may produce; absent parts are not written.
#[derive(Debug, Default, Clone, Copy)]
pub struct Artifacts<'a> {
    pub table: Option<&'a RankingTable>,
    pub unfolding: Option<&'a UnfoldingFile>,
    pub diagnostics: Option<&'a DiagnosticsReport>,
    pub trajectories: Option<&'a [Trajectory]>,
    pub prefix_groups: Option<&'a PrefixGroupsFile>,
}

pub const RANKINGS_FILE: &str = "rankings.csv";
pub const UNFOLDING_FILE: &str = "unfolding.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const STEPWISE_FILE: &str = "stepwise.json";
pub const DISTANCES_FILE: &str = "distances.csv";
pub const PREFIX_GROUPS_FILE: &str = "prefix_groups.json";
pub const MANIFEST_FILE: &str = "manifest.json";

const ARTIFACT_FILES: [&str; 6] = [
    DIAGNOSTICS_FILE,
    DISTANCES_FILE,
    PREFIX_GROUPS_FILE,
    RANKINGS_FILE,
    STEPWISE_FILE,
    UNFOLDING_FILE,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub files: Vec<ManifestEntry>,
}

pub fn rankings_csv(table: &RankingTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Internal(e.to_string());
    let mut header: Vec<&str> = Choice::ALL.iter().map(|c| c.as_str()).collect();
    header.extend(table.methods.iter().map(String::as_str));
    w.write_record(&header).map_err(err)?;
    for row in &table.rows {
        let mut rec: Vec<String> = Choice::ALL.iter().map(|&c| row.universe.option_label(c)).collect();
        rec.extend(row.ranks.iter().map(|&r| format_f64(r)));
        w.write_record(&rec).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

pub fn distances_csv(report: &DiagnosticsReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(["choice", "alternative", "context", "distance"]).map_err(err)?;
    for d in &report.default_distances {
        w.write_record([d.choice.as_str(), &d.alternative, &d.context, &format_f64(d.distance)])
            .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

/// Write the requested artifacts into `dir` and refresh `manifest.json`,
/// which lists every known artifact present in `dir` with its SHA-256.
pub fn write_outputs(dir: &Path, artifacts: &Artifacts<'_>) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let put = |name: &str, bytes: Vec<u8>| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    };
    if let Some(table) = artifacts.table {
        put(RANKINGS_FILE, rankings_csv(table)?)?;
    }
    if let Some(u) = artifacts.unfolding {
        put(UNFOLDING_FILE, to_json(u)?)?;
    }
    if let Some(report) = artifacts.diagnostics {
        put(DIAGNOSTICS_FILE, to_json(report)?)?;
        put(DISTANCES_FILE, distances_csv(report)?)?;
    }
    if let Some(t) = artifacts.trajectories {
        put(STEPWISE_FILE, to_json(t)?)?;
    }
    if let Some(g) = artifacts.prefix_groups {
        put(PREFIX_GROUPS_FILE, to_json(g)?)?;
    }

    let mut files = Vec::new();
    for name in ARTIFACT_FILES {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.push(ManifestEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let manifest = Manifest {
        tool: format!("benchfold {}", env!("CARGO_PKG_VERSION")),
        files,
    };
    put(MANIFEST_FILE, to_json(&manifest)?)?;
    Ok(manifest)
}
