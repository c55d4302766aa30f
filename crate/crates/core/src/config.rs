//! Experiment-grid configuration.
//!
//! A flat `key = value` format. Keys before the first `[section]` are
//! global: stream settings plus defaults for every cell. Each `[name]`
//! section is one cell and may override any cell key. `protocol`,
//! `strategy`, `arch` and `alpha` accept `|`-separated lists, which expand
//! into the cartesian product of cells. `#` starts a comment; values may be
//! double-quoted.
//!
//! ```text
//! buckets = 10
//! drift = 0.15707963
//! n_seeds = 5
//!
//! [alpha_sweep]
//! protocol = streaming
//! alpha = fixed:0.5 | fixed:1 | fixed:2 | fixed:5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::corpus::DriftConfig;
use crate::learner::{ArchKind, Hyperparams, Strategy};
use crate::protocol::{BufferCapacity, ProtocolKind, RunConfig};
use crate::sampler::AlphaPolicy;

/// Reference for every key, shown by `driftbench run --help`.
pub const CONFIG_HELP: &str = "\
CONFIG KEYS

Global section (before the first [cell] header):
  stream          synthetic | file                       [synthetic]
  feature_file    path to a feature file (stream = file)
  normalize       L2-normalize file features: true|false [false]
  buckets         number of time buckets N               [10]
  classes         synthetic class count C                [4]
  dim             synthetic feature dimension d          [8]
  per_class       synthetic samples per class per bucket [200]
  radius          synthetic class-mean radius            [1.0]
  drift           mean rotation per bucket, radians      [0.15707963 = pi/20]
  noise           synthetic noise standard deviation     [0.3]
  stream_seed     synthetic stream seed                  [0]
  out             output directory (overridden by --out)

Cell keys (global defaults, overridable per [cell] section):
  protocol        iid | streaming                        [streaming]
  strategy        napping | from_scratch | finetuning | gdumb [finetuning]
  arch            linear | mlp:<hidden>                  [linear]
  alpha           fixed:<a> | dynamic:<c>                [fixed:1.0]
  buffer          <samples> | bucket                     [bucket]
  train_fraction  iid train share in (0, 1)              [0.7]
  lr              learning rate                          [1.0 linear, 0.1 mlp]
  momentum        SGD momentum in [0, 1)                 [0.9]
  weight_decay    L2 penalty                             [0]
  batch           minibatch size                         [256]
  epochs          epochs per timestamp                   [100]
  decay_epoch     epochs before lr decay                 [60]
  decay_factor    lr multiplier after decay_epoch        [0.1]
  n_seeds         runs per cell                          [5]
  base_seed       seed of run 0; run r uses base_seed+r  [0]

protocol, strategy, arch and alpha accept `|`-separated lists that expand
into one cell per combination. DRIFTBENCH_SEED overrides base_seed.";

const STREAM_KEYS: &[&str] = &[
    "stream",
    "feature_file",
    "normalize",
    "buckets",
    "classes",
    "dim",
    "per_class",
    "radius",
    "drift",
    "noise",
    "stream_seed",
    "out",
];

const CELL_KEYS: &[&str] = &[
    "protocol",
    "strategy",
    "arch",
    "alpha",
    "buffer",
    "train_fraction",
    "lr",
    "momentum",
    "weight_decay",
    "batch",
    "epochs",
    "decay_epoch",
    "decay_factor",
    "n_seeds",
    "base_seed",
];

const LIST_KEYS: &[&str] = &["protocol", "strategy", "arch", "alpha"];

/// One problem in a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "line {}: `{k}`: {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

/// All problems found in one config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(Diagnostic::to_string).collect();
        write!(f, "invalid config:\n  {}", lines.join("\n  "))
    }
}

impl std::error::Error for Diagnostics {}

/// Where the stream comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamSource {
    Synthetic(DriftConfig),
    File {
        path: PathBuf,
        normalize: bool,
        buckets: usize,
    },
}

/// A named grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub name: String,
    pub run: RunConfig,
}

/// Stream source plus every cell to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub source: StreamSource,
    pub cells: Vec<Cell>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentGrid {
    /// Replaces `base_seed` in every cell.
    pub fn override_base_seed(&mut self, seed: u64) {
        for c in &mut self.cells {
            c.run.base_seed = seed;
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Debug, Default)]
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

fn suggest(key: &str) -> Option<&'static str> {
    STREAM_KEYS
        .iter()
        .chain(CELL_KEYS)
        .map(|k| (strsim::damerau_levenshtein(key, k), *k))
        .filter(|(d, _)| *d <= 2)
        .min()
        .map(|(_, k)| k)
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(v)
}

fn tokenize(text: &str, diags: &mut Vec<Diagnostic>) -> (Section, Vec<Section>) {
    let mut global = Section::default();
    let mut cells: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let Some(name) = header.strip_suffix(']').map(str::trim).filter(|n| !n.is_empty()) else {
                diags.push(Diagnostic {
                    line,
                    key: None,
                    message: format!("bad section header `{content}`"),
                });
                continue;
            };
            let name = name.strip_prefix("cell ").unwrap_or(name).trim().to_string();
            if cells.iter().any(|c| c.name == name) {
                diags.push(Diagnostic {
                    line,
                    key: None,
                    message: format!("duplicate cell `{name}`"),
                });
            }
            cells.push(Section {
                name,
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            diags.push(Diagnostic {
                line,
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let key = key.trim().to_string();
        let value = unquote(value.trim()).trim().to_string();
        let in_cell = !cells.is_empty();
        let known_stream = STREAM_KEYS.contains(&key.as_str());
        let known_cell = CELL_KEYS.contains(&key.as_str());
        if !known_stream && !known_cell {
            let hint = suggest(&key).map_or(String::new(), |s| format!("; did you mean `{s}`?"));
            diags.push(Diagnostic {
                line,
                key: Some(key),
                message: format!("unknown key{hint}"),
            });
            continue;
        }
        if in_cell && known_stream {
            diags.push(Diagnostic {
                line,
                key: Some(key),
                message: "stream keys are only allowed in the global section".into(),
            });
            continue;
        }
        let section = cells.last_mut().unwrap_or(&mut global);
        if section.entries.contains_key(&key) {
            diags.push(Diagnostic {
                line,
                key: Some(key),
                message: "key set twice in one section".into(),
            });
            continue;
        }
        section.entries.insert(key, Entry { line, value });
    }
    (global, cells)
}

struct Lookup<'a> {
    cell: Option<&'a Section>,
    global: &'a Section,
    diags: &'a mut Vec<Diagnostic>,
}

impl Lookup<'_> {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.cell
            .and_then(|c| c.entries.get(key))
            .or_else(|| self.global.entries.get(key))
    }

    fn get<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> T {
        let Some(e) = self.entry(key).cloned() else {
            return default;
        };
        match parse(&e.value) {
            Ok(v) => v,
            Err(message) => {
                self.diags.push(Diagnostic {
                    line: e.line,
                    key: Some(key.into()),
                    message,
                });
                default
            }
        }
    }

    fn has(&self, key: &str) -> bool {
        self.entry(key).is_some()
    }
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse `{v}`"))
}

fn positive(v: &str) -> Result<usize, String> {
    match v.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected a positive integer, got `{v}`")),
    }
}

fn finite(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got `{v}`")),
    }
}

fn in_range(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> impl Fn(&str) -> Result<f64, String> {
    move |v| {
        let x = finite(v)?;
        let ok = (if lo_open { x > lo } else { x >= lo }) && (if hi_open { x < hi } else { x <= hi });
        if ok {
            Ok(x)
        } else {
            let l = if lo_open { '(' } else { '[' };
            let h = if hi_open { ')' } else { ']' };
            Err(format!("{x} is out of range {l}{lo}, {hi}{h}"))
        }
    }
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn list<T: std::str::FromStr<Err = crate::error::Error>>(v: &str) -> Result<Vec<T>, String> {
    v.split('|')
        .map(|item| unquote(item.trim()).parse::<T>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_source(global: &Section, diags: &mut Vec<Diagnostic>) -> (StreamSource, Option<PathBuf>) {
    let mut l = Lookup {
        cell: None,
        global,
        diags,
    };
    let kind = l.get("stream", "synthetic".to_string(), |v| match v {
        "synthetic" | "file" => Ok(v.to_string()),
        _ => Err(format!("expected synthetic or file, got `{v}`")),
    });
    let buckets = l.get("buckets", 10, positive);
    let out = l.get("out", None, |v| Ok(Some(PathBuf::from(v))));
    let source = if kind == "file" {
        let line = l.global.line;
        let path = l.get("feature_file", None, |v| Ok(Some(PathBuf::from(v))));
        let normalize = l.get("normalize", false, boolean);
        match path {
            Some(path) => StreamSource::File {
                path,
                normalize,
                buckets,
            },
            None => {
                l.diags.push(Diagnostic {
                    line: line.max(1),
                    key: Some("feature_file".into()),
                    message: "required when stream = file".into(),
                });
                StreamSource::Synthetic(DriftConfig::default())
            }
        }
    } else {
        let d = DriftConfig::default();
        let cfg = DriftConfig {
            num_classes: l.get("classes", d.num_classes, positive),
            dim: l.get("dim", d.dim, |v| match v.parse::<usize>() {
                Ok(n) if n >= 2 => Ok(n),
                _ => Err(format!("expected an integer >= 2, got `{v}`")),
            }),
            num_buckets: buckets,
            per_class: l.get("per_class", d.per_class, positive),
            radius: l.get("radius", d.radius, in_range(0.0, f64::MAX, true, false)),
            drift: l.get("drift", d.drift, in_range(0.0, f64::MAX, false, false)),
            noise: l.get("noise", d.noise, in_range(0.0, f64::MAX, true, false)),
            seed: l.get("stream_seed", d.seed, num::<u64>),
        };
        StreamSource::Synthetic(cfg)
    };
    (source, out)
}

fn sanitize(v: &str) -> String {
    v.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn parse_cell(cell: &Section, global: &Section, diags: &mut Vec<Diagnostic>) -> Vec<Cell> {
    let mut l = Lookup {
        cell: Some(cell),
        global,
        diags,
    };
    let base = RunConfig::default();
    let protocols = l.get("protocol", vec![base.protocol], list::<ProtocolKind>);
    let strategies = l.get("strategy", vec![base.strategy], list::<Strategy>);
    let arches = l.get("arch", vec![base.arch], list::<ArchKind>);
    let alphas = l.get("alpha", vec![base.alpha], list::<AlphaPolicy>);
    let buffer = l.get("buffer", base.buffer, |v| {
        v.parse::<BufferCapacity>().map_err(|e| e.to_string())
    });
    let train_fraction = l.get("train_fraction", base.train_fraction, in_range(0.0, 1.0, true, true));
    let n_seeds = l.get("n_seeds", base.n_seeds, positive);
    let base_seed = l.get("base_seed", base.base_seed, num::<u64>);

    let hp_base = Hyperparams::linear_default();
    let lr_set = l.has("lr");
    let lr = l.get("lr", hp_base.learning_rate, in_range(0.0, f64::MAX, false, false));
    let momentum = l.get("momentum", hp_base.momentum, in_range(0.0, 1.0, false, true));
    let weight_decay = l.get(
        "weight_decay",
        hp_base.weight_decay,
        in_range(0.0, f64::MAX, false, false),
    );
    let batch = l.get("batch", hp_base.batch_size, positive);
    let epochs = l.get("epochs", hp_base.epochs, positive);
    let decay_epoch = l.get("decay_epoch", hp_base.decay_epoch, positive);
    let decay_factor = l.get("decay_factor", hp_base.decay_factor, in_range(0.0, 1.0, true, false));
    if decay_epoch > epochs {
        let line = l
            .entry("decay_epoch")
            .or(l.entry("epochs"))
            .map_or(cell.line, |e| e.line);
        l.diags.push(Diagnostic {
            line,
            key: Some("decay_epoch".into()),
            message: format!("decay_epoch {decay_epoch} exceeds epochs {epochs}"),
        });
    }

    let expanded: Vec<&str> = LIST_KEYS
        .iter()
        .copied()
        .filter(|k| l.entry(k).is_some_and(|e| e.value.contains('|')))
        .collect();

    let mut cells = Vec::new();
    for &protocol in &protocols {
        for &strategy in &strategies {
            for &arch in &arches {
                for &alpha in &alphas {
                    let hp = Hyperparams {
                        learning_rate: if lr_set {
                            lr
                        } else {
                            Hyperparams::default_for(arch).learning_rate
                        },
                        momentum,
                        weight_decay,
                        batch_size: batch,
                        epochs,
                        decay_epoch,
                        decay_factor,
                        seed: 0,
                    };
                    let mut name = cell.name.clone();
                    for key in &expanded {
                        let value = match *key {
                            "protocol" => protocol.to_string(),
                            "strategy" => strategy.to_string(),
                            "arch" => arch.to_string(),
                            _ => alpha.to_string(),
                        };
                        name.push_str(&format!("-{key}_{}", sanitize(&value)));
                    }
                    cells.push(Cell {
                        name,
                        run: RunConfig {
                            protocol,
                            strategy,
                            arch,
                            hyperparams: hp,
                            alpha,
                            buffer,
                            train_fraction,
                            n_seeds,
                            base_seed,
                        },
                    });
                }
            }
        }
    }
    cells
}

/// Parses and type-checks a grid config, reporting every problem found.
pub fn validate_config(text: &str) -> Result<ExperimentGrid, Diagnostics> {
    let mut diags = Vec::new();
    let (global, sections) = tokenize(text, &mut diags);
    let (source, output_dir) = parse_source(&global, &mut diags);
    if sections.is_empty() {
        diags.push(Diagnostic {
            line: text.lines().count().max(1),
            key: None,
            message: "config defines no [cell] sections".into(),
        });
    }
    let cells: Vec<Cell> = sections
        .iter()
        .flat_map(|s| parse_cell(s, &global, &mut diags))
        .collect();
    if diags.is_empty() {
        Ok(ExperimentGrid {
            source,
            cells,
            output_dir,
        })
    } else {
        diags.sort_by_key(|d| d.line);
        Err(Diagnostics(diags))
    }
}

/// Settings for `driftbench curate --spec`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurationSettings {
    pub per_class_top: usize,
    pub background_low_per_class: usize,
    pub final_per_class: usize,
    pub seed: u64,
    pub rejections: Option<PathBuf>,
    pub timestamps: Option<PathBuf>,
}

impl Default for CurationSettings {
    fn default() -> Self {
        Self {
            per_class_top: 600,
            background_low_per_class: 60,
            final_per_class: 300,
            seed: 0,
            rejections: None,
            timestamps: None,
        }
    }
}

const CURATE_KEYS: &[&str] = &[
    "per_class_top",
    "background_low_per_class",
    "final_per_class",
    "seed",
    "rejections",
    "timestamps",
];

/// Parses a curation spec file (`key = value`, no sections).
pub fn parse_curation_settings(text: &str) -> Result<CurationSettings, Diagnostics> {
    let mut s = CurationSettings::default();
    let mut diags = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            diags.push(Diagnostic {
                line,
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let (key, value) = (key.trim(), unquote(value.trim()));
        let result = match key {
            "per_class_top" => positive(value).map(|v| s.per_class_top = v),
            "background_low_per_class" => positive(value).map(|v| s.background_low_per_class = v),
            "final_per_class" => positive(value).map(|v| s.final_per_class = v),
            "seed" => num::<u64>(value).map(|v| s.seed = v),
            "rejections" => {
                s.rejections = Some(value.into());
                Ok(())
            }
            "timestamps" => {
                s.timestamps = Some(value.into());
                Ok(())
            }
            _ => {
                let hint = CURATE_KEYS
                    .iter()
                    .map(|k| (strsim::damerau_levenshtein(key, k), *k))
                    .filter(|(d, _)| *d <= 2)
                    .min()
                    .map_or(String::new(), |(_, k)| format!("; did you mean `{k}`?"));
                Err(format!("unknown key{hint}"))
            }
        };
        if let Err(message) = result {
            diags.push(Diagnostic {
                line,
                key: Some(key.into()),
                message,
            });
        }
    }
    if s.final_per_class > s.per_class_top {
        diags.push(Diagnostic {
            line: 0,
            key: Some("final_per_class".into()),
            message: "must not exceed per_class_top".into(),
        });
    }
    if diags.is_empty() {
        Ok(s)
    } else {
        Err(Diagnostics(diags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only_diag(text: &str) -> Diagnostic {
        let mut d = validate_config(text).unwrap_err().0;
        assert_eq!(d.len(), 1, "{d:?}");
        d.remove(0)
    }

    #[test]
    fn unknown_key_suggests_fix() {
        let d = only_diag("[a]\naplha = fixed:1\n");
        assert_eq!(d.line, 2);
        assert!(d.message.contains("did you mean `alpha`"), "{}", d.message);
    }

    #[test]
    fn quoted_dynamic_alpha() {
        let g = validate_config("[a]\nalpha = \"dynamic:0.75\"\n").unwrap();
        assert_eq!(g.cells[0].run.alpha, AlphaPolicy::Dynamic(0.75));
    }

    #[test]
    fn train_fraction_range() {
        let d = only_diag("[a]\ntrain_fraction = 1.2\n");
        assert_eq!((d.line, d.key.as_deref()), (2, Some("train_fraction")));
        assert!(d.message.contains("out of range"));
    }

    #[test]
    fn lists_expand_to_cells() {
        let g = validate_config(
            "n_seeds = 2\n[sweep]\nalpha = fixed:0.5 | fixed:1 | fixed:2 | fixed:5\nstrategy = finetuning|from_scratch\n",
        )
        .unwrap();
        assert_eq!(g.cells.len(), 8);
        assert!(g.cells.iter().all(|c| c.run.n_seeds == 2));
        assert_eq!(g.cells[0].name, "sweep-strategy_finetuning-alpha_fixed_0.5");
    }

    #[test]
    fn mlp_default_learning_rate() {
        let g = validate_config("[a]\narch = mlp:32\n[b]\narch = mlp\nlr = 0.5\n").unwrap();
        assert_eq!(g.cells[0].run.hyperparams.learning_rate, 0.1);
        assert_eq!(g.cells[1].run.hyperparams.learning_rate, 0.5);
    }

    #[test]
    fn stream_settings() {
        let g = validate_config("buckets = 3\ndrift = 0\nper_class = 7\n[a]\n").unwrap();
        match g.source {
            StreamSource::Synthetic(cfg) => {
                assert_eq!((cfg.num_buckets, cfg.per_class, cfg.drift), (3, 7, 0.0));
            }
            other => panic!("{other:?}"),
        }
        let g = validate_config("stream = file\nfeature_file = x.tsv\nnormalize = true\n[a]\n").unwrap();
        assert!(matches!(g.source, StreamSource::File { normalize: true, .. }));
    }

    #[test]
    fn collects_every_problem() {
        let d = validate_config("stream = file\n[a]\nbuckets = 3\nepochs = 0\nepochs = 2\n[a]\n")
            .unwrap_err()
            .0;
        let lines: Vec<usize> = d.iter().map(|d| d.line).collect();
        assert!(
            lines.contains(&3) && lines.contains(&4) && lines.contains(&5) && lines.contains(&6),
            "{d:?}"
        );
        assert!(validate_config("buckets = 3\n").is_err());
        assert!(validate_config("[a]\nepochs = 10\ndecay_epoch = 20\n").is_err());
    }

    #[test]
    fn curation_settings() {
        let s = parse_curation_settings("per_class_top = 50\nfinal_per_class = 20\nseed = 3\n").unwrap();
        assert_eq!((s.per_class_top, s.final_per_class, s.seed), (50, 20, 3));
        assert_eq!(s.background_low_per_class, 60);
        assert!(parse_curation_settings("final_per_class = 700\n").is_err());
        let d = parse_curation_settings("sed = 1\n").unwrap_err();
        assert!(d.0[0].message.contains("`seed`"));
    }
}
