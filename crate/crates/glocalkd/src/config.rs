//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Training keys may
//! also come from `GLOCALKD_<KEY>` environment variables (e.g.
//! `GLOCALKD_LR=0.001`). Precedence, lowest first: built-in defaults, the
//! file, the environment, command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use glocalkd_core::{
    AblationMode, CvOptions, ExperimentGrid, ExperimentKind, LossTerms, SynthSpec, TrainConfig,
};

use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "GLOCALKD_";

pub const TRAIN_KEYS: [&str; 9] = [
    "lr",
    "batch_size",
    "epochs",
    "lambda",
    "seed_target",
    "seed_predictor",
    "seed_shuffle",
    "layer_dims",
    "loss_terms",
];

/// Parsed `key = value` pairs with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            let key = k.trim().to_string();
            if entries.insert(key.clone(), (v.trim().to_string(), i + 1)).is_some() {
                return Err(Error::parse(path, i + 1, format!("duplicate key {key:?}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (value.into(), 0));
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Overlays `GLOCALKD_<KEY>` variables for each of `keys`.
    pub fn overlay_env(&mut self, keys: &[&str], lookup: impl Fn(&str) -> Option<String>) {
        for key in keys {
            if let Some(v) = lookup(&format!("{ENV_PREFIX}{}", key.to_ascii_uppercase())) {
                self.set(key, v);
            }
        }
    }

    fn unknown(&self, allowed: &[&str]) -> Vec<String> {
        self.keys()
            .filter(|k| !allowed.contains(k))
            .map(|k| format!("unknown key {k:?}"))
            .collect()
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|t| t.trim().parse().ok()).collect()
}

/// Collects per-key problems instead of stopping at the first.
struct Collector<'a> {
    kv: &'a KeyValues,
    problems: Vec<String>,
}

impl<'a> Collector<'a> {
    fn value<T: std::str::FromStr>(&mut self, key: &str, target: &mut T) {
        if let Some(v) = self.kv.get(key) {
            match v.parse() {
                Ok(parsed) => *target = parsed,
                Err(_) => self.problems.push(format!("{key}: cannot parse {v:?}")),
            }
        }
    }

    fn with<T>(&mut self, key: &str, parse: impl Fn(&str) -> Option<T>, target: &mut T) {
        if let Some(v) = self.kv.get(key) {
            match parse(v) {
                Some(parsed) => *target = parsed,
                None => self.problems.push(format!("{key}: cannot parse {v:?}")),
            }
        }
    }
}

/// Builds a training configuration; the error lists every problem found.
pub fn train_config(kv: &KeyValues) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    let mut c = Collector {
        kv,
        problems: kv.unknown(&TRAIN_KEYS),
    };
    c.value("lr", &mut cfg.lr);
    c.value("batch_size", &mut cfg.batch_size);
    c.value("epochs", &mut cfg.epochs);
    c.value("lambda", &mut cfg.lambda);
    c.value("seed_target", &mut cfg.seed_target);
    c.value("seed_predictor", &mut cfg.seed_predictor);
    c.value("seed_shuffle", &mut cfg.seed_shuffle);
    c.with("layer_dims", parse_list::<usize>, &mut cfg.layer_dims);
    c.with("loss_terms", LossTerms::parse, &mut cfg.loss_terms);
    let mut problems = c.problems;
    problems.extend(cfg.violations());
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(format!("invalid configuration: {}", problems.join("; "))))
    }
}

/// `(key, value)` pairs describing `cfg`, in `TRAIN_KEYS` order.
pub fn train_entries(cfg: &TrainConfig) -> Vec<(&'static str, String)> {
    let dims: Vec<String> = cfg.layer_dims.iter().map(usize::to_string).collect();
    vec![
        ("lr", format!("{:?}", cfg.lr)),
        ("batch_size", cfg.batch_size.to_string()),
        ("epochs", cfg.epochs.to_string()),
        ("lambda", format!("{:?}", cfg.lambda)),
        ("seed_target", cfg.seed_target.to_string()),
        ("seed_predictor", cfg.seed_predictor.to_string()),
        ("seed_shuffle", cfg.seed_shuffle.to_string()),
        ("layer_dims", dims.join(",")),
        ("loss_terms", cfg.loss_terms.as_str().to_string()),
    ]
}

pub const GRID_KEYS: [&str; 7] = [
    "kind",
    "axis",
    "repeats",
    "folds",
    "cv_seed",
    "retain_anomalies",
    "ablation",
];

/// Builds an experiment grid. `kind` from the command line wins over the
/// file; a conflicting `kind` key is an error.
pub fn grid(kv: &KeyValues, kind: ExperimentKind, base: TrainConfig) -> Result<ExperimentGrid> {
    let mut g = ExperimentGrid::new(kind, base);
    let mut c = Collector {
        kv,
        problems: kv.unknown(&GRID_KEYS),
    };
    if let Some(k) = kv.get("kind") {
        if ExperimentKind::parse(k) != Some(kind) {
            c.problems.push(format!("kind: file says {k:?} but {:?} was requested", kind.as_str()));
        }
    }
    c.with("axis", parse_list::<f64>, &mut g.axis);
    c.value("repeats", &mut g.repeats);
    let mut cv = CvOptions::default();
    c.value("folds", &mut cv.k);
    c.value("cv_seed", &mut cv.seed);
    c.value("retain_anomalies", &mut cv.retain_anomalies);
    c.with("ablation", AblationMode::parse, &mut g.ablation);
    g.cv = cv;
    if !c.problems.is_empty() {
        return Err(Error::Config(format!("invalid grid: {}", c.problems.join("; "))));
    }
    g.validate()?;
    Ok(g)
}

pub const SYNTH_KEYS: [&str; 14] = [
    "preset",
    "name",
    "normal",
    "local_anomalies",
    "global_anomalies",
    "min_nodes",
    "max_nodes",
    "feature_dim",
    "node_types",
    "noise_sigma",
    "outlier_sigmas",
    "outlier_nodes",
    "clique_density",
    "motif_size",
];

/// Builds a synthetic corpus spec on top of `preset = global | local`
/// (default `global`).
pub fn synth_spec(kv: &KeyValues) -> Result<SynthSpec> {
    let mut problems = kv.unknown(&SYNTH_KEYS);
    let mut s = match kv.get("preset").unwrap_or("global") {
        "global" => SynthSpec::global_corpus(),
        "local" => SynthSpec::local_corpus(),
        other => {
            problems.push(format!("preset: unknown {other:?}"));
            SynthSpec::default()
        }
    };
    let mut c = Collector { kv, problems };
    c.value("name", &mut s.name);
    c.value("normal", &mut s.normal);
    c.value("local_anomalies", &mut s.local_anomalies);
    c.value("global_anomalies", &mut s.global_anomalies);
    c.value("min_nodes", &mut s.min_nodes);
    c.value("max_nodes", &mut s.max_nodes);
    c.value("feature_dim", &mut s.feature_dim);
    c.value("node_types", &mut s.node_types);
    c.value("noise_sigma", &mut s.noise_sigma);
    c.value("outlier_sigmas", &mut s.outlier_sigmas);
    c.value("outlier_nodes", &mut s.outlier_nodes);
    c.value("clique_density", &mut s.clique_density);
    c.value("motif_size", &mut s.motif_size);
    if !c.problems.is_empty() {
        return Err(Error::Config(format!("invalid synthetic spec: {}", c.problems.join("; "))));
    }
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(text: &str) -> KeyValues {
        KeyValues::parse(text, Path::new("test.cfg")).unwrap()
    }

    #[test]
    fn defaults_when_empty() {
        assert_eq!(train_config(&kv("# nothing\n\n")).unwrap(), TrainConfig::default());
    }

    #[test]
    fn reads_every_key() {
        let cfg = train_config(&kv(
            "lr = 0.001\nbatch_size=32\nepochs = 7\nlambda = 0.5\nseed_target = 9\n\
             seed_predictor = 8\nseed_shuffle = 7\nlayer_dims = 16, 8\nloss_terms = node-only\n",
        ))
        .unwrap();
        assert_eq!(cfg.lr, 0.001);
        assert_eq!(cfg.batch_size, 32);
        assert_eq!(cfg.epochs, 7);
        assert_eq!(cfg.lambda, 0.5);
        assert_eq!((cfg.seed_target, cfg.seed_predictor, cfg.seed_shuffle), (9, 8, 7));
        assert_eq!(cfg.layer_dims, vec![16, 8]);
        assert_eq!(cfg.loss_terms, LossTerms::NodeOnly);
    }

    #[test]
    fn lists_every_violation() {
        let err = train_config(&kv("lr = -1\nepochs = 0\nbatch_size = x\nbogus = 1\n")).unwrap_err();
        let msg = err.to_string();
        for needle in ["lr", "epochs", "batch_size", "bogus"] {
            assert!(msg.contains(needle), "{msg}");
        }
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = KeyValues::parse("lr = 1\nnot a pair\n", Path::new("c.cfg")).unwrap_err();
        assert!(err.to_string().starts_with("c.cfg:2:"), "{err}");
    }

    #[test]
    fn env_overlay() {
        let mut k = kv("lr = 0.1\n");
        k.overlay_env(&TRAIN_KEYS, |name| (name == "GLOCALKD_LR").then(|| "0.5".to_string()));
        assert_eq!(train_config(&k).unwrap().lr, 0.5);
    }

    #[test]
    fn grid_keys() {
        let g = grid(
            &kv("axis = 0.5, 1.0\nrepeats = 2\nfolds = 3\nretain_anomalies = true\n"),
            ExperimentKind::SampleEfficiency,
            TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(g.axis, vec![0.5, 1.0]);
        assert_eq!((g.repeats, g.cv.k, g.cv.retain_anomalies), (2, 3, true));

        let err = grid(&kv("axis = 0.5, 1.5\n"), ExperimentKind::SampleEfficiency, TrainConfig::default())
            .unwrap_err();
        assert!(err.to_string().contains("1.5"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn synth_presets() {
        assert_eq!(synth_spec(&kv("")).unwrap(), SynthSpec::global_corpus());
        let s = synth_spec(&kv("preset = local\nnormal = 10\n")).unwrap();
        assert_eq!((s.normal, s.local_anomalies), (10, SynthSpec::local_corpus().local_anomalies));
        assert!(synth_spec(&kv("normal = 0\n")).is_err());
    }
}
