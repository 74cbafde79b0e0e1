//! Text formats for parameter snapshots and trained models.
//!
//! A parameter block:
//!
//! ```text
//! params seed 17 input_dim 3 layers 4 2
//! w 0 0.25 -0.5 ...      (one line per weight row, `w <layer>` prefix)
//! b 0 0.0 0.0 0.0 0.0    (one bias line per layer)
//! ...
//! end
//! ```
//!
//! A model file is a header followed by the target and predictor blocks.
//! Reals are written in shortest round-trip form and read back exactly.

use std::fmt::Write as _;
use std::path::Path;

use glocalkd_core::gcn::GcnParams;
use glocalkd_core::{DistillModel, FeatureKind, FeatureSpec, GcnArch, LossTerms};

use crate::error::{Error, Result};

const MODEL_MAGIC: &str = "glocalkd-model 1";

/// Appends a parameter block.
pub fn write_params(out: &mut String, params: &GcnParams, seed: u64) {
    let arch = params.arch();
    let dims: Vec<String> = arch.layer_dims.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "params seed {seed} input_dim {} layers {}", arch.input_dim, dims.join(" "));
    for (l, layer) in params.layers.iter().enumerate() {
        for row in layer.weight.row_iter() {
            let _ = write!(out, "w {l}");
            for v in row {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        let _ = write!(out, "b {l}");
        for v in &layer.bias {
            let _ = write!(out, " {v:?}");
        }
        out.push('\n');
    }
    out.push_str("end\n");
}

pub fn params_to_string(params: &GcnParams, seed: u64) -> String {
    let mut out = String::new();
    write_params(&mut out, params, seed);
    out
}

pub(crate) struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(text: &'a str, path: &'a Path) -> Self {
        Self {
            lines: text.lines().enumerate(),
            path,
            line: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        let (i, l) = self
            .lines
            .next()
            .ok_or_else(|| Error::parse(self.path, self.line + 1, "unexpected end of file"))?;
        self.line = i + 1;
        Ok(l)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, message)
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid value {s:?}")))
    }

    /// Tokens of the next line after checking its leading keyword(s).
    fn tagged(&mut self, tag: &[&str]) -> Result<Vec<&'a str>> {
        let l = self.next()?;
        let tokens: Vec<&str> = l.split(' ').collect();
        if tokens.len() < tag.len() || tokens[..tag.len()] != *tag {
            return Err(self.err(format!("expected `{}`", tag.join(" "))));
        }
        Ok(tokens[tag.len()..].to_vec())
    }

    fn key_value(&mut self, key: &str) -> Result<&'a str> {
        let rest = self.tagged(&[key])?;
        match rest[..] {
            [v] => Ok(v),
            _ => Err(self.err(format!("expected `{key} <value>`"))),
        }
    }

    fn reals(&self, tokens: &[&str], expected: usize) -> Result<Vec<f64>> {
        if tokens.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", tokens.len())));
        }
        tokens.iter().map(|t| self.num::<f64>(t)).collect()
    }

    /// Reads one parameter block; returns it with its seed.
    pub(crate) fn params(&mut self) -> Result<(GcnParams, u64)> {
        let head = self.tagged(&["params", "seed"])?;
        if head.len() < 4 || head[1] != "input_dim" || head[3] != "layers" {
            return Err(self.err("expected `params seed <s> input_dim <n> layers <k...>`"));
        }
        let seed: u64 = self.num(head[0])?;
        let input_dim: usize = self.num(head[2])?;
        let dims: Vec<usize> = head[4..].iter().map(|t| self.num(t)).collect::<Result<_>>()?;
        let arch = GcnArch::new(input_dim, dims).map_err(|e| self.err(e.to_string()))?;
        let mut params = GcnParams::zeros(&arch);
        for (l, layer) in params.layers.iter_mut().enumerate() {
            let tag = l.to_string();
            let (rows, cols) = layer.weight.shape();
            for r in 0..rows {
                let tokens = self.tagged(&["w", &tag])?;
                let row = self.reals(&tokens, cols)?;
                layer.weight.row_mut(r).copy_from_slice(&row);
            }
            let tokens = self.tagged(&["b", &tag])?;
            layer.bias = self.reals(&tokens, cols)?;
        }
        self.tagged(&["end"])?;
        Ok((params, seed))
    }

    fn finish(&mut self) -> Result<()> {
        for (i, l) in self.lines.by_ref() {
            if !l.trim().is_empty() {
                return Err(Error::parse(self.path, i + 1, "trailing content"));
            }
        }
        Ok(())
    }
}

pub fn parse_params(text: &str, path: &Path) -> Result<(GcnParams, u64)> {
    let mut r = Reader::new(text, path);
    let out = r.params()?;
    r.finish()?;
    Ok(out)
}

pub fn model_to_string(model: &DistillModel) -> String {
    let mut out = String::new();
    let f = model.features();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "feature_kind {}", f.kind.as_str());
    let _ = writeln!(out, "input_dim {}", f.input_dim);
    let _ = writeln!(
        out,
        "max_degree {}",
        f.max_degree.map_or_else(|| "-".to_string(), |d| d.to_string())
    );
    let _ = writeln!(out, "lambda {:?}", model.lambda());
    let _ = writeln!(out, "loss_terms {}", model.loss_terms().as_str());
    out.push_str("target\n");
    write_params(&mut out, model.target(), model.seed_target());
    out.push_str("predictor\n");
    write_params(&mut out, model.predictor(), model.seed_predictor());
    out
}

pub fn parse_model(text: &str, path: &Path) -> Result<DistillModel> {
    let mut r = Reader::new(text, path);
    if r.next()? != MODEL_MAGIC {
        return Err(r.err(format!("expected header `{MODEL_MAGIC}`")));
    }
    let kind_str = r.key_value("feature_kind")?;
    let kind = FeatureKind::parse(kind_str).ok_or_else(|| r.err(format!("unknown feature kind {kind_str:?}")))?;
    let v = r.key_value("input_dim")?;
    let input_dim: usize = r.num(v)?;
    let max_degree = match r.key_value("max_degree")? {
        "-" => None,
        v => Some(r.num::<usize>(v)?),
    };
    let v = r.key_value("lambda")?;
    let lambda: f64 = r.num(v)?;
    let terms_str = r.key_value("loss_terms")?;
    let loss_terms = LossTerms::parse(terms_str).ok_or_else(|| r.err(format!("unknown loss terms {terms_str:?}")))?;
    r.tagged(&["target"])?;
    let (target, seed_target) = r.params()?;
    r.tagged(&["predictor"])?;
    let (predictor, seed_predictor) = r.params()?;
    r.finish()?;
    let features = FeatureSpec {
        kind,
        input_dim,
        max_degree,
    };
    Ok(DistillModel::from_parts(
        target.arch(),
        target,
        predictor,
        features,
        lambda,
        loss_terms,
        seed_target,
        seed_predictor,
    )?)
}

pub fn write_model(model: &DistillModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<DistillModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}
