//! Fitted model as `key=value` text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use geolog::{FitResult, GeodesicSpace, TangentVector};

use crate::bundle::{join_coords, split_coords, SpaceKind, SpaceSpec};
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub spec: SpaceSpec,
    pub fit: FitResult,
}

impl ModelFile {
    pub fn render(&self) -> String {
        let f = &self.fit;
        let mut out = String::new();
        let _ = writeln!(out, "tool=geolog {TOOL_VERSION}");
        let _ = writeln!(out, "space={}", self.spec.kind);
        let _ = writeln!(out, "dim={}", self.spec.dim);
        let _ = writeln!(out, "mu={}", join_coords(f.mu_hat.coords()));
        let _ = writeln!(out, "beta={}", join_coords(f.beta_hat.coords()));
        let _ = writeln!(out, "b={}", join_coords(&f.b_hat.coeffs));
        let _ = writeln!(out, "loglik={}", crate::bundle::fmt_coord(f.loglik));
        let _ = writeln!(out, "grad_norm={}", crate::bundle::fmt_coord(f.grad_norm));
        let _ = writeln!(out, "iters={}", f.iters);
        let _ = writeln!(out, "converged={}", f.converged);
        let _ = writeln!(out, "separated={}", f.separated);
        let _ = writeln!(out, "beta_projected={}", f.beta_projected);
        out
    }

    pub fn parse(text: &str) -> Result<ModelFile, CliError> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {}: expected key=value", i + 1)))?;
            kv.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            kv.get(k)
                .copied()
                .ok_or_else(|| CliError::Input(format!("model is missing {k:?}")))
        };
        let bad = |k: &str, why: String| CliError::Input(format!("model field {k:?}: {why}"));
        let flag = |k: &str| -> Result<bool, CliError> {
            get(k)?.parse().map_err(|_| bad(k, "expected true or false".into()))
        };
        let number = |k: &str| -> Result<f64, CliError> {
            get(k)?.parse().map_err(|_| bad(k, "not a number".into()))
        };
        let coords = |k: &str| split_coords(get(k)?).map_err(|e| bad(k, e));

        let tool = get("tool")?;
        if !tool.starts_with("geolog ") {
            return Err(bad("tool", format!("unrecognized producer {tool:?}")));
        }
        let kind: SpaceKind = get("space")?.parse()?;
        let dim = get("dim")?.parse().map_err(|_| bad("dim", "not a count".into()))?;
        let spec = SpaceSpec::new(kind, dim);
        let space = spec.build()?;
        let mu_hat = space.point(coords("mu")?).map_err(|e| bad("mu", e.to_string()))?;
        let beta_hat = space.point(coords("beta")?).map_err(|e| bad("beta", e.to_string()))?;
        let b = coords("b")?;
        let frame_dim = space.log_map(&mu_hat, &mu_hat)?.coeffs.len();
        if b.len() != frame_dim {
            return Err(bad("b", format!("expected {frame_dim} coefficients, got {}", b.len())));
        }
        let fit = FitResult {
            b_hat: TangentVector::new(mu_hat.clone(), b),
            mu_hat,
            beta_hat,
            loglik: number("loglik")?,
            grad_norm: number("grad_norm")?,
            iters: get("iters")?.parse().map_err(|_| bad("iters", "not a count".into()))?,
            converged: flag("converged")?,
            separated: flag("separated")?,
            beta_projected: flag("beta_projected")?,
            frechet: None,
        };
        Ok(ModelFile { spec, fit })
    }

    pub fn read(path: &str) -> Result<ModelFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ModelFile::parse(&text).map_err(|e| e.context(path))
    }

    pub fn space(&self) -> Result<Box<dyn GeodesicSpace>, CliError> {
        self.spec.build()
    }
}
