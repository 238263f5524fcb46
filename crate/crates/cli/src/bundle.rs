//! Text bundle of labelled points: a `#space=... dim=... n=...` header, then
//! one `label,coord,...` record per line.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use geolog::spaces::{EuclideanSpace, SpdLogCholeskySpace, SphereQuadrantSpace, Wasserstein1DSpace};
use geolog::{Dataset, GeodesicSpace, Point};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Euclidean,
    Spd,
    Sphere,
    Wasserstein1d,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Spd => "spd",
            SpaceKind::Sphere => "sphere",
            SpaceKind::Wasserstein1d => "wasserstein1d",
        }
    }
}

impl FromStr for SpaceKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "euclidean" => Ok(SpaceKind::Euclidean),
            "spd" => Ok(SpaceKind::Spd),
            "sphere" => Ok(SpaceKind::Sphere),
            "wasserstein1d" => Ok(SpaceKind::Wasserstein1d),
            _ => Err(CliError::Input(format!(
                "unknown space {s:?}; expected euclidean, spd, sphere or wasserstein1d"
            ))),
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Space family plus its size parameter: dimension `D` for euclidean and
/// sphere (`S^D`), matrix order for spd, grid size for wasserstein1d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub dim: usize,
}

impl SpaceSpec {
    pub fn new(kind: SpaceKind, dim: usize) -> Self {
        SpaceSpec { kind, dim }
    }

    pub fn build(&self) -> Result<Box<dyn GeodesicSpace>, CliError> {
        let space: Box<dyn GeodesicSpace> = match self.kind {
            SpaceKind::Euclidean => Box::new(EuclideanSpace::new(self.dim)?),
            SpaceKind::Spd => Box::new(SpdLogCholeskySpace::new(self.dim)?),
            SpaceKind::Sphere => Box::new(SphereQuadrantSpace::new(self.dim)?),
            SpaceKind::Wasserstein1d => Box::new(Wasserstein1DSpace::new(self.dim)?),
        };
        Ok(space)
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dim={}", self.kind, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// `None` for an unlabelled (`?`) record.
    pub label: Option<bool>,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub spec: SpaceSpec,
    pub rows: Vec<Row>,
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_coord(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_coord(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value {s:?}"))
    }
}

pub fn join_coords(coords: &[f64]) -> String {
    coords.iter().map(|c| fmt_coord(*c)).collect::<Vec<_>>().join(",")
}

pub fn split_coords(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_coord).collect()
}

fn parse_header(line: &str) -> Result<(SpaceSpec, usize), CliError> {
    let bad = |why: &str| CliError::Input(format!("line 1: bad header {line:?}: {why}"));
    let body = line.strip_prefix('#').ok_or_else(|| bad("must start with '#space='"))?;
    let (mut kind, mut dim, mut n) = (None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| bad("fields are key=value"))?;
        match key {
            "space" => kind = Some(value.parse::<SpaceKind>()?),
            "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad("dim is not a count"))?),
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad("n is not a count"))?),
            _ => return Err(bad(&format!("unknown field {key:?}"))),
        }
    }
    match (kind, dim, n) {
        (Some(kind), Some(dim), Some(n)) => Ok((SpaceSpec::new(kind, dim), n)),
        _ => Err(bad("needs space, dim and n")),
    }
}

impl Bundle {
    /// Parses and validates: row count, coordinate count and membership.
    pub fn parse(text: &str) -> Result<Bundle, CliError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| CliError::Input("empty bundle".into()))?;
        let (spec, n) = parse_header(header.trim())?;
        let space = spec.build()?;
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let err = |why: String| CliError::Input(format!("line {lineno}: {why}"));
            let (label, rest) = line
                .trim()
                .split_once(',')
                .ok_or_else(|| err("expected label,coordinates".into()))?;
            let label = match label.trim() {
                "0" => Some(false),
                "1" => Some(true),
                "?" => None,
                other => return Err(err(format!("label must be 0, 1 or ?, got {other:?}"))),
            };
            let coords = split_coords(rest).map_err(err)?;
            space.point(coords.clone()).map_err(|e| err(e.to_string()))?;
            rows.push(Row { label, coords });
        }
        if rows.len() != n {
            return Err(CliError::Input(format!(
                "header declares n={n} rows, found {}",
                rows.len()
            )));
        }
        Ok(Bundle { spec, rows })
    }

    pub fn read(path: &str) -> Result<Bundle, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Bundle::parse(&text).map_err(|e| e.context(path))
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "#space={} dim={} n={}\n",
            self.spec.kind,
            self.spec.dim,
            self.rows.len()
        );
        for row in &self.rows {
            let label = match row.label {
                Some(true) => "1",
                Some(false) => "0",
                None => "?",
            };
            let _ = writeln!(out, "{label},{}", join_coords(&row.coords));
        }
        out
    }

    pub fn from_dataset(spec: SpaceSpec, data: &Dataset) -> Bundle {
        let rows = data
            .points()
            .iter()
            .zip(data.labels())
            .map(|(p, &y)| Row {
                label: Some(y),
                coords: p.coords().to_vec(),
            })
            .collect();
        Bundle { spec, rows }
    }

    pub fn points(&self, space: &dyn GeodesicSpace) -> Result<Vec<Point>, CliError> {
        self.rows
            .iter()
            .map(|r| space.point(r.coords.clone()).map_err(CliError::from))
            .collect()
    }

    /// Labelled dataset; unlabelled rows are rejected rather than dropped.
    pub fn dataset(&self, space: &dyn GeodesicSpace) -> Result<Dataset, CliError> {
        let labels = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label.ok_or_else(|| {
                    CliError::Input(format!("record {} is unlabelled ('?'); fitting needs 0/1 labels", i + 1))
                })
            })
            .collect::<Result<Vec<bool>, CliError>>()?;
        Ok(Dataset::new(space.id().clone(), self.points(space)?, labels)?)
    }
}
