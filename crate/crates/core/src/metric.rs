//! Geodesic metric spaces and the angle primitives built on top of them.
//!
//! Every concrete space implements [`GeodesicSpace`] on raw coordinate slices;
//! the provided methods wrap those with [`Point`] validation. Points can only be
//! created through [`GeodesicSpace::point`], so a `Point` in hand always passed
//! its space's membership predicate.
//!
//! The Alexandrov inner product `h(beta; x, mu) = d(mu,x) d(mu,beta) cos(angle)`
//! is evaluated through log maps when the space has a chart, and otherwise
//! through a ladder of comparison angles along the two geodesics leaving `mu`.

use std::fmt;

use crate::error::{GeoError, Result};

/// Coordinates closer than this (Euclidean norm of the difference) are the same point.
pub const POINT_EQ_TOL: f64 = 1e-12;

/// Identifier of a space instance, e.g. `spd(3)` or `euclidean(2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceId(String);

impl SpaceId {
    pub fn new(s: impl Into<String>) -> Self {
        SpaceId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureClass {
    Flat,
    NonPositive,
    PositiveBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceCapabilities {
    /// Intrinsic dimension.
    pub dim: usize,
    /// Whether exp/log maps and tangent frames are available.
    pub has_chart: bool,
    pub curvature_class: CurvatureClass,
}

/// An element of a metric space. The coordinate layout is space-specific.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    space: SpaceId,
    coords: Vec<f64>,
}

impl Point {
    pub(crate) fn from_parts(space: SpaceId, coords: Vec<f64>) -> Self {
        Point { space, coords }
    }

    pub fn space_id(&self) -> &SpaceId {
        &self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Same space and coordinate distance below [`POINT_EQ_TOL`].
    pub fn approx_eq(&self, other: &Point) -> bool {
        self.space == other.space
            && self.coords.len() == other.coords.len()
            && coord_distance(&self.coords, &other.coords) < POINT_EQ_TOL
    }
}

/// A tangent vector given by its coefficients in the space's orthonormal frame at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub coeffs: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, coeffs: Vec<f64>) -> Self {
        TangentVector { base, coeffs }
    }

    pub fn zero(base: Point, dim: usize) -> Self {
        TangentVector {
            base,
            coeffs: vec![0.0; dim],
        }
    }

    /// Riemannian norm (the frame is orthonormal).
    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

/// The point at fraction `t` of the arclength from `start` to `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicQuery {
    pub start: Point,
    pub end: Point,
    pub t: f64,
}

impl GeodesicQuery {
    pub fn new(start: Point, end: Point, t: f64) -> Result<Self> {
        check_fraction(t)?;
        Ok(GeodesicQuery { start, end, t })
    }
}

fn check_fraction(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeoError::OutOfRange {
            name: "t",
            value: t,
            bound: "[0, 1]".into(),
        });
    }
    Ok(())
}

/// A uniquely geodesic metric space.
///
/// Implementors provide the `*_coords` methods on raw coordinate slices that
/// are already known to be valid; callers normally use the provided
/// `Point`-level methods which validate space membership first.
pub trait GeodesicSpace: Send + Sync + fmt::Debug {
    fn id(&self) -> &SpaceId;

    fn capabilities(&self) -> SpaceCapabilities;

    /// Number of stored coordinates per point.
    fn ambient_size(&self) -> usize;

    /// Membership predicate on a coordinate vector of the right length.
    fn check_membership(&self, coords: &[f64]) -> Result<()>;

    fn distance_coords(&self, p: &[f64], q: &[f64]) -> f64;

    /// Point at arclength fraction `t` along the geodesic from `p` to `q`.
    fn geodesic_coords(&self, p: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>>;

    /// Frame coefficients of the log map at `p` toward `q`.
    fn log_coords(&self, _p: &[f64], _q: &[f64]) -> Result<Vec<f64>> {
        Err(GeoError::NoChart(self.id().to_string()))
    }

    /// Exponential map at `p` of the tangent vector with frame coefficients `v`.
    fn exp_coords(&self, _p: &[f64], _v: &[f64]) -> Result<Vec<f64>> {
        Err(GeoError::NoChart(self.id().to_string()))
    }

    /// Length of the ambient (space-native) tangent representation.
    fn tangent_ambient_size(&self) -> usize {
        self.capabilities().dim
    }

    /// Frame coefficients to the native tangent representation at `p`.
    fn coeffs_to_ambient(&self, _p: &[f64], _c: &[f64]) -> Result<Vec<f64>> {
        Err(GeoError::NoChart(self.id().to_string()))
    }

    /// Native tangent representation at `p` to frame coefficients.
    fn ambient_to_coeffs(&self, _p: &[f64], _a: &[f64]) -> Result<Vec<f64>> {
        Err(GeoError::NoChart(self.id().to_string()))
    }

    /// Riemannian inner product of two native tangent vectors at `p`.
    fn ambient_inner(&self, _p: &[f64], _u: &[f64], _v: &[f64]) -> Result<f64> {
        Err(GeoError::NoChart(self.id().to_string()))
    }

    /// Range of `s` for which `exp_p(s * dir)` stays in the space, `dir` a unit vector
    /// in frame coefficients.
    fn ray_range(&self, _p: &[f64], _dir: &[f64]) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    // ---- provided, validated API ----

    /// Builds a point, checking length and membership.
    fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.ambient_size() {
            return Err(GeoError::DimensionMismatch {
                expected: self.ambient_size(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeoError::NotInSpace {
                space: self.id().to_string(),
                reason: "non-finite coordinate".into(),
            });
        }
        self.check_membership(&coords)?;
        Ok(Point::from_parts(self.id().clone(), coords))
    }

    fn ensure_member(&self, p: &Point) -> Result<()> {
        if p.space_id() != self.id() {
            return Err(GeoError::SpaceMismatch {
                expected: self.id().to_string(),
                found: p.space_id().to_string(),
            });
        }
        if p.coords().len() != self.ambient_size() {
            return Err(GeoError::DimensionMismatch {
                expected: self.ambient_size(),
                got: p.coords().len(),
            });
        }
        Ok(())
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.ensure_member(p)?;
        self.ensure_member(q)?;
        Ok(self.distance_coords(p.coords(), q.coords()))
    }

    fn geodesic_point(&self, query: &GeodesicQuery) -> Result<Point> {
        check_fraction(query.t)?;
        self.ensure_member(&query.start)?;
        self.ensure_member(&query.end)?;
        if query.t == 0.0 {
            return Ok(query.start.clone());
        }
        if query.t == 1.0 {
            return Ok(query.end.clone());
        }
        let c = self.geodesic_coords(query.start.coords(), query.end.coords(), query.t)?;
        Ok(Point::from_parts(self.id().clone(), c))
    }

    fn exp_map(&self, v: &TangentVector) -> Result<Point> {
        self.ensure_member(&v.base)?;
        check_coeff_len(self, &v.coeffs)?;
        let c = self.exp_coords(v.base.coords(), &v.coeffs)?;
        Ok(Point::from_parts(self.id().clone(), c))
    }

    fn log_map(&self, p: &Point, q: &Point) -> Result<TangentVector> {
        self.ensure_member(p)?;
        self.ensure_member(q)?;
        let c = self.log_coords(p.coords(), q.coords())?;
        Ok(TangentVector::new(p.clone(), c))
    }

    /// Orthonormal frame at `p`: unit coefficient vectors, whose native
    /// representations (see [`GeodesicSpace::to_ambient`]) are orthonormal
    /// under the Riemannian metric.
    fn orthonormal_frame(&self, p: &Point) -> Result<Vec<TangentVector>> {
        self.ensure_member(p)?;
        if !self.capabilities().has_chart {
            return Err(GeoError::NoChart(self.id().to_string()));
        }
        let dim = self.capabilities().dim;
        Ok((0..dim)
            .map(|k| {
                let mut c = vec![0.0; dim];
                c[k] = 1.0;
                TangentVector::new(p.clone(), c)
            })
            .collect())
    }

    fn to_ambient(&self, v: &TangentVector) -> Result<Vec<f64>> {
        self.ensure_member(&v.base)?;
        check_coeff_len(self, &v.coeffs)?;
        self.coeffs_to_ambient(v.base.coords(), &v.coeffs)
    }

    fn from_ambient(&self, base: &Point, ambient: &[f64]) -> Result<TangentVector> {
        self.ensure_member(base)?;
        if ambient.len() != self.tangent_ambient_size() {
            return Err(GeoError::DimensionMismatch {
                expected: self.tangent_ambient_size(),
                got: ambient.len(),
            });
        }
        let c = self.ambient_to_coeffs(base.coords(), ambient)?;
        Ok(TangentVector::new(base.clone(), c))
    }
}

fn check_coeff_len<S: GeodesicSpace + ?Sized>(space: &S, c: &[f64]) -> Result<()> {
    let dim = space.capabilities().dim;
    if c.len() != dim {
        return Err(GeoError::DimensionMismatch {
            expected: dim,
            got: c.len(),
        });
    }
    Ok(())
}

/// Hides the chart of a space, leaving only distance and geodesics.
///
/// Used to evaluate angle-based quantities by the generic metric route.
#[derive(Debug)]
pub struct ChartlessView<'a, S: GeodesicSpace + ?Sized> {
    inner: &'a S,
}

impl<'a, S: GeodesicSpace + ?Sized> ChartlessView<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        ChartlessView { inner }
    }
}

impl<S: GeodesicSpace + ?Sized> GeodesicSpace for ChartlessView<'_, S> {
    fn id(&self) -> &SpaceId {
        self.inner.id()
    }

    fn capabilities(&self) -> SpaceCapabilities {
        SpaceCapabilities {
            has_chart: false,
            ..self.inner.capabilities()
        }
    }

    fn ambient_size(&self) -> usize {
        self.inner.ambient_size()
    }

    fn check_membership(&self, coords: &[f64]) -> Result<()> {
        self.inner.check_membership(coords)
    }

    fn distance_coords(&self, p: &[f64], q: &[f64]) -> f64 {
        self.inner.distance_coords(p, q)
    }

    fn geodesic_coords(&self, p: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>> {
        self.inner.geodesic_coords(p, q, t)
    }
}

// ---- angle primitives ----

/// Euclidean angle at `p` of the comparison triangle with the side lengths of `(p, q, r)`.
pub fn comparison_angle<S: GeodesicSpace + ?Sized>(
    space: &S,
    p: &Point,
    q: &Point,
    r: &Point,
) -> Result<f64> {
    Ok(comparison_cosine(space, p, q, r)?.acos())
}

fn comparison_cosine<S: GeodesicSpace + ?Sized>(
    space: &S,
    p: &Point,
    q: &Point,
    r: &Point,
) -> Result<f64> {
    let dpq = space.distance(p, q)?;
    let dpr = space.distance(p, r)?;
    let dqr = space.distance(q, r)?;
    if p.approx_eq(q) || p.approx_eq(r) || dpq == 0.0 || dpr == 0.0 {
        return Err(GeoError::Degenerate(
            "comparison angle vertex coincides with an endpoint".into(),
        ));
    }
    Ok(law_of_cosines(dpq, dpr, dqr))
}

fn law_of_cosines(a: f64, b: f64, c: f64) -> f64 {
    ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0)
}

/// Settings of the comparison-angle ladder used when a space has no chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleLadder {
    /// Initial step is `min(d(p,q), d(p,r), cap) * initial_fraction`.
    pub initial_fraction: f64,
    pub cap: f64,
    /// Number of halvings evaluated.
    pub depth: usize,
    /// Convergence threshold on successive extrapolated cosines.
    pub tol: f64,
}

impl Default for AngleLadder {
    fn default() -> Self {
        AngleLadder {
            initial_fraction: 0.1,
            cap: 0.1,
            depth: 8,
            tol: 1e-9,
        }
    }
}

/// Cosine of the Alexandrov angle at `p` between the geodesics toward `q` and `r`,
/// computed from distances and geodesics only.
///
/// Comparison cosines are taken at `t = s = delta / 2^k` along both geodesics and
/// one level of Richardson extrapolation removes the `O(t^2)` curvature term.
pub fn alexandrov_cosine_ladder<S: GeodesicSpace + ?Sized>(
    space: &S,
    p: &Point,
    q: &Point,
    r: &Point,
    ladder: &AngleLadder,
) -> Result<f64> {
    let dq = space.distance(p, q)?;
    let dr = space.distance(p, r)?;
    if p.approx_eq(q) || p.approx_eq(r) || dq == 0.0 || dr == 0.0 {
        return Err(GeoError::Degenerate(
            "angle vertex coincides with an endpoint".into(),
        ));
    }
    if ladder.depth < 2 {
        return Err(GeoError::InvalidConfig("angle ladder depth must be >= 2".into()));
    }
    let delta = dq.min(dr).min(ladder.cap) * ladder.initial_fraction;
    let mut cosines = Vec::with_capacity(ladder.depth);
    for k in 0..ladder.depth {
        let t = delta / f64::from(1u32 << k);
        let a = space.geodesic_coords(p.coords(), q.coords(), t / dq)?;
        let b = space.geodesic_coords(p.coords(), r.coords(), t / dr)?;
        let da = space.distance_coords(p.coords(), &a);
        let db = space.distance_coords(p.coords(), &b);
        let dab = space.distance_coords(&a, &b);
        cosines.push(law_of_cosines(da, db, dab));
    }
    let extrapolated: Vec<f64> = cosines
        .windows(2)
        .map(|w| (4.0 * w[1] - w[0]) / 3.0)
        .collect();
    let last = extrapolated[extrapolated.len() - 1];
    if extrapolated.len() == 1 {
        return Ok(last.clamp(-1.0, 1.0));
    }
    let previous = extrapolated[extrapolated.len() - 2];
    if (last - previous).abs() > ladder.tol {
        return Err(GeoError::NumericalLimit { last, previous });
    }
    Ok(last.clamp(-1.0, 1.0))
}

/// Alexandrov angle at `p` between the geodesics toward `q` and `r`.
pub fn alexandrov_angle<S: GeodesicSpace + ?Sized>(
    space: &S,
    p: &Point,
    q: &Point,
    r: &Point,
) -> Result<f64> {
    if space.capabilities().has_chart {
        if p.approx_eq(q) || p.approx_eq(r) {
            return Err(GeoError::Degenerate(
                "angle vertex coincides with an endpoint".into(),
            ));
        }
        let u = space.log_map(p, q)?;
        let v = space.log_map(p, r)?;
        let c = dot(&u.coeffs, &v.coeffs) / (u.norm() * v.norm());
        Ok(c.clamp(-1.0, 1.0).acos())
    } else {
        Ok(alexandrov_cosine_ladder(space, p, q, r, &AngleLadder::default())?.acos())
    }
}

/// `h(beta; x, mu) = d(mu,x) d(mu,beta) cos(angle at mu between x and beta)`.
///
/// Zero when `x` or `beta` coincides with `mu`.
pub fn alexandrov_inner_product<S: GeodesicSpace + ?Sized>(
    space: &S,
    mu: &Point,
    x: &Point,
    beta: &Point,
) -> Result<f64> {
    space.ensure_member(mu)?;
    space.ensure_member(x)?;
    space.ensure_member(beta)?;
    if x.approx_eq(mu) || beta.approx_eq(mu) {
        return Ok(0.0);
    }
    if space.capabilities().has_chart {
        let u = space.log_map(mu, x)?;
        let v = space.log_map(mu, beta)?;
        Ok(dot(&u.coeffs, &v.coeffs))
    } else {
        alexandrov_inner_product_ladder(space, mu, x, beta, &AngleLadder::default())
    }
}

/// The comparison-angle route to `h`, regardless of chart availability.
pub fn alexandrov_inner_product_ladder<S: GeodesicSpace + ?Sized>(
    space: &S,
    mu: &Point,
    x: &Point,
    beta: &Point,
    ladder: &AngleLadder,
) -> Result<f64> {
    if x.approx_eq(mu) || beta.approx_eq(mu) {
        return Ok(0.0);
    }
    let dx = space.distance(mu, x)?;
    let db = space.distance(mu, beta)?;
    let c = alexandrov_cosine_ladder(space, mu, x, beta, ladder)?;
    Ok(dx * db * c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    /// Largest observed `|d(p,q)cos<_p(u,q) - d(p,r)cos<_p(u,r)| / d(q,r)`.
    pub max_ratio: f64,
    pub used: usize,
    /// Quadruples skipped because `q = r` or `u = p`.
    pub degenerate: usize,
}

/// Empirical Lipschitz constant of the Alexandrov projection onto the
/// direction `p -> u`, over quadruples `(p, q, r, u)`.
pub fn check_lipschitz_projection<S: GeodesicSpace + ?Sized>(
    space: &S,
    sample: &[[Point; 4]],
) -> Result<LipschitzReport> {
    if sample.is_empty() {
        return Err(GeoError::Empty("quadruple sample"));
    }
    let mut report = LipschitzReport {
        max_ratio: 0.0,
        used: 0,
        degenerate: 0,
    };
    for [p, q, r, u] in sample {
        if q.approx_eq(r) || u.approx_eq(p) {
            report.degenerate += 1;
            continue;
        }
        let dpu = space.distance(p, u)?;
        let proj_q = alexandrov_inner_product(space, p, u, q)? / dpu;
        let proj_r = alexandrov_inner_product(space, p, u, r)? / dpu;
        let ratio = (proj_q - proj_r).abs() / space.distance(q, r)?;
        report.max_ratio = report.max_ratio.max(ratio);
        report.used += 1;
    }
    Ok(report)
}

// ---- small vector helpers ----

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn coord_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
