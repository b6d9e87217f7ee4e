//! Samplers for the fixed-n Gaussian cloud, the monotone Poissonized family
//! and the coupled triple `P⁻ ⊆ X_n ⊆ P⁺`.
//!
//! All three draw coordinates from one point sequence per seed, so clouds
//! of different sizes from the same seed are prefixes of each other.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Dimension;
use crate::rng::{Role, SeedRecord};

/// Which of the three coupled processes a cloud was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupledPart {
    Minus,
    Fixed,
    Plus,
}

/// How a cloud's point count was determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudKind {
    Binomial { n: u64 },
    Poisson { mean: f64 },
    Coupled { n: u64, part: CoupledPart },
}

impl fmt::Display for CloudKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CloudKind::Binomial { .. } => write!(f, "binomial"),
            CloudKind::Poisson { mean } => write!(f, "poisson:{mean}"),
            CloudKind::Coupled { n, part } => {
                let p = match part {
                    CoupledPart::Minus => "minus",
                    CoupledPart::Fixed => "fixed",
                    CoupledPart::Plus => "plus",
                };
                write!(f, "coupled-{p}:{n}")
            }
        }
    }
}

impl std::str::FromStr for CloudKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain("kind", format!("unrecognized cloud kind `{s}`"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("binomial", None) => Ok(CloudKind::Binomial { n: 0 }),
            ("poisson", Some(a)) => Ok(CloudKind::Poisson {
                mean: a.parse().map_err(|_| bad())?,
            }),
            (h, Some(a)) if h.starts_with("coupled-") => {
                let part = match &h["coupled-".len()..] {
                    "minus" => CoupledPart::Minus,
                    "fixed" => CoupledPart::Fixed,
                    "plus" => CoupledPart::Plus,
                    _ => return Err(bad()),
                };
                Ok(CloudKind::Coupled {
                    n: a.parse().map_err(|_| bad())?,
                    part,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// A d-dimensional sample stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: Dimension,
    coords: Vec<f64>,
    pub seed: Option<SeedRecord>,
    pub kind: CloudKind,
}

impl PointCloud {
    /// Wraps row-major coordinates. Rejects non-finite values and ragged
    /// input.
    pub fn from_coords(dim: Dimension, coords: Vec<f64>, kind: CloudKind) -> Result<Self> {
        let d = dim.as_usize();
        if !coords.len().is_multiple_of(d) {
            return Err(Error::domain(
                "coords",
                format!("length {} is not a multiple of d = {d}", coords.len()),
            ));
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain("coords", format!("non-finite coordinate in point {}", i / d)));
        }
        let kind = match kind {
            CloudKind::Binomial { .. } => CloudKind::Binomial {
                n: (coords.len() / d) as u64,
            },
            k => k,
        };
        Ok(PointCloud {
            dim,
            coords,
            seed: None,
            kind,
        })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.as_usize()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim.as_usize();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim.as_usize())
    }

    /// Multiplies every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> PointCloud {
        PointCloud {
            coords: self.coords.iter().map(|x| x * s).collect(),
            ..self.clone()
        }
    }

    /// Appends one point.
    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim.as_usize() || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("point", "wrong dimension or non-finite coordinate"));
        }
        self.coords.extend_from_slice(p);
        if let CloudKind::Binomial { n } = &mut self.kind {
            *n += 1;
        }
        Ok(())
    }

    /// Writes the whitespace-separated dump format with its `# d=… n=…`
    /// header line.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let seed = self.seed.unwrap_or_default();
        writeln!(
            w,
            "# d={} n={} seed={} replicate={} kind={}",
            self.dim,
            self.len(),
            seed.base,
            seed.replicate,
            self.kind
        )?;
        let mut line = String::new();
        for p in self.points() {
            line.clear();
            for (k, x) in p.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&format_real(*x));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Parses the dump format written by [`PointCloud::write_dump`].
    pub fn read_dump<R: BufRead>(r: R) -> Result<PointCloud> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or(Error::Parse {
                line: 1,
                detail: "empty input".into(),
            })??;
        let header_err = |detail: String| Error::Parse { line: 1, detail };
        let body = header
            .strip_prefix('#')
            .ok_or_else(|| header_err("missing `#` header".into()))?;
        let mut d = None;
        let mut n = None;
        let mut seed = SeedRecord::default();
        let mut has_seed = false;
        let mut kind = CloudKind::Binomial { n: 0 };
        for tok in body.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| header_err(format!("malformed header token `{tok}`")))?;
            let num = |v: &str| v.parse::<u64>().map_err(|_| header_err(format!("bad value in `{tok}`")));
            match k {
                "d" => d = Some(num(v)?),
                "n" => n = Some(num(v)?),
                "seed" => {
                    seed.base = num(v)?;
                    has_seed = true;
                }
                "replicate" => seed.replicate = num(v)?,
                "kind" => kind = v.parse().map_err(|e: Error| header_err(e.to_string()))?,
                _ => return Err(header_err(format!("unknown header key `{k}`"))),
            }
        }
        let d = d.ok_or_else(|| header_err("header lacks d=".into()))?;
        let dim = Dimension::new(u32::try_from(d).map_err(|_| header_err("d too large".into()))?)?;
        let mut coords = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let before = coords.len();
            for tok in line.split_whitespace() {
                coords.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    detail: format!("bad coordinate `{tok}`"),
                })?);
            }
            if coords.len() - before != dim.as_usize() {
                return Err(Error::Parse {
                    line: lineno,
                    detail: format!("expected {d} coordinates, got {}", coords.len() - before),
                });
            }
        }
        let mut cloud = PointCloud::from_coords(dim, coords, kind)?;
        if let Some(n) = n {
            if n as usize != cloud.len() {
                return Err(header_err(format!("header says n={n} but {} points follow", cloud.len())));
            }
        }
        if has_seed {
            cloud.seed = Some(seed);
        }
        Ok(cloud)
    }
}

/// Formats a real with 17 significant digits, enough to round-trip.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// The infinite i.i.d. standard-normal point sequence X₁, X₂, … of a seed.
pub struct PointSequence {
    dim: Dimension,
    rng: ChaCha8Rng,
}

impl PointSequence {
    pub fn new(dim: Dimension, seed: SeedRecord) -> Self {
        PointSequence {
            dim,
            rng: seed.stream(Role::Points, 0),
        }
    }

    /// Appends the next `count` points to `out`.
    pub fn extend_into(&mut self, out: &mut Vec<f64>, count: usize) {
        let k = count * self.dim.as_usize();
        out.reserve(k);
        for _ in 0..k {
            out.push(StandardNormal.sample(&mut self.rng));
        }
    }
}

/// The first `n` points of the seed's sequence.
pub fn sample_cloud(d: Dimension, n: usize, seed: SeedRecord) -> PointCloud {
    let mut coords = Vec::new();
    PointSequence::new(d, seed).extend_into(&mut coords, n);
    PointCloud {
        dim: d,
        coords,
        seed: Some(seed),
        kind: CloudKind::Binomial { n: n as u64 },
    }
}

/// A realization of a unit-rate Poisson process on (0, horizon]; the count
/// at `n` is the number of arrivals up to `n`, nondecreasing in `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonePoissonFamily {
    arrivals: Vec<f64>,
    horizon: f64,
}

impl MonotonePoissonFamily {
    pub fn sample(horizon: f64, seed: SeedRecord) -> Self {
        let mut rng = seed.stream(Role::Arrivals, 0);
        let mut arrivals = Vec::new();
        let mut t = 0.0;
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            t += gap;
            if t > horizon {
                break;
            }
            arrivals.push(t);
        }
        MonotonePoissonFamily { arrivals, horizon }
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    /// N_n. Panics if `n` exceeds the sampled horizon.
    pub fn count(&self, n: f64) -> usize {
        assert!(n <= self.horizon, "count({n}) beyond horizon {}", self.horizon);
        self.arrivals.partition_point(|&t| t <= n)
    }
}

/// Nested Poisson clouds `P_n` for every `n` of an increasing grid, all cut
/// from one point sequence; `P_n` has intensity `n φ`.
pub fn poissonize(d: Dimension, n_grid: &[f64], seed: SeedRecord) -> Result<Vec<PointCloud>> {
    if n_grid.windows(2).any(|w| !(w[0] < w[1])) || n_grid.iter().any(|n| !(*n >= 0.0)) {
        return Err(Error::domain("n_grid", "must be nonnegative and strictly increasing"));
    }
    let Some(&top) = n_grid.last() else {
        return Ok(Vec::new());
    };
    let family = MonotonePoissonFamily::sample(top, seed);
    let total = family.count(top);
    let mut coords = Vec::new();
    PointSequence::new(d, seed).extend_into(&mut coords, total);
    let k = d.as_usize();
    Ok(n_grid
        .iter()
        .map(|&n| PointCloud {
            dim: d,
            coords: coords[..family.count(n) * k].to_vec(),
            seed: Some(seed),
            kind: CloudKind::Poisson { mean: n },
        })
        .collect())
}

/// `P⁻ = {X₁…X_N}`, `X_n = {X₁…X_n}`, `P⁺ = {X₁…X_{N+M}}` over one point
/// sequence, with `N ~ Poisson(n − n^{3/4})` and `M ~ Poisson(2 n^{3/4})`
/// independent of each other and of the points.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTriple {
    dim: Dimension,
    base: Vec<f64>,
    pub n: usize,
    pub n_minus: usize,
    pub extra: usize,
    pub seed: SeedRecord,
}

impl CoupledTriple {
    /// `H_n`: `P⁻ ⊆ X_n ⊆ P⁺`, i.e. `N ≤ n ≤ N + M`.
    pub fn coupling_holds(&self) -> bool {
        self.n_minus <= self.n && self.n <= self.n_minus + self.extra
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    fn prefix(&self, count: usize) -> &[f64] {
        &self.base[..count * self.dim.as_usize()]
    }

    pub fn minus_coords(&self) -> &[f64] {
        self.prefix(self.n_minus)
    }

    pub fn fixed_coords(&self) -> &[f64] {
        self.prefix(self.n)
    }

    pub fn plus_coords(&self) -> &[f64] {
        self.prefix(self.n_minus + self.extra)
    }

    /// Points of `P⁺ \ P⁻`, the process `I_n`.
    pub fn increment_coords(&self) -> &[f64] {
        &self.plus_coords()[self.n_minus * self.dim.as_usize()..]
    }

    pub fn cloud(&self, part: CoupledPart) -> PointCloud {
        let coords = match part {
            CoupledPart::Minus => self.minus_coords(),
            CoupledPart::Fixed => self.fixed_coords(),
            CoupledPart::Plus => self.plus_coords(),
        };
        PointCloud {
            dim: self.dim,
            coords: coords.to_vec(),
            seed: Some(self.seed),
            kind: CloudKind::Coupled {
                n: self.n as u64,
                part,
            },
        }
    }
}

pub fn coupled_means(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let n34 = nf.powf(0.75);
    (nf - n34, 2.0 * n34)
}

fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as usize
}

pub fn sample_coupled(d: Dimension, n: usize, seed: SeedRecord) -> Result<CoupledTriple> {
    if n < 2 {
        return Err(Error::domain("n", format!("coupled triple needs n >= 2, got {n}")));
    }
    let (mean_minus, mean_extra) = coupled_means(n);
    let n_minus = poisson_draw(mean_minus, &mut seed.stream(Role::CountMinus, n as u64));
    let extra = poisson_draw(mean_extra, &mut seed.stream(Role::CountExtra, n as u64));
    let mut base = Vec::new();
    PointSequence::new(d, seed).extend_into(&mut base, n.max(n_minus + extra));
    Ok(CoupledTriple {
        dim: d,
        base,
        n,
        n_minus,
        extra,
        seed,
    })
}

/// A region for point counting. Balls are open; the annulus keeps its inner
/// sphere and drops its outer one, matching `B(x, r₂) \ B(x, r₁)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    OutsideBall { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn centered_ball(d: Dimension, radius: f64) -> Region {
        Region::Ball {
            center: vec![0.0; d.as_usize()],
            radius,
        }
    }

    fn center(&self) -> &[f64] {
        match self {
            Region::Ball { center, .. }
            | Region::Annulus { center, .. }
            | Region::OutsideBall { center, .. } => center,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let d2 = crate::nng::dist2(self.center(), p);
        match *self {
            Region::Ball { radius, .. } => d2 < radius * radius,
            Region::Annulus { inner, outer, .. } => d2 >= inner * inner && d2 < outer * outer,
            Region::OutsideBall { radius, .. } => d2 >= radius * radius,
        }
    }
}

/// Number of points of row-major `coords` lying in `region`.
pub fn count_coords_in_region(coords: &[f64], d: Dimension, region: &Region) -> usize {
    coords
        .chunks_exact(d.as_usize())
        .filter(|p| region.contains(p))
        .count()
}

pub fn count_in_region(cloud: &PointCloud, region: &Region) -> Result<usize> {
    if region.center().len() != cloud.dim().as_usize() {
        return Err(Error::domain("region", "center dimension differs from the cloud's"));
    }
    Ok(count_coords_in_region(cloud.coords(), cloud.dim(), region))
}

/// Uniform draw on [0, 1) from a stream; used for probe placement.
pub(crate) fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}
