use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::expr::Expr;
use super::parser::parse;
use crate::error::{Error, Result};
use crate::jet::{JetMatrix, Point};

/// Number of sample points used by the signature check.
pub const SIGNATURE_SAMPLES: usize = 20;
const SIGNATURE_SEED: u64 = 0x5167_7a11;

/// `(negative, positive)` eigenvalue counts of the metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub neg: usize,
    pub pos: usize,
}

impl Signature {
    pub fn euclidean(n: usize) -> Signature {
        Signature { neg: 0, pos: n }
    }

    pub fn lorentzian(n: usize) -> Signature {
        Signature { neg: 1, pos: n - 1 }
    }

    pub fn dim(self) -> usize {
        self.neg + self.pos
    }

    /// Diagonal of the flat metric: negative entries first.
    pub fn eta(self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| if i < self.neg { -1.0 } else { 1.0 })
            .collect()
    }

    /// Accepts `r,s`, `euclidean` or `lorentzian`.
    pub fn parse(text: &str, n: usize) -> Result<Signature> {
        let t = text.trim();
        let sig = match t.to_ascii_lowercase().as_str() {
            "euclidean" | "riemannian" => Signature::euclidean(n),
            "lorentzian" => Signature::lorentzian(n),
            _ => {
                let parts: Vec<&str> = t
                    .trim_matches(|c| c == '(' || c == ')')
                    .split(',')
                    .collect();
                let nums: Option<Vec<usize>> =
                    parts.iter().map(|p| p.trim().parse().ok()).collect();
                match nums.as_deref() {
                    Some(&[neg, pos]) => Signature { neg, pos },
                    _ => return Err(Error::Config(format!("bad signature `{t}`"))),
                }
            }
        };
        if sig.dim() != n {
            return Err(Error::Config(format!(
                "signature ({},{}) does not add up to dimension {n}",
                sig.neg, sig.pos
            )));
        }
        Ok(sig)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.neg, self.pos)
    }
}

/// Unvalidated description of a metric.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    pub name: String,
    pub signature: Signature,
    /// Upper-triangle components keyed by `(i, j)` with `i <= j`; absent entries are zero.
    pub components: BTreeMap<(usize, usize), Expr>,
    pub domain: Vec<(f64, f64)>,
    pub params: BTreeMap<String, String>,
}

/// A symmetric metric given by component expressions on a coordinate box.
#[derive(Clone, Debug)]
pub struct MetricField {
    name: String,
    signature: Signature,
    components: Vec<Expr>,
    domain: Vec<(f64, f64)>,
    params: BTreeMap<String, String>,
}

impl MetricField {
    /// Validates the spec and checks the signature on sample points.
    pub fn new(spec: MetricSpec) -> Result<MetricField> {
        let n = spec.signature.dim();
        if !(3..=5).contains(&n) {
            return Err(Error::Config(format!("dimension {n} not in 3..=5")));
        }
        if spec.domain.len() != n {
            return Err(Error::Config(format!(
                "domain has {} intervals for dimension {n}",
                spec.domain.len()
            )));
        }
        for (i, &(lo, hi)) in spec.domain.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("empty domain interval for x{i}")));
            }
        }
        let mut components = vec![Expr::c(0.0); n * n];
        for (&(i, j), e) in &spec.components {
            if i > j || j >= n {
                return Err(Error::Config(format!(
                    "component g_{i}{j} is not in the upper triangle of a {n}x{n} metric"
                )));
            }
            if let Some(k) = e.max_coord() {
                if k >= n {
                    return Err(Error::CoordinateOutOfRange { index: k, dim: n });
                }
            }
            components[i * n + j] = e.clone();
            components[j * n + i] = e.clone();
        }
        let field = MetricField {
            name: spec.name,
            signature: spec.signature,
            components,
            domain: spec.domain,
            params: spec.params,
        };
        field.check_signature()?;
        Ok(field)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.signature.dim()
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn eta(&self) -> Vec<f64> {
        self.signature.eta()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim() + j]
    }

    /// Jets of all components at `point`.
    pub fn jets(&self, point: &Point, order: usize) -> Result<JetMatrix> {
        let n = self.dim();
        if point.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a {n}-dimensional metric",
                point.dim()
            )));
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(self.component(i, j).eval(point, order)?);
            }
        }
        let idx = |i: usize, j: usize| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            a * n - a * (a + 1) / 2 + b
        };
        Ok(JetMatrix::from_fn(n, n, n, |i, j| upper[idx(i, j)].clone()))
    }

    pub fn values(&self, point: &Point) -> Result<DMatrix<f64>> {
        Ok(self.jets(point, 0)?.values())
    }

    pub fn center(&self) -> Point {
        Point::new(self.domain.iter().map(|&(a, b)| 0.5 * (a + b)).collect()).unwrap()
    }

    /// Uniform samples from the domain box shrunk by 10% about its center.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let coords = self
                    .domain
                    .iter()
                    .map(|&(lo, hi)| {
                        let pad = 0.05 * (hi - lo);
                        rng.random_range(lo + pad..=hi - pad)
                    })
                    .collect();
                Point::new(coords).unwrap()
            })
            .collect()
    }

    /// Eigenvalue signs at the box center and 19 further samples must match the signature.
    pub fn check_signature(&self) -> Result<()> {
        let mut points = vec![self.center()];
        points.extend(self.sample_points(SIGNATURE_SAMPLES - 1, SIGNATURE_SEED));
        for p in points {
            let g = self.values(&p)?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain {
                    op: "metric evaluation",
                    value: f64::NAN,
                    context: Some(format!("{:?}", p.coords())),
                });
            }
            let eig = SymmetricEigen::new(g.clone()).eigenvalues;
            let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut signs: Vec<i8> = eig
                .iter()
                .map(|&v| {
                    if v.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                        0
                    } else if v < 0.0 {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            signs.sort();
            let neg = signs.iter().filter(|&&s| s < 0).count();
            let pos = signs.iter().filter(|&&s| s > 0).count();
            if neg != self.signature.neg || pos != self.signature.pos {
                return Err(Error::SignatureCheck {
                    point: p.coords().to_vec(),
                    signs,
                    expected: (self.signature.neg, self.signature.pos),
                });
            }
        }
        Ok(())
    }

    /// The metric `z^2 g` for a positive function `z`.
    pub fn conformal_rescale(&self, z: &Expr) -> Result<MetricField> {
        let mut spec = self.to_spec();
        for e in spec.components.values_mut() {
            *e = z.clone().pow(2) * e.clone();
        }
        spec.name = format!("{}*({z})^2", self.name);
        spec.params.insert("rescale".into(), z.to_string());
        MetricField::new(spec)
    }

    pub fn to_spec(&self) -> MetricSpec {
        let n = self.dim();
        let mut components = BTreeMap::new();
        for i in 0..n {
            for j in i..n {
                components.insert((i, j), self.component(i, j).clone());
            }
        }
        MetricSpec {
            name: self.name.clone(),
            signature: self.signature,
            components,
            domain: self.domain.clone(),
            params: self.params.clone(),
        }
    }

    /// Reads the INI-style metric file format.
    ///
    /// ```text
    /// [metric]
    /// name = warped
    /// n = 3
    /// signature = 0,3
    /// [components]
    /// g_00 = exp(2*x2)
    /// g_11 = exp(2*x2)
    /// g_22 = 1
    /// [domain]
    /// x2 = -0.5, 0.5
    /// ```
    pub fn from_ini(text: &str) -> Result<MetricField> {
        let err = |line: usize, msg: String| Error::MetricFile { line, msg };
        let mut section = String::new();
        let mut meta: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut comps: Vec<(usize, String, String)> = Vec::new();
        let mut doms: Vec<(usize, String, String)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(err(line_no, "unterminated section header".into()));
                };
                section = name.trim().to_ascii_lowercase();
                if !matches!(section.as_str(), "metric" | "components" | "domain") {
                    return Err(err(line_no, format!("unknown section [{section}]")));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(line_no, "expected `key = value`".into()));
            };
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            match section.as_str() {
                "metric" => {
                    meta.insert(key, (line_no, value));
                }
                "components" => comps.push((line_no, key, value)),
                "domain" => doms.push((line_no, key, value)),
                _ => return Err(err(line_no, "entry outside of any section".into())),
            }
        }

        let (n_line, n_text) = meta
            .get("n")
            .cloned()
            .ok_or_else(|| err(0, "missing `n` in [metric]".into()))?;
        let n: usize = n_text
            .parse()
            .map_err(|_| err(n_line, format!("bad dimension `{n_text}`")))?;
        let signature = match meta.get("signature") {
            Some((line, s)) => Signature::parse(s, n).map_err(|e| err(*line, e.to_string()))?,
            None => Signature::euclidean(n),
        };
        let name = meta
            .get("name")
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| "file".to_string());

        let mut components = BTreeMap::new();
        for (line, key, value) in comps {
            let idx = key
                .strip_prefix("g_")
                .filter(|d| d.len() == 2 && d.bytes().all(|b| b.is_ascii_digit()))
                .ok_or_else(|| err(line, format!("bad component key `{key}`")))?;
            let b = idx.as_bytes();
            let (i, j) = ((b[0] - b'0') as usize, (b[1] - b'0') as usize);
            let (i, j) = (i.min(j), i.max(j));
            let e = parse(&value).map_err(|e| err(line, e.to_string()))?;
            if let Some(prev) = components.insert((i, j), e.clone()) {
                if prev != e {
                    return Err(err(line, format!("g_{i}{j} and g_{j}{i} disagree")));
                }
            }
        }

        let mut domain = vec![(-1.0, 1.0); n];
        for (line, key, value) in doms {
            let i = key
                .strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&i| i < n)
                .ok_or_else(|| err(line, format!("bad domain key `{key}`")))?;
            let parts: Vec<f64> = value
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(line, format!("bad interval `{value}`")))?;
            match parts[..] {
                [lo, hi] => domain[i] = (lo, hi),
                _ => return Err(err(line, format!("bad interval `{value}`"))),
            }
        }

        MetricField::new(MetricSpec {
            name,
            signature,
            components,
            domain,
            params: BTreeMap::new(),
        })
    }

    pub fn from_file(path: &Path) -> Result<MetricField> {
        MetricField::from_ini(&std::fs::read_to_string(path)?)
    }
}
