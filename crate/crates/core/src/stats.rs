//! Rank and linear correlation for validating metrics against human
//! ratings, and the Frechet distance between Gaussian feature moments.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Paired metric values and human ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSeries {
    metric: Vec<f64>,
    rating: Vec<f64>,
}

impl RatingSeries {
    pub fn new(metric: Vec<f64>, rating: Vec<f64>) -> Result<Self> {
        if metric.len() != rating.len() {
            return Err(Error::invalid(format!(
                "series lengths differ: {} vs {}",
                metric.len(),
                rating.len()
            )));
        }
        if metric.len() < 3 {
            return Err(Error::invalid(format!(
                "correlation needs at least 3 pairs, got {}",
                metric.len()
            )));
        }
        if metric.iter().chain(&rating).any(|v| !v.is_finite()) {
            return Err(Error::invalid("rating series contains non-finite values"));
        }
        Ok(Self { metric, rating })
    }

    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    pub fn rating(&self) -> &[f64] {
        &self.rating
    }
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end, averaged.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "one of the series has zero variance".into(),
        ));
    }
    let denom = (sxx * syy).sqrt();
    let denom = if denom.is_finite() && denom > 0.0 {
        denom
    } else {
        sxx.sqrt() * syy.sqrt()
    };
    Ok((sxy / denom).clamp(-1.0, 1.0))
}

/// Spearman rank-order correlation: Pearson correlation of average ranks.
pub fn srcc(s: &RatingSeries) -> Result<f64> {
    pearson(&average_ranks(&s.metric), &average_ranks(&s.rating))
}

/// Pearson linear correlation.
pub fn plcc(s: &RatingSeries) -> Result<f64> {
    pearson(&s.metric, &s.rating)
}

/// Mean vector and covariance matrix of a feature population.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianMoments {
    pub fn new(mean: Vec<f64>, cov_row_major: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::invalid("moments need dimension >= 1"));
        }
        if cov_row_major.len() != d * d {
            return Err(Error::invalid(format!(
                "covariance has {} entries, expected {d}x{d}",
                cov_row_major.len()
            )));
        }
        let cov = DMatrix::from_row_slice(d, d, &cov_row_major);
        let moments = Self {
            mean: DVector::from_vec(mean),
            cov,
        };
        moments.validate()?;
        Ok(moments)
    }

    fn validate(&self) -> Result<()> {
        if self.mean.iter().chain(self.cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("moments contain non-finite values"));
        }
        let d = self.dim();
        for i in 0..d {
            for j in i + 1..d {
                let (a, b) = (self.cov[(i, j)], self.cov[(j, i)]);
                if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::invalid(format!(
                        "covariance is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)]
    }

    /// Reads a moments file: the dimension `d` on the first line, the mean
    /// vector on the second, then `d` rows of the covariance matrix. Values
    /// are comma or whitespace separated.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.at_path(path))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let d: usize = lines
            .next()
            .ok_or_else(|| Error::invalid("empty moments file"))?
            .parse()
            .map_err(|_| Error::invalid("first line of a moments file must be the dimension"))?;
        let mean = parse_row(lines.next().unwrap_or(""), d)?;
        let mut cov = Vec::with_capacity(d * d);
        for _ in 0..d {
            cov.extend(parse_row(lines.next().unwrap_or(""), d)?);
        }
        if lines.next().is_some() {
            return Err(Error::invalid("trailing lines after covariance matrix"));
        }
        Self::new(mean, cov)
    }
}

fn parse_row(line: &str, d: usize) -> Result<Vec<f64>> {
    let values = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number {t:?} in moments file")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != d {
        return Err(Error::invalid(format!(
            "moments row has {} values, expected {d}",
            values.len()
        )));
    }
    Ok(values)
}

/// Sample mean and unbiased covariance of `n x d` features, one row per
/// sample.
pub fn moments_from_features(rows: &[Vec<f64>]) -> Result<GaussianMoments> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid(format!("moments need at least 2 samples, got {n}")));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("feature rows must share a positive dimension"));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; d * d];
    for r in rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1) as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    GaussianMoments::new(mean, cov)
}

/// Reads `(path, rating)` pairs from a CSV whose header names a `path`
/// and a `rating` column.
pub fn read_ratings_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    let csv_err = |source| Error::Csv {
        context: path.display().to_string(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::invalid(format!("missing {name:?} column")).at_path(path))
    };
    let (pi, ri) = (column("path")?, column("rating")?);
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let rating = field(ri)
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("row {}: bad rating {:?}", line + 2, field(ri))).at_path(path))?;
        out.push((field(pi).to_owned(), rating));
    }
    Ok(out)
}

/// Reads a feature CSV (header row, one sample per line, numeric columns).
pub fn read_feature_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let csv_err = |source| Error::Csv {
        context: path.display().to_string(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("row {}: bad feature value {f:?}", line + 2)).at_path(path))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Loads moments from either a moments file or a feature CSV, deciding by
/// whether the first line is a bare integer dimension.
pub fn load_moments(path: &Path) -> Result<GaussianMoments> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if first.parse::<usize>().is_ok() {
        GaussianMoments::parse(&text).map_err(|e| e.at_path(path))
    } else {
        moments_from_features(&read_feature_csv(path)?).map_err(|e| e.at_path(path))
    }
}

/// Symmetric PSD square root via eigendecomposition, clamping negative
/// eigenvalues to zero.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Frechet distance between two Gaussians:
/// `|mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)`.
pub fn fid_from_moments(a: &GaussianMoments, b: &GaussianMoments) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "moment dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    a.validate()?;
    b.validate()?;
    let diff = &a.mean - &b.mean;
    let sqrt_a = psd_sqrt(&a.cov);
    let inner = &sqrt_a * &b.cov * &sqrt_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let fid = diff.norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    Ok(fid.max(0.0))
}
