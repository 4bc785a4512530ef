use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

static TREASURY_2012_02_24: &str = include_str!("../../../../data/treasury_2012-02-24.csv");

#[derive(Debug, Deserialize)]
struct CurveRow {
    tenor_years: f64,
    rate_percent: f64,
}

/// Annual yields (percent) at increasing tenors (years), interpolated with a
/// natural cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldCurve {
    tenors: Vec<f64>,
    rates: Vec<f64>,
    /// Second derivatives of the spline at the knots.
    second: Vec<f64>,
}

impl YieldCurve {
    pub fn new(tenors: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if tenors.len() != rates.len() {
            return Err(Error::invalid(format!(
                "{} tenors but {} rates",
                tenors.len(),
                rates.len()
            )));
        }
        if tenors.len() < 2 {
            return Err(Error::invalid("a yield curve needs at least two points"));
        }
        if tenors[0] <= 0.0 || tenors.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("tenors must be positive and strictly increasing"));
        }
        if tenors.iter().chain(&rates).any(|x| !x.is_finite()) {
            return Err(Error::invalid("tenors and rates must be finite"));
        }
        let second = natural_second_derivatives(&tenors, &rates);
        Ok(YieldCurve { tenors, rates, second })
    }

    /// Parses CSV with header `tenor_years,rate_percent`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["tenor_years", "rate_percent"] {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `tenor_years,rate_percent`".into(),
            });
        }
        let mut tenors = Vec::new();
        let mut rates = Vec::new();
        for (i, row) in rdr.deserialize::<CurveRow>().enumerate() {
            let row = row.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            tenors.push(row.tenor_years);
            rates.push(row.rate_percent);
        }
        Self::new(tenors, rates)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file)
    }

    /// Daily Treasury yield curve rates on 2012-02-24.
    pub fn treasury_2012_02_24() -> Self {
        Self::from_csv_reader(TREASURY_2012_02_24.as_bytes()).expect("bundled curve is valid")
    }

    pub fn tenors(&self) -> &[f64] {
        &self.tenors
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn last_tenor(&self) -> f64 {
        *self.tenors.last().expect("non-empty")
    }
}

/// Solves the tridiagonal system for a natural spline (zero curvature at
/// both ends).
fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm over the interior knots.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0;
        let b = 2.0 * (h0 + h1);
        let c = h1;
        let d = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

/// Natural cubic spline value of the curve at `t`, in percent. No
/// extrapolation outside the knots.
pub fn spline_rate(curve: &YieldCurve, t: f64) -> Result<f64> {
    let x = &curve.tenors;
    let (lo, hi) = (x[0], curve.last_tenor());
    if !(lo..=hi).contains(&t) {
        return Err(Error::OutOfRange { value: t, lo, hi });
    }
    // Interval [x[i], x[i+1]] containing t.
    let i = match x.partition_point(|&k| k <= t) {
        0 => 0,
        p if p >= x.len() => x.len() - 2,
        p => p - 1,
    };
    let (y, m) = (&curve.rates, &curve.second);
    let h = x[i + 1] - x[i];
    let a = (x[i + 1] - t) / h;
    let b = (t - x[i]) / h;
    Ok(a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0)
}
