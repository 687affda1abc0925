//! Oracle price ingestion, valuation normalization, the alternative-data
//! signal `tau`, and synthetic series generation.
//!
//! Time is an integer interval index; only ordering matters. The CSV schema
//! is `t,v_obs,tau` (header required), or `t,price,tau` when prices are
//! quoted as X in units of Y and normalized on load.

use crate::amm::Valuation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum DataError {
    Io(std::io::Error),
    Csv(csv::Error),
    /// Malformed or out-of-range field; carries the 1-based file line.
    Row {
        line: u64,
        message: String,
    },
    Header {
        expected: &'static str,
        found: String,
    },
    Empty,
    InvalidParams(String),
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::Io(e) => write!(f, "io error: {e}"),
            DataError::Csv(e) => write!(f, "csv error: {e}"),
            DataError::Row { line, message } => write!(f, "line {line}: {message}"),
            DataError::Header { expected, found } => {
                write!(f, "expected header `{expected}`, found `{found}`")
            }
            DataError::Empty => write!(f, "price series is empty"),
            DataError::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
        }
    }
}

impl std::error::Error for DataError {}

impl From<std::io::Error> for DataError {
    fn from(e: std::io::Error) -> Self {
        DataError::Io(e)
    }
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        DataError::Csv(e)
    }
}

/// One oracle observation: interval index, market valuation, and the
/// pre-processed alternative-data signal in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceTick {
    pub t: u64,
    pub v_obs: Valuation,
    pub tau: f64,
}

/// Provenance of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMeta {
    pub source: String,
    pub seed: Option<u64>,
}

/// Ordered, gap-free sequence of price ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    ticks: Vec<PriceTick>,
    meta: SeriesMeta,
}

impl PriceSeries {
    pub fn new(ticks: Vec<PriceTick>, meta: SeriesMeta) -> Result<Self, DataError> {
        if ticks.is_empty() {
            return Err(DataError::Empty);
        }
        for pair in ticks.windows(2) {
            if pair[1].t != pair[0].t + 1 {
                return Err(DataError::InvalidParams(format!(
                    "tick indices must be consecutive, got {} after {}",
                    pair[1].t, pair[0].t
                )));
            }
        }
        Ok(PriceSeries { ticks, meta })
    }

    pub fn ticks(&self) -> &[PriceTick] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    /// Tick at series position `i` (positions, not `t` labels).
    pub fn tick(&self, i: usize) -> &PriceTick {
        &self.ticks[i]
    }

    pub fn valuations(&self) -> impl Iterator<Item = f64> + '_ {
        self.ticks.iter().map(|tk| tk.v_obs.value())
    }
}

/// Map an oracle price of X in units of Y to a valuation: `v = P / (1 + P)`,
/// preserving the relative-price identity `v / (1 - v) = P`.
pub fn normalize_price(price: f64) -> Result<Valuation, DataError> {
    if !price.is_finite() || price <= 0.0 {
        return Err(DataError::InvalidParams(format!(
            "price must be positive, got {price}"
        )));
    }
    Valuation::new(price / (1.0 + price))
        .map_err(|e| DataError::InvalidParams(format!("price {price} out of range: {e}")))
}

/// How the middle CSV column is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceColumn {
    /// `v_obs`: already a valuation in (0, 1).
    #[default]
    Valuation,
    /// `price`: relative price, normalized through [`normalize_price`].
    RelativePrice,
}

impl PriceColumn {
    fn header(self) -> &'static str {
        match self {
            PriceColumn::Valuation => "t,v_obs,tau",
            PriceColumn::RelativePrice => "t,price,tau",
        }
    }
}

/// Load a series from CSV, validating every row against the type invariants.
pub fn load_csv(path: &Path, column: PriceColumn) -> Result<PriceSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let found = headers.iter().collect::<Vec<_>>().join(",");
    if found != column.header() {
        return Err(DataError::Header {
            expected: column.header(),
            found,
        });
    }

    let mut ticks = Vec::new();
    let mut prev_t: Option<u64> = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize, name: &str| -> Result<&str, DataError> {
            record.get(idx).ok_or_else(|| DataError::Row {
                line,
                message: format!("missing column `{name}`"),
            })
        };

        let t: u64 = field(0, "t")?.parse().map_err(|e| DataError::Row {
            line,
            message: format!("bad t: {e}"),
        })?;
        if let Some(prev) = prev_t {
            if t <= prev {
                return Err(DataError::Row {
                    line,
                    message: format!("t must increase, got {t} after {prev}"),
                });
            }
            if t != prev + 1 {
                return Err(DataError::Row {
                    line,
                    message: format!("gap in t: {t} after {prev}"),
                });
            }
        }
        prev_t = Some(t);

        let raw: f64 = field(1, "v_obs/price")?
            .parse()
            .map_err(|e| DataError::Row {
                line,
                message: format!("bad value: {e}"),
            })?;
        let v_obs = match column {
            PriceColumn::Valuation => Valuation::new(raw).map_err(|e| DataError::Row {
                line,
                message: e.to_string(),
            })?,
            PriceColumn::RelativePrice => normalize_price(raw).map_err(|e| DataError::Row {
                line,
                message: e.to_string(),
            })?,
        };

        let tau: f64 = field(2, "tau")?.parse().map_err(|e| DataError::Row {
            line,
            message: format!("bad tau: {e}"),
        })?;
        if !tau.is_finite() || !(-1.0..=1.0).contains(&tau) {
            return Err(DataError::Row {
                line,
                message: format!("tau must lie in [-1, 1], got {tau}"),
            });
        }

        ticks.push(PriceTick { t, v_obs, tau });
    }

    PriceSeries::new(
        ticks,
        SeriesMeta {
            source: path.display().to_string(),
            seed: None,
        },
    )
}

/// Write a series in the `t,v_obs,tau` schema.
pub fn write_csv(series: &PriceSeries, path: &Path) -> Result<(), DataError> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,v_obs,tau")?;
    for tick in series.ticks() {
        writeln!(out, "{},{},{}", tick.t, tick.v_obs.value(), tick.tau)?;
    }
    Ok(())
}

fn clamp_tau(raw: f64) -> f64 {
    raw.clamp(-1.0, 1.0)
}

/// Geometric Brownian price path under the log-Euler recursion, with `tau`
/// synthesized as the sign of the lagged log-return plus seeded noise.
/// Deterministic for a fixed seed.
pub fn synth_gbm(
    seed: u64,
    n: usize,
    mu: f64,
    sigma: f64,
    p0: f64,
) -> Result<PriceSeries, DataError> {
    if n < 2 {
        return Err(DataError::InvalidParams(format!(
            "need at least 2 ticks, got {n}"
        )));
    }
    if !sigma.is_finite() || sigma < 0.0 || !mu.is_finite() {
        return Err(DataError::InvalidParams(format!(
            "bad gbm parameters mu {mu}, sigma {sigma}"
        )));
    }
    if !p0.is_finite() || p0 <= 0.0 {
        return Err(DataError::InvalidParams(format!(
            "initial price must be positive, got {p0}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drift = mu - 0.5 * sigma * sigma;
    let mut price = p0;
    let mut last_ret = 0.0;
    let mut ticks = Vec::with_capacity(n);
    for t in 0..n {
        if t > 0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let ret = drift + sigma * z;
            price *= ret.exp();
            last_ret = ret;
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        let sign = if last_ret == 0.0 {
            0.0
        } else {
            last_ret.signum()
        };
        let tau = clamp_tau(sign + 0.25 * noise);
        let v_obs = normalize_price(price)?;
        ticks.push(PriceTick {
            t: t as u64,
            v_obs,
            tau,
        });
    }
    PriceSeries::new(
        ticks,
        SeriesMeta {
            source: format!("synth-gbm(mu={mu},sigma={sigma},p0={p0})"),
            seed: Some(seed),
        },
    )
}

/// Noiseless sinusoidal valuation benchmark: `v = center + amplitude *
/// sin(2 pi t / period)` with `tau` the cosine of the same phase, a
/// quarter-period leading indicator.
pub fn synth_sine(
    n: usize,
    period: f64,
    amplitude: f64,
    center: f64,
) -> Result<PriceSeries, DataError> {
    if n < 2 {
        return Err(DataError::InvalidParams(format!(
            "need at least 2 ticks, got {n}"
        )));
    }
    if !period.is_finite() || period <= 0.0 {
        return Err(DataError::InvalidParams(format!(
            "period must be positive, got {period}"
        )));
    }
    if !amplitude.is_finite()
        || !center.is_finite()
        || amplitude < 0.0
        || center - amplitude <= 0.01
        || center + amplitude >= 0.99
    {
        return Err(DataError::InvalidParams(format!(
            "sine range [{}, {}] must stay inside (0.01, 0.99)",
            center - amplitude,
            center + amplitude
        )));
    }
    let mut ticks = Vec::with_capacity(n);
    for t in 0..n {
        let phase = 2.0 * std::f64::consts::PI * t as f64 / period;
        let v = center + amplitude * phase.sin();
        let v_obs = Valuation::new(v)
            .map_err(|e| DataError::InvalidParams(format!("sine left (0, 1): {e}")))?;
        ticks.push(PriceTick {
            t: t as u64,
            v_obs,
            tau: phase.cos(),
        });
    }
    PriceSeries::new(
        ticks,
        SeriesMeta {
            source: format!("synth-sine(period={period},amplitude={amplitude},center={center})"),
            seed: None,
        },
    )
}
