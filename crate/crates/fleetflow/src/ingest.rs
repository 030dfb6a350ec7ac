//! Order-log ingestion: parsing, abnormal-trip filtering, fare-rate
//! regression, per-edge demand estimation, and a synthetic log generator.
//!
//! Trip durations are not observed directly; they are inferred as the gap
//! between consecutive orders served by the same driver. That proxy is
//! polluted by cancelled rides (short gaps) and end-of-shift breaks (long
//! gaps), so durations are filtered to a quantile band within each
//! origin-destination group before fitting the per-minute fare rate.
//! Passenger values are the observed prices, fitted per edge (and per hour in
//! dynamic mode) to a lognormal distribution by maximum likelihood.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::instance::{DemandProfile, EdgeSpec, InstanceFile};
use crate::objective::ObjectiveKind;
use crate::stats::{ols, quantile_sorted};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 7] =
    ["order", "driver", "user", "origin", "dest", "price", "timestamp"];
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderRecord {
    pub order_id: String,
    /// Empty in the log when no driver was assigned.
    pub driver_id: Option<String>,
    pub user_id: String,
    pub origin: String,
    pub dest: String,
    pub price: f64,
    pub timestamp: NaiveDateTime,
}

/// A row that failed validation, with its 1-based line number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowIssue {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParsedOrders {
    pub records: Vec<OrderRecord>,
    pub rejected: Vec<RowIssue>,
}

pub fn parse_orders(path: impl AsRef<Path>) -> Result<ParsedOrders> {
    parse_orders_reader(std::fs::File::open(path)?)
}

pub fn parse_orders_reader(reader: impl Read) -> Result<ParsedOrders> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    {
        let headers = csv_reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != CSV_HEADER {
            return Err(Error::InvalidInput(format!(
                "unexpected header {:?}; expected {:?}",
                got, CSV_HEADER
            )));
        }
    }
    let mut out = ParsedOrders::default();
    for (i, row) in csv_reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.rejected.push(RowIssue { line, reason: format!("malformed row: {e}") });
                continue;
            }
        };
        if row.len() != CSV_HEADER.len() {
            out.rejected.push(RowIssue {
                line,
                reason: format!("expected {} fields, got {}", CSV_HEADER.len(), row.len()),
            });
            continue;
        }
        let price: f64 = match row[5].trim().parse() {
            Ok(p) => p,
            Err(_) => {
                out.rejected.push(RowIssue { line, reason: format!("bad price {:?}", &row[5]) });
                continue;
            }
        };
        if !(price >= 0.0) || !price.is_finite() {
            out.rejected.push(RowIssue { line, reason: format!("negative price {price}") });
            continue;
        }
        let timestamp = match NaiveDateTime::parse_from_str(row[6].trim(), TIMESTAMP_FORMAT) {
            Ok(t) => t,
            Err(_) => {
                out.rejected
                    .push(RowIssue { line, reason: format!("bad timestamp {:?}", &row[6]) });
                continue;
            }
        };
        let driver = row[1].trim();
        out.records.push(OrderRecord {
            order_id: row[0].trim().to_string(),
            driver_id: (!driver.is_empty()).then(|| driver.to_string()),
            user_id: row[2].trim().to_string(),
            origin: row[3].trim().to_string(),
            dest: row[4].trim().to_string(),
            price,
            timestamp,
        });
    }
    Ok(out)
}

/// An order together with its inferred trip duration (the gap to the same
/// driver's next order); absent for driverless orders and each driver's last.
#[derive(Debug, Clone)]
pub struct TimedOrder {
    pub record: OrderRecord,
    pub duration_minutes: Option<f64>,
}

pub fn compute_durations(records: Vec<OrderRecord>) -> Vec<TimedOrder> {
    let mut by_driver: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(d) = &r.driver_id {
            by_driver.entry(d.as_str()).or_default().push(i);
        }
    }
    let mut durations: Vec<Option<f64>> = vec![None; records.len()];
    for idxs in by_driver.values() {
        let mut idxs = idxs.clone();
        idxs.sort_by_key(|&i| records[i].timestamp);
        for pair in idxs.windows(2) {
            let gap = records[pair[1]].timestamp - records[pair[0]].timestamp;
            durations[pair[0]] = Some(gap.num_seconds() as f64 / 60.0);
        }
    }
    records
        .into_iter()
        .zip(durations)
        .map(|(record, duration_minutes)| TimedOrder { record, duration_minutes })
        .collect()
}

#[derive(Debug)]
pub struct FilterOutcome {
    pub kept: Vec<TimedOrder>,
    pub removed: Vec<TimedOrder>,
    /// Origin-destination groups too small to filter, passed through as-is.
    pub small_groups: Vec<(String, String)>,
}

/// Keep orders whose inferred duration lies within the group's quantile band
/// `[lower_quantile, upper_quantile]`; groups with fewer than 5 measured
/// durations pass through unfiltered and are flagged. Orders without a
/// measured duration are always kept (they still carry a price).
pub fn filter_abnormal(
    timed: Vec<TimedOrder>,
    lower_quantile: f64,
    upper_quantile: f64,
) -> Result<FilterOutcome> {
    if !(0.0..=1.0).contains(&lower_quantile)
        || !(0.0..=1.0).contains(&upper_quantile)
        || lower_quantile > upper_quantile
    {
        return Err(Error::InvalidInput(format!(
            "bad quantile band [{lower_quantile}, {upper_quantile}]"
        )));
    }
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for t in &timed {
        if let Some(d) = t.duration_minutes {
            groups.entry((t.record.origin.clone(), t.record.dest.clone())).or_default().push(d);
        }
    }
    let mut bands: BTreeMap<(String, String), (f64, f64)> = BTreeMap::new();
    let mut small_groups = Vec::new();
    for (key, mut ds) in groups {
        if ds.len() < 5 {
            small_groups.push(key);
            continue;
        }
        ds.sort_by(f64::total_cmp);
        bands.insert(
            key,
            (quantile_sorted(&ds, lower_quantile), quantile_sorted(&ds, upper_quantile)),
        );
    }
    let mut kept = Vec::with_capacity(timed.len());
    let mut removed = Vec::new();
    for t in timed {
        let keep = match t.duration_minutes {
            None => true,
            Some(d) => match bands.get(&(t.record.origin.clone(), t.record.dest.clone())) {
                None => true, // small group
                Some(&(lo, hi)) => d >= lo && d <= hi,
            },
        };
        if keep {
            kept.push(t);
        } else {
            removed.push(t);
        }
    }
    Ok(FilterOutcome { kept, removed, small_groups })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimePriceFit {
    /// Money per minute.
    pub alpha: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares of price on inferred duration, intercept free.
pub fn fit_time_price(timed: &[TimedOrder]) -> Result<TimePriceFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in timed {
        if let Some(d) = t.duration_minutes {
            xs.push(d);
            ys.push(t.record.price);
        }
    }
    let (alpha, intercept, r_squared) = ols(&xs, &ys).ok_or_else(|| {
        Error::InvalidInput("need at least two distinct durations to fit the fare rate".into())
    })?;
    Ok(TimePriceFit { alpha, intercept, r_squared, n: xs.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandFit {
    pub mu_log: f64,
    pub sigma_log: f64,
    /// Request count divided by the supply normalizer.
    pub volume: f64,
    pub n: usize,
    /// Set when a thin cell fell back to the edge's all-hours aggregate.
    pub fallback: bool,
}

/// Lognormal maximum likelihood on positive prices: the sample mean and
/// (1/n) standard deviation of log prices.
fn lognormal_mle(prices: &[f64]) -> Result<(f64, f64)> {
    let logs: Vec<f64> = prices.iter().filter(|&&p| p > 0.0).map(|p| p.ln()).collect();
    if logs.len() < 2 {
        return Err(Error::InvalidInput("not enough positive prices".into()));
    }
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if sigma <= 1e-12 {
        return Err(Error::InvalidInput("degenerate price sample: all prices equal".into()));
    }
    Ok((mu, sigma))
}

/// Fit the demand curve of one edge (optionally one hour-of-day cell).
/// Cells below `min_cell` records fall back to the edge's all-hours sample.
pub fn estimate_demand(
    kept: &[TimedOrder],
    origin: &str,
    dest: &str,
    hour: Option<u32>,
    supply_normalizer: f64,
    min_cell: usize,
) -> Result<DemandFit> {
    if !(supply_normalizer > 0.0) {
        return Err(Error::OutOfRange { what: "supply normalizer", value: supply_normalizer });
    }
    let edge_prices = |hour_filter: Option<u32>| -> Vec<f64> {
        kept.iter()
            .filter(|t| t.record.origin == origin && t.record.dest == dest)
            .filter(|t| hour_filter.is_none_or(|h| t.record.timestamp.hour() == h))
            .map(|t| t.record.price)
            .collect()
    };
    let cell = edge_prices(hour);
    let (prices, fallback) = if cell.len() >= min_cell {
        (cell, false)
    } else if hour.is_some() {
        let all = edge_prices(None);
        if all.len() < min_cell {
            return Err(Error::InvalidInput(format!(
                "edge {origin}->{dest} has only {} records, need {min_cell}",
                all.len()
            )));
        }
        (all, true)
    } else {
        return Err(Error::InvalidInput(format!(
            "edge {origin}->{dest} has only {} records, need {min_cell}",
            cell.len()
        )));
    };
    let n = cell_count(kept, origin, dest, hour);
    let (mu_log, sigma_log) = lognormal_mle(&prices)?;
    Ok(DemandFit { mu_log, sigma_log, volume: n as f64 / supply_normalizer, n, fallback })
}

fn cell_count(kept: &[TimedOrder], origin: &str, dest: &str, hour: Option<u32>) -> usize {
    kept.iter()
        .filter(|t| t.record.origin == origin && t.record.dest == dest)
        .filter(|t| hour.is_none_or(|h| t.record.timestamp.hour() == h))
        .count()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub lower_quantile: f64,
    pub upper_quantile: f64,
    /// Minimum records per (edge, period) cell.
    pub min_cell: usize,
    /// Fit one curve per hour of day instead of a single static curve.
    pub per_hour: bool,
    /// Drop Saturday/Sunday records (hourly patterns differ); defaults to
    /// the per-hour setting when unset.
    pub weekdays_only: Option<bool>,
    /// Divisor turning request counts into volumes relative to driver supply;
    /// defaults to the largest cell count so the busiest edge has volume 1.
    pub supply_normalizer: Option<f64>,
    pub step_minutes: u32,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            lower_quantile: 0.05,
            upper_quantile: 0.95,
            min_cell: 10,
            per_hour: false,
            weekdays_only: None,
            supply_normalizer: None,
            step_minutes: 15,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeEstimate {
    pub origin: String,
    pub dest: String,
    pub travel_minutes: f64,
    pub travel_steps: u32,
    pub fits: Vec<DemandFit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationResult {
    pub alpha: TimePriceFit,
    pub supply_normalizer: f64,
    pub edges: Vec<EdgeEstimate>,
    pub rejected_rows: usize,
    pub removed_outliers: usize,
    pub flagged_small_groups: Vec<(String, String)>,
    /// Ready-to-solve instance document.
    pub instance: InstanceFile,
}

/// Run the full estimation pipeline on parsed orders.
pub fn estimate_instance(
    parsed: ParsedOrders,
    config: &EstimationConfig,
) -> Result<EstimationResult> {
    let rejected_rows = parsed.rejected.len();
    let mut records = parsed.records;
    if config.weekdays_only.unwrap_or(config.per_hour) {
        records.retain(|r| {
            !matches!(r.timestamp.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun)
        });
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("no usable records".into()));
    }
    let timed = compute_durations(records);
    let filtered = filter_abnormal(timed, config.lower_quantile, config.upper_quantile)?;
    let alpha = fit_time_price(&filtered.kept)?;

    // Edge universe and the normalizer.
    let mut cells: BTreeMap<(String, String), usize> = BTreeMap::new();
    for t in &filtered.kept {
        *cells.entry((t.record.origin.clone(), t.record.dest.clone())).or_default() += 1;
    }
    cells.retain(|_, &mut n| n >= config.min_cell);
    if cells.is_empty() {
        return Err(Error::InvalidInput("no edge has enough records".into()));
    }
    let normalizer = config
        .supply_normalizer
        .unwrap_or_else(|| cells.values().copied().max().unwrap_or(1) as f64);

    let mut nodes: Vec<String> = Vec::new();
    for (o, d) in cells.keys() {
        if !nodes.contains(o) {
            nodes.push(o.clone());
        }
        if !nodes.contains(d) {
            nodes.push(d.clone());
        }
    }
    nodes.sort();

    let mut edges = Vec::new();
    let mut edge_specs = Vec::new();
    let mut demand = BTreeMap::new();
    for (origin, dest) in cells.keys() {
        // Median kept duration as the travel-time estimate; the fare rate
        // maps prices to minutes when no duration was measured.
        let mut ds: Vec<f64> = filtered
            .kept
            .iter()
            .filter(|t| &t.record.origin == origin && &t.record.dest == dest)
            .filter_map(|t| t.duration_minutes)
            .collect();
        let travel_minutes = if ds.is_empty() {
            let mean_price: f64 = filtered
                .kept
                .iter()
                .filter(|t| &t.record.origin == origin && &t.record.dest == dest)
                .map(|t| t.record.price)
                .sum::<f64>()
                / cells[&(origin.clone(), dest.clone())] as f64;
            mean_price / alpha.alpha
        } else {
            ds.sort_by(f64::total_cmp);
            quantile_sorted(&ds, 0.5)
        };
        let travel_steps = ((travel_minutes / config.step_minutes as f64).round() as u32).max(1);

        let fits: Vec<DemandFit> = if config.per_hour {
            (0..24)
                .map(|h| {
                    estimate_demand(
                        &filtered.kept,
                        origin,
                        dest,
                        Some(h),
                        normalizer,
                        config.min_cell,
                    )
                })
                .collect::<Result<_>>()?
        } else {
            vec![estimate_demand(&filtered.kept, origin, dest, None, normalizer, config.min_cell)?]
        };

        let id = format!("{origin}-{dest}");
        let curves: Vec<DemandCurve> = fits
            .iter()
            .map(|f| DemandCurve::lognormal(f.mu_log, f.sigma_log, f.volume.max(1e-9)))
            .collect::<Result<_>>()?;
        demand.insert(
            id.clone(),
            if config.per_hour {
                DemandProfile::PerPeriod { per_period: curves }
            } else {
                DemandProfile::Single(curves.into_iter().next().unwrap())
            },
        );
        edge_specs.push(EdgeSpec {
            id,
            from: origin.clone(),
            to: dest.clone(),
            travel_time: travel_steps,
            // The log does not reveal the platform's trip cost.
            cost: 0.0,
        });
        edges.push(EdgeEstimate {
            origin: origin.clone(),
            dest: dest.clone(),
            travel_minutes,
            travel_steps,
            fits,
        });
    }

    let instance = InstanceFile {
        nodes,
        edges: edge_specs,
        demand,
        objective: ObjectiveKind::Revenue,
        driver_mass: 1.0,
    };
    Ok(EstimationResult {
        alpha,
        supply_normalizer: normalizer,
        edges,
        rejected_rows,
        removed_outliers: filtered.removed.len(),
        flagged_small_groups: filtered.small_groups,
        instance,
    })
}

/// One synthetic edge: target lognormal price distribution and order count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthEdge {
    pub origin: String,
    pub dest: String,
    pub mu_log: f64,
    pub sigma_log: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub regions: Vec<String>,
    pub edges: Vec<SynthEdge>,
    /// True per-minute fare rate to recover.
    pub alpha: f64,
    pub drivers: usize,
    /// First day of the log (YYYY-MM-DD).
    pub start_date: String,
    pub days: u32,
    /// Log-scale spread of travel times within an edge.
    #[serde(default = "default_duration_sigma")]
    pub duration_sigma: f64,
    /// Fraction of rides whose measured gap collapses (cancellations).
    #[serde(default = "default_cancelled")]
    pub cancelled_fraction: f64,
    /// Fraction of rides followed by an off-shift break.
    #[serde(default = "default_breaks")]
    pub break_fraction: f64,
    /// Fraction of orders with no driver assigned.
    #[serde(default = "default_missing_driver")]
    pub missing_driver_fraction: f64,
}

fn default_duration_sigma() -> f64 {
    0.1
}
fn default_cancelled() -> f64 {
    0.01
}
fn default_breaks() -> f64 {
    0.01
}
fn default_missing_driver() -> f64 {
    0.005
}

/// Generate a reproducible synthetic order log whose pipeline round-trip
/// recovers the configured fare rate and price distributions.
///
/// Prices decompose as `alpha * duration * centered noise`: durations are
/// lognormal with spread `duration_sigma`, and the remaining price spread
/// (surge shadows, coupons) is mean-one so the price-on-duration regression
/// stays centered on `alpha`.
pub fn synth_generate(config: &SynthConfig, seed: u64) -> Result<String> {
    if !(config.alpha > 0.0) {
        return Err(Error::OutOfRange { what: "alpha", value: config.alpha });
    }
    if config.drivers == 0 {
        return Err(Error::InvalidInput("need at least one driver".into()));
    }
    let start = NaiveDate::parse_from_str(&config.start_date, "%Y-%m-%d")
        .map_err(|e| Error::InvalidInput(format!("bad start_date: {e}")))?
        .and_hms_opt(0, 0, 0)
        .unwrap();
    for e in &config.edges {
        if !config.regions.contains(&e.origin) || !config.regions.contains(&e.dest) {
            return Err(Error::InvalidInput(format!(
                "edge {}->{} references unknown region",
                e.origin, e.dest
            )));
        }
        if !(e.sigma_log > 0.0) {
            return Err(Error::OutOfRange { what: "sigma_log", value: e.sigma_log });
        }
    }

    let mut rng = StdRng::seed_from_u64(seed);
    let window_minutes = config.days as f64 * 24.0 * 60.0;

    struct EdgeGen {
        origin: String,
        dest: String,
        remaining: usize,
        duration_dist: LogNormal<f64>,
        noise_dist: Normal<f64>,
        noise_sigma: f64,
    }
    let mut gens: Vec<EdgeGen> = Vec::new();
    for e in &config.edges {
        if e.count == 0 {
            continue; // zero-volume edges never appear in the log
        }
        let dur_sigma = config.duration_sigma.min(0.5 * e.sigma_log);
        let noise_sigma = (e.sigma_log * e.sigma_log - dur_sigma * dur_sigma).sqrt();
        // Center the duration scale so log prices hit mu_log on average.
        let nu = e.mu_log - config.alpha.ln() + noise_sigma * noise_sigma / 2.0;
        gens.push(EdgeGen {
            origin: e.origin.clone(),
            dest: e.dest.clone(),
            remaining: e.count,
            duration_dist: LogNormal::new(nu, dur_sigma)
                .map_err(|e| Error::InvalidInput(e.to_string()))?,
            noise_dist: Normal::new(0.0, noise_sigma)
                .map_err(|e| Error::InvalidInput(e.to_string()))?,
            noise_sigma,
        });
    }

    let mut driver_time: Vec<f64> =
        (0..config.drivers).map(|_| rng.random::<f64>() * window_minutes * 0.3).collect();
    let mut rows: Vec<(NaiveDateTime, String)> = Vec::new();
    let mut seq = 0usize;
    let mut total_remaining: usize = gens.iter().map(|g| g.remaining).sum();
    let mut driver_cursor = 0usize;

    while total_remaining > 0 {
        // Weighted pick of an edge with remaining orders.
        let mut pick = rng.random_range(0..total_remaining);
        let gen_idx = gens
            .iter()
            .position(|g| {
                if pick < g.remaining {
                    true
                } else {
                    pick -= g.remaining;
                    false
                }
            })
            .expect("remaining counts out of sync");
        let duration = gens[gen_idx].duration_dist.sample(&mut rng).clamp(1.0, 600.0);
        let noise = gens[gen_idx].noise_dist.sample(&mut rng);
        let price = config.alpha
            * duration
            * (noise - gens[gen_idx].noise_sigma * gens[gen_idx].noise_sigma / 2.0).exp();

        let driverless = rng.random::<f64>() < config.missing_driver_fraction;
        let (driver_field, timestamp) = if driverless {
            let at = start
                + chrono::Duration::seconds((rng.random::<f64>() * window_minutes * 60.0) as i64);
            (String::new(), at)
        } else {
            let d = driver_cursor % config.drivers;
            driver_cursor += 1;
            let at = start + chrono::Duration::seconds((driver_time[d] * 60.0) as i64);
            // Advance the driver's clock: the measured gap is the true
            // duration, a collapsed cancellation gap, or duration plus an
            // off-shift break.
            let u: f64 = rng.random();
            driver_time[d] += if u < config.cancelled_fraction {
                duration * 0.05
            } else if u < config.cancelled_fraction + config.break_fraction {
                duration + 240.0 + rng.random::<f64>() * 360.0
            } else {
                duration
            };
            (format!("d{d:04}"), at)
        };

        seq += 1;
        let row = format!(
            "o{seq:07},{driver_field},u{seq:07},{},{},{:.4},{}",
            gens[gen_idx].origin,
            gens[gen_idx].dest,
            price,
            timestamp.format(TIMESTAMP_FORMAT),
        );
        rows.push((timestamp, row));
        gens[gen_idx].remaining -= 1;
        total_remaining -= 1;
    }

    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut out = String::with_capacity(rows.len() * 64 + 64);
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    for (_, row) in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}
