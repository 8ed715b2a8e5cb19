//! Tick ingestion, previous-tick resampling and log-price panels.
//!
//! Input is one CSV per asset with columns (date, time-of-day seconds, price);
//! a JSON manifest pairs the two assets and carries the session clock. Days
//! present for one asset but not the other are dropped from both, since the
//! tests need a synchronized panel. Trading-day length is abstracted to the
//! unit interval; calendar handling (half days, holidays) is the caller's
//! responsibility via pre-filtering.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// One trade: seconds within the trading day and a strictly positive price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub seconds: f64,
    pub price: f64,
}

/// All retained ticks of one asset for one trading day.
#[derive(Debug, Clone)]
pub struct TickDay {
    pub date: String,
    pub ticks: Vec<Tick>,
}

/// Time-sorted tick data for one asset, grouped by trading day.
#[derive(Debug, Clone)]
pub struct AssetTicks {
    pub name: String,
    pub days: Vec<TickDay>,
}

/// Synchronized bivariate tick data; both assets cover the same days.
#[derive(Debug, Clone)]
pub struct TickSeries {
    pub x: AssetTicks,
    pub y: AssetTicks,
    pub session: SessionClock,
}

/// Maps grid fractions of the abstract unit-interval day to wall-clock seconds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SessionClock {
    pub start_sec: f64,
    pub end_sec: f64,
}

impl Default for SessionClock {
    fn default() -> Self {
        // 09:30 to 16:00, the regular US equity session.
        SessionClock {
            start_sec: 34_200.0,
            end_sec: 57_600.0,
        }
    }
}

impl SessionClock {
    pub fn grid_second(&self, i: usize, n: usize) -> f64 {
        self.start_sec + (i as f64 / n as f64) * (self.end_sec - self.start_sec)
    }
}

/// Column mapping for tick CSV files. Columns are referenced by header name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TickSchema {
    pub date: String,
    pub time: String,
    pub price: String,
    /// Error out when the fraction of nonpositive-price rows exceeds this.
    pub max_bad_price_fraction: f64,
}

impl Default for TickSchema {
    fn default() -> Self {
        TickSchema {
            date: "date".into(),
            time: "seconds".into(),
            price: "price".into(),
            max_bad_price_fraction: 0.01,
        }
    }
}

/// Counts of rows removed during ingestion.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped_out_of_order: usize,
    pub rows_dropped_bad_price: usize,
}

/// Days removed while pairing or resampling, with the reason.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResampleReport {
    pub days_dropped_unpaired: Vec<String>,
    pub days_dropped_no_opening_tick: Vec<String>,
}

/// Manifest pairing the two per-asset CSV files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairManifest {
    pub asset_x: ManifestAsset,
    pub asset_y: ManifestAsset,
    #[serde(default)]
    pub session: SessionClock,
    #[serde(default)]
    pub schema: TickSchema,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestAsset {
    pub name: String,
    pub path: String,
}

/// Parse one asset's tick CSV.
///
/// Rows that violate within-day timestamp monotonicity are dropped and
/// counted; nonpositive or unparsable prices likewise, erroring out when they
/// exceed `schema.max_bad_price_fraction`. Days are ordered by their date
/// string, so dates should be in a lexicographically sortable format
/// (e.g. ISO `YYYY-MM-DD`).
pub fn load_ticks(path: &Path, name: &str, schema: &TickSchema) -> Result<(AssetTicks, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: format!("missing column '{name}'"),
            })
    };
    let (c_date, c_time, c_price) = (col(&schema.date)?, col(&schema.time)?, col(&schema.price)?);

    let mut report = LoadReport::default();
    // (date, seconds, price) triples in file order.
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        report.rows_read += 1;
        let field = |c: usize| record.get(c).unwrap_or("");
        let seconds: f64 = match field(c_time).trim().parse() {
            Ok(v) => v,
            Err(_) => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 2,
                    msg: format!("bad time-of-day '{}'", field(c_time)),
                })
            }
        };
        let price: f64 = field(c_price).trim().parse().unwrap_or(f64::NAN);
        if !(price > 0.0) || !price.is_finite() {
            report.rows_dropped_bad_price += 1;
            continue;
        }
        rows.push((field(c_date).to_string(), seconds, price));
    }
    if report.rows_read == 0 || rows.is_empty() {
        return Err(Error::NoValidRows(path.display().to_string()));
    }
    let bad_frac = report.rows_dropped_bad_price as f64 / report.rows_read as f64;
    if bad_frac > schema.max_bad_price_fraction {
        return Err(Error::TooManyBadPrices {
            path: path.display().to_string(),
            bad: report.rows_dropped_bad_price,
            total: report.rows_read,
            limit: schema.max_bad_price_fraction,
        });
    }

    // Group by date keeping file order within a day, then enforce strictly
    // increasing timestamps by dropping violators.
    let mut days: Vec<TickDay> = Vec::new();
    for (date, seconds, price) in rows {
        if days.last().map(|d| d.date != date).unwrap_or(true) {
            if let Some(existing) = days.iter_mut().find(|d| d.date == date) {
                push_monotone(existing, seconds, price, &mut report);
                continue;
            }
            days.push(TickDay {
                date,
                ticks: Vec::new(),
            });
        }
        let day = days.last_mut().expect("day exists");
        push_monotone(day, seconds, price, &mut report);
    }
    days.retain(|d| !d.ticks.is_empty());
    days.sort_by(|a, b| a.date.cmp(&b.date));
    if days.is_empty() {
        return Err(Error::NoValidRows(path.display().to_string()));
    }
    Ok((
        AssetTicks {
            name: name.to_string(),
            days,
        },
        report,
    ))
}

fn push_monotone(day: &mut TickDay, seconds: f64, price: f64, report: &mut LoadReport) {
    if day.ticks.last().map(|t| seconds > t.seconds).unwrap_or(true) {
        day.ticks.push(Tick { seconds, price });
    } else {
        report.rows_dropped_out_of_order += 1;
    }
}

/// Load both assets of a manifest and synchronize their day sets.
pub fn load_pair(manifest_path: &Path) -> Result<(TickSeries, LoadReport, LoadReport, Vec<String>)> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: PairManifest = serde_json::from_str(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &str| -> PathBuf {
        let pb = PathBuf::from(p);
        if pb.is_absolute() {
            pb
        } else {
            base.join(pb)
        }
    };
    let (x, rep_x) = load_ticks(&resolve(&manifest.asset_x.path), &manifest.asset_x.name, &manifest.schema)?;
    let (y, rep_y) = load_ticks(&resolve(&manifest.asset_y.path), &manifest.asset_y.name, &manifest.schema)?;
    let (series, dropped) = pair_ticks(x, y, manifest.session);
    Ok((series, rep_x, rep_y, dropped))
}

/// Keep only days present for both assets; returns the dropped dates.
pub fn pair_ticks(x: AssetTicks, y: AssetTicks, session: SessionClock) -> (TickSeries, Vec<String>) {
    let dx: BTreeSet<&str> = x.days.iter().map(|d| d.date.as_str()).collect();
    let dy: BTreeSet<&str> = y.days.iter().map(|d| d.date.as_str()).collect();
    let common: BTreeSet<String> = dx.intersection(&dy).map(|s| s.to_string()).collect();
    let dropped: Vec<String> = dx
        .symmetric_difference(&dy)
        .map(|s| s.to_string())
        .collect();
    let filter = |a: AssetTicks| AssetTicks {
        name: a.name,
        days: a
            .days
            .into_iter()
            .filter(|d| common.contains(&d.date))
            .collect(),
    };
    (
        TickSeries {
            x: filter(x),
            y: filter(y),
            session,
        },
        dropped,
    )
}

/// Equidistant log-price panel: `T x (n+1)` grid per asset on `t-1+i/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPricePanel {
    pub n: usize,
    /// One date string per day; empty strings when the panel is synthetic.
    pub dates: Vec<String>,
    pub x: Grid,
    pub y: Grid,
}

impl LogPricePanel {
    pub fn days(&self) -> usize {
        self.x.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.days();
        if self.y.rows() != t || self.dates.len() != t {
            return Err(Error::SpecMismatch("panel day counts differ".into()));
        }
        if self.x.cols() != self.n + 1 || self.y.cols() != self.n + 1 {
            return Err(Error::SpecMismatch(format!(
                "panel has {} columns, expected n+1 = {}",
                self.x.cols(),
                self.n + 1
            )));
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::SpecMismatch("panel contains non-finite entries".into()));
        }
        Ok(())
    }

    /// Restrict to a contiguous day range (used by the monthly driver).
    pub fn slice_days(&self, start: usize, len: usize) -> LogPricePanel {
        let cols = self.n + 1;
        let take = |g: &Grid| {
            let mut out = Grid::zeros(len, cols);
            for t in 0..len {
                out.row_mut(t).copy_from_slice(g.row(start + t));
            }
            out
        };
        LogPricePanel {
            n: self.n,
            dates: self.dates[start..start + len].to_vec(),
            x: take(&self.x),
            y: take(&self.y),
        }
    }

    /// Group consecutive days by the `YYYY-MM` prefix of their date strings.
    /// Returns `(month, start_day, day_count)` tuples; days without a date
    /// fall into a single empty-key group.
    pub fn month_slices(&self) -> Vec<(String, usize, usize)> {
        let mut out: Vec<(String, usize, usize)> = Vec::new();
        for (t, date) in self.dates.iter().enumerate() {
            let key = if date.len() >= 7 {
                date[..7].to_string()
            } else {
                String::new()
            };
            match out.last_mut() {
                Some((k, _, count)) if *k == key => *count += 1,
                _ => out.push((key, t, 1)),
            }
        }
        out
    }
}

/// Per-asset `T x n` array of log-returns.
#[derive(Debug, Clone)]
pub struct IncrementPanel {
    pub n: usize,
    pub x: Grid,
    pub y: Grid,
}

impl IncrementPanel {
    pub fn days(&self) -> usize {
        self.x.rows()
    }
}

/// Previous-tick resampling: the grid price at `t-1+i/n` is the last tick
/// price at or before that instant. A day is dropped (and reported) when no
/// tick exists at or before its first grid point.
pub fn previous_tick_resample(ticks: &TickSeries, n: usize) -> Result<(LogPricePanel, ResampleReport)> {
    if n == 0 {
        return Err(Error::InvalidConfig("grid size n must be >= 1".into()));
    }
    let session = ticks.session;
    let days = ticks.x.days.len();
    debug_assert_eq!(days, ticks.y.days.len());

    let mut report = ResampleReport::default();
    let mut rows_x: Vec<Vec<f64>> = Vec::with_capacity(days);
    let mut rows_y: Vec<Vec<f64>> = Vec::with_capacity(days);
    let mut dates: Vec<String> = Vec::with_capacity(days);

    for (dx, dy) in ticks.x.days.iter().zip(&ticks.y.days) {
        match (resample_day(dx, n, session), resample_day(dy, n, session)) {
            (Some(rx), Some(ry)) => {
                rows_x.push(rx);
                rows_y.push(ry);
                dates.push(dx.date.clone());
            }
            _ => report.days_dropped_no_opening_tick.push(dx.date.clone()),
        }
    }
    if rows_x.is_empty() {
        return Err(Error::NoValidRows("no day has an opening tick".into()));
    }

    let t = rows_x.len();
    let mut x = Grid::zeros(t, n + 1);
    let mut y = Grid::zeros(t, n + 1);
    for ti in 0..t {
        x.row_mut(ti).copy_from_slice(&rows_x[ti]);
        y.row_mut(ti).copy_from_slice(&rows_y[ti]);
    }
    let panel = LogPricePanel { n, dates, x, y };
    panel.validate()?;
    Ok((panel, report))
}

fn resample_day(day: &TickDay, n: usize, session: SessionClock) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut idx = 0usize; // index of the next unconsumed tick
    let mut last: Option<f64> = None;
    for i in 0..=n {
        let s = session.grid_second(i, n);
        while idx < day.ticks.len() && day.ticks[idx].seconds <= s {
            last = Some(day.ticks[idx].price);
            idx += 1;
        }
        out.push(last?.ln());
    }
    Some(out)
}

/// Entry `(t, i) = logprice(t, i) - logprice(t, i-1)`.
pub fn log_increments(panel: &LogPricePanel) -> IncrementPanel {
    let t = panel.days();
    let n = panel.n;
    let diff = |g: &Grid| {
        let mut out = Grid::zeros(t, n);
        for ti in 0..t {
            let row = g.row(ti);
            let orow = out.row_mut(ti);
            for i in 0..n {
                orow[i] = row[i + 1] - row[i];
            }
        }
        out
    };
    IncrementPanel {
        n,
        x: diff(&panel.x),
        y: diff(&panel.y),
    }
}

// ---------------------------------------------------------------------------
// Panel CSV format
// ---------------------------------------------------------------------------

/// Write a panel as CSV with `#`-prefixed metadata lines. `meta` is stored as
/// a single JSON object so every output file is self-describing.
pub fn write_panel_csv(panel: &LogPricePanel, path: &Path, meta: &serde_json::Value) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# meta: {}", serde_json::to_string(meta)?)?;
    writeln!(file, "day,date,i,log_price_x,log_price_y")?;
    for t in 0..panel.days() {
        for i in 0..=panel.n {
            writeln!(
                file,
                "{},{},{},{:.17e},{:.17e}",
                t + 1,
                panel.dates[t],
                i,
                panel.x.get(t, i),
                panel.y.get(t, i)
            )?;
        }
    }
    Ok(())
}

/// Read a panel written by [`write_panel_csv`]; metadata lines are skipped.
pub fn read_panel_csv(path: &Path) -> Result<LogPricePanel> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut n: Option<usize> = None;
    let mut rows: Vec<(usize, String, usize, f64, f64)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("day,") {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("expected 5 fields, got {}", parts.len()),
            });
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg,
        };
        let day: usize = parts[0].parse().map_err(|_| parse_err("bad day".into()))?;
        let i: usize = parts[2].parse().map_err(|_| parse_err("bad index".into()))?;
        let px: f64 = parts[3].parse().map_err(|_| parse_err("bad log price".into()))?;
        let py: f64 = parts[4].parse().map_err(|_| parse_err("bad log price".into()))?;
        rows.push((day, parts[1].to_string(), i, px, py));
        n = n.max(Some(i));
    }
    if rows.is_empty() {
        return Err(Error::NoValidRows(path.display().to_string()));
    }
    let n = n.unwrap();
    let t = rows.iter().map(|r| r.0).max().unwrap();
    let mut x = Grid::zeros(t, n + 1);
    let mut y = Grid::zeros(t, n + 1);
    let mut dates = vec![String::new(); t];
    for (day, date, i, px, py) in rows {
        x.set(day - 1, i, px);
        y.set(day - 1, i, py);
        dates[day - 1] = date;
    }
    let panel = LogPricePanel { n, dates, x, y };
    panel.validate()?;
    Ok(panel)
}

/// Synthetic weekday dates starting at `start` (ISO `YYYY-MM-DD`), used to
/// label simulated panels so that monthly batching stays exercisable.
pub fn synthetic_weekdays(start: &str, count: usize) -> Vec<String> {
    // Minimal proleptic-Gregorian day arithmetic; good enough for labels.
    fn leap(y: i64) -> bool {
        (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
    }
    fn month_len(y: i64, m: i64) -> i64 {
        match m {
            1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
            4 | 6 | 9 | 11 => 30,
            _ => {
                if leap(y) {
                    29
                } else {
                    28
                }
            }
        }
    }
    let mut parts = start.split('-').map(|p| p.parse::<i64>().unwrap_or(1));
    let (mut y, mut m, mut d) = (
        parts.next().unwrap_or(2020),
        parts.next().unwrap_or(1),
        parts.next().unwrap_or(1),
    );
    // Day of week via Sakamoto's method; 0 = Sunday.
    fn dow(y: i64, m: i64, d: i64) -> i64 {
        const T: [i64; 12] = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
        let y = if m < 3 { y - 1 } else { y };
        (y + y / 4 - y / 100 + y / 400 + T[(m - 1) as usize] + d) % 7
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = dow(y, m, d);
        if w != 0 && w != 6 {
            out.push(format!("{y:04}-{m:02}-{d:02}"));
        }
        d += 1;
        if d > month_len(y, m) {
            d = 1;
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_csv(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        write!(f, "{body}").unwrap();
        path
    }

    fn one_day(ticks: Vec<(f64, f64)>) -> TickSeries {
        let day = |ticks: &[(f64, f64)]| TickDay {
            date: "2020-01-02".into(),
            ticks: ticks
                .iter()
                .map(|&(seconds, price)| Tick { seconds, price })
                .collect(),
        };
        TickSeries {
            x: AssetTicks {
                name: "X".into(),
                days: vec![day(&ticks)],
            },
            y: AssetTicks {
                name: "Y".into(),
                days: vec![day(&ticks)],
            },
            session: SessionClock::default(),
        }
    }

    #[test]
    fn load_well_formed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "x.csv",
            "date,seconds,price\n2020-01-02,34200,100.0\n2020-01-02,34260,101.0\n2020-01-02,34320,100.5\n",
        );
        let (ticks, report) = load_ticks(&path, "X", &TickSchema::default()).unwrap();
        assert_eq!(report.rows_read, 3);
        assert_eq!(ticks.days.len(), 1);
        assert_eq!(ticks.days[0].ticks.len(), 3);
    }

    #[test]
    fn out_of_order_row_is_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "x.csv",
            "date,seconds,price\n2020-01-02,34200,100.0\n2020-01-02,34190,50.0\n2020-01-02,34260,101.0\n",
        );
        let (ticks, report) = load_ticks(&path, "X", &TickSchema::default()).unwrap();
        assert_eq!(ticks.days[0].ticks.len(), 2);
        assert_eq!(report.rows_dropped_out_of_order, 1);
    }

    #[test]
    fn empty_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(dir.path(), "x.csv", "date,seconds,price\n");
        let err = load_ticks(&path, "X", &TickSchema::default()).unwrap_err();
        assert!(matches!(err, Error::NoValidRows(_)));
    }

    #[test]
    fn bad_price_fraction_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "x.csv",
            "date,seconds,price\n2020-01-02,34200,100.0\n2020-01-02,34260,-3.0\n",
        );
        let err = load_ticks(&path, "X", &TickSchema::default()).unwrap_err();
        assert!(matches!(err, Error::TooManyBadPrices { .. }));
    }

    #[test]
    fn resample_on_grid_points_is_identity() {
        let session = SessionClock::default();
        let n = 4;
        let ticks: Vec<(f64, f64)> = (0..=n)
            .map(|i| (session.grid_second(i, n), 100.0 + i as f64))
            .collect();
        let series = one_day(ticks.clone());
        let (panel, report) = previous_tick_resample(&series, n).unwrap();
        assert!(report.days_dropped_no_opening_tick.is_empty());
        for (i, &(_, p)) in ticks.iter().enumerate() {
            assert_eq!(panel.x.get(0, i), p.ln());
        }
    }

    #[test]
    fn single_opening_tick_carries_forward() {
        let series = one_day(vec![(34_200.0, 100.0)]);
        let (panel, _) = previous_tick_resample(&series, 5).unwrap();
        let inc = log_increments(&panel);
        assert!(inc.x.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn carry_forward_uses_last_tick_at_or_before() {
        // Ticks at 09:30:00 (100) and 09:30:45 (101) with a 60-second grid:
        // the 09:31:00 grid point picks up the 09:30:45 trade.
        let series = one_day(vec![(34_200.0, 100.0), (34_245.0, 101.0)]);
        let (panel, _) = previous_tick_resample(&series, 390).unwrap();
        assert_eq!(panel.x.get(0, 0), 100.0_f64.ln());
        assert_eq!(panel.x.get(0, 1), 101.0_f64.ln());
        // All later grid points carry 101 forward.
        assert_eq!(panel.x.get(0, 390), 101.0_f64.ln());
    }

    #[test]
    fn day_without_opening_tick_is_dropped() {
        let mut series = one_day(vec![(34_260.5, 100.0)]);
        series.x.days.push(TickDay {
            date: "2020-01-03".into(),
            ticks: vec![Tick {
                seconds: 34_200.0,
                price: 50.0,
            }],
        });
        series.y.days.push(series.x.days[1].clone());
        let (panel, report) = previous_tick_resample(&series, 78).unwrap();
        assert_eq!(panel.days(), 1);
        assert_eq!(report.days_dropped_no_opening_tick, vec!["2020-01-02"]);
    }

    #[test]
    fn no_future_ticks_are_used() {
        let session = SessionClock::default();
        let n = 10;
        let base = vec![(34_200.0, 100.0), (40_000.0, 105.0)];
        let (p1, _) = previous_tick_resample(&one_day(base.clone()), n).unwrap();
        // Perturb the tick strictly after grid point 2.
        let g2 = session.grid_second(2, n);
        let mut moved = base;
        assert!(moved[1].0 > g2);
        moved[1].1 = 500.0;
        let (p2, _) = previous_tick_resample(&one_day(moved), n).unwrap();
        for i in 0..=2 {
            assert_eq!(p1.x.get(0, i), p2.x.get(0, i));
        }
    }

    #[test]
    fn increments_match_direct_subtraction() {
        let panel = LogPricePanel {
            n: 2,
            dates: vec![String::new()],
            x: Grid::from_vec(1, 3, vec![0.0, 0.1, 0.3]),
            y: Grid::from_vec(1, 3, vec![0.0, 0.1, 0.3]),
        };
        let inc = log_increments(&panel);
        assert!((inc.x.get(0, 0) - 0.1).abs() < 1e-15);
        assert!((inc.x.get(0, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn increments_telescope_to_close_minus_open() {
        let mut x = Grid::zeros(3, 11);
        let mut y = Grid::zeros(3, 11);
        let mut state = 1u64;
        for t in 0..3 {
            for i in 0..=10 {
                state = crate::seeding::splitmix64(state);
                let v = (state % 1000) as f64 / 250.0;
                x.set(t, i, v);
                y.set(t, i, v + 1.0);
            }
        }
        let panel = LogPricePanel {
            n: 10,
            dates: vec![String::new(); 3],
            x,
            y,
        };
        let inc = log_increments(&panel);
        for t in 0..3 {
            let sum: f64 = inc.x.row(t).iter().sum();
            let expect = panel.x.get(t, 10) - panel.x.get(t, 0);
            assert!((sum - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn unpaired_days_dropped_from_both() {
        let day = |date: &str| TickDay {
            date: date.into(),
            ticks: vec![Tick {
                seconds: 34_200.0,
                price: 10.0,
            }],
        };
        let x = AssetTicks {
            name: "X".into(),
            days: vec![day("2020-01-02"), day("2020-01-03")],
        };
        let y = AssetTicks {
            name: "Y".into(),
            days: vec![day("2020-01-03"), day("2020-01-06")],
        };
        let (series, dropped) = pair_ticks(x, y, SessionClock::default());
        assert_eq!(series.x.days.len(), 1);
        assert_eq!(series.y.days.len(), 1);
        assert_eq!(series.x.days[0].date, "2020-01-03");
        assert_eq!(dropped.len(), 2);
    }

    #[test]
    fn panel_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let panel = LogPricePanel {
            n: 2,
            dates: vec!["2020-01-02".into(), "2020-01-03".into()],
            x: Grid::from_vec(2, 3, vec![0.0, 0.1, 0.3, 0.3, 0.25, 0.4]),
            y: Grid::from_vec(2, 3, vec![1.0, 1.1, 1.3, 1.3, 1.25, 1.4]),
        };
        let path = dir.path().join("panel.csv");
        write_panel_csv(&panel, &path, &serde_json::json!({"seed": 7})).unwrap();
        let back = read_panel_csv(&path).unwrap();
        assert_eq!(back, panel);
    }

    #[test]
    fn month_slices_group_consecutive_dates() {
        let panel = LogPricePanel {
            n: 1,
            dates: vec![
                "2020-01-30".into(),
                "2020-01-31".into(),
                "2020-02-03".into(),
            ],
            x: Grid::zeros(3, 2),
            y: Grid::zeros(3, 2),
        };
        let slices = panel.month_slices();
        assert_eq!(
            slices,
            vec![("2020-01".to_string(), 0, 2), ("2020-02".to_string(), 2, 1)]
        );
    }

    #[test]
    fn synthetic_weekdays_skip_weekends() {
        let days = synthetic_weekdays("2020-01-01", 5);
        // Jan 4-5 2020 is a weekend.
        assert_eq!(days, vec!["2020-01-01", "2020-01-02", "2020-01-03", "2020-01-06", "2020-01-07"]);
    }
}
