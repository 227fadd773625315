//! Synthetic loan-style star schema: Account, Status and Date dimensions
//! with one `Amt` measure.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::DetailedCube;
use crate::error::Result;
use crate::mdm::{Dimension, MemberId, Schema};

pub const ACCOUNTS: usize = 4500;
pub const DISTRICTS: usize = 77;
pub const REGIONS: [&str; 8] = [
    "Prague",
    "central Bohemia",
    "south Bohemia",
    "west Bohemia",
    "north Bohemia",
    "east Bohemia",
    "south Moravia",
    "north Moravia",
];
pub const STATUSES: [&str; 4] = ["A", "B", "C", "D"];
pub const FIRST_YEAR: u32 = 1993;
pub const LAST_YEAR: u32 = 1998;
const AMT_RANGE: (f64, f64) = (100.0, 500_000.0);

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 if year.is_multiple_of(4) && (!year.is_multiple_of(100) || year.is_multiple_of(400)) => 29,
        2 => 28,
        _ => 31,
    }
}

/// `(day, month, year)` labels for every calendar day in the year range.
pub fn calendar(first: u32, last: u32) -> Vec<[String; 3]> {
    let mut out = Vec::new();
    for y in first..=last {
        for m in 1..=12 {
            for d in 1..=days_in_month(y, m) {
                out.push([format!("{y}-{m:02}-{d:02}"), format!("{y}-{m:02}"), y.to_string()]);
            }
        }
    }
    out
}

/// A generated star: full dimension domains plus fact rows as member
/// indices into them.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStar {
    pub accounts: Vec<[String; 3]>,
    pub statuses: Vec<String>,
    pub days: Vec<[String; 3]>,
    /// `(account, status, day, amt)`
    pub facts: Vec<(u32, u32, u32, f64)>,
}

/// Draws `rows` distinct (account, status, day) coordinates uniformly, with
/// log-uniform amounts. Deterministic per seed.
pub fn generate_star(rows: usize, seed: u64) -> GeneratedStar {
    let accounts: Vec<[String; 3]> = (0..ACCOUNTS)
        .map(|a| {
            let d = a % DISTRICTS;
            [
                format!("acc{:04}", a + 1),
                format!("district{:02}", d + 1),
                REGIONS[d * REGIONS.len() / DISTRICTS].to_string(),
            ]
        })
        .collect();
    let statuses: Vec<String> = STATUSES.iter().map(|s| s.to_string()).collect();
    let days = calendar(FIRST_YEAR, LAST_YEAR);

    let space = ACCOUNTS * STATUSES.len() * days.len();
    let rows = rows.min(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(rows);
    let mut facts = Vec::with_capacity(rows);
    let (lo, hi) = (AMT_RANGE.0.ln(), AMT_RANGE.1.ln());
    while facts.len() < rows {
        let a = rng.gen_range(0..ACCOUNTS as u32);
        let s = rng.gen_range(0..STATUSES.len() as u32);
        let d = rng.gen_range(0..days.len() as u32);
        if !seen.insert((a, s, d)) {
            continue;
        }
        let amt = (rng.gen_range(lo..hi).exp() * 100.0).round() / 100.0;
        facts.push((a, s, d, amt));
    }
    GeneratedStar {
        accounts,
        statuses,
        days,
        facts,
    }
}

impl GeneratedStar {
    pub fn schema(&self) -> Result<Schema> {
        let acc: Vec<Vec<String>> = self.accounts.iter().map(|r| r.to_vec()).collect();
        let st: Vec<Vec<String>> = self.statuses.iter().map(|s| vec![s.clone()]).collect();
        let days: Vec<Vec<String>> = self.days.iter().map(|r| r.to_vec()).collect();
        Ok(Schema::new(vec![
            Dimension::from_paths("Account", &["Account", "District", "Region"], &acc)?,
            Dimension::from_paths("Status", &["Status"], &st)?,
            Dimension::from_paths("Date", &["Day", "Month", "Year"], &days)?,
        ]))
    }

    /// Builds the cube in memory, skipping CSV round trips.
    pub fn cube(&self) -> Result<DetailedCube> {
        let schema = self.schema()?;
        let ids = |d: usize, labels: Vec<&str>| -> Vec<MemberId> {
            let level = schema.dim(d).level(0);
            labels.iter().map(|l| level.lookup(l).expect("generated member")).collect()
        };
        let acc = ids(0, self.accounts.iter().map(|r| r[0].as_str()).collect());
        let st = ids(1, self.statuses.iter().map(String::as_str).collect());
        let day = ids(2, self.days.iter().map(|r| r[0].as_str()).collect());
        let coords = vec![
            self.facts.iter().map(|f| acc[f.0 as usize]).collect(),
            self.facts.iter().map(|f| st[f.1 as usize]).collect(),
            self.facts.iter().map(|f| day[f.2 as usize]).collect(),
        ];
        let amts = self.facts.iter().map(|f| f.3).collect();
        DetailedCube::from_columns(schema, coords, vec!["Amt".into()], vec![amts])
    }

    /// Writes `Account.csv`, `Status.csv`, `Date.csv` and `facts.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("Account.csv"))?;
        w.write_record(["Account", "District", "Region"])?;
        for r in &self.accounts {
            w.write_record(r)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("Status.csv"))?;
        w.write_record(["Status"])?;
        for s in &self.statuses {
            w.write_record([s])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("Date.csv"))?;
        w.write_record(["Day", "Month", "Year"])?;
        for r in &self.days {
            w.write_record(r)?;
        }
        w.flush()?;
        let mut out = std::io::BufWriter::new(fs::File::create(dir.join("facts.csv"))?);
        writeln!(out, "Account,Status,Day,Amt")?;
        for &(a, s, d, amt) in &self.facts {
            writeln!(
                out,
                "{},{},{},{:.2}",
                self.accounts[a as usize][0], self.statuses[s as usize], self.days[d as usize][0], amt
            )?;
        }
        out.flush()?;
        Ok(())
    }
}
