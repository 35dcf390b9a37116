//! Config loading and the stable on-disk formats.
//!
//! Every file starts with a schema declaration: a `{"schema": ...}` line for
//! JSON Lines, a `# schema: ...` comment for CSV and a `schema: ...` line for
//! the text summary. Readers reject anything else.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::LedgerEvent;
use crate::protocol::RoundRecord;
use crate::sim::{
    eviction_curve, GridPoint, Honesty, ReturnEstimate, ReturnStats, Role, SimConfig, SimOutput, SweepGrid,
    SweepRow,
};

pub const ROUNDS_SCHEMA: &str = "flock-sim.rounds/1";
pub const LEDGER_SCHEMA: &str = "flock-sim.ledger/1";
pub const SWEEP_SCHEMA: &str = "flock-sim.sweep/1";
pub const SUMMARY_SCHEMA: &str = "flock-sim.summary/1";

pub const SWEEP_HEADER: [&str; 14] = [
    "alpha", "beta", "T", "N", "N_p", "N_v", "l_p", "l_v", "role", "honesty", "mean_return", "std_err", "ci95",
    "samples",
];

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, root: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { root.to_string() } else { path };
        Error::config(field, e.inner().to_string())
    })
}

/// Reads and validates a run config. Omitted fields take defaults; unknown
/// keys are errors.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let config: SimConfig = parse_json(text, "config")?;
    config.validate()?;
    Ok(config)
}

pub fn load_grid(path: &Path) -> Result<SweepGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, "grid")
}

#[derive(Serialize, Deserialize)]
struct SchemaLine {
    schema: String,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, schema: &str, items: impl IntoIterator<Item = T>) -> Result<()> {
    fn line<W: Write, V: Serialize>(w: &mut W, value: &V, path: &Path) -> Result<()> {
        serde_json::to_writer(&mut *w, value).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    }
    let mut w = create(path)?;
    line(&mut w, &SchemaLine { schema: schema.to_string() }, path)?;
    for item in items {
        line(&mut w, &item, path)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let found = serde_json::from_str::<SchemaLine>(&header).map(|s| s.schema).unwrap_or(header);
    if found != schema {
        return Err(Error::Schema { expected: schema.to_string(), found });
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("{} line {}: {e}", path.display(), n + 2)))?,
        );
    }
    Ok(out)
}

pub fn write_rounds(path: &Path, records: &[RoundRecord]) -> Result<()> {
    write_jsonl(path, ROUNDS_SCHEMA, records)
}

pub fn read_rounds(path: &Path) -> Result<Vec<RoundRecord>> {
    read_jsonl(path, ROUNDS_SCHEMA)
}

/// A ledger event tagged with the Monte Carlo run it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLedgerEvent {
    pub run: u64,
    #[serde(flatten)]
    pub event: LedgerEvent,
}

pub fn write_ledger_events(path: &Path, output: &SimOutput) -> Result<()> {
    let events = output
        .runs
        .iter()
        .flat_map(|r| r.ledger.events().iter().map(move |e| RunLedgerEvent { run: r.run, event: *e }));
    write_jsonl(path, LEDGER_SCHEMA, events)
}

pub fn read_ledger_events(path: &Path) -> Result<Vec<RunLedgerEvent>> {
    read_jsonl(path, LEDGER_SCHEMA)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# schema: {SWEEP_SCHEMA}").map_err(|e| Error::io(path, e))?;
    let mut csv = csv::Writer::from_writer(w);
    let io_err = |e: csv::Error| Error::io(path, e);
    csv.write_record(SWEEP_HEADER).map_err(io_err)?;
    for row in rows {
        let p = &row.point;
        for est in &row.estimates {
            let s = est.stats;
            csv.write_record([
                p.alpha.to_string(),
                p.beta.to_string(),
                p.threshold.to_string(),
                p.population.to_string(),
                p.n_proposers.to_string(),
                p.n_voters.to_string(),
                p.l_p.to_string(),
                p.l_v.to_string(),
                est.role.as_str().to_string(),
                est.honesty.as_str().to_string(),
                opt(s.map(|s| s.mean)),
                opt(s.map(|s| s.std_err)),
                opt(s.map(|s| s.ci95)),
                s.map_or(0, |s| s.samples).to_string(),
            ])
            .map_err(io_err)?;
        }
    }
    csv.flush().map_err(|e| Error::io(path, e))
}

/// Parses a sweep CSV back into rows, grouping consecutive lines that share a
/// grid point.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    let found = first.trim().trim_start_matches('#').trim().trim_start_matches("schema:").trim().to_string();
    if found != SWEEP_SCHEMA {
        return Err(Error::Schema { expected: SWEEP_SCHEMA.to_string(), found });
    }
    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != SWEEP_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let parse_err = |what: &str, v: &str| Error::Parse(format!("bad {what} `{v}`"));
    let f = |v: &str, what: &str| v.parse::<f64>().map_err(|_| parse_err(what, v));
    let u = |v: &str, what: &str| v.parse::<usize>().map_err(|_| parse_err(what, v));
    let mut rows: Vec<SweepRow> = Vec::new();
    for rec in csv.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let point = GridPoint {
            alpha: f(&rec[0], "alpha")?,
            beta: f(&rec[1], "beta")?,
            threshold: u(&rec[2], "T")? as u32,
            population: u(&rec[3], "N")?,
            n_proposers: u(&rec[4], "N_p")?,
            n_voters: u(&rec[5], "N_v")?,
            l_p: f(&rec[6], "l_p")?,
            l_v: f(&rec[7], "l_v")?,
        };
        let role = match &rec[8] {
            "proposer" => Role::Proposer,
            "voter" => Role::Voter,
            other => return Err(parse_err("role", other)),
        };
        let honesty = match &rec[9] {
            "honest" => Honesty::Honest,
            "malicious" => Honesty::Malicious,
            other => return Err(parse_err("honesty", other)),
        };
        let samples = u(&rec[13], "samples")?;
        let stats = if samples == 0 {
            None
        } else {
            Some(ReturnStats {
                mean: f(&rec[10], "mean_return")?,
                std_err: f(&rec[11], "std_err")?,
                ci95: f(&rec[12], "ci95")?,
                samples,
            })
        };
        let est = ReturnEstimate { role, honesty, stats };
        match rows.last_mut() {
            Some(last) if last.point == point && last.estimates.len() < 4 => last.estimates.push(est),
            _ => rows.push(SweepRow { point, estimates: vec![est] }),
        }
    }
    Ok(rows)
}

/// Human-readable report for `run`.
pub fn summary_report(config: &SimConfig, output: &SimOutput) -> String {
    let mut s = String::new();
    let p = &config.params;
    let _ = writeln!(s, "schema: {SUMMARY_SCHEMA}");
    let _ = writeln!(
        s,
        "config: N={} N_p={} N_v={} T={} alpha={} beta={} rounds={} seeds={} base_seed={} l_p={} l_v={}",
        config.population,
        p.n_proposers,
        p.n_voters,
        p.threshold,
        p.alpha,
        p.beta,
        config.rounds,
        config.seeds.count,
        config.seeds.base,
        config.adversary.l_p,
        config.adversary.l_v
    );
    let _ = writeln!(s, "\nexpected return per selected round (delta / stake):");
    for e in &output.estimates {
        match e.stats {
            Some(st) => {
                let _ = writeln!(
                    s,
                    "  {:<8} {:<9} mean={:+.6} se={:.6} ci95=±{:.6} n={}",
                    e.role.as_str(),
                    e.honesty.as_str(),
                    st.mean,
                    st.std_err,
                    st.ci95,
                    st.samples
                );
            }
            None => {
                let _ = writeln!(s, "  {:<8} {:<9} no data", e.role.as_str(), e.honesty.as_str());
            }
        }
    }
    let _ = writeln!(s, "\nper run:");
    for run in &output.runs {
        let curve = eviction_curve(&run.records, p.min_stake).pop();
        let (honest, malicious) = curve.as_ref().map(|c| c.final_means()).unwrap_or((None, None));
        let adopted = run.records.iter().filter(|r| r.adopted).count();
        let _ = writeln!(
            s,
            "  run {:>3}: adopted {}/{} rounds, oracle mse {:.6} -> {:.6}, final mean stake honest={} malicious={}, first eviction round={}, conservation={}",
            run.run,
            adopted,
            run.records.len(),
            run.oracle_mse[0],
            run.final_oracle_mse(),
            opt_fmt(honest),
            opt_fmt(malicious),
            curve.and_then(|c| c.first_eviction_round).map_or("none".to_string(), |r| r.to_string()),
            if run.ledger.conservation_check() { "ok" } else { "VIOLATED" },
        );
    }
    s
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |x| format!("{x:.1}"))
}
