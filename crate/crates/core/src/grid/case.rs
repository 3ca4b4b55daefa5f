//! Network case model and a reader for MATPOWER-format case files.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Load,
    Generator,
    Slack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// Bus number as written in the case file.
    pub id: u32,
    pub kind: BusKind,
    /// Active demand, MW.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// Position of the sending bus in `NetworkCase::buses`.
    pub from: usize,
    pub to: usize,
    /// Series reactance, p.u.
    pub reactance: f64,
    /// Long-term rating, MW. Zero means unlimited.
    pub rating: f64,
    pub in_service: bool,
}

impl Branch {
    pub fn limit(&self) -> f64 {
        if self.rating > 0.0 {
            self.rating
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// Position of the host bus in `NetworkCase::buses`.
    pub bus: usize,
    /// Scheduled output, MW.
    pub p_set: f64,
    pub p_max: f64,
    pub p_min: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

impl NetworkCase {
    pub fn bus_position(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.demand).sum()
    }

    /// Branches with at least one endpoint among the given bus numbers.
    pub fn branches_touching(&self, bus_ids: &[u32]) -> Vec<usize> {
        let hit = |pos: usize| bus_ids.contains(&self.buses[pos].id);
        (0..self.branches.len()).filter(|&k| hit(self.branches[k].from) || hit(self.branches[k].to)).collect()
    }

    /// Human-readable "from-to" label of a branch using bus numbers.
    pub fn branch_label(&self, k: usize) -> String {
        let br = &self.branches[k];
        format!("{}-{}", self.buses[br.from].id, self.buses[br.to].id)
    }
}

struct Row {
    line: usize,
    values: Vec<f64>,
}

struct Table {
    start: usize,
    rows: Vec<Row>,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_row(line: usize, text: &str) -> Result<Option<Row>> {
    let tokens: Vec<&str> = text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Ok(None);
    }
    let mut values = Vec::with_capacity(tokens.len());
    for t in tokens {
        match t.parse::<f64>() {
            Ok(v) if !v.is_nan() => values.push(v),
            _ => return Err(perr(line, format!("invalid number '{t}'"))),
        }
    }
    Ok(Some(Row { line, values }))
}

/// Scalar assignments by name: (line, raw value).
type Scalars = HashMap<String, (usize, String)>;

/// Splits the case text into the named matrices plus scalar assignments.
fn scan(text: &str) -> Result<(HashMap<String, Table>, Scalars)> {
    let mut tables: HashMap<String, Table> = HashMap::new();
    let mut scalars = HashMap::new();
    // (name, start line, closing delimiter, keep rows)
    let mut open: Option<(String, usize, char, bool)> = None;
    let mut rows: Vec<Row> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut body = strip_comment(raw).trim().to_string();
        if open.is_none() {
            let Some(rest) = body.strip_prefix("mpc.") else { continue };
            let Some((name, value)) = rest.split_once('=') else { continue };
            let name = name.trim().to_string();
            let value = value.trim();
            let delim = match value.chars().next() {
                Some('[') => ']',
                Some('{') => '}',
                _ => {
                    scalars.insert(name, (line, value.trim_end_matches(';').trim().to_string()));
                    continue;
                }
            };
            if tables.contains_key(&name) {
                return Err(perr(line, format!("duplicate table '{name}'")));
            }
            let keep = delim == ']' && matches!(name.as_str(), "bus" | "gen" | "branch");
            open = Some((name, line, delim, keep));
            body = value[1..].to_string();
        }
        let (name, start, delim, keep) = open.clone().expect("table is open");
        let (content, closed) = match body.find(delim) {
            Some(i) => {
                let tail = body[i + 1..].trim().trim_start_matches(';').trim();
                if !tail.is_empty() {
                    return Err(perr(line, format!("unexpected text after end of '{name}' table")));
                }
                (body[..i].to_string(), true)
            }
            None => (body, false),
        };
        if keep {
            for segment in content.split(';') {
                if let Some(row) = parse_row(line, segment)? {
                    rows.push(row);
                }
            }
        }
        if closed {
            if keep {
                tables.insert(name, Table { start, rows: std::mem::take(&mut rows) });
            }
            open = None;
        }
    }
    if let Some((name, start, ..)) = open {
        return Err(perr(start, format!("table '{name}' is not terminated")));
    }
    Ok((tables, scalars))
}

fn require<'a>(tables: &'a HashMap<String, Table>, name: &str, last_line: usize) -> Result<&'a Table> {
    let t = tables.get(name).ok_or_else(|| perr(last_line, format!("missing '{name}' table")))?;
    if t.rows.is_empty() {
        return Err(perr(t.start, format!("'{name}' table is empty")));
    }
    Ok(t)
}

fn check_width(row: &Row, needed: usize, table: &str) -> Result<()> {
    if row.values.len() < needed {
        return Err(perr(row.line, format!("{table} row has {} columns, expected at least {needed}", row.values.len())));
    }
    Ok(())
}

fn as_bus_id(row: &Row, v: f64, what: &str) -> Result<u32> {
    if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
        return Err(perr(row.line, format!("{what} must be a positive integer, got {v}")));
    }
    Ok(v as u32)
}

/// Parses MATPOWER case text. Only the `baseMVA`, `bus`, `gen` and `branch`
/// entries are read; other entries and trailing columns are ignored. Errors
/// carry the 1-based line number of the offending row.
pub fn parse_case(text: &str) -> Result<NetworkCase> {
    let (tables, scalars) = scan(text)?;
    let last_line = text.lines().count().max(1);

    let base_mva = match scalars.get("baseMVA") {
        Some((line, v)) => match v.parse::<f64>() {
            Ok(b) if b.is_finite() && b > 0.0 => b,
            _ => return Err(perr(*line, format!("invalid baseMVA '{v}'"))),
        },
        None => return Err(perr(last_line, "missing baseMVA")),
    };

    let bus_table = require(&tables, "bus", last_line)?;
    let gen_table = require(&tables, "gen", last_line)?;
    let branch_table = require(&tables, "branch", last_line)?;

    let mut buses = Vec::with_capacity(bus_table.rows.len());
    let mut position: HashMap<u32, usize> = HashMap::new();
    for row in &bus_table.rows {
        check_width(row, 3, "bus")?;
        let id = as_bus_id(row, row.values[0], "bus number")?;
        let kind = match row.values[1] {
            1.0 | 4.0 => BusKind::Load,
            2.0 => BusKind::Generator,
            3.0 => BusKind::Slack,
            t => return Err(perr(row.line, format!("unknown bus type {t}"))),
        };
        let demand = row.values[2];
        if !demand.is_finite() || demand < 0.0 {
            return Err(perr(row.line, format!("bus demand must be finite and non-negative, got {demand}")));
        }
        if position.insert(id, buses.len()).is_some() {
            return Err(perr(row.line, format!("duplicate bus number {id}")));
        }
        buses.push(Bus { id, kind, demand });
    }

    let lookup = |row: &Row, v: f64, what: &str| -> Result<usize> {
        let id = as_bus_id(row, v, what)?;
        position.get(&id).copied().ok_or_else(|| perr(row.line, format!("{what} {id} does not exist")))
    };

    let mut generators = Vec::with_capacity(gen_table.rows.len());
    for row in &gen_table.rows {
        check_width(row, 10, "gen")?;
        let bus = lookup(row, row.values[0], "generator bus")?;
        let (p_max, p_min) = (row.values[8], row.values[9]);
        if !p_max.is_finite() || p_max < 0.0 {
            return Err(perr(row.line, format!("generator p_max must be finite and non-negative, got {p_max}")));
        }
        if !(0.0..=p_max).contains(&p_min) {
            return Err(perr(row.line, format!("generator p_min {p_min} outside [0, p_max]")));
        }
        let p_set = row.values[1];
        if !p_set.is_finite() {
            return Err(perr(row.line, format!("generator output must be finite, got {p_set}")));
        }
        generators.push(Generator { bus, p_set, p_max, p_min, in_service: row.values[7] > 0.0 });
    }

    let mut branches = Vec::with_capacity(branch_table.rows.len());
    for row in &branch_table.rows {
        check_width(row, 11, "branch")?;
        let from = lookup(row, row.values[0], "branch endpoint")?;
        let to = lookup(row, row.values[1], "branch endpoint")?;
        if from == to {
            return Err(perr(row.line, "branch connects a bus to itself"));
        }
        let reactance = row.values[3];
        if reactance == 0.0 || !reactance.is_finite() {
            return Err(perr(row.line, format!("branch reactance must be finite and nonzero, got {reactance}")));
        }
        let rating = row.values[5];
        if rating.is_nan() || rating < 0.0 {
            return Err(perr(row.line, format!("branch rating must be non-negative, got {rating}")));
        }
        branches.push(Branch { from, to, reactance, rating, in_service: row.values[10] > 0.0 });
    }

    Ok(NetworkCase { base_mva, buses, branches, generators })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const TWO_BUS: &str = "\
function mpc = two_bus
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1\t0\t345\t1\t1.1\t0.9;
\t2\t1\t100\t0\t0\t0\t1\t1\t0\t345\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t100\t0\t300\t-300\t1\t100\t1\t250\t0;
];
mpc.branch = [
\t1\t2\t0.01\t0.1\t0\t150\t150\t150\t0\t0\t1\t-360\t360;
];
";

    #[test]
    fn bundled_case_counts() {
        let case = parse_case(crate::grid::CASE39).unwrap();
        assert_eq!(case.buses.len(), 39);
        assert_eq!(case.branches.len(), 46);
        assert_eq!(case.generators.len(), 10);
        assert_eq!(case.base_mva, 100.0);
        assert!((case.total_demand() - 6254.23).abs() < 1e-6);
        assert_eq!(case.buses.iter().filter(|b| b.kind == BusKind::Slack).count(), 1);
        let cap: f64 = case.generators.iter().map(|g| g.p_max).sum();
        assert_eq!(cap, 7367.0);
    }

    #[test]
    fn two_bus_fixture() {
        let case = parse_case(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.buses[1].demand, 100.0);
        assert_eq!(case.branches[0].rating, 150.0);
        assert_eq!(case.branches[0].reactance, 0.1);
        assert_eq!(case.generators[0].p_max, 250.0);
        assert_eq!(case.buses[0].kind, BusKind::Slack);
        assert_eq!(case.branch_label(0), "1-2");
    }

    fn err_line(text: &str) -> usize {
        match parse_case(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_endpoint() {
        let bad = TWO_BUS.replace("\t1\t2\t0.01", "\t1\t7\t0.01");
        assert_eq!(err_line(&bad), 11);
    }

    #[test]
    fn malformed_rows_report_lines() {
        assert_eq!(err_line(&TWO_BUS.replace("\t100\t0\t0\t0\t1", "\tabc\t0\t0\t0\t1")), 5);
        assert_eq!(err_line(&TWO_BUS.replace("\t0.1\t0\t150", "\t0\t0\t150")), 11);
        assert_eq!(err_line(&TWO_BUS.replace("\t250\t0;", ";")), 8);
        assert_eq!(err_line(&TWO_BUS.replace("\t2\t1\t100", "\t1\t1\t100")), 5);
        let no_gen: String =
            TWO_BUS.lines().filter(|l| !l.contains("mpc.gen") && !l.contains("\t1\t100\t0\t300")).map(|l| format!("{l}\n")).collect();
        assert!(parse_case(&no_gen).is_err());
        let unterminated = TWO_BUS.replacen("];\nmpc.gen", "mpc.gen", 1);
        assert!(matches!(parse_case(&unterminated), Err(Error::Parse { .. })));
    }

    #[test]
    fn ignores_unknown_entries_and_comments() {
        let text = format!(
            "{TWO_BUS}mpc.gencost = [\n\t2\t0\t0\t3\t0.01\t40\t0;\n];\nmpc.bus_name = {{\n\t'a';\n\t'b';\n}};\n% trailing comment\n"
        );
        let case = parse_case(&text).unwrap();
        assert_eq!(case.buses.len(), 2);
    }

    #[test]
    fn zero_rating_is_unlimited() {
        let case = parse_case(&TWO_BUS.replace("\t150\t150\t150", "\t0\t0\t0")).unwrap();
        assert_eq!(case.branches[0].limit(), f64::INFINITY);
    }
}
