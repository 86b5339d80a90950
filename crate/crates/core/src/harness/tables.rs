//! Result tables and their fixed CSV schemas.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Int(Vec<i64>),
    Float(Vec<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Int(v) => v.len(),
            ColumnData::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell(&self, i: usize) -> String {
        match self {
            ColumnData::Int(v) => v[i].to_string(),
            // Shortest representation that round-trips.
            ColumnData::Float(v) => format!("{:e}", v[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub data: ColumnData,
}

/// Provenance written as `# key=value` lines above the CSV header.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TableMeta {
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Config keys left at their default values.
    pub defaults: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: &'static str,
    pub columns: Vec<Column>,
}

impl ResultTable {
    /// Builds a table and checks it against the registered schema.
    pub fn new(name: &'static str, columns: Vec<Column>) -> Result<Self> {
        let schema = schema(name).ok_or_else(|| Error::Unknown { kind: "table", name: name.to_string() })?;
        let names: Vec<&str> = columns.iter().map(|c| c.name).collect();
        let expected: Vec<&str> = schema.columns.iter().map(|c| c.name).collect();
        if names != expected {
            return Err(Error::Serialize(format!("{name}: columns {names:?} differ from schema {expected:?}")));
        }
        let rows = columns.first().map_or(0, |c| c.data.len());
        if let Some(c) = columns.iter().find(|c| c.data.len() != rows) {
            return Err(Error::DimensionMismatch { what: "table column", expected: rows, got: c.data.len() });
        }
        Ok(ResultTable { name, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.data.len())
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.columns.iter().find(|c| c.name == name).map(|c| &c.data)
    }

    pub fn write_csv<W: Write>(&self, out: W, meta: &TableMeta) -> Result<()> {
        let mut out = out;
        let io = |e: std::io::Error| Error::Serialize(e.to_string());
        writeln!(out, "# table={}", self.name).map_err(io)?;
        writeln!(out, "# config_hash={}", meta.config_hash).map_err(io)?;
        match meta.seed {
            Some(seed) => writeln!(out, "# seed={seed}").map_err(io)?,
            None => writeln!(out, "# seed=none").map_err(io)?,
        }
        writeln!(out, "# defaults={}", meta.defaults.join(",")).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| Error::Serialize(e.to_string());
        w.write_record(self.columns.iter().map(|c| c.name)).map_err(ser)?;
        for i in 0..self.n_rows() {
            w.write_record(self.columns.iter().map(|c| c.data.cell(i))).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn save(&self, dir: &Path, meta: &TableMeta) -> Result<()> {
        let path = dir.join(format!("{}.csv", self.name));
        let file = std::fs::File::create(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
        self.write_csv(std::io::BufWriter::new(file), meta)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ColumnSchema {
    pub name: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct TableSchema {
    pub name: &'static str,
    pub experiment: &'static str,
    pub description: &'static str,
    pub columns: &'static [ColumnSchema],
}

const fn col(name: &'static str, unit: &'static str, description: &'static str) -> ColumnSchema {
    ColumnSchema { name, unit, description }
}

pub const SCHEMAS: &[TableSchema] = &[
    TableSchema {
        name: "fig1_baseline_sweep",
        experiment: "baseline",
        description: "Baseline efficiency with all elements active and one uniform phase, at mean shadowing",
        columns: &[
            col("n_elements", "count", "elements per RIS"),
            col("phase_rad", "rad", "uniform phase applied to every element"),
            col("eta", "1", "received over consumed power"),
        ],
    },
    TableSchema {
        name: "fig2_per_ris_power_vs_distance",
        experiment: "ie",
        description: "Co-phased received power with each RIS acting alone, against the direct path",
        columns: &[
            col("ris", "index", "RIS number, starting at 1"),
            col("distance_m", "m", "RIS-user distance"),
            col("received_power_w", "W", "direct plus co-phased reflection of this RIS"),
            col("direct_power_w", "W", "direct path alone"),
        ],
    },
    TableSchema {
        name: "fig4_eta_vs_active_elements",
        experiment: "ie",
        description: "Baseline against optimized efficiency over the element-count sweep",
        columns: &[
            col("n_elements", "count", "elements per RIS"),
            col("active_baseline", "count", "active elements in the baseline"),
            col("active_optimized", "count", "active elements after consumption minimization"),
            col("baseline_eta", "1", "baseline efficiency"),
            col("eta_star", "1", "selected-RIS power over minimized consumption"),
            col("eta_realized", "1", "co-phased power of the optimized activation over its consumption"),
            col("eta_co_phased", "1", "co-phased efficiency with every element active"),
        ],
    },
    TableSchema {
        name: "fig5_eta_vs_pt",
        experiment: "ie",
        description: "Baseline against optimized efficiency over the transmit-power sweep",
        columns: &[
            col("pt_w", "W", "transmit power"),
            col("baseline_eta", "1", "baseline efficiency"),
            col("eta_star", "1", "selected-RIS power over minimized consumption"),
            col("eta_realized", "1", "co-phased power of the optimized activation over its consumption"),
            col("eta_co_phased", "1", "co-phased efficiency with every element active"),
        ],
    },
    TableSchema {
        name: "fig6_alpha_trace",
        experiment: "nie",
        description: "Mean effective Adam step size per iteration",
        columns: &[
            col("iteration", "count", "Adam step"),
            col("effective_alpha", "rad", "mean over active elements of alpha/(sqrt(v_hat)+epsilon)"),
        ],
    },
    TableSchema {
        name: "fig7_multistart",
        experiment: "nie",
        description: "Expected efficiency per iteration for several random starting phases",
        columns: &[
            col("run", "index", "start number, starting at 1"),
            col("iteration", "count", "Adam step, 0 is the starting point"),
            col("expected_eta", "1", "Monte Carlo mean efficiency"),
        ],
    },
    TableSchema {
        name: "fig8_eta_trace",
        experiment: "nie",
        description: "Expected efficiency and mean phase of the main run",
        columns: &[
            col("iteration", "count", "Adam step, 0 is the starting point"),
            col("expected_eta", "1", "Monte Carlo mean efficiency"),
            col("mean_phase_rad", "rad", "mean phase over active elements"),
        ],
    },
    TableSchema {
        name: "fig9_eta_vs_phase",
        experiment: "nie",
        description: "Expected efficiency and mean phase per iteration, each RIS optimized alone",
        columns: &[
            col("ris", "index", "RIS number, starting at 1"),
            col("distance_m", "m", "RIS-user distance"),
            col("iteration", "count", "Adam step"),
            col("expected_eta", "1", "Monte Carlo mean efficiency"),
            col("mean_phase_rad", "rad", "mean phase over the RIS elements"),
        ],
    },
    TableSchema {
        name: "fig10_per_ris_max",
        experiment: "nie",
        description: "Best expected efficiency of each RIS optimized alone",
        columns: &[
            col("ris", "index", "RIS number, starting at 1"),
            col("distance_m", "m", "RIS-user distance"),
            col("max_expected_eta", "1", "best Monte Carlo mean efficiency"),
            col("mean_phase_rad", "rad", "mean phase at the best point"),
        ],
    },
];

pub fn schema(name: &str) -> Option<&'static TableSchema> {
    SCHEMAS.iter().find(|s| s.name == name)
}

/// Human-readable description of a table's columns.
pub fn describe(schema: &TableSchema) -> String {
    let mut s = format!("{}\n  {}\n  produced by: {}\n  columns:\n", schema.name, schema.description, schema.experiment);
    for c in schema.columns {
        s.push_str(&format!("    {:<20} [{}] {}\n", c.name, c.unit, c.description));
    }
    s
}
