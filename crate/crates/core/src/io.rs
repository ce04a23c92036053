//! Run artifacts: binary snapshots, the ledger CSV and the run manifest.
//!
//! A snapshot file is a 56-byte header followed by fixed-size records of little-endian
//! `f64`:
//!
//! ```text
//! header : "DYNPSNAP" | version u32 | nx u32 | ny u32 | boundary nodes u32 | config hash [u8; 32]
//! record : step u64 | t | dt | u | v | e | p | σ | traction | slip | Δe | Δp
//! ```
//!
//! Vectors are stored as `(x, y)` pairs, symmetric tensors as `(xx, yy, xy)`, nodes and
//! cells in row-major order. The first record is the initial state with zero increments.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{Sym2, Vec2};
use crate::analysis::StepView;
use crate::config::SimConfig;
use crate::dynamics::{Increment, LedgerRow, State, LEDGER_COLUMNS};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DYNPSNAP";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 56;

pub const SNAPSHOT_FILE: &str = "snapshots.bin";
pub const LEDGER_FILE: &str = "ledger.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub nx: u32,
    pub ny: u32,
    pub boundary_nodes: u32,
    pub config_hash: [u8; 32],
}

impl SnapshotHeader {
    fn nodes(&self) -> usize {
        (self.nx as usize + 1) * (self.ny as usize + 1)
    }

    fn cells(&self) -> usize {
        self.nx as usize * self.ny as usize
    }

    /// Record length in bytes.
    pub fn record_len(&self) -> usize {
        8 * (3 + 4 * self.nodes() + 15 * self.cells() + 4 * self.boundary_nodes as usize)
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        b[12..16].copy_from_slice(&self.nx.to_le_bytes());
        b[16..20].copy_from_slice(&self.ny.to_le_bytes());
        b[20..24].copy_from_slice(&self.boundary_nodes.to_le_bytes());
        b[24..].copy_from_slice(&self.config_hash);
        b
    }

    fn parse(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN || &b[..8] != MAGIC {
            return Err(Error::Corrupt("not a snapshot file".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(Error::Corrupt(format!("unsupported snapshot version {version}")));
        }
        Ok(Self { nx: u32_at(12), ny: u32_at(16), boundary_nodes: u32_at(20), config_hash: b[24..56].try_into().unwrap() })
    }
}

pub fn parse_hash(hex_hash: &str) -> Result<[u8; 32]> {
    let v = hex::decode(hex_hash).map_err(|e| Error::Corrupt(format!("bad config hash: {e}")))?;
    v.try_into().map_err(|_| Error::Corrupt("config hash must be 32 bytes".into()))
}

/// One stored step: the state after the step and the step's increments.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRecord {
    pub step: u64,
    pub dt: f64,
    pub state: State,
    pub delta_e: Vec<Sym2>,
    pub delta_p: Vec<Sym2>,
}

impl SnapshotRecord {
    pub fn view(&self) -> StepView<'_> {
        StepView {
            dt: self.dt,
            sigma: &self.state.sigma,
            v: &self.state.v,
            traction: &self.state.traction,
            delta_e: &self.delta_e,
            delta_p: &self.delta_p,
        }
    }
}

fn put_vecs(buf: &mut Vec<u8>, f: &[Vec2]) {
    for x in f {
        buf.extend_from_slice(&x[0].to_le_bytes());
        buf.extend_from_slice(&x[1].to_le_bytes());
    }
}

fn put_syms(buf: &mut Vec<u8>, f: &[Sym2]) {
    for s in f {
        for c in s.components() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
}

pub struct SnapshotWriter {
    out: BufWriter<File>,
    hasher: Sha256,
    header: SnapshotHeader,
    buf: Vec<u8>,
    records: usize,
}

impl SnapshotWriter {
    pub fn create(path: &Path, header: SnapshotHeader) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        let mut hasher = Sha256::new();
        let h = header.to_bytes();
        out.write_all(&h)?;
        hasher.update(h);
        Ok(Self { out, hasher, header, buf: Vec::with_capacity(header.record_len()), records: 0 })
    }

    pub fn write(&mut self, step: u64, state: &State, inc: &Increment) -> Result<()> {
        let b = &mut self.buf;
        b.clear();
        b.extend_from_slice(&step.to_le_bytes());
        b.extend_from_slice(&state.t.to_le_bytes());
        b.extend_from_slice(&inc.dt.to_le_bytes());
        put_vecs(b, &state.u);
        put_vecs(b, &state.v);
        put_syms(b, &state.e);
        put_syms(b, &state.p);
        put_syms(b, &state.sigma);
        put_vecs(b, &state.traction);
        put_vecs(b, &state.slip);
        put_syms(b, &inc.delta_e);
        put_syms(b, &inc.delta_p);
        if b.len() != self.header.record_len() {
            return Err(Error::FieldSize { expected: self.header.record_len(), found: b.len() });
        }
        self.out.write_all(b)?;
        self.hasher.update(&*b);
        self.records += 1;
        Ok(())
    }

    /// Flushes and returns the record count and the file's SHA-256.
    pub fn finish(mut self) -> Result<(usize, String)> {
        self.out.flush()?;
        Ok((self.records, hex::encode(self.hasher.finalize())))
    }
}

/// A snapshot file read fully into memory.
pub struct SnapshotFile {
    pub header: SnapshotHeader,
    bytes: Vec<u8>,
}

impl SnapshotFile {
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Corrupt(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(bytes)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let header = SnapshotHeader::parse(&bytes)?;
        let body = bytes.len() - HEADER_LEN;
        if body % header.record_len() != 0 {
            return Err(Error::Corrupt(format!(
                "snapshot file truncated: {body} payload bytes is not a multiple of the record length {}",
                header.record_len()
            )));
        }
        Ok(Self { header, bytes })
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }

    pub fn len(&self) -> usize {
        (self.bytes.len() - HEADER_LEN) / self.header.record_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn record(&self, i: usize) -> Result<SnapshotRecord> {
        if i >= self.len() {
            return Err(Error::Corrupt(format!("record {i} out of range")));
        }
        let h = self.header;
        let start = HEADER_LEN + i * h.record_len();
        let mut r = Reader { b: &self.bytes[start..start + h.record_len()], at: 0 };
        let step = u64::from_le_bytes(r.take8());
        let t = r.f();
        let dt = r.f();
        let (nn, nc, nb) = (h.nodes(), h.cells(), h.boundary_nodes as usize);
        let u = r.vecs(nn);
        let v = r.vecs(nn);
        let e = r.syms(nc);
        let p = r.syms(nc);
        let sigma = r.syms(nc);
        let traction = r.vecs(nb);
        let slip = r.vecs(nb);
        let delta_e = r.syms(nc);
        let delta_p = r.syms(nc);
        Ok(SnapshotRecord { step, dt, state: State { t, u, v, e, p, sigma, traction, slip }, delta_e, delta_p })
    }

    pub fn records(&self) -> impl Iterator<Item = Result<SnapshotRecord>> + '_ {
        (0..self.len()).map(|i| self.record(i))
    }
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take8(&mut self) -> [u8; 8] {
        let out = self.b[self.at..self.at + 8].try_into().unwrap();
        self.at += 8;
        out
    }

    fn f(&mut self) -> f64 {
        f64::from_le_bytes(self.take8())
    }

    fn vecs(&mut self, n: usize) -> Vec<Vec2> {
        (0..n).map(|_| [self.f(), self.f()]).collect()
    }

    fn syms(&mut self, n: usize) -> Vec<Sym2> {
        (0..n).map(|_| Sym2::from_components(&[self.f(), self.f(), self.f()])).collect()
    }
}

pub fn ledger_csv_header(config_hash: &str) -> String {
    format!("# config_hash={config_hash}\n{}\n", LEDGER_COLUMNS.join(","))
}

pub fn ledger_csv_row(row: &LedgerRow) -> String {
    let v: Vec<String> = row.values().iter().map(|x| x.to_string()).collect();
    v.join(",") + "\n"
}

/// Parses a ledger CSV into its config hash and rows.
pub fn read_ledger(path: &Path) -> Result<(String, Vec<LedgerRow>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Corrupt(format!("cannot read ledger: {e}")))?;
    let mut lines = text.lines();
    let hash = lines
        .next()
        .and_then(|l| l.strip_prefix("# config_hash="))
        .ok_or_else(|| Error::Corrupt("ledger lacks the config hash line".into()))?
        .to_string();
    if lines.next() != Some(LEDGER_COLUMNS.join(",").as_str()) {
        return Err(Error::Corrupt("unexpected ledger columns".into()));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Corrupt(format!("ledger row {k}: {e}")))?;
        if v.len() != LEDGER_COLUMNS.len() {
            return Err(Error::Corrupt(format!("ledger row {k} has {} columns", v.len())));
        }
        rows.push(LedgerRow {
            t: v[0],
            kinetic: v[1],
            elastic: v[2],
            plastic_cum: v[3],
            boundary_psi_cum: v[4],
            boundary_flux_cum: v[5],
            work_cum: v[6],
            residual: v[7],
            sigma_gap: v[8],
        });
    }
    Ok((hash, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub program: String,
    pub version: String,
    pub config_hash: String,
    pub config: SimConfig,
    pub steps: usize,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub snapshot_records: usize,
    pub snapshot_sha256: String,
    pub ledger_rows: usize,
    pub ledger_sha256: String,
    pub initial_energy: f64,
    pub final_digest: String,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text =
            std::fs::read_to_string(&path).map_err(|e| Error::Corrupt(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Corrupt(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryPartition, Grid, Label};

    fn sample() -> (SnapshotHeader, State, Increment) {
        let g = Grid::new(2.0, 1.0, 4, 2).unwrap();
        let part = BoundaryPartition::uniform(&g, Label::Neumann).unwrap();
        let mut s = State::zero(&g, &part);
        s.t = 0.25;
        s.u[3] = [1.0, -2.0];
        s.sigma[5] = Sym2::new(0.1, 0.2, 0.3);
        s.traction[1] = [4.0, 5.0];
        let inc = Increment { dt: 0.125, delta_e: vec![Sym2::new(1.0, 2.0, 3.0); 8], delta_p: vec![Sym2::zero(); 8] };
        let h = SnapshotHeader { nx: 4, ny: 2, boundary_nodes: part.nodes.len() as u32, config_hash: [7; 32] };
        (h, s, inc)
    }

    #[test]
    fn round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let (h, s, inc) = sample();
        let mut w = SnapshotWriter::create(&path, h).unwrap();
        w.write(0, &s, &inc).unwrap();
        w.write(3, &s, &inc).unwrap();
        let (n, sha) = w.finish().unwrap();
        assert_eq!(n, 2);
        let f = SnapshotFile::open(&path).unwrap();
        assert_eq!(f.header, h);
        assert_eq!(f.sha256(), sha);
        let r = f.record(1).unwrap();
        assert_eq!(r.step, 3);
        assert_eq!(r.state, s);
        assert_eq!(r.delta_e, inc.delta_e);

        let bytes = std::fs::read(&path).unwrap();
        assert!(matches!(SnapshotFile::from_bytes(bytes[..bytes.len() - 8].to_vec()), Err(Error::Corrupt(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(SnapshotFile::from_bytes(bad).is_err());
    }

    #[test]
    fn ledger_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        let row = LedgerRow { t: 0.1, kinetic: 1.0 / 3.0, residual: -1e-17, ..Default::default() };
        std::fs::write(&path, ledger_csv_header("ab") + &ledger_csv_row(&row)).unwrap();
        let (hash, rows) = read_ledger(&path).unwrap();
        assert_eq!(hash, "ab");
        assert_eq!(rows, vec![row]);
    }
}
