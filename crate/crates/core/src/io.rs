//! File formats: `GDT1`/`GDTC` binary tensors, eigenvalue CSV, JSON sidecars
//! and station label CSV.
//!
//! A binary tensor file is the 4-byte magic, a little-endian `u32` order,
//! that many little-endian `u64` dimensions, then the values as little-endian
//! `f64` with the first index fastest. Complex files store `(re, im)` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dmd::{mode_frequency, DmdMeta, DmdResult};
use crate::error::{Error, Result};
use crate::graph::AdjacencySequence;
use crate::swarm::{SwarmConfig, Trajectory};
use crate::tensor::{DenseTensor, Scalar};

pub const REAL_MAGIC: [u8; 4] = *b"GDT1";
pub const COMPLEX_MAGIC: [u8; 4] = *b"GDTC";

/// Largest tensor order accepted when reading.
pub const MAX_ORDER: u32 = 64;

/// Scalars with a binary tensor encoding.
pub trait GdtScalar: Scalar {
    const MAGIC: [u8; 4];
    /// Number of `f64` words per value.
    const WORDS: usize;
    fn push_words(self, out: &mut Vec<f64>);
    fn from_words(words: &[f64]) -> Self;
}

impl GdtScalar for f64 {
    const MAGIC: [u8; 4] = REAL_MAGIC;
    const WORDS: usize = 1;
    fn push_words(self, out: &mut Vec<f64>) {
        out.push(self);
    }
    fn from_words(words: &[f64]) -> Self {
        words[0]
    }
}

impl GdtScalar for Complex64 {
    const MAGIC: [u8; 4] = COMPLEX_MAGIC;
    const WORDS: usize = 2;
    fn push_words(self, out: &mut Vec<f64>) {
        out.push(self.re);
        out.push(self.im);
    }
    fn from_words(words: &[f64]) -> Self {
        Complex64::new(words[0], words[1])
    }
}

pub fn write_tensor<T: GdtScalar, W: Write>(mut w: W, t: &DenseTensor<T>) -> Result<()> {
    w.write_all(&T::MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &n in t.dims() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    let mut words = Vec::with_capacity(T::WORDS);
    for &v in t.values() {
        words.clear();
        v.push_words(&mut words);
        for x in &words {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Counted<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Counted<R> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        let mut filled = 0;
        while filled < N {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(Error::Format {
                        offset: self.offset + filled as u64,
                        msg: format!("unexpected end of file while reading {what}"),
                    })
                }
                Ok(k) => filled += k,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += N as u64;
        Ok(buf)
    }

    fn at_end(&mut self) -> Result<bool> {
        let mut probe = [0u8; 1];
        loop {
            match self.inner.read(&mut probe) {
                Ok(0) => return Ok(true),
                Ok(_) => return Ok(false),
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
}

pub fn read_tensor<T: GdtScalar, R: Read>(r: R) -> Result<DenseTensor<T>> {
    let mut r = Counted { inner: r, offset: 0 };
    let magic = r.take::<4>("magic")?;
    if magic != T::MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(&T::MAGIC),
                String::from_utf8_lossy(&magic)
            ),
        });
    }
    let order_at = r.offset;
    let order = u32::from_le_bytes(r.take::<4>("order")?);
    if order == 0 || order > MAX_ORDER {
        return Err(Error::Format { offset: order_at, msg: format!("invalid tensor order {order}") });
    }
    let mut dims = Vec::with_capacity(order as usize);
    let mut len = 1usize;
    for k in 0..order {
        let at = r.offset;
        let n = u64::from_le_bytes(r.take::<8>("dimension")?);
        let n = usize::try_from(n)
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Format { offset: at, msg: format!("invalid size {n} of mode {k}") })?;
        len = len
            .checked_mul(n)
            .filter(|l| l.checked_mul(T::WORDS * 8).is_some())
            .ok_or_else(|| Error::Format { offset: at, msg: "element count overflows".into() })?;
        dims.push(n);
    }
    let mut values = Vec::with_capacity(len.min(1 << 24));
    let mut words = [0.0f64; 2];
    for _ in 0..len {
        for word in words.iter_mut().take(T::WORDS) {
            *word = f64::from_le_bytes(r.take::<8>("values")?);
        }
        values.push(T::from_words(&words[..T::WORDS]));
    }
    if !r.at_end()? {
        return Err(Error::Format { offset: r.offset, msg: "trailing bytes after tensor data".into() });
    }
    DenseTensor::new(dims, values)
}

pub fn save_tensor<T: GdtScalar>(path: impl AsRef<Path>, t: &DenseTensor<T>) -> Result<()> {
    write_tensor(BufWriter::new(File::create(path)?), t)
}

pub fn load_tensor<T: GdtScalar>(path: impl AsRef<Path>) -> Result<DenseTensor<T>> {
    read_tensor(BufReader::new(File::open(path)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    /// Cycles per unit time.
    pub frequency: f64,
}

pub fn eigen_rows(eigenvalues: &[Complex64], dt: f64) -> Result<Vec<EigenRow>> {
    eigenvalues
        .iter()
        .enumerate()
        .map(|(index, &l)| {
            Ok(EigenRow { index, re: l.re, im: l.im, modulus: l.norm(), frequency: mode_frequency(l, dt)? })
        })
        .collect()
}

pub fn write_eigenvalues(path: impl AsRef<Path>, eigenvalues: &[Complex64], dt: f64) -> Result<()> {
    write_rows(path, &eigen_rows(eigenvalues, dt)?)
}

pub fn read_eigenvalues(path: impl AsRef<Path>) -> Result<Vec<Complex64>> {
    let rows: Vec<EigenRow> = read_rows(path)?;
    Ok(rows.into_iter().map(|r| Complex64::new(r.re, r.im)).collect())
}

/// Writes serializable records as a headed CSV file.
pub fn write_rows<S: Serialize>(path: impl AsRef<Path>, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<D: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<D>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (k, row) in r.deserialize().enumerate() {
        out.push(row.map_err(|e| Error::Parse { line: k + 2, msg: e.to_string() })?);
    }
    Ok(out)
}

/// Writes a numeric table with a leading text column.
pub fn write_table(
    path: impl AsRef<Path>,
    header: &[String],
    rows: impl IntoIterator<Item = (String, Vec<String>)>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (key, rest) in rows {
        let mut rec = vec![key];
        rec.extend(rest);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<D: DeserializeOwned>(path: impl AsRef<Path>) -> Result<D> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Metadata sidecar of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSidecar {
    #[serde(flatten)]
    pub meta: DmdMeta,
    pub dt: f64,
    pub n_modes: usize,
    pub mode_dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub y_ranks: Vec<usize>,
}

pub const EIGENVALUES_FILE: &str = "eigenvalues.csv";
pub const MODES_FILE: &str = "modes.gdtc";
pub const OPERATOR_FILE: &str = "operator.gdt1";
pub const META_FILE: &str = "meta.json";

/// Writes eigenvalues, modes, the reduced operator and the metadata sidecar
/// into `dir`.
pub fn save_result(dir: impl AsRef<Path>, result: &DmdResult, dt: f64) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_eigenvalues(dir.join(EIGENVALUES_FILE), &result.eigenvalues, dt)?;
    save_tensor(dir.join(MODES_FILE), &result.modes)?;
    let op = &result.reduced;
    let op_values: Vec<f64> = (0..op.ncols()).flat_map(|j| (0..op.nrows()).map(move |i| op[(i, j)])).collect();
    save_tensor(dir.join(OPERATOR_FILE), &DenseTensor::new(vec![op.nrows().max(1), op.ncols().max(1)], pad(op_values))?)?;
    let sidecar = ResultSidecar {
        meta: result.meta.clone(),
        dt,
        n_modes: result.n_modes(),
        mode_dims: result.mode_dims().to_vec(),
        ranks: result.ranks.clone(),
        y_ranks: result.y_ranks.clone(),
    };
    write_json(dir.join(META_FILE), &sidecar)
}

fn pad(mut v: Vec<f64>) -> Vec<f64> {
    if v.is_empty() {
        v.push(0.0);
    }
    v
}

/// Writes the sequence as an `m × m × steps` tensor and, if present, its
/// vertex labels to `labels_path` with columns `index,label`.
pub fn save_adjacency(tensor_path: impl AsRef<Path>, labels_path: impl AsRef<Path>, adj: &AdjacencySequence) -> Result<()> {
    save_tensor(tensor_path, &adj.to_tensor()?)?;
    let labels: Vec<String> = match adj.labels() {
        Some(l) => l.to_vec(),
        None => (0..adj.m()).map(|i| i.to_string()).collect(),
    };
    let rows: Vec<LabelRow> = labels.into_iter().enumerate().map(|(index, label)| LabelRow { index, label }).collect();
    write_rows(labels_path, &rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LabelRow {
    index: usize,
    label: String,
}

pub fn load_adjacency(tensor_path: impl AsRef<Path>, labels_path: Option<&Path>, dt: f64) -> Result<AdjacencySequence> {
    let adj = AdjacencySequence::from_tensor(&load_tensor(tensor_path)?, dt)?;
    match labels_path {
        Some(p) => {
            let mut rows: Vec<LabelRow> = read_rows(p)?;
            rows.sort_by_key(|r| r.index);
            adj.with_labels(rows.into_iter().map(|r| r.label).collect())
        }
        None => Ok(adj),
    }
}

/// Writes the `agents × 2 × frames` position tensor and the simulator
/// configuration sidecar.
pub fn save_trajectory(
    tensor_path: impl AsRef<Path>,
    config_path: impl AsRef<Path>,
    trajectory: &Trajectory,
    config: &SwarmConfig,
) -> Result<()> {
    save_tensor(tensor_path, &trajectory.to_tensor()?)?;
    write_json(config_path, config)
}

pub fn load_trajectory(tensor_path: impl AsRef<Path>, config_path: impl AsRef<Path>) -> Result<(Trajectory, SwarmConfig)> {
    let config: SwarmConfig = read_json(config_path)?;
    let t = Trajectory::from_tensor(&load_tensor(tensor_path)?, config.dt)?;
    Ok((t, config))
}
