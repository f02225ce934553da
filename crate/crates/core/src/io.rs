//! On-disk formats: Gram cache, statevector bundles, models, scalers,
//! trajectories and embedding CSVs.
//!
//! Binary formats are little-endian; text formats write floats with 17
//! significant digits so every value round-trips exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

use crate::embedder::{EmbeddingModel, TrainingRefs};
use crate::encoding::PcaScaler;
use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelSpec};
use crate::simulator::StateVector;
use crate::tsne::Embedding;
use crate::vqe::{Iterate, Trajectory};

pub const GRAM_MAGIC: &[u8; 4] = b"QKTS";
pub const GRAM_VERSION: u32 = 1;
pub const STATES_MAGIC: &[u8; 4] = b"QKSV";
pub const STATES_VERSION: u32 = 1;
pub const MODEL_HEADER: &str = "qktsne-model v1";
pub const SCALER_HEADER: &str = "qktsne-scaler v1";
pub const TRAJECTORY_HEADER: &str = "qktsne-traj v1";
pub const EMBEDDING_CSV_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_exact<const K: usize>(r: &mut impl Read, path: &Path) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(path, "file truncated")
        } else {
            Error::io(path, e)
        }
    })?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    read_exact::<4>(r, path).map(u32::from_le_bytes)
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    read_exact::<8>(r, path).map(f64::from_le_bytes)
}

fn expect_eof(r: &mut impl Read, path: &Path) -> Result<()> {
    let mut rest = [0u8; 1];
    match r.read(&mut rest) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::format(path, "trailing bytes after payload")),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn check_header(r: &mut impl Read, path: &Path, magic: &[u8; 4], version: u32) -> Result<()> {
    if &read_exact::<4>(r, path)? != magic {
        return Err(Error::format(path, format!("bad magic, expected {:?}", String::from_utf8_lossy(magic))));
    }
    let v = read_u32(r, path)?;
    if v != version {
        return Err(Error::format(path, format!("unsupported format version {v}")));
    }
    Ok(())
}

fn to_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("{what} {n} exceeds u32")))
}

pub fn write_gram(path: impl AsRef<Path>, gram: &GramMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let n = to_u32(gram.n(), "gram size")?;
    let io = |e| Error::io(path, e);
    w.write_all(GRAM_MAGIC).map_err(io)?;
    w.write_all(&GRAM_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&n.to_le_bytes()).map_err(io)?;
    for v in gram.entries().iter() {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    finish(path, w)
}

pub fn read_gram(path: impl AsRef<Path>) -> Result<GramMatrix> {
    let path = path.as_ref();
    let mut r = open(path)?;
    check_header(&mut r, path, GRAM_MAGIC, GRAM_VERSION)?;
    let n = read_u32(&mut r, path)? as usize;
    if n == 0 {
        return Err(Error::format(path, "empty Gram matrix"));
    }
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        data.push(read_f64(&mut r, path)?);
    }
    expect_eof(&mut r, path)?;
    let entries = Array2::from_shape_vec((n, n), data).expect("length checked");
    GramMatrix::from_entries(entries).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_states(path: impl AsRef<Path>, states: &[StateVector]) -> Result<()> {
    let path = path.as_ref();
    let n_qubits = states.first().map_or(0, |s| s.n_qubits());
    if states.iter().any(|s| s.n_qubits() != n_qubits) {
        return Err(Error::InvalidArgument("states with different qubit counts".into()));
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    w.write_all(STATES_MAGIC).map_err(io)?;
    w.write_all(&STATES_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&to_u32(n_qubits, "qubit count")?.to_le_bytes()).map_err(io)?;
    w.write_all(&to_u32(states.len(), "state count")?.to_le_bytes()).map_err(io)?;
    for s in states {
        for a in s.amplitudes() {
            w.write_all(&a.re.to_le_bytes()).map_err(io)?;
            w.write_all(&a.im.to_le_bytes()).map_err(io)?;
        }
    }
    finish(path, w)
}

pub fn read_states(path: impl AsRef<Path>) -> Result<Vec<StateVector>> {
    let path = path.as_ref();
    let mut r = open(path)?;
    check_header(&mut r, path, STATES_MAGIC, STATES_VERSION)?;
    let n_qubits = read_u32(&mut r, path)? as usize;
    let count = read_u32(&mut r, path)? as usize;
    if n_qubits > crate::simulator::MAX_QUBITS {
        return Err(Error::format(path, format!("{n_qubits} qubits is too many")));
    }
    let dim = 1usize << n_qubits;
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let mut amps = Vec::with_capacity(dim);
        for _ in 0..dim {
            let re = read_f64(&mut r, path)?;
            let im = read_f64(&mut r, path)?;
            amps.push(Complex64::new(re, im));
        }
        states.push(StateVector::from_amplitudes(amps).map_err(|e| Error::format(path, e.to_string()))?);
    }
    expect_eof(&mut r, path)?;
    Ok(states)
}

/// Plain CSV of feature rows, used for Gaussian-kernel training references.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: ArrayView2<'_, f64>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for row in m.rows() {
        writeln!(w, "{}", join(row.iter().copied())).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

fn parse_floats(line: &str, path: &Path, lineno: u64) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("not a number: {t:?}"),
            })
        })
        .collect()
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i as u64 + 1;
        let row = parse_floats(&line, path, lineno)?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, lineno, format!("expected {} columns, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    let n = rows.len();
    if n == 0 {
        return Err(Error::format(path, "no rows"));
    }
    Ok(Array2::from_shape_vec((n, cols), rows.concat()).expect("rectangular"))
}

fn refs_sibling(model_path: &Path, refs: &TrainingRefs) -> PathBuf {
    let stem = model_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let ext = match refs {
        TrainingRefs::States(_) => "refs.qksv",
        TrainingRefs::Features(_) => "refs.csv",
    };
    model_path.with_file_name(format!("{stem}.{ext}"))
}

/// Writes the model text file plus its training-reference sibling. Line 4
/// holds the sibling's file name, resolved relative to the model file.
pub fn write_model(path: impl AsRef<Path>, model: &EmbeddingModel) -> Result<()> {
    let path = path.as_ref();
    let refs = model.training_refs();
    let sibling = refs_sibling(path, refs);
    match refs {
        TrainingRefs::States(states) => write_states(&sibling, states)?,
        TrainingRefs::Features(f) => write_matrix_csv(&sibling, f.view())?,
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{MODEL_HEADER}").map_err(io)?;
    writeln!(w, "{}", model.kernel().descriptor()).map_err(io)?;
    writeln!(
        w,
        "{},{},{},{}",
        model.n_train(),
        model.dim(),
        fmt_f64(model.perplexity()),
        model.seed()
    )
    .map_err(io)?;
    let name = sibling.file_name().expect("sibling has a file name");
    writeln!(w, "{}", name.to_string_lossy()).map_err(io)?;
    for row in model.alpha().rows() {
        writeln!(w, "{}", join(row.iter().copied())).map_err(io)?;
    }
    finish(path, w)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let lines: Vec<String> = open(path)?
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let line = |i: usize| -> Result<&str> {
        lines
            .get(i)
            .map(|s| s.trim_end())
            .ok_or_else(|| parse_err(path, i as u64 + 1, "unexpected end of file"))
    };
    if line(0)? != MODEL_HEADER {
        return Err(parse_err(path, 1, format!("expected header {MODEL_HEADER:?}")));
    }
    let kernel = KernelSpec::parse_descriptor(line(1)?).map_err(|e| parse_err(path, 2, e.to_string()))?;
    let dims: Vec<&str> = line(2)?.split(',').collect();
    if dims.len() != 4 {
        return Err(parse_err(path, 3, "expected N,d,perplexity,seed"));
    }
    let bad = |what: &str| parse_err(path, 3, format!("invalid {what}"));
    let n: usize = dims[0].trim().parse().map_err(|_| bad("N"))?;
    let d: usize = dims[1].trim().parse().map_err(|_| bad("d"))?;
    let perplexity: f64 = dims[2].trim().parse().map_err(|_| bad("perplexity"))?;
    let seed: u64 = dims[3].trim().parse().map_err(|_| bad("seed"))?;

    let refs_name = line(3)?;
    let refs_path = path.with_file_name(refs_name);
    let refs = if refs_name.ends_with(".qksv") {
        TrainingRefs::States(read_states(&refs_path)?)
    } else {
        TrainingRefs::Features(read_matrix_csv(&refs_path)?)
    };
    if kernel.is_quantum() != matches!(refs, TrainingRefs::States(_)) {
        return Err(parse_err(path, 4, "training references do not match the kernel"));
    }

    let mut alpha = Array2::zeros((n, d));
    for i in 0..n {
        let lineno = i as u64 + 5;
        let vals = parse_floats(line(i + 4)?, path, lineno)?;
        if vals.len() != d {
            return Err(parse_err(path, lineno, format!("expected {d} values, found {}", vals.len())));
        }
        alpha.row_mut(i).assign(&Array1::from(vals));
    }
    if lines[n + 4..].iter().any(|l| !l.trim().is_empty()) {
        return Err(parse_err(path, n as u64 + 5, "extra rows after alpha block"));
    }
    EmbeddingModel::new(alpha, kernel, Arc::new(refs), perplexity, seed)
}

pub fn write_scaler(path: impl AsRef<Path>, scaler: &PcaScaler) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{SCALER_HEADER}").map_err(io)?;
    writeln!(w, "{},{}", scaler.input_dim(), scaler.output_dim()).map_err(io)?;
    writeln!(w, "{}", join(scaler.mean().iter().copied())).map_err(io)?;
    writeln!(w, "{}", join(scaler.eigenvalues().iter().copied())).map_err(io)?;
    writeln!(w, "{}", join(scaler.min().iter().copied())).map_err(io)?;
    writeln!(w, "{}", join(scaler.max().iter().copied())).map_err(io)?;
    for row in scaler.components().rows() {
        writeln!(w, "{}", join(row.iter().copied())).map_err(io)?;
    }
    finish(path, w)
}

pub fn read_scaler(path: impl AsRef<Path>) -> Result<PcaScaler> {
    let path = path.as_ref();
    let lines: Vec<String> = open(path)?
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let get = |i: usize| {
        lines
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| parse_err(path, i as u64 + 1, "unexpected end of file"))
    };
    if get(0)?.trim_end() != SCALER_HEADER {
        return Err(parse_err(path, 1, format!("expected header {SCALER_HEADER:?}")));
    }
    let dims: Vec<usize> = get(1)?
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(path, 2, "expected input_dim,output_dim"))?;
    let [d, k] = dims[..] else {
        return Err(parse_err(path, 2, "expected input_dim,output_dim"));
    };
    let row = |i: usize, len: usize| -> Result<Vec<f64>> {
        let v = parse_floats(get(i)?, path, i as u64 + 1)?;
        if v.len() != len {
            return Err(parse_err(path, i as u64 + 1, format!("expected {len} values")));
        }
        Ok(v)
    };
    let mean = Array1::from(row(2, d)?);
    let eigenvalues = row(3, k)?;
    let min = Array1::from(row(4, k)?);
    let max = Array1::from(row(5, k)?);
    let mut comps = Vec::with_capacity(d * k);
    for i in 0..d {
        comps.extend(row(6 + i, k)?);
    }
    let components = Array2::from_shape_vec((d, k), comps).expect("length checked");
    PcaScaler::from_parts(mean, components, eigenvalues, min, max).map_err(|e| Error::format(path, e.to_string()))
}

/// Sibling statevector file for a trajectory file.
pub fn trajectory_states_path(path: &Path) -> PathBuf {
    path.with_extension("qksv")
}

/// Writes all trajectories into one CSV plus a statevector sibling holding
/// the iterate states in row order.
pub fn write_trajectories(path: impl AsRef<Path>, trajectories: &[Trajectory]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{TRAJECTORY_HEADER}").map_err(io)?;
    let mut states = Vec::new();
    for t in trajectories {
        if t.label.contains(',') || t.label.contains('\n') {
            return Err(Error::InvalidArgument(format!("trajectory label {:?}", t.label)));
        }
        for it in &t.iterates {
            writeln!(
                w,
                "{},{},{},{}",
                t.label,
                it.iteration,
                fmt_f64(it.energy),
                join(it.theta.iter().copied())
            )
            .map_err(io)?;
            states.push(it.state.clone());
        }
    }
    finish(path, w)?;
    write_states(trajectory_states_path(path), &states)
}

pub fn read_trajectories(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    let path = path.as_ref();
    let mut states = read_states(trajectory_states_path(path))?.into_iter();
    let mut out: Vec<Trajectory> = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i as u64 + 1;
        if i == 0 {
            if line.trim_end() != TRAJECTORY_HEADER {
                return Err(parse_err(path, 1, format!("expected header {TRAJECTORY_HEADER:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(4, ',');
        let label = fields.next().unwrap_or_default().to_string();
        let iteration: usize = fields
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| parse_err(path, lineno, "invalid iteration"))?;
        let energy: f64 = fields
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| parse_err(path, lineno, "invalid energy"))?;
        let theta = match fields.next() {
            Some(rest) if !rest.is_empty() => parse_floats(rest, path, lineno)?,
            _ => Vec::new(),
        };
        let state = states
            .next()
            .ok_or_else(|| Error::format(path, "fewer states than iterates"))?;
        let iterate = Iterate {
            iteration,
            theta,
            energy,
            state,
        };
        match out.last_mut() {
            Some(t) if t.label == label => t.iterates.push(iterate),
            _ => out.push(Trajectory {
                label,
                iterates: vec![iterate],
                status: None,
            }),
        }
    }
    if states.next().is_some() {
        return Err(Error::format(path, "more states than iterates"));
    }
    Ok(out)
}

/// Embedding table: `id,y0,..,y{d-1}[,label]`.
pub fn write_embedding_csv(path: impl AsRef<Path>, embedding: &Embedding, labels: Option<&[i64]>) -> Result<()> {
    let path = path.as_ref();
    if let Some(l) = labels {
        if l.len() != embedding.n() {
            return Err(Error::DimensionMismatch {
                expected: embedding.n(),
                actual: l.len(),
                context: "labels vs embedding rows",
            });
        }
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let mut header: Vec<String> = vec!["id".into()];
    header.extend((0..embedding.dim()).map(|k| format!("y{k}")));
    if labels.is_some() {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (i, row) in embedding.view().rows().into_iter().enumerate() {
        write!(w, "{i},{}", join(row.iter().copied())).map_err(io)?;
        if let Some(l) = labels {
            write!(w, ",{}", l[i]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    finish(path, w)
}

pub struct EmbeddingTable {
    pub embedding: Embedding,
    pub labels: Option<Vec<i64>>,
}

pub fn read_embedding_csv(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_label = names.last() == Some(&"label");
    let dim = names.iter().filter(|h| h.starts_with('y')).count();
    let expected: Vec<String> = std::iter::once("id".to_string())
        .chain((0..dim).map(|k| format!("y{k}")))
        .chain(has_label.then(|| "label".to_string()))
        .collect();
    if dim == 0 || names != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(parse_err(path, 1, "expected header id,y0,..,[label]"));
    }
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let lineno = rec.position().map_or(0, |p| p.line());
        for k in 0..dim {
            let v: f64 = rec[k + 1]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid y{k}")))?;
            coords.push(v);
        }
        if has_label {
            let l: i64 = rec[dim + 1]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, "invalid label"))?;
            labels.push(l);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::format(path, "embedding has no rows"));
    }
    let y = Array2::from_shape_vec((n, dim), coords).expect("rectangular");
    Ok(EmbeddingTable {
        embedding: Embedding::new(y)?,
        labels: has_label.then_some(labels),
    })
}
