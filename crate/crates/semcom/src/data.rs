//! Dataset container, binary file format, normalization, splitting,
//! batching and the synthetic class-conditional generator.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use semcom_core::rng::SplitMix64;
use semcom_core::Tensor;

use crate::{AppError, Result};

const MAGIC: &[u8; 4] = b"SMDS";
const VERSION: u16 = 1;

/// Paired modality matrices plus one-hot labels. Feature entries are
/// expected in [0, 1] once normalized; `load` preserves raw values.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub hsi: Tensor,
    pub lidar: Tensor,
    pub labels: Tensor,
    pub names: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.rows
    }

    pub fn m(&self) -> usize {
        self.labels.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.hsi.rows != self.labels.rows || self.lidar.rows != self.labels.rows {
            return Err(AppError::Data("dataset row counts differ".into()));
        }
        if self.n() == 0 {
            return Err(AppError::Data("dataset is empty".into()));
        }
        for (i, row) in self.labels.data.chunks(self.labels.cols).enumerate() {
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(AppError::Data(format!("label row {i} is not one-hot")));
            }
        }
        if !self.names.is_empty() && self.names.len() != self.m() {
            return Err(AppError::Data("class name count != class count".into()));
        }
        Ok(())
    }

    /// Rows `idx` as a new dataset (shared class names).
    pub fn select(&self, idx: &[usize]) -> Dataset {
        let gather = |t: &Tensor| {
            let mut out = Tensor::zeros(idx.len(), t.cols);
            for (r, &i) in idx.iter().enumerate() {
                out.data[r * t.cols..(r + 1) * t.cols].copy_from_slice(t.row(i));
            }
            out
        };
        Dataset {
            hsi: gather(&self.hsi),
            lidar: gather(&self.lidar),
            labels: gather(&self.labels),
            names: self.names.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.hsi.cols as u32).to_le_bytes());
        buf.extend_from_slice(&(self.lidar.cols as u32).to_le_bytes());
        buf.extend_from_slice(&(self.m() as u32).to_le_bytes());
        for &v in &self.hsi.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for &v in &self.lidar.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for &v in &self.labels.data {
            buf.push(v as u8);
        }
        for name in &self.names {
            let bytes = name.as_bytes();
            buf.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
            buf.extend_from_slice(bytes);
        }
        crate::harness::atomic_write(path, &buf)
    }

    /// Reads the binary format; raw feature values are preserved
    /// (normalization is a separate, explicit step).
    pub fn load(path: &Path) -> Result<Dataset> {
        let bytes = fs::read(path)
            .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
        let mut r = Reader::new(&bytes, path);
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(r.format_err("bad magic bytes"));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(r.format_err(&format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let d_hsi = r.u32()? as usize;
        let d_lidar = r.u32()? as usize;
        let m = r.u32()? as usize;
        if n == 0 || d_hsi == 0 || d_lidar == 0 || m == 0 {
            return Err(r.format_err("zero-sized dimension in header"));
        }
        let hsi = r.f32_matrix(n, d_hsi)?;
        let lidar = r.f32_matrix(n, d_lidar)?;
        let mut labels = Tensor::zeros(n, m);
        for v in labels.data.iter_mut() {
            *v = r.u8()? as f64;
        }
        let mut names = Vec::new();
        while !r.at_end() {
            let len = r.u16()? as usize;
            let raw = r.take(len)?;
            names.push(
                String::from_utf8(raw.to_vec())
                    .map_err(|_| AppError::Data("class name is not UTF-8".into()))?,
            );
        }
        if !names.is_empty() && names.len() != m {
            return Err(AppError::Data(format!(
                "{}: {} class names for {m} classes",
                path.display(),
                names.len()
            )));
        }
        let ds = Dataset {
            hsi,
            lidar,
            labels,
            names,
        };
        ds.validate()?;
        Ok(ds)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Reader {
            bytes,
            offset: 0,
            path,
        }
    }

    fn format_err(&self, msg: &str) -> AppError {
        AppError::Data(format!(
            "{}: {msg} at byte offset {}",
            self.path.display(),
            self.offset
        ))
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.offset + len > self.bytes.len() {
            return Err(self.format_err("truncated file"));
        }
        let out = &self.bytes[self.offset..self.offset + len];
        self.offset += len;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32_matrix(&mut self, rows: usize, cols: usize) -> Result<Tensor> {
        let mut t = Tensor::zeros(rows, cols);
        for v in t.data.iter_mut() {
            let raw = self.take(4)?;
            *v = f32::from_le_bytes(raw.try_into().unwrap()) as f64;
        }
        Ok(t)
    }

    fn at_end(&self) -> bool {
        self.offset == self.bytes.len()
    }
}

/// Per-column min/max recorded for the inverse mapping.
#[derive(Debug, Clone)]
pub struct NormStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormStats {
    pub fn fit(x: &Tensor) -> NormStats {
        let mut min = vec![f64::INFINITY; x.cols];
        let mut max = vec![f64::NEG_INFINITY; x.cols];
        for row in x.data.chunks(x.cols) {
            for ((mn, mx), &v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *mn = mn.min(v);
                *mx = mx.max(v);
            }
        }
        NormStats { min, max }
    }

    /// `(x - min) / (max - min)` per column, clamped to [0, 1] so that
    /// out-of-range test values stay valid reconstruction targets.
    /// Constant columns map to 0.
    pub fn apply(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for row in out.data.chunks_mut(x.cols) {
            for ((v, &mn), &mx) in row.iter_mut().zip(&self.min).zip(&self.max) {
                *v = if mx > mn {
                    ((*v - mn) / (mx - mn)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        out
    }
}

/// Min-max normalization to [0, 1]; returns the per-column stats.
pub fn normalize_minmax(x: &Tensor) -> (Tensor, NormStats) {
    let stats = NormStats::fit(x);
    (stats.apply(x), stats)
}

#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

/// Seeded shuffle + partition; stratified mode partitions within each
/// class so every class stays present on both sides where counts allow.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = ds.n();
    let f = spec.train_fraction;
    if !(0.0..1.0).contains(&f) || (f * n as f64) < 1.0 || ((1.0 - f) * n as f64) < 1.0 {
        return Err(AppError::Data(format!(
            "train fraction {f} leaves an empty partition for N = {n}"
        )));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    if spec.stratified {
        let m = ds.m();
        for class in 0..m {
            let mut idx: Vec<usize> = (0..n)
                .filter(|&i| ds.labels.at(i, class) == 1.0)
                .collect();
            if idx.is_empty() {
                continue;
            }
            rng.shuffle(&mut idx);
            let mut take = (f * idx.len() as f64).round() as usize;
            if idx.len() >= 2 {
                take = take.clamp(1, idx.len() - 1);
            }
            train_idx.extend_from_slice(&idx[..take]);
            test_idx.extend_from_slice(&idx[take..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut idx);
        let take = (f * n as f64).floor() as usize;
        train_idx.extend_from_slice(&idx[..take]);
        test_idx.extend_from_slice(&idx[take..]);
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(AppError::Data("split produced an empty partition".into()));
    }
    Ok((ds.select(&train_idx), ds.select(&test_idx)))
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub m: usize,
    pub n_per_class: usize,
    pub d_hsi: usize,
    pub d_lidar: usize,
    /// Anchor scale relative to unit HSI feature noise.
    pub class_separation: f64,
    /// Share of the LiDAR anchor projected from the HSI anchor.
    pub correlation: f64,
    /// Intrinsic dimension of the within-class variation (capped at the
    /// modality dimension), mimicking the strong band correlation of
    /// real sensor data.
    pub latent_dim: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(m: usize, n_per_class: usize) -> Self {
        SynthSpec {
            m,
            n_per_class,
            d_hsi: 144,
            d_lidar: 21,
            class_separation: 3.0,
            correlation: 0.5,
            latent_dim: 4,
            seed: 0,
        }
    }
}

/// Class-conditional Gaussian generator. HSI samples scatter around a
/// per-class anchor (scaled by `class_separation`, unit feature noise);
/// LiDAR samples use a partially-shared anchor with doubled noise so
/// LiDAR alone carries less class signal. Output is min-max normalized
/// with balanced one-hot labels.
pub fn synth_generate(spec: &SynthSpec) -> Dataset {
    let mut rng = SplitMix64::new(spec.seed);
    let n = spec.m * spec.n_per_class;

    // Fixed projection of HSI anchors into LiDAR space.
    let scale = 1.0 / (spec.d_hsi as f64).sqrt();
    let proj: Vec<f64> = (0..spec.d_lidar * spec.d_hsi)
        .map(|_| rng.next_normal() * scale)
        .collect();

    // One orthonormal frame per modality (Gram-Schmidt over random
    // draws, random units once the dimension is exhausted): the first
    // `r` directions span the high-variance within-class nuisance
    // subspace, the next `m` hold the class anchors. Anchors of scale
    // `s` sit `2s` apart pairwise relative to the per-coordinate noise,
    // and the class signal lives in low-variance directions the encoder
    // must actively separate from the nuisance it also transmits for
    // reconstruction.
    let frame = |rng: &mut SplitMix64, d: usize, count: usize| -> Vec<Vec<f64>> {
        let mut set: Vec<Vec<f64>> = Vec::with_capacity(count);
        for i in 0..count {
            let mut v: Vec<f64> = (0..d).map(|_| rng.next_normal()).collect();
            if i < d {
                for prev in &set {
                    let dot: f64 = v.iter().zip(prev).map(|(&a, &b)| a * b).sum();
                    let prev_norm2: f64 = prev.iter().map(|x| x * x).sum();
                    for (vj, &pj) in v.iter_mut().zip(prev) {
                        *vj -= dot / prev_norm2 * pj;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.iter_mut().for_each(|x| *x /= norm);
            set.push(v);
        }
        set
    };
    let scaled = |dirs: &[Vec<f64>], factor: f64| -> Vec<Vec<f64>> {
        dirs.iter()
            .map(|v| v.iter().map(|&x| x * factor).collect())
            .collect()
    };

    let lidar_noise = 2.0;
    let ambient = 0.2;
    let r_hsi = spec.latent_dim.clamp(1, spec.d_hsi);
    let r_lidar = spec.latent_dim.clamp(1, spec.d_lidar);
    let anchor_scale = spec.class_separation * core::f64::consts::SQRT_2;

    let frame_hsi = frame(&mut rng, spec.d_hsi, r_hsi + spec.m);
    // Per-coordinate nuisance variance is 1 (lidar_noise^2 for LiDAR).
    let b_hsi = scaled(&frame_hsi[..r_hsi], (spec.d_hsi as f64 / r_hsi as f64).sqrt());
    let hsi_anchor = scaled(&frame_hsi[r_hsi..], anchor_scale);

    let frame_lidar = frame(&mut rng, spec.d_lidar, r_lidar + spec.m);
    let b_lidar = scaled(
        &frame_lidar[..r_lidar],
        lidar_noise * (spec.d_lidar as f64 / r_lidar as f64).sqrt(),
    );
    let own = scaled(&frame_lidar[r_lidar..], anchor_scale);
    let mut lidar_anchor = Vec::with_capacity(spec.m);
    for (a, own) in hsi_anchor.iter().zip(&own) {
        let mut b = vec![0.0; spec.d_lidar];
        for (j, bv) in b.iter_mut().enumerate() {
            let projected: f64 = proj[j * spec.d_hsi..(j + 1) * spec.d_hsi]
                .iter()
                .zip(a)
                .map(|(&p, &av)| p * av)
                .sum();
            *bv = spec.correlation * projected + (1.0 - spec.correlation) * own[j];
        }
        lidar_anchor.push(b);
    }

    let mut hsi = Tensor::zeros(n, spec.d_hsi);
    let mut lidar = Tensor::zeros(n, spec.d_lidar);
    let mut labels = Tensor::zeros(n, spec.m);
    let mut row = 0;
    for class in 0..spec.m {
        for _ in 0..spec.n_per_class {
            let z_hsi: Vec<f64> = (0..r_hsi).map(|_| rng.next_normal()).collect();
            let z_lidar: Vec<f64> = (0..r_lidar).map(|_| rng.next_normal()).collect();
            for (j, &a) in hsi_anchor[class].iter().enumerate() {
                let nuisance: f64 = b_hsi.iter().zip(&z_hsi).map(|(b, &z)| b[j] * z).sum();
                hsi.set(row, j, a + nuisance + ambient * rng.next_normal());
            }
            for (j, &b) in lidar_anchor[class].iter().enumerate() {
                let nuisance: f64 = b_lidar.iter().zip(&z_lidar).map(|(b, &z)| b[j] * z).sum();
                lidar.set(row, j, b + nuisance + ambient * rng.next_normal());
            }
            labels.set(row, class, 1.0);
            row += 1;
        }
    }
    let (hsi, _) = normalize_minmax(&hsi);
    let (lidar, _) = normalize_minmax(&lidar);
    let names = (0..spec.m).map(|c| format!("class{c}")).collect();
    Dataset {
        hsi,
        lidar,
        labels,
        names,
    }
}

/// Epoch-seeded shuffled batches over `n` rows. The final short batch is
/// kept; a size-1 tail is merged into the previous batch (BatchNorm
/// needs N >= 2).
pub fn batch_iter(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed ^ epoch);
    rng.shuffle(&mut idx);
    let mut batches: Vec<Vec<usize>> = idx.chunks(batch_size.max(1)).map(|c| c.to_vec()).collect();
    if batches.len() >= 2 && batches.last().map(|b| b.len()) == Some(1) {
        let tail = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(tail);
    }
    batches
}

/// CSV matrix reader for the converter: one row per line, comma
/// separated, optional single header line.
pub fn read_csv_matrix(path: &Path) -> Result<Tensor> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => rows.push(vals),
            Err(_) if lineno == 0 => continue, // header line
            Err(_) => {
                return Err(AppError::Data(format!(
                    "{}: line {} is not numeric",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(AppError::Data(format!("{}: no data rows", path.display())));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(AppError::Data(format!(
            "{}: ragged rows",
            path.display()
        )));
    }
    let n = rows.len();
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    Tensor::new(n, cols, data).map_err(Into::into)
}

/// Label CSV: one 0-based class index per line. `classes` overrides the
/// inferred class count (max index + 1).
pub fn read_label_csv(path: &Path, classes: Option<usize>) -> Result<Tensor> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut idx = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match line.trim().parse::<usize>() {
            Ok(v) => idx.push(v),
            Err(_) if lineno == 0 => continue,
            Err(_) => {
                return Err(AppError::Data(format!(
                    "{}: line {} is not a class index",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if idx.is_empty() {
        return Err(AppError::Data(format!("{}: no labels", path.display())));
    }
    let m = classes.unwrap_or_else(|| idx.iter().max().unwrap() + 1);
    let mut labels = Tensor::zeros(idx.len(), m);
    for (i, &c) in idx.iter().enumerate() {
        if c >= m {
            return Err(AppError::Data(format!(
                "{}: label {c} out of range for {m} classes",
                path.display()
            )));
        }
        labels.set(i, c, 1.0);
    }
    Ok(labels)
}

/// Converts two CSV feature matrices plus a label CSV into the binary
/// dataset format.
pub fn convert_csv(hsi: &Path, lidar: &Path, labels: &Path, classes: Option<usize>, out: &Path) -> Result<()> {
    let hsi = read_csv_matrix(hsi)?;
    let lidar = read_csv_matrix(lidar)?;
    let labels = read_label_csv(labels, classes)?;
    let ds = Dataset {
        hsi,
        lidar,
        labels,
        names: Vec::new(),
    };
    ds.save(out)
}

/// Appends text to a file created by the caller; used by the metrics
/// writers.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
