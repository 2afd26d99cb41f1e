//! Dataset ingestion and anomaly-scenario assembly: IDX image files, the
//! ECG heartbeat pipeline, a plain CSV loader for tabular data, and the
//! normal/anomalous partitioning that turns a labeled set into a scenario.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// What kind of instances a scenario holds, which decides which model
/// kinds can train on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Image2d,
    Signal1d,
    Tabular,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modality::Image2d => write!(f, "image2d"),
            Modality::Signal1d => write!(f, "signal1d"),
            Modality::Tabular => write!(f, "tabular"),
        }
    }
}

/// A labeled dataset: instance tensor [N, ...] plus one integer label per
/// instance.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub instances: Tensor,
    pub labels: Vec<i64>,
    pub source: String,
    pub modality: Modality,
}

/// One segmented heartbeat: exactly 417 samples in [0,1] (tail padded with
/// 0.50 where the beat was shorter), its beat-class symbol, and the subject
/// it came from.
#[derive(Debug, Clone)]
pub struct HeartbeatRecord {
    pub samples: Vec<f64>,
    pub label: String,
    pub subject: String,
}

/// A ready-to-evaluate anomaly detection task.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub normal: Tensor,
    pub anomalous: Tensor,
    pub modality: Modality,
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(buf: &[u8], pos: usize, path: &str) -> Result<u32> {
    buf.get(pos..pos + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::MalformedData {
            path: path.into(),
            detail: format!("truncated header at byte {}", pos),
        })
}

/// Loads an IDX image/label file pair (big-endian, u8 payload). Pixels are
/// scaled to [0,1] by dividing by 255; instances come out as [N, 1, rows, cols].
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledSet> {
    let ipath = images_path.display().to_string();
    let images = fs::read(images_path).map_err(|e| Error::io(&ipath, e))?;
    let magic = read_be_u32(&images, 0, &ipath)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::MalformedData {
            path: ipath,
            detail: format!("bad magic {:#010x}, expected {:#010x}", magic, IDX_IMAGES_MAGIC),
        });
    }
    let count = read_be_u32(&images, 4, &ipath)? as usize;
    let rows = read_be_u32(&images, 8, &ipath)? as usize;
    let cols = read_be_u32(&images, 12, &ipath)? as usize;
    let expected = 16 + count * rows * cols;
    if images.len() != expected {
        return Err(Error::MalformedData {
            path: ipath,
            detail: format!(
                "payload is {} bytes, header implies {} ({} images of {}x{})",
                images.len() - 16.min(images.len()),
                expected - 16,
                count,
                rows,
                cols
            ),
        });
    }

    let lpath = labels_path.display().to_string();
    let labels_raw = fs::read(labels_path).map_err(|e| Error::io(&lpath, e))?;
    let magic = read_be_u32(&labels_raw, 0, &lpath)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::MalformedData {
            path: lpath,
            detail: format!("bad magic {:#010x}, expected {:#010x}", magic, IDX_LABELS_MAGIC),
        });
    }
    let label_count = read_be_u32(&labels_raw, 4, &lpath)? as usize;
    if labels_raw.len() != 8 + label_count {
        return Err(Error::MalformedData {
            path: lpath,
            detail: format!(
                "payload is {} bytes, header implies {}",
                labels_raw.len() - 8.min(labels_raw.len()),
                label_count
            ),
        });
    }
    if label_count != count {
        return Err(Error::MalformedData {
            path: format!("{} / {}", ipath, lpath),
            detail: format!("{} images but {} labels", count, label_count),
        });
    }

    let data: Vec<f64> = images[16..].iter().map(|&b| b as f64 / 255.0).collect();
    let labels: Vec<i64> = labels_raw[8..].iter().map(|&b| b as i64).collect();
    Ok(LabeledSet {
        instances: Tensor::new(vec![count, 1, rows, cols], data)?,
        labels,
        source: ipath,
        modality: Modality::Image2d,
    })
}

/// Heartbeat length every record is padded or truncated to.
pub const HEARTBEAT_LEN: usize = 417;
/// Pad value: raw midpoint 1024 / 2047 rounds to 0.50 in normalized space.
pub const HEARTBEAT_PAD: f64 = 0.50;
/// Raw ECG values span 0..=2047 (11-bit digitization).
pub const ECG_RAW_MAX: f64 = 2047.0;
/// Source and target sampling rates of the down-sampling step.
pub const ECG_SOURCE_HZ: f64 = 360.0;
pub const ECG_TARGET_HZ: f64 = 187.0;

/// Linear-interpolation resampling from `from_hz` to `to_hz`. Output sample
/// `j` sits at input position `j * from/to`; the output covers exactly the
/// input span.
pub fn resample_linear(signal: &[f64], from_hz: f64, to_hz: f64) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let step = from_hz / to_hz;
    let n_out = ((signal.len() - 1) as f64 / step).floor() as usize + 1;
    let mut out = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let x = j as f64 * step;
        let i = x.floor() as usize;
        let frac = x - i as f64;
        let v = if i + 1 < signal.len() {
            signal[i] * (1.0 - frac) + signal[i + 1] * frac
        } else {
            signal[i]
        };
        out.push(v);
    }
    out
}

/// Cuts a raw 360 Hz ECG signal into per-beat records.
///
/// The signal is resampled to 187 Hz, the annotated peak indices are mapped
/// through the same time rescale, and beats are cut at the midpoints between
/// consecutive peaks (the first beat starts at the signal start, the last
/// ends at the signal end). Each beat is truncated at the end if longer
/// than 417 samples, normalized by 1/2047, and then padded to 417 with 0.50.
pub fn segment_heartbeats(
    signal: &[f64],
    peaks: &[usize],
    labels: &[String],
    subject: &str,
) -> Result<Vec<HeartbeatRecord>> {
    if peaks.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} peaks but {} labels",
            peaks.len(),
            labels.len()
        )));
    }
    if peaks.is_empty() {
        return Ok(Vec::new());
    }
    for w in peaks.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(format!(
                "peak indices must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if *peaks.last().unwrap() >= signal.len() {
        return Err(Error::InvalidArgument(format!(
            "peak index {} beyond signal length {}",
            peaks.last().unwrap(),
            signal.len()
        )));
    }

    let resampled = resample_linear(signal, ECG_SOURCE_HZ, ECG_TARGET_HZ);
    let scale = ECG_TARGET_HZ / ECG_SOURCE_HZ;
    let last = resampled.len().saturating_sub(1);
    let mapped: Vec<usize> = peaks
        .iter()
        .map(|&p| (((p as f64) * scale).round() as usize).min(last))
        .collect();

    // beat k spans [border_k, border_{k+1}); interior borders are midpoints
    // between consecutive mapped peaks
    let mut borders = Vec::with_capacity(peaks.len() + 1);
    borders.push(0usize);
    for w in mapped.windows(2) {
        borders.push((w[0] + w[1]) / 2);
    }
    borders.push(resampled.len());

    let mut records = Vec::with_capacity(peaks.len());
    for (k, label) in labels.iter().enumerate() {
        let beat = &resampled[borders[k]..borders[k + 1]];
        let take = beat.len().min(HEARTBEAT_LEN);
        let mut samples: Vec<f64> = beat[..take].iter().map(|v| v / ECG_RAW_MAX).collect();
        samples.resize(HEARTBEAT_LEN, HEARTBEAT_PAD);
        records.push(HeartbeatRecord {
            samples,
            label: label.clone(),
            subject: subject.to_string(),
        });
    }
    Ok(records)
}

/// Reads the ECG sidecar pair: a samples file (one float per line) and a
/// peaks file (`peak_index,label` per line). Blank lines and `#` comments
/// are skipped.
pub fn load_ecg_sidecar(
    signal_path: &Path,
    peaks_path: &Path,
) -> Result<(Vec<f64>, Vec<usize>, Vec<String>)> {
    let spath = signal_path.display().to_string();
    let text = fs::read_to_string(signal_path).map_err(|e| Error::io(&spath, e))?;
    let mut signal = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::MalformedData {
            path: spath.clone(),
            detail: format!("line {}: not a number: {:?}", ln + 1, line),
        })?;
        signal.push(v);
    }

    let ppath = peaks_path.display().to_string();
    let text = fs::read_to_string(peaks_path).map_err(|e| Error::io(&ppath, e))?;
    let mut peaks = Vec::new();
    let mut labels = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (idx, label) = line.split_once(',').ok_or_else(|| Error::MalformedData {
            path: ppath.clone(),
            detail: format!("line {}: expected peak_index,label", ln + 1),
        })?;
        let idx: usize = idx.trim().parse().map_err(|_| Error::MalformedData {
            path: ppath.clone(),
            detail: format!("line {}: bad peak index {:?}", ln + 1, idx),
        })?;
        peaks.push(idx);
        labels.push(label.trim().to_string());
    }
    Ok((signal, peaks, labels))
}

/// Loads a tabular CSV: integer label in the first column, features after.
/// Header lines and `#` comments are skipped.
pub fn load_csv_dataset(path: &Path) -> Result<LabeledSet> {
    let spath = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(&spath, e))?;
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let label_field = fields.next().unwrap_or("").trim();
        let label: i64 = match label_field.parse() {
            Ok(v) => v,
            Err(_) if ln == 0 => continue, // header row
            Err(_) => {
                return Err(Error::MalformedData {
                    path: spath,
                    detail: format!("line {}: bad label {:?}", ln + 1, label_field),
                })
            }
        };
        let row: Vec<f64> = fields
            .map(|f| {
                f.trim().parse().map_err(|_| Error::MalformedData {
                    path: spath.clone(),
                    detail: format!("line {}: bad value {:?}", ln + 1, f),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::MalformedData {
                    path: spath,
                    detail: format!("line {}: {} values, expected {}", ln + 1, row.len(), w),
                });
            }
        } else {
            if row.is_empty() {
                return Err(Error::MalformedData {
                    path: spath,
                    detail: format!("line {}: no feature values", ln + 1),
                });
            }
            width = Some(row.len());
        }
        labels.push(label);
        rows.push(row);
    }
    let width = width.ok_or_else(|| Error::EmptyDataset(spath.clone()))?;
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    Ok(LabeledSet {
        instances: Tensor::stack(&refs, &[width])?,
        labels,
        source: spath,
        modality: Modality::Tabular,
    })
}

fn scenario_name(normal: &str, anomalies: &[String]) -> String {
    format!("{}-vs-{}", normal, anomalies.join("+"))
}

/// Partitions a labeled set into one normal class and one or more anomalous
/// classes; every other label is discarded.
pub fn build_scenario(set: &LabeledSet, normal: i64, anomalies: &[i64]) -> Result<Scenario> {
    if anomalies.contains(&normal) {
        return Err(Error::InvalidArgument(format!(
            "label {} cannot be both normal and anomalous",
            normal
        )));
    }
    for label in std::iter::once(&normal).chain(anomalies) {
        if !set.labels.contains(label) {
            return Err(Error::UnknownLabel {
                label: label.to_string(),
                source: set.source.clone(),
            });
        }
    }
    let normal_idx: Vec<usize> = set
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == normal)
        .map(|(i, _)| i)
        .collect();
    let anom_idx: Vec<usize> = set
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| anomalies.contains(l))
        .map(|(i, _)| i)
        .collect();
    if normal_idx.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no instances of normal label {} in {}",
            normal, set.source
        )));
    }
    let names: Vec<String> = anomalies.iter().map(|a| a.to_string()).collect();
    Ok(Scenario {
        name: scenario_name(&normal.to_string(), &names),
        normal: set.instances.gather0(&normal_idx),
        anomalous: set.instances.gather0(&anom_idx),
        modality: set.modality,
    })
}

/// Scenario construction over heartbeat records; instances become [N, 1, 417].
pub fn build_scenario_from_beats(
    beats: &[HeartbeatRecord],
    normal: &str,
    anomalies: &[String],
) -> Result<Scenario> {
    if anomalies.iter().any(|a| a == normal) {
        return Err(Error::InvalidArgument(format!(
            "label {:?} cannot be both normal and anomalous",
            normal
        )));
    }
    let present = |l: &str| beats.iter().any(|b| b.label == l);
    for label in std::iter::once(normal).chain(anomalies.iter().map(|s| s.as_str())) {
        if !present(label) {
            return Err(Error::UnknownLabel {
                label: label.to_string(),
                source: "heartbeat records".into(),
            });
        }
    }
    let collect = |keep: &dyn Fn(&str) -> bool| -> Result<Tensor> {
        let rows: Vec<&[f64]> = beats
            .iter()
            .filter(|b| keep(&b.label))
            .map(|b| b.samples.as_slice())
            .collect();
        let n = rows.len();
        Tensor::stack(&rows, &[HEARTBEAT_LEN]).and_then(|t| t.reshape(vec![n, 1, HEARTBEAT_LEN]))
    };
    let normal_t = collect(&|l| l == normal)?;
    let anom_t = collect(&|l| anomalies.iter().any(|a| a == l))?;
    Ok(Scenario {
        name: scenario_name(normal, anomalies),
        normal: normal_t,
        anomalous: anom_t,
        modality: Modality::Signal1d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    /// Builds an IDX pair byte-by-byte, independent of the loader.
    fn write_idx_fixture(
        dir: &Path,
        pixels: &[Vec<u8>],
        labels: &[u8],
        rows: usize,
        cols: usize,
    ) -> (std::path::PathBuf, std::path::PathBuf) {
        let ipath = dir.join("images.idx3");
        let lpath = dir.join("labels.idx1");
        let mut img = Vec::new();
        img.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        img.extend_from_slice(&(pixels.len() as u32).to_be_bytes());
        img.extend_from_slice(&(rows as u32).to_be_bytes());
        img.extend_from_slice(&(cols as u32).to_be_bytes());
        for p in pixels {
            img.extend_from_slice(p);
        }
        fs::File::create(&ipath).unwrap().write_all(&img).unwrap();
        let mut lab = Vec::new();
        lab.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        lab.extend_from_slice(labels);
        fs::File::create(&lpath).unwrap().write_all(&lab).unwrap();
        (ipath, lpath)
    }

    #[test]
    fn idx_fixture_round_trips_known_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let (ipath, lpath) = write_idx_fixture(
            dir.path(),
            &[vec![0, 255, 128, 64], vec![255, 255, 0, 0]],
            &[3, 7],
            2,
            2,
        );
        let set = load_idx(&ipath, &lpath).unwrap();
        assert_eq!(set.instances.shape(), &[2, 1, 2, 2]);
        assert_eq!(set.labels, vec![3, 7]);
        let d = set.instances.data();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 1.0);
        assert!((d[2] - 128.0 / 255.0).abs() < 1e-15);
        assert_eq!(d[4], 1.0);
        assert_eq!(d[7], 0.0);
        assert!(d.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn idx_count_mismatch_names_both_counts() {
        let dir = tempfile::tempdir().unwrap();
        let (ipath, lpath) =
            write_idx_fixture(dir.path(), &[vec![0, 0, 0, 0], vec![1, 1, 1, 1]], &[5], 2, 2);
        match load_idx(&ipath, &lpath) {
            Err(Error::MalformedData { detail, .. }) => {
                assert!(detail.contains('2') && detail.contains('1'), "{}", detail);
            }
            other => panic!("expected MalformedData, got {:?}", other.map(|s| s.labels)),
        }
    }

    #[test]
    fn idx_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let (ipath, lpath) = write_idx_fixture(dir.path(), &[vec![0, 0, 0, 0]], &[1], 2, 2);
        // corrupt magic
        let mut bytes = fs::read(&ipath).unwrap();
        bytes[3] = 0x99;
        fs::write(&ipath, &bytes).unwrap();
        assert!(matches!(load_idx(&ipath, &lpath), Err(Error::MalformedData { .. })));
        // truncate payload
        bytes[3] = 0x03;
        bytes.pop();
        fs::write(&ipath, &bytes).unwrap();
        assert!(matches!(load_idx(&ipath, &lpath), Err(Error::MalformedData { .. })));
    }

    #[test]
    fn resample_preserves_constant_and_ramp() {
        let constant = vec![5.0; 360];
        let out = resample_linear(&constant, 360.0, 187.0);
        assert!(out.iter().all(|&v| (v - 5.0).abs() < 1e-12));

        // a ramp stays a ramp under linear interpolation
        let ramp: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let out = resample_linear(&ramp, 360.0, 187.0);
        for (j, &v) in out.iter().enumerate() {
            let expected = j as f64 * 360.0 / 187.0;
            assert!((v - expected).abs() < 1e-9, "sample {}: {} vs {}", j, v, expected);
        }
    }

    #[test]
    fn constant_signal_beats_have_padded_tails() {
        let signal = vec![1024.0; 600];
        let peaks = vec![100, 300, 500];
        let labels: Vec<String> = vec!["N".into(), "N".into(), "V".into()];
        let records = segment_heartbeats(&signal, &peaks, &labels, "rec1").unwrap();
        assert_eq!(records.len(), 3);
        let body = 1024.0 / 2047.0;
        for r in &records {
            assert_eq!(r.samples.len(), HEARTBEAT_LEN);
            // every beat here is shorter than 417, so a padded tail exists
            let tail_start = r.samples.iter().rposition(|&v| v != HEARTBEAT_PAD).unwrap() + 1;
            assert!(tail_start < HEARTBEAT_LEN);
            for &v in &r.samples[..tail_start] {
                assert!((v - body).abs() < 1e-12);
            }
            for &v in &r.samples[tail_start..] {
                assert_eq!(v, HEARTBEAT_PAD);
            }
        }
        assert_eq!(records[2].label, "V");
        assert_eq!(records[0].subject, "rec1");
    }

    #[test]
    fn raw_value_endpoints_normalize_to_unit_range() {
        let signal = vec![2047.0, 2047.0, 0.0, 0.0];
        let records = segment_heartbeats(&signal, &[1], &["N".into()], "r").unwrap();
        assert_eq!(records[0].samples[0], 1.0);
    }

    #[test]
    fn long_beats_are_truncated_at_the_end() {
        // one beat spanning the whole signal: resampled length exceeds 417
        let n = 1000usize;
        let signal: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let records = segment_heartbeats(&signal, &[500], &["N".into()], "r").unwrap();
        assert_eq!(records[0].samples.len(), HEARTBEAT_LEN);
        // values are the *first* 417 resampled samples, so strictly increasing
        for w in records[0].samples.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn beat_count_equals_peak_count_and_errors_are_checked() {
        let signal = vec![0.0; 400];
        assert!(segment_heartbeats(&signal, &[10, 10], &["a".into(), "b".into()], "r").is_err());
        assert!(segment_heartbeats(&signal, &[10, 5], &["a".into(), "b".into()], "r").is_err());
        assert!(segment_heartbeats(&signal, &[10], &[], "r").is_err());
        let recs =
            segment_heartbeats(&signal, &[50, 150, 300], &["a".into(), "b".into(), "c".into()], "r")
                .unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs
            .iter()
            .all(|r| r.samples.iter().all(|&v| (0.0..=1.0).contains(&v))));
    }

    fn toy_set() -> LabeledSet {
        let instances = Tensor::new(
            vec![6, 2],
            vec![0., 0., 1., 1., 2., 2., 3., 3., 4., 4., 5., 5.],
        )
        .unwrap();
        LabeledSet {
            instances,
            labels: vec![0, 1, 0, 2, 1, 0],
            source: "toy".into(),
            modality: Modality::Tabular,
        }
    }

    #[test]
    fn scenario_partitions_are_disjoint_and_complete() {
        let set = toy_set();
        let sc = build_scenario(&set, 0, &[1]).unwrap();
        assert_eq!(sc.name, "0-vs-1");
        assert_eq!(sc.normal.shape(), &[3, 2]);
        assert_eq!(sc.anomalous.shape(), &[2, 2]);
        // label-2 instance was discarded
        assert_eq!(sc.normal.shape()[0] + sc.anomalous.shape()[0], 5);
    }

    #[test]
    fn one_vs_all_uses_the_union() {
        let set = toy_set();
        let sc = build_scenario(&set, 0, &[1, 2]).unwrap();
        assert_eq!(sc.anomalous.shape(), &[3, 2]);
    }

    #[test]
    fn missing_label_is_an_error() {
        let set = toy_set();
        assert!(matches!(
            build_scenario(&set, 0, &[9]),
            Err(Error::UnknownLabel { .. })
        ));
        assert!(matches!(
            build_scenario(&set, 9, &[1]),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn beat_scenario_shapes() {
        let mk = |label: &str| HeartbeatRecord {
            samples: vec![0.5; HEARTBEAT_LEN],
            label: label.into(),
            subject: "s".into(),
        };
        let beats = vec![mk("N"), mk("N"), mk("L"), mk("V")];
        let sc = build_scenario_from_beats(&beats, "N", &["L".into(), "V".into()]).unwrap();
        assert_eq!(sc.normal.shape(), &[2, 1, HEARTBEAT_LEN]);
        assert_eq!(sc.anomalous.shape(), &[2, 1, HEARTBEAT_LEN]);
        assert_eq!(sc.modality, Modality::Signal1d);
    }

    #[test]
    fn csv_loader_reads_labels_and_features() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        fs::write(&path, "label,x,y\n0,1.5,2.5\n1,-1.0,0.25\n0,0,0\n").unwrap();
        let set = load_csv_dataset(&path).unwrap();
        assert_eq!(set.labels, vec![0, 1, 0]);
        assert_eq!(set.instances.shape(), &[3, 2]);
        assert_eq!(set.instances.index0(1), &[-1.0, 0.25]);
    }
}
