//! On-disk layout for fitted models and gesture databases.
//!
//! A directory holds `manifest.json` plus raw little-endian arrays: `f32`
//! for real-valued matrices and `u32` for codes and tokens. Real values are
//! kept at single precision in memory too, so loading and saving again
//! reproduces every byte.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codebook::{CodeSequence, Codebook};
use crate::error::{Error, Result};
use crate::matcher::{ClipRecord, DbParams, GestureDatabase, Models, WordTiming};
use crate::motion::{FeatureNorm, Skeleton};
use crate::phase::PcaBasis;

pub const DB_FORMAT: &str = "gesture-db/1";
pub const MODEL_FORMAT: &str = "gesture-model/1";
const MANIFEST: &str = "manifest.json";
const CODEBOOK_FILE: &str = "codebook.f32";

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn write_f32(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn write_u32(path: &Path, values: impl IntoIterator<Item = u32>) -> Result<()> {
    let bytes: Vec<u8> = values.into_iter().flat_map(u32::to_le_bytes).collect();
    fs::write(path, bytes)?;
    Ok(())
}

fn read_words(path: &Path, expected: Option<usize>) -> Result<Vec<[u8; 4]>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::format(path_str(path), "length is not a multiple of 4 bytes"));
    }
    let n = bytes.len() / 4;
    if let Some(e) = expected {
        if n != e {
            return Err(Error::format(
                path_str(path),
                format!("expected {e} values, found {n}"),
            ));
        }
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect())
}

/// Reads an `f32` array, optionally checking its length.
pub fn read_f32(path: &Path, expected: Option<usize>) -> Result<Vec<f64>> {
    let out: Vec<f64> = read_words(path, expected)?
        .into_iter()
        .map(|w| f32::from_le_bytes(w) as f64)
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(path_str(path), "non-finite value"));
    }
    Ok(out)
}

pub fn read_u32(path: &Path, expected: Option<usize>) -> Result<Vec<u32>> {
    Ok(read_words(path, expected)?
        .into_iter()
        .map(u32::from_le_bytes)
        .collect())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path_str(path), e.to_string()))
}

fn check_format(path: &Path, found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::format(
            path_str(path),
            format!("format tag {found:?}, expected {want:?}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CodebookEntry {
    file: String,
    code_count: usize,
    code_dim: usize,
    d: usize,
    norm: FeatureNorm,
    skeleton: Skeleton,
}

impl CodebookEntry {
    fn of(cb: &Codebook) -> Self {
        CodebookEntry {
            file: CODEBOOK_FILE.into(),
            code_count: cb.code_count,
            code_dim: cb.code_dim(),
            d: cb.d,
            norm: cb.norm.clone(),
            skeleton: (*cb.skeleton).clone(),
        }
    }

    fn load(self, dir: &Path) -> Result<Codebook> {
        self.skeleton.validate()?;
        let centers = read_f32(&dir.join(&self.file), Some(self.code_count * self.code_dim))?;
        let cb = Codebook::new(centers, self.d, self.norm, Arc::new(self.skeleton))?;
        if cb.code_dim() != self.code_dim {
            return Err(Error::format(path_str(&dir.join(&self.file)), "code dimension disagrees"));
        }
        Ok(cb)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelManifest {
    format: String,
    joints: Vec<String>,
    codebook: CodebookEntry,
    pca: PcaBasis,
}

/// Writes a codebook and phase projection to `dir`.
pub fn save_models(models: &Models, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_f32(&dir.join(CODEBOOK_FILE), &models.codebook.centers)?;
    write_json(
        &dir.join(MANIFEST),
        &ModelManifest {
            format: MODEL_FORMAT.into(),
            joints: models.joints.clone(),
            codebook: CodebookEntry::of(&models.codebook),
            pca: models.pca.clone(),
        },
    )
}

pub fn load_models(dir: &Path) -> Result<Models> {
    let path = dir.join(MANIFEST);
    let m: ModelManifest = read_json(&path)?;
    check_format(&path, &m.format, MODEL_FORMAT)?;
    Ok(Models {
        codebook: m.codebook.load(dir)?,
        pca: m.pca,
        joints: m.joints,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ClipFiles {
    codes: String,
    tokens: String,
    token_offsets: String,
    text: String,
    phase: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClipEntry {
    id: String,
    steps: usize,
    tokens: usize,
    files: ClipFiles,
    word_timings: Vec<WordTiming>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DbManifest {
    format: String,
    params: DbParams,
    codebook: CodebookEntry,
    pca: PcaBasis,
    code_frequency: Vec<usize>,
    clips: Vec<ClipEntry>,
}

/// Writes `db` to `dir`, creating it if needed.
pub fn save_database(db: &GestureDatabase, dir: &Path) -> Result<()> {
    let clip_dir = dir.join("clips");
    fs::create_dir_all(&clip_dir)?;
    write_f32(&dir.join(CODEBOOK_FILE), &db.codebook.centers)?;
    let mut entries = Vec::with_capacity(db.clips.len());
    for (i, clip) in db.clips.iter().enumerate() {
        let stem = format!("clips/{i:05}");
        let files = ClipFiles {
            codes: format!("{stem}.codes.u32"),
            tokens: format!("{stem}.tokens.u32"),
            token_offsets: format!("{stem}.offsets.u32"),
            text: format!("{stem}.text.f32"),
            phase: format!("{stem}.phase.f32"),
        };
        write_u32(&dir.join(&files.codes), clip.codes.codes.iter().map(|&c| c as u32))?;
        write_u32(&dir.join(&files.tokens), clip.audio_windows.iter().flatten().copied())?;
        let mut offsets = vec![0u32];
        for w in &clip.audio_windows {
            offsets.push(offsets[offsets.len() - 1] + w.len() as u32);
        }
        write_u32(&dir.join(&files.token_offsets), offsets)?;
        write_f32(&dir.join(&files.text), &clip.text_windows)?;
        write_f32(&dir.join(&files.phase), &clip.phase_windows)?;
        entries.push(ClipEntry {
            id: clip.clip_id.clone(),
            steps: clip.steps(),
            tokens: clip.audio_windows.iter().map(Vec::len).sum(),
            files,
            word_timings: clip.word_timings.clone(),
        });
    }
    write_json(
        &dir.join(MANIFEST),
        &DbManifest {
            format: DB_FORMAT.into(),
            params: db.params.clone(),
            codebook: CodebookEntry::of(&db.codebook),
            pca: db.pca.clone(),
            code_frequency: db.code_frequency.clone(),
            clips: entries,
        },
    )
}

pub fn load_database(dir: &Path) -> Result<GestureDatabase> {
    let path = dir.join(MANIFEST);
    let m: DbManifest = read_json(&path)?;
    check_format(&path, &m.format, DB_FORMAT)?;
    let codebook = m.codebook.load(dir)?;
    let p = &m.params;
    let mut clips = Vec::with_capacity(m.clips.len());
    for e in m.clips {
        let codes = read_u32(&dir.join(&e.files.codes), Some(e.steps))?;
        let tokens = read_u32(&dir.join(&e.files.tokens), Some(e.tokens))?;
        let offsets_path = dir.join(&e.files.token_offsets);
        let offsets = read_u32(&offsets_path, Some(e.steps + 1))?;
        let mut audio_windows = Vec::with_capacity(e.steps);
        for w in offsets.windows(2) {
            let (a, b) = (w[0] as usize, w[1] as usize);
            if a > b || b > tokens.len() {
                return Err(Error::format(path_str(&offsets_path), "token offsets out of order"));
            }
            audio_windows.push(tokens[a..b].to_vec());
        }
        clips.push(ClipRecord {
            clip_id: e.id,
            codes: CodeSequence {
                codes: codes.into_iter().map(|c| c as usize).collect(),
                d: p.d,
                source_fps: p.fps,
            },
            audio_windows,
            text_windows: read_f32(&dir.join(&e.files.text), Some(e.steps * p.text_dim))?,
            phase_windows: read_f32(&dir.join(&e.files.phase), Some(e.steps * p.phase_len()))?,
            word_timings: e.word_timings,
        });
    }
    let db = GestureDatabase::new(m.params, codebook, m.pca, clips)?;
    if db.code_frequency != m.code_frequency {
        return Err(Error::format(path_str(&path), "code frequency table disagrees with clips"));
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::test_support::chain;
    use crate::seqsim::AUDIO_VOCAB;

    fn toy() -> GestureDatabase {
        let norm = FeatureNorm {
            mean: vec![0.25; 9],
            std: vec![2.0; 9],
            clamped: vec![false; 9],
        };
        let centers: Vec<f64> = (0..27).map(|i| (i as f32 * 0.1) as f64).collect();
        let cb = Codebook::new(centers, 1, norm.clone(), chain(1)).unwrap();
        let pca = PcaBasis {
            norm,
            components: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            eigenvalues: vec![1.5],
            channels: 1,
        };
        let params = DbParams {
            fps: 30.0,
            d: 1,
            window_seconds: 0.5,
            n_phase: 2,
            n_stride: 1,
            phase_window: 3,
            channels: 1,
            text_dim: 2,
            token_rate: 50.0,
            vocab: AUDIO_VOCAB,
            joints: vec!["j0".into()],
        };
        let clip = ClipRecord {
            clip_id: "s:0".into(),
            codes: CodeSequence {
                codes: vec![0, 2, 2],
                d: 1,
                source_fps: 30.0,
            },
            audio_windows: vec![vec![1, 2], vec![], vec![102_399]],
            text_windows: vec![0.5, -1.25, 0.0, 3.0, 1.0, 1.0],
            phase_windows: (0..12).map(|i| (i as f32 / 7.0) as f64).collect(),
            word_timings: vec![WordTiming {
                word: "hi".into(),
                start: 0.0,
                end: 0.1,
            }],
        };
        GestureDatabase::new(params, cb, pca, vec![clip]).unwrap()
    }

    fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    let rel = p.strip_prefix(dir).unwrap().display().to_string();
                    out.push((rel, fs::read(&p).unwrap()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn database_round_trip_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let db = toy();
        save_database(&db, a.path()).unwrap();
        let loaded = load_database(a.path()).unwrap();
        assert_eq!(loaded, db);
        save_database(&loaded, b.path()).unwrap();
        assert_eq!(snapshot(a.path()), snapshot(b.path()));
    }

    #[test]
    fn truncated_array_is_reported() {
        let a = tempfile::tempdir().unwrap();
        save_database(&toy(), a.path()).unwrap();
        let f = a.path().join("clips/00000.text.f32");
        let bytes = fs::read(&f).unwrap();
        fs::write(&f, &bytes[..bytes.len() - 4]).unwrap();
        let err = load_database(a.path()).unwrap_err();
        assert_eq!(err.kind(), "format");
        assert!(err.to_string().contains("00000.text.f32"));
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let a = tempfile::tempdir().unwrap();
        let db = toy();
        save_models(
            &Models {
                codebook: db.codebook.clone(),
                pca: db.pca.clone(),
                joints: vec!["j0".into()],
            },
            a.path(),
        )
        .unwrap();
        assert!(load_models(a.path()).is_ok());
        assert!(matches!(load_database(a.path()), Err(Error::Format { .. })));
    }
}
