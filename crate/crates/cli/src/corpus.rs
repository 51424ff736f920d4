//! On-disk speech-gesture corpus: a `corpus.json` manifest plus one set of
//! files per session.
//!
//! ```text
//! corpus.json            format tag, rates, vocabulary, embedding dim, sessions
//! <id>.bvh               motion
//! <id>.tokens.u32        audio tokens, little-endian u32
//! <id>.text.f32          sentence embeddings, little-endian f32, rows × text_dim
//! <id>.words.csv         word,start,end (seconds), with header
//! <id>.beats.txt         audio beat times, one per line (optional)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use gesture_core::matcher::{SessionInput, WordTiming};
use gesture_core::motion::{emit_bvh, parse_bvh_file};
use gesture_core::seqsim::{EmbeddingSequence, TokenSequence, AUDIO_VOCAB};
use gesture_core::store::{read_f32, read_u32, write_f32, write_u32};
use gesture_core::Error;
use serde::{Deserialize, Serialize};

use crate::synth::SynthSession;

pub const CORPUS_FORMAT: &str = "gesture-corpus/1";
pub const MANIFEST: &str = "corpus.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFiles {
    pub id: String,
    pub motion: String,
    pub tokens: String,
    pub text: String,
    pub words: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beats: Option<String>,
}

impl SessionFiles {
    pub fn standard(id: &str, beats: bool) -> Self {
        SessionFiles {
            id: id.to_string(),
            motion: format!("{id}.bvh"),
            tokens: format!("{id}.tokens.u32"),
            text: format!("{id}.text.f32"),
            words: format!("{id}.words.csv"),
            beats: beats.then(|| format!("{id}.beats.txt")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub format: String,
    /// Audio tokens per second.
    pub token_rate: f64,
    pub vocab: u32,
    pub text_dim: usize,
    /// Embedding rows per second.
    pub text_rate: f64,
    pub sessions: Vec<SessionFiles>,
}

fn named(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// Re-labels any error with the file it came from, keeping format errors
/// that already carry a path.
fn at(path: &Path) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Format { .. } => e,
        other => named(path, other),
    }
}

pub fn load_manifest(dir: &Path) -> Result<CorpusManifest, Error> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| named(&path, e))?;
    let m: CorpusManifest = serde_json::from_str(&text).map_err(|e| named(&path, e))?;
    if m.format != CORPUS_FORMAT {
        return Err(named(&path, format!("format tag {:?}, expected {CORPUS_FORMAT:?}", m.format)));
    }
    if m.sessions.is_empty() {
        return Err(named(&path, "no sessions listed"));
    }
    Ok(m)
}

pub fn read_tokens(path: &Path, rate: f64, vocab: u32) -> Result<TokenSequence, Error> {
    let tokens = read_u32(path, None).map_err(at(path))?;
    TokenSequence::new(tokens, rate, vocab).map_err(at(path))
}

pub fn read_text(path: &Path, dim: usize, rate: f64) -> Result<EmbeddingSequence, Error> {
    let v = read_f32(path, None).map_err(at(path))?;
    EmbeddingSequence::new(v, dim, rate).map_err(at(path))
}

pub fn read_words(path: &Path) -> Result<Vec<WordTiming>, Error> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| named(path, e))?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let w: WordTiming = row.map_err(|e| named(path, e))?;
        out.push(w);
    }
    Ok(out)
}

pub fn write_words(path: &Path, words: &[WordTiming]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(|e| named(path, e))?;
    for t in words {
        w.serialize(t).map_err(|e| named(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Beat times, one number per line; blank lines are skipped.
pub fn read_beats(path: &Path) -> Result<Vec<f64>, Error> {
    let text = fs::read_to_string(path).map_err(|e| named(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| named(path, format!("line {}: not a number: {line:?}", i + 1)))?;
        if !v.is_finite() {
            return Err(named(path, format!("line {}: non-finite beat", i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_beats(path: &Path, beats: &[f64]) -> Result<(), Error> {
    let text: String = beats.iter().map(|b| format!("{b}\n")).collect();
    fs::write(path, text)?;
    Ok(())
}

/// A corpus opened from disk.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dir: PathBuf,
    pub manifest: CorpusManifest,
}

impl Corpus {
    pub fn open(dir: &Path) -> Result<Self, Error> {
        Ok(Corpus {
            dir: dir.to_path_buf(),
            manifest: load_manifest(dir)?,
        })
    }

    pub fn find(&self, id: &str) -> Result<&SessionFiles, Error> {
        self.manifest
            .sessions
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("session {id:?} not in corpus")))
    }

    pub fn tokens(&self, s: &SessionFiles) -> Result<TokenSequence, Error> {
        read_tokens(&self.dir.join(&s.tokens), self.manifest.token_rate, self.manifest.vocab)
    }

    pub fn text(&self, s: &SessionFiles) -> Result<EmbeddingSequence, Error> {
        read_text(&self.dir.join(&s.text), self.manifest.text_dim, self.manifest.text_rate)
    }

    pub fn session(&self, s: &SessionFiles) -> Result<SessionInput, Error> {
        let motion_path = self.dir.join(&s.motion);
        Ok(SessionInput {
            id: s.id.clone(),
            motion: parse_bvh_file(&motion_path).map_err(at(&motion_path))?,
            tokens: self.tokens(s)?,
            text: self.text(s)?,
            timings: read_words(&self.dir.join(&s.words))?,
        })
    }

    pub fn sessions(&self) -> Result<Vec<SessionInput>, Error> {
        self.manifest.sessions.iter().map(|s| self.session(s)).collect()
    }
}

/// Writes synthetic sessions as a corpus under `dir`.
pub fn write_synth_corpus(
    dir: &Path,
    sessions: &[SynthSession],
    token_rate: f64,
    text_dim: usize,
    text_rate: f64,
) -> Result<CorpusManifest, Error> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(sessions.len());
    for s in sessions {
        let f = SessionFiles::standard(&s.id, true);
        fs::write(dir.join(&f.motion), emit_bvh(&s.motion))?;
        write_u32(&dir.join(&f.tokens), s.tokens.iter().copied())?;
        write_f32(&dir.join(&f.text), &s.text)?;
        write_words(&dir.join(&f.words), &s.timings)?;
        if let Some(b) = &f.beats {
            write_beats(&dir.join(b), &s.beats)?;
        }
        files.push(f);
    }
    let manifest = CorpusManifest {
        format: CORPUS_FORMAT.to_string(),
        token_rate,
        vocab: AUDIO_VOCAB,
        text_dim,
        text_rate,
        sessions: files,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn synth_corpus_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            sessions: 2,
            seconds: 3.0,
            ..SynthSpec::default()
        };
        let sessions = generate(&spec);
        let rate = spec.fps / spec.d as f64;
        write_synth_corpus(dir.path(), &sessions, spec.token_rate, spec.text_dim, rate).unwrap();
        let c = Corpus::open(dir.path()).unwrap();
        let back = c.sessions().unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].tokens.tokens, sessions[0].tokens);
        assert_eq!(back[1].timings.len(), sessions[1].timings.len());
        assert_eq!(back[0].motion.frames(), sessions[0].motion.frames());
        let beats = read_beats(&dir.path().join("s001.beats.txt")).unwrap();
        assert_eq!(beats, sessions[1].beats);
    }

    #[test]
    fn bad_files_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.tokens.u32");
        fs::write(&p, [1u8, 2, 3]).unwrap();
        let e = read_tokens(&p, 50.0, 10).unwrap_err();
        assert!(e.to_string().contains("x.tokens.u32"), "{e}");
        fs::write(&p, 11u32.to_le_bytes()).unwrap();
        let e = read_tokens(&p, 50.0, 10).unwrap_err();
        assert!(e.to_string().contains("x.tokens.u32"), "{e}");
        let b = dir.path().join("b.txt");
        fs::write(&b, "0.5\nabc\n").unwrap();
        assert!(read_beats(&b).unwrap_err().to_string().contains("line 2"));
        assert!(load_manifest(dir.path()).unwrap_err().to_string().contains(MANIFEST));
    }
}
