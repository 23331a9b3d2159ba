//! Binary checkpoint container.
//!
//! Layout (little-endian): magic `RMAV`, `u32` format version, `u32` section
//! count, then one table entry per section (`[u8; 4]` tag, `u64` offset,
//! `u64` length, `u32` CRC-32 of the payload), then the payloads. Sections:
//! `CONF` (config JSON), `SPLT` (splats), `RECT` (rectifier weights), `OPTM`
//! (Adam moments) and `SCHD` (iteration, RNG position, gradient statistics).

use std::io::Write;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::{AdamState, Avatar, GradientStats, Optimizer, TrainConfig, TrainState};
use crate::gauss::{GaussianSplat, Quaternion, Vec3};
use crate::rectifier::RectifierParams;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"RMAV";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("not a checkpoint: bad magic bytes")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint is missing section {0}")]
    MissingSection(String),
    #[error("checksum mismatch in section {0}")]
    Checksum(String),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

fn malformed(m: impl Into<String>) -> CheckpointError {
    CheckpointError::Malformed(m.into())
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
    fn adam(&mut self, s: &AdamState) {
        self.u64(s.step);
        self.u64(s.m.len() as u64);
        self.f64s(&s.m);
        self.f64s(&s.v);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], section: &'static str) -> Self {
        Self { buf, pos: 0, section }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| malformed(format!("section {} ends early", self.section)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize, CheckpointError> {
        let n = self.u64()?;
        if n > (self.buf.len() - self.pos) as u64 {
            return Err(malformed(format!("implausible length {n} in section {}", self.section)));
        }
        Ok(n as usize)
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn vec3(&mut self) -> Result<Vec3, CheckpointError> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
    fn adam(&mut self) -> Result<AdamState, CheckpointError> {
        let step = self.u64()?;
        let n = self.len()?;
        Ok(AdamState { step, m: self.f64s(n)?, v: self.f64s(n)? })
    }
    fn finish(&self) -> Result<(), CheckpointError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(malformed(format!("trailing bytes in section {}", self.section)))
        }
    }
}

fn encode_splats(avatar: &Avatar) -> Vec<u8> {
    let mut w = Writer::default();
    w.u32(avatar.sh_degree as u32);
    w.u64(avatar.splats.len() as u64);
    for s in &avatar.splats {
        w.f64s(s.mu_local.as_slice());
        w.f64s(&s.rot_local.to_array());
        w.f64s(s.log_scale.as_slice());
        w.f64s(&[s.opacity_logit]);
        w.u64(s.sh_coeffs.len() as u64);
        w.f64s(&s.sh_coeffs);
        w.u64(s.parent_face as u64);
    }
    w.0
}

fn decode_splats(buf: &[u8]) -> Result<(usize, Vec<GaussianSplat>), CheckpointError> {
    let mut r = Reader::new(buf, "SPLT");
    let degree = r.u32()? as usize;
    let n = r.len()?;
    let mut splats = Vec::with_capacity(n);
    for _ in 0..n {
        let mu_local = r.vec3()?;
        let rot_local = Quaternion::new(r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let log_scale = r.vec3()?;
        let opacity_logit = r.f64()?;
        let k = r.len()?;
        let sh_coeffs = r.f64s(k)?;
        let parent_face = r.u64()? as usize;
        splats.push(GaussianSplat { mu_local, rot_local, log_scale, opacity_logit, sh_coeffs, parent_face });
    }
    r.finish()?;
    Ok((degree, splats))
}

fn encode_rectifier(params: Option<&RectifierParams>) -> Vec<u8> {
    let mut w = Writer::default();
    match params {
        Some(p) => {
            w.u8(1);
            let flat = p.to_flat();
            w.u64(flat.len() as u64);
            w.f64s(&flat);
        }
        None => w.u8(0),
    }
    w.0
}

fn decode_rectifier(buf: &[u8], cfg: &TrainConfig) -> Result<Option<RectifierParams>, CheckpointError> {
    let mut r = Reader::new(buf, "RECT");
    let out = match r.u8()? {
        0 => None,
        1 => {
            let n = r.len()?;
            let flat = r.f64s(n)?;
            let mut p = RectifierParams::zeros(cfg.rectifier.clone());
            p.load_flat(&flat).map_err(|e| malformed(e.to_string()))?;
            Some(p)
        }
        f => return Err(malformed(format!("bad rectifier flag {f}"))),
    };
    r.finish()?;
    Ok(out)
}

fn encode_optim(o: &Optimizer) -> Vec<u8> {
    let mut w = Writer::default();
    for g in o.groups() {
        w.adam(g);
    }
    w.0
}

fn decode_optim(buf: &[u8]) -> Result<Optimizer, CheckpointError> {
    let mut r = Reader::new(buf, "OPTM");
    let o = Optimizer {
        position: r.adam()?,
        scaling: r.adam()?,
        rotation: r.adam()?,
        opacity: r.adam()?,
        sh: r.adam()?,
        rectifier: r.adam()?,
    };
    r.finish()?;
    Ok(o)
}

fn encode_schedule(state: &TrainState) -> Vec<u8> {
    let mut w = Writer::default();
    w.u64(state.iteration as u64);
    w.0.extend_from_slice(&state.rng.get_seed());
    w.u64(state.rng.get_stream());
    w.0.extend_from_slice(&state.rng.get_word_pos().to_le_bytes());
    w.u64(state.stats.sum.len() as u64);
    w.f64s(&state.stats.sum);
    for c in &state.stats.count {
        w.u32(*c);
    }
    w.0
}

fn decode_schedule(buf: &[u8]) -> Result<(usize, ChaCha8Rng, GradientStats), CheckpointError> {
    let mut r = Reader::new(buf, "SCHD");
    let iteration = r.u64()? as usize;
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let stream = r.u64()?;
    let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);
    let n = r.len()?;
    let sum = r.f64s(n)?;
    let count = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok((iteration, rng, GradientStats { sum, count }))
}

/// Serializes the full training state.
pub fn checkpoint_to_bytes(state: &TrainState) -> Vec<u8> {
    let sections: [(&[u8; 4], Vec<u8>); 5] = [
        (b"CONF", state.config.to_json().into_bytes()),
        (b"SPLT", encode_splats(&state.avatar)),
        (b"RECT", encode_rectifier(state.avatar.rectifier.as_ref())),
        (b"OPTM", encode_optim(&state.optim)),
        (b"SCHD", encode_schedule(state)),
    ];
    let header_len = 4 + 4 + 4 + sections.len() * (4 + 8 + 8 + 4);
    let mut w = Writer::default();
    w.0.extend_from_slice(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u32(sections.len() as u32);
    let mut offset = header_len as u64;
    for (tag, payload) in &sections {
        w.0.extend_from_slice(*tag);
        w.u64(offset);
        w.u64(payload.len() as u64);
        w.u32(crc32fast::hash(payload));
        offset += payload.len() as u64;
    }
    for (_, payload) in &sections {
        w.0.extend_from_slice(payload);
    }
    w.0
}

/// Parses a checkpoint. Every section is checksummed before anything is
/// decoded, so a damaged file never yields partial state.
pub fn checkpoint_from_bytes(buf: &[u8]) -> Result<TrainState, CheckpointError> {
    if buf.len() < 12 {
        return Err(if buf.len() >= 4 && &buf[..4] != CHECKPOINT_MAGIC { CheckpointError::BadMagic } else { malformed("truncated header") });
    }
    if &buf[..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut r = Reader::new(&buf[4..], "header");
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version { found: version, expected: CHECKPOINT_VERSION });
    }
    let count = r.u32()?;
    let mut table = Vec::new();
    for _ in 0..count {
        let tag = String::from_utf8_lossy(r.take(4)?).into_owned();
        let (offset, len, crc) = (r.u64()?, r.u64()?, r.u32()?);
        let start = (offset.min(buf.len() as u64)) as usize;
        let end = (offset.saturating_add(len).min(buf.len() as u64)) as usize;
        let payload = &buf[start..end];
        if crc32fast::hash(payload) != crc || (end - start) as u64 != len {
            return Err(CheckpointError::Checksum(tag));
        }
        table.push((tag, payload));
    }
    let section = |tag: &str| {
        table.iter().find(|(t, _)| t == tag).map(|(_, p)| *p).ok_or_else(|| CheckpointError::MissingSection(tag.into()))
    };
    let conf = std::str::from_utf8(section("CONF")?).map_err(|e| malformed(e.to_string()))?;
    let config = TrainConfig::from_json(conf).map_err(|e| malformed(e.to_string()))?;
    let (sh_degree, splats) = decode_splats(section("SPLT")?)?;
    let rectifier = decode_rectifier(section("RECT")?, &config)?;
    let optim = decode_optim(section("OPTM")?)?;
    let (iteration, rng, stats) = decode_schedule(section("SCHD")?)?;
    Ok(TrainState { config, avatar: Avatar { splats, rectifier, sh_degree }, optim, iteration, rng, stats })
}

/// Writes atomically: the bytes go to a sibling temporary file that is then
/// renamed over `path`.
pub fn checkpoint_save(state: &TrainState, path: &Path) -> Result<(), CheckpointError> {
    let io = |e: std::io::Error| CheckpointError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp).map_err(io)?;
        f.write_all(&checkpoint_to_bytes(state)).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    std::fs::rename(&tmp, path).map_err(io)
}

pub fn checkpoint_load(path: &Path) -> Result<TrainState, CheckpointError> {
    let buf = std::fs::read(path).map_err(|e| CheckpointError::Io { path: path.display().to_string(), message: e.to_string() })?;
    checkpoint_from_bytes(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rectifier::{EncoderConfig, RectifierConfig};
    use rand::Rng;

    fn sample_state() -> TrainState {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut config = TrainConfig::default();
        config.rectifier = RectifierConfig {
            encoder: EncoderConfig { num_bands: 2, include_identity: false },
            pose_width: 6,
            hidden_widths: [4, 5, 4, 3],
            ..Default::default()
        };
        let splats: Vec<GaussianSplat> = (0..5)
            .map(|i| {
                let mut s = GaussianSplat::at_face_origin(i % 3, 1, 0.3);
                s.mu_local = Vec3::new(rng.random(), rng.random(), rng.random());
                s.opacity_logit = rng.random_range(-3.0..3.0);
                s.sh_coeffs.iter_mut().for_each(|c| *c = rng.random());
                s
            })
            .collect();
        let rectifier = Some(RectifierParams::new(config.rectifier.clone(), &mut rng));
        let n = splats.len();
        let mut optim = Optimizer::for_avatar(n, 12, rectifier.as_ref().map_or(0, |p| p.param_count()));
        optim.position.step = 17;
        optim.position.m[3] = 0.25;
        let _: u64 = rng.random();
        TrainState {
            config,
            avatar: Avatar { splats, rectifier, sh_degree: 1 },
            optim,
            iteration: 17,
            rng,
            stats: GradientStats { sum: vec![0.5; n], count: vec![2; n] },
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample_state();
        let bytes = checkpoint_to_bytes(&s);
        let back = checkpoint_from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(checkpoint_to_bytes(&back), bytes);
    }

    #[test]
    fn restored_rng_continues_the_stream() {
        let mut s = sample_state();
        let mut back = checkpoint_from_bytes(&checkpoint_to_bytes(&s)).unwrap();
        assert_eq!(s.rng.random::<u64>(), back.rng.random::<u64>());
    }

    #[test]
    fn truncation_is_a_checksum_error() {
        let bytes = checkpoint_to_bytes(&sample_state());
        let cut = &bytes[..bytes.len() - 10];
        assert!(matches!(checkpoint_from_bytes(cut), Err(CheckpointError::Checksum(_))));
        assert!(matches!(checkpoint_from_bytes(&bytes[..6]), Err(CheckpointError::Malformed(_))));
    }

    #[test]
    fn corrupted_payload_is_a_checksum_error() {
        let mut bytes = checkpoint_to_bytes(&sample_state());
        let last = bytes.len() - 1;
        bytes[last] ^= 0x40;
        assert_eq!(checkpoint_from_bytes(&bytes).unwrap_err(), CheckpointError::Checksum("SCHD".into()));
    }

    #[test]
    fn newer_version_is_rejected() {
        let mut bytes = checkpoint_to_bytes(&sample_state());
        bytes[4..8].copy_from_slice(&(CHECKPOINT_VERSION + 1).to_le_bytes());
        assert_eq!(
            checkpoint_from_bytes(&bytes).unwrap_err(),
            CheckpointError::Version { found: CHECKPOINT_VERSION + 1, expected: CHECKPOINT_VERSION }
        );
    }

    #[test]
    fn bad_magic_is_rejected() {
        assert_eq!(checkpoint_from_bytes(b"PLY\n0000000000000").unwrap_err(), CheckpointError::BadMagic);
    }

    #[test]
    fn file_round_trip_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        let s = sample_state();
        checkpoint_save(&s, &path).unwrap();
        assert_eq!(checkpoint_load(&path).unwrap(), s);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
