//! Binary checkpoint container.
//!
//! ```text
//! "ACPNETCK"  version u32 LE
//! repeated until EOF:
//!     name_len u32, name bytes (UTF-8), rank u32, dims u32 × rank, f32 LE × prod(dims)
//! ```
//!
//! Parameter blocks use the architecture's block names. Metadata uses the
//! same block format under `meta.*`; optimizer moments are stored as
//! `adam.m.<block>` / `adam.v.<block>`. 64-bit integers are split into four
//! 16-bit limbs (least significant first), each exact in an `f32`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::adam::Adam;
use crate::error::{PredictorError, Result};
use crate::model::Model;

pub const MAGIC: &[u8; 8] = b"ACPNETCK";
pub const VERSION: u32 = 1;

/// Optimizer and sampler state needed to continue a run bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub adam: Adam<f32>,
    pub rng_state: u64,
    pub iteration: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model<f32>,
    /// Training resolution `(height, width)`.
    pub resolution: (usize, usize),
    pub training: Option<TrainingState>,
}

fn u64_limbs(x: u64) -> Vec<f32> {
    (0..4).map(|k| ((x >> (16 * k)) & 0xFFFF) as f32).collect()
}

fn limbs_u64(v: &[f32]) -> Option<u64> {
    if v.len() != 4 {
        return None;
    }
    let mut x = 0u64;
    for (k, &l) in v.iter().enumerate() {
        if !(0.0..=65535.0).contains(&l) || l.fract() != 0.0 {
            return None;
        }
        x |= (l as u64) << (16 * k);
    }
    Some(x)
}

fn put_block(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f32]) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let model = &ckpt.model;
    for b in &model.arch.blocks {
        put_block(&mut out, &b.name, &b.shape, &model.params[b.range.clone()]);
    }
    put_block(&mut out, "meta.ablation", &[1], &[model.ablation as u8 as f32]);
    let (h, w) = ckpt.resolution;
    put_block(&mut out, "meta.resolution", &[2], &[h as f32, w as f32]);
    if let Some(t) = &ckpt.training {
        put_block(&mut out, "meta.iteration", &[4], &u64_limbs(t.iteration));
        put_block(&mut out, "meta.rng_state", &[4], &u64_limbs(t.rng_state));
        put_block(&mut out, "meta.seed", &[4], &u64_limbs(t.seed));
        put_block(&mut out, "meta.adam_steps", &[4], &u64_limbs(t.adam.steps));
        for b in &model.arch.blocks {
            put_block(&mut out, &format!("adam.m.{}", b.name), &b.shape, &t.adam.m[b.range.clone()]);
            put_block(&mut out, &format!("adam.v.{}", b.name), &b.shape, &t.adam.v[b.range.clone()]);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(PredictorError::checkpoint(
                self.path,
                format!("truncated at byte {} (wanted {n} more)", self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

type Blocks = BTreeMap<String, (Vec<usize>, Vec<f32>)>;

fn read_blocks(bytes: &[u8], path: &Path) -> Result<Blocks> {
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(8)? != MAGIC {
        return Err(PredictorError::checkpoint(path, "bad magic (expected ACPNETCK)"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(PredictorError::checkpoint(path, format!("unsupported version {version}")));
    }
    let mut blocks = BTreeMap::new();
    while r.pos < bytes.len() {
        let start = r.pos;
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| PredictorError::checkpoint(path, format!("block name at byte {start} is not UTF-8")))?
            .to_string();
        let rank = r.u32()? as usize;
        if rank > 8 {
            return Err(PredictorError::checkpoint(path, format!("block {name}: rank {rank}")));
        }
        let shape: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_>>()?;
        let count: usize = shape.iter().product();
        let data = r
            .take(count.checked_mul(4).ok_or_else(|| PredictorError::checkpoint(path, "block too large"))?)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if blocks.insert(name.clone(), (shape, data)).is_some() {
            return Err(PredictorError::checkpoint(path, format!("duplicate block {name}")));
        }
    }
    Ok(blocks)
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let mut blocks = read_blocks(bytes, path)?;
    let mut take = |name: &str, shape: &[usize]| -> Result<Vec<f32>> {
        let (s, d) = blocks
            .remove(name)
            .ok_or_else(|| PredictorError::checkpoint(path, format!("missing block {name}")))?;
        if s != shape {
            return Err(PredictorError::checkpoint(
                path,
                format!("block {name} has shape {s:?}, expected {shape:?}"),
            ));
        }
        Ok(d)
    };
    let template = Model::<f32>::init(0, false);
    let mut params = vec![0f32; template.param_count()];
    for b in &template.arch.blocks {
        params[b.range.clone()].copy_from_slice(&take(&b.name, &b.shape)?);
    }
    let ablation = take("meta.ablation", &[1])?[0] != 0.0;
    let res = take("meta.resolution", &[2])?;
    let resolution = (res[0] as usize, res[1] as usize);
    let limbs = |v: Vec<f32>, name: &str| {
        limbs_u64(&v).ok_or_else(|| PredictorError::checkpoint(path, format!("{name} is not a 64-bit integer")))
    };
    let training = match take("meta.iteration", &[4]) {
        Ok(it) => {
            let iteration = limbs(it, "meta.iteration")?;
            let rng_state = limbs(take("meta.rng_state", &[4])?, "meta.rng_state")?;
            let seed = limbs(take("meta.seed", &[4])?, "meta.seed")?;
            let steps = limbs(take("meta.adam_steps", &[4])?, "meta.adam_steps")?;
            let mut adam = Adam::new(params.len());
            adam.steps = steps;
            for b in &template.arch.blocks {
                adam.m[b.range.clone()].copy_from_slice(&take(&format!("adam.m.{}", b.name), &b.shape)?);
                adam.v[b.range.clone()].copy_from_slice(&take(&format!("adam.v.{}", b.name), &b.shape)?);
            }
            Some(TrainingState {
                adam,
                rng_state,
                iteration,
                seed,
            })
        }
        Err(_) => None,
    };
    if let Some(name) = blocks.keys().next() {
        return Err(PredictorError::checkpoint(path, format!("unknown block {name}")));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(PredictorError::checkpoint(path, "non-finite parameter"));
    }
    Ok(Checkpoint {
        model: Model::from_params(params, ablation)?,
        resolution,
        training,
    })
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PredictorError::io(dir, e))?;
    }
    fs::write(path, encode(ckpt)).map_err(|e| PredictorError::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| PredictorError::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(training: bool) -> Checkpoint {
        let model = Model::<f32>::init(7, true);
        let n = model.param_count();
        let training = training.then(|| {
            let mut adam = Adam::new(n);
            adam.m.iter_mut().enumerate().for_each(|(i, v)| *v = i as f32 * 1e-3);
            adam.v.iter_mut().enumerate().for_each(|(i, v)| *v = i as f32 * 1e-6);
            adam.steps = 1234;
            TrainingState {
                adam,
                rng_state: 0xDEAD_BEEF_0123_4567,
                iteration: 1234,
                seed: u64::MAX,
            }
        });
        Checkpoint {
            model,
            resolution: (32, 32),
            training,
        }
    }

    #[test]
    fn round_trip() {
        for training in [false, true] {
            let c = sample(training);
            let bytes = encode(&c);
            assert_eq!(&bytes[..8], b"ACPNETCK");
            assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
            assert_eq!(decode(&bytes, Path::new("x")).unwrap(), c);
        }
    }

    #[test]
    fn limbs_are_exact() {
        for x in [0, 1, 65535, 65536, u64::MAX, 0x8000_0000_0000_0001] {
            assert_eq!(limbs_u64(&u64_limbs(x)), Some(x));
        }
    }

    #[test]
    fn corruption_is_rejected() {
        let bytes = encode(&sample(true));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad, Path::new("x")).unwrap_err().to_string().contains("magic"));
        assert!(decode(&bytes[..bytes.len() - 3], Path::new("x")).is_err());
        let mut extra = bytes.clone();
        put_block(&mut extra, "meta.surprise", &[1], &[0.0]);
        assert!(decode(&extra, Path::new("x")).unwrap_err().to_string().contains("unknown block"));
    }
}
