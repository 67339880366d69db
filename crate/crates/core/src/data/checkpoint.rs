//! Binary checkpoints.
//!
//! ```text
//! "CVFG"                      4 bytes
//! version                     u16
//! header length               u64
//! header                      UTF-8 `key=value` lines
//! tensors (count in header), each:
//!   name length u64 | name | rank u64 | dims u64 × rank | f32 values
//! ```
//!
//! Integers and floats are little-endian. Tensors are the model parameters
//! (`param:<name>`) followed by the optimizer slots (`slot:<kind>:<name>`).
//! The header's last line, `digest.sha256`, hashes the header text before it
//! together with the tensor section, so any corrupted byte fails the load.
//! Values are stored as f32; f64 models are narrowed on save.

use std::path::Path;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

use crate::error::{CheckpointError, Error, Result};
use crate::model::{InputShape, Model, ModelConfig, ParamStore};
use crate::optim::{Algorithm, Hyperparams, OptimizerState};
use crate::tensor::{Element, Tensor};

pub const MAGIC: [u8; 4] = *b"CVFG";
pub const VERSION: u16 = 1;
const DIGEST_KEY: &str = "digest.sha256";

/// Everything needed to resume training.
#[derive(Clone, Debug)]
pub struct Checkpoint<T: Element = f32> {
    pub model: Model<T>,
    pub state: OptimizerState<T>,
    /// Completed epochs.
    pub epoch: usize,
    /// Free-form `meta.*` header entries.
    pub meta: IndexMap<String, String>,
}

fn check_kv(key: &str, value: &str) -> Result<()> {
    if key.is_empty() || key.contains(['=', '\n']) || value.contains('\n') {
        return Err(Error::Argument(format!(
            "header entry `{key}` is not a single key=value line"
        )));
    }
    Ok(())
}

fn digest(header: &[u8], payload: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(header);
    h.update(payload);
    hex::encode(h.finalize())
}

fn put_tensor<T: Element>(out: &mut Vec<u8>, name: &str, t: &Tensor<T>) {
    out.extend_from_slice(&(name.len() as u64).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(t.rank() as u64).to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
}

impl<T: Element> Checkpoint<T> {
    pub fn new(model: Model<T>, state: OptimizerState<T>, epoch: usize) -> Self {
        Self {
            model,
            state,
            epoch,
            meta: IndexMap::new(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if !self.state.matches(self.model.params()) {
            return Err(Error::State("optimizer state does not match model parameters".into()));
        }
        let cfg = self.model.config();
        let mut header: Vec<(String, String)> = vec![
            ("format".into(), "convforge-checkpoint".into()),
            ("precision".into(), T::NAME.into()),
            ("epoch".into(), self.epoch.to_string()),
            ("model.name".into(), cfg.name.clone()),
            (
                "model.input".into(),
                format!("{},{},{}", cfg.input.channels, cfg.input.height, cfg.input.width),
            ),
            ("model.classes".into(), cfg.num_classes.to_string()),
            ("model.layers".into(), cfg.layers_string()),
            ("optim.algorithm".into(), self.state.algorithm().name().into()),
            ("optim.t".into(), self.state.step_count().to_string()),
        ];
        header.extend(self.state.hyperparams().to_pairs());
        for (k, v) in &self.meta {
            header.push((format!("meta.{k}"), v.clone()));
        }

        let mut payload = Vec::new();
        let mut count = 0usize;
        for (name, t) in self.model.params().iter() {
            put_tensor(&mut payload, &format!("param:{name}"), t);
            count += 1;
        }
        for (kind, store) in self.state.slots() {
            for (name, t) in store.iter() {
                put_tensor(&mut payload, &format!("slot:{kind}:{name}"), t);
                count += 1;
            }
        }
        header.push(("tensors".into(), count.to_string()));

        let mut text = String::new();
        for (k, v) in &header {
            check_kv(k, v)?;
            text.push_str(&format!("{k}={v}\n"));
        }
        let sum = digest(text.as_bytes(), &payload);
        text.push_str(&format!("{DIGEST_KEY}={sum}\n"));

        let mut out = Vec::with_capacity(14 + text.len() + payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u64).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(CheckpointError::BadMagic(magic).into());
        }
        let version = u16::from_le_bytes(r.take(2, "version")?.try_into().expect("2 bytes"));
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version).into());
        }
        let header_len = r.u64("header length")?;
        let header_bytes = r.take(usize::try_from(header_len).unwrap_or(usize::MAX), "header")?;
        let payload = &bytes[r.pos..];
        let text =
            std::str::from_utf8(header_bytes).map_err(|_| CheckpointError::Header("header is not UTF-8".into()))?;

        let digest_at = text
            .rfind(&format!("{DIGEST_KEY}="))
            .ok_or_else(|| CheckpointError::Header(format!("missing `{DIGEST_KEY}`")))?;
        let stored = text[digest_at + DIGEST_KEY.len() + 1..].trim_end_matches('\n');
        if digest(&text.as_bytes()[..digest_at], payload) != stored {
            return Err(CheckpointError::Digest.into());
        }

        let mut kv = IndexMap::new();
        for line in text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CheckpointError::Header(format!("line `{line}` is not key=value")))?;
            if kv.insert(k.to_owned(), v.to_owned()).is_some() {
                return Err(CheckpointError::Header(format!("duplicate key `{k}`")).into());
            }
        }
        let get = |k: &str| -> Result<&str> {
            kv.get(k)
                .map(String::as_str)
                .ok_or_else(|| CheckpointError::Header(format!("missing `{k}`")).into())
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| CheckpointError::Header(format!("bad integer for `{k}`")).into())
        };

        let dims: Vec<usize> = get("model.input")?
            .split(',')
            .map(|d| d.parse().map_err(|_| CheckpointError::Header("bad model.input".into())))
            .collect::<std::result::Result<_, _>>()?;
        let [c, h, w] = dims[..] else {
            return Err(CheckpointError::Header("model.input needs three dims".into()).into());
        };
        let config = ModelConfig {
            name: get("model.name")?.to_owned(),
            input: InputShape::new(c, h, w),
            num_classes: num("model.classes")?,
            layers: ModelConfig::parse_layers(get("model.layers")?)
                .map_err(|e| CheckpointError::Header(format!("model.layers: {e}")))?,
        };
        let expected: Vec<(String, Vec<usize>)> = config
            .param_shapes()
            .map_err(|e| CheckpointError::Header(format!("model config: {e}")))?;
        let algorithm: Algorithm = get("optim.algorithm")?
            .parse()
            .map_err(|e| CheckpointError::Header(format!("{e}")))?;
        let hyper =
            Hyperparams::from_lookup(|k| kv.get(k).cloned()).map_err(|e| CheckpointError::Header(format!("{e}")))?;
        let t: u64 = get("optim.t")?
            .parse()
            .map_err(|_| CheckpointError::Header("bad optim.t".into()))?;
        let epoch = num("epoch")?;
        let count = num("tensors")?;
        let kinds = algorithm.slot_kinds();
        if count != expected.len() * (1 + kinds.len()) {
            return Err(CheckpointError::Header(format!(
                "{count} tensors listed, model and {algorithm} state need {}",
                expected.len() * (1 + kinds.len())
            ))
            .into());
        }

        let mut r = Reader { bytes: payload, pos: 0 };
        let mut read_store = |prefix: &str| -> Result<ParamStore<T>> {
            let mut store = ParamStore::new();
            for (name, shape) in &expected {
                let want = format!("{prefix}{name}");
                let (got, tensor) = r.tensor()?;
                if got != want {
                    return Err(CheckpointError::Tensor {
                        name: got,
                        message: format!("expected `{want}` at this position"),
                    }
                    .into());
                }
                if tensor.shape() != shape.as_slice() {
                    return Err(CheckpointError::ShapeMismatch {
                        name: want,
                        expected: shape.clone(),
                        found: tensor.shape().to_vec(),
                    }
                    .into());
                }
                store.insert(name.clone(), tensor.cast())?;
            }
            Ok(store)
        };
        let params = read_store("param:")?;
        let mut slots = Vec::new();
        for kind in kinds {
            slots.push((kind.to_string(), read_store(&format!("slot:{kind}:"))?));
        }
        if r.pos != payload.len() {
            return Err(CheckpointError::TrailingBytes(payload.len() - r.pos).into());
        }

        let model = Model::with_params(config, params)?;
        let state = OptimizerState::from_parts(algorithm, hyper, t, slots)?;
        let meta = kv
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_owned(), v.clone())))
            .collect();
        Ok(Self {
            model,
            state,
            epoch,
            meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_checkpoint<T: Element>(
    model: &Model<T>,
    state: &OptimizerState<T>,
    epoch: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    Checkpoint::new(model.clone(), state.clone(), epoch).save(path)
}

pub fn load_checkpoint<T: Element>(path: impl AsRef<Path>) -> Result<(Model<T>, OptimizerState<T>, usize)> {
    let c = Checkpoint::load(path)?;
    Ok((c.model, c.state, c.epoch))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(CheckpointError::Truncated {
                offset: self.bytes.len(),
                what,
            }
            .into());
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self, what: &'static str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| CheckpointError::Truncated { offset: self.pos, what }.into())
    }

    fn tensor(&mut self) -> Result<(String, Tensor<f32>)> {
        let n = self.len("tensor name length")?;
        let name = String::from_utf8(self.take(n, "tensor name")?.to_vec())
            .map_err(|_| CheckpointError::Header("tensor name is not UTF-8".into()))?;
        let rank = self.len("tensor rank")?;
        if rank == 0 || rank > 8 {
            return Err(CheckpointError::Tensor {
                name,
                message: format!("unsupported rank {rank}"),
            }
            .into());
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.len("tensor dims")?);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&n| n > 0);
        let Some(numel) = numel.and_then(|n| n.checked_mul(4).map(|b| (n, b))) else {
            return Err(CheckpointError::Tensor {
                name,
                message: format!("invalid shape {shape:?}"),
            }
            .into());
        };
        let raw = self.take(numel.1, "tensor data")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let t = Tensor::from_data(&shape, data).map_err(|e| CheckpointError::Tensor {
            name: name.clone(),
            message: e.to_string(),
        })?;
        Ok((name, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_vgg_mini, InitScheme};
    use crate::rng::Rng;

    fn sample() -> Checkpoint<f32> {
        let mut m = build_vgg_mini::<f32>(2, 1, 8).unwrap();
        m.init_params(&mut Rng::new(4), InitScheme::HeNormal).unwrap();
        let state = OptimizerState::new(Algorithm::AdamW, Hyperparams::default(), m.params()).unwrap();
        let mut c = Checkpoint::new(m, state, 7);
        c.meta.insert("note".into(), "hello".into());
        c
    }

    #[test]
    fn round_trip_is_canonical() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        let back = Checkpoint::<f32>::from_bytes(&bytes).unwrap();
        assert_eq!(back.model.params(), c.model.params());
        assert_eq!(back.state, c.state);
        assert_eq!(back.epoch, 7);
        assert_eq!(back.meta["note"], "hello");
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn typed_failures() {
        let bytes = sample().to_bytes().unwrap();
        let err = |b: &[u8]| match Checkpoint::<f32>::from_bytes(b) {
            Err(Error::Checkpoint(e)) => e,
            other => panic!("expected checkpoint error, got {other:?}"),
        };
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(matches!(err(&b), CheckpointError::BadMagic(_)));
        let mut b = bytes.clone();
        b[4] = 9;
        assert!(matches!(err(&b), CheckpointError::UnsupportedVersion(9)));
        assert!(matches!(err(&bytes[..10]), CheckpointError::Truncated { .. }));
        let mut b = bytes.clone();
        let last = b.len() - 1;
        b[last] ^= 1;
        assert!(matches!(err(&b), CheckpointError::Digest));
        assert!(matches!(err(&bytes[..bytes.len() - 4]), CheckpointError::Digest));
    }
}
