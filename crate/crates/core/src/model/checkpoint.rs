//! Bit-exact model checkpoints.
//!
//! `"JNTM"`, version `u32`, then `|V|`, `|L|`, `d` as `u64`, the variant mask
//! as two bytes (`use_short`, `use_long`), the 17 tensors as raw little-endian
//! f64 in [`TensorId::ALL`] order, row-major, and finally the user and location
//! vocabularies as `u64`-length-prefixed UTF-8 strings. All integers are
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ModelParams, TensorId, VariantMask};
use crate::data::cache::{read_exact, read_len, read_u32, read_u64, read_vocab, write_vocab};
use crate::data::Vocab;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"JNTM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub mask: VariantMask,
    pub users: Vocab,
    pub locations: Vocab,
}

pub fn write_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_checkpoint_to(&mut w, ckpt)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_checkpoint_to(w: &mut impl Write, ckpt: &Checkpoint) -> std::io::Result<()> {
    let p = &ckpt.params;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for n in [p.num_users(), p.num_locations(), p.dim] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&[ckpt.mask.use_short as u8, ckpt.mask.use_long as u8])?;
    for t in TensorId::ALL {
        for v in &p.tensor(t).data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    write_vocab(w, &ckpt.users)?;
    write_vocab(w, &ckpt.locations)
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint_from(&mut BufReader::new(file))
}

pub fn read_checkpoint_from(r: &mut impl Read) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("missing JNTM magic".into()));
    }
    let version = read_u32(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let (num_users, num_locations, dim) = (read_len(r)?, read_len(r)?, read_len(r)?);
    let mut flags = [0u8; 2];
    read_exact(r, &mut flags)?;
    let flag = |b: u8| match b {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::Format(format!("bad mask byte {other}"))),
    };
    let mask = VariantMask { use_short: flag(flags[0])?, use_long: flag(flags[1])? };
    let mut params = ModelParams::zeros(num_users, num_locations, dim);
    for t in TensorId::ALL {
        for v in params.tensor_mut(t).data.iter_mut() {
            *v = f64::from_bits(read_u64(r)?);
        }
    }
    let users = read_vocab(r, num_users)?;
    let locations = read_vocab(r, num_locations)?;
    Ok(Checkpoint { params, mask, users, locations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let mut params = ModelParams::zeros(2, 3, 2);
        params.p.data[0] = 1.5;
        params.b_c.data[1] = -0.25;
        let ckpt = Checkpoint {
            params,
            mask: VariantMask::BASE_LONG,
            users: Vocab::from_names(["a", "b"]),
            locations: Vocab::from_names(["x", "y", "z"]),
        };
        let mut buf = Vec::new();
        write_checkpoint_to(&mut buf, &ckpt).unwrap();
        assert_eq!(&buf[..4], b"JNTM");
        assert_eq!(&buf[8..16], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &3u64.to_le_bytes());
        assert_eq!(&buf[24..32], &2u64.to_le_bytes());
        assert_eq!(&buf[32..34], &[0, 1]);
        assert_eq!(&buf[34..42], &1.5f64.to_le_bytes());
        let n_floats = 3 * 2 * 2 + 3 * 2 + 3 * 8 + 2 + 4 + 2 + 6 * 4 + 3 * 2;
        assert_eq!(buf.len(), 34 + 8 * n_floats + 2 * (8 + 1) + 3 * (8 + 1));
        assert_eq!(read_checkpoint_from(&mut buf.as_slice()).unwrap(), ckpt);
    }
}
