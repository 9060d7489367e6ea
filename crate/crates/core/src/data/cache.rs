//! Versioned little-endian binary dataset cache.
//!
//! Layout: `"LBSN"`, version `u32`, `|V|` and `|L|` as `u64`, the user then
//! location vocabularies as `u64`-length-prefixed UTF-8 strings, then per user a
//! `u64`-prefixed array of `u64` location ids and a `u64`-prefixed array of
//! `i64` timestamps. The friendship graph follows as a `u64` pair count and
//! `(u64, u64)` undirected pairs with the smaller id first.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dataset, SocialGraph, Trajectory, Vocab};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"LBSN";
pub const CACHE_VERSION: u32 = 1;

pub fn write_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_dataset_to(&mut w, dataset)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_dataset_to(w: &mut impl Write, d: &Dataset) -> std::io::Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(d.num_users() as u64).to_le_bytes())?;
    w.write_all(&(d.num_locations() as u64).to_le_bytes())?;
    write_vocab(w, &d.users)?;
    write_vocab(w, &d.locations)?;
    for t in &d.trajectories {
        w.write_all(&(t.len() as u64).to_le_bytes())?;
        for &l in &t.locations {
            w.write_all(&(l as u64).to_le_bytes())?;
        }
        w.write_all(&(t.len() as u64).to_le_bytes())?;
        for &ts in &t.timestamps {
            w.write_all(&ts.to_le_bytes())?;
        }
    }
    let pairs = d.graph.undirected_pairs();
    w.write_all(&(pairs.len() as u64).to_le_bytes())?;
    for (i, j) in pairs {
        w.write_all(&(i as u64).to_le_bytes())?;
        w.write_all(&(j as u64).to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn write_vocab(w: &mut impl Write, v: &Vocab) -> std::io::Result<()> {
    for name in v.names() {
        w.write_all(&(name.len() as u64).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(&mut BufReader::new(file)).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_dataset_from(r: &mut impl Read) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Format("missing LBSN magic".into()));
    }
    let version = read_u32(r)?;
    if version != CACHE_VERSION {
        return Err(Error::Format(format!("unsupported dataset cache version {version}")));
    }
    let num_users = read_len(r)?;
    let num_locations = read_len(r)?;
    let users = read_vocab(r, num_users)?;
    let locations = read_vocab(r, num_locations)?;
    let mut trajectories = Vec::with_capacity(num_users);
    for u in 0..num_users {
        let n = read_len(r)?;
        let mut locs = Vec::with_capacity(n);
        for _ in 0..n {
            let l = read_len(r)?;
            if l >= num_locations {
                return Err(Error::Format(format!("user {u}: location id {l} out of range")));
            }
            locs.push(l);
        }
        let n_ts = read_len(r)?;
        if n_ts != n {
            return Err(Error::Format(format!("user {u}: {n} locations but {n_ts} timestamps")));
        }
        let mut ts = Vec::with_capacity(n);
        for _ in 0..n {
            ts.push(read_u64(r)? as i64);
        }
        if ts.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format(format!("user {u}: timestamps not sorted")));
        }
        trajectories.push(Trajectory::new(u, locs, ts));
    }
    let num_pairs = read_len(r)?;
    let mut pairs = Vec::with_capacity(num_pairs);
    for _ in 0..num_pairs {
        let (i, j) = (read_len(r)?, read_len(r)?);
        if i >= num_users || j >= num_users {
            return Err(Error::Format(format!("edge ({i}, {j}) out of range")));
        }
        pairs.push((i, j));
    }
    let graph = SocialGraph::from_undirected(num_users, pairs);
    Ok(Dataset { graph, trajectories, users, locations })
}

pub(crate) fn read_vocab(r: &mut impl Read, n: usize) -> Result<Vocab> {
    let mut names = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_len(r)?;
        let mut buf = vec![0u8; len];
        read_exact(r, &mut buf)?;
        names.push(String::from_utf8(buf).map_err(|_| Error::Format("vocab entry is not UTF-8".into()))?);
    }
    let mut seen = std::collections::HashSet::new();
    if !names.iter().all(|n| seen.insert(n.as_str())) {
        return Err(Error::Format("duplicate vocab entry".into()));
    }
    Ok(Vocab::from_ordered(names))
}

pub(crate) fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::Format(format!("truncated input: {e}")))
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_len(r: &mut impl Read) -> Result<usize> {
    let v = read_u64(r)?;
    usize::try_from(v).map_err(|_| Error::Format(format!("length {v} does not fit in memory")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_dataset, CheckIn};

    #[test]
    fn round_trip_and_header_bytes() {
        let cs = vec![
            CheckIn { user: "b".into(), location: "ü".into(), timestamp: 10 },
            CheckIn { user: "a".into(), location: "x".into(), timestamp: 5 },
            CheckIn { user: "a".into(), location: "ü".into(), timestamp: 50_000 },
        ];
        let d = build_dataset(&cs, &[("a".into(), "b".into())]);
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &d).unwrap();
        assert_eq!(&buf[..4], b"LBSN");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..16], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &2u64.to_le_bytes());
        let back = read_dataset_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(read_dataset_from(&mut &b"LBSX\x01\0\0\0"[..]), Err(Error::Format(_))));
        assert!(matches!(read_dataset_from(&mut &b"LBSN\x01\0"[..]), Err(Error::Format(_))));
    }
}
