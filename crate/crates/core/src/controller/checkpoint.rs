//! Plain-text parameter checkpoints.
//!
//! ```text
//! subgoal-attention-params 1
//! <name> <rank> <dim>... : <value> <value> ...
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a save/load
//! cycle reproduces every `f64` bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{ParamStore, Tensor};

const MAGIC: &str = "subgoal-attention-params";
const VERSION: u32 = 1;

pub fn write_params<W: Write>(store: &ParamStore, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC} {VERSION}")?;
    for id in store.ids() {
        let t = store.value(id);
        write!(out, "{} {}", store.name(id), t.shape().len())?;
        for d in t.shape() {
            write!(out, " {d}")?;
        }
        write!(out, " :")?;
        for v in t.data() {
            write!(out, " {v:?}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_params<R: Read>(input: R) -> Result<Vec<(String, Tensor)>> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, msg: String| Error::Parse { line: line as u64 + 1, msg };

    let (n, header) = lines.next().ok_or_else(|| parse_err(0, "empty checkpoint".into()))?;
    let header = header?;
    if header.trim() != format!("{MAGIC} {VERSION}") {
        return Err(parse_err(n, format!("unrecognised header `{header}`")));
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (head, values) = line.split_once(':').ok_or_else(|| parse_err(n, "missing `:`".into()))?;
        let mut fields = head.split_whitespace();
        let name = fields.next().ok_or_else(|| parse_err(n, "missing name".into()))?.to_string();
        let rank: usize = fields.next().and_then(|r| r.parse().ok()).ok_or_else(|| parse_err(n, "bad rank".into()))?;
        let shape: Vec<usize> = fields
            .map(|d| d.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(n, format!("bad dimension: {e}")))?;
        if shape.len() != rank {
            return Err(parse_err(n, format!("rank {rank} but {} dimensions", shape.len())));
        }
        let data: Vec<f64> = values
            .split_whitespace()
            .map(|v| v.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(n, format!("bad value: {e}")))?;
        let tensor = Tensor::from_vec(&shape, data).map_err(|e| parse_err(n, e.to_string()))?;
        out.push((name, tensor));
    }
    Ok(out)
}

pub fn save_params(store: &ParamStore, path: &Path) -> Result<()> {
    write_params(store, BufWriter::new(File::create(path)?))
}

/// Loads values into `store`, which must have the same names and shapes in
/// the same order.
pub fn load_params(store: &mut ParamStore, path: &Path) -> Result<()> {
    let entries = read_params(File::open(path)?)?;
    if entries.len() != store.len() {
        return Err(Error::config(format!("checkpoint has {} tensors, network has {}", entries.len(), store.len())));
    }
    let ids: Vec<_> = store.ids().collect();
    for (id, (name, tensor)) in ids.into_iter().zip(entries) {
        if store.name(id) != name || store.value(id).shape() != tensor.shape() {
            return Err(Error::config(format!(
                "checkpoint tensor `{name}` {:?} does not match `{}` {:?}",
                tensor.shape(),
                store.name(id),
                store.value(id).shape()
            )));
        }
        *store.value_mut(id) = tensor;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{AttentionNet, NoAttentionNet};
    use crate::rng::seeded;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = AttentionNet::new(&mut seeded(12));
        let mut buf = Vec::new();
        write_params(&net.params, &mut buf).unwrap();
        let entries = read_params(buf.as_slice()).unwrap();
        assert_eq!(entries.len(), net.params.len());
        for (id, (name, t)) in net.params.ids().zip(&entries) {
            assert_eq!(net.params.name(id), name);
            let a: Vec<u64> = net.params.value(id).data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = t.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn load_into_fresh_network() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.params");
        let trained = NoAttentionNet::new(&mut seeded(1));
        save_params(&trained.params, &path).unwrap();
        let mut other = NoAttentionNet::new(&mut seeded(2));
        load_params(&mut other.params, &path).unwrap();
        assert_eq!(other.params.flat_values(), trained.params.flat_values());

        let mut wrong = AttentionNet::new(&mut seeded(2));
        assert!(load_params(&mut wrong.params, &path).is_err());
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(read_params("nope\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let bad = format!("{MAGIC} {VERSION}\nw 1 2 : 1.0\n");
        assert!(matches!(read_params(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
