use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dense::{DenseLayer, DenseNet};
use crate::error::{Error, Result};

pub const FORMAT: &str = "emp-dense-f64le-v1";

/// JSON header stored next to the raw parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub arch: Vec<usize>,
    pub param_count: usize,
    /// Per layer: weights (row-major outputs x inputs), then bias.
    pub order: String,
    pub params_file: String,
}

fn sibling(stem: &Path, ext: &str) -> PathBuf {
    let mut p = stem.as_os_str().to_owned();
    p.push(ext);
    PathBuf::from(p)
}

/// Writes `<stem>.json` and `<stem>.bin`.
pub fn save(net: &DenseNet, stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();
    let bin = sibling(stem, ".bin");
    let params = net.params_flat();
    let bytes: Vec<u8> = params.iter().flat_map(|p| p.to_le_bytes()).collect();
    fs::write(&bin, bytes)?;
    let header = CheckpointHeader {
        format: FORMAT.into(),
        arch: net.arch(),
        param_count: params.len(),
        order: "per layer: weights row-major (outputs x inputs), then bias".into(),
        params_file: bin
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    fs::write(sibling(stem, ".json"), serde_json::to_vec_pretty(&header)?)?;
    Ok(())
}

pub fn load(stem: impl AsRef<Path>) -> Result<DenseNet> {
    let stem = stem.as_ref();
    let header: CheckpointHeader = serde_json::from_slice(&fs::read(sibling(stem, ".json"))?)?;
    if header.format != FORMAT {
        return Err(Error::Parse(format!("unsupported checkpoint format {:?}", header.format)));
    }
    let bytes = fs::read(sibling(stem, ".bin"))?;
    if bytes.len() != header.param_count * 8 {
        return Err(Error::LengthMismatch {
            expected: header.param_count * 8,
            actual: bytes.len(),
        });
    }
    let params: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Parse("checkpoint holds non-finite parameters".into()));
    }
    let layers = header
        .arch
        .windows(2)
        .map(|w| DenseLayer {
            inputs: w[0],
            outputs: w[1],
            weights: vec![0.0; w[0] * w[1]],
            bias: vec![0.0; w[1]],
        })
        .collect();
    let mut net = DenseNet::from_layers(layers)?;
    net.set_params_flat(&params)?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = DenseNet::new(&[3, 5, 2], 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("net");
        save(&net, &stem).unwrap();
        assert_eq!(fs::metadata(dir.path().join("net.bin")).unwrap().len(), 8 * 32);
        assert_eq!(load(&stem).unwrap(), net);
        fs::write(dir.path().join("net.bin"), [0u8; 16]).unwrap();
        assert!(load(&stem).is_err());
    }
}
