use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::NeuralError;

pub const FORMAT_VERSION: u32 = 1;

/// Versioned JSON envelope. Floats are written in shortest round-trip form,
/// so a reload reproduces every parameter bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format_version: u32,
    pub kind: String,
    pub payload: T,
}

pub fn to_string<T: Serialize>(kind: &str, payload: &T) -> Result<String, NeuralError> {
    Ok(serde_json::to_string(&Checkpoint {
        format_version: FORMAT_VERSION,
        kind: kind.to_string(),
        payload,
    })?)
}

pub fn from_str<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T, NeuralError> {
    let c: Checkpoint<T> = serde_json::from_str(text)?;
    if c.format_version != FORMAT_VERSION {
        return Err(NeuralError::Checkpoint(format!(
            "format version {} (expected {FORMAT_VERSION})",
            c.format_version
        )));
    }
    if c.kind != kind {
        return Err(NeuralError::Checkpoint(format!("holds a {}, expected a {kind}", c.kind)));
    }
    Ok(c.payload)
}

pub fn save<T: Serialize>(path: &Path, kind: &str, payload: &T) -> Result<(), NeuralError> {
    fs::write(path, to_string(kind, payload)?)?;
    Ok(())
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, NeuralError> {
    from_str(kind, &fs::read_to_string(path)?)
}
