//! Versioned JSON container used for trees, forests, boosting models and
//! compressed forests:
//!
//! ```json
//! {"format": "tree", "version": 1, "payload": { ... }}
//! ```
//!
//! A tree payload is `{"nodes": [...], "n_features": p, "n_outputs": d}` where
//! node `i` of the array has id `i` and is either
//! `{"kind": "test", "feature", "threshold", "left", "right", "weighted_impurity_decrease", "n_samples", "weight"}`
//! or `{"kind": "leaf", "value": [...], "n_samples", "weight"}`.
//! Floats are written in shortest round-trip form, so reloading is exact.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::Tree;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Container<T> {
    pub format: String,
    pub version: u32,
    pub payload: T,
}

pub fn write_container<T: Serialize, W: Write>(format: &str, payload: &T, w: W) -> Result<()> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        format: &'a str,
        version: u32,
        payload: &'a T,
    }
    serde_json::to_writer(
        w,
        &Borrowed {
            format,
            version: FORMAT_VERSION,
            payload,
        },
    )?;
    Ok(())
}

pub fn read_container<T: DeserializeOwned, R: Read>(format: &str, r: R) -> Result<T> {
    let c: Container<T> = serde_json::from_reader(r)?;
    if c.format != format {
        return Err(Error::Unsupported(format!("expected a `{format}` container, found `{}`", c.format)));
    }
    if c.version != FORMAT_VERSION {
        return Err(Error::Unsupported(format!("container version {} is not supported", c.version)));
    }
    Ok(c.payload)
}

impl Tree {
    pub const FORMAT: &'static str = "tree";

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_container(Self::FORMAT, self, w)
    }

    /// Loads and validates a tree.
    pub fn load<R: Read>(r: R) -> Result<Tree> {
        let t: Tree = read_container(Self::FORMAT, r)?;
        Tree::from_nodes(t.nodes, t.n_features, t.n_outputs)
    }
}
