//! Layouts and demonstrations shipped under `data/`.

use std::path::PathBuf;

use crate::expert::{Demonstration, ExpertError};
use crate::gridworld::{GridError, Layout};

pub const SHIPPED_LAYOUTS: [&str; 7] = ["source", "cilantro", "cilantro-left", "small-corridor", "corridor", "tiny", "trivial"];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn layout_path(name: &str) -> PathBuf {
    data_dir().join("layouts").join(format!("{name}.layout"))
}

pub fn demo_path(name: &str) -> PathBuf {
    data_dir().join("demos").join(format!("{name}.jsonl"))
}

pub fn shipped_layout(name: &str) -> Result<Layout, GridError> {
    Layout::load(&layout_path(name))
}

pub fn shipped_demo(name: &str) -> Result<(Layout, Demonstration), ExpertError> {
    let layout = shipped_layout(name)?;
    let demo = Demonstration::load(&demo_path(name), &layout)?;
    Ok((layout, demo))
}
