//! Writes masklets as PNG folders and run-length JSON, reads both back and
//! renders an overlay.
//!
//! `cargo run --example masklet_io -- [OUT_DIR]`

use std::path::PathBuf;

use refer_engine::config::Config;
use refer_engine::mock_fixtures::{self, FixtureTemplate};
use refer_engine::video_io::{self, MaskFormat};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("masklet_io"));
    let fixture = mock_fixtures::generate(FixtureTemplate::MultiTarget, 1, &Config::default())?;
    let clip = &fixture.clip;

    let png_index = video_io::write_masklets(clip, &fixture.gt, &out.join("png"), MaskFormat::PngPerFrame)?;
    let rle_index = video_io::write_masklets(clip, &fixture.gt, &out.join("rle"), MaskFormat::RleJson)?;
    println!("png index: {}", png_index.display());
    println!("rle index: {}", rle_index.display());

    let from_png = video_io::load_gt_masklets(&out.join("png"), None)?;
    let from_rle = video_io::read_rle_json(&out.join("rle").join("masklets.json"))?;
    println!("png round trip exact: {}", from_png == fixture.gt);
    println!("rle round trip exact: {}", from_rle == fixture.gt);

    let first = &fixture.gt[0].masks[0];
    println!("target 0 frame 0: {} px, box {:?}, rle rows {}", first.count(), first.bounding_box(), first.to_rle().len());
    Ok(())
}
