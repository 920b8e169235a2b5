//! Renders the same selection under every layout mode and saves the canvases.
//!
//! `cargo run --example focus_layout -- [OUT_DIR]`

use std::path::PathBuf;

use refer_engine::config::{Config, LayoutMode};
use refer_engine::focus_layout::{compose, plan_for_mode};
use refer_engine::mock_fixtures::{self, FixtureTemplate};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("focus_layout"));
    std::fs::create_dir_all(&out)?;
    let fixture = mock_fixtures::generate(FixtureTemplate::SingleTarget, 0, &Config::default())?;
    let clip = &fixture.clip;
    let selected = [2, 6, 9, 13, 17];
    let keyframe = 9;

    for mode in [LayoutMode::DynamicFocus, LayoutMode::UniformGrid, LayoutMode::SingleKeyframe] {
        let plan = plan_for_mode(mode, &selected, keyframe, clip.len())?;
        let canvas = compose(clip, &plan, 96, 96, true)?;
        let path = out.join(format!("{mode:?}.png").to_lowercase());
        canvas.image.save(&path)?;
        println!("{mode:?}: frames={:?} extras={:?} {}x{}", plan.frames(), plan.extras, canvas.width, canvas.height);
        for s in &canvas.slots {
            println!("  frame {:>2} at ({}, {})-({}, {}){}", s.frame_index, s.rect.x0, s.rect.y0, s.rect.x1, s.rect.y1,
                if s.is_keyframe { " keyframe" } else { "" });
        }
        println!("  legend: {}", canvas.legend());
        println!("  saved {}", path.display());
    }
    Ok(())
}
