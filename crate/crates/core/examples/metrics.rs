//! Region and boundary scores for a shifted prediction and a swapped
//! two-target prediction.

use refer_engine::metrics;
use refer_engine::video_io::{Mask, Masklet};

fn square(id: usize, frames: usize, x0: u32, y0: u32, side: u32) -> Masklet {
    Masklet {
        target_id: id,
        masks: (0..frames)
            .map(|_| Mask::from_fn(64, 48, |x, y| (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y)))
            .collect(),
    }
}

fn main() -> anyhow::Result<()> {
    let gt = vec![square(0, 5, 10, 10, 16)];
    println!("default boundary tolerance for 64x48: {} px", metrics::default_tolerance(64, 48));
    for shift in [0, 1, 2, 4, 8] {
        let pred = vec![square(0, 5, 10 + shift, 10, 16)];
        let e = metrics::evaluate(&pred, &gt, None)?;
        println!("shift {shift}: J {:.3} F {:.3} J&F {:.3}", e.j, e.f, e.jf);
    }

    let gt = vec![square(0, 3, 4, 4, 10), square(1, 3, 40, 20, 12)];
    let pred = vec![square(7, 3, 40, 20, 12), square(9, 3, 5, 4, 10)];
    let e = metrics::evaluate(&pred, &gt, None)?;
    for t in &e.per_target {
        println!("gt {} <- pred {:?}: J {:.3} F {:.3}", t.gt_target_id, t.pred_target_id, t.j, t.f);
    }
    println!("mean J&F {:.3}", e.jf);
    Ok(())
}
