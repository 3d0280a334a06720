//! Regenerates the bundled mini-dataset.
//!
//! ```text
//! cargo run -p recsys-lens --example gen_mini_dataset > crates/core/data/mini.csv
//! ```

use recsys_lens::data::synth::{mini_dataset, MiniConfig};
use recsys_lens::data::{popularity_curve, rating_value_frequency, write_canonical};

fn main() -> recsys_lens::Result<()> {
    let dataset = mini_dataset(&MiniConfig::default())?;
    let stdout = std::io::stdout();
    write_canonical(&dataset, stdout.lock()).map_err(|e| recsys_lens::Error::Io {
        path: "<stdout>".into(),
        source: e,
    })?;

    let curve = popularity_curve(&dataset);
    eprintln!(
        "{} users, {} items, {} ratings; top item {} ratings, median item {}; values {:?}",
        dataset.num_users(),
        dataset.num_items(),
        dataset.len(),
        curve[0].1,
        curve[curve.len() / 2].1,
        rating_value_frequency(&dataset)
    );
    Ok(())
}
