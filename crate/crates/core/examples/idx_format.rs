// MNIST-style IDX encoding and parsing of a small dataset.

use dp_rsa::data::{encode_idx_images, encode_idx_labels, parse_idx, Dataset};

pub fn run_example() -> dp_rsa::Result<Dataset> {
    // Two 2x2 images with pixel values already in [0, 1].
    let features = vec![0.0, 1.0, 0.5, 0.25, 1.0, 0.0, 0.0, 1.0];
    let original = Dataset::new(features, 4, vec![3, 7], 10)?;
    let images = encode_idx_images(&original, 2, 2)?;
    let labels = encode_idx_labels(&original)?;
    parse_idx(&images, &labels, "images", "labels")
}

fn main() -> dp_rsa::Result<()> {
    let ds = run_example()?;
    println!("{} images of dimension {}, labels {:?}", ds.len(), ds.dim(), ds.labels());
    Ok(())
}
