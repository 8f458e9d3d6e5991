//! Reading and writing MNIST IDX files.
//!
//! With `MNIST_DIR` set, loads the official test set from there; otherwise
//! round-trips the bundled subset through IDX bytes.

use insitu::tasks::mnist::bundled_test;
use insitu::tasks::{load_mnist, parse_mnist, write_idx};

fn main() -> insitu::Result<()> {
    let digits = match std::env::var_os("MNIST_DIR") {
        Some(dir) => {
            let dir = std::path::PathBuf::from(dir);
            load_mnist(&dir.join("t10k-images-idx3-ubyte"), &dir.join("t10k-labels-idx1-ubyte"))?
        }
        None => bundled_test(),
    };
    let mut counts = [0usize; 10];
    for d in &digits {
        counts[d.label as usize] += 1;
    }
    println!("{} digits, per class {counts:?}", digits.len());

    let (mut images, mut labels) = (Vec::new(), Vec::new());
    write_idx(&digits, &mut images, &mut labels)?;
    let back = parse_mnist(&images, &labels)?;
    println!("{} image bytes, {} label bytes, round trip exact: {}", images.len(), labels.len(), back == digits);
    Ok(())
}
