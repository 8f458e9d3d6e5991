//! MNIST IDX ingestion (`0x00000803` images, `0x00000801` labels, big-endian).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result, Shape};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

static TRAIN_IMAGES: &[u8] = include_bytes!("../../data/train-images-idx3-ubyte");
static TRAIN_LABELS: &[u8] = include_bytes!("../../data/train-labels-idx1-ubyte");
static TEST_IMAGES: &[u8] = include_bytes!("../../data/test-images-idx3-ubyte");
static TEST_LABELS: &[u8] = include_bytes!("../../data/test-labels-idx1-ubyte");

/// A grayscale digit with pixels in `[0, 1]` (row-major) and its class.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDigit {
    pub shape: Shape,
    pub pixels: Vec<f64>,
    pub label: u8,
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(bytes.len() as u64, format!("truncated {what} header")))
}

/// Parse IDX image and label buffers.
pub fn parse_mnist(images: &[u8], labels: &[u8]) -> Result<Vec<LabeledDigit>> {
    let magic = be_u32(images, 0, "image")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(0, format!("image magic {magic:#010x}, expected 0x00000803")));
    }
    let magic = be_u32(labels, 0, "label")?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(0, format!("label magic {magic:#010x}, expected 0x00000801")));
    }
    let count = be_u32(images, 4, "image")? as usize;
    let rows = be_u32(images, 8, "image")? as usize;
    let cols = be_u32(images, 12, "image")? as usize;
    let label_count = be_u32(labels, 4, "label")? as usize;
    if label_count != count {
        return Err(Error::format(
            4,
            format!("{count} images but {label_count} labels"),
        ));
    }
    let px = rows * cols;
    let need = 16 + count * px;
    if images.len() != need {
        return Err(Error::format(
            images.len().min(need) as u64,
            format!("image file holds {} bytes, expected {need}", images.len()),
        ));
    }
    if labels.len() != 8 + count {
        return Err(Error::format(
            labels.len().min(8 + count) as u64,
            format!("label file holds {} bytes, expected {}", labels.len(), 8 + count),
        ));
    }
    let shape = Shape::new(rows, cols);
    (0..count)
        .map(|i| {
            let label = labels[8 + i];
            if label > 9 {
                return Err(Error::format((8 + i) as u64, format!("label {label} outside 0..=9")));
            }
            let start = 16 + i * px;
            Ok(LabeledDigit {
                shape,
                pixels: images[start..start + px].iter().map(|&b| b as f64 / 255.0).collect(),
                label,
            })
        })
        .collect()
}

pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<Vec<LabeledDigit>> {
    parse_mnist(&std::fs::read(images_path)?, &std::fs::read(labels_path)?)
}

/// Write digits back as IDX; pixels are stored as `round(255·v)`.
pub fn write_idx<W1: Write, W2: Write>(digits: &[LabeledDigit], mut images: W1, mut labels: W2) -> Result<()> {
    let shape = digits.first().map_or(Shape::new(28, 28), |d| d.shape);
    if digits.iter().any(|d| d.shape != shape || d.pixels.len() != shape.len()) {
        return Err(Error::Data("all digits must share one shape".into()));
    }
    let mut img = Vec::with_capacity(16 + digits.len() * shape.len());
    img.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(digits.len() as u32).to_be_bytes());
    img.extend_from_slice(&(shape.rows as u32).to_be_bytes());
    img.extend_from_slice(&(shape.cols as u32).to_be_bytes());
    let mut lbl = Vec::with_capacity(8 + digits.len());
    lbl.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(digits.len() as u32).to_be_bytes());
    for d in digits {
        img.extend(d.pixels.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
        lbl.push(d.label);
    }
    images.write_all(&img)?;
    labels.write_all(&lbl)?;
    Ok(())
}

/// The bundled class-balanced 1024-digit training subset.
pub fn bundled_train() -> Vec<LabeledDigit> {
    parse_mnist(TRAIN_IMAGES, TRAIN_LABELS).expect("bundled training digits are valid IDX")
}

/// The bundled class-balanced 256-digit test subset.
pub fn bundled_test() -> Vec<LabeledDigit> {
    parse_mnist(TEST_IMAGES, TEST_LABELS).expect("bundled test digits are valid IDX")
}
