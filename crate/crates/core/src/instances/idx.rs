//! IDX binary format (the MNIST container): big-endian magic, dimension
//! sizes, then raw unsigned bytes.

use std::path::Path;

use crate::error::{OtError, Result};
use crate::instances::GrayImage;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(data: &[u8], offset: usize) -> Result<u32> {
    let bytes: [u8; 4] = data
        .get(offset..offset + 4)
        .and_then(|s| s.try_into().ok())
        .ok_or_else(|| OtError::Parse {
            offset,
            message: format!("truncated field: need 4 bytes, file has {}", data.len()),
        })?;
    Ok(u32::from_be_bytes(bytes))
}

/// Parses an IDX image file (magic 0x00000803) into square gray images with
/// raw byte intensities 0–255.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<GrayImage>> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| OtError::io(path, e))?;
    parse_idx_images(&data)
}

pub fn parse_idx_images(data: &[u8]) -> Result<Vec<GrayImage>> {
    let magic = read_u32(data, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(OtError::Parse {
            offset: 0,
            message: format!("bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let count = read_u32(data, 4)? as usize;
    let rows = read_u32(data, 8)? as usize;
    let cols = read_u32(data, 12)? as usize;
    if rows != cols {
        return Err(OtError::Parse {
            offset: 8,
            message: format!("non-square images {rows}x{cols} are not supported"),
        });
    }
    let pixel_count = rows * cols;
    let expected = 16 + count * pixel_count;
    if data.len() != expected {
        return Err(OtError::Parse {
            offset: data.len().min(expected),
            message: format!(
                "payload is {} bytes, header promises {expected} ({count} images of {rows}x{cols})",
                data.len()
            ),
        });
    }
    let mut images = Vec::with_capacity(count);
    for k in 0..count {
        let start = 16 + k * pixel_count;
        let intensities = data[start..start + pixel_count]
            .iter()
            .map(|&b| b as f64)
            .collect();
        images.push(GrayImage::new(rows, intensities)?);
    }
    Ok(images)
}

/// Parses an IDX label file (magic 0x00000801); labels pair with images by index.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| OtError::io(path, e))?;
    let magic = read_u32(&data, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(OtError::Parse {
            offset: 0,
            message: format!("bad magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let count = read_u32(&data, 4)? as usize;
    if data.len() != 8 + count {
        return Err(OtError::Parse {
            offset: data.len().min(8 + count),
            message: format!(
                "payload is {} bytes, header promises {}",
                data.len(),
                8 + count
            ),
        });
    }
    Ok(data[8..].to_vec())
}
