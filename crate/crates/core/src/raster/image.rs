use std::io::Write;
use std::path::Path;

use super::{FaceId, RenderedView, BACKGROUND};
use crate::error::{Error, Result};

/// Distinct, stable color per face. Background is black.
pub fn face_color(id: FaceId) -> [u8; 3] {
    let h = (id.actor_id as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((id.face_index as u64 + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
    let h = h ^ (h >> 29);
    let mut rgb = [(h >> 8) as u8, (h >> 24) as u8, (h >> 40) as u8];
    // keep faces visibly distinct from the background
    if rgb.iter().all(|&c| c < 32) {
        rgb[0] |= 0x80;
    }
    rgb
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Binary PPM (P6) of the id buffer.
pub fn write_id_ppm(view: &RenderedView, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = format!("P6\n{} {}\n255\n", view.width, view.height).into_bytes();
    bytes.reserve(view.id_buffer.len() * 3);
    for &slot in &view.id_buffer {
        let rgb = match slot {
            BACKGROUND => [0, 0, 0],
            s => face_color(view.faces.id(s)),
        };
        bytes.extend_from_slice(&rgb);
    }
    write_file(path.as_ref(), &bytes)
}

/// 16-bit binary PGM (P5) of the depth buffer in millimeters, saturating at
/// 65534; empty pixels are 65535.
pub fn write_depth_pgm(view: &RenderedView, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n65535\n", view.width, view.height).into_bytes();
    bytes.reserve(view.depth_buffer.len() * 2);
    for &d in &view.depth_buffer {
        let v: u16 = if d.is_finite() {
            (d * 1000.0).round().clamp(0.0, 65534.0) as u16
        } else {
            u16::MAX
        };
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    write_file(path.as_ref(), &bytes)
}
