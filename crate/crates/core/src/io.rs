//! File formats: the RAWF float-grid container, image loading, and the
//! fixed-precision float formatting used by all text outputs.
//!
//! RAWF layout: a 16-byte little-endian header (`b"RAWF"`, u32 height,
//! u32 width, u32 reserved) followed by `height * width` row-major f32
//! values.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Extent;
use crate::simulate::LatentField;
use crate::spectral::ImageGrid;

const RAWF_MAGIC: &[u8; 4] = b"RAWF";

/// Serializes a field as RAWF bytes (values narrowed to f32).
pub fn rawf_bytes(extent: Extent, values: &[f64]) -> Result<Vec<u8>> {
    if values.len() != extent.tokens() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values for {extent}", extent.tokens()),
            got: format!("{}", values.len()),
        });
    }
    let mut out = Vec::with_capacity(16 + 4 * values.len());
    out.extend_from_slice(RAWF_MAGIC);
    out.extend_from_slice(&(extent.height as u32).to_le_bytes());
    out.extend_from_slice(&(extent.width as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Parses RAWF bytes into an extent and f64 values.
pub fn parse_rawf(bytes: &[u8]) -> Result<(Extent, Vec<f64>)> {
    if bytes.len() < 16 || &bytes[0..4] != RAWF_MAGIC {
        return Err(Error::Image("missing RAWF magic".into()));
    }
    let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let height = read_u32(4) as usize;
    let width = read_u32(8) as usize;
    let extent = Extent::new(height, width)?;
    let expected = 16 + 4 * extent.tokens();
    if bytes.len() != expected {
        return Err(Error::Image(format!(
            "RAWF payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((extent, values))
}

pub fn write_rawf(path: &Path, field: &LatentField) -> Result<()> {
    write_atomic(path, &rawf_bytes(field.extent(), field.values())?)
}

pub fn read_rawf(path: &Path) -> Result<LatentField> {
    let (extent, values) = parse_rawf(&fs::read(path)?)?;
    LatentField::new(extent, values, 0, None)
}

/// Loads a grayscale image grid from PNG, PGM/PNM, or RAWF.
pub fn load_image(path: &Path) -> Result<ImageGrid> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    if ext == "rawf" {
        let (extent, values) = parse_rawf(&fs::read(path)?)?;
        return ImageGrid::new(extent.height, extent.width, values);
    }
    let img = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    let luma = img.to_luma32f();
    let (width, height) = (luma.width() as usize, luma.height() as usize);
    let pixels = luma.into_raw().into_iter().map(f64::from).collect();
    ImageGrid::new(height, width, pixels)
}

/// Loads every supported image in a directory, in sorted filename order.
/// Unreadable files are skipped and reported as warnings.
pub fn load_corpus(dir: &Path) -> Result<(Vec<ImageGrid>, Vec<String>)> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase),
                Some(ref ext) if ["png", "pgm", "pnm", "rawf"].contains(&ext.as_str())
            )
        })
        .collect();
    paths.sort();
    let mut images = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        match load_image(&path) {
            Ok(img) => images.push(img),
            Err(e) => warnings.push(format!("skipping {}: {e}", path.display())),
        }
    }
    Ok((images, warnings))
}

/// Writes bytes via a temporary file and rename, so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => Path::new(&format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        ))
        .to_path_buf(),
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Formats a float with 9 significant digits, the fixed precision of every
/// text output.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Rounds through the 9-significant-digit text form, for values that are
/// serialized as JSON numbers.
pub fn round_sig9(x: f64) -> f64 {
    fmt_sig9(x).parse().unwrap_or(x)
}
