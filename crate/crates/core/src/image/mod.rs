//! Featurewise EMP on RGB images.

mod metrics;
mod prune;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub use metrics::{psnr, psnr_channel, ssim, ssim_channel, PSNR_IDENTICAL};
pub use prune::{
    channel_scores, prune_image_global, prune_image_patch, prune_image_patch_with, Centering, ChannelReport, PruneOutcome,
};

pub const CHANNELS: usize = 3;

/// Three 8-bit planes (R, G, B), each row-major `width * height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageTensor {
    width: usize,
    height: usize,
    planes: [Vec<u8>; CHANNELS],
}

impl ImageTensor {
    pub fn new(width: usize, height: usize, planes: [Vec<u8>; CHANNELS]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::UnsupportedImage(format!("empty image {width}x{height}")));
        }
        if planes.iter().any(|p| p.len() != width * height) {
            return Err(Error::DimensionMismatch(format!(
                "planes must hold {} pixels each",
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    /// From interleaved `RGBRGB...` bytes.
    pub fn from_interleaved(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * CHANNELS {
            return Err(Error::DimensionMismatch(format!(
                "expected {} bytes of RGB data, got {}",
                width * height * CHANNELS,
                rgb.len()
            )));
        }
        let planes = std::array::from_fn(|c| rgb.iter().skip(c).step_by(CHANNELS).copied().collect());
        Self::new(width, height, planes)
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; CHANNELS]) -> Result<Self> {
        Self::new(width, height, rgb.map(|v| vec![v; width * height]))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn plane(&self, c: usize) -> &[u8] {
        &self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<u8>; CHANNELS] {
        &self.planes
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixel_count() * CHANNELS);
        for i in 0..self.pixel_count() {
            out.extend(self.planes.iter().map(|p| p[i]));
        }
        out
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Reads an 8-bit RGB PNG. Alpha, grayscale, palette and 16-bit images are
/// rejected.
pub fn read_png(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = decoder.read_info().map_err(|source| Error::PngDecode {
        path: path.to_path_buf(),
        source,
    })?;
    let info = reader.info();
    match (info.color_type, info.bit_depth) {
        (png::ColorType::Rgb, png::BitDepth::Eight) => {}
        (png::ColorType::Rgba | png::ColorType::GrayscaleAlpha, _) => {
            return Err(Error::UnsupportedImage(format!(
                "{} has an alpha channel; only 8-bit RGB is supported",
                path.display()
            )))
        }
        (ct, bd) => {
            return Err(Error::UnsupportedImage(format!(
                "{} is {ct:?} at {bd:?}; only 8-bit RGB is supported",
                path.display()
            )))
        }
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(width * height * CHANNELS)];
    let frame = reader.next_frame(&mut buf).map_err(|source| Error::PngDecode {
        path: path.to_path_buf(),
        source,
    })?;
    buf.truncate(frame.buffer_size());
    ImageTensor::from_interleaved(width, height, &buf)
}

pub fn encode_png<W: Write>(img: &ImageTensor, out: W) -> Result<()> {
    let mut encoder = png::Encoder::new(out, img.width as u32, img.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&img.to_interleaved())?;
    writer.finish()?;
    Ok(())
}

pub fn write_png(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_png(img, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleave_round_trip() {
        let rgb: Vec<u8> = (0..2 * 3 * 3).map(|v| v as u8).collect();
        let img = ImageTensor::from_interleaved(2, 3, &rgb).unwrap();
        assert_eq!(img.plane(0), &[0, 3, 6, 9, 12, 15]);
        assert_eq!(img.plane(2), &[2, 5, 8, 11, 14, 17]);
        assert_eq!(img.to_interleaved(), rgb);
        assert!(ImageTensor::from_interleaved(2, 3, &rgb[1..]).is_err());
        assert!(ImageTensor::filled(0, 3, [1, 2, 3]).is_err());
    }

    #[test]
    fn png_round_trip_is_bit_exact() {
        let rgb: Vec<u8> = (0..7 * 5 * 3).map(|v| (v * 37 % 256) as u8).collect();
        let img = ImageTensor::from_interleaved(7, 5, &rgb).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        write_png(&img, &path).unwrap();
        assert_eq!(read_png(&path).unwrap(), img);
    }

    #[test]
    fn alpha_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let mut enc = png::Encoder::new(File::create(&path).unwrap(), 2, 2);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.write_header().unwrap().write_image_data(&[0; 16]).unwrap();
        match read_png(&path) {
            Err(Error::UnsupportedImage(msg)) => assert!(msg.contains("alpha")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
