//! Float raster files: a 16-byte header (`HPXF`, width, height, channels as
//! little-endian u32) followed by row-major, channel-interleaved f32 samples.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const RASTER_MAGIC: [u8; 4] = *b"HPXF";

#[derive(Debug, Clone, PartialEq)]
pub struct PixelRaster {
    width: u32,
    height: u32,
    channels: u32,
    data: Vec<f32>,
}

impl PixelRaster {
    pub fn new(width: u32, height: u32, channels: u32, data: Vec<f32>) -> Result<Self> {
        if !(1..=2).contains(&channels) {
            return Err(Error::InvalidParameter(format!(
                "raster channel count must be 1 or 2, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{width}x{height}x{channels} = {expected} samples"),
                found: format!("{} samples", data.len()),
            });
        }
        Ok(PixelRaster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn expect_channels(&self, channels: u32) -> Result<()> {
        if self.channels != channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{channels} channel(s)"),
                found: format!("{} channel(s)", self.channels),
            });
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&RASTER_MAGIC)?;
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&self.height.to_le_bytes())?;
        w.write_all(&self.channels.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|_| Error::MalformedHeader("raster header shorter than 16 bytes".into()))?;
        if header[0..4] != RASTER_MAGIC {
            return Err(Error::MalformedHeader(format!(
                "bad raster magic {:?}",
                &header[0..4]
            )));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        let (width, height, channels) = (word(4), word(8), word(12));
        if !(1..=2).contains(&channels) {
            return Err(Error::MalformedHeader(format!(
                "raster channel count {channels} not in 1..=2"
            )));
        }
        let n = width as usize * height as usize * channels as usize;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < n * 4 {
            return Err(Error::Truncated(format!(
                "raster payload has {} bytes, expected {}",
                bytes.len(),
                n * 4
            )));
        }
        if bytes.len() > n * 4 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} payload bytes", n * 4),
                found: format!("{} payload bytes", bytes.len()),
            });
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        PixelRaster::new(width, height, channels, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        PixelRaster::read_from(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_two_channel() {
        let r = PixelRaster::new(2, 1, 2, vec![1.0, -0.5, f32::INFINITY, 0.25]).unwrap();
        let mut buf = Vec::new();
        r.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 16);
        assert_eq!(PixelRaster::read_from(&buf[..]).unwrap(), r);
    }

    #[test]
    fn distinct_errors() {
        let r = PixelRaster::new(2, 2, 1, vec![0.0; 4]).unwrap();
        let mut buf = Vec::new();
        r.write_to(&mut buf).unwrap();
        assert!(matches!(
            PixelRaster::read_from(&buf[..10]),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            PixelRaster::read_from(&buf[..20]),
            Err(Error::Truncated(_))
        ));
        let mut long = buf.clone();
        long.extend_from_slice(&[0; 4]);
        assert!(matches!(
            PixelRaster::read_from(&long[..]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            PixelRaster::read_from(&bad[..]),
            Err(Error::MalformedHeader(_))
        ));
    }
}
