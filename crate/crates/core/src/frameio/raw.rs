//! Raw planar YUV (I420/I444) reader and writer.
//!
//! Plane order is Y, Cb, Cr. 8-bit samples are one byte; 10/12-bit samples
//! are two bytes little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{
    denormalize_sample, normalize_sample, ChromaSubsampling, FrameIoError, FrameSource,
    PlanarFrame, SampleRange,
};
use crate::plane::Plane;

fn frame_bytes(width: usize, height: usize, subsampling: ChromaSubsampling, depth: u8) -> u64 {
    let (cw, ch) = subsampling.chroma_dims(width, height);
    let samples = (width * height + 2 * cw * ch) as u64;
    samples * if depth > 8 { 2 } else { 1 }
}

fn check_depth(depth: u8) -> Result<(), FrameIoError> {
    match depth {
        8 | 10 | 12 => Ok(()),
        other => Err(FrameIoError::UnsupportedBitDepth(other)),
    }
}

/// Headerless planar YUV reader; geometry is supplied by the caller.
pub struct RawYuvReader<R: Read> {
    input: R,
    width: usize,
    height: usize,
    subsampling: ChromaSubsampling,
    bit_depth: u8,
    range: SampleRange,
    frame_count: u64,
    next_index: u64,
    payload: Vec<u8>,
}

impl RawYuvReader<BufReader<File>> {
    /// Opens a raw file, validating that its size is a whole number of frames.
    pub fn open(
        path: impl AsRef<Path>,
        width: usize,
        height: usize,
        bit_depth: u8,
        subsampling: ChromaSubsampling,
    ) -> Result<Self, FrameIoError> {
        check_depth(bit_depth)?;
        if width == 0 || height == 0 {
            return Err(FrameIoError::BadGeometry(format!(
                "degenerate frame size {width}x{height}"
            )));
        }
        let file = File::open(path)?;
        let size = file.metadata()?.len();
        let per_frame = frame_bytes(width, height, subsampling, bit_depth);
        if size % per_frame != 0 {
            return Err(FrameIoError::FrameSizeMismatch {
                expected: per_frame,
                actual: size,
            });
        }
        Ok(RawYuvReader {
            input: BufReader::new(file),
            width,
            height,
            subsampling,
            bit_depth,
            range: SampleRange::Full,
            frame_count: size / per_frame,
            next_index: 0,
            payload: vec![0u8; per_frame as usize],
        })
    }
}

impl<R: Read> RawYuvReader<R> {
    pub fn with_range(mut self, range: SampleRange) -> Self {
        self.range = range;
        self
    }
}

impl<R: Read> FrameSource for RawYuvReader<R> {
    fn next_frame(&mut self) -> Result<Option<PlanarFrame>, FrameIoError> {
        if self.next_index >= self.frame_count {
            return Ok(None);
        }
        let index = self.next_index;
        let mut payload = std::mem::take(&mut self.payload);
        let mut filled = 0;
        while filled < payload.len() {
            let n = self.input.read(&mut payload[filled..])?;
            if n == 0 {
                return Err(FrameIoError::TruncatedFrame { frame_index: index });
            }
            filled += n;
        }

        let (cw, ch) = self.subsampling.chroma_dims(self.width, self.height);
        let n_y = self.width * self.height;
        let n_c = cw * ch;
        let bps = if self.bit_depth > 8 { 2 } else { 1 };
        let decode = |bytes: &[u8], chroma: bool| -> Vec<f64> {
            if bps == 1 {
                bytes
                    .iter()
                    .map(|&b| normalize_sample(b as u16, self.bit_depth, self.range, chroma))
                    .collect()
            } else {
                bytes
                    .chunks_exact(2)
                    .map(|c| {
                        normalize_sample(
                            u16::from_le_bytes([c[0], c[1]]),
                            self.bit_depth,
                            self.range,
                            chroma,
                        )
                    })
                    .collect()
            }
        };

        let y = Plane::from_vec(
            decode(&payload[..n_y * bps], false),
            self.width,
            self.height,
        );
        let cb = Plane::from_vec(decode(&payload[n_y * bps..(n_y + n_c) * bps], true), cw, ch);
        let cr = Plane::from_vec(decode(&payload[(n_y + n_c) * bps..], true), cw, ch);
        self.payload = payload;
        self.next_index += 1;

        Ok(Some(PlanarFrame {
            y,
            cb,
            cr,
            width: self.width,
            height: self.height,
            subsampling: self.subsampling,
            bit_depth: self.bit_depth,
            frame_index: index,
        }))
    }

    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn subsampling(&self) -> ChromaSubsampling {
        self.subsampling
    }

    fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    fn frame_count(&self) -> Option<u64> {
        Some(self.frame_count)
    }
}

/// Appends frames to a raw planar YUV file at a fixed bit depth.
pub struct RawYuvWriter<W: Write> {
    output: W,
    bit_depth: u8,
}

impl RawYuvWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, bit_depth: u8) -> Result<Self, FrameIoError> {
        check_depth(bit_depth)?;
        Ok(RawYuvWriter {
            output: BufWriter::new(File::create(path)?),
            bit_depth,
        })
    }
}

impl<W: Write> RawYuvWriter<W> {
    pub fn from_writer(output: W, bit_depth: u8) -> Result<Self, FrameIoError> {
        check_depth(bit_depth)?;
        Ok(RawYuvWriter { output, bit_depth })
    }

    /// Quantizes normalized samples back to integer code values and writes
    /// one frame (full-range convention).
    pub fn write_frame(&mut self, frame: &PlanarFrame) -> Result<(), FrameIoError> {
        for plane in [&frame.y, &frame.cb, &frame.cr] {
            self.write_plane(plane)?;
        }
        Ok(())
    }

    fn write_plane(&mut self, plane: &Plane) -> Result<(), FrameIoError> {
        if self.bit_depth > 8 {
            for &v in plane.iter() {
                let code = denormalize_sample(v, self.bit_depth);
                self.output.write_all(&code.to_le_bytes())?;
            }
        } else {
            for &v in plane.iter() {
                self.output.write_all(&[denormalize_sample(v, 8) as u8])?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), FrameIoError> {
        self.output.flush()?;
        Ok(())
    }
}
