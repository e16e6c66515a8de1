//! Video ingestion: Y4M and raw planar YUV decoding into normalized frames,
//! plus lockstep iteration over a (reference, test) pair of videos.
//!
//! Samples are normalized to `[0, 1]` by `2^bit_depth - 1` immediately at
//! ingestion; all downstream math operates in normalized code-value space.

mod raw;
mod y4m;

pub use raw::{RawYuvReader, RawYuvWriter};
pub use y4m::Y4mReader;

use crate::plane::Plane;

/// Chroma layout of a decoded frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ChromaSubsampling {
    /// 4:2:0: chroma planes are `ceil(w/2) x ceil(h/2)`.
    C420,
    /// 4:4:4: chroma planes are full resolution.
    C444,
}

impl ChromaSubsampling {
    /// Chroma plane dimensions for a given luma geometry.
    pub fn chroma_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            ChromaSubsampling::C420 => (width.div_ceil(2), height.div_ceil(2)),
            ChromaSubsampling::C444 => (width, height),
        }
    }
}

impl std::str::FromStr for ChromaSubsampling {
    type Err = FrameIoError;

    fn from_str(s: &str) -> Result<Self, FrameIoError> {
        match s {
            "420" => Ok(ChromaSubsampling::C420),
            "444" => Ok(ChromaSubsampling::C444),
            other => Err(FrameIoError::UnsupportedColorspace(other.to_string())),
        }
    }
}

/// Code-value range convention of the source samples.
///
/// `Full` maps `[0, 2^b-1]` onto `[0, 1]`. `Limited` maps the broadcast legal
/// range (luma `16..235`, chroma `16..240`, scaled by `2^(b-8)`) onto `[0, 1]`
/// and clamps out-of-range codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleRange {
    #[default]
    Full,
    Limited,
}

/// One decoded video frame: normalized planes plus source metadata.
#[derive(Debug, Clone)]
pub struct PlanarFrame {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
    pub width: usize,
    pub height: usize,
    pub subsampling: ChromaSubsampling,
    /// Bit depth of the source samples (8, 10, or 12).
    pub bit_depth: u8,
    pub frame_index: u64,
}

impl PlanarFrame {
    /// Builds a frame from planes, checking the geometry invariants.
    pub fn new(
        y: Plane,
        cb: Plane,
        cr: Plane,
        subsampling: ChromaSubsampling,
        bit_depth: u8,
        frame_index: u64,
    ) -> Result<Self, FrameIoError> {
        let (width, height) = y.dims();
        let expect = subsampling.chroma_dims(width, height);
        if cb.dims() != expect || cr.dims() != expect {
            return Err(FrameIoError::BadGeometry(format!(
                "chroma planes {}x{} / {}x{} do not match {}x{} luma at {:?}",
                cb.width(),
                cb.height(),
                cr.width(),
                cr.height(),
                width,
                height,
                subsampling
            )));
        }
        Ok(PlanarFrame {
            y,
            cb,
            cr,
            width,
            height,
            subsampling,
            bit_depth,
            frame_index,
        })
    }

    /// A gray (all-half) frame, handy in tests and synthesis.
    pub fn gray(
        width: usize,
        height: usize,
        subsampling: ChromaSubsampling,
        bit_depth: u8,
    ) -> Self {
        let (cw, ch) = subsampling.chroma_dims(width, height);
        PlanarFrame {
            y: Plane::constant(width, height, 0.5),
            cb: Plane::constant(cw, ch, 0.5),
            cr: Plane::constant(cw, ch, 0.5),
            width,
            height,
            subsampling,
            bit_depth,
            frame_index: 0,
        }
    }
}

/// A sequential, single-consumer source of decoded frames.
pub trait FrameSource {
    /// Next frame in display order, or `None` at end of stream.
    fn next_frame(&mut self) -> Result<Option<PlanarFrame>, FrameIoError>;

    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn subsampling(&self) -> ChromaSubsampling;
    fn bit_depth(&self) -> u8;

    /// Total frame count when the container makes it knowable upfront.
    fn frame_count(&self) -> Option<u64> {
        None
    }

    /// Frame rate as a rational, metadata only.
    fn fps(&self) -> Option<(u32, u32)> {
        None
    }
}

/// An in-memory frame source, used by tests and the synthetic generator.
pub struct MemorySource {
    frames: std::vec::IntoIter<PlanarFrame>,
    width: usize,
    height: usize,
    subsampling: ChromaSubsampling,
    bit_depth: u8,
    total: u64,
    next_index: u64,
}

impl MemorySource {
    /// Panics if `frames` is empty or frames disagree on geometry.
    pub fn new(frames: Vec<PlanarFrame>) -> Self {
        let first = frames.first().expect("MemorySource requires >= 1 frame");
        let (width, height) = (first.width, first.height);
        let (subsampling, bit_depth) = (first.subsampling, first.bit_depth);
        assert!(
            frames
                .iter()
                .all(|f| f.width == width && f.height == height && f.subsampling == subsampling),
            "MemorySource frames must share geometry"
        );
        let total = frames.len() as u64;
        MemorySource {
            frames: frames.into_iter(),
            width,
            height,
            subsampling,
            bit_depth,
            total,
            next_index: 0,
        }
    }
}

impl FrameSource for MemorySource {
    fn next_frame(&mut self) -> Result<Option<PlanarFrame>, FrameIoError> {
        Ok(self.frames.next().map(|mut f| {
            f.frame_index = self.next_index;
            self.next_index += 1;
            f
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
        Some(self.total)
    }
}

/// Lockstep iteration over a reference and a test video.
pub struct VideoPairStream {
    reference: Box<dyn FrameSource>,
    test: Box<dyn FrameSource>,
    next_index: u64,
}

impl VideoPairStream {
    pub fn new(reference: Box<dyn FrameSource>, test: Box<dyn FrameSource>) -> Self {
        VideoPairStream {
            reference,
            test,
            next_index: 0,
        }
    }

    /// Frame count when both sources know theirs.
    pub fn frame_count(&self) -> Option<u64> {
        match (self.reference.frame_count(), self.test.frame_count()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        }
    }

    pub fn fps(&self) -> Option<(u32, u32)> {
        self.reference.fps()
    }

    /// Next lockstep pair, or `None` when both streams end together.
    ///
    /// One stream ending before the other is a [`FrameIoError::LengthMismatch`];
    /// differing frame dimensions are a [`FrameIoError::DimensionMismatch`].
    pub fn next_pair(&mut self) -> Result<Option<(PlanarFrame, PlanarFrame)>, FrameIoError> {
        let r = self.reference.next_frame()?;
        let t = self.test.next_frame()?;
        match (r, t) {
            (None, None) => Ok(None),
            (Some(_), None) => Err(FrameIoError::LengthMismatch {
                ended_first: "test",
                frames: self.next_index,
            }),
            (None, Some(_)) => Err(FrameIoError::LengthMismatch {
                ended_first: "reference",
                frames: self.next_index,
            }),
            (Some(mut r), Some(mut t)) => {
                if (r.width, r.height) != (t.width, t.height) || r.subsampling != t.subsampling {
                    return Err(FrameIoError::DimensionMismatch {
                        reference: (r.width, r.height),
                        test: (t.width, t.height),
                    });
                }
                r.frame_index = self.next_index;
                t.frame_index = self.next_index;
                self.next_index += 1;
                Ok(Some((r, t)))
            }
        }
    }
}

/// Normalizes an integer code value to `[0, 1]`.
pub(crate) fn normalize_sample(code: u16, bit_depth: u8, range: SampleRange, chroma: bool) -> f64 {
    let max = ((1u32 << bit_depth) - 1) as f64;
    match range {
        SampleRange::Full => (code as f64).min(max) / max,
        SampleRange::Limited => {
            let scale = (1u32 << (bit_depth - 8)) as f64;
            let lo = 16.0 * scale;
            let span = if chroma { 224.0 } else { 219.0 } * scale;
            ((code as f64 - lo) / span).clamp(0.0, 1.0)
        }
    }
}

/// Inverse of full-range normalization: round back to an integer code value.
pub(crate) fn denormalize_sample(value: f64, bit_depth: u8) -> u16 {
    let max = ((1u32 << bit_depth) - 1) as f64;
    (value * max).round().clamp(0.0, max) as u16
}

/// Errors from video decoding and pair iteration.
#[derive(Debug, thiserror::Error)]
pub enum FrameIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed Y4M header at byte {offset}: {detail}")]
    MalformedHeader { offset: u64, detail: String },
    #[error("unsupported colorspace tag {0:?}")]
    UnsupportedColorspace(String),
    #[error("unsupported interlacing mode {0:?} (only progressive streams are read)")]
    UnsupportedInterlacing(String),
    #[error("truncated payload in frame {frame_index}")]
    TruncatedFrame { frame_index: u64 },
    #[error("file size {actual} bytes is not a multiple of the {expected}-byte frame size")]
    FrameSizeMismatch { expected: u64, actual: u64 },
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("unsupported bit depth {0} (expected 8, 10, or 12)")]
    UnsupportedBitDepth(u8),
    #[error("{ended_first} stream ended after {frames} frames while the other continues")]
    LengthMismatch {
        ended_first: &'static str,
        frames: u64,
    },
    #[error("frame dimensions differ: reference {}x{}, test {}x{}", reference.0, reference.1, test.0, test.1)]
    DimensionMismatch {
        reference: (usize, usize),
        test: (usize, usize),
    },
}
