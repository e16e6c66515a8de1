//! YUV4MPEG2 ("Y4M") stream reader.
//!
//! Recognized colorspace tags: the C420 family (`420`, `420jpeg`,
//! `420mpeg2`, `420paldv`, `420p10`, `420p12`) and C444 (`444`, `444p10`,
//! `444p12`). 10- and 12-bit payloads are 16-bit little-endian per sample.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::{
    normalize_sample, ChromaSubsampling, FrameIoError, FrameSource, PlanarFrame, SampleRange,
};
use crate::plane::Plane;

const MAX_HEADER_LINE: usize = 4096;

/// Streaming Y4M decoder.
pub struct Y4mReader<R: Read> {
    input: R,
    width: usize,
    height: usize,
    subsampling: ChromaSubsampling,
    bit_depth: u8,
    fps: Option<(u32, u32)>,
    range: SampleRange,
    offset: u64,
    next_index: u64,
    payload: Vec<u8>,
}

impl Y4mReader<BufReader<File>> {
    /// Opens a `.y4m` file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, FrameIoError> {
        Y4mReader::from_reader(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> Y4mReader<R> {
    /// Parses the stream header and positions the reader at the first frame.
    pub fn from_reader(mut input: R) -> Result<Self, FrameIoError> {
        let mut offset = 0u64;
        let line = read_line(&mut input, &mut offset)?;
        let text = std::str::from_utf8(&line).map_err(|_| FrameIoError::MalformedHeader {
            offset: 0,
            detail: "header is not ASCII".into(),
        })?;
        let mut tokens = text.split(' ');
        match tokens.next() {
            Some("YUV4MPEG2") => {}
            _ => {
                return Err(FrameIoError::MalformedHeader {
                    offset: 0,
                    detail: "missing YUV4MPEG2 signature".into(),
                })
            }
        }

        let mut width = None;
        let mut height = None;
        let mut fps = None;
        let mut colorspace: Option<String> = None;
        let mut token_offset = "YUV4MPEG2".len() as u64;
        for tok in tokens {
            token_offset += 1; // separating space
            let bad = |detail: String| FrameIoError::MalformedHeader {
                offset: token_offset,
                detail,
            };
            let mut chars = tok.chars();
            match chars.next() {
                Some('W') => {
                    width = Some(
                        chars
                            .as_str()
                            .parse::<usize>()
                            .map_err(|e| bad(format!("bad width {:?}: {e}", tok)))?,
                    )
                }
                Some('H') => {
                    height = Some(
                        chars
                            .as_str()
                            .parse::<usize>()
                            .map_err(|e| bad(format!("bad height {:?}: {e}", tok)))?,
                    )
                }
                Some('F') => {
                    let (num, den) = chars
                        .as_str()
                        .split_once(':')
                        .ok_or_else(|| bad(format!("bad frame rate {:?}", tok)))?;
                    fps = Some((
                        num.parse::<u32>()
                            .map_err(|e| bad(format!("bad frame rate {:?}: {e}", tok)))?,
                        den.parse::<u32>()
                            .map_err(|e| bad(format!("bad frame rate {:?}: {e}", tok)))?,
                    ));
                }
                Some('I') => {
                    if chars.as_str() != "p" {
                        return Err(FrameIoError::UnsupportedInterlacing(tok.to_string()));
                    }
                }
                Some('C') => colorspace = Some(chars.as_str().to_string()),
                Some('A') | Some('X') => {}
                _ => return Err(bad(format!("unrecognized token {:?}", tok))),
            }
            token_offset += tok.len() as u64;
        }

        let width = width.ok_or_else(|| FrameIoError::MalformedHeader {
            offset,
            detail: "missing W token".into(),
        })?;
        let height = height.ok_or_else(|| FrameIoError::MalformedHeader {
            offset,
            detail: "missing H token".into(),
        })?;
        if width == 0 || height == 0 {
            return Err(FrameIoError::BadGeometry(format!(
                "degenerate frame size {width}x{height}"
            )));
        }

        let (subsampling, bit_depth) = match colorspace.as_deref() {
            // Y4M default is 4:2:0 when no C tag is present.
            None | Some("420") | Some("420jpeg") | Some("420mpeg2") | Some("420paldv") => {
                (ChromaSubsampling::C420, 8)
            }
            Some("420p10") => (ChromaSubsampling::C420, 10),
            Some("420p12") => (ChromaSubsampling::C420, 12),
            Some("444") => (ChromaSubsampling::C444, 8),
            Some("444p10") => (ChromaSubsampling::C444, 10),
            Some("444p12") => (ChromaSubsampling::C444, 12),
            Some(other) => return Err(FrameIoError::UnsupportedColorspace(other.to_string())),
        };

        let (cw, ch) = subsampling.chroma_dims(width, height);
        let bytes_per_sample = if bit_depth > 8 { 2 } else { 1 };
        let payload = vec![0u8; (width * height + 2 * cw * ch) * bytes_per_sample];

        Ok(Y4mReader {
            input,
            width,
            height,
            subsampling,
            bit_depth,
            fps,
            range: SampleRange::Full,
            offset,
            next_index: 0,
            payload,
        })
    }

    /// Selects full- or limited-range normalization (full is the default).
    pub fn with_range(mut self, range: SampleRange) -> Self {
        self.range = range;
        self
    }
}

impl<R: Read> FrameSource for Y4mReader<R> {
    fn next_frame(&mut self) -> Result<Option<PlanarFrame>, FrameIoError> {
        let marker = match read_line_or_eof(&mut self.input, &mut self.offset)? {
            None => return Ok(None),
            Some(line) => line,
        };
        if !marker.starts_with(b"FRAME") {
            return Err(FrameIoError::MalformedHeader {
                offset: self.offset - marker.len() as u64 - 1,
                detail: "expected FRAME marker".into(),
            });
        }

        let index = self.next_index;
        let mut payload = std::mem::take(&mut self.payload);
        read_exact_or_truncated(&mut self.input, &mut payload, index)?;
        self.offset += payload.len() as u64;

        let (cw, ch) = self.subsampling.chroma_dims(self.width, self.height);
        let n_y = self.width * self.height;
        let n_c = cw * ch;
        let bps = if self.bit_depth > 8 { 2 } else { 1 };

        let decode = |samples: &[u8], chroma: bool| -> Vec<f64> {
            if bps == 1 {
                samples
                    .iter()
                    .map(|&b| normalize_sample(b as u16, self.bit_depth, self.range, chroma))
                    .collect()
            } else {
                samples
                    .chunks_exact(2)
                    .map(|c| {
                        let code = u16::from_le_bytes([c[0], c[1]]);
                        normalize_sample(code, self.bit_depth, self.range, chroma)
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

    fn fps(&self) -> Option<(u32, u32)> {
        self.fps
    }
}

fn read_line(input: &mut impl Read, offset: &mut u64) -> Result<Vec<u8>, FrameIoError> {
    read_line_or_eof(input, offset)?.ok_or_else(|| FrameIoError::MalformedHeader {
        offset: *offset,
        detail: "unexpected end of stream".into(),
    })
}

/// Reads bytes up to (excluding) `\n`. `Ok(None)` on clean EOF at a line start.
fn read_line_or_eof(
    input: &mut impl Read,
    offset: &mut u64,
) -> Result<Option<Vec<u8>>, FrameIoError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = input.read(&mut byte)?;
        if n == 0 {
            if line.is_empty() {
                return Ok(None);
            }
            return Err(FrameIoError::MalformedHeader {
                offset: *offset + line.len() as u64,
                detail: "stream ended inside a header line".into(),
            });
        }
        *offset += 1;
        if byte[0] == b'\n' {
            return Ok(Some(line));
        }
        line.push(byte[0]);
        if line.len() > MAX_HEADER_LINE {
            return Err(FrameIoError::MalformedHeader {
                offset: *offset,
                detail: "header line exceeds maximum length".into(),
            });
        }
    }
}

fn read_exact_or_truncated(
    input: &mut impl Read,
    buf: &mut [u8],
    frame_index: u64,
) -> Result<(), FrameIoError> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = input.read(&mut buf[filled..])?;
        if n == 0 {
            return Err(FrameIoError::TruncatedFrame { frame_index });
        }
        filled += n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le16(values: &[u16]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn parses_10bit_420_zero_frame() {
        let mut data = b"YUV4MPEG2 W4 H4 F30:1 C420p10\nFRAME\n".to_vec();
        data.extend(le16(&[0u16; 16 + 4 + 4]));
        let mut r = Y4mReader::from_reader(&data[..]).unwrap();
        assert_eq!(r.fps(), Some((30, 1)));
        let f = r.next_frame().unwrap().unwrap();
        assert_eq!((f.width, f.height), (4, 4));
        assert_eq!(f.cb.dims(), (2, 2));
        assert!(f.y.iter().all(|&v| v == 0.0));
        assert_eq!(f.frame_index, 0);
        assert!(r.next_frame().unwrap().is_none());
    }

    #[test]
    fn ten_bit_full_scale_and_midpoint() {
        let mut data = b"YUV4MPEG2 W2 H2 F25:1 C420p10\nFRAME\n".to_vec();
        data.extend(le16(&[1023, 512, 0, 1023, 512, 512]));
        let mut r = Y4mReader::from_reader(&data[..]).unwrap();
        let f = r.next_frame().unwrap().unwrap();
        assert_eq!(f.y.get(0, 0), 1.0);
        assert!((f.y.get(1, 0) - 512.0 / 1023.0).abs() < 1e-15);
        assert_eq!(f.y.get(0, 1), 0.0);
    }

    #[test]
    fn eight_bit_default_colorspace() {
        let mut data = b"YUV4MPEG2 W2 H2 F25:1\nFRAME\n".to_vec();
        data.extend([255u8, 128, 0, 255, 10, 20]);
        let mut r = Y4mReader::from_reader(&data[..]).unwrap();
        assert_eq!(r.bit_depth(), 8);
        let f = r.next_frame().unwrap().unwrap();
        assert_eq!(f.y.get(0, 0), 1.0);
        assert!((f.y.get(1, 0) - 128.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_signature_with_offset() {
        match Y4mReader::from_reader(&b"JUNK W4 H4\n"[..]) {
            Err(FrameIoError::MalformedHeader { offset, .. }) => assert_eq!(offset, 0),
            Err(other) => panic!("unexpected error {other:?}"),
            Ok(_) => panic!("bad signature must not parse"),
        }
    }

    #[test]
    fn rejects_unsupported_colorspace_and_interlacing() {
        assert!(matches!(
            Y4mReader::from_reader(&b"YUV4MPEG2 W4 H4 F30:1 C422\nFRAME\n"[..]),
            Err(FrameIoError::UnsupportedColorspace(tag)) if tag == "422"
        ));
        assert!(matches!(
            Y4mReader::from_reader(&b"YUV4MPEG2 W4 H4 F30:1 It C420\n"[..]),
            Err(FrameIoError::UnsupportedInterlacing(_))
        ));
    }

    #[test]
    fn truncated_payload_names_frame_index() {
        let mut data = b"YUV4MPEG2 W4 H4 F30:1 C420p10\nFRAME\n".to_vec();
        data.extend(le16(&[0u16; 24]));
        data.extend(b"FRAME\n");
        data.extend(le16(&[0u16; 7])); // second frame cut short
        let mut r = Y4mReader::from_reader(&data[..]).unwrap();
        assert!(r.next_frame().unwrap().is_some());
        assert!(matches!(
            r.next_frame(),
            Err(FrameIoError::TruncatedFrame { frame_index: 1 })
        ));
    }
}
