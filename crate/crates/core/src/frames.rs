//! Decoded frames and the on-disk formats they are read from.
//!
//! Planar file layout: a 16-byte header of four big-endian `u32` values
//! `H, W, C, F`, followed by `F` frames. Each frame is `C` planes of `H x W`
//! bytes, every plane row-major.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use base64::Engine;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("frame sequence is empty")]
    Empty,
    #[error("channels must be 1 or 3, got {0}")]
    Channels(usize),
    #[error("frame {index} has shape {got:?}, expected {expected:?}")]
    Shape {
        index: usize,
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    #[error("frame data has {got} bytes, expected {expected}")]
    DataLength { expected: usize, got: usize },
    #[error("truncated planar file: {0}")]
    Truncated(String),
    #[error("no image files in {0}")]
    NoImages(PathBuf),
    #[error("image {path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("frame range {start}..{end} is outside 0..{len}")]
    Range { start: usize, end: usize, len: usize },
    #[error("bad frame encoding: {0}")]
    Encoding(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One frame stored channel-planar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        if channels != 1 && channels != 3 {
            return Err(FrameError::Channels(channels));
        }
        let expected = height * width * channels;
        if data.len() != expected || expected == 0 {
            return Err(FrameError::DataLength {
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Result<Self, FrameError> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.data[channel * self.height * self.width + row * self.width + col]
    }

    pub fn to_payload(&self) -> FramePayload {
        FramePayload {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data_b64: base64::engine::general_purpose::STANDARD.encode(&self.data),
        }
    }

    pub fn from_payload(p: &FramePayload) -> Result<Self, FrameError> {
        let data = base64::engine::general_purpose::STANDARD
            .decode(&p.data_b64)
            .map_err(|e| FrameError::Encoding(e.to_string()))?;
        Self::new(p.height, p.width, p.channels, data)
    }
}

/// JSON form of a frame sent to backends: planar bytes, base64 encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePayload {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data_b64: String,
}

/// File extension of the planar frame format.
pub const PLANAR_EXTENSION: &str = "frames";

/// Frames sharing one shape; at least one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self, FrameError> {
        let first = frames.first().ok_or(FrameError::Empty)?.shape();
        if let Some((index, f)) = frames.iter().enumerate().find(|(_, f)| f.shape() != first) {
            return Err(FrameError::Shape {
                index,
                expected: first,
                got: f.shape(),
            });
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(height, width, channels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.frames[0].shape()
    }

    /// Frames `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self, FrameError> {
        let len = self.frames.len();
        let frames = self
            .frames
            .get(start..end)
            .ok_or(FrameError::Range { start, end, len })?;
        Self::new(frames.to_vec())
    }

    pub fn read_planar(mut reader: impl Read) -> Result<Self, FrameError> {
        let mut header = [0u8; 16];
        reader
            .read_exact(&mut header)
            .map_err(|e| FrameError::Truncated(format!("header: {e}")))?;
        let field = |i: usize| u32::from_be_bytes(header[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
        let (h, w, c, f) = (field(0), field(1), field(2), field(3));
        if f == 0 {
            return Err(FrameError::Empty);
        }
        let mut frames = Vec::with_capacity(f);
        for index in 0..f {
            let mut data = vec![0u8; h * w * c];
            reader
                .read_exact(&mut data)
                .map_err(|e| FrameError::Truncated(format!("frame {index}: {e}")))?;
            frames.push(Frame::new(h, w, c, data)?);
        }
        Self::new(frames)
    }

    pub fn write_planar(&self, mut writer: impl Write) -> io::Result<()> {
        let (h, w, c) = self.shape();
        for v in [h, w, c, self.len()] {
            writer.write_all(&(v as u32).to_be_bytes())?;
        }
        for f in &self.frames {
            writer.write_all(&f.data)?;
        }
        Ok(())
    }

    /// Reads the header of a planar file only.
    pub fn planar_frame_count(path: &Path) -> Result<usize, FrameError> {
        let mut header = [0u8; 16];
        fs::File::open(path)?
            .read_exact(&mut header)
            .map_err(|e| FrameError::Truncated(format!("header: {e}")))?;
        Ok(u32::from_be_bytes(header[12..16].try_into().unwrap()) as usize)
    }

    /// Loads numbered image files from a directory, ordered by file name.
    /// Grayscale images become single-channel frames, everything else RGB.
    pub fn read_image_dir(dir: &Path) -> Result<Self, FrameError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
            })
            .collect();
        if paths.is_empty() {
            return Err(FrameError::NoImages(dir.to_path_buf()));
        }
        paths.sort();
        let frames = paths
            .iter()
            .map(|path| {
                let img = image::open(path).map_err(|source| FrameError::Image {
                    path: path.clone(),
                    source,
                })?;
                Ok(frame_from_image(&img))
            })
            .collect::<Result<Vec<_>, FrameError>>()?;
        Self::new(frames)
    }

    /// Opens a planar file, or an image directory when `path` is a directory.
    pub fn open(path: &Path) -> Result<Self, FrameError> {
        if path.is_dir() {
            Self::read_image_dir(path)
        } else {
            Self::read_planar(io::BufReader::new(fs::File::open(path)?))
        }
    }
}

fn frame_from_image(img: &image::DynamicImage) -> Frame {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().channel_count() <= 2 {
        let gray = img.to_luma8();
        Frame::new(h, w, 1, gray.into_raw()).expect("image shape is consistent")
    } else {
        let rgb = img.to_rgb8();
        let mut data = vec![0u8; h * w * 3];
        for (idx, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                data[c * h * w + idx] = px.0[c];
            }
        }
        Frame::new(h, w, 3, data).expect("image shape is consistent")
    }
}
