//! File formats: PNG images and label maps, and the PRB1 probability container.
//!
//! PRB1 layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "PRB1"
//! 4       4           width    (u32)
//! 8       4           height   (u32)
//! 12      4           channels (u32)
//! 16      4*W*H*K     channel planes, each H rows of W f32 values
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{EdgeWeightGrid, ImageRgb, LabelMap, ProbMap, MAX_LABELS, UNLABELED};

pub const PRB1_MAGIC: [u8; 4] = *b"PRB1";
pub const PRB1_HEADER_LEN: u64 = 16;

/// Decoded PRB1 header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prb1Header {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
}

impl Prb1Header {
    pub fn parse(bytes: &[u8; 16]) -> Result<Self> {
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != PRB1_MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let header = Prb1Header {
            width: word(4),
            height: word(8),
            channels: word(12),
        };
        if header.width == 0 || header.height == 0 || header.channels == 0 {
            return Err(Error::OutOfRange {
                field: "header",
                detail: format!(
                    "width, height and channels must be >= 1, got {}x{}x{}",
                    header.width, header.height, header.channels
                ),
            });
        }
        Ok(header)
    }

    pub fn to_bytes(self) -> [u8; 16] {
        let mut out = [0u8; 16];
        out[0..4].copy_from_slice(&PRB1_MAGIC);
        out[4..8].copy_from_slice(&self.width.to_le_bytes());
        out[8..12].copy_from_slice(&self.height.to_le_bytes());
        out[12..16].copy_from_slice(&self.channels.to_le_bytes());
        out
    }

    /// Total file length implied by the header.
    pub fn file_len(self) -> u64 {
        PRB1_HEADER_LEN
            + 4 * u64::from(self.width) * u64::from(self.height) * u64::from(self.channels)
    }
}

pub fn load_prb(path: impl AsRef<Path>) -> Result<ProbMap> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let actual = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut reader = BufReader::new(file);

    if actual < PRB1_HEADER_LEN {
        return Err(Error::Truncated {
            expected: PRB1_HEADER_LEN,
            actual,
        });
    }
    let mut head = [0u8; 16];
    reader
        .read_exact(&mut head)
        .map_err(|e| Error::io(path, e))?;
    let header = Prb1Header::parse(&head)?;

    let expected = header.file_len();
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::InvalidArgument(format!(
            "{}: {} trailing bytes after PRB1 payload",
            path.display(),
            actual - expected
        )));
    }

    let mut raw = vec![0u8; (expected - PRB1_HEADER_LEN) as usize];
    reader
        .read_exact(&mut raw)
        .map_err(|e| Error::io(path, e))?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    ProbMap::new(
        header.width as usize,
        header.height as usize,
        header.channels as usize,
        data,
    )
}

fn dim_u32(field: &'static str, v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::OutOfRange {
        field,
        detail: format!("{v} does not fit in u32"),
    })
}

/// Writes raw planes in PRB1 layout.
pub fn write_prb_planes(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    channels: usize,
    data: impl IntoIterator<Item = f32>,
) -> Result<()> {
    let path = path.as_ref();
    let header = Prb1Header {
        width: dim_u32("width", width)?,
        height: dim_u32("height", height)?,
        channels: dim_u32("channels", channels)?,
    };
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::ZeroSize { width, height });
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&header.to_bytes())
        .map_err(|e| Error::io(path, e))?;
    let mut written = 0usize;
    for v in data {
        w.write_all(&v.to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
        written += 1;
    }
    if written != width * height * channels {
        return Err(Error::DimensionMismatch {
            field: "data",
            expected: width * height * channels,
            actual: written,
        });
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_prb(map: &ProbMap, path: impl AsRef<Path>) -> Result<()> {
    write_prb_planes(
        path,
        map.width(),
        map.height(),
        map.channels(),
        map.data().iter().copied(),
    )
}

/// Exports the horizontal and vertical weight planes as two single-channel PRB1 files.
///
/// The horizontal plane is `height x (width - 1)`, the vertical one `(height - 1) x width`.
pub fn save_edge_weights(
    grid: &EdgeWeightGrid,
    horizontal_path: impl AsRef<Path>,
    vertical_path: impl AsRef<Path>,
) -> Result<()> {
    let (w, h) = (grid.width(), grid.height());
    write_prb_planes(
        horizontal_path,
        w.saturating_sub(1),
        h,
        1,
        grid.horizontal().iter().map(|&v| v as f32),
    )?;
    write_prb_planes(
        vertical_path,
        w,
        h.saturating_sub(1),
        1,
        grid.vertical().iter().map(|&v| v as f32),
    )
}

fn open_png(path: &Path) -> Result<png::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder =
        png::Decoder::new_with_limits(BufReader::new(file), png::Limits { bytes: 1 << 33 });
    decoder.set_transformations(png::Transformations::IDENTITY);
    decoder.read_info().map_err(|source| Error::PngDecode {
        path: path.to_path_buf(),
        source,
    })
}

fn read_frame(path: &Path, reader: &mut png::Reader<BufReader<File>>) -> Result<Vec<u8>> {
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedPng(format!("{}: image too large", path.display())))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|source| Error::PngDecode {
            path: path.to_path_buf(),
            source,
        })?;
    buf.truncate(frame.buffer_size());
    Ok(buf)
}

/// Loads an 8- or 16-bit grayscale or RGB PNG, scaling intensities to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let path = path.as_ref();
    let mut reader = open_png(path)?;
    let info = reader.info();
    let (width, height) = (info.width as usize, info.height as usize);
    if info.interlaced {
        return Err(Error::UnsupportedPng(format!(
            "{}: interlaced PNGs are not supported",
            path.display()
        )));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::UnsupportedPng(format!(
                "{}: color type {other:?} (expected grayscale or RGB)",
                path.display()
            )))
        }
    };
    let depth = info.bit_depth;
    let buf = read_frame(path, &mut reader)?;
    let data: Vec<f32> = match depth {
        png::BitDepth::Eight => buf.iter().map(|&v| f32::from(v) / 255.0).collect(),
        png::BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|b| f32::from(u16::from_be_bytes([b[0], b[1]])) / 65535.0)
            .collect(),
        other => {
            return Err(Error::UnsupportedPng(format!(
                "{}: bit depth {other:?} (expected 8 or 16)",
                path.display()
            )))
        }
    };
    ImageRgb::new(width, height, channels, data)
}

/// Writes an image as 8-bit PNG (values rounded to the nearest level).
pub fn save_image(img: &ImageRgb, path: impl AsRef<Path>) -> Result<()> {
    let color = if img.channels() == 1 {
        png::ColorType::Grayscale
    } else {
        png::ColorType::Rgb
    };
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    write_png8(path.as_ref(), img.width(), img.height(), color, &bytes)
}

fn write_png8(
    path: &Path,
    width: usize,
    height: usize,
    color: png::ColorType,
    bytes: &[u8],
) -> Result<()> {
    let enc_err = |source| Error::PngEncode {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        dim_u32("width", width)?,
        dim_u32("height", height)?,
    );
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(enc_err)?;
    writer.write_image_data(bytes).map_err(enc_err)?;
    writer.finish().map_err(enc_err)
}

/// Loads an 8-bit grayscale label PNG. Values must be `< num_labels` or 255.
pub fn load_labels(path: impl AsRef<Path>, num_labels: usize) -> Result<LabelMap> {
    let path = path.as_ref();
    if num_labels == 0 || num_labels > MAX_LABELS {
        return Err(Error::OutOfRange {
            field: "num_labels",
            detail: format!("{num_labels} not in 1..={MAX_LABELS}"),
        });
    }
    let mut reader = open_png(path)?;
    let info = reader.info();
    if info.interlaced {
        return Err(Error::UnsupportedPng(format!(
            "{}: interlaced PNGs are not supported",
            path.display()
        )));
    }
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedPng(format!(
            "{}: label maps must be 8-bit grayscale, found {:?} {:?}",
            path.display(),
            info.color_type,
            info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let data = read_frame(path, &mut reader)?;
    LabelMap::new(width, height, num_labels, data)
}

pub fn save_labels(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    debug_assert!(map
        .data()
        .iter()
        .all(|&l| l == UNLABELED || usize::from(l) < map.num_labels()));
    write_png8(
        path.as_ref(),
        map.width(),
        map.height(),
        png::ColorType::Grayscale,
        map.data(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_png(
        path: &Path,
        w: u32,
        h: u32,
        color: png::ColorType,
        depth: png::BitDepth,
        data: &[u8],
    ) {
        let file = File::create(path).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        if color == png::ColorType::Indexed {
            enc.set_palette(vec![0u8, 0, 0, 255, 255, 255]);
        }
        let mut wr = enc.write_header().unwrap();
        wr.write_image_data(data).unwrap();
        wr.finish().unwrap();
    }

    #[test]
    fn rgb8_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        write_png(
            &p,
            1,
            1,
            png::ColorType::Rgb,
            png::BitDepth::Eight,
            &[255, 0, 128],
        );
        let img = load_image(&p).unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(img.data(), &[1.0, 0.0, 128.0 / 255.0]);
    }

    #[test]
    fn gray16_max_is_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        write_png(
            &p,
            2,
            1,
            png::ColorType::Grayscale,
            png::BitDepth::Sixteen,
            &[0xff, 0xff, 0x00, 0x00],
        );
        let img = load_image(&p).unwrap();
        assert_eq!(img.data(), &[1.0, 0.0]);
    }

    #[test]
    fn palette_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        write_png(
            &p,
            2,
            1,
            png::ColorType::Indexed,
            png::BitDepth::Eight,
            &[0, 1],
        );
        assert!(matches!(load_image(&p), Err(Error::UnsupportedPng(_))));
        assert!(matches!(load_labels(&p, 2), Err(Error::UnsupportedPng(_))));
    }

    #[test]
    fn missing_file_is_io() {
        let err = load_image("/nonexistent/x.png").unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn labels_with_sentinel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.png");
        write_png(
            &p,
            3,
            1,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &[0, 1, 255],
        );
        let map = load_labels(&p, 2).unwrap();
        assert_eq!(map.data(), &[0, 1, UNLABELED]);
    }

    #[test]
    fn labels_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.png");
        write_png(
            &p,
            2,
            1,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &[0, 7],
        );
        assert!(matches!(
            load_labels(&p, 3),
            Err(Error::InvalidLabel { value: 7, .. })
        ));
    }

    #[test]
    fn prb_direct_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.prb");
        let mut f = File::create(&p).unwrap();
        f.write_all(b"PRB1").unwrap();
        for v in [2u32, 2, 1] {
            f.write_all(&v.to_le_bytes()).unwrap();
        }
        for v in [0.0f32, 0.25, 0.5, 1.0] {
            f.write_all(&v.to_le_bytes()).unwrap();
        }
        drop(f);
        let map = load_prb(&p).unwrap();
        assert_eq!((map.width(), map.height(), map.channels()), (2, 2, 1));
        assert_eq!(map.get(0, 1, 0), 0.5);
        assert_eq!(map.data(), &[0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn prb_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.prb");
        let mut bytes = b"PRB0".to_vec();
        for v in [1u32, 1, 1] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(load_prb(&p), Err(Error::BadMagic(m)) if &m == b"PRB0"));
    }

    #[test]
    fn prb_truncated_before_allocation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.prb");
        // header claims 65535 x 65535 x 255 planes; file holds 8 bytes of payload
        let header = Prb1Header {
            width: 65535,
            height: 65535,
            channels: 255,
        };
        let mut bytes = header.to_bytes().to_vec();
        bytes.extend_from_slice(&[0u8; 8]);
        std::fs::write(&p, bytes).unwrap();
        match load_prb(&p) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, header.file_len());
                assert_eq!(actual, 24);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prb_zero_dimension_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.prb");
        let mut bytes = b"PRB1".to_vec();
        for v in [0u32, 1, 1] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&p, bytes).unwrap();
        assert!(load_prb(&p).is_err());
    }

    #[test]
    fn edge_weight_export_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let grid = EdgeWeightGrid::uniform(3, 2, 0.5).unwrap();
        let (h, v) = (dir.path().join("h.prb"), dir.path().join("v.prb"));
        save_edge_weights(&grid, &h, &v).unwrap();
        let hm = load_prb(&h).unwrap();
        let vm = load_prb(&v).unwrap();
        assert_eq!((hm.width(), hm.height()), (2, 2));
        assert_eq!((vm.width(), vm.height()), (3, 1));
        assert!(hm.data().iter().chain(vm.data()).all(|&x| x == 0.5));
    }
}
