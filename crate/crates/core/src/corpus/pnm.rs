//! Binary Netpbm decoding for masks (P5 graymaps, P4 bitmaps).
//!
//! Only the binary variants are accepted. Samples are single bytes, so the
//! decoded bits do not depend on host endianness.

use thiserror::Error;

use super::{Label, LabelMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unsupported magic number {found:?} at byte 0 (expected P4 or P5)")]
    BadMagic { found: Vec<u8> },
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: &'static str },
    #[error("unsupported maxval {maxval} at byte {offset} (only 1..=255 is supported)")]
    UnsupportedMaxval { maxval: u32, offset: usize },
    #[error("truncated payload at byte {offset}: expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("gray value {value} at pixel {pixel} has no label mapping")]
    UnmappedGray { value: u8, pixel: usize },
    #[error("ground truth must be a P5 graymap, found P4 bitmap")]
    NotGraymap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmKind {
    Bitmap,
    Graymap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PnmHeader {
    pub kind: PnmKind,
    pub width: usize,
    pub height: usize,
    /// 1 for bitmaps.
    pub maxval: u32,
    /// Offset of the first payload byte.
    pub data_offset: usize,
}

impl PnmHeader {
    pub fn payload_len(&self) -> usize {
        match self.kind {
            PnmKind::Bitmap => self.width.div_ceil(8) * self.height,
            PnmKind::Graymap => self.width * self.height,
        }
    }
}

/// Row-major foreground bits, packed 64 pixels per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        let len = width * height;
        Self {
            width,
            height,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(width: usize, height: usize, bits: I) -> Self {
        let mut mask = Self::new(width, height);
        let mut count = 0;
        for (i, b) in bits.into_iter().enumerate().take(width * height) {
            mask.set(i, b);
            count = i + 1;
        }
        debug_assert_eq!(count, width * height);
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        (self.words[index >> 6] >> (index & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        let word = &mut self.words[index >> 6];
        let bit = 1u64 << (index & 63);
        if value {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    /// Packed words; bits past `len()` in the last word are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtMask {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Label>,
}

impl GtMask {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if is_space(b) {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<u32, DecodeError> {
        self.skip_space_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value * 10 + u64::from(self.bytes[self.pos] - b'0');
            if value > u64::from(u32::MAX) {
                return Err(DecodeError::MalformedHeader {
                    offset: start,
                    reason: "header value overflows",
                });
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(DecodeError::MalformedHeader {
                offset: start,
                reason: what,
            });
        }
        Ok(value as u32)
    }
}

/// Parses a P4/P5 header without touching the payload.
pub fn decode_header(bytes: &[u8]) -> Result<PnmHeader, DecodeError> {
    if bytes.len() < 2 {
        return Err(DecodeError::BadMagic { found: bytes.to_vec() });
    }
    let kind = match &bytes[..2] {
        b"P4" => PnmKind::Bitmap,
        b"P5" => PnmKind::Graymap,
        other => return Err(DecodeError::BadMagic { found: other.to_vec() }),
    };
    let mut reader = HeaderReader { bytes, pos: 2 };
    if reader.pos < bytes.len() && !is_space(bytes[reader.pos]) && bytes[reader.pos] != b'#' {
        return Err(DecodeError::MalformedHeader {
            offset: reader.pos,
            reason: "expected whitespace after magic number",
        });
    }
    let width = reader.number("expected width")? as usize;
    let height = reader.number("expected height")? as usize;
    if width == 0 || height == 0 {
        return Err(DecodeError::MalformedHeader {
            offset: reader.pos,
            reason: "zero image dimension",
        });
    }
    let maxval = match kind {
        PnmKind::Bitmap => 1,
        PnmKind::Graymap => {
            let offset = reader.pos;
            let maxval = reader.number("expected maxval")?;
            if maxval == 0 || maxval > 255 {
                return Err(DecodeError::UnsupportedMaxval { maxval, offset });
            }
            maxval
        }
    };
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(reader.pos) {
        Some(&b) if is_space(b) => reader.pos += 1,
        Some(_) => {
            return Err(DecodeError::MalformedHeader {
                offset: reader.pos,
                reason: "expected whitespace before payload",
            })
        }
        None => {
            return Err(DecodeError::Truncated {
                offset: reader.pos,
                expected: 1,
                found: 0,
            })
        }
    }
    Ok(PnmHeader {
        kind,
        width,
        height,
        maxval,
        data_offset: reader.pos,
    })
}

fn payload<'a>(bytes: &'a [u8], header: &PnmHeader) -> Result<&'a [u8], DecodeError> {
    let expected = header.payload_len();
    let available = bytes.len() - header.data_offset;
    if available < expected {
        return Err(DecodeError::Truncated {
            offset: bytes.len(),
            expected,
            found: available,
        });
    }
    Ok(&bytes[header.data_offset..header.data_offset + expected])
}

/// Decodes an algorithm output. Gray samples `>= 128` are foreground; bitmap
/// bits set to 1 are foreground.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask, DecodeError> {
    let header = decode_header(bytes)?;
    let data = payload(bytes, &header)?;
    let mut mask = BinaryMask::new(header.width, header.height);
    match header.kind {
        PnmKind::Graymap => {
            for (i, &v) in data.iter().enumerate() {
                if v >= 128 {
                    mask.set(i, true);
                }
            }
        }
        PnmKind::Bitmap => {
            let stride = header.width.div_ceil(8);
            for row in 0..header.height {
                let line = &data[row * stride..(row + 1) * stride];
                for col in 0..header.width {
                    if (line[col >> 3] >> (7 - (col & 7))) & 1 == 1 {
                        mask.set(row * header.width + col, true);
                    }
                }
            }
        }
    }
    Ok(mask)
}

/// Decodes a ground-truth graymap through `label_map`.
pub fn decode_groundtruth(bytes: &[u8], label_map: &LabelMap) -> Result<GtMask, DecodeError> {
    let header = decode_header(bytes)?;
    if header.kind != PnmKind::Graymap {
        return Err(DecodeError::NotGraymap);
    }
    let data = payload(bytes, &header)?;
    let labels = data
        .iter()
        .enumerate()
        .map(|(pixel, &value)| label_map.get(value).ok_or(DecodeError::UnmappedGray { value, pixel }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GtMask {
        width: header.width,
        height: header.height,
        labels,
    })
}

pub fn encode_pgm(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    assert_eq!(samples.len(), width * height, "sample count must match dimensions");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

/// Foreground is written as 255, background as 0.
pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    let samples: Vec<u8> = mask.iter().map(|b| if b { 255 } else { 0 }).collect();
    encode_pgm(mask.width(), mask.height(), &samples)
}

/// Writes FG as 255, BG as 0 and IGNORE as 85 (outside region of interest).
pub fn encode_groundtruth(gt: &GtMask) -> Vec<u8> {
    let samples: Vec<u8> = gt
        .labels
        .iter()
        .map(|l| match l {
            Label::Fg => 255,
            Label::Bg => 0,
            Label::Ignore => 85,
        })
        .collect();
    encode_pgm(gt.width, gt.height, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graymap_full_scale() {
        let mask = decode_mask(b"P5\n2 1\n255\n\xff\x00").unwrap();
        assert_eq!(mask.iter().collect::<Vec<_>>(), vec![true, false]);
    }

    #[test]
    fn graymap_threshold_at_128() {
        let mask = decode_mask(b"P5 2 1 255 \x80\x7f").unwrap();
        assert_eq!(mask.iter().collect::<Vec<_>>(), vec![true, false]);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let bytes = b"P5\n4 1\n255\n\x00\x00\x00";
        match decode_mask(bytes) {
            Err(DecodeError::Truncated {
                offset,
                expected,
                found,
            }) => {
                assert_eq!(offset, bytes.len());
                assert_eq!(expected, 4);
                assert_eq!(found, 3);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn header_comments_are_skipped() {
        let mask = decode_mask(b"P5\n# made by hand\n1 2\n# max\n255\n\xff\xff").unwrap();
        assert_eq!((mask.width(), mask.height()), (1, 2));
        assert_eq!(mask.count_ones(), 2);
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(
            decode_mask(b"P6\n1 1\n255\n\x00"),
            Err(DecodeError::BadMagic { .. })
        ));
        assert!(matches!(
            decode_mask(b"P5\nx 1\n255\n\x00"),
            Err(DecodeError::MalformedHeader { offset: 3, .. })
        ));
        assert!(matches!(
            decode_mask(b"P5\n1 1\n1000\n\x00"),
            Err(DecodeError::UnsupportedMaxval { maxval: 1000, .. })
        ));
        assert!(matches!(
            decode_mask(b"P5\n0 1\n255\n"),
            Err(DecodeError::MalformedHeader { .. })
        ));
        assert!(matches!(
            decode_mask(b"P5\n1 1\n255"),
            Err(DecodeError::Truncated { .. })
        ));
    }

    #[test]
    fn bitmap_rows_are_padded() {
        // 10 pixels per row -> 2 bytes per row
        let bytes = b"P4\n10 2\n\xc0\x40\x00\x80";
        let mask = decode_mask(bytes).unwrap();
        let bits: Vec<bool> = mask.iter().collect();
        let mut expected = vec![false; 20];
        expected[0] = true;
        expected[1] = true;
        expected[9] = true;
        expected[18] = true;
        assert_eq!(bits, expected);
    }

    #[test]
    fn groundtruth_default_map() {
        let gt = decode_groundtruth(b"P5\n5 1\n255\n\x00\xff\x55\xaa\x32", &LabelMap::default()).unwrap();
        assert_eq!(
            gt.labels,
            vec![Label::Bg, Label::Fg, Label::Ignore, Label::Ignore, Label::Bg]
        );
    }

    #[test]
    fn groundtruth_unmapped_value() {
        let map = LabelMap::default().without(50);
        let err = decode_groundtruth(b"P5\n3 1\n255\n\x00\x32\x00", &map).unwrap_err();
        assert_eq!(err, DecodeError::UnmappedGray { value: 50, pixel: 1 });
        assert!(err.to_string().contains("50"));
    }

    #[test]
    fn groundtruth_all_zero() {
        let gt = decode_groundtruth(&encode_pgm(3, 2, &[0; 6]), &LabelMap::default()).unwrap();
        assert!(gt.labels.iter().all(|&l| l == Label::Bg));
    }

    #[test]
    fn groundtruth_rejects_bitmap() {
        assert_eq!(
            decode_groundtruth(b"P4\n1 1\n\x80", &LabelMap::default()),
            Err(DecodeError::NotGraymap)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mask_roundtrip(w in 1usize..40, h in 1usize..10, seed in any::<u64>()) {
                let bits: Vec<bool> = (0..w * h)
                    .map(|i| (seed.rotate_left(i as u32 % 64) ^ (i as u64 * 0x9e37)) & 1 == 1)
                    .collect();
                let mask = BinaryMask::from_bits(w, h, bits.iter().copied());
                let decoded = decode_mask(&encode_mask(&mask)).unwrap();
                prop_assert_eq!(decoded, mask);
            }

            #[test]
            fn groundtruth_roundtrip(labels in proptest::collection::vec(0u8..3, 1..64)) {
                let labels: Vec<Label> = labels
                    .into_iter()
                    .map(|v| [Label::Bg, Label::Fg, Label::Ignore][v as usize])
                    .collect();
                let gt = GtMask { width: labels.len(), height: 1, labels };
                let decoded = decode_groundtruth(&encode_groundtruth(&gt), &LabelMap::default()).unwrap();
                prop_assert_eq!(decoded, gt);
            }
        }
    }
}
