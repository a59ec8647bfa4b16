//! Binary PGM (P5) reading for metric input frames. Values are scaled to
//! `[0, 1]` by the declared maxval; 16-bit samples are big-endian per
//! the format.

use crate::error::CliError;
use eqvt_flow::Frame;
use std::path::Path;

pub fn read_pgm(path: &Path) -> Result<Frame, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
    let bad = |m: &str| CliError::config(format!("{}: {m}", path.display()));
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(bad("not a binary PGM (P5) file"));
    }
    // Header: magic, width, height, maxval as whitespace-separated
    // tokens with '#' comments, then one whitespace byte before data.
    let mut pos = 2usize;
    let mut fields = Vec::with_capacity(3);
    while fields.len() < 3 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        let token = std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("bad header"))?;
        fields.push(token.parse::<usize>().map_err(|_| bad("non-numeric header field"))?);
    }
    pos += 1; // single whitespace after maxval
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(bad("bad dimensions or maxval"));
    }
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let needed = width * height * bytes_per;
    if bytes.len() < pos + needed {
        return Err(bad("truncated pixel data"));
    }
    let scale = 1.0 / maxval as f32;
    let data: Vec<f32> = (0..width * height)
        .map(|i| {
            let off = pos + i * bytes_per;
            let v = if bytes_per == 2 {
                u16::from_be_bytes([bytes[off], bytes[off + 1]]) as f32
            } else {
                bytes[off] as f32
            };
            v * scale
        })
        .collect();
    Frame::new(width, height, data).map_err(|e| CliError::numeric(e.to_string()))
}

pub fn write_pgm(path: &Path, frame: &Frame, maxval: u16) -> Result<(), CliError> {
    let mut out = format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), maxval).into_bytes();
    let lo = frame.data().iter().cloned().fold(f32::INFINITY, f32::min);
    let hi = frame.data().iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    for &v in frame.data() {
        let q = ((v - lo) / range * maxval as f32).round() as u32;
        let q = q.min(maxval as u32);
        if maxval > 255 {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    std::fs::write(path, out).map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_p5() {
        let dir = std::env::temp_dir().join("eqvt_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.pgm");
        let mut bytes = b"P5\n# comment\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 64, 32, 16]);
        std::fs::write(&path, bytes).unwrap();
        let frame = read_pgm(&path).unwrap();
        assert_eq!((frame.width(), frame.height()), (3, 2));
        assert!((frame.at(2, 0) - 1.0).abs() < 1e-6);
        assert!((frame.at(1, 0) - 128.0 / 255.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_wrong_magic_and_truncation() {
        let dir = std::env::temp_dir().join("eqvt_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.pgm");
        std::fs::write(&path, b"P6\n1 1\n255\n\x00").unwrap();
        assert!(read_pgm(&path).is_err());
        std::fs::write(&path, b"P5\n2 2\n255\n\x00").unwrap();
        assert!(read_pgm(&path).is_err());
    }
}
