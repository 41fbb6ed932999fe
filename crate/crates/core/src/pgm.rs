//! Minimal binary PGM (P5) support.
//! https://netpbm.sourceforge.net/doc/pgm.html

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A decoded 8-bit graymap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gray8 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format(path, "missing P5 magic number"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // Whitespace and comments may precede every header field.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            let name = ["width", "height", "maxval"][i];
            return Err(Error::format(
                path,
                format!("malformed header: missing {name}"),
            ));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::format(path, format!("malformed header: bad number {text:?}")))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::format(
                path,
                "malformed header: no separator before raster",
            ))
        }
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::format(path, "malformed header: zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(
            path,
            format!("malformed header: maxval {maxval}"),
        ));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval,
        data_offset: pos,
    })
}

/// Reads an 8-bit binary PGM (maxval 255).
pub fn read_gray8(path: &Path) -> Result<Gray8> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = parse_header(&bytes, path)?;
    if header.maxval != 255 {
        return Err(Error::format(
            path,
            format!("expected maxval 255, got {}", header.maxval),
        ));
    }
    let n = header.width * header.height;
    let raster = &bytes[header.data_offset..];
    if raster.len() < n {
        return Err(Error::format(
            path,
            format!(
                "truncated raster: expected {n} bytes, found {}",
                raster.len()
            ),
        ));
    }
    Ok(Gray8 {
        width: header.width,
        height: header.height,
        pixels: raster[..n].to_vec(),
    })
}

fn write_file(path: &Path, header: String, raster: &[u8]) -> Result<()> {
    let mut file =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    file.write_all(header.as_bytes())
        .and_then(|_| file.write_all(raster))
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_gray8(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::Contract(format!(
            "{width}x{height} graymap needs {} pixels, got {}",
            width * height,
            pixels.len()
        )));
    }
    write_file(path, format!("P5\n{width} {height}\n255\n"), pixels)
}

/// Writes a 16-bit binary PGM; samples are stored most significant byte first.
pub fn write_gray16(path: &Path, width: usize, height: usize, pixels: &[u16]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::Contract(format!(
            "{width}x{height} graymap needs {} pixels, got {}",
            width * height,
            pixels.len()
        )));
    }
    let raster: Vec<u8> = pixels.iter().flat_map(|p| p.to_be_bytes()).collect();
    write_file(path, format!("P5\n{width} {height}\n65535\n"), &raster)
}

/// Reads a 16-bit binary PGM (maxval 65535).
pub fn read_gray16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = parse_header(&bytes, path)?;
    if header.maxval != 65535 {
        return Err(Error::format(
            path,
            format!("expected maxval 65535, got {}", header.maxval),
        ));
    }
    let n = header.width * header.height;
    let raster = &bytes[header.data_offset..];
    if raster.len() < 2 * n {
        return Err(Error::format(path, "truncated raster"));
    }
    let pixels = raster[..2 * n]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((header.width, header.height, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        path
    }

    #[test]
    fn reads_header_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_raw(
            &dir,
            "c.pgm",
            b"P5\n# made by hand\n2 1\n# max\n255\n\x33\xff",
        );
        let img = read_gray8(&path).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(img.pixels, vec![51, 255]);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_gray8(Path::new("/nonexistent/mask.pgm")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn bad_magic_and_truncation_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_raw(&dir, "a.pgm", b"P2\n1 1\n255\n0");
        assert!(matches!(read_gray8(&p), Err(Error::Format { .. })));
        let p = write_raw(&dir, "b.pgm", b"P5\n4 4\n255\n\x00\x00");
        match read_gray8(&p) {
            Err(Error::Format { msg, .. }) => assert!(msg.contains("truncated")),
            other => panic!("expected truncation error, got {other:?}"),
        }
        let p = write_raw(&dir, "c.pgm", b"P5\n4\n");
        match read_gray8(&p) {
            Err(Error::Format { msg, .. }) => assert!(msg.contains("malformed")),
            other => panic!("expected header error, got {other:?}"),
        }
        let p = write_raw(&dir, "d.pgm", b"P5\n1 1\n15\n\x00");
        assert!(matches!(read_gray8(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn gray16_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let pixels = vec![0, 1, 256, 65535, 1234, 40000];
        write_gray16(&path, 3, 2, &pixels).unwrap();
        assert_eq!(read_gray16(&path).unwrap(), (3, 2, pixels));
    }
}
