//! On-disk formats for stage caches and image artifacts.
//!
//! Label cache (`labels.bin`), little-endian:
//!
//! ```text
//! magic   b"STGL"
//! u32     number of label maps
//! repeat: u32 width, u32 height, width*height u32 labels
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::segmentation::LabelMap;

const MAGIC: &[u8; 4] = b"STGL";

pub fn write_label_maps<'a>(path: &Path, maps: impl ExactSizeIterator<Item = &'a LabelMap>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(MAGIC)?;
    put(&(maps.len() as u32).to_le_bytes())?;
    for m in maps {
        put(&(m.width as u32).to_le_bytes())?;
        put(&(m.height as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(m.labels.len() * 4);
        for &l in &m.labels {
            buf.extend_from_slice(&(l as u32).to_le_bytes());
        }
        put(&buf)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_label_maps(path: &Path) -> Result<Vec<LabelMap>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: &str| Error::Malformed { path: path.to_path_buf(), reason: reason.into() };
    let mut pos = 0usize;
    let u32_at = |pos: &mut usize| -> Result<u32> {
        let chunk = bytes.get(*pos..*pos + 4).ok_or_else(|| malformed("truncated"))?;
        *pos += 4;
        Ok(u32::from_le_bytes(chunk.try_into().expect("4 bytes")))
    };
    if bytes.get(..4) != Some(MAGIC.as_slice()) {
        return Err(malformed("bad magic"));
    }
    pos += 4;
    let n = u32_at(&mut pos)? as usize;
    let mut maps = Vec::with_capacity(n);
    for _ in 0..n {
        let width = u32_at(&mut pos)? as usize;
        let height = u32_at(&mut pos)? as usize;
        let labels = (0..width * height)
            .map(|_| u32_at(&mut pos).map(|l| l as usize))
            .collect::<Result<Vec<_>>>()?;
        maps.push(LabelMap { width, height, labels });
    }
    if pos != bytes.len() {
        return Err(malformed("trailing bytes"));
    }
    Ok(maps)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn save_gray(path: &Path, img: &image::GrayImage) -> Result<()> {
    img.save(path).map_err(|e| Error::image(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_maps_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.bin");
        let maps = vec![
            LabelMap { width: 3, height: 2, labels: vec![0, 1, 2, 70000, 4, 5] },
            LabelMap { width: 1, height: 1, labels: vec![0] },
        ];
        write_label_maps(&p, maps.iter()).unwrap();
        assert_eq!(read_label_maps(&p).unwrap(), maps);
    }

    #[test]
    fn truncated_cache_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.bin");
        let maps = [LabelMap { width: 2, height: 2, labels: vec![0, 0, 1, 1] }];
        write_label_maps(&p, maps.iter()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_label_maps(&p), Err(Error::Malformed { .. })));
        fs::write(&p, b"nope").unwrap();
        assert!(read_label_maps(&p).is_err());
    }
}
