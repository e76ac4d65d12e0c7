use std::io::{BufRead, Read};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh_io::{extension, Camera};
use crate::raycast::Bvh;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

/// Camera-frame z-depth per pixel, row-major; misses are `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<T> {
    pub width: u32,
    pub height: u32,
    pub camera_id: i64,
    values: Vec<T>,
}

impl<T: Real> DepthMap<T> {
    pub fn new(width: u32, height: u32, camera_id: i64, values: Vec<T>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!("{} depth values for {width}×{height}", values.len())));
        }
        if values.iter().any(|&d| !(d > T::zero())) {
            return Err(Error::InvalidArgument("depths must be positive or +inf".into()));
        }
        Ok(Self { width, height, camera_id, values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: u32, j: u32) -> T {
        self.values[j as usize * self.width as usize + i as usize]
    }

    pub fn finite_count(&self) -> usize {
        self.values.iter().filter(|d| d.is_finite()).count()
    }

    /// Depth at continuous pixel coordinates (pixel centers at integers).
    ///
    /// Bilinear interpolation falls back to the nearest pixel when any of
    /// the four neighbours is a miss, so silhouettes never blend with `+∞`.
    pub fn sample(&self, px: T, py: T, interp: Interpolation) -> T {
        let wmax = T::from_u32(self.width - 1).unwrap();
        let hmax = T::from_u32(self.height - 1).unwrap();
        let x = px.max(T::zero()).min(wmax);
        let y = py.max(T::zero()).min(hmax);
        let nearest = || self.get(x.round().to_u32().unwrap(), y.round().to_u32().unwrap());
        if interp == Interpolation::Nearest {
            return nearest();
        }
        let x0 = x.floor().to_u32().unwrap();
        let y0 = y.floor().to_u32().unwrap();
        let fx = x - T::from_u32(x0).unwrap();
        let fy = y - T::from_u32(y0).unwrap();
        // Neighbours with zero weight do not count toward the miss fallback.
        let x1 = if fx > T::zero() { (x0 + 1).min(self.width - 1) } else { x0 };
        let y1 = if fy > T::zero() { (y0 + 1).min(self.height - 1) } else { y0 };
        let (d00, d10, d01, d11) = (self.get(x0, y0), self.get(x1, y0), self.get(x0, y1), self.get(x1, y1));
        if !(d00.is_finite() && d10.is_finite() && d01.is_finite() && d11.is_finite()) {
            return nearest();
        }
        let top = d00 + (d10 - d00) * fx;
        let bottom = d01 + (d11 - d01) * fx;
        top + (bottom - top) * fy
    }
}

/// Casts one ray through every pixel center and records the camera-frame
/// z of the first hit.
pub fn render_depth<T: Real>(bvh: &Bvh<T>, camera: &Camera<T>) -> DepthMap<T> {
    let (w, h) = (camera.intrinsics.width, camera.intrinsics.height);
    let mut values = vec![T::infinity(); w as usize * h as usize];
    let origin = camera.center();
    values.par_chunks_mut(w as usize).enumerate().for_each(|(j, row)| {
        for (i, out) in row.iter_mut().enumerate() {
            let (dir, z_per_t) = camera.pixel_ray(i as u32, j as u32);
            if let Some(hit) = bvh.first_hit(origin, dir, T::infinity()) {
                *out = hit.t * z_per_t;
            }
        }
    });
    DepthMap { width: w, height: h, camera_id: camera.id, values }
}

/// Writes `.pfm` (float32, bottom row first, misses as 0) or `.png`
/// (16-bit millimetres, 1 scene unit = 1 m, misses and overflow as 0).
pub fn save_depth<T: Real>(map: &DepthMap<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match extension(path).as_deref() {
        Some("pfm") => encode_pfm(map),
        Some("png") => encode_png16(map)?,
        other => return Err(Error::UnsupportedFormat(format!("depth extension {:?}", other.unwrap_or("")))),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_depth<T: Real>(path: impl AsRef<Path>, camera_id: i64) -> Result<DepthMap<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match extension(path).as_deref() {
        Some("pfm") => decode_pfm(&bytes, path, camera_id),
        Some("png") => decode_png16(&bytes, path, camera_id),
        other => Err(Error::UnsupportedFormat(format!("depth extension {:?}", other.unwrap_or("")))),
    }
}

pub fn encode_pfm<T: Real>(map: &DepthMap<T>) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", map.width, map.height).into_bytes();
    for j in (0..map.height).rev() {
        for i in 0..map.width {
            let d = map.get(i, j);
            let v = if d.is_finite() { d.as_f64() as f32 } else { 0.0 };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode_pfm<T: Real>(bytes: &[u8], path: &Path, camera_id: i64) -> Result<DepthMap<T>> {
    let err = |m: &str| Error::parse(path, m);
    let mut cur = std::io::Cursor::new(bytes);
    let mut line = String::new();
    let mut next_line = |cur: &mut std::io::Cursor<&[u8]>| -> Result<String> {
        line.clear();
        cur.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        Ok(line.trim().to_owned())
    };
    if next_line(&mut cur)? != "Pf" {
        return Err(err("not a grayscale PFM"));
    }
    let dims = next_line(&mut cur)?;
    let mut it = dims.split_whitespace().map(str::parse::<u32>);
    let (Some(Ok(w)), Some(Ok(h))) = (it.next(), it.next()) else {
        return Err(err("bad PFM dimensions"));
    };
    let scale: f64 = next_line(&mut cur)?.parse().map_err(|_| err("bad PFM scale"))?;
    let little = scale < 0.0;
    let mut raw = Vec::new();
    cur.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    if raw.len() != w as usize * h as usize * 4 {
        return Err(err("PFM payload size mismatch"));
    }
    let mut values = vec![T::infinity(); raw.len() / 4];
    for (k, chunk) in raw.chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().unwrap();
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (i, jr) = (k % w as usize, k / w as usize);
        let j = h as usize - 1 - jr;
        if v > 0.0 && v.is_finite() {
            values[j * w as usize + i] = T::lit(v as f64);
        }
    }
    DepthMap::new(w, h, camera_id, values)
}

fn encode_png16<T: Real>(map: &DepthMap<T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, map.width, map.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc.write_header().map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
        let data: Vec<u8> = map
            .values
            .iter()
            .flat_map(|&d| {
                let mm = (d.as_f64() * 1000.0).round();
                let v = if d.is_finite() && mm <= u16::MAX as f64 { mm as u16 } else { 0 };
                v.to_be_bytes()
            })
            .collect();
        writer.write_image_data(&data).map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    }
    Ok(out)
}

fn decode_png16<T: Real>(bytes: &[u8], path: &Path, camera_id: i64) -> Result<DepthMap<T>> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::parse(path, e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::parse(path, "expected 16-bit grayscale PNG"));
    }
    let (w, h) = (info.width, info.height);
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| Error::parse(path, "PNG too large"))?];
    reader.next_frame(&mut buf).map_err(|e| Error::parse(path, e.to_string()))?;
    let values = buf[..w as usize * h as usize * 2]
        .chunks_exact(2)
        .map(|c| match u16::from_be_bytes([c[0], c[1]]) {
            0 => T::infinity(),
            mm => T::lit(mm as f64 / 1000.0),
        })
        .collect();
    DepthMap::new(w, h, camera_id, values)
}
