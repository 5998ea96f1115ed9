//! Raster file I/O.
//!
//! Frames, plates, and mattes travel as 8- or 16-bit grayscale/RGB rasters
//! in portable network graphics or portable graymap files. Loading
//! normalizes samples to `[0, 1]`; everything downstream runs in that
//! range, and mattes are clamped and quantized only at save time.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::raster::{AlphaMatte, Image};

/// Output sample width for saved mattes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

fn check_extension(path: &Path) -> Result<()> {
    let ok = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("png") || e.eq_ignore_ascii_case("pgm"))
        .unwrap_or(false);
    if ok {
        Ok(())
    } else {
        Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
        })
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    check_extension(path)?;
    image::open(path).map_err(|source| Error::ImageDecode {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a color image; grayscale input replicates into all channels, and
/// an alpha channel, if present, is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let decoded = decode(path)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let image = match decoded {
        DynamicImage::ImageLuma8(buf) => Image::from_fn(w, h, |x, y| {
            let v = f64::from(buf.get_pixel(x as u32, y as u32).0[0]) / 255.0;
            [v, v, v]
        }),
        DynamicImage::ImageLuma16(buf) => Image::from_fn(w, h, |x, y| {
            let v = f64::from(buf.get_pixel(x as u32, y as u32).0[0]) / 65535.0;
            [v, v, v]
        }),
        other => {
            // Any remaining layout funnels through 16-bit RGB.
            let buf = other.into_rgb16();
            Image::from_fn(w, h, |x, y| {
                let p = buf.get_pixel(x as u32, y as u32).0;
                [
                    f64::from(p[0]) / 65535.0,
                    f64::from(p[1]) / 65535.0,
                    f64::from(p[2]) / 65535.0,
                ]
            })
        }
    };
    Ok(image)
}

/// Loads a matte; color input averages its channels.
pub fn load_matte(path: impl AsRef<Path>) -> Result<AlphaMatte> {
    let image = load_image(path)?;
    let (w, h) = image.dims();
    Ok(AlphaMatte::from_fn(w, h, |x, y| {
        let p = image.pixel(x, y);
        (p[0] + p[1] + p[2]) / 3.0
    }))
}

fn encode_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::ImageEncode {
        path: path.to_path_buf(),
        source,
    }
}

/// Saves a matte as a grayscale raster, clamping to `[0, 1]` and quantizing
/// at the chosen depth.
pub fn save_matte(matte: &AlphaMatte, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    check_extension(path)?;
    matte.ensure_finite()?;
    let (w, h) = matte.dims();
    match depth {
        BitDepth::Eight => {
            let data: Vec<u8> = matte
                .as_slice()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            let buf: ImageBuffer<Luma<u8>, _> =
                ImageBuffer::from_raw(w as u32, h as u32, data).expect("sized buffer");
            buf.save(path).map_err(encode_err(path))
        }
        BitDepth::Sixteen => {
            let data: Vec<u16> = matte
                .as_slice()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            let buf: ImageBuffer<Luma<u16>, _> =
                ImageBuffer::from_raw(w as u32, h as u32, data).expect("sized buffer");
            buf.save(path).map_err(encode_err(path))
        }
    }
}

/// Saves a color image as an 8-bit RGB portable network graphics file.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let png = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("png"))
        .unwrap_or(false);
    if !png {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
        });
    }
    image.ensure_finite()?;
    let (w, h) = image.dims();
    let mut data = Vec::with_capacity(w * h * 3);
    for px in image.data() {
        for c in 0..3 {
            data.push((px[c].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    let buf: ImageBuffer<Rgb<u8>, _> =
        ImageBuffer::from_raw(w as u32, h as u32, data).expect("sized buffer");
    buf.save(path).map_err(encode_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matte(rng: &mut ChaCha8Rng, w: usize, h: usize) -> AlphaMatte {
        AlphaMatte::from_fn(w, h, |_, _| rng.gen_range(0.0..=1.0))
    }

    #[test]
    fn eight_bit_round_trip_within_quantization() {
        let mut rng = ChaCha8Rng::seed_from_u64(501);
        let matte = random_matte(&mut rng, 9, 6);
        let dir = tempfile::tempdir().unwrap();
        for name in ["m.png", "m.pgm"] {
            let path = dir.path().join(name);
            save_matte(&matte, &path, BitDepth::Eight).unwrap();
            let back = load_matte(&path).unwrap();
            for (a, b) in matte.as_slice().iter().zip(back.as_slice()) {
                assert!((a - b).abs() <= 1.0 / 255.0, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sixteen_bit_round_trip_within_quantization() {
        let mut rng = ChaCha8Rng::seed_from_u64(503);
        let matte = random_matte(&mut rng, 7, 7);
        let dir = tempfile::tempdir().unwrap();
        for name in ["m16.png", "m16.pgm"] {
            let path = dir.path().join(name);
            save_matte(&matte, &path, BitDepth::Sixteen).unwrap();
            let back = load_matte(&path).unwrap();
            for (a, b) in matte.as_slice().iter().zip(back.as_slice()) {
                assert!((a - b).abs() <= 1.0 / 65535.0, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn out_of_range_values_clamp_at_save_time() {
        let matte = AlphaMatte::from_vec(2, 1, vec![-0.5, 1.5]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clamped.png");
        save_matte(&matte, &path, BitDepth::Eight).unwrap();
        let back = load_matte(&path).unwrap();
        assert_eq!(back.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn color_image_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(509);
        let image = Image::from_fn(8, 5, |_, _| {
            [
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.0..=1.0),
            ]
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.png");
        save_image(&image, &path).unwrap();
        let back = load_image(&path).unwrap();
        for (a, b) in image.data().iter().zip(back.data()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 1.0 / 255.0);
            }
        }
    }

    #[test]
    fn grayscale_replicates_into_rgb() {
        let matte = AlphaMatte::from_vec(3, 1, vec![0.0, 0.5, 1.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gray.pgm");
        save_matte(&matte, &path, BitDepth::Eight).unwrap();
        let image = load_image(&path).unwrap();
        for px in image.data() {
            assert_eq!(px[0], px[1]);
            assert_eq!(px[1], px[2]);
        }
    }

    #[test]
    fn unsupported_and_missing_paths_error() {
        let dir = tempfile::tempdir().unwrap();
        let matte = AlphaMatte::new(2, 2);
        assert!(matches!(
            save_matte(&matte, dir.path().join("m.tiff"), BitDepth::Eight),
            Err(Error::UnsupportedFormat { .. })
        ));
        assert!(matches!(
            save_image(&Image::new(2, 2), dir.path().join("f.pgm")),
            Err(Error::UnsupportedFormat { .. })
        ));
        assert!(matches!(
            load_image(dir.path().join("missing.png")),
            Err(Error::ImageDecode { .. })
        ));
        assert!(matches!(
            load_image(dir.path().join("missing.txt")),
            Err(Error::UnsupportedFormat { .. })
        ));
    }
}
