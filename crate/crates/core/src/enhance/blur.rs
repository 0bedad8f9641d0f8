use crate::imagecore::ImageBuffer;
use crate::{Error, Result};

/// Sampled Gaussian of radius `ceil(3 sigma)`, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::contract(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Reflect-101 border: `dcb|abcd|cba`, repeated for offsets larger than the axis.
#[inline]
pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Separable convolution of one plane; horizontal pass first.
pub(crate) fn blur_plane(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * row[reflect101(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * tmp[reflect101(y as isize + k as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Unrounded blurred planes, one per channel, in native units.
pub(crate) fn blur_planes(img: &ImageBuffer, sigma: f64) -> Result<Vec<Vec<f64>>> {
    let kernel = gaussian_kernel(sigma)?;
    Ok((0..img.channels())
        .map(|c| blur_plane(&img.plane_f64(c), img.width(), img.height(), &kernel))
        .collect())
}

/// Separable Gaussian blur with reflect-101 borders; each channel independent.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    let planes = blur_planes(img, sigma)?;
    ImageBuffer::from_planes(img.width(), img.height(), img.depth(), &planes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_shape() {
        let k = gaussian_kernel(1.0).unwrap();
        assert_eq!(k.len(), 7);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(gaussian_kernel(1.5).unwrap().len(), 11);
        assert_eq!(gaussian_kernel(0.2).unwrap().len(), 3);
        assert!(gaussian_kernel(0.0).is_err());
        assert!(gaussian_kernel(-1.0).is_err());
    }

    #[test]
    fn reflect101_indices() {
        let got: Vec<usize> = (-4..9).map(|i| reflect101(i, 4)).collect();
        assert_eq!(got, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1, 2]);
        assert_eq!(reflect101(-7, 1), 0);
    }

    #[test]
    fn constant_stays_constant() {
        let img = ImageBuffer::filled(6, 5, 3, 91).unwrap();
        assert_eq!(gaussian_blur(&img, 2.3).unwrap(), img);
        let f = ImageBuffer::from_f32(4, 4, 1, vec![0.25; 16]).unwrap();
        let out = gaussian_blur(&f, 1.0).unwrap();
        assert!(out
            .as_f32()
            .unwrap()
            .iter()
            .all(|v| (v - 0.25).abs() < 1e-7));
    }

    #[test]
    fn impulse_response_is_symmetric() {
        let mut data = vec![0.0f32; 81];
        data[40] = 1.0;
        let img = ImageBuffer::from_f32(9, 9, 1, data).unwrap();
        let out = gaussian_blur(&img, 1.0).unwrap();
        let v = out.as_f32().unwrap();
        for d in 1..=4 {
            assert_eq!(v[4 * 9 + 4 + d], v[4 * 9 + 4 - d]);
            assert_eq!(v[(4 + d) * 9 + 4], v[(4 - d) * 9 + 4]);
            assert_eq!(v[4 * 9 + 4 + d], v[(4 + d) * 9 + 4]);
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        let img = ImageBuffer::filled(2, 2, 1, 0).unwrap();
        assert!(matches!(gaussian_blur(&img, 0.0), Err(Error::Contract(_))));
    }
}
