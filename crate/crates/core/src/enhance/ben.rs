use std::fmt;

use serde::{Deserialize, Serialize};

use super::blur::blur_planes;
use crate::imagecore::{Depth, ImageBuffer};
use crate::{Error, Result};

/// Blur scale for Ben enhancement.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Sigma {
    /// `max(width, height) / 30`, resolved per image.
    #[default]
    Auto,
    Fixed(f64),
}

impl Sigma {
    pub fn resolve(self, width: usize, height: usize) -> f64 {
        match self {
            Sigma::Auto => width.max(height) as f64 / 30.0,
            Sigma::Fixed(s) => s,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Auto => f.write_str("auto"),
            Sigma::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl std::str::FromStr for Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Sigma::Auto);
        }
        let v: f64 = s.parse().map_err(|_| {
            Error::Validation(format!("sigma must be a number or 'auto', got '{s}'"))
        })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Validation(format!(
                "sigma must be positive, got {v}"
            )));
        }
        Ok(Sigma::Fixed(v))
    }
}

impl Serialize for Sigma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sigma::Auto => s.serialize_str("auto"),
            Sigma::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Sigma::Fixed(v)
                .validated()
                .map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Sigma {
    fn validated(self) -> Result<Self> {
        match self {
            Sigma::Fixed(v) if !(v > 0.0 && v.is_finite()) => Err(Error::Validation(format!(
                "sigma must be positive, got {v}"
            ))),
            s => Ok(s),
        }
    }
}

/// Weights of `alpha * I + beta * blur(I) + bias`. `bias` is in 8-bit units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenParams {
    pub sigma: Sigma,
    pub alpha: f64,
    pub beta: f64,
    pub bias: f64,
}

impl Default for BenParams {
    fn default() -> Self {
        BenParams {
            sigma: Sigma::Auto,
            alpha: 4.0,
            beta: -4.0,
            bias: 128.0,
        }
    }
}

impl BenParams {
    pub fn validate(&self) -> Result<()> {
        self.sigma.validated()?;
        if ![self.alpha, self.beta, self.bias]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Validation("Ben weights must be finite".to_string()));
        }
        Ok(())
    }
}

/// Ben Graham style local-contrast enhancement.
///
/// 8-bit images are clamped to `[0, 255]`; float images interpret `bias` on
/// the 8-bit scale (`bias / 255`) and clamp to `[0, 1]`.
pub fn ben_enhance(img: &ImageBuffer, p: &BenParams) -> Result<ImageBuffer> {
    p.validate().map_err(|e| Error::contract(e.to_string()))?;
    let sigma = p.sigma.resolve(img.width(), img.height());
    let blurred = blur_planes(img, sigma)?;
    let (bias, hi) = match img.depth() {
        Depth::Int8 => (p.bias, 255.0),
        Depth::Float => (p.bias / 255.0, 1.0),
    };
    let planes: Vec<Vec<f64>> = blurred
        .into_iter()
        .enumerate()
        .map(|(c, g)| {
            img.plane_f64(c)
                .into_iter()
                .zip(g)
                .map(|(i, g)| (p.alpha * i + p.beta * g + bias).clamp(0.0, hi))
                .collect()
        })
        .collect();
    ImageBuffer::from_planes(img.width(), img.height(), img.depth(), &planes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_maps_to_128() {
        for v in [0u8, 17, 128, 255] {
            let img = ImageBuffer::filled(13, 7, 3, v).unwrap();
            let out = ben_enhance(&img, &BenParams::default()).unwrap();
            assert!(out.as_u8().unwrap().iter().all(|&s| s == 128), "v = {v}");
            let fixed = BenParams {
                sigma: Sigma::Fixed(5.0),
                ..BenParams::default()
            };
            let out = ben_enhance(&img, &fixed).unwrap();
            assert!(out.as_u8().unwrap().iter().all(|&s| s == 128));
        }
    }

    #[test]
    fn degenerate_weights_are_identity() {
        let data: Vec<u8> = (0..64).map(|i| (i * 37 % 256) as u8).collect();
        let img = ImageBuffer::from_u8(8, 8, 1, data).unwrap();
        let p = BenParams {
            sigma: Sigma::Fixed(2.0),
            alpha: 1.0,
            beta: 0.0,
            bias: 0.0,
        };
        assert_eq!(ben_enhance(&img, &p).unwrap(), img);
    }

    #[test]
    fn auto_sigma_resolution() {
        assert_eq!(Sigma::Auto.resolve(300, 120), 10.0);
        assert_eq!(Sigma::Fixed(2.0).resolve(300, 120), 2.0);
    }

    #[test]
    fn sigma_parsing() {
        assert_eq!("auto".parse::<Sigma>().unwrap(), Sigma::Auto);
        assert_eq!("1.5".parse::<Sigma>().unwrap(), Sigma::Fixed(1.5));
        assert!("-1".parse::<Sigma>().is_err());
        assert!("0".parse::<Sigma>().is_err());
        assert!("x".parse::<Sigma>().is_err());
    }

    #[test]
    fn rejects_nonpositive_fixed_sigma() {
        let img = ImageBuffer::filled(4, 4, 1, 0).unwrap();
        let p = BenParams {
            sigma: Sigma::Fixed(-1.0),
            ..BenParams::default()
        };
        assert!(matches!(ben_enhance(&img, &p), Err(Error::Contract(_))));
    }

    #[test]
    fn float_constant_maps_to_mid_gray() {
        let img = ImageBuffer::from_f32(5, 5, 1, vec![0.3; 25]).unwrap();
        let out = ben_enhance(&img, &BenParams::default()).unwrap();
        for &v in out.as_f32().unwrap() {
            assert!((v as f64 - 128.0 / 255.0).abs() < 1e-6);
        }
    }
}
