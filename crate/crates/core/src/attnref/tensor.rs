use crate::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::contract(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// Dense `[channels x height x width]` array, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::contract(format!(
                "tensor dims must be >= 1, got {c}x{h}x{w}"
            )));
        }
        if data.len() != c * h * w {
            return Err(Error::contract(format!(
                "{c}x{h}x{w} tensor needs {} values, got {}",
                c * h * w,
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Tensor3 { c, h, w, data })
    }

    pub fn zeros(c: usize, h: usize, w: usize) -> Result<Self> {
        Self::new(c, h, w, vec![0.0; c * h * w])
    }

    pub fn from_fn(
        c: usize,
        h: usize,
        w: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(c * h * w);
        for ci in 0..c {
            for y in 0..h {
                for x in 0..w {
                    data.push(f(ci, y, x));
                }
            }
        }
        Self::new(c, h, w, data)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.c, self.h, self.w)
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.h + y) * self.w + x]
    }

    /// The `h * w` values of channel `c`.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.data[c * n..(c + 1) * n]
    }

    pub(crate) fn map_indexed(&self, f: impl Fn(usize, usize, usize, f64) -> f64) -> Result<Self> {
        Self::from_fn(self.c, self.h, self.w, |c, y, x| {
            f(c, y, x, self.get(c, y, x))
        })
    }
}

/// `h x w` map of spatial gate values.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || data.len() != h * w {
            return Err(Error::contract(format!(
                "{h}x{w} plane needs {} values, got {}",
                h * w,
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Plane { h, w, data })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::contract(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `self * x + bias`.
    pub fn affine(&self, x: &[f64], bias: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(bias.len(), self.rows);
        self.data
            .chunks_exact(self.cols)
            .zip(bias)
            .map(|(row, b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect()
    }
}
