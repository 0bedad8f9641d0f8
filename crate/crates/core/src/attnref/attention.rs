use super::tensor::{Matrix, Plane, Tensor3};
use super::text::TensorSet;
use crate::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Two-layer MLP `w2 * relu(w1 * x + b1) + b2` with a `C / r` hidden layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelAttnWeights {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl ChannelAttnWeights {
    pub fn new(w1: Matrix, b1: Vec<f64>, w2: Matrix, b2: Vec<f64>) -> Result<Self> {
        let (hidden, c) = (w1.rows(), w1.cols());
        if b1.len() != hidden || w2.rows() != c || w2.cols() != hidden || b2.len() != c {
            return Err(Error::contract(format!(
                "inconsistent MLP shapes: w1 {hidden}x{c}, b1 {}, w2 {}x{}, b2 {}",
                b1.len(),
                w2.rows(),
                w2.cols(),
                b2.len()
            )));
        }
        if !c.is_multiple_of(hidden) {
            return Err(Error::contract(format!(
                "hidden width {hidden} does not divide {c} channels"
            )));
        }
        Ok(ChannelAttnWeights { w1, b1, w2, b2 })
    }

    /// All-zero weights for `channels` channels and reduction `r`.
    pub fn zeros(channels: usize, reduction: usize) -> Result<Self> {
        if reduction == 0 || !channels.is_multiple_of(reduction) {
            return Err(Error::contract(format!(
                "reduction {reduction} must divide {channels} channels"
            )));
        }
        let hidden = channels / reduction;
        Self::new(
            Matrix::zeros(hidden, channels),
            vec![0.0; hidden],
            Matrix::zeros(channels, hidden),
            vec![0.0; channels],
        )
    }

    pub fn channels(&self) -> usize {
        self.w1.cols()
    }

    pub fn reduction(&self) -> usize {
        self.w1.cols() / self.w1.rows()
    }

    pub fn mlp(&self, x: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = self
            .w1
            .affine(x, &self.b1)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        self.w2.affine(&hidden, &self.b2)
    }

    /// Reads `<prefix>.w1`, `<prefix>.b1`, `<prefix>.w2`, `<prefix>.b2`.
    pub fn from_set(set: &TensorSet, prefix: &str) -> Result<Self> {
        Self::new(
            set.matrix(&format!("{prefix}.w1"))?,
            set.vector(&format!("{prefix}.b1"))?,
            set.matrix(&format!("{prefix}.w2"))?,
            set.vector(&format!("{prefix}.b2"))?,
        )
    }
}

/// `k x k` convolution over the stacked `[avg, max]` planes.
///
/// `kernel` is laid out `[plane][row][col]` with plane 0 applied to the
/// channel mean and plane 1 to the channel max.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialAttnWeights {
    k: usize,
    kernel: Vec<f64>,
    pub bias: f64,
}

impl SpatialAttnWeights {
    pub fn new(k: usize, kernel: Vec<f64>, bias: f64) -> Result<Self> {
        if k.is_multiple_of(2) {
            return Err(Error::contract(format!("kernel size must be odd, got {k}")));
        }
        if kernel.len() != 2 * k * k {
            return Err(Error::contract(format!(
                "{k}x{k}x2 kernel needs {} values, got {}",
                2 * k * k,
                kernel.len()
            )));
        }
        if !bias.is_finite() || kernel.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract(
                "spatial weights must be finite".to_string(),
            ));
        }
        Ok(SpatialAttnWeights { k, kernel, bias })
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Self::new(k, vec![0.0; 2 * k * k], 0.0)
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    #[inline]
    pub fn tap(&self, plane: usize, dy: usize, dx: usize) -> f64 {
        self.kernel[(plane * self.k + dy) * self.k + dx]
    }

    /// Reads `<prefix>.kernel` (shape `2 k k`) and `<prefix>.bias` (one value).
    pub fn from_set(set: &TensorSet, prefix: &str) -> Result<Self> {
        let kernel = set.get(&format!("{prefix}.kernel"))?;
        let k = match kernel.shape.as_slice() {
            [2, a, b] if a == b => *a,
            other => {
                return Err(Error::contract(format!(
                    "{prefix}.kernel must have shape 2 k k, got {other:?}"
                )))
            }
        };
        let bias = set.vector(&format!("{prefix}.bias"))?;
        if bias.len() != 1 {
            return Err(Error::contract(format!(
                "{prefix}.bias must hold one value"
            )));
        }
        Self::new(k, kernel.values.clone(), bias[0])
    }
}

/// Fully connected layer followed by the gating MLP.
#[derive(Clone, Debug, PartialEq)]
pub struct DependenceWeights {
    pub fc: Matrix,
    pub fc_bias: Vec<f64>,
    pub mlp: ChannelAttnWeights,
}

impl DependenceWeights {
    pub fn new(fc: Matrix, fc_bias: Vec<f64>, mlp: ChannelAttnWeights) -> Result<Self> {
        let c = mlp.channels();
        if fc.rows() != c || fc.cols() != c || fc_bias.len() != c {
            return Err(Error::contract(format!(
                "fc must be {c}x{c} with {c} biases to match the MLP"
            )));
        }
        Ok(DependenceWeights { fc, fc_bias, mlp })
    }

    pub fn zeros(channels: usize, reduction: usize) -> Result<Self> {
        Self::new(
            Matrix::zeros(channels, channels),
            vec![0.0; channels],
            ChannelAttnWeights::zeros(channels, reduction)?,
        )
    }

    /// Reads `<prefix>.fc`, `<prefix>.fc_bias` and the MLP under `<prefix>.mlp`.
    pub fn from_set(set: &TensorSet, prefix: &str) -> Result<Self> {
        Self::new(
            set.matrix(&format!("{prefix}.fc"))?,
            set.vector(&format!("{prefix}.fc_bias"))?,
            ChannelAttnWeights::from_set(set, &format!("{prefix}.mlp"))?,
        )
    }
}

fn avg_pool(f: &Tensor3) -> Vec<f64> {
    let n = (f.height() * f.width()) as f64;
    (0..f.channels())
        .map(|c| f.channel(c).iter().sum::<f64>() / n)
        .collect()
}

fn max_pool(f: &Tensor3) -> Vec<f64> {
    (0..f.channels())
        .map(|c| {
            f.channel(c)
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Channel gate: `sigmoid(mlp(avgpool F) + mlp(maxpool F))`.
pub fn channel_attention(f: &Tensor3, w: &ChannelAttnWeights) -> Result<Vec<f64>> {
    if w.channels() != f.channels() {
        return Err(Error::contract(format!(
            "channel weights expect {} channels, tensor has {}",
            w.channels(),
            f.channels()
        )));
    }
    let a = w.mlp(&avg_pool(f));
    let m = w.mlp(&max_pool(f));
    Ok(a.iter().zip(&m).map(|(a, m)| sigmoid(a + m)).collect())
}

/// Scales every channel plane by its gate value.
pub fn apply_channel(f: &Tensor3, gate: &[f64]) -> Result<Tensor3> {
    if gate.len() != f.channels() {
        return Err(Error::contract(format!(
            "gate has {} entries for {} channels",
            gate.len(),
            f.channels()
        )));
    }
    f.map_indexed(|c, _, _, v| gate[c] * v)
}

/// Spatial gate from channel-wise mean and max planes, zero-padded `k x k`
/// cross-correlation and a sigmoid.
pub fn spatial_attention(f: &Tensor3, w: &SpatialAttnWeights) -> Result<Plane> {
    let (c, h, wd) = f.shape();
    let mut avg = vec![0.0; h * wd];
    let mut max = vec![f64::NEG_INFINITY; h * wd];
    for ci in 0..c {
        for (i, &v) in f.channel(ci).iter().enumerate() {
            avg[i] += v;
            max[i] = max[i].max(v);
        }
    }
    avg.iter_mut().for_each(|v| *v /= c as f64);

    let k = w.size();
    let pad = (k / 2) as isize;
    let mut out = Vec::with_capacity(h * wd);
    for y in 0..h as isize {
        for x in 0..wd as isize {
            let mut acc = w.bias;
            for dy in 0..k {
                let sy = y + dy as isize - pad;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for dx in 0..k {
                    let sx = x + dx as isize - pad;
                    if sx < 0 || sx >= wd as isize {
                        continue;
                    }
                    let i = sy as usize * wd + sx as usize;
                    acc += w.tap(0, dy, dx) * avg[i] + w.tap(1, dy, dx) * max[i];
                }
            }
            out.push(sigmoid(acc));
        }
    }
    Plane::new(h, wd, out)
}

/// Scales every channel by the spatial gate.
pub fn apply_spatial(f: &Tensor3, gate: &Plane) -> Result<Tensor3> {
    if gate.shape() != (f.height(), f.width()) {
        return Err(Error::contract(format!(
            "gate is {:?}, tensor plane is {}x{}",
            gate.shape(),
            f.height(),
            f.width()
        )));
    }
    f.map_indexed(|_, y, x, v| gate.get(y, x) * v)
}

/// Channel gating followed by spatial gating of the channel-gated map.
pub fn idiosyncrasy(
    f: &Tensor3,
    cw: &ChannelAttnWeights,
    sw: &SpatialAttnWeights,
) -> Result<Tensor3> {
    let gated = apply_channel(f, &channel_attention(f, cw)?)?;
    let s = spatial_attention(&gated, sw)?;
    apply_spatial(&gated, &s)
}

/// Cross-task gate: `own + other * sigmoid(mlp(fc(avgpool other)))`.
///
/// Called with `(F'_dr, F'_dme)` it yields the DR output; swapping the
/// arguments (and weights) yields the DME output.
pub fn dependence(own: &Tensor3, other: &Tensor3, w: &DependenceWeights) -> Result<Tensor3> {
    if own.shape() != other.shape() {
        return Err(Error::contract(format!(
            "dependence inputs differ in shape: {:?} vs {:?}",
            own.shape(),
            other.shape()
        )));
    }
    if w.mlp.channels() != own.channels() {
        return Err(Error::contract(format!(
            "dependence weights expect {} channels, tensor has {}",
            w.mlp.channels(),
            own.channels()
        )));
    }
    let pooled = avg_pool(other);
    let gate: Vec<f64> = w
        .mlp
        .mlp(&w.fc.affine(&pooled, &w.fc_bias))
        .into_iter()
        .map(sigmoid)
        .collect();
    own.map_indexed(|c, y, x, v| v + gate[c] * other.get(c, y, x))
}
