//! Scalar forward passes and hand-derived backward passes for the attention
//! blocks. Tensors are `[c][y][x]` flattened; weights are row-major.

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// MLP weights: `w1` is `hidden x c`, `w2` is `c x hidden`.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub c: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Mlp {
    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut pre = vec![0.0; self.hidden];
        for j in 0..self.hidden {
            pre[j] = self.b1[j];
            for i in 0..self.c {
                pre[j] += self.w1[j * self.c + i] * x[i];
            }
        }
        let mut out = vec![0.0; self.c];
        for i in 0..self.c {
            out[i] = self.b2[i];
            for j in 0..self.hidden {
                out[i] += self.w2[i * self.hidden + j] * pre[j].max(0.0);
            }
        }
        (pre, out)
    }

    /// Gradient w.r.t. the input given the upstream gradient `dout`.
    pub fn backward(&self, pre: &[f64], dout: &[f64]) -> Vec<f64> {
        let mut dh = vec![0.0; self.hidden];
        for j in 0..self.hidden {
            if pre[j] > 0.0 {
                for i in 0..self.c {
                    dh[j] += self.w2[i * self.hidden + j] * dout[i];
                }
            }
        }
        let mut dx = vec![0.0; self.c];
        for i in 0..self.c {
            for j in 0..self.hidden {
                dx[i] += self.w1[j * self.c + i] * dh[j];
            }
        }
        dx
    }
}

/// Spatial weights: kernel `[plane][dy][dx]`, plane 0 = mean, plane 1 = max.
#[derive(Clone, Debug)]
pub struct Spatial {
    pub k: usize,
    pub kernel: Vec<f64>,
    pub bias: f64,
}

pub struct Shape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn at(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.h + y) * self.w + x
    }
    pub fn len(&self) -> usize {
        self.c * self.h * self.w
    }
}

pub fn channel_gate(f: &[f64], s: &Shape, m: &Mlp) -> Vec<f64> {
    let n = (s.h * s.w) as f64;
    let mut avg = vec![0.0; s.c];
    let mut max = vec![f64::NEG_INFINITY; s.c];
    for c in 0..s.c {
        for y in 0..s.h {
            for x in 0..s.w {
                let v = f[s.at(c, y, x)];
                avg[c] += v / n;
                if v > max[c] {
                    max[c] = v;
                }
            }
        }
    }
    let (_, a) = m.forward(&avg);
    let (_, b) = m.forward(&max);
    (0..s.c).map(|c| sig(a[c] + b[c])).collect()
}

pub fn spatial_gate(f: &[f64], s: &Shape, sp: &Spatial) -> Vec<f64> {
    let pad = (sp.k / 2) as i64;
    let mut out = vec![0.0; s.h * s.w];
    for y in 0..s.h {
        for x in 0..s.w {
            let mut z = sp.bias;
            for dy in 0..sp.k {
                for dx in 0..sp.k {
                    let yy = y as i64 + dy as i64 - pad;
                    let xx = x as i64 + dx as i64 - pad;
                    if yy < 0 || xx < 0 || yy >= s.h as i64 || xx >= s.w as i64 {
                        continue;
                    }
                    let (yy, xx) = (yy as usize, xx as usize);
                    let mut mean = 0.0;
                    let mut mx = f64::NEG_INFINITY;
                    for c in 0..s.c {
                        let v = f[s.at(c, yy, xx)];
                        mean += v;
                        mx = mx.max(v);
                    }
                    mean /= s.c as f64;
                    z += sp.kernel[dy * sp.k + dx] * mean
                        + sp.kernel[sp.k * sp.k + dy * sp.k + dx] * mx;
                }
            }
            out[y * s.w + x] = sig(z);
        }
    }
    out
}

pub fn idiosyncrasy(f: &[f64], s: &Shape, m: &Mlp, sp: &Spatial) -> Vec<f64> {
    let g = channel_gate(f, s, m);
    let mut fi = f.to_vec();
    for c in 0..s.c {
        for y in 0..s.h {
            for x in 0..s.w {
                fi[s.at(c, y, x)] *= g[c];
            }
        }
    }
    let sg = spatial_gate(&fi, s, sp);
    let mut out = fi.clone();
    for c in 0..s.c {
        for y in 0..s.h {
            for x in 0..s.w {
                out[s.at(c, y, x)] *= sg[y * s.w + x];
            }
        }
    }
    out
}

/// Dependence output; `fc` is `c x c`.
pub fn dependence(
    own: &[f64],
    other: &[f64],
    s: &Shape,
    fc: &[f64],
    fc_b: &[f64],
    m: &Mlp,
) -> Vec<f64> {
    let gate = dependence_gate(other, s, fc, fc_b, m).2;
    let mut out = own.to_vec();
    for c in 0..s.c {
        for y in 0..s.h {
            for x in 0..s.w {
                out[s.at(c, y, x)] += gate[c] * other[s.at(c, y, x)];
            }
        }
    }
    out
}

/// `(fc output, mlp pre-activation, gate)`.
fn dependence_gate(
    other: &[f64],
    s: &Shape,
    fc: &[f64],
    fc_b: &[f64],
    m: &Mlp,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = (s.h * s.w) as f64;
    let mut pooled = vec![0.0; s.c];
    for c in 0..s.c {
        for i in 0..s.h * s.w {
            pooled[c] += other[c * s.h * s.w + i] / n;
        }
    }
    let mut u = fc_b.to_vec();
    for i in 0..s.c {
        for j in 0..s.c {
            u[i] += fc[i * s.c + j] * pooled[j];
        }
    }
    let (pre, z) = m.forward(&u);
    (u, pre, z.into_iter().map(sig).collect())
}

/// Gradient of `sum(upstream * idiosyncrasy(F))` w.r.t. `F`.
pub fn idiosyncrasy_backward(
    f: &[f64],
    s: &Shape,
    m: &Mlp,
    sp: &Spatial,
    upstream: &[f64],
) -> Vec<f64> {
    let hw = s.h * s.w;
    let n = hw as f64;
    // forward with saved intermediates
    let mut avg = vec![0.0; s.c];
    let mut amax = vec![0usize; s.c];
    for c in 0..s.c {
        for i in 0..hw {
            avg[c] += f[c * hw + i] / n;
            if f[c * hw + i] > f[c * hw + amax[c]] {
                amax[c] = i;
            }
        }
    }
    let maxv: Vec<f64> = (0..s.c).map(|c| f[c * hw + amax[c]]).collect();
    let (pre_a, za) = m.forward(&avg);
    let (pre_m, zm) = m.forward(&maxv);
    let g: Vec<f64> = (0..s.c).map(|c| sig(za[c] + zm[c])).collect();
    let fi: Vec<f64> = (0..s.len()).map(|i| f[i] * g[i / hw]).collect();

    let mut mean = vec![0.0; hw];
    let mut cmax = vec![0usize; hw];
    for i in 0..hw {
        for c in 0..s.c {
            mean[i] += fi[c * hw + i] / s.c as f64;
            if fi[c * hw + i] > fi[cmax[i] * hw + i] {
                cmax[i] = c;
            }
        }
    }
    let sg = spatial_gate(&fi, s, sp);

    // out = sg * fi
    let mut dfi: Vec<f64> = (0..s.len()).map(|i| upstream[i] * sg[i % hw]).collect();
    let mut dsg = vec![0.0; hw];
    for i in 0..s.len() {
        dsg[i % hw] += upstream[i] * fi[i];
    }
    let dz: Vec<f64> = (0..hw).map(|i| dsg[i] * sg[i] * (1.0 - sg[i])).collect();
    let pad = (sp.k / 2) as i64;
    let mut dmean = vec![0.0; hw];
    let mut dmax = vec![0.0; hw];
    for y in 0..s.h {
        for x in 0..s.w {
            for dy in 0..sp.k {
                for dx in 0..sp.k {
                    let yy = y as i64 + dy as i64 - pad;
                    let xx = x as i64 + dx as i64 - pad;
                    if yy < 0 || xx < 0 || yy >= s.h as i64 || xx >= s.w as i64 {
                        continue;
                    }
                    let j = yy as usize * s.w + xx as usize;
                    dmean[j] += dz[y * s.w + x] * sp.kernel[dy * sp.k + dx];
                    dmax[j] += dz[y * s.w + x] * sp.kernel[sp.k * sp.k + dy * sp.k + dx];
                }
            }
        }
    }
    for i in 0..hw {
        for c in 0..s.c {
            dfi[c * hw + i] += dmean[i] / s.c as f64;
        }
        dfi[cmax[i] * hw + i] += dmax[i];
    }

    // fi = g * f
    let mut df: Vec<f64> = (0..s.len()).map(|i| dfi[i] * g[i / hw]).collect();
    let mut dg = vec![0.0; s.c];
    for i in 0..s.len() {
        dg[i / hw] += dfi[i] * f[i];
    }
    let dzc: Vec<f64> = (0..s.c).map(|c| dg[c] * g[c] * (1.0 - g[c])).collect();
    let davg = m.backward(&pre_a, &dzc);
    let dmaxc = m.backward(&pre_m, &dzc);
    for c in 0..s.c {
        for i in 0..hw {
            df[c * hw + i] += davg[c] / n;
        }
        df[c * hw + amax[c]] += dmaxc[c];
    }
    df
}

/// Gradients of `sum(upstream * dependence(own, other))` w.r.t. `own` and `other`.
pub fn dependence_backward(
    other: &[f64],
    s: &Shape,
    fc: &[f64],
    fc_b: &[f64],
    m: &Mlp,
    upstream: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let hw = s.h * s.w;
    let (_, pre, gate) = dependence_gate(other, s, fc, fc_b, m);
    let d_own = upstream.to_vec();
    let mut d_other: Vec<f64> = (0..s.len()).map(|i| upstream[i] * gate[i / hw]).collect();
    let mut dg = vec![0.0; s.c];
    for i in 0..s.len() {
        dg[i / hw] += upstream[i] * other[i];
    }
    let dz: Vec<f64> = (0..s.c)
        .map(|c| dg[c] * gate[c] * (1.0 - gate[c]))
        .collect();
    let du = m.backward(&pre, &dz);
    let mut dpooled = vec![0.0; s.c];
    for i in 0..s.c {
        for j in 0..s.c {
            dpooled[j] += fc[i * s.c + j] * du[i];
        }
    }
    for c in 0..s.c {
        for i in 0..hw {
            d_other[c * hw + i] += dpooled[c] / hw as f64;
        }
    }
    (d_own, d_other)
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// d/dz of `-ln(softmax(z)[label])`: `softmax(z) - onehot(label)`.
pub fn softmax_cross_entropy_grad(z: &[f64], label: usize) -> Vec<f64> {
    let p = softmax(z);
    (0..z.len())
        .map(|i| p[i] - if i == label { 1.0 } else { 0.0 })
        .collect()
}
