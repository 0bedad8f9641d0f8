/// Mirror index into `0..n` without repeating the edge sample.
pub fn mirror(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Full 2-D Gaussian convolution of one plane, no separability.
pub fn gaussian_direct(plane: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::new();
    let mut sum = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let v = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            kernel.push((dx, dy, v));
            sum += v;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for &(dx, dy, v) in &kernel {
                let sx = mirror(x as i64 + dx, w);
                let sy = mirror(y as i64 + dy, h);
                acc += v / sum * plane[sy * w + sx];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// `clamp(round(alpha * I + beta * blur(I) + bias))` on an 8-bit plane.
pub fn ben_direct(
    plane: &[u8],
    w: usize,
    h: usize,
    sigma: f64,
    alpha: f64,
    beta: f64,
    bias: f64,
) -> Vec<u8> {
    let f: Vec<f64> = plane.iter().map(|&v| v as f64).collect();
    let g = gaussian_direct(&f, w, h, sigma);
    f.iter()
        .zip(&g)
        .map(|(i, b)| {
            let v = alpha * i + beta * b + bias;
            if v <= 0.0 {
                0
            } else if v >= 255.0 {
                255
            } else {
                (v + 0.5).floor() as u8
            }
        })
        .collect()
}

/// Global histogram equalization: `round(255 * cdf(v) / N)`.
pub fn global_equalize(plane: &[u8]) -> Vec<u8> {
    let n = plane.len() as u64;
    plane
        .iter()
        .map(|&v| {
            let below = plane.iter().filter(|&&p| p <= v).count() as u64;
            ((510 * below + n) / (2 * n)) as u8
        })
        .collect()
}

fn tile_bounds(len: usize, tiles: usize) -> Vec<(usize, usize)> {
    let base = len / tiles;
    let mut out = Vec::new();
    for t in 0..tiles {
        let start = t * base;
        let end = if t == tiles - 1 { len } else { (t + 1) * base };
        out.push((start, end));
    }
    out
}

/// Straight-line CLAHE reference for one 8-bit plane.
///
/// Clip threshold `max(floor(clip * n / 256), 1)`, excess shared evenly
/// across the 256 bins in one pass, mapping `round(255 * cdf)`, bilinear
/// blend between tile centres with edge replication.
pub fn clahe_reference(
    plane: &[u8],
    w: usize,
    h: usize,
    tiles_x: usize,
    tiles_y: usize,
    clip: f64,
) -> Vec<u8> {
    let xb = tile_bounds(w, tiles_x);
    let yb = tile_bounds(h, tiles_y);

    let mut maps = vec![vec![[0u8; 256]; tiles_x]; tiles_y];
    for (ty, &(y0, y1)) in yb.iter().enumerate() {
        for (tx, &(x0, x1)) in xb.iter().enumerate() {
            let n = ((x1 - x0) * (y1 - y0)) as u64;
            let mut hist = [0u64; 256];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[plane[y * w + x] as usize] += 1;
                }
            }
            let limit = ((clip * n as f64 / 256.0).floor() as u64).max(1);
            let mut excess = 0;
            for b in hist.iter() {
                if *b > limit {
                    excess += *b - limit;
                }
            }
            for v in 0..256 {
                // cdf(v) * 256 * n
                let kept: u64 = hist[..=v].iter().map(|&b| b.min(limit)).sum();
                let num = 256 * kept + (v as u64 + 1) * excess;
                let den = 256 * n;
                maps[ty][tx][v] = ((2 * 255 * num + den) / (2 * den)) as u8;
            }
        }
    }

    // Doubled centre coordinates.
    let cx: Vec<i64> = xb.iter().map(|&(a, b)| (a + b - 1) as i64).collect();
    let cy: Vec<i64> = yb.iter().map(|&(a, b)| (a + b - 1) as i64).collect();
    let neighbours = |c: &[i64], p: i64| -> (usize, usize, i64, i64) {
        if p <= c[0] {
            return (0, 0, 0, 1);
        }
        let last = c.len() - 1;
        if p >= c[last] {
            return (last, last, 0, 1);
        }
        let mut i = 0;
        while !(c[i] <= p && p < c[i + 1]) {
            i += 1;
        }
        (i, i + 1, p - c[i], c[i + 1] - c[i])
    };

    let mut out = vec![0u8; w * h];
    for y in 0..h {
        let (t0, t1, ny, dy) = neighbours(&cy, 2 * y as i64);
        for x in 0..w {
            let (s0, s1, nx, dx) = neighbours(&cx, 2 * x as i64);
            let v = plane[y * w + x] as usize;
            let a = maps[t0][s0][v] as i64;
            let b = maps[t0][s1][v] as i64;
            let c = maps[t1][s0][v] as i64;
            let d = maps[t1][s1][v] as i64;
            let num =
                a * (dx - nx) * (dy - ny) + b * nx * (dy - ny) + c * (dx - nx) * ny + d * nx * ny;
            let den = dx * dy;
            out[y * w + x] = ((2 * num + den) / (2 * den)) as u8;
        }
    }
    out
}

/// Bilinear sample with half-pixel centres, evaluated directly.
pub fn bilinear_direct(plane: &[f64], w: usize, h: usize, out_w: usize, out_h: usize) -> Vec<f64> {
    let coord = |d: usize, n_in: usize, n_out: usize| {
        let s = (d as f64 + 0.5) * (n_in as f64 / n_out as f64) - 0.5;
        s.clamp(0.0, (n_in - 1) as f64)
    };
    let mut out = Vec::new();
    for oy in 0..out_h {
        let sy = coord(oy, h, out_h);
        let (y0, fy) = (sy.floor() as usize, sy - sy.floor());
        let y1 = (y0 + 1).min(h - 1);
        for ox in 0..out_w {
            let sx = coord(ox, w, out_w);
            let (x0, fx) = (sx.floor() as usize, sx - sx.floor());
            let x1 = (x0 + 1).min(w - 1);
            let p = |x: usize, y: usize| plane[y * w + x];
            out.push(
                p(x0, y0) * (1.0 - fx) * (1.0 - fy)
                    + p(x1, y0) * fx * (1.0 - fy)
                    + p(x0, y1) * (1.0 - fx) * fy
                    + p(x1, y1) * fx * fy,
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_small() {
        assert_eq!(mirror(-1, 4), 1);
        assert_eq!(mirror(4, 4), 2);
        assert_eq!(mirror(-9, 3), 1);
    }

    #[test]
    fn equalize_two_levels() {
        // half 10s, half 20s -> 10 maps to round(127.5) = 128, 20 to 255
        assert_eq!(global_equalize(&[10, 20, 10, 20]), vec![128, 255, 128, 255]);
    }
}
