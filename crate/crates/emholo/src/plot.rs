//! Minimal line-plot rasterizer for merit and CTF curves.

/// Renders `ys` against `xs` as a dark polyline on a light background with
/// a frame; the vertical range is padded by 5%. An optional marker draws a
/// vertical line at that x value.
pub fn render_curve(xs: &[f64], ys: &[f64], width: usize, height: usize, marker: Option<f64>) -> Vec<u8> {
    let mut px = vec![255u8; width * height];
    if xs.len() < 2 || xs.len() != ys.len() || width < 8 || height < 8 {
        return px;
    }
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let (mut y0, mut y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 1.0 };
    y0 -= pad;
    y1 += pad;
    let margin = 4.0;
    let to_px = |x: f64, y: f64| {
        let u = margin + (x - x0) / (x1 - x0) * (width as f64 - 2.0 * margin - 1.0);
        let v = margin + (y1 - y) / (y1 - y0) * (height as f64 - 2.0 * margin - 1.0);
        (u.round() as i64, v.round() as i64)
    };
    let mut set = |x: i64, y: i64, shade: u8| {
        if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
            px[y as usize * width + x as usize] = shade;
        }
    };
    for x in 0..width as i64 {
        set(x, 0, 160);
        set(x, height as i64 - 1, 160);
    }
    for y in 0..height as i64 {
        set(0, y, 160);
        set(width as i64 - 1, y, 160);
    }
    if let Some(m) = marker {
        let (u, _) = to_px(m, y0);
        for y in 1..height as i64 - 1 {
            set(u, y, 190);
        }
    }
    for k in 1..xs.len() {
        let (ua, va) = to_px(xs[k - 1], ys[k - 1]);
        let (ub, vb) = to_px(xs[k], ys[k]);
        // Bresenham
        let (dx, dy) = ((ub - ua).abs(), -(vb - va).abs());
        let (sx, sy) = (if ua < ub { 1 } else { -1 }, if va < vb { 1 } else { -1 });
        let (mut u, mut v, mut err) = (ua, va, dx + dy);
        loop {
            set(u, v, 0);
            if u == ub && v == vb {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                u += sx;
            }
            if e2 <= dx {
                err += dx;
                v += sy;
            }
        }
    }
    px
}
