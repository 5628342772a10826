//! Minimal line-plot renderer for sweep results. Points are spaced evenly
//! along x in input order and labeled with their value text; the y axis is
//! scaled to the data.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

const W: u32 = 640;
const H: u32 = 400;
const LEFT: i64 = 70;
const RIGHT: i64 = 30;
const TOP: i64 = 30;
const BOTTOM: i64 = 50;

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
const LINE: Rgb<u8> = Rgb([31, 119, 180]);

/// 3x5 glyphs, one row per `u8`, high three bits used.
fn glyph(c: char) -> Option<[u8; 5]> {
    Some(match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        'e' => [0b000, 0b111, 0b111, 0b100, 0b111],
        _ => return None,
    })
}

struct Canvas(RgbImage);

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if x >= 0 && y >= 0 && x < W as i64 && y < H as i64 {
            self.0.put_pixel(x as u32, y as u32, c);
        }
    }

    fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>) {
        // Bresenham
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn square(&mut self, x: i64, y: i64, r: i64, c: Rgb<u8>) {
        for yy in y - r..=y + r {
            for xx in x - r..=x + r {
                self.put(xx, yy, c);
            }
        }
    }

    /// Text at scale 2, `(x, y)` is the top-left corner.
    fn text(&mut self, x: i64, y: i64, s: &str) {
        let mut cx = x;
        for ch in s.chars() {
            if let Some(g) = glyph(ch) {
                for (row, bits) in g.iter().enumerate() {
                    for col in 0..3 {
                        if bits & (0b100 >> col) != 0 {
                            for (ox, oy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                                self.put(cx + 2 * col + ox, y + 2 * row as i64 + oy, BLACK);
                            }
                        }
                    }
                }
            }
            cx += 8;
        }
    }
}

fn text_width(s: &str) -> i64 {
    8 * s.chars().count() as i64
}

/// Renders `(label, y)` points as a polyline with markers.
pub fn render_line_plot(points: &[(String, f64)]) -> Result<RgbImage> {
    if points.is_empty() {
        return Err(Error::InvalidParams("nothing to plot".into()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::InvalidParams("plot values must be finite".into()));
    }
    let mut lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.08 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let mut c = Canvas(RgbImage::from_pixel(W, H, WHITE));
    let (x0, x1) = (LEFT, W as i64 - RIGHT);
    let (y0, y1) = (TOP, H as i64 - BOTTOM);
    let ypix = |v: f64| y1 - ((v - lo) / (hi - lo) * (y1 - y0) as f64).round() as i64;
    let n = points.len() as i64;
    let xpix = |i: i64| {
        if n == 1 {
            (x0 + x1) / 2
        } else {
            x0 + 20 + i * (x1 - x0 - 40) / (n - 1)
        }
    };

    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = ypix(v);
        c.line((x0, y), (x1, y), GRID);
        let label = format!("{v:.3}");
        c.text(x0 - 8 - text_width(&label), y - 5, &label);
    }
    c.line((x0, y0), (x0, y1), BLACK);
    c.line((x0, y1), (x1, y1), BLACK);

    let pts: Vec<(i64, i64)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (xpix(i as i64), ypix(p.1)))
        .collect();
    for w in pts.windows(2) {
        c.line(w[0], w[1], LINE);
    }
    for (i, &(x, y)) in pts.iter().enumerate() {
        c.square(x, y, 3, LINE);
        c.line((x, y1), (x, y1 + 4), BLACK);
        let label = &points[i].0;
        c.text(x - text_width(label) / 2, y1 + 10, label);
    }
    Ok(c.0)
}

pub fn save_line_plot(points: &[(String, f64)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    render_line_plot(points)?
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, e))
}
