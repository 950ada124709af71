//! Escape-time images of the dynamical and parameter planes with ray
//! overlays, written as binary PPM.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{escape_time, ComplexPoint, DEFAULT_ESCAPE_RE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageSpec {
    pub center: ComplexPoint,
    pub width_units: f64,
    pub width_px: usize,
    pub height_px: usize,
    pub max_iter: usize,
    pub escape_re: f64,
}

impl Default for ImageSpec {
    fn default() -> Self {
        Self {
            center: Complex64::new(0.0, 0.0),
            width_units: 8.0,
            width_px: 400,
            height_px: 400,
            max_iter: 256,
            escape_re: DEFAULT_ESCAPE_RE,
        }
    }
}

impl ImageSpec {
    fn pixel_size(&self) -> f64 {
        self.width_units / self.width_px as f64
    }

    /// Plane coordinate of the centre of pixel `(col, row)`; row 0 is the top.
    pub fn pixel_center(&self, col: usize, row: usize) -> ComplexPoint {
        let d = self.pixel_size();
        Complex64::new(
            self.center.re + (col as f64 + 0.5 - self.width_px as f64 / 2.0) * d,
            self.center.im - (row as f64 + 0.5 - self.height_px as f64 / 2.0) * d,
        )
    }

    /// Pixel containing `z`, which may lie outside the image.
    pub fn to_pixel(&self, z: ComplexPoint) -> (i64, i64) {
        let d = self.pixel_size();
        let col = ((z.re - self.center.re) / d + self.width_px as f64 / 2.0).floor();
        let row = ((self.center.im - z.im) / d + self.height_px as f64 / 2.0).floor();
        (col.clamp(-1e9, 1e9) as i64, row.clamp(-1e9, 1e9) as i64)
    }
}

/// Grayscale raster plus the escape count behind each pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub escape: Vec<Option<usize>>,
}

pub const OVERLAY: u8 = 0;
pub const NON_ESCAPING: u8 = 255;

fn shade(n: Option<usize>, max_iter: usize) -> u8 {
    match n {
        Some(n) => (32 + 192 * n.min(max_iter) / max_iter.max(1)) as u8,
        None => NON_ESCAPING,
    }
}

impl Image {
    fn render(spec: &ImageSpec, escape: impl Fn(ComplexPoint) -> Option<usize> + Sync) -> Self {
        let (w, h) = (spec.width_px, spec.height_px);
        let mut counts = vec![None; w * h];
        counts.par_chunks_mut(w.max(1)).enumerate().for_each(|(row, line)| {
            for (col, out) in line.iter_mut().enumerate() {
                *out = escape(spec.pixel_center(col, row));
            }
        });
        let pixels = counts.iter().map(|&n| shade(n, spec.max_iter)).collect();
        Self { width: w, height: h, pixels, escape: counts }
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn escape_at(&self, col: usize, row: usize) -> Option<usize> {
        self.escape[row * self.width + col]
    }

    fn contains(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height
    }

    /// Pixels on the Bresenham polyline through `points`, clipped to the image.
    pub fn polyline_pixels(&self, spec: &ImageSpec, points: &[ComplexPoint]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut plot = |x: i64, y: i64| {
            if self.contains(x, y) {
                out.push((x as usize, y as usize));
            }
        };
        let px: Vec<(i64, i64)> = points.iter().filter(|z| z.is_finite()).map(|&z| spec.to_pixel(z)).collect();
        if let [only] = px.as_slice() {
            plot(only.0, only.1);
        }
        for seg in px.windows(2) {
            let ((mut x0, mut y0), (x1, y1)) = (seg[0], seg[1]);
            // segments far outside the frame carry nothing to draw
            let span = (x1 - x0).abs().max((y1 - y0).abs());
            if span > 4 * (self.width + self.height) as i64 {
                let outside = |x: i64, y: i64| !self.contains(x, y);
                if outside(x0, y0) && outside(x1, y1) {
                    continue;
                }
            }
            let dx = (x1 - x0).abs();
            let dy = -(y1 - y0).abs();
            let sx = if x0 < x1 { 1 } else { -1 };
            let sy = if y0 < y1 { 1 } else { -1 };
            let mut err = dx + dy;
            loop {
                plot(x0, y0);
                if x0 == x1 && y0 == y1 {
                    break;
                }
                let e2 = 2 * err;
                if e2 >= dy {
                    err += dy;
                    x0 += sx;
                }
                if e2 <= dx {
                    err += dx;
                    y0 += sy;
                }
            }
        }
        out
    }

    pub fn draw_polyline(&mut self, spec: &ImageSpec, points: &[ComplexPoint]) {
        for (x, y) in self.polyline_pixels(spec, points) {
            self.pixels[y * self.width + x] = OVERLAY;
        }
    }

    /// Binary PPM (P6) with equal RGB channels.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for &p in &self.pixels {
            out.extend_from_slice(&[p, p, p]);
        }
        out
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&self.to_ppm())
    }
}

/// Escape-time picture of the parameter plane: each pixel is a `κ` and the
/// singular orbit `0, e^κ, ...` is iterated.
pub fn render_parameter_plane<'a>(spec: &ImageSpec, overlays: impl IntoIterator<Item = &'a [ComplexPoint]>) -> Image {
    let mut img = Image::render(spec, |kappa| escape_time(kappa, Complex64::new(0.0, 0.0), spec.max_iter, spec.escape_re));
    for line in overlays {
        img.draw_polyline(spec, line);
    }
    img
}

/// Escape-time picture of the dynamical plane of `E_κ`.
pub fn render_dynamic_plane<'a>(
    kappa: ComplexPoint,
    spec: &ImageSpec,
    overlays: impl IntoIterator<Item = &'a [ComplexPoint]>,
) -> Image {
    let mut img = Image::render(spec, |z| escape_time(kappa, z, spec.max_iter, spec.escape_re));
    for line in overlays {
        img.draw_polyline(spec, line);
    }
    img
}
