//! Heatmap PNGs: time on x, frequency on y (log-spaced, high frequencies at
//! the bottom), value as colour, cells outside the cone of influence shaded
//! and hatched.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{write_atomic, LabeledMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorMap {
    /// Dark blue through red to pale yellow; luminance increases throughout.
    #[default]
    #[serde(alias = "bluered", alias = "blue_red")]
    BlueRed,
    #[serde(alias = "gray", alias = "grey")]
    Grayscale,
}

impl std::str::FromStr for ColorMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blue-red" | "bluered" | "blue_red" => Ok(Self::BlueRed),
            "gray" | "grey" | "grayscale" => Ok(Self::Grayscale),
            _ => Err(Error::Config(format!("unknown colour map {s:?}"))),
        }
    }
}

const BLUE_RED: [[f64; 3]; 4] = [
    [10.0, 10.0, 60.0],
    [40.0, 80.0, 200.0],
    [230.0, 70.0, 40.0],
    [255.0, 230.0, 200.0],
];

impl ColorMap {
    /// `t` in [0, 1].
    pub fn rgb(self, t: f64) -> [u8; 3] {
        let t = t.clamp(0.0, 1.0);
        match self {
            ColorMap::Grayscale => {
                let v = (t * 255.0).round() as u8;
                [v, v, v]
            }
            ColorMap::BlueRed => {
                let x = t * (BLUE_RED.len() - 1) as f64;
                let i = (x.floor() as usize).min(BLUE_RED.len() - 2);
                let f = x - i as f64;
                let (a, b) = (BLUE_RED[i], BLUE_RED[i + 1]);
                [0, 1, 2].map(|c| (a[c] + f * (b[c] - a[c])).round() as u8)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub colormap: ColorMap,
    /// Plot-area size target in pixels; each cell is at least one pixel.
    pub target_width: usize,
    pub target_height: usize,
    pub title: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            colormap: ColorMap::BlueRed,
            target_width: 800,
            target_height: 330,
            title: String::new(),
        }
    }
}

/// Pixel geometry of a rendered heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeatmapLayout {
    pub width: usize,
    pub height: usize,
    pub plot_x: usize,
    pub plot_y: usize,
    pub cell_width: usize,
    pub cell_height: usize,
    pub columns: usize,
    pub rows: usize,
}

impl HeatmapLayout {
    /// Centre pixel of cell (scale row `j`, time column `k`).
    pub fn cell_center(&self, j: usize, k: usize) -> (usize, usize) {
        let x = self.plot_x + k * self.cell_width + self.cell_width / 2;
        // row 0 (smallest scale, highest frequency) at the bottom
        let y = self.plot_y + (self.rows - 1 - j) * self.cell_height + self.cell_height / 2;
        (x, y)
    }
}

const MARGIN_LEFT: usize = 34;
const MARGIN_RIGHT: usize = 34;
const MARGIN_TOP: usize = 8;
const MARGIN_BOTTOM: usize = 12;
const BACKGROUND: [u8; 3] = [255, 255, 255];
const INK: [u8; 3] = [0, 0, 0];
const HATCH: [u8; 3] = [90, 90, 90];

struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Canvas {
    fn new(width: usize, height: usize) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&BACKGROUND);
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    fn set(&mut self, x: usize, y: usize, c: [u8; 3]) {
        if x < self.width && y < self.height {
            let i = (y * self.width + x) * 3;
            self.pixels[i..i + 3].copy_from_slice(&c);
        }
    }

    fn text(&mut self, x: usize, y: usize, s: &str) {
        let mut cx = x;
        for ch in s.chars() {
            if let Some(rows) = glyph(ch) {
                for (dy, bits) in rows.iter().enumerate() {
                    for dx in 0..3 {
                        if bits & (0b100 >> dx) != 0 {
                            self.set(cx + dx, y + dy, INK);
                        }
                    }
                }
            }
            cx += 4;
        }
    }
}

/// 3×5 bitmap digits plus `/` and `.`.
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
        '/' => [0b001, 0b001, 0b010, 0b100, 0b100],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        _ => return None,
    })
}

fn check_finite(m: &LabeledMatrix) -> Result<()> {
    let (nj, nk) = m.values.dim();
    if nj == 0 || nk == 0 {
        return Err(Error::Input("cannot render an empty matrix".into()));
    }
    if m.scales.len() != nj || m.frequencies.len() != nj || m.coi.len() != nk {
        return Err(Error::Input("matrix and axis lengths disagree".into()));
    }
    if let Some(((j, k), v)) = m.values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite value {v} at row {j}, column {k}")));
    }
    Ok(())
}

/// Encodes the heatmap to PNG bytes.
pub fn render_png(m: &LabeledMatrix, options: &RenderOptions) -> Result<(Vec<u8>, HeatmapLayout)> {
    check_finite(m)?;
    let (nj, nk) = m.values.dim();
    let cell_width = (options.target_width / nk).max(1);
    let cell_height = (options.target_height / nj).max(1);
    let layout = HeatmapLayout {
        width: MARGIN_LEFT + nk * cell_width + MARGIN_RIGHT,
        height: MARGIN_TOP + nj * cell_height + MARGIN_BOTTOM,
        plot_x: MARGIN_LEFT,
        plot_y: MARGIN_TOP,
        cell_width,
        cell_height,
        columns: nk,
        rows: nj,
    };
    let mut canvas = Canvas::new(layout.width, layout.height);

    let (lo, hi) = m
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let norm = |v: f64| if span > 0.0 { (v - lo) / span } else { 0.5 };

    for j in 0..nj {
        for k in 0..nk {
            let inside = m.scales[j] <= m.coi[k];
            let base = options.colormap.rgb(norm(m.values[[j, k]]));
            let shaded = if inside {
                base
            } else {
                base.map(|c| ((c as u16 + 2 * 200) / 3) as u8)
            };
            let (x0, y0) = (
                layout.plot_x + k * cell_width,
                layout.plot_y + (nj - 1 - j) * cell_height,
            );
            for y in y0..y0 + cell_height {
                for x in x0..x0 + cell_width {
                    let hatch = !inside && (x + y) % 6 == 0;
                    canvas.set(x, y, if hatch { HATCH } else { shaded });
                }
            }
        }
    }
    draw_axes(&mut canvas, &layout, m);
    draw_colorbar(&mut canvas, &layout, options.colormap);

    let mut bytes = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut bytes, layout.width as u32, layout.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let png_err = |e: png::EncodingError| Error::Input(format!("png encoding: {e}"));
        if !options.title.is_empty() {
            enc.add_text_chunk("Title".into(), options.title.clone()).map_err(png_err)?;
        }
        enc.add_text_chunk("Software".into(), format!("wavescope {}", env!("CARGO_PKG_VERSION")))
            .map_err(png_err)?;
        enc.add_text_chunk(
            "Comment".into(),
            format!("y: cycles per time unit, log-spaced; range [{lo}, {hi}]"),
        )
        .map_err(png_err)?;
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(&canvas.pixels).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok((bytes, layout))
}

/// Renders and writes atomically. Nothing is written if the matrix is not
/// finite.
pub fn render_heatmap(m: &LabeledMatrix, path: &Path, options: &RenderOptions) -> Result<HeatmapLayout> {
    let (bytes, layout) = render_png(m, options)?;
    write_atomic(path, &bytes)?;
    Ok(layout)
}

fn draw_axes(canvas: &mut Canvas, l: &HeatmapLayout, m: &LabeledMatrix) {
    let (x0, y0) = (l.plot_x - 1, l.plot_y - 1);
    let (x1, y1) = (l.plot_x + l.columns * l.cell_width, l.plot_y + l.rows * l.cell_height);
    for x in x0..=x1 {
        canvas.set(x, y0, INK);
        canvas.set(x, y1, INK);
    }
    for y in y0..=y1 {
        canvas.set(x0, y, INK);
        canvas.set(x1, y, INK);
    }

    // frequency ticks at power-of-two periods
    let f_hi = m.frequencies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f_lo = m.frequencies.iter().cloned().fold(f64::INFINITY, f64::min);
    let ln_hi = f_hi.ln();
    let ln_lo = f_lo.ln();
    let mut period = 1.0f64;
    while 1.0 / period > f_hi * (1.0 + 1e-9) {
        period *= 2.0;
    }
    while 1.0 / period >= f_lo * (1.0 - 1e-9) && period < 1e7 {
        let f = 1.0 / period;
        let frac = if ln_hi > ln_lo { (ln_hi - f.ln()) / (ln_hi - ln_lo) } else { 0.0 };
        // row 0 = highest frequency = bottom pixel row of the plot
        let span = (l.rows * l.cell_height).saturating_sub(1) as f64;
        let y = y1 - 1 - (((1.0 - frac) * span).round() as usize).min(y1 - 1 - l.plot_y);
        for dx in 1..=3 {
            canvas.set(x0 - dx, y, INK);
        }
        let label = format!("1/{}", period as u64);
        let width = label.len() * 4;
        canvas.text((x0 - 4).saturating_sub(width), y.saturating_sub(2), &label);
        period *= 2.0;
    }

    // time ticks every tenth of the record
    for i in 0..=10 {
        let x = l.plot_x + (i * (l.columns * l.cell_width).saturating_sub(1)) / 10;
        for dy in 1..=3 {
            canvas.set(x, y1 + dy, INK);
        }
    }
}

fn draw_colorbar(canvas: &mut Canvas, l: &HeatmapLayout, cmap: ColorMap) {
    let x0 = l.plot_x + l.columns * l.cell_width + 10;
    let h = l.rows * l.cell_height;
    for y in 0..h {
        let t = if h > 1 { 1.0 - y as f64 / (h - 1) as f64 } else { 1.0 };
        let c = cmap.rgb(t);
        for x in x0..x0 + 10 {
            canvas.set(x, l.plot_y + y, c);
        }
    }
}

/// Relative luminance (Rec. 709) of an sRGB triple, 0..255.
pub fn luminance(c: [u8; 3]) -> f64 {
    0.2126 * c[0] as f64 + 0.7152 * c[1] as f64 + 0.0722 * c[2] as f64
}

/// Matrix-only convenience used in tests and by the CLI when the axes are
/// not meaningful (every cell treated as inside the cone).
pub fn plain_matrix(values: Array2<f64>) -> LabeledMatrix {
    let (nj, nk) = values.dim();
    LabeledMatrix {
        values,
        scales: (0..nj).map(|j| 2f64.powi(j as i32 + 1)).collect(),
        frequencies: (0..nj).map(|j| 0.5f64.powi(j as i32 + 1)).collect(),
        coi: vec![f64::INFINITY; nk],
        times: crate::export::index_labels(nk),
    }
}
