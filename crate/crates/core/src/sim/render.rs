//! PNG rendering of floor plans with label text, for image prompts.

use font8x8::{UnicodeFonts, BASIC_FONTS};
use serde::{Deserialize, Serialize};

use super::grid::{rasterize, Occupancy};
use super::SimError;
use crate::floorplan::{FloorPlan, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub pixels_per_unit: u32,
    /// Integer magnification of the 8x8 glyphs.
    pub text_scale: u32,
    pub draw_labels: bool,
    pub draw_door_ids: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            pixels_per_unit: 8,
            text_scale: 1,
            draw_labels: true,
            draw_door_ids: true,
        }
    }
}

type Rgb = [u8; 3];
const WALL: Rgb = [0, 0, 0];
const FREE: Rgb = [255, 255, 255];
const DOOR: Rgb = [190, 190, 190];
const LABEL: Rgb = [20, 20, 140];
const DOOR_TEXT: Rgb = [170, 20, 20];

struct Canvas {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, color: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = (y as usize * self.width + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&color);
    }

    /// Text centered on (cx, cy) over a white box.
    fn text(&mut self, cx: i64, cy: i64, text: &str, scale: u32, color: Rgb) {
        let scale = i64::from(scale.max(1));
        let glyphs: Vec<[u8; 8]> = text
            .chars()
            .map(|c| {
                BASIC_FONTS
                    .get(c)
                    .or_else(|| BASIC_FONTS.get(fold_accent(c)))
                    .or_else(|| BASIC_FONTS.get('?'))
                    .unwrap()
            })
            .collect();
        let w = glyphs.len() as i64 * 8 * scale;
        let h = 8 * scale;
        let (x0, y0) = (cx - w / 2, cy - h / 2);
        for y in y0 - 1..y0 + h + 1 {
            for x in x0 - 1..x0 + w + 1 {
                self.put(x, y, FREE);
            }
        }
        for (k, glyph) in glyphs.iter().enumerate() {
            for (gy, bits) in glyph.iter().enumerate() {
                for gx in 0..8 {
                    if bits & (1 << gx) == 0 {
                        continue;
                    }
                    for sy in 0..scale {
                        for sx in 0..scale {
                            let x = x0 + (k as i64 * 8 + gx) * scale + sx;
                            let y = y0 + gy as i64 * scale + sy;
                            self.put(x, y, color);
                        }
                    }
                }
            }
        }
    }
}

fn fold_accent(c: char) -> char {
    match c {
        'à' | 'á' | 'â' | 'ä' => 'a',
        'ç' => 'c',
        'è' | 'é' | 'ê' | 'ë' => 'e',
        'ì' | 'í' | 'î' | 'ï' => 'i',
        'ò' | 'ó' | 'ô' | 'ö' => 'o',
        'ù' | 'ú' | 'û' | 'ü' => 'u',
        'É' | 'È' => 'E',
        _ => c,
    }
}

/// Walls black, rooms white, door openings gray; label text at each label
/// anchor and door ids at door midpoints. One pixel is one grid cell at
/// resolution `1 / pixels_per_unit`, including the one-cell wall margin.
pub fn render_png(plan: &FloorPlan, options: &RenderOptions) -> Result<Vec<u8>, SimError> {
    let ppu = options.pixels_per_unit.max(1);
    let grid = rasterize(plan, 1.0 / f64::from(ppu))?;
    let mut canvas = Canvas {
        width: grid.width,
        height: grid.height,
        data: Vec::with_capacity(grid.width * grid.height * 3),
    };
    for cell in grid.cells() {
        canvas.data.extend_from_slice(match cell {
            Occupancy::Wall => &WALL,
            Occupancy::Free => &FREE,
            Occupancy::Door(_) => &DOOR,
        });
    }
    let to_px = |p: Point| {
        (
            ((p.x - grid.origin.x) / grid.resolution).round() as i64,
            ((p.y - grid.origin.y) / grid.resolution).round() as i64,
        )
    };
    if options.draw_labels {
        for label in &plan.labels {
            let (x, y) = to_px(label.anchor);
            canvas.text(x, y, &label.text, options.text_scale, LABEL);
        }
    }
    if options.draw_door_ids {
        for door in &plan.doors {
            let (x, y) = to_px(door.segment.midpoint());
            canvas.text(x, y, &door.door_id, options.text_scale, DOOR_TEXT);
        }
    }

    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, canvas.width as u32, canvas.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| SimError::Png(e.to_string());
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(&canvas.data).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    Ok(out)
}
