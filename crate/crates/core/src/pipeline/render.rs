use std::path::Path;

use super::io::write_atomic;
use crate::calibration::{extend_scale, palette, CalibrationBands, ColorScale, ScaleEntry};
use crate::domain::{Part, SpectralField};
use crate::error::{Error, Result};

/// Target panel size in pixels along each axis; cells are whole pixels.
const PANEL_TARGET: usize = 256;
const GAP: usize = 4;
const LEGEND_WIDTH: usize = 16;
const BACKGROUND: [u8; 3] = [255, 255, 255];

/// What a panel shows: `f(tau_a, tau_b)` with the given part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PanelContent {
    pub a: usize,
    pub b: usize,
    pub part: Part,
}

/// Panel at grid row `row`, column `col` (quantile-axis positions, row 0 on
/// top): the diagonal shows `f(q_i, q_i)`, the lower triangle
/// `Re f(q_row, q_col)` and the upper triangle `Im f(q_col, q_row)`.
pub fn panel_content(row: usize, col: usize) -> PanelContent {
    use std::cmp::Ordering::*;
    match row.cmp(&col) {
        Equal => PanelContent {
            a: row,
            b: row,
            part: Part::Re,
        },
        Greater => PanelContent {
            a: row,
            b: col,
            part: Part::Re,
        },
        Less => PanelContent {
            a: col,
            b: row,
            part: Part::Im,
        },
    }
}

/// Pixel geometry of a heatmap figure: a square grid of panels plus a legend
/// strip on the right. Time runs left to right, frequency bottom to top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeatmapLayout {
    pub panels: usize,
    pub n_t0: usize,
    pub n_freq: usize,
    pub cell_w: usize,
    pub cell_h: usize,
}

impl HeatmapLayout {
    pub fn new(panels: usize, n_t0: usize, n_freq: usize) -> Self {
        HeatmapLayout {
            panels,
            n_t0,
            n_freq,
            cell_w: (PANEL_TARGET / n_t0.max(1)).max(1),
            cell_h: (PANEL_TARGET / n_freq.max(1)).max(1),
        }
    }

    pub fn panel_width(&self) -> usize {
        self.n_t0 * self.cell_w
    }

    pub fn panel_height(&self) -> usize {
        self.n_freq * self.cell_h
    }

    pub fn width(&self) -> usize {
        self.panels * (self.panel_width() + GAP) + LEGEND_WIDTH
    }

    pub fn height(&self) -> usize {
        self.panels * self.panel_height() + (self.panels - 1) * GAP
    }

    /// `(x, y, w, h)` of cell `(ti, wi)` in panel `(row, col)`; `y` counts
    /// from the top edge.
    pub fn cell_rect(&self, row: usize, col: usize, ti: usize, wi: usize) -> (usize, usize, usize, usize) {
        let x0 = col * (self.panel_width() + GAP);
        let y0 = row * (self.panel_height() + GAP);
        (
            x0 + ti * self.cell_w,
            y0 + (self.n_freq - 1 - wi) * self.cell_h,
            self.cell_w,
            self.cell_h,
        )
    }

    /// First column of the legend strip.
    pub fn legend_x(&self) -> usize {
        self.width() - LEGEND_WIDTH
    }
}

/// RGB raster, row-major from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    fn new(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    fn fill(&mut self, (x, y, w, h): (usize, usize, usize, usize), c: [u8; 3]) {
        for yy in y..y + h {
            self.pixels[yy * self.width + x..yy * self.width + x + w].fill(c);
        }
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc
                .write_header()
                .map_err(|e| Error::Internal(format!("png header: {e}")))?;
            let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
            w.write_image_data(&flat)
                .map_err(|e| Error::Internal(format!("png data: {e}")))?;
        }
        Ok(out)
    }
}

/// Colors every `(t0, omega)` cell of every panel with the calibrated scale.
pub fn rasterize(field: &SpectralField, scale: &ColorScale) -> Raster {
    let q = field.quantiles().len();
    let layout = HeatmapLayout::new(q, field.t0s().len(), field.freqs().len());
    let mut r = Raster::new(layout.width(), layout.height());
    for row in 0..q {
        for col in 0..q {
            let pc = panel_content(row, col);
            let entry: ScaleEntry = scale.entry(pc.a, pc.b, pc.part);
            for ti in 0..layout.n_t0 {
                for wi in 0..layout.n_freq {
                    let v = pc.part.of(field.get(ti, wi, pc.a, pc.b));
                    r.fill(layout.cell_rect(row, col, ti, wi), palette(entry.position(v)));
                }
            }
        }
    }
    let h = layout.height();
    for y in 0..h {
        // top is +1 (red), bottom is -1 (cyan)
        let pos = if h > 1 {
            1.0 - 2.0 * y as f64 / (h - 1) as f64
        } else {
            0.0
        };
        r.fill((layout.legend_x(), y, LEGEND_WIDTH, 1), palette(pos));
    }
    r
}

/// Renders the field with bands-derived color scales and writes a PNG.
pub fn render_heatmap(field: &SpectralField, bands: &CalibrationBands, path: &Path) -> Result<Raster> {
    let scale = extend_scale(bands, field)?;
    let raster = rasterize(field, &scale);
    write_atomic(path, &raster.to_png()?)?;
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{Band, DARK_BLUE};
    use crate::domain::{quantile_levels, EstimationPlan};
    use crate::kernel::LagWindow;
    use crate::Complex64;

    fn setup() -> (SpectralField, CalibrationBands) {
        let taus = [0.1, 0.5, 0.9];
        let plan = EstimationPlan::new(
            16,
            3.0,
            LagWindow::Parzen,
            vec![8, 16, 24, 32],
            quantile_levels(&taus).unwrap(),
        )
        .unwrap();
        let mut bands = Vec::new();
        for a in taus {
            for b in taus {
                for part in [Part::Re, Part::Im] {
                    let w = if a == b && part == Part::Im { 0.0 } else { 1.0 };
                    bands.push(Band {
                        tau1: a,
                        tau2: b,
                        part,
                        q_min: -w,
                        q_max: w,
                    });
                }
            }
        }
        let bands = CalibrationBands {
            n: 16,
            bandwidth: 3.0,
            kernel: LagWindow::Parzen,
            replications: 100,
            seed: 0,
            bands,
        };
        (SpectralField::zeros(&plan), bands)
    }

    #[test]
    fn table_layout() {
        // top-right shows Im f(0.9, 0.1)
        assert_eq!(panel_content(0, 2), PanelContent { a: 2, b: 0, part: Part::Im });
        assert_eq!(panel_content(2, 0), PanelContent { a: 2, b: 0, part: Part::Re });
        assert_eq!(panel_content(1, 1), PanelContent { a: 1, b: 1, part: Part::Re });
        assert_eq!(panel_content(1, 2), PanelContent { a: 2, b: 1, part: Part::Im });
    }

    #[test]
    fn frequency_increases_upward() {
        let l = HeatmapLayout::new(3, 4, 7);
        let low = l.cell_rect(0, 0, 0, 0);
        let high = l.cell_rect(0, 0, 0, 6);
        assert!(high.1 < low.1);
        assert_eq!(high.1, 0);
        assert_eq!(low.1 + low.3, l.panel_height());
    }

    #[test]
    fn in_band_field_is_dark_blue_and_spike_is_local() {
        let (mut field, bands) = setup();
        let d = tempfile::tempdir().unwrap();
        let r = render_heatmap(&field, &bands, &d.path().join("a.png")).unwrap();
        let l = HeatmapLayout::new(3, 4, 7);
        for row in 0..3 {
            for col in 0..3 {
                for ti in 0..4 {
                    for wi in 0..7 {
                        let (x, y, _, _) = l.cell_rect(row, col, ti, wi);
                        assert_eq!(r.pixel(x, y), DARK_BLUE);
                    }
                }
            }
        }
        // spike in Im f(0.9, 0.1) at (t0 index 2, omega index 5)
        field.set(2, 5, 2, 0, Complex64::new(0.0, 5.0));
        field.set(2, 5, 0, 2, Complex64::new(0.0, -5.0));
        let r2 = render_heatmap(&field, &bands, &d.path().join("b.png")).unwrap();
        let rect = l.cell_rect(0, 2, 2, 5);
        let mut changed = 0;
        for y in 0..r.height {
            for x in 0..r.width {
                if r.pixel(x, y) != r2.pixel(x, y) {
                    changed += 1;
                    assert!(x >= rect.0 && x < rect.0 + rect.2 && y >= rect.1 && y < rect.1 + rect.3);
                }
            }
        }
        assert_eq!(changed, rect.2 * rect.3);
    }

    #[test]
    fn missing_band_names_pair() {
        let (field, mut bands) = setup();
        bands.bands.retain(|b| !(b.tau1 == 0.9 && b.tau2 == 0.1 && b.part == Part::Im));
        let d = tempfile::tempdir().unwrap();
        let err = render_heatmap(&field, &bands, &d.path().join("x.png")).unwrap_err();
        assert!(err.to_string().contains("(0.9, 0.1, im)"), "{err}");
    }

    #[test]
    fn png_is_deterministic() {
        let (field, bands) = setup();
        let d = tempfile::tempdir().unwrap();
        let (a, b) = (d.path().join("a.png"), d.path().join("b.png"));
        render_heatmap(&field, &bands, &a).unwrap();
        render_heatmap(&field, &bands, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}
