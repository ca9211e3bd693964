//! Deterministic CSV and SVG output.
//!
//! CSV files start with `#`-prefixed header lines echoing the resolved
//! configuration, then a column-name row, then data rows. Floats are printed
//! with 17 significant digits so re-ingestion is bit exact.

use std::fs;
use std::path::Path;

use crate::error::Result;

/// Round-trip-exact float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV document: metadata header, column names, rows.
#[derive(Debug, Clone, Default)]
pub struct CsvDoc {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        CsvDoc {
            meta: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta<K: Into<String>, V: Into<String>>(&mut self, key: K, value: V) {
        self.meta.push((key.into(), value.into()));
    }

    pub fn meta_entries(&mut self, entries: &[(String, String)]) {
        for (k, v) in entries {
            self.meta(k.clone(), v.clone());
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// Parses a CSV document written by [`CsvDoc::render`]; returns the data
/// cells as numbers. Used by round-trip tests and downstream tooling.
pub fn parse_numeric_csv(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

/// Axis and color choices for [`svg_heatmap`].
#[derive(Debug, Clone)]
pub struct HeatmapSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Diverging (blue-white-red, symmetric about zero) or sequential
    /// (white to dark blue).
    pub diverging: bool,
}

fn color_for(v: f64, lo: f64, hi: f64, diverging: bool) -> (u8, u8, u8) {
    if diverging {
        let scale = lo.abs().max(hi.abs()).max(1e-300);
        let t = (v / scale).clamp(-1.0, 1.0);
        if t >= 0.0 {
            let w = 1.0 - t;
            (255, (255.0 * w) as u8, (255.0 * w) as u8)
        } else {
            let w = 1.0 + t;
            ((255.0 * w) as u8, (255.0 * w) as u8, 255)
        }
    } else {
        let t = ((v - lo) / (hi - lo).max(1e-300)).clamp(0.0, 1.0);
        let w = 1.0 - t;
        ((60.0 + 195.0 * w) as u8, (80.0 + 175.0 * w) as u8, 255)
    }
}

/// Writes a self-contained SVG heatmap of `data[row][col]`, rows mapping to
/// the y axis and columns to the x axis. Large matrices are block-averaged
/// down to at most 240 x 160 cells. No external assets are referenced.
pub fn svg_heatmap(data: &[Vec<f64>], spec: &HeatmapSpec, path: &Path) -> Result<()> {
    let rows = data.len();
    let cols = data.first().map_or(0, Vec::len);
    let (max_cols, max_rows) = (240usize, 160usize);
    let rb = rows.div_ceil(max_rows);
    let cb = cols.div_ceil(max_cols);
    let ds_rows = rows.div_ceil(rb);
    let ds_cols = cols.div_ceil(cb);
    let mut ds = vec![vec![0.0f64; ds_cols]; ds_rows];
    for (r, row) in ds.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut count = 0usize;
            for i in r * rb..((r + 1) * rb).min(rows) {
                for j in c * cb..((c + 1) * cb).min(cols) {
                    acc += data[i][j];
                    count += 1;
                }
            }
            *cell = acc / count.max(1) as f64;
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in &ds {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }

    let (px, py) = (720.0f64, 480.0f64);
    let (ml, mr, mt, mb) = (70.0, 90.0, 40.0, 55.0);
    let (pw, ph) = (px - ml - mr, py - mt - mb);
    let cw = pw / ds_cols as f64;
    let ch = ph / ds_rows as f64;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{px}\" height=\"{py}\" \
         viewBox=\"0 0 {px} {py}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        px / 2.0,
        spec.title
    ));
    for (r, row) in ds.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let (cr, cg, cb_) = color_for(v, lo, hi, spec.diverging);
            // y axis points up: row 0 (smallest y) sits at the bottom.
            let x = ml + c as f64 * cw;
            let y = mt + ph - (r as f64 + 1.0) * ch;
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"rgb({cr},{cg},{cb_})\"/>\n",
                cw + 0.5,
                ch + 0.5
            ));
        }
    }
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" \
         stroke=\"black\"/>\n"
    ));

    let ticks = 5usize;
    for i in 0..=ticks {
        let f = i as f64 / ticks as f64;
        let xv = spec.x_range.0 + f * (spec.x_range.1 - spec.x_range.0);
        let x = ml + f * pw;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            mt + ph,
            mt + ph + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{xv:.3}</text>\n",
            mt + ph + 18.0
        ));
        let yv = spec.y_range.0 + f * (spec.y_range.1 - spec.y_range.0);
        let y = mt + ph - f * ph;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{ml}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{yv:.3}</text>\n",
            ml - 8.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0,
        py - 12.0,
        spec.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0,
        spec.y_label
    ));

    // Colorbar on the right.
    let bar_x = px - mr + 20.0;
    let bar_w = 16.0;
    let bar_steps = 64usize;
    for i in 0..bar_steps {
        let f = i as f64 / (bar_steps - 1) as f64;
        let v = lo + f * (hi - lo);
        let (cr, cg, cb_) = color_for(v, lo, hi, spec.diverging);
        let y = mt + ph - (i as f64 + 1.0) * ph / bar_steps as f64;
        svg.push_str(&format!(
            "<rect x=\"{bar_x}\" y=\"{y:.2}\" width=\"{bar_w}\" height=\"{:.2}\" \
             fill=\"rgb({cr},{cg},{cb_})\"/>\n",
            ph / bar_steps as f64 + 0.5
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{bar_x}\" y=\"{mt}\" width=\"{bar_w}\" height=\"{ph}\" fill=\"none\" \
         stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
         text-anchor=\"start\">{hi:.3e}</text>\n",
        bar_x + bar_w + 4.0,
        mt + 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
         text-anchor=\"start\">{lo:.3e}</text>\n",
        bar_x + bar_w + 4.0,
        mt + ph
    ));
    svg.push_str("</svg>\n");

    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let mut doc = CsvDoc::new(vec!["a", "b"]);
        doc.meta("grid.m", "10");
        doc.push_row(vec![fmt_f64(1.0), fmt_f64(0.5)]);
        let text = doc.render();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# grid.m = 10");
        assert_eq!(lines.next().unwrap(), "a,b");
        let data = parse_numeric_csv(&text);
        assert_eq!(data, vec![vec![1.0, 0.5]]);
    }

    proptest! {
        #[test]
        fn float_format_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let parsed: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(parsed.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn heatmap_is_written_and_self_contained() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.svg");
        let data: Vec<Vec<f64>> = (0..20)
            .map(|r| (0..30).map(|c| ((r * c) as f64 * 0.1).sin()).collect())
            .collect();
        let spec = HeatmapSpec {
            title: "field".into(),
            x_label: "t".into(),
            y_label: "x".into(),
            x_range: (0.0, 4.0),
            y_range: (0.0, 1.0),
            diverging: true,
        };
        svg_heatmap(&data, &spec, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(!text.contains("href"));
        assert!(text.contains("</svg>"));
    }
}
