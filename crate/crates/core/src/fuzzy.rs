//! Intuitionistic fuzzy divergence (IFD) edge detection.
//!
//! A 3x3 neighbourhood of memberships is compared against a bank of 3x3 edge
//! templates. For each template the smallest elementwise divergence is kept, and
//! the edge strength is the largest of those minima. The edge indicator used by
//! the telegraph solver is `theta = 1 - F / D_MAX`, clamped to `[delta, 1]`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Supremum of [`fuzzy_divergence`] on `[0, 1]²`, reached at `|a - b| = 1`.
pub const D_MAX: f64 = 2.0 - 2.0 / std::f64::consts::E;

/// Default floor for the edge indicator.
pub const DEFAULT_DELTA: f64 = 0.05;

/// Per-pixel membership degrees in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipGrid {
    pub width: usize,
    pub height: usize,
    values: Vec<f64>,
}

impl MembershipGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn ghost(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.values[yi * self.width + xi]
    }

    /// 3x3 block around `(x, y)`, row-major, with replicated borders.
    pub fn window(&self, x: usize, y: usize) -> [f64; 9] {
        let mut out = [0.0; 9];
        let (xi, yi) = (x as isize, y as isize);
        for (k, v) in out.iter_mut().enumerate() {
            let (dx, dy) = ((k % 3) as isize - 1, (k / 3) as isize - 1);
            *v = self.ghost(xi + dx, yi + dy);
        }
        out
    }
}

/// `mu = I / max_level`, clamped into `[0, 1]`.
pub fn to_membership(img: &ImageGrid) -> MembershipGrid {
    let scale = img.max_level();
    MembershipGrid {
        width: img.width(),
        height: img.height(),
        values: img.data().iter().map(|v| (v / scale).clamp(0.0, 1.0)).collect(),
    }
}

/// Exponential fuzzy divergence between two membership degrees.
pub fn fuzzy_divergence(mu_p: f64, mu_q: f64) -> Result<f64> {
    for v in [mu_p, mu_q] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(v));
        }
    }
    Ok(divergence_unchecked(mu_p, mu_q))
}

#[inline]
fn divergence_unchecked(mu_p: f64, mu_q: f64) -> f64 {
    let d = mu_p - mu_q;
    2.0 - (1.0 - d) * d.exp() - (1.0 + d) * (-d).exp()
}

/// Sugeno-type intuitionistic generator: returns `mu + pi = 1 - nu` with
/// `nu = (1 - mu) / (1 + lambda * mu)`.
pub fn hesitant_membership(mu: f64, lambda: f64) -> f64 {
    let nu = (1.0 - mu) / (1.0 + lambda * mu);
    (1.0 - nu).clamp(0.0, 1.0)
}

/// Labelled 3x3 membership template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyTemplate {
    pub label: String,
    entries: [f64; 9],
}

impl FuzzyTemplate {
    pub fn new(label: impl Into<String>, entries: [f64; 9]) -> Result<Self> {
        if let Some(v) = entries.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Templates(format!("entry {v} outside [0, 1]")));
        }
        Ok(Self {
            label: label.into(),
            entries,
        })
    }

    pub fn entries(&self) -> &[f64; 9] {
        &self.entries
    }
}

/// Ordered bank of templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    templates: Vec<FuzzyTemplate>,
}

impl TemplateSet {
    pub fn new(templates: Vec<FuzzyTemplate>) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::Templates("template set is empty".into()));
        }
        Ok(Self { templates })
    }

    /// Sixteen binary step templates: four orientations (vertical, horizontal,
    /// two diagonals), two polarities and two step offsets each.
    pub fn default_edges() -> Self {
        let mut templates = Vec::with_capacity(16);
        type Rule = fn(i32, i32) -> i32;
        // Signed distance-like coordinate across the step, per orientation.
        let orientations: [(&str, Rule); 4] = [
            ("vertical", |x, _| x),
            ("horizontal", |_, y| y),
            ("diagonal", |x, y| x + y - 1),
            ("antidiagonal", |x, y| x - y + 1),
        ];
        for (name, coord) in orientations {
            for (offset_name, cut) in [("a", 1), ("b", 2)] {
                for (pol_name, bright_high) in [("rise", true), ("fall", false)] {
                    let mut entries = [0.0; 9];
                    for (k, e) in entries.iter_mut().enumerate() {
                        let (x, y) = ((k % 3) as i32, (k / 3) as i32);
                        let high = coord(x, y) >= cut;
                        *e = if high == bright_high { 1.0 } else { 0.0 };
                    }
                    templates.push(FuzzyTemplate {
                        label: format!("{name}-{offset_name}-{pol_name}"),
                        entries,
                    });
                }
            }
        }
        Self { templates }
    }

    pub fn templates(&self) -> &[FuzzyTemplate] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Parses blocks of one label line followed by three rows of three values.
    /// Blocks are separated by blank lines; lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut templates = Vec::new();
        let mut block: Vec<(usize, &str)> = Vec::new();
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .chain(std::iter::once((0, "")));
        for (lineno, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            if !line.is_empty() {
                block.push((lineno, line));
                continue;
            }
            if block.is_empty() {
                continue;
            }
            if block.len() != 4 {
                return Err(Error::Templates(format!(
                    "line {}: block has {} lines, expected a label and 3 rows",
                    block[0].0,
                    block.len()
                )));
            }
            let mut entries = [0.0; 9];
            for (row, (lineno, text)) in block[1..].iter().enumerate() {
                let vals: Vec<&str> = text.split_whitespace().collect();
                if vals.len() != 3 {
                    return Err(Error::Templates(format!(
                        "line {lineno}: expected 3 values, found {}",
                        vals.len()
                    )));
                }
                for (col, v) in vals.iter().enumerate() {
                    let parsed: f64 = v
                        .parse()
                        .map_err(|_| Error::Templates(format!("line {lineno}: `{v}` is not a number")))?;
                    if !(0.0..=1.0).contains(&parsed) {
                        return Err(Error::Templates(format!(
                            "line {lineno}: value {parsed} outside [0, 1]"
                        )));
                    }
                    entries[row * 3 + col] = parsed;
                }
            }
            templates.push(FuzzyTemplate {
                label: block[0].1.to_string(),
                entries,
            });
            block.clear();
        }
        Self::new(templates)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.templates.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{}", t.label);
            for row in t.entries.chunks(3) {
                let _ = writeln!(out, "{} {} {}", row[0], row[1], row[2]);
            }
        }
        out
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::default_edges()
    }
}

/// Max over templates of the min over elements of the fuzzy divergence.
pub fn ifd_measure(window: &[f64; 9], templates: &TemplateSet) -> Result<f64> {
    if templates.is_empty() {
        return Err(Error::Templates("template set is empty".into()));
    }
    let mut best = 0.0_f64;
    for t in templates.templates() {
        let mut min = f64::INFINITY;
        for (p, q) in window.iter().zip(t.entries()) {
            min = min.min(fuzzy_divergence(*p, *q)?);
        }
        best = best.max(min);
    }
    Ok(best)
}

/// Per-pixel smoothing weight in `[delta, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeIndicatorField {
    pub width: usize,
    pub height: usize,
    values: Vec<f64>,
    delta: f64,
}

impl EdgeIndicatorField {
    pub fn new(width: usize, height: usize, values: Vec<f64>, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if values.len() != width * height {
            return Err(Error::param("values", "length does not match shape"));
        }
        if let Some(v) = values.iter().find(|v| !(delta..=1.0).contains(*v)) {
            return Err(Error::param("values", format!("theta {v} outside [{delta}, 1]")));
        }
        Ok(Self {
            width,
            height,
            values,
            delta,
        })
    }

    /// `theta = 1` everywhere.
    pub fn uniform(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![1.0; width * height],
            delta: DEFAULT_DELTA,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Image view of the field on a unit ceiling, handy for export.
    pub fn to_image(&self) -> ImageGrid {
        ImageGrid::from_parts(self.width, self.height, self.values.clone(), 1.0)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Edge detector configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDetector {
    templates: TemplateSet,
    delta: f64,
    hesitation: Option<f64>,
}

impl EdgeDetector {
    pub fn new(templates: TemplateSet, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self {
            templates,
            delta,
            hesitation: None,
        })
    }

    /// Applies the Sugeno generator with parameter `lambda` to both the image
    /// memberships and the template entries before measuring divergence.
    pub fn with_hesitation(mut self, lambda: Option<f64>) -> Result<Self> {
        if let Some(l) = lambda {
            if !(l.is_finite() && l > -1.0) {
                return Err(Error::param("hesitation", format!("must exceed -1, got {l}")));
            }
        }
        self.hesitation = lambda;
        Ok(self)
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `theta = clamp(1 - F / D_MAX, delta, 1)` per pixel.
    ///
    /// The divergence depends only on the difference of its arguments and grows
    /// with its magnitude, so the max-min over templates is taken on `|mu_p -
    /// mu_q|` and the exponential is evaluated once per pixel.
    pub fn indicator(&self, img: &ImageGrid) -> EdgeIndicatorField {
        let mut mu = to_membership(img);
        let mut bank: Vec<[f64; 9]> = self.templates.templates().iter().map(|t| *t.entries()).collect();
        if let Some(l) = self.hesitation {
            for v in &mut mu.values {
                *v = hesitant_membership(*v, l);
            }
            for t in &mut bank {
                for v in t.iter_mut() {
                    *v = hesitant_membership(*v, l);
                }
            }
        }
        let (w, h) = (mu.width, mu.height);
        let delta = self.delta;
        let mut values = vec![0.0; w * h];
        values.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                let win = mu.window(x, y);
                let mut best = 0.0_f64;
                for t in &bank {
                    let mut closest = f64::INFINITY;
                    for (p, q) in win.iter().zip(t) {
                        closest = closest.min((p - q).abs());
                    }
                    best = best.max(closest);
                }
                let f = divergence_unchecked(best, 0.0) / D_MAX;
                *out = (1.0 - f).clamp(delta, 1.0);
            }
        });
        EdgeIndicatorField {
            width: w,
            height: h,
            values,
            delta,
        }
    }
}

/// Edge indicator of `img` with the given templates and floor.
pub fn edge_indicator(img: &ImageGrid, templates: &TemplateSet, delta: f64) -> Result<EdgeIndicatorField> {
    Ok(EdgeDetector::new(templates.clone(), delta)?.indicator(img))
}
