use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use despeckle::Filter;
use serde::Deserialize;
use toml::Spanned;

use crate::params::ParamOverrides;

/// Cross product of clean images, look counts, seeds and filters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub images: Spanned<Vec<PathBuf>>,
    pub looks: Spanned<Vec<u32>>,
    pub seeds: Spanned<Vec<u64>>,
    pub filters: Spanned<Vec<Filter>>,
    pub out_dir: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// Applied to every filter.
    #[serde(default)]
    pub params: ParamOverrides,
    /// Applied to one filter, after `params`.
    #[serde(default)]
    pub overrides: BTreeMap<Filter, ParamOverrides>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

impl ExperimentPlan {
    /// Parses a TOML plan; errors carry the offending line number.
    pub fn parse(text: &str) -> Result<Self, String> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => format!("line {}: {}", line_of(text, span.start), e.message()),
            None => e.message().to_string(),
        })?;
        let empty = |name: &str, span: std::ops::Range<usize>, len: usize| {
            if len == 0 {
                Err(format!(
                    "line {}: `{name}` must not be empty",
                    line_of(text, span.start)
                ))
            } else {
                Ok(())
            }
        };
        empty("images", plan.images.span(), plan.images.get_ref().len())?;
        empty("looks", plan.looks.span(), plan.looks.get_ref().len())?;
        empty("seeds", plan.seeds.span(), plan.seeds.get_ref().len())?;
        empty("filters", plan.filters.span(), plan.filters.get_ref().len())?;
        if plan.looks.get_ref().contains(&0) {
            return Err(format!(
                "line {}: looks must be at least 1",
                line_of(text, plan.looks.span().start)
            ));
        }
        Ok(plan)
    }

    /// Resolves relative image, template and output paths against `base`.
    pub fn resolve(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.images.get_mut().iter_mut().for_each(fix);
        self.out_dir.iter_mut().for_each(fix);
        self.templates.iter_mut().for_each(fix);
        self
    }

    pub fn cell_count(&self) -> usize {
        self.images.get_ref().len()
            * self.looks.get_ref().len()
            * self.seeds.get_ref().len()
            * self.filters.get_ref().len()
    }
}
