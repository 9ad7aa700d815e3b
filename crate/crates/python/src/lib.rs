//! Python bindings: images as a small wrapper class with list conversions,
//! plus the noise, edge, solver, metric and file functions.

use std::path::PathBuf;

use despeckle::fuzzy::{self, TemplateSet};
use despeckle::solvers::{self, FluxScheme, Mode, ThetaSchedule};
use despeckle::{metrics, noise, phantom, Error, Filter, ImageGrid, NoiseSpec, SolverParams};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NumericalBlowup { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Grayscale image with float intensities on `[0, max_level]`.
#[pyclass(name = "Image", module = "pydespeckle", frozen)]
struct PyImage {
    inner: ImageGrid,
}

impl From<ImageGrid> for PyImage {
    fn from(inner: ImageGrid) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyImage {
    /// Row-major `data` of length `width * height`.
    #[new]
    #[pyo3(signature = (width, height, data, max_level = 255.0))]
    fn new(width: usize, height: usize, data: Vec<f64>, max_level: f64) -> PyResult<Self> {
        Ok(ImageGrid::new(width, height, data, max_level).map_err(to_py)?.into())
    }

    /// Builds an image from a list of equally long rows.
    #[staticmethod]
    #[pyo3(signature = (rows, max_level = 255.0))]
    fn from_rows(rows: Vec<Vec<f64>>, max_level: f64) -> PyResult<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        Self::new(width, height, rows.concat(), max_level)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn max_level(&self) -> f64 {
        self.inner.max_level()
    }

    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner
            .data()
            .chunks(self.inner.width())
            .map(<[f64]>::to_vec)
            .collect()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!("({x}, {y}) is outside the image")));
        }
        Ok(self.inner.get(x, y))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: PyRef<'_, PyImage>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Image(width={}, height={}, max_level={})",
            self.inner.width(),
            self.inner.height(),
            self.inner.max_level()
        )
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn solver_params(filter: Filter, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<SolverParams> {
    let mut p = SolverParams::for_filter(filter);
    if let Some(dict) = overrides {
        for (key, value) in dict.iter() {
            let key: String = key.extract()?;
            match key.as_str() {
                "tau" => p.tau = value.extract()?,
                "gamma" => p.gamma = value.extract()?,
                "lambda" | "lambda_fid" => p.lambda_fid = value.extract()?,
                "lambda_decay" => p.lambda_decay = value.extract()?,
                "eps_tv" => p.eps_tv = value.extract()?,
                "eps_stop" => p.eps_stop = value.extract()?,
                "max_iter" => p.max_iter = value.extract()?,
                "xi" => p.xi = value.extract()?,
                "k_edge" => p.k_edge = value.extract()?,
                "k_gray" => p.k_gray = value.extract()?,
                "delta" => p.delta = value.extract()?,
                "hesitation" => p.hesitation = value.extract()?,
                "mode" => p.mode = parse::<Mode>(&value.extract::<String>()?)?,
                "theta" => p.theta_schedule = parse::<ThetaSchedule>(&value.extract::<String>()?)?,
                "flux" => p.flux = parse::<FluxScheme>(&value.extract::<String>()?)?,
                other => return Err(PyValueError::new_err(format!("unknown parameter `{other}`"))),
            }
        }
    }
    p.validate().map_err(to_py)?;
    Ok(p)
}

fn templates_from(path: Option<PathBuf>) -> PyResult<TemplateSet> {
    match path {
        Some(p) => TemplateSet::from_file(&p).map_err(to_py),
        None => Ok(TemplateSet::default()),
    }
}

/// Synthetic test image: `circle`, `checkerboard` or `ramp`.
#[pyfunction]
#[pyo3(name = "phantom", signature = (kind, size = 128, lo = 50.0, hi = 200.0))]
fn make_phantom(kind: &str, size: usize, lo: f64, hi: f64) -> PyResult<PyImage> {
    Ok(phantom::phantom(parse(kind)?, size, lo, hi).map_err(to_py)?.into())
}

/// Multiplies `image` by independent `Gamma(looks, 1/looks)` variates.
#[pyfunction]
fn apply_speckle(image: PyRef<'_, PyImage>, looks: u32, seed: u64) -> PyResult<PyImage> {
    let spec = NoiseSpec::new(looks, seed).map_err(to_py)?;
    Ok(noise::apply_speckle(&image.inner, spec).map_err(to_py)?.into())
}

#[pyfunction]
fn fuzzy_divergence(mu_p: f64, mu_q: f64) -> PyResult<f64> {
    fuzzy::fuzzy_divergence(mu_p, mu_q).map_err(to_py)
}

/// Edge indicator in `[delta, 1]`, returned as an image with ceiling 1.
#[pyfunction]
#[pyo3(signature = (image, delta = fuzzy::DEFAULT_DELTA, templates = None))]
fn edge_indicator(image: PyRef<'_, PyImage>, delta: f64, templates: Option<PathBuf>) -> PyResult<PyImage> {
    let set = templates_from(templates)?;
    Ok(fuzzy::edge_indicator(&image.inner, &set, delta)
        .map_err(to_py)?
        .to_image()
        .into())
}

/// Default solver settings of `filter` as a dict.
#[pyfunction]
#[pyo3(signature = (filter = "proposed"))]
fn default_params<'py>(py: Python<'py>, filter: &str) -> PyResult<Bound<'py, PyDict>> {
    let p = SolverParams::for_filter(parse(filter)?);
    let d = PyDict::new(py);
    d.set_item("tau", p.tau)?;
    d.set_item("gamma", p.gamma)?;
    d.set_item("lambda", p.lambda_fid)?;
    d.set_item("lambda_decay", p.lambda_decay)?;
    d.set_item("eps_tv", p.eps_tv)?;
    d.set_item("eps_stop", p.eps_stop)?;
    d.set_item("max_iter", p.max_iter)?;
    d.set_item("xi", p.xi)?;
    d.set_item("k_edge", p.k_edge)?;
    d.set_item("k_gray", p.k_gray)?;
    d.set_item("delta", p.delta)?;
    d.set_item("hesitation", p.hesitation)?;
    d.set_item("mode", format!("{:?}", p.mode).to_lowercase())?;
    d.set_item(
        "theta",
        if p.theta_schedule == ThetaSchedule::PerStep {
            "per-step"
        } else {
            "frozen"
        },
    )?;
    d.set_item(
        "flux",
        if p.flux == FluxScheme::Conservative {
            "conservative"
        } else {
            "nested-central"
        },
    )?;
    Ok(d)
}

/// Runs `filter` on `image`. Returns the restored image and a dict with
/// `iterations`, `stop_reason` and the per-step `rel_change` list.
#[pyfunction]
#[pyo3(name = "despeckle", signature = (image, filter = "proposed", params = None, templates = None))]
fn run_despeckle<'py>(
    py: Python<'py>,
    image: PyRef<'_, PyImage>,
    filter: &str,
    params: Option<&Bound<'py, PyDict>>,
    templates: Option<PathBuf>,
) -> PyResult<(PyImage, Bound<'py, PyDict>)> {
    let filter: Filter = parse(filter)?;
    let p = solver_params(filter, params)?;
    let set = templates_from(templates)?;
    let input = image.inner.clone();
    let (restored, log) = py
        .detach(|| solvers::run_filter(filter, &input, &p, &set, None))
        .map_err(to_py)?;
    let info = PyDict::new(py);
    info.set_item("iterations", log.iterations())?;
    info.set_item("stop_reason", log.stop_reason.to_string())?;
    info.set_item(
        "rel_change",
        log.records.iter().map(|r| r.rel_change).collect::<Vec<_>>(),
    )?;
    Ok((restored.into(), info))
}

#[pyfunction]
fn psnr(reference: PyRef<'_, PyImage>, test: PyRef<'_, PyImage>) -> PyResult<f64> {
    metrics::psnr(&reference.inner, &test.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (reference, test, window = metrics::DEFAULT_SSIM_WINDOW))]
fn mssim(reference: PyRef<'_, PyImage>, test: PyRef<'_, PyImage>, window: usize) -> PyResult<f64> {
    metrics::mssim(&reference.inner, &test.inner, window).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (image, window = metrics::DEFAULT_SI_WINDOW))]
fn speckle_index(image: PyRef<'_, PyImage>, window: usize) -> PyResult<f64> {
    metrics::speckle_index(&image.inner, window).map_err(to_py)
}

#[pyfunction]
fn ratio_image(noisy: PyRef<'_, PyImage>, restored: PyRef<'_, PyImage>) -> PyResult<PyImage> {
    Ok(metrics::ratio_image(&noisy.inner, &restored.inner)
        .map_err(to_py)?
        .into())
}

#[pyfunction]
fn line_profile(image: PyRef<'_, PyImage>, row: usize) -> PyResult<Vec<(usize, f64)>> {
    metrics::line_profile(&image.inner, row).map_err(to_py)
}

#[pyfunction]
fn read_image(path: PathBuf) -> PyResult<PyImage> {
    Ok(despeckle::io::read_image(&path).map_err(to_py)?.into())
}

/// Writes PGM, or PNG when the path ends in `.png`.
#[pyfunction]
fn write_image(image: PyRef<'_, PyImage>, path: PathBuf) -> PyResult<()> {
    despeckle::io::write_image(&image.inner, &path).map_err(to_py)
}

#[pymodule]
fn pydespeckle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_function(wrap_pyfunction!(make_phantom, m)?)?;
    m.add_function(wrap_pyfunction!(apply_speckle, m)?)?;
    m.add_function(wrap_pyfunction!(fuzzy_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(edge_indicator, m)?)?;
    m.add_function(wrap_pyfunction!(default_params, m)?)?;
    m.add_function(wrap_pyfunction!(run_despeckle, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(mssim, m)?)?;
    m.add_function(wrap_pyfunction!(speckle_index, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_image, m)?)?;
    m.add_function(wrap_pyfunction!(line_profile, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_image, m)?)?;
    m.add("D_MAX", fuzzy::D_MAX)?;
    Ok(())
}
