//! Python bindings for `patchup`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use patchup::io::CloudFormat;
use patchup::metrics::{self, EvalOptions, TriangleMesh};
use patchup::{
    BicubicCoeffs, Error, OffsetPattern, Point3, Rotation6D, RotationMatrix,
};

create_exception!(patchup_py, PatchupError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PatchupError::new_err(other.to_string()),
    }
}

fn pt(a: [f64; 3]) -> Point3 {
    Point3::from_array(a)
}

fn rot_rows(r: &RotationMatrix) -> [[f64; 3]; 3] {
    r.m
}

#[pyclass(name = "PointCloud", module = "patchup_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPointCloud {
    pub inner: patchup::PointCloud,
}

#[pymethods]
impl PyPointCloud {
    /// Builds a cloud from a sequence of `(x, y, z)` triples.
    #[new]
    fn new(points: Vec<[f64; 3]>) -> PyResult<Self> {
        let inner = patchup::PointCloud::from_arrays(&points).map_err(to_py)?;
        Ok(PyPointCloud { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PointCloud(n={})", self.inner.len())
    }

    fn to_list(&self) -> Vec<[f64; 3]> {
        self.inner.to_arrays()
    }

    fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        let b = self.inner.bbox();
        (b.min.to_array(), b.max.to_array())
    }

    fn diagonal(&self) -> f64 {
        self.inner.diagonal()
    }

    fn centroid(&self) -> [f64; 3] {
        self.inner.centroid().to_array()
    }

    fn normalized(&self) -> Self {
        PyPointCloud {
            inner: self.inner.normalized_to_unit_sphere(),
        }
    }
}

#[pyclass(name = "UpsampleConfig", module = "patchup_py", skip_from_py_object, get_all, set_all)]
#[derive(Clone)]
pub struct PyUpsampleConfig {
    pub ratios: Vec<usize>,
    pub k: usize,
    pub pattern: String,
    pub offset_radius: f64,
    pub noise_level: f64,
    pub rng_seed: u64,
    pub lam: f64,
    pub pin_origin: bool,
    pub ridge: f64,
}

impl PyUpsampleConfig {
    fn to_core(&self) -> PyResult<patchup::UpsampleConfig> {
        let offset_pattern: OffsetPattern = self.pattern.parse().map_err(to_py)?;
        let cfg = patchup::UpsampleConfig {
            ratios: self.ratios.clone(),
            k: self.k,
            offset_pattern,
            offset_radius: self.offset_radius,
            noise_level: self.noise_level,
            rng_seed: self.rng_seed,
            lambda: self.lam,
            pin_origin: self.pin_origin,
            ridge: self.ridge,
        };
        cfg.validate().map_err(to_py)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PyUpsampleConfig {
    #[new]
    #[pyo3(signature = (ratios = vec![1, 4], k = 16, pattern = "ring".to_string(), offset_radius = 0.5,
                        noise_level = 0.0, rng_seed = 0, lam = 0.01, pin_origin = true, ridge = 1e-8))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        ratios: Vec<usize>,
        k: usize,
        pattern: String,
        offset_radius: f64,
        noise_level: f64,
        rng_seed: u64,
        lam: f64,
        pin_origin: bool,
        ridge: f64,
    ) -> PyResult<Self> {
        let c = PyUpsampleConfig {
            ratios,
            k,
            pattern,
            offset_radius,
            noise_level,
            rng_seed,
            lam,
            pin_origin,
            ridge,
        };
        c.to_core()?;
        Ok(c)
    }

    fn total_ratio(&self) -> usize {
        self.ratios.iter().product()
    }

    fn to_json(&self) -> PyResult<String> {
        let cfg = self.to_core()?;
        serde_json::to_string(&cfg).map_err(|e| PatchupError::new_err(e.to_string()))
    }
}

#[pyclass(name = "LocalPatch", module = "patchup_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyLocalPatch {
    pub inner: patchup::LocalPatch,
}

#[pymethods]
impl PyLocalPatch {
    #[new]
    fn new(origin: [f64; 3], rot6d: [f64; 6], coeffs: [f64; 16], scale: f64) -> PyResult<Self> {
        let rot = patchup::decode_rotation(&Rotation6D::from_slice(rot6d)).map_err(to_py)?;
        let inner = patchup::LocalPatch::new(pt(origin), rot, BicubicCoeffs(coeffs), scale).map_err(to_py)?;
        Ok(PyLocalPatch { inner })
    }

    #[getter]
    fn origin(&self) -> [f64; 3] {
        self.inner.origin.to_array()
    }

    #[getter]
    fn rotation(&self) -> [[f64; 3]; 3] {
        rot_rows(&self.inner.rot)
    }

    #[getter]
    fn coeffs(&self) -> [f64; 16] {
        self.inner.coeffs.0
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale
    }

    fn lift(&self, du: f64, dv: f64) -> [f64; 3] {
        patchup::patch_lift(&self.inner, du, dv).to_array()
    }
}

#[pyclass(name = "FitReport", module = "patchup_py", skip_from_py_object, get_all)]
#[derive(Clone)]
pub struct PyFitReport {
    pub patch: PyLocalPatch,
    pub rms_residual: f64,
    pub displacement_loss: f64,
}

#[pyclass(name = "KnnIndex", module = "patchup_py")]
pub struct PyKnnIndex {
    inner: patchup::KnnIndex,
}

#[pymethods]
impl PyKnnIndex {
    #[new]
    fn new(cloud: PyRef<'_, PyPointCloud>) -> Self {
        PyKnnIndex {
            inner: patchup::KnnIndex::build(&cloud.inner),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// The `k` nearest points to `query` as `(index, distance)` pairs.
    fn knn(&self, query: [f64; 3], k: usize) -> PyResult<Vec<(usize, f64)>> {
        let hits = self.inner.knn(pt(query), k).map_err(to_py)?;
        Ok(hits.into_iter().map(|n| (n.index, n.dist)).collect())
    }

    fn within_radius(&self, query: [f64; 3], radius: f64) -> Vec<usize> {
        self.inner.within_radius(pt(query), radius)
    }
}

#[pyclass(name = "MetricsReport", module = "patchup_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyMetricsReport {
    inner: metrics::MetricsReport,
}

#[pymethods]
impl PyMetricsReport {
    #[getter]
    fn cd_l2(&self) -> f64 {
        self.inner.cd_l2
    }

    #[getter]
    fn cd_l1(&self) -> f64 {
        self.inner.cd_l1
    }

    #[getter]
    fn emd(&self) -> Option<f64> {
        self.inner.emd
    }

    #[getter]
    fn p2f_mean(&self) -> Option<f64> {
        self.inner.p2f_mean
    }

    #[getter]
    fn p2f_max(&self) -> Option<f64> {
        self.inner.p2f_max
    }

    #[getter]
    fn uniformity(&self) -> Vec<(f64, f64)> {
        self.inner.uniformity.clone()
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("MetricsReport(cd_l2={:e}, cd_l1={:e})", self.inner.cd_l2, self.inner.cd_l1)
    }
}

fn mesh_from(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> PyResult<TriangleMesh> {
    TriangleMesh::new(vertices.into_iter().map(pt).collect(), faces).map_err(to_py)
}

/// Decodes a 6D rotation `(a1, a2)` into a row-major 3x3 matrix.
#[pyfunction]
fn decode_rotation(a: [f64; 6]) -> PyResult<[[f64; 3]; 3]> {
    let r = patchup::decode_rotation(&Rotation6D::from_slice(a)).map_err(to_py)?;
    Ok(rot_rows(&r))
}

#[pyfunction]
fn bicubic_embed(u: f64, v: f64) -> [f64; 16] {
    patchup::bicubic_embed(u, v)
}

#[pyfunction]
fn bicubic_eval(coeffs: [f64; 16], u: f64, v: f64) -> f64 {
    patchup::bicubic_eval(&BicubicCoeffs(coeffs), u, v)
}

#[pyfunction]
fn patch_lift(patch: PyRef<'_, PyLocalPatch>, du: f64, dv: f64) -> [f64; 3] {
    patchup::patch_lift(&patch.inner, du, dv).to_array()
}

#[pyfunction]
#[pyo3(signature = (cloud, point_index, k = 16))]
fn fit_patch(cloud: PyRef<'_, PyPointCloud>, point_index: usize, k: usize) -> PyResult<PyFitReport> {
    let index = patchup::KnnIndex::build(&cloud.inner);
    let r = patchup::fit_patch(&cloud.inner, &index, point_index, k).map_err(to_py)?;
    Ok(PyFitReport {
        patch: PyLocalPatch { inner: r.patch },
        rms_residual: r.rms_residual,
        displacement_loss: r.displacement_loss,
    })
}

#[pyfunction]
#[pyo3(signature = (cloud, config = None))]
fn upsample(
    py: Python<'_>,
    cloud: PyRef<'_, PyPointCloud>,
    config: Option<PyRef<'_, PyUpsampleConfig>>,
) -> PyResult<PyPointCloud> {
    let cfg = match config {
        Some(c) => c.to_core()?,
        None => patchup::UpsampleConfig::default(),
    };
    let input = cloud.inner.clone();
    let out = py.detach(|| patchup::upsample(&input, &cfg)).map_err(to_py)?;
    Ok(PyPointCloud { inner: out })
}

#[pyfunction]
fn add_noise(cloud: PyRef<'_, PyPointCloud>, level: f64, seed: u64) -> PyPointCloud {
    PyPointCloud {
        inner: patchup::add_noise(&cloud.inner, level, seed),
    }
}

#[pyfunction]
#[pyo3(signature = (cloud, m, seed_index = 0))]
fn farthest_point_sample(cloud: PyRef<'_, PyPointCloud>, m: usize, seed_index: usize) -> PyResult<Vec<usize>> {
    patchup::farthest_point_sample(&cloud.inner, m, seed_index).map_err(to_py)
}

#[pyfunction]
fn chamfer_l2(p: PyRef<'_, PyPointCloud>, q: PyRef<'_, PyPointCloud>) -> PyResult<f64> {
    metrics::chamfer_l2(&p.inner, &q.inner).map_err(to_py)
}

#[pyfunction]
fn chamfer_l1(p: PyRef<'_, PyPointCloud>, q: PyRef<'_, PyPointCloud>) -> PyResult<f64> {
    metrics::chamfer_l1(&p.inner, &q.inner).map_err(to_py)
}

/// Earth mover's distance as `(value, exact, relative_gap)`.
#[pyfunction]
fn emd(p: PyRef<'_, PyPointCloud>, q: PyRef<'_, PyPointCloud>) -> PyResult<(f64, bool, f64)> {
    let r = metrics::emd(&p.inner, &q.inner).map_err(to_py)?;
    Ok((r.value, r.exact, r.relative_gap))
}

/// Point-to-surface distance statistics `(mean, max)` against a triangle mesh.
#[pyfunction]
fn p2f(cloud: PyRef<'_, PyPointCloud>, vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> PyResult<(f64, f64)> {
    let mesh = mesh_from(vertices, faces)?;
    let s = metrics::p2f(&cloud.inner, &mesh).map_err(to_py)?;
    Ok((s.mean, s.max))
}

#[pyfunction]
#[pyo3(signature = (cloud, fractions = None, num_seeds = None))]
fn uniformity(
    cloud: PyRef<'_, PyPointCloud>,
    fractions: Option<Vec<f64>>,
    num_seeds: Option<usize>,
) -> PyResult<Vec<(f64, f64)>> {
    let fractions = fractions.unwrap_or_else(|| metrics::DEFAULT_RADIUS_FRACTIONS.to_vec());
    let seeds = num_seeds.unwrap_or_else(|| metrics::default_num_seeds(cloud.inner.len()));
    metrics::uniformity(&cloud.inner, &fractions, seeds).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (pred, gt, mesh_vertices = None, mesh_faces = None, fractions = None))]
fn evaluate(
    pred: PyRef<'_, PyPointCloud>,
    gt: PyRef<'_, PyPointCloud>,
    mesh_vertices: Option<Vec<[f64; 3]>>,
    mesh_faces: Option<Vec<[usize; 3]>>,
    fractions: Option<Vec<f64>>,
) -> PyResult<PyMetricsReport> {
    let mesh = match (mesh_vertices, mesh_faces) {
        (Some(v), Some(f)) => Some(mesh_from(v, f)?),
        (None, None) => None,
        _ => return Err(PatchupError::new_err("mesh needs both vertices and faces")),
    };
    let mut opts = EvalOptions::default();
    if let Some(f) = fractions {
        opts.uniformity_fractions = f;
    }
    let inner = metrics::evaluate(&pred.inner, &gt.inner, mesh.as_ref(), &opts).map_err(to_py)?;
    Ok(PyMetricsReport { inner })
}

#[pyfunction]
fn read_cloud(path: PathBuf) -> PyResult<PyPointCloud> {
    Ok(PyPointCloud {
        inner: patchup::io::read_cloud(path).map_err(to_py)?,
    })
}

/// Writes `cloud`; `format` is `xyz`, `ply` (binary) or `ply_ascii`, chosen
/// from the extension when omitted.
#[pyfunction]
#[pyo3(signature = (cloud, path, format = None))]
fn write_cloud(cloud: PyRef<'_, PyPointCloud>, path: PathBuf, format: Option<&str>) -> PyResult<()> {
    let format = match format {
        Some(f) => f.parse::<CloudFormat>().map_err(to_py)?,
        None => CloudFormat::from_path(&path).map_err(to_py)?,
    };
    patchup::io::write_cloud(&cloud.inner, path, format).map_err(to_py)
}

#[pymodule]
fn patchup_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PatchupError", m.py().get_type::<PatchupError>())?;
    m.add_class::<PyPointCloud>()?;
    m.add_class::<PyUpsampleConfig>()?;
    m.add_class::<PyLocalPatch>()?;
    m.add_class::<PyFitReport>()?;
    m.add_class::<PyKnnIndex>()?;
    m.add_class::<PyMetricsReport>()?;
    m.add_function(wrap_pyfunction!(decode_rotation, m)?)?;
    m.add_function(wrap_pyfunction!(bicubic_embed, m)?)?;
    m.add_function(wrap_pyfunction!(bicubic_eval, m)?)?;
    m.add_function(wrap_pyfunction!(patch_lift, m)?)?;
    m.add_function(wrap_pyfunction!(fit_patch, m)?)?;
    m.add_function(wrap_pyfunction!(upsample, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(farthest_point_sample, m)?)?;
    m.add_function(wrap_pyfunction!(chamfer_l2, m)?)?;
    m.add_function(wrap_pyfunction!(chamfer_l1, m)?)?;
    m.add_function(wrap_pyfunction!(emd, m)?)?;
    m.add_function(wrap_pyfunction!(p2f, m)?)?;
    m.add_function(wrap_pyfunction!(uniformity, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(read_cloud, m)?)?;
    m.add_function(wrap_pyfunction!(write_cloud, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
