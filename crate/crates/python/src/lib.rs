//! Python bindings for the pentaverify core library.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pentaverify::geometry::{self, Vec2};
use pentaverify::homography;
use pentaverify::io;
use pentaverify::matching::{ImageExtent, Match};
use pentaverify::pipeline::{self, Config, RunStatus, VerificationReport};
use pentaverify::synth::{self, Label, SceneSpec};

type Point = (f64, f64);

fn v(p: Point) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn label_to_py(l: &Label) -> Option<usize> {
    l.plane()
}

fn label_from_py(l: Option<usize>) -> Label {
    l.map_or(Label::Outlier, Label::Inlier)
}

/// A validated set of point correspondences between two images.
#[pyclass(name = "MatchSet", module = "pentaverify_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMatchSet {
    inner: pentaverify::matching::MatchSet,
}

#[pymethods]
impl PyMatchSet {
    #[new]
    fn new(extent1: (u32, u32), extent2: (u32, u32), matches: Vec<(Point, Point)>) -> PyResult<Self> {
        let e1 = ImageExtent::new(extent1.0, extent1.1).map_err(value_err)?;
        let e2 = ImageExtent::new(extent2.0, extent2.1).map_err(value_err)?;
        let matches = matches.into_iter().map(|(a, b)| Match::new(v(a), v(b))).collect();
        let inner = pentaverify::matching::MatchSet::new(e1, e2, matches).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Parses the text matches format.
    #[staticmethod]
    fn from_text(doc: &str) -> PyResult<Self> {
        let inner = io::parse_matches(doc).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_text(&self) -> String {
        io::serialize_matches(&self.inner)
    }

    #[getter]
    fn extent1(&self) -> (u32, u32) {
        let e = self.inner.extent1();
        (e.width, e.height)
    }

    #[getter]
    fn extent2(&self) -> (u32, u32) {
        let e = self.inner.extent2();
        (e.width, e.height)
    }

    fn matches(&self) -> Vec<(Point, Point)> {
        self.inner
            .matches()
            .iter()
            .map(|m| ((m.p1.x, m.p1.y), (m.p2.x, m.p2.y)))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let (a, b) = (self.extent1(), self.extent2());
        format!("MatchSet(len={}, extent1={:?}, extent2={:?})", self.inner.len(), a, b)
    }
}

/// Result of one verification run.
#[pyclass(name = "Report", module = "pentaverify_py", frozen)]
struct PyReport {
    inner: VerificationReport,
}

#[pymethods]
impl PyReport {
    #[staticmethod]
    fn from_json(doc: &str) -> PyResult<Self> {
        let inner = io::report_from_json(doc).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        io::report_to_json(&self.inner)
    }

    /// `"ok"` or `"no_plane_found"`.
    #[getter]
    fn status(&self) -> &'static str {
        match self.inner.status {
            RunStatus::Ok => "ok",
            RunStatus::NoPlaneFound => "no_plane_found",
        }
    }

    #[getter]
    fn correct_count(&self) -> usize {
        self.inner.counters.correct_count
    }

    #[getter]
    fn incorrect_count(&self) -> usize {
        self.inner.counters.incorrect_count
    }

    #[getter]
    fn group_count(&self) -> usize {
        self.inner.groups.len()
    }

    #[getter]
    fn gate_evaluations(&self) -> u64 {
        self.inner.counters.eq3_evaluations
    }

    /// Row-major homography of every group that has one, keyed by group id.
    fn homographies(&self) -> Vec<(usize, [[f64; 3]; 3])> {
        self.inner
            .groups
            .iter()
            .filter_map(|g| g.homography.as_ref().map(|h| (g.id, h.to_rows())))
            .collect()
    }

    /// Group id of each match, or `None` for matches judged incorrect.
    fn assignments(&self) -> Vec<Option<usize>> {
        self.inner.verdicts.iter().map(|v| v.group_id()).collect()
    }

    fn accepted(&self) -> Vec<bool> {
        self.inner.verdicts.iter().map(|v| v.is_correct()).collect()
    }

    fn svg(&self, match_set: &PyMatchSet) -> PyResult<String> {
        if match_set.inner.len() != self.inner.match_count {
            return Err(PyValueError::new_err("match set does not belong to this report"));
        }
        Ok(io::render_report_svg(&match_set.inner, &self.inner))
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(status={}, groups={}, correct={}, incorrect={})",
            self.status(),
            self.group_count(),
            self.correct_count(),
            self.incorrect_count()
        )
    }
}

/// Cross-ratio of four points seen from `o`.
#[pyfunction]
fn cross_ratio(o: Point, a: Point, b: Point, c: Point, d: Point) -> PyResult<f64> {
    geometry::cross_ratio(v(o), v(a), v(b), v(c), v(d)).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (cr, cr_prime, tau = 0.05))]
fn cr_gate(cr: f64, cr_prime: f64, tau: f64) -> bool {
    geometry::cr_gate(cr, cr_prime, tau)
}

/// Least-squares homography from at least four correspondences.
#[pyfunction]
fn estimate_homography(pairs: Vec<(Point, Point)>) -> PyResult<[[f64; 3]; 3]> {
    let pairs: Vec<_> = pairs.into_iter().map(|(a, b)| (v(a), v(b))).collect();
    homography::estimate_homography(&pairs)
        .map(|h| h.to_rows())
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (
    match_set, *, grid = 3, tau = 0.05, trials = 1000, pixel_threshold = 10.0, seed = 0,
    keep_timing = false
))]
fn verify(
    py: Python<'_>,
    match_set: &PyMatchSet,
    grid: u32,
    tau: f64,
    trials: u32,
    pixel_threshold: f64,
    seed: u64,
    keep_timing: bool,
) -> PyResult<PyReport> {
    let cfg = Config {
        grid_n: grid,
        cr_tau: tau,
        trial_count: trials,
        pixel_threshold,
        seed,
        ..Config::default()
    };
    let ms = &match_set.inner;
    let report = py.detach(|| pipeline::run(ms, &cfg)).map_err(value_err)?;
    let inner = if keep_timing { report } else { report.without_timing() };
    Ok(PyReport { inner })
}

/// Generates a labelled scene from its JSON description.
///
/// Returns the match set and one label per match: a plane index for
/// inliers, `None` for outliers.
#[pyfunction]
#[pyo3(signature = (spec_json, seed = None))]
fn synth_scene(spec_json: &str, seed: Option<u64>) -> PyResult<(PyMatchSet, Vec<Option<usize>>)> {
    let mut spec: SceneSpec = serde_json::from_str(spec_json).map_err(value_err)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    generate(&spec)
}

#[pyfunction]
#[pyo3(signature = (inliers, outliers, noise_sigma, seed, corner = false))]
fn synth_preset(
    inliers: usize,
    outliers: usize,
    noise_sigma: f64,
    seed: u64,
    corner: bool,
) -> PyResult<(PyMatchSet, Vec<Option<usize>>)> {
    let spec = if corner {
        SceneSpec::corner(inliers, outliers, noise_sigma, seed)
    } else {
        SceneSpec::single_plane(inliers, outliers, noise_sigma, seed)
    };
    generate(&spec)
}

fn generate(spec: &SceneSpec) -> PyResult<(PyMatchSet, Vec<Option<usize>>)> {
    let scene = synth::generate(spec).map_err(value_err)?;
    let labels = scene.labels.iter().map(label_to_py).collect();
    Ok((PyMatchSet { inner: scene.match_set }, labels))
}

/// Precision, recall and outlier rejection of a report against labels.
#[pyfunction]
fn score(report: &PyReport, labels: Vec<Option<usize>>) -> PyResult<(f64, f64, f64)> {
    if labels.len() != report.inner.verdicts.len() {
        return Err(PyValueError::new_err("one label per match is required"));
    }
    let labels: Vec<Label> = labels.into_iter().map(label_from_py).collect();
    let s = synth::score(&report.accepted(), &labels);
    Ok((s.precision, s.recall, s.outlier_rejection))
}

/// Median per-evaluation cost of the cross-ratio kernel against a
/// homography fit, as `(cross_ratio_ns, homography_ns, ratio)`.
#[pyfunction]
#[pyo3(signature = (iterations = 100_000))]
fn benchmark(py: Python<'_>, iterations: usize) -> PyResult<(f64, f64, f64)> {
    if iterations == 0 {
        return Err(PyValueError::new_err("iterations must be positive"));
    }
    let t = py.detach(|| io::benchmark_costs(iterations, io::BenchWorkload::CrossRatioVsHomography));
    Ok((t.a_ns, t.b_ns, t.ratio))
}

#[pymodule]
fn pentaverify_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatchSet>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(cross_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(cr_gate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_homography, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(synth_scene, m)?)?;
    m.add_function(wrap_pyfunction!(synth_preset, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    Ok(())
}
