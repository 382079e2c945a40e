use pyo3::prelude::*;

#[pymodule]
#[pyo3(name = "debiased_cv")]
fn debiased_cv_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
