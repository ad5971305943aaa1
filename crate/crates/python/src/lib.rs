use pyo3::prelude::*;

#[pymodule]
fn zczt(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
