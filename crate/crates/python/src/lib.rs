//! Python bindings: load matrix files, strengthen them by their axioms,
//! decide consequence, generate calculi and search proofs.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rexpand::{
    calculus_for, find_separators, parse_calculus, parse_formula_list, parse_spec, prove, render_dot, render_text,
    sharp_construct, verify_equivalence, write_calculus, write_spec, Discriminator, OracleOptions, PNMatrix,
    ProofOptions, SearchOutcome, Sequent, Signature, SpecFile, StrengthenOptions, SuiteBounds, Verdict,
};

fn to_py(e: rexpand::Error) -> PyErr {
    match e {
        rexpand::Error::Resource(msg) => PyRuntimeError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn sequent(sig: &Signature, gamma: &[String], delta: &[String]) -> PyResult<Sequent> {
    let parse = |xs: &[String]| parse_formula_list(&xs.join(", "), sig).map_err(to_py);
    Ok(Sequent::new(parse(gamma)?, parse(delta)?))
}

/// A finite PNmatrix.
#[pyclass(name = "Matrix", module = "rexpand_py", frozen)]
struct PyMatrix {
    inner: PNMatrix,
}

#[pymethods]
impl PyMatrix {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn designated(&self) -> Vec<String> {
        self.inner.designated().into_iter().map(|x| self.inner.label(x).to_string()).collect()
    }

    /// Output labels of `conn` on the given argument labels.
    fn entry(&self, conn: &str, args: Vec<String>) -> PyResult<Vec<String>> {
        let m = &self.inner;
        let c = m.signature().require(conn).map_err(to_py)?;
        let xs = args
            .iter()
            .map(|a| m.value_by_label(a).ok_or_else(|| PyValueError::new_err(format!("no value `{a}`"))))
            .collect::<PyResult<Vec<_>>>()?;
        if xs.len() != m.signature().arity(c) {
            return Err(PyValueError::new_err(format!("`{conn}` takes {} argument(s)", m.signature().arity(c))));
        }
        Ok(m.entry(c, &xs).iter().map(|&y| m.label(y).to_string()).collect())
    }

    /// `(True, None)` if Γ entails Δ, else `(False, countermodel)` mapping
    /// formulas to value labels.
    #[pyo3(signature = (gamma, delta))]
    fn consequence(&self, gamma: Vec<String>, delta: Vec<String>) -> PyResult<(bool, Option<BTreeMap<String, String>>)> {
        let m = &self.inner;
        let s = sequent(m.signature(), &gamma, &delta)?;
        Ok(match m.consequence(&s) {
            Verdict::Holds { .. } => (true, None),
            Verdict::Fails(cm) => {
                let shown = cm
                    .assignment
                    .iter()
                    .map(|(f, &y)| (f.display(m.signature()).to_string(), m.label(y).to_string()))
                    .collect();
                (false, Some(shown))
            }
        })
    }

    /// Maximal total simple refinements, as label lists.
    fn refinements(&self) -> Vec<Vec<String>> {
        let m = &self.inner;
        m.total_refinements()
            .iter()
            .map(|r| r.iter().map(|&x| m.label(x).to_string()).collect())
            .collect()
    }

    fn same_up_to_labels(&self, other: &PyMatrix) -> bool {
        self.inner.same_up_to_labels(&other.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        write_spec(&SpecFile::new(self.inner.clone()), &[])
    }
}

/// A matrix file with its axioms and optional separators.
#[pyclass(name = "Spec", module = "rexpand_py", frozen)]
struct PySpec {
    inner: SpecFile,
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PySpec { inner: parse_spec(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Self::parse(&text)
    }

    #[getter]
    fn matrix(&self) -> PyMatrix {
        PyMatrix { inner: self.inner.matrix.clone() }
    }

    #[getter]
    fn axioms(&self) -> Vec<String> {
        let sig = self.inner.sig();
        self.inner.axioms.iter().map(|a| a.display(sig).to_string()).collect()
    }

    /// The matrix strengthened by the axioms, named by the display strings
    /// when the file has them.
    fn strengthen(&self) -> PyResult<PyMatrix> {
        let s = &self.inner;
        let sharp = sharp_construct(&s.matrix, s.projection.as_ref(), &s.axioms, StrengthenOptions::default())
            .map_err(to_py)?;
        let mut m = sharp.matrix.clone();
        if !s.display.is_empty() {
            let labels = sharp.display_labels(&s.matrix, &s.display).map_err(to_py)?;
            m = m.with_labels(labels).map_err(to_py)?;
        }
        Ok(PyMatrix { inner: m })
    }

    /// Compare the strengthened matrix with the bounded axiom oracle on the
    /// small-sequent suite; returns the counts.
    #[pyo3(signature = (vars=2, depth=2))]
    fn verify(&self, vars: u32, depth: usize) -> PyResult<BTreeMap<String, usize>> {
        let s = &self.inner;
        let sharp = sharp_construct(&s.matrix, s.projection.as_ref(), &s.axioms, StrengthenOptions::default())
            .map_err(to_py)?;
        let bounds = SuiteBounds { vars, max_depth: depth, ..SuiteBounds::default() };
        let r = verify_equivalence(&s.matrix, &s.axioms, &sharp, bounds, OracleOptions::default()).map_err(to_py)?;
        Ok(BTreeMap::from([
            ("checked".to_string(), r.checked),
            ("both_hold".to_string(), r.both_hold),
            ("both_fail".to_string(), r.both_fail),
            ("inconclusive".to_string(), r.inconclusive),
            ("disagreements".to_string(), r.disagreements.len()),
        ]))
    }
}

/// A multiple-conclusion calculus.
#[pyclass(name = "Calculus", module = "rexpand_py", frozen)]
struct PyCalculus {
    inner: rexpand::Calculus,
}

#[pymethods]
impl PyCalculus {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyCalculus { inner: parse_calculus(text).map_err(to_py)? })
    }

    /// Generate a calculus for `matrix`, with the given separators or the
    /// first ones found up to `depth`.
    #[staticmethod]
    #[pyo3(signature = (matrix, separators=None, depth=2))]
    fn generate(matrix: &PyMatrix, separators: Option<Vec<String>>, depth: usize) -> PyResult<Self> {
        let m = &matrix.inner;
        let disc = match separators {
            Some(seps) => {
                let seps = parse_formula_list(&seps.join(", "), m.signature()).map_err(to_py)?;
                Discriminator::from_separators(m, &seps)
            }
            None => find_separators(m, depth),
        }
        .map_err(|pairs| PyValueError::new_err(format!("values left apart: {pairs:?}")))?;
        Ok(PyCalculus { inner: calculus_for(m, &disc).map_err(to_py)? })
    }

    #[getter]
    fn rules(&self) -> Vec<String> {
        self.inner.rules.iter().map(|r| r.display(&self.inner.sig).to_string()).collect()
    }

    /// A rendered proof of Δ from Γ, or `None` when the search saturates.
    #[pyo3(signature = (gamma, delta, render="text", max_nodes=ProofOptions::default().max_nodes))]
    fn prove(&self, gamma: Vec<String>, delta: Vec<String>, render: &str, max_nodes: usize) -> PyResult<Option<String>> {
        let calc = &self.inner;
        let s = sequent(&calc.sig, &gamma, &delta)?;
        Ok(match prove(calc, &s, ProofOptions { max_nodes }).map_err(to_py)? {
            SearchOutcome::Proved(t) => Some(match render {
                "text" => render_text(&t, &calc.sig),
                "dot" => render_dot(&t, &s, &calc.sig),
                other => return Err(PyValueError::new_err(format!("unknown render `{other}`"))),
            }),
            SearchOutcome::Saturated(_) => None,
        })
    }

    fn __str__(&self) -> String {
        write_calculus(&self.inner, &[])
    }
}

#[pymodule]
fn rexpand_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyCalculus>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_kinds() {
        Python::initialize();
        Python::attach(|py| {
            assert!(to_py(rexpand::Error::Resource("cap".into())).is_instance_of::<PyRuntimeError>(py));
            assert!(to_py(rexpand::Error::UnknownRule("r".into())).is_instance_of::<PyValueError>(py));
        });
    }
}
