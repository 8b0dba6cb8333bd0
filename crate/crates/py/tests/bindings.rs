use pyo3::prelude::*;
use pyo3::types::PyModule;

fn with_module<F: FnOnce(&Bound<'_, PyModule>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "fwcut").unwrap();
        fwcut_py::register(&m).unwrap();
        f(&m);
    });
}

#[test]
fn graph_roundtrip_and_values() {
    with_module(|m| {
        let g = m
            .getattr("WeightedGraph")
            .unwrap()
            .getattr("from_gset")
            .unwrap()
            .call1(("3 3\n1 2 1\n2 3 1\n1 3 1\n",))
            .unwrap();
        assert_eq!(g.getattr("n").unwrap().extract::<usize>().unwrap(), 3);
        let cut: f64 = m
            .getattr("cut_value")
            .unwrap()
            .call1((&g, vec![0usize, 1, 1]))
            .unwrap()
            .extract()
            .unwrap();
        assert_eq!(cut, 2.0);
        let (opt, _): (f64, Vec<usize>) = m
            .getattr("brute_force_maxkcut")
            .unwrap()
            .call1((&g, 3))
            .unwrap()
            .extract()
            .unwrap();
        assert_eq!(opt, 3.0);
    });
}

#[test]
fn errors_become_value_errors() {
    with_module(|m| {
        let err = m
            .getattr("WeightedGraph")
            .unwrap()
            .call1((2usize, vec![(0usize, 0usize, 1.0f64)]))
            .unwrap_err();
        Python::attach(|py| assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py)));
        assert!(m
            .getattr("phi")
            .unwrap()
            .call1((vec![0.0], vec![f64::NAN], 1.0))
            .is_err());
    });
}

#[test]
fn pipeline_report() {
    with_module(|m| {
        let g = m
            .getattr("WeightedGraph")
            .unwrap()
            .call1((
                3usize,
                vec![(0usize, 1usize, 1.0f64), (1, 2, 1.0), (0, 2, 1.0)],
            ))
            .unwrap();
        let kwargs = pyo3::types::PyDict::new(m.py());
        kwargs.set_item("k", 3).unwrap();
        kwargs.set_item("eps", 0.15).unwrap();
        kwargs.set_item("reps", 30).unwrap();
        let r = m
            .getattr("solve_maxkcut")
            .unwrap()
            .call((&g,), Some(&kwargs))
            .unwrap();
        assert!(r.getattr("converged").unwrap().extract::<bool>().unwrap());
        assert_eq!(
            r.getattr("best_value").unwrap().extract::<f64>().unwrap(),
            3.0
        );
        let csv: String = r.call_method0("to_csv").unwrap().extract().unwrap();
        assert_eq!(csv.lines().count(), 2);
    });
}
