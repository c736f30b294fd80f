import json

import numpy as np
import pytest

from delab.ensembles import (
    DegreePolynomial,
    EnsembleError,
    from_edge_perspective,
    from_json_dict,
    from_node_perspective,
    load_ensemble,
    regular_ldpc,
)


def test_regular_36_conversions():
    ens = regular_ldpc(3, 6)
    assert ens.lam.coeffs == (0.0, 0.0, 1.0)
    assert ens.rho.coeffs == (0.0,) * 5 + (1.0,)
    assert ens.L.coeffs == (0.0, 0.0, 0.0, 1.0)
    assert ens.R.coeffs == (0.0,) * 6 + (1.0,)


def test_node_to_edge():
    ens = from_node_perspective([0, 0, 0, 1], [0, 0, 0, 0, 0, 0, 1], "ldpc")
    assert ens.lam.coeffs == (0.0, 0.0, 1.0)
    assert ens.rho.coeffs == (0.0,) * 5 + (1.0,)


def test_round_trip_identity():
    lam = [0, 0.25, 0.35, 0.4]
    rho = [0, 0, 0, 0.6, 0.4]
    ens = from_edge_perspective(lam, rho, "ldpc")
    back = from_node_perspective(ens.L.coeffs, ens.R.coeffs, "ldpc")
    assert np.allclose(back.lam.coeffs, ens.lam.coeffs, atol=1e-12)
    assert np.allclose(back.rho.coeffs, ens.rho.coeffs, atol=1e-12)


def test_degree_one_variable_rejected():
    with pytest.raises(EnsembleError):
        from_edge_perspective([0.1, 0.9], [0, 0, 1], "ldpc")
    # fine for LDGM
    from_edge_perspective([0.1, 0.9], [0, 0, 1], "ldgm")


def test_derived_constants_36():
    consts = regular_ldpc(3, 6).derived_constants()
    assert consts["K"] == 435.0
    assert consts["design_rate"] == 0.5
    assert consts["lambda_prime_0"] == 0.0
    assert consts["rho_prime_1"] == 5.0
    assert consts["rho_second_1"] == 20.0


def test_constants_nonnegative_and_positive_K():
    ens = from_edge_perspective([0, 0.5, 0.5], [0, 0, 0, 0.3, 0.7], "ldpc")
    consts = ens.derived_constants()
    assert all(v >= 0 for v in consts.values())
    assert consts["K"] > 0
    assert consts["lambda_prime_0"] == 0.5


def test_json_rational_coefficients(tmp_path):
    cfg = {
        "kind": "ldgm",
        "L": [0, 0, 0, 1],
        "R": [0, {"num": 1, "den": 4}, {"num": 3, "den": 4}],
    }
    path = tmp_path / "ens.json"
    path.write_text(json.dumps(cfg))
    ens = load_ensemble(str(path))
    assert ens.R.coeffs == (0.0, 0.25, 0.75)
    assert ens.kind == "ldgm"


def test_json_validation():
    with pytest.raises(EnsembleError):
        from_json_dict({"kind": "turbo", "lambda": [0, 1], "rho": [0, 1]})
    with pytest.raises(EnsembleError):
        from_json_dict({"kind": "ldpc"})


def test_polynomial_basics():
    p = DegreePolynomial((0.0, 0.5, 0.5))
    assert p(1.0) == 1.0
    assert p.derivative().coeffs == (0.5, 1.0)
    assert p.degree == 2
    with pytest.raises(EnsembleError):
        DegreePolynomial((-0.1, 1.1))
