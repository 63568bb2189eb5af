import math

import pytest

import gwflow


def test_mechanisms():
    assert gwflow.BranchingMechanism(sigma2=2.0)(3.0) == pytest.approx(9.0)
    assert gwflow.BranchingMechanism(b=1.0)(2.0) == pytest.approx(2.0)
    with pytest.raises(gwflow.DomainError):
        gwflow.BranchingMechanism(sigma2=1.0)(-1.0)
    family = gwflow.AdmissibleFamily(gwflow.BranchingMechanism(), a=1.0, grid_points=11, h=1.0)
    assert family.psi(0.5, 4.0) == pytest.approx(4.0)
    assert family.phi_q(1.0, 2.0) == pytest.approx(-2.0)
    assert family.nonlocal_psi(10, [1.0] * 11) == pytest.approx(1.0)


def test_pgfs():
    g = gwflow.Pgf.from_coefficients([0.5, 0.0, 0.5])
    assert g(0.5) == 0.625
    assert gwflow.iterate(g, 0.0, 2) == 0.625
    assert sorted(gwflow.sampler_table(g)) == [(0, 0.5), (2, 0.5)]
    built = gwflow.build_local_pgf(gwflow.BranchingMechanism(sigma2=1.0), 7, 7.0)
    assert built.coefficients(2) == pytest.approx([0.5, 0.0, 0.5], abs=1e-15)
    with pytest.raises(gwflow.ValidityError):
        gwflow.build_local_pgf(gwflow.BranchingMechanism(sigma2=1.0), 10, 1.0)
    h = gwflow.build_nonlocal_pgf(1.0, [], 5, 2.0)
    assert h(0.0) == pytest.approx(0.9)
    assert gwflow.scaled_phi_k(g, 10, 10.0, 1.0) == pytest.approx(0.452795850303135617, rel=1e-14)


def test_cumulants():
    feller = gwflow.BranchingMechanism(sigma2=1.0)
    assert gwflow.solve_cumulant(feller, 1.0, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-10)
    assert gwflow.closed_form_cumulant(feller, 1.0, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-14)
    g = gwflow.build_local_pgf(feller, 100, 100.0)
    assert gwflow.discrete_cumulant(g, 100, 100.0, 1.0, 1.0) == pytest.approx(0.665764465277561535, rel=1e-11)
    family = gwflow.AdmissibleFamily(gwflow.BranchingMechanism(), a=1.0, grid_points=21, h=1.0)
    v = gwflow.solve_nonlocal_cumulant(family, 0.5, [1.0] * 21)
    assert v[-1] == pytest.approx(math.exp(0.5), rel=1e-10)


def test_simulation_is_reproducible():
    feller = gwflow.BranchingMechanism(sigma2=1.0)
    a = gwflow.simulate_independent(feller, 10, 10.0, [5] * 11, 10, seed=3)
    b = gwflow.simulate_independent(feller, 10, 10.0, [5] * 11, 10, seed=3)
    assert a == b
    assert len(a) == 11


def test_bundled_configs_and_runs():
    names = gwflow.bundled_config_names()
    assert len(names) >= 6
    config = gwflow.bundled_config("feller_binary")
    assert config["experiment"] == "cumulant_convergence"
    summary = gwflow.run("feller_binary")
    assert summary["passed"] is True
    assert len(summary["rungs"]) == 3
    config["k_ladder"] = [10, 100]
    assert gwflow.run(config)["passed"] is True
    with pytest.raises(gwflow.ConfigError):
        gwflow.run({"schema": "gwflow/1", "experiment": "nothing"})
