import json
import math

import numpy as np
import pytest

from aqcool import QuantumState, ValidationError, eigendecompose, HermitianOperator
from aqcool.scenarios import (
    BUILTIN,
    Scenario,
    check_scenario,
    initial_state,
    load_config,
    optical_path_equivalence,
    optical_path_state,
    random_equivalence_sweep,
    revised_fidelity_report,
    run_scenario,
)

from conftest import random_density, random_pure


@pytest.fixture(scope="module")
def tables():
    return {name: run_scenario(name, seed=0) for name in BUILTIN}


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_builtin_checks_pass(tables, name):
    checks = check_scenario(name, tables[name])
    assert checks and all(ok for _, ok in checks), checks


def test_fig4a_schema_and_step_zero(tables, sz, sx):
    t = tables["fig4a_map"][0]
    assert t.columns == ["hamiltonian", "ratio", "theta_deg", "step", "mean_energy", "yield"]
    assert len(t.rows) == 2 * 3 * 10 * 4
    for ratio, expected in (("4:1", 0.6), ("1:1", 0.0), ("1:4", -0.6)):
        for r in t.where(step=0, ratio=ratio):
            assert r["mean_energy"] == pytest.approx(expected, abs=1e-12)
            assert r["yield"] == 1.0


def test_fig4a_theta_zero_column(tables):
    t = tables["fig4a_map"][0]
    for ham in ("Z", "X"):
        for ratio in ("4:1", "1:1", "1:4"):
            e = [r["mean_energy"] for r in t.where(hamiltonian=ham, ratio=ratio, theta_deg=0.0)]
            assert len(e) == 4 and np.ptp(e) <= 1e-12


def test_sigma_x_ratio_uses_rotated_basis(sx):
    psi = initial_state(sx, "4:1")
    plus = np.array([1, 1]) / math.sqrt(2)
    assert abs(np.vdot(plus, psi.data)) ** 2 == pytest.approx(0.8, abs=1e-12)


def test_initial_state_parsing(sz):
    a = initial_state(sz, "0.6,0.8")
    np.testing.assert_allclose(sz.populations(a), [0.64, 0.36], atol=1e-12)
    b = initial_state(sz, "1, 1i")
    assert abs(np.linalg.norm(b.data) - 1) < 1e-12
    for bad in ("4:", "-1:2", "0:0", "1,2,3", "x,y"):
        with pytest.raises(ValidationError):
            initial_state(sz, bad)


def test_tables_are_reproducible_and_carry_provenance(tables):
    again = run_scenario("fig5_tradeoff", seed=0)
    first = tables["fig5_tradeoff"][0]
    assert again[0].to_csv() == first.to_csv()
    prov = first.provenance
    assert prov["scenario"] == "fig5_tradeoff" and prov["master_seed"] == 0
    assert len(prov["scenario_hash"]) == 16 and "code_version" in prov
    assert run_scenario("fig5_tradeoff", seed=3)[0].provenance["master_seed"] == 3


def test_table_write(tmp_path, tables):
    t = tables["figS4_ten_steps"][0]
    csv_path, meta = t.write(tmp_path)
    assert csv_path.read_bytes().count(b"\r") == 0
    assert json.loads(meta.read_text())["scenario"] == "figS4_ten_steps"
    (js,) = t.write(tmp_path, "json")
    payload = json.loads(js.read_text())
    assert payload["columns"] == t.columns and "provenance" in payload


def test_unknown_scenario():
    with pytest.raises(ValidationError):
        run_scenario("fig9")


def test_custom_scenario_outputs():
    sc = Scenario("mine", initial="4:1", theta_grid=(0.3, 0.6), steps=2, outputs=("ensemble", "compare", "module"))
    ens, cmp_, mod = run_scenario(sc)
    assert [t.name for t in (ens, cmp_, mod)] == ["mine_ensemble", "mine_compare", "mine_module"]
    assert len(ens.rows) == 2 * 3 and len(mod.rows) == 2
    assert np.all(cmp_.column("delta_energy") >= -1e-12)
    with pytest.raises(ValidationError):
        run_scenario(Scenario("bad", outputs=("plot",)))


def test_load_config(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(
        "# comment\nname = demo\nhamiltonian = sigma_x\ninitial = 1:4\n"
        "theta_grid_deg = 10, 20\nsteps = 4\nstrategy = recycling\noutputs = ensemble\n"
    )
    sc = load_config(cfg)
    assert sc.name == "demo" and sc.hamiltonian == "sigma_x" and sc.steps == 4
    assert sc.theta_grid == pytest.approx((math.radians(10), math.radians(20)))
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(ValidationError, match="unknown key"):
        load_config(bad)
    bad.write_text("steps = three\n")
    with pytest.raises(ValidationError):
        load_config(bad)
    bad.write_text("just words\n")
    with pytest.raises(ValidationError):
        load_config(bad)


def test_matrix_file_hamiltonian(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(HermitianOperator(np.diag([1.0, -1.0])).to_json())
    (table,) = run_scenario(Scenario("file", hamiltonian=str(path), steps=1))
    ref = run_scenario(Scenario("named", steps=1))[0]
    assert table.to_csv() == ref.to_csv()


def test_revised_fidelity_examples(rng):
    psi = random_pure(rng, 2)
    r = revised_fidelity_report(QuantumState.mixed(psi.density_matrix()), psi)
    assert r["fidelity"] == pytest.approx(1) and r["revised_fidelity"] == pytest.approx(1)
    plus = QuantumState.pure([1, 1], normalize=True)
    rho = QuantumState.mixed(0.9 * plus.density_matrix() + 0.05 * np.eye(2))
    r = revised_fidelity_report(rho, plus)
    assert r["fidelity"] == pytest.approx(0.95, abs=1e-12)
    assert r["revised_fidelity"] == pytest.approx(1.0, abs=1e-12)


def test_revised_fidelity_beats_plain_under_depolarizing(rng):
    for _ in range(200):
        d = int(rng.integers(2, 5))
        psi = random_pure(rng, d)
        eps = rng.uniform(0, 0.9)
        rho = QuantumState.mixed((1 - eps) * psi.density_matrix() + eps * np.eye(d) / d)
        r = revised_fidelity_report(rho, psi)
        assert r["revised_fidelity"] >= r["fidelity"] - 1e-12


def test_revised_fidelity_near_pure_perturbations(rng):
    for _ in range(1000):
        psi = random_pure(rng, 2)
        noise = random_density(rng, 2).data
        eps = rng.uniform(0, 0.1)
        rho = QuantumState.mixed((1 - eps) * psi.density_matrix() + eps * noise)
        r = revised_fidelity_report(rho, psi)
        assert r["revised_fidelity"] >= r["fidelity"] - 1e-12


def test_revised_fidelity_degenerate_lists_candidates():
    r = revised_fidelity_report(QuantumState.maximally_mixed(2), QuantumState.pure([1, 0]))
    assert r["degenerate"] and len(r["candidate_fidelities"]) == 2


def test_optical_path_examples():
    theta = math.radians(30)
    out = optical_path_state(1, 0, theta)
    a = (1 + 1j * np.exp(1j * theta)) / 2
    b = (1 - 1j * np.exp(1j * theta)) / 2
    # ordering: polarization (x) path, so index = 2*pol + path
    np.testing.assert_allclose(out, [a, b, 0, 0], atol=1e-15)
    assert optical_path_equivalence(1, 0, theta) < 1e-12
    out90 = optical_path_state(0.6, 0.8, math.pi / 2)
    np.testing.assert_allclose(out90, [0, 0.6, 0.8, 0], atol=1e-15)
    assert optical_path_equivalence(0.6, 0.8, math.pi / 2) < 1e-12
    with pytest.raises(ValidationError):
        optical_path_equivalence(1, 1, 0.1)


def test_optical_sweep():
    assert random_equivalence_sweep(1000, seed=1) < 1e-12
