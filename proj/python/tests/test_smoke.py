import json
import math

import numpy as np
import pytest

import latwave as lw


def lo_omega(mu, c0, c1, k):
    return (c0 + c1 * (1.0 - 2.0 * mu * (1.0 - math.cos(2 * math.pi * k)))) / (2 * math.pi)


def lo_dk_omega(mu, c1, k):
    return -2.0 * mu * c1 * math.sin(2 * math.pi * k)


@pytest.fixture(scope="module")
def lo():
    s = lw.make_system("lambda_omega", {"mu": 0.5, "c0": 1.0, "c1": -1.0})
    return s, lw.seed_wave(s, 1, 6)


def test_system_metadata(lo):
    s, _ = lo
    assert s.name == "lambda_omega"
    assert s.d == 2
    assert s.cls == "reaction_diffusion"


def test_plane_wave_frequency(lo):
    s, u = lo
    assert u.k == pytest.approx(1 / 6, abs=1e-15)
    assert abs(u.omega - lo_omega(0.5, 1.0, -1.0, 1 / 6)) <= 1e-10
    assert u.residual <= 1e-12
    assert abs(u.omega - 1 / (4 * math.pi)) <= 1e-10


def test_profile_is_on_the_circle(lo):
    _, u = lo
    r = math.sqrt(1.0 - 2 * 0.5 * (1.0 - math.cos(2 * math.pi / 6)))
    for z in np.linspace(0, 1, 7):
        assert np.linalg.norm(u.evaluate(z)) == pytest.approx(r, abs=1e-10)


def test_multiplier_one_at_zero(lo):
    s, u = lo
    lam = np.asarray(lw.multipliers(s, u, 0.0))
    assert lam.shape == (12,)
    assert np.min(np.abs(lam - 1.0)) <= 1e-8
    # conjugate symmetry of a real problem at xi = 0
    for z in lam:
        assert np.min(np.abs(lam - np.conj(z))) <= 1e-9 * max(1.0, abs(z))


def test_group_velocity_three_ways(lo):
    s, u = lo
    w = lw.rd_whitham(s, u)
    ref = lo_dk_omega(0.5, -1.0, 1 / 6)
    assert abs(w["dk_omega"] - ref) <= 1e-8
    assert abs(w["group_velocity"] - ref) <= 1e-8
    fit = lw.fit_rd(s, u)
    assert abs(fit["a"] - ref) <= 1e-6
    assert 2.7 <= fit["remainder_slope"] <= 3.5


def test_errors_surface_as_python_exceptions():
    with pytest.raises(lw.LatwaveError):
        lw.make_system("no_such_system")


def test_stage_runner(tmp_path):
    cfg = {
        "system": {"name": "lambda_omega", "params": {"mu": 0.5, "c0": 1.0, "c1": -1.0}},
        "wave": {"k": "1/6", "targets": []},
        "stages": ["whitham", "report"],
    }
    m = json.loads(lw.run(json.dumps(cfg), str(tmp_path / "run")))
    assert m["exit_code"] == 0
    status = {st["name"]: st["status"] for st in m["stages"]}
    assert status["profile"] == "ok" and status["whitham"] == "ok"
    assert (tmp_path / "run" / "whitham.json").exists()
    assert "whitham" in lw.report(str(tmp_path / "run"))
