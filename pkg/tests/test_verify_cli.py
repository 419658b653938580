import dataclasses
import json
import subprocess
import sys

import numpy as np
import pytest

from hyperop import cli, verify
from hyperop.algebra import Hypercomplex, get_algebra
from hyperop.jsonio import dumps
from hyperop.kmodule import random_kvector
from hyperop.operators import QuasilinearOp, random_op
from hyperop.states import KMeasure, StateFunctional, density_state

# -- verify ----------------------------------------------------------------------------------------


@pytest.mark.parametrize("suite", verify.SUITES)
def test_each_suite_passes(suite):
    rep = verify.run_suite(suite, seed=7, trials=5 if suite != "algebra" else 200)
    assert rep.ok, [r.to_json() for r in rep.records if not r.ok]
    assert all(np.isfinite(r.max_residual) for r in rep.records)


def test_report_is_deterministic():
    a = verify.run(["algebra", "states"], seed=3, trials=4).dumps()
    b = verify.run(["algebra", "states"], seed=3, trials=4).dumps()
    assert a == b
    assert verify.run("algebra", seed=4, trials=4).dumps() != verify.run("algebra", seed=5, trials=4).dumps()


def test_merged_order_follows_modules():
    rep = verify.run(["states", "algebra"], seed=0, trials=3)
    names = [r.name.split(".")[0] for r in rep.records]
    assert names.index("algebra") < names.index("states")


def test_unknown_suite():
    with pytest.raises(Exception):
        verify.run_suite("nope")


def _mutated_octonions():
    O = get_algebra("O")
    sgn = np.array(O.sgn).copy()
    sgn[1, 2] *= -1
    return dataclasses.replace(O, sgn=sgn)


def test_sign_flip_breaks_alternativity(monkeypatch):
    bad = _mutated_octonions()
    monkeypatch.setattr(verify, "_tags", lambda: (get_algebra("H"), bad))
    rep = verify.run_suite("algebra", seed=1, trials=200)
    rec = {r.name: r for r in rep.records}
    assert not rec["alternativity"].ok
    assert not rep.ok and rep.status == "fail"


def test_crash_counts_as_failure(monkeypatch):
    def boom(rng, trials):
        raise RuntimeError("broken")
    monkeypatch.setitem(verify._REGISTRY, "algebra", [("boom", "always fails", 0.0, boom)])
    rep = verify.run_suite("algebra", seed=0)
    assert not rep.ok and "RuntimeError" in rep.records[0].ref


# -- JSON ------------------------------------------------------------------------------------------


def test_floats_round_trip_bit_exactly(rng):
    vals = np.concatenate([rng.standard_normal(200) * 10.0 ** rng.integers(-300, 300, 200),
                           [5e-324, -0.0, 0.1, 1 / 3, 2.0 ** 60, np.nextafter(1.0, 2.0)]])
    back = json.loads(dumps(vals.tolist()))
    assert np.array_equal(np.array(back).view(np.int64), vals.view(np.int64))


def test_domain_objects_round_trip(rng):
    z = Hypercomplex("O", rng.standard_normal(8))
    assert np.array_equal(Hypercomplex.from_json(json.loads(dumps(z.to_json()))).coeffs, z.coeffs)
    T = random_op("H", 2, rng)
    assert np.array_equal(QuasilinearOp.from_json(json.loads(dumps(T.to_json()))).rep, T.rep)
    rho = density_state([random_kvector("H", 2, rng, unit=True) for _ in range(2)], [0.25, 0.75])
    back = StateFunctional.from_json(json.loads(dumps(rho.to_json())))
    assert np.array_equal(back.coeffs, rho.coeffs)
    assert all(np.array_equal(a.data, b.data) for a, b in zip(back.xs, rho.xs))
    mu = KMeasure("H", [0, 1], rng.standard_normal((2, 4, 4)))
    assert np.array_equal(KMeasure.from_json(json.loads(dumps(mu.to_json()))).mu, mu.mu)


# -- CLI -------------------------------------------------------------------------------------------


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


IDENTITY_H1 = {"algebra": "H", "n": 1, "rep": np.eye(4).tolist()}


def test_spectrum_identity(tmp_path, capsys):
    code, out, _ = run(capsys, "spectrum", write(tmp_path, "i.json", IDENTITY_H1))
    assert code == 0 and json.loads(out)["points"] == [[1, 0, 0, 0]]


def test_spectrum_diagonal_example(tmp_path, capsys):
    f = write(tmp_path, "d.json", {"algebra": "H", "n": 3,
                                   "entries": [[[0, 1], 0, 0], [0, [1, 0, 1], 0], [0, 0, 2]]})
    code, out, _ = run(capsys, "spectrum", f, "--mode", "diag")
    rep = json.loads(out)
    assert code == 0
    assert rep["points"] == [[0, 1, 0, 0], [1, 0, 1, 0], [2, 0, 0, 0]] and rep["norm"] == 2.0


def test_spectrum_scan(tmp_path, capsys):
    code, out, _ = run(capsys, "spectrum", write(tmp_path, "i.json", IDENTITY_H1), "--mode", "scan",
                       "--M", "0,0,1", "--grid", "61")
    pts = json.loads(out)["points"]
    assert code == 0 and len(pts) == 1 and abs(pts[0][0] - 1) < 1e-6


def test_non_selfadjoint_exit_1(tmp_path, capsys):
    f = write(tmp_path, "n.json", {"algebra": "H", "n": 1, "entries": [[[0, 1]]]})
    code, _, err = run(capsys, "spectrum", f)
    assert code == 1 and "selfadjoint" in err


def test_sqrt_cayley_calc(tmp_path, capsys):
    four = write(tmp_path, "4.json", {"algebra": "H", "n": 1, "entries": [[4]]})
    code, out, _ = run(capsys, "sqrt", four)
    assert code == 0 and np.array_equal(json.loads(out)["rep"], 2 * np.eye(4))
    zero = write(tmp_path, "0.json", {"algebra": "O", "n": 1, "entries": [[0]]})
    code, out, _ = run(capsys, "cayley", zero, "--M", "0,1")
    assert code == 0 and np.array_equal(json.loads(out)["rep"], -np.eye(8))
    code, out, _ = run(capsys, "calc", four, "poly:[[1],[0],[1]]")
    assert code == 0 and np.array_equal(json.loads(out)["rep"], 17 * np.eye(4))
    code, out, _ = run(capsys, "calc", four, "exp:0,0,1")
    assert code == 0 and np.allclose(json.loads(out)["rep"], np.eye(4))
    code, out, _ = run(capsys, "calc", four, "cayley:0,0,0,1")
    assert code == 0
    code, out, _ = run(capsys, "polar", four)
    assert code == 0 and np.allclose(json.loads(out)["modulus"]["rep"], 4 * np.eye(4))


def test_gns_command(tmp_path, capsys):
    alg = write(tmp_path, "a.json", {"algebra": "H", "n": 1, "full": True})
    st = write(tmp_path, "s.json", {"kind": "vector", "x": {"algebra": "H", "coords": [[1, 0, 0, 0]]}})
    rep = tmp_path / "out.json"
    code, out, _ = run(capsys, "gns", alg, st, "--report", str(rep))
    assert code == 0 and out == ""
    assert json.loads(rep.read_text())["quotient_dim"] == 4


def test_stdin(tmp_path, capsys, monkeypatch):
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(IDENTITY_H1)))
    code, out, _ = run(capsys, "sqrt", "-")
    assert code == 0


@pytest.mark.parametrize("argv", [
    ["verify", "nope"],
    ["calc", "MISSING.json", "abs"],
    ["spectrum", "--mode", "bogus", "x.json"],
])
def test_input_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2


def test_malformed_inputs_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["sqrt", str(bad)]) == 2
    assert cli.main(["sqrt", write(tmp_path, "s.json", {"algebra": "H", "n": 2, "rep": [[1]]})]) == 2
    four = write(tmp_path, "4.json", {"algebra": "H", "n": 1, "entries": [[4]]})
    assert cli.main(["calc", four, "sin"]) == 2
    assert cli.main(["cayley", four, "--M", "a,b"]) == 2


def test_verify_command(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "algebra", "--seed", "1", "--trials", "1000", "--report", str(a)]) == 0
    assert cli.main(["verify", "algebra", "--seed", "1", "--trials", "1000", "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["status"] == "pass"


def test_verify_failure_exit_1(monkeypatch, capsys):
    bad = _mutated_octonions()
    monkeypatch.setattr(verify, "_tags", lambda: (get_algebra("H"), bad))
    assert cli.main(["verify", "algebra", "--trials", "100"]) == 1
    assert "alternativity" in capsys.readouterr().err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "hyperop.cli", "verify", "kmodule", "--trials", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["status"] == "pass"
