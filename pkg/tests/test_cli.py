import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ruinheun import cli
from ruinheun.config import default_config
from ruinheun.errors import StepSizeUnderflow
from ruinheun.report import RunReport


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, **sections):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(sections))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float) if len(rows) > 1 else np.empty((0, len(rows[0])))


def test_exit_codes_are_distinct():
    assert len(set(cli.EXIT_CODES.values())) == len(cli.EXIT_CODES)


def test_derive_conservative(capsys):
    code, out, _ = run(["derive", "--kappa", "0.2"], capsys)
    assert code == 0
    assert "gamma       = 21.875" in out
    assert "d_H" in out


def test_derive_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "model": {"lambda": 1,,}\n}\n')
    code, _, err = run(["derive", "--config", str(path)], capsys)
    assert code == 2
    assert "bad.json:2:" in err and "^" in err


def test_derive_degenerate(tmp_path, capsys):
    model = dict(default_config()["model"], sigma=0.6, kappa=1.0)
    code, _, err = run(["derive", "--config", write_config(tmp_path, model=model)], capsys)
    assert code == 3
    assert "gamma = 0.833333" in err


def test_unknown_config_key(tmp_path, capsys):
    code, _, err = run(["derive", "--config", write_config(tmp_path, solver={"tolerance": 1e-9})], capsys)
    assert code == 2 and "tolerance" in err
    code, _, err = run(["derive", "--config", write_config(tmp_path, model={"lambda": 1})], capsys)
    assert code == 2 and "missing" in err


def test_table_gamma(capsys):
    code, out, _ = run(["table-gamma"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["label", "kappa", "gamma", "tail_order"]
    gammas = [float(r[2]) for r in rows[1:]]
    assert gammas == pytest.approx([21.875, 7.03125, 2.1604938], rel=1e-6)
    assert rows[1][0] == "conservative"
    assert float(rows[3][3]) == pytest.approx(1.16049, rel=1e-5)


def test_table_gamma_empty_and_unit_share(tmp_path, capsys):
    code, out, _ = run(["table-gamma", "--config", write_config(tmp_path, output={"kappas": []})], capsys)
    assert code == 0 and out == "label,kappa,gamma,tail_order\n"
    code, out, _ = run(["table-gamma", "--kappa", "1"], capsys)
    assert float(out.splitlines()[1].split(",")[2]) == pytest.approx(2 * 0.15 / 0.16, rel=1e-15)


def test_table_gamma_invalid_kappa(capsys):
    code, _, err = run(["table-gamma", "--kappa", "1.5"], capsys)
    assert code == 2 and "kappa" in err


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    d = tmp_path_factory.mktemp("solve")
    out = {}
    for k in ("0.2", "0.9"):
        csv_path = d / f"k{k}.csv"
        assert cli.main(["solve", "--kappa", k, "--out", str(csv_path), "--u-min", "0.01",
                         "--u-max", "100", "--u-points", "41"]) == 0
        out[k] = csv_path
    return out


def test_solve_outputs(solved):
    header, data = read_csv(solved["0.9"])
    assert header == ["u", "phi", "psi"]
    assert np.all(np.diff(data[:, 1]) >= 0)
    report = RunReport.from_json(solved["0.9"].with_suffix(".json").read_text())
    assert report.command == "solve"
    assert report.params["kappa"] == 0.9
    assert report.residuals["ide_scaled_sup"] < 1e-6
    assert report.tail["slope"] == pytest.approx(-1.1605, rel=0.05)
    assert [row[2] for row in report.probes] == list(data[:, 2])


def test_solve_crossing(solved):
    _, a = read_csv(solved["0.9"])
    _, c = read_csv(solved["0.2"])
    lower = a[:, 2] < c[:, 2]
    assert lower[0] and not lower[-1]


def test_report_round_trip(solved):
    text = solved["0.9"].with_suffix(".json").read_text()
    r = RunReport.from_json(text)
    assert RunReport.from_json(r.to_json()) == r
    assert r.to_json() == text


def test_report_rejects_unknown_field():
    with pytest.raises(ValueError):
        RunReport.from_dict({"command": "x", "params": {}, "derived": {}, "heun": {}, "extra": 1})


def test_solve_rejects_two_kappas(capsys):
    code, _, err = run(["solve", "--kappa", "0.2", "--kappa", "0.4"], capsys)
    assert code == 2 and "single" in err


def test_solve_unwritable(capsys):
    code, _, err = run(["solve", "--kappa", "0.9", "--out", "/nonexistent-dir/x.csv"], capsys)
    assert code == 6


def test_solve_tail_failure(tmp_path, capsys):
    cfg = write_config(tmp_path, solver={"u_max": 200.0})
    code, _, err = run(["solve", "--config", cfg, "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 5 and "plateau" in err


def test_numerical_failure_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise StepSizeUnderflow("stuck")
    monkeypatch.setattr(cli, "_solve", boom)
    code, _, err = run(["solve", "--out", "-"], capsys)
    assert code == 4 and "stuck" in err


def test_plot_data_loglog_tail_slope(tmp_path):
    path = tmp_path / "p.csv"
    assert cli.main(["plot-data", "--kappa", "0.9", "--scale", "loglog", "--u-min", "1",
                     "--u-max", "1e4", "--u-points", "41", "--out", str(path)]) == 0
    header, data = read_csv(path)
    assert header == ["u", "psi_kappa=0.9"]
    last = data[data[:, 0] >= 1e3]
    slope = np.polyfit(np.log(last[:, 0]), np.log(last[:, 1]), 1)[0]
    assert slope == pytest.approx(-1.1605, rel=0.05)


def test_plot_data_scales_agree_and_tail_convex(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["plot-data", "--scale", "semilog", "--u-min", "0", "--u-max", "100",
                     "--u-points", "101", "--out", str(a), "--workers", "2"]) == 0
    assert cli.main(["plot-data", "--scale", "loglog", "--u-min", "1", "--u-max", "100",
                     "--u-points", "3", "--out", str(b)]) == 0
    _, lin = read_csv(a)
    _, log = read_csv(b)
    shared = [u for u in log[:, 0] if u in set(lin[:, 0])]
    assert len(shared) >= 2
    for u in shared:
        assert np.array_equal(lin[lin[:, 0] == u, 1:], log[log[:, 0] == u, 1:])
    tail = lin[lin[:, 0] >= 30]
    assert np.all(np.diff(np.log(tail[:, 1:]), 2, axis=0) > 0)


def test_plot_data_log_scale_needs_positive_start(capsys):
    code, _, err = run(["plot-data", "--scale", "loglog", "--u-min", "0"], capsys)
    assert code == 2


def test_simulate(tmp_path, capsys):
    out = tmp_path / "mc.csv"
    rep = tmp_path / "mc.json"
    code, _, _ = run(["simulate", "--u", "1", "--u", "4", "--paths", "300", "--dt", "0.01",
                      "--horizon", "50", "--seed", "3", "--out", str(out), "--report", str(rep),
                      "--paths-csv", str(tmp_path / "paths")], capsys)
    assert code == 0
    header, data = read_csv(out)
    assert header[:3] == ["u", "psi_hat", "stderr"]
    assert list(data[:, 0]) == [1.0, 4.0]
    assert (tmp_path / "paths" / "paths_u=1.0.csv").exists()
    r = RunReport.from_json(rep.read_text())
    assert r.mc[0]["n_paths"] == 300


def test_verify_small_sample_passes(capsys):
    code, out, _ = run(["verify", "--kappa", "0.9", "--paths", "100"], capsys)
    assert code == 0
    assert out.count("PASS") == 7 and "FAIL" not in out


def test_verify_fault_injection(capsys, tmp_path):
    rep = tmp_path / "v.json"
    code, out, _ = run(["verify", "--paths", "20000", "--u", "0", "--fault-c-scale", "1.01",
                        "--report", str(rep)], capsys)
    assert code == 7
    lines = {ln.split()[1] + ln.split()[2]: ln.split()[0] for ln in out.splitlines()}
    assert lines["ideresidual"] == "PASS"
    assert lines["montecarlo"] == "FAIL"
    r = RunReport.from_json(rep.read_text())
    assert not r.passed


def test_hidden_hook_not_in_help(capsys):
    with pytest.raises(SystemExit):
        cli.main(["verify", "--help"])
    assert "fault" not in capsys.readouterr().out


def test_csv_and_report_deterministic(tmp_path):
    paths = []
    for i, workers in enumerate(("1", "3")):
        p = tmp_path / f"r{i}.csv"
        assert cli.main(["solve", "--kappa", "0.9", "--out", str(p), "--workers", workers,
                         "--no-timings"]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].with_suffix(".json").read_bytes() == paths[1].with_suffix(".json").read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ruinheun", "table-gamma", "--kappa", "0.4"],
                         capture_output=True, text=True, check=True)
    assert float(res.stdout.splitlines()[1].split(",")[2]) == pytest.approx(7.03125, rel=1e-12)
