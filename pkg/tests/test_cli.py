"""End-to-end tests of the command line tool: grid I/O, fit/eval round
trips, the exit-code contract and the metrics command."""

import json
import subprocess
import sys

import numpy as np
import numpy.testing as npt
import pytest

from qispline import load_spline, qi_approx
from qispline.functions import f1, f1_prime
from qispline.gridfile import GridFile, read_grid, write_grid


def run_cli(*args, **kw):
    return subprocess.run([sys.executable, "-m", "qispline", *args],
                          capture_output=True, text=True, **kw)


def write_grid_1d(path, x, f, fp=None, encoding="csv"):
    fields = {"f": np.asarray(f, dtype=float)}
    if fp is not None:
        fields["fp"] = np.asarray(fp, dtype=float)
    write_grid(path, GridFile([np.asarray(x, dtype=float)], [False], [None],
                              fields), encoding=encoding)


def _points(tmp_path, xs):
    p = tmp_path / "pts.csv"
    p.write_text("\n".join(repr(float(v)) for v in xs) + "\n")
    return p


class TestGridIO:
    def test_round_trip_csv_and_binary(self, tmp_path):
        rng = np.random.default_rng(0)
        x = np.linspace(0, 1, 9)
        y = np.linspace(-1, 1, 7)
        F = rng.standard_normal((9, 7))
        for enc in ("csv", "float64-le"):
            p = tmp_path / f"g.{enc}"
            write_grid(p, GridFile([x, y], [False, False], [None, None],
                                   {"f": F}), encoding=enc)
            back = read_grid(p)
            npt.assert_array_equal(back.fields["f"], F)
            npt.assert_array_equal(back.axes[0], x)
            npt.assert_array_equal(back.axes[1], y)

    def test_x_fastest_payload_order(self, tmp_path):
        x = np.array([0.0, 1.0])
        y = np.array([0.0, 1.0, 2.0])
        F = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])  # F[i, j] = f(x_i, y_j)
        p = tmp_path / "g.csv"
        write_grid(p, GridFile([x, y], [False, False], [None, None], {"f": F}))
        lines = p.read_text().splitlines()
        payload = [float(v) for v in lines[1:]]
        assert payload == [1.0, 4.0, 2.0, 5.0, 3.0, 6.0]

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("not a header\n1\n2\n")
        from qispline.gridfile import GridFormatError
        with pytest.raises(GridFormatError):
            read_grid(p)


class TestFitEval:
    def test_round_trip_polynomial_reproduction(self, tmp_path):
        x = np.linspace(0, 1, 17)
        vals = x ** 3 - 2 * x + 1
        gpath = tmp_path / "g.csv"
        spath = tmp_path / "s.json"
        write_grid_1d(gpath, x, vals)
        r = run_cli("fit", str(gpath), "-o", str(spath), "--degree", "3",
                    "--fd-order", "4")
        assert r.returncode == 0, r.stderr
        assert "knots" in r.stdout and "fit_seconds" in r.stdout
        r = run_cli("eval", str(spath), "--points", str(_points(tmp_path, x)))
        assert r.returncode == 0, r.stderr
        got = np.array([[float(v) for v in ln.split(",")]
                        for ln in r.stdout.splitlines()])
        npt.assert_allclose(got[:, 1], vals, atol=1e-10)

    def test_constant_grid_constant_coefficients(self, tmp_path):
        x = np.linspace(0, 1, 9)
        gpath = tmp_path / "g.csv"
        spath = tmp_path / "s.json"
        write_grid_1d(gpath, x, np.full(9, 7.5))
        assert run_cli("fit", str(gpath), "-o", str(spath), "--degree", "2"
                       ).returncode == 0
        s = load_spline(spath)
        npt.assert_allclose(s.coefficients, 7.5, atol=1e-12)

    def test_deriv_of_constant_is_zero(self, tmp_path):
        x = np.linspace(0, 1, 9)
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid_1d(gpath, x, np.full(9, 1.0))
        run_cli("fit", str(gpath), "-o", str(spath), "--degree", "3")
        r = run_cli("eval", str(spath), "--grid", "0:1:11", "--deriv", "1")
        vals = [float(ln.split(",")[1]) for ln in r.stdout.splitlines()]
        npt.assert_allclose(vals, 0.0, atol=1e-11)

    def test_eval_matches_in_memory_bit_for_bit(self, tmp_path):
        x = np.linspace(-1, 1, 33)
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid_1d(gpath, x, f1(x))
        run_cli("fit", str(gpath), "-o", str(spath), "--degree", "3",
                "--fd-order", "4")
        s_mem = qi_approx(x, f1(x), 3, 4)
        s_disk = load_spline(spath)
        npt.assert_array_equal(np.asarray(s_disk.coefficients),
                               np.asarray(s_mem.coefficients))
        xs = np.linspace(-1, 1, 100)
        npt.assert_array_equal(s_disk.eval(xs), s_mem.eval(xs))
        # and via the eval command's printed decimals
        r = run_cli("eval", str(spath), "--grid=-1:1:100")
        got = np.array([float(ln.split(",")[1]) for ln in r.stdout.splitlines()])
        npt.assert_array_equal(got, s_mem.eval(xs))

    def test_hermite_fit(self, tmp_path):
        x = np.linspace(-1, 1, 65)
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid_1d(gpath, x, f1(x), f1_prime(x))
        r = run_cli("fit", str(gpath), "-o", str(spath), "--degree", "3",
                    "--hermite")
        assert r.returncode == 0, r.stderr
        s = load_spline(spath)
        xs = np.linspace(-1, 1, 500)
        assert np.max(np.abs(s.eval(xs) - f1(xs))) < 5e-4

    def test_2d_fit_binary(self, tmp_path):
        x = np.linspace(0, 1, 17)
        F = np.outer(np.sin(x), np.cos(x))
        gpath, spath = tmp_path / "g.bin", tmp_path / "s.json"
        write_grid(gpath, GridFile([x, x], [False, False], [None, None],
                                   {"f": F}), encoding="float64-le")
        r = run_cli("fit", str(gpath), "-o", str(spath), "--degree", "3,3",
                    "--fd-order", "4")
        assert r.returncode == 0, r.stderr
        s = load_spline(spath)
        assert abs(s.eval(0.4, 0.6) - np.sin(0.4) * np.cos(0.6)) < 1e-4

    def test_periodic_fit(self, tmp_path):
        T = 2 * np.pi
        x = np.linspace(0, T, 32, endpoint=False)
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid(gpath, GridFile([x], [True], [T], {"f": np.sin(x)}))
        r = run_cli("fit", str(gpath), "-o", str(spath), "--degree", "3",
                    "--periodic", "0")
        assert r.returncode == 0, r.stderr
        s = load_spline(spath)
        assert s.kv.periodic
        xs = np.linspace(0, T, 64)
        assert np.max(np.abs(s.eval(xs) - np.sin(xs))) < 1e-5

    def test_vector_valued_fit_eval(self, tmp_path):
        x = np.linspace(0, 1, 17)
        F = np.column_stack([np.sin(x), np.cos(x)])
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid(gpath, GridFile([x], [False], [None], {"f": F},
                                   components=2))
        r = run_cli("fit", str(gpath), "-o", str(spath), "--degree", "3")
        assert r.returncode == 0, r.stderr
        r = run_cli("eval", str(spath), "--grid", "0:1:5")
        rows = [ln.split(",") for ln in r.stdout.splitlines()]
        assert len(rows[0]) == 3  # coordinate plus two components
        got = np.array([[float(v) for v in row] for row in rows])
        npt.assert_allclose(got[:, 1], np.sin(got[:, 0]), atol=1e-6)
        npt.assert_allclose(got[:, 2], np.cos(got[:, 0]), atol=1e-6)


class TestExitCodes:
    def test_missing_file_is_2(self, tmp_path):
        r = run_cli("fit", str(tmp_path / "nope.csv"), "-o",
                    str(tmp_path / "s.json"), "--degree", "3")
        assert r.returncode == 2
        assert "cannot read" in r.stderr

    def test_malformed_grid_is_2(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("#{\"dim\": 1}\n1.0\n")
        r = run_cli("fit", str(p), "-o", str(tmp_path / "s.json"),
                    "--degree", "3")
        assert r.returncode == 2

    def test_ragged_payload_is_2(self, tmp_path):
        p = tmp_path / "ragged.csv"
        hdr = '#{"dim": 1, "axes": [{"start": 0, "stop": 1, "num": 3}], "fields": ["f"]}'
        p.write_text(hdr + "\n1.0\n1.0,2.0\n3.0\n")
        r = run_cli("fit", str(p), "-o", str(tmp_path / "s.json"),
                    "--degree", "1")
        assert r.returncode == 2
        assert "components per line" in r.stderr

    def test_degree_constraint_is_3(self, tmp_path):
        x = np.linspace(0, 1, 4)
        gpath = tmp_path / "g.csv"
        write_grid_1d(gpath, x, np.zeros(4))
        r = run_cli("fit", str(gpath), "-o", str(tmp_path / "s.json"),
                    "--degree", "5")
        assert r.returncode == 3
        assert "at least" in r.stderr

    def test_out_of_domain_eval_is_3(self, tmp_path):
        x = np.linspace(0, 1, 9)
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid_1d(gpath, x, np.zeros(9))
        run_cli("fit", str(gpath), "-o", str(spath), "--degree", "2")
        r = run_cli("eval", str(spath), "--grid", "0:2:5")
        assert r.returncode == 3
        assert "outside" in r.stderr

    def test_hermite_without_blocks_is_3(self, tmp_path):
        x = np.linspace(0, 1, 9)
        gpath = tmp_path / "g.csv"
        write_grid_1d(gpath, x, np.zeros(9))
        r = run_cli("fit", str(gpath), "-o", str(tmp_path / "s.json"),
                    "--degree", "2", "--hermite")
        assert r.returncode == 3
        assert "fp" in r.stderr

    def test_unknown_builtin_is_3(self):
        r = run_cli("convergence", "nope", "--degree", "3", "--N", "8,16")
        assert r.returncode == 3
        assert "unknown builtin" in r.stderr

    def test_success_is_0(self, tmp_path):
        r = run_cli("convergence", "sin", "--degree", "2", "--N", "8,16")
        assert r.returncode == 0


class TestConvergenceCommand:
    def test_csv_shape_and_orders(self, tmp_path):
        out = tmp_path / "t.csv"
        r = run_cli("convergence", "f1", "--degree", "3", "--fd-order", "4",
                    "--N", "16,32,64", "-o", str(out))
        assert r.returncode == 0, r.stderr
        lines = out.read_text().splitlines()
        assert lines[0] == "N,error,order,time"
        assert len(lines) == 4
        first = lines[1].split(",")
        assert first[0] == "16" and first[2] == ""  # no order for the first row
        row64 = lines[3].split(",")
        assert float(row64[1]) < float(first[1])
        assert float(row64[3]) >= 0.0

    def test_nonuniform_flag(self, tmp_path):
        out = tmp_path / "t.csv"
        r = run_cli("convergence", "f2", "--degree", "2", "--N", "64,128",
                    "--nonuniform", "--grading", "3.0", "-o", str(out))
        assert r.returncode == 0, r.stderr
        rows = out.read_text().splitlines()[1:]
        errs = [float(ln.split(",")[1]) for ln in rows]
        assert errs[1] < errs[0]

    def test_hermite_flag(self, tmp_path):
        r = run_cli("convergence", "sin", "--degree", "2", "--N", "8,16",
                    "--hermite")
        assert r.returncode == 0, r.stderr


class TestMetrics:
    def test_zero_residual(self, tmp_path):
        x = np.linspace(0, 1, 9)
        vals = x ** 2
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid_1d(gpath, x, vals)
        run_cli("fit", str(gpath), "-o", str(spath), "--degree", "2")
        r = run_cli("metrics", str(spath), str(gpath))
        assert r.returncode == 0, r.stderr
        m = json.loads(r.stdout)
        assert m["rmse"] <= 1e-10
        assert m["max_err"] <= 1e-10

    def test_constant_shift_rmse(self, tmp_path):
        x = np.linspace(0, 1, 9)
        gpath, spath = tmp_path / "g.csv", tmp_path / "s.json"
        write_grid_1d(gpath, x, np.full(9, 2.0))
        run_cli("fit", str(gpath), "-o", str(spath), "--degree", "2")
        ref = tmp_path / "ref.csv"
        write_grid_1d(ref, x, np.full(9, 2.0) + 0.25)
        r = run_cli("metrics", str(spath), str(ref))
        m = json.loads(r.stdout)
        assert m["rmse"] == pytest.approx(0.25, abs=1e-12)
        assert "zero range" in str(m["nrmse"])

    def test_downsampled_terrain_beats_bilinear(self, tmp_path):
        # synthetic smooth terrain; fit on every second sample, evaluate on
        # the full grid and compare with a bilinear-interpolation baseline
        n = 65
        x = np.linspace(0, 1, n)
        X, Y = x[:, None], x[None, :]
        Z = (np.sin(3.1 * X) * np.cos(2.3 * Y)
             + 0.4 * np.exp(-8 * ((X - 0.3) ** 2 + (Y - 0.6) ** 2)))
        xs = x[::2]
        gpath, spath = tmp_path / "coarse.csv", tmp_path / "s.json"
        write_grid(gpath, GridFile([xs, xs], [False, False], [None, None],
                                   {"f": Z[::2, ::2]}))
        r = run_cli("fit", str(gpath), "-o", str(spath), "--degree", "2")
        assert r.returncode == 0, r.stderr
        ref = tmp_path / "full.csv"
        write_grid(ref, GridFile([x, x], [False, False], [None, None],
                                 {"f": Z}))
        m = json.loads(run_cli("metrics", str(spath), str(ref)).stdout)

        # in-test bilinear baseline on the same coarse data
        def bilinear(xq, yq):
            i = np.clip(np.searchsorted(xs, xq) - 1, 0, xs.size - 2)
            j = np.clip(np.searchsorted(xs, yq) - 1, 0, xs.size - 2)
            tx = (xq - xs[i]) / (xs[i + 1] - xs[i])
            ty = (yq - xs[j]) / (xs[j + 1] - xs[j])
            zc = Z[::2, ::2]
            return ((1 - tx) * (1 - ty) * zc[i, j] + tx * (1 - ty) * zc[i + 1, j]
                    + (1 - tx) * ty * zc[i, j + 1] + tx * ty * zc[i + 1, j + 1])
        base = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                base[i, j] = bilinear(x[i], x[j])
        rmse_lin = float(np.sqrt(np.mean((base - Z) ** 2)))
        nrmse_lin = rmse_lin / (Z.max() - Z.min())
        assert m["nrmse"] < nrmse_lin
