"""Tests for hevi_slice.cli_io: configuration parsing, CSV writers, the invariant suite and the command line"""
# stdlib
import io
import logging
import os
import tempfile

import mock
import numpy

from hevi_slice import loggingtools
from hevi_slice.cli_io import RunConfig
from hevi_slice.cli_io import parse_config
from hevi_slice.cli_io import write_field_csv
from hevi_slice.cli_io import write_timeseries
from hevi_slice.cli_io.checks import CHECKS
from hevi_slice.cli_io.checks import CheckContext
from hevi_slice.cli_io.checks import evaluate_checks
from hevi_slice.cli_io.checks import incidence_nilpotency
from hevi_slice.cli_io.checks import run_checks
from hevi_slice.cli_io.cli import main
from hevi_slice.cli_io.writers import RunWriter
from hevi_slice.cli_io.writers import ensure_directory
from hevi_slice.cli_io.writers import format_value
from hevi_slice.derham_mesh import SPACE_T
from hevi_slice.derham_mesh import FieldCoefficients
from hevi_slice.derham_mesh import build_mesh
from hevi_slice.exceptions import EXIT_CONFIG_ERROR
from hevi_slice.exceptions import EXIT_INVARIANT_FAILURE
from hevi_slice.exceptions import EXIT_NUMERIC_ERROR
from hevi_slice.exceptions import EXIT_OK
from hevi_slice.exceptions import ConfigError
from hevi_slice.exceptions import InvariantFailure
from hevi_slice.exceptions import OutputError
from hevi_slice.exceptions import SingularMatrixError
from hevi_slice.hevi_stepper.simulation import ENERGY_COLUMNS
from hevi_slice.stability import SCHEME_CRANK_NICOLSON
from hevi_slice.test import NumericTestCase
from hevi_slice.test import TestCase
from hevi_slice.test import data

from .settings import SMALL_MESH


def _flipped_mesh(*args, **kwargs):
    """A mesh whose vertical divergence has the wrong sign on every row"""
    mesh = build_mesh(*args, **kwargs)
    mesh.__dict__["e32_perp_full"] = -mesh.e32_perp_full
    return mesh


class ParseConfigTestCase(TestCase):
    def test_defaults(self):
        self.assertEqual(parse_config("experiment=bubble\n"), RunConfig())
        self.assertEqual(parse_config("", experiment="bubble"), RunConfig())

    def test_experiment_defaults(self):
        column = parse_config("", experiment="column")
        self.assertEqual((column.nx, column.nz, column.Lz, column.exner_average),
                         (1, 20, 10000.0, "trapezoidal"))
        self.assertEqual(parse_config("", experiment="stability").dt, 0.5)

    def test_values(self):
        config = parse_config("experiment = bubble  # warm bubble\n\ndt=0.1\nvisc=624.78\nupwind=TRUE\nnx=8\n")
        self.assertEqual(config.dt, 0.1)
        self.assertEqual(config.visc, 624.78)
        self.assertIs(config.upwind, True)
        self.assertEqual(config.nx, 8)

    def test_scheme_alias(self):
        self.assertEqual(parse_config("scheme=cn\n", experiment="stability").scheme, SCHEME_CRANK_NICOLSON)

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment=bubble\n# comment\nfoo=1\n")
        self.assertEqual((ctx.exception.key, ctx.exception.line_number), ("foo", 3))
        self.assertEqual(ctx.exception.exit_code, EXIT_CONFIG_ERROR)

    @data(("nx=twelve", "nx"), ("nx=2.5", "nx"), ("dt=fast", "dt"), ("upwind=maybe", "upwind"))
    def test_malformed_value(self, case):
        line, key = case
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment=bubble\n" + line + "\n")
        self.assertEqual((ctx.exception.key, ctx.exception.line_number), (key, 2))
        self.assertIn("malformed", ctx.exception.reason)

    def test_missing_experiment(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("dt=0.1\n")
        self.assertEqual(ctx.exception.key, "experiment")

    def test_conflicting_experiment(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("\nexperiment=column\n", experiment="bubble")
        self.assertEqual(ctx.exception.line_number, 2)

    @data("dt=-1", "nx=0", "cp=1000", "exner_average=midpoint", "scheme=rk4", "quadrature=simpson")
    def test_invalid_value_reports_line(self, line):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment=bubble\n\n" + line + "\n")
        self.assertIn(ctx.exception.line_number, (3, None))

    def test_validation_error_line(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment=bubble\ndt=-1\n")
        self.assertEqual((ctx.exception.key, ctx.exception.line_number), ("dt", 2))

    def test_column_needs_single_element(self):
        with self.assertRaises(ConfigError):
            parse_config("experiment=column\nnx=2\n")

    @data("no assignment here", "=5")
    def test_bad_line(self, line):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment=bubble\n" + line + "\n")
        self.assertEqual(ctx.exception.line_number, 2)

    def test_duplicate_key(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment=bubble\ndt=0.1\ndt=0.2\n")
        self.assertEqual(ctx.exception.line_number, 3)

    def test_overrides_take_precedence(self):
        config = parse_config("experiment=bubble\ndt=0.1\n", overrides={"dt": 0.2, "out": "elsewhere"})
        self.assertEqual((config.dt, config.out), (0.2, "elsewhere"))

    def test_invalid_override_has_no_line(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("experiment=bubble\ndt=0.1\n", overrides={"dt": -1.0})
        self.assertIsNone(ctx.exception.line_number)

    @data("bubble", "column", "stability", "checks")
    def test_text_round_trip(self, experiment):
        config = RunConfig.for_experiment(experiment, visc=624.78, upwind=True, dt=0.1, s0=-3.25)
        self.assertEqual(parse_config(config.to_text()), config)


class WritersTestCase(NumericTestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out_dir = self.temp_dir.name

    def tearDown(self):
        self.temp_dir.cleanup()

    def _read(self, name):
        with open(os.path.join(self.out_dir, name), encoding="utf-8") as stream:
            return stream.read()

    def test_format_value(self):
        self.assertEqual(format_value(0.1), "0.10000000000000001")
        self.assertEqual(format_value(numpy.float64(1.0) / 3.0), "0.33333333333333331")
        self.assertEqual(format_value(numpy.int64(7)), "7")
        self.assertEqual(format_value(""), "")

    def test_header_only(self):
        path = os.path.join(self.out_dir, "energy.csv")
        write_timeseries(path, [], ENERGY_COLUMNS)
        self.assertEqual(self._read("energy.csv"), ",".join(ENERGY_COLUMNS) + "\n")

    def test_values_round_trip_exactly(self):
        values = self.rng.standard_normal(3)
        write_timeseries(os.path.join(self.out_dir, "series.csv"), [list(values)], ("a", "b", "c"))
        lines = self._read("series.csv").splitlines()
        self.assertEqual(lines[0], "a,b,c")
        self.assertEqual([float(text) for text in lines[1].split(",")], list(values))

    def test_row_length_mismatch(self):
        with self.assertRaises(OutputError):
            write_timeseries(os.path.join(self.out_dir, "bad.csv"), [[1.0]], ("a", "b"))

    def test_unwritable_path(self):
        with self.assertRaises(OutputError) as ctx:
            write_timeseries(os.path.join(self.out_dir, "missing", "energy.csv"), [], ("a",))
        self.assertEqual(ctx.exception.exit_code, EXIT_CONFIG_ERROR)

    def test_directory_under_a_file(self):
        blocker = os.path.join(self.out_dir, "blocker")
        with open(blocker, "w", encoding="utf-8"):
            pass
        with self.assertRaises(OutputError):
            ensure_directory(os.path.join(blocker, "out"))

    def test_field_dump(self):
        mesh = build_mesh(**SMALL_MESH)
        theta = FieldCoefficients(SPACE_T, mesh.project(SPACE_T, numpy.full(mesh.n_quad, 300.0)))
        write_field_csv(os.path.join(self.out_dir, "theta.csv"), mesh, theta, t=2.5)
        lines = self._read("theta.csv").splitlines()
        self.assertTrue(lines[0].startswith("# space=%s" % SPACE_T))
        self.assertTrue(lines[0].endswith("t=2.5"))
        self.assertEqual(lines[1], "x,z,theta")
        self.assertEqual(len(lines) - 2, mesh.n_quad)
        x, z, value = (float(text) for text in lines[2].split(","))
        self.assertEqual((x, z), (mesh.quad_x[0], mesh.quad_z[0]))
        self.assertAlmostEqual(value, 300.0, places=9)

    def test_run_writer_flushes_each_row(self):
        mesh = build_mesh(**SMALL_MESH)
        theta = FieldCoefficients(SPACE_T, numpy.ones(mesh.dimension(SPACE_T)))
        with RunWriter(os.path.join(self.out_dir, "run"), mesh) as writer:
            writer.on_row([0.0] * len(ENERGY_COLUMNS))
            self.assertEqual(len(self._read(os.path.join("run", "energy.csv")).splitlines()), 2)
            writer.on_snapshot(3, 1.5, theta)
        self.assertEqual(writer.snapshot_paths, [os.path.join(self.out_dir, "run", "theta_0003.csv")])
        self.assertTrue(os.path.exists(writer.snapshot_paths[0]))


class ChecksTestCase(NumericTestCase):
    def setUp(self):
        self.config = RunConfig.for_experiment("checks")

    def test_all_pass_by_default(self):
        results = evaluate_checks(self.config)
        self.assertEqual([result.name for result in results], [name for name, _ in CHECKS])
        for result in results:
            self.assertTrue(result.passed, result.row())
        self.assertEqual(results[0].value, 0.0)

    def test_impossible_tolerance(self):
        stream = io.StringIO()
        with self.assertRaises(InvariantFailure) as ctx:
            run_checks(self.config, tol=1e-30, stream=stream)
        self.assertEqual(ctx.exception.exit_code, EXIT_INVARIANT_FAILURE)
        self.assertNotIn("incidence_nilpotency", ctx.exception.failed)
        self.assertIn("galerkin_orthogonality", ctx.exception.failed)
        self.assertIn("FAIL", stream.getvalue())

    def test_table(self):
        stream = io.StringIO()
        run_checks(self.config, stream=stream)
        lines = stream.getvalue().splitlines()
        self.assertEqual(len(lines), len(CHECKS) + 1)
        self.assertTrue(all(line.endswith("PASS") for line in lines[1:]))

    def test_sign_flip_breaks_nilpotency(self):
        with mock.patch("hevi_slice.cli_io.checks.build_mesh", side_effect=_flipped_mesh):
            context = CheckContext(self.config)
        self.assertEqual(incidence_nilpotency(context), 1.0)


class MainTestCase(TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out_dir = self.temp_dir.name
        self.stdout = mock.patch("sys.stdout", new_callable=io.StringIO)
        self.stdout.start()

    def tearDown(self):
        self.stdout.stop()
        # release the run.log handler before the directory goes away
        loggingtools.configure_logging(level=logging.WARNING)
        self.temp_dir.cleanup()

    def _write_config(self, text):
        path = os.path.join(self.out_dir, "run.cfg")
        with open(path, "w", encoding="utf-8") as stream:
            stream.write(text)
        return path

    def _out(self, name=""):
        return os.path.join(self.out_dir, "out", name)

    def test_checks_pass(self):
        self.assertEqual(main(["checks", "--out", self._out()]), EXIT_OK)
        self.assertTrue(os.path.exists(self._out("run.log")))
        with open(self._out("config.txt"), encoding="utf-8") as stream:
            self.assertEqual(parse_config(stream.read()).experiment, "checks")

    def test_checks_fail(self):
        self.assertEqual(main(["checks", "--out", self._out(), "--tol", "1e-30"]), EXIT_INVARIANT_FAILURE)

    def test_checks_detect_sign_flip(self):
        with mock.patch("hevi_slice.cli_io.checks.build_mesh", side_effect=_flipped_mesh):
            self.assertEqual(main(["checks", "--out", self._out()]), EXIT_INVARIANT_FAILURE)

    def test_missing_config_file(self):
        self.assertEqual(main(["bubble", "--config", os.path.join(self.out_dir, "absent.cfg")]), EXIT_CONFIG_ERROR)

    def test_unknown_key(self):
        path = self._write_config("experiment=bubble\nwind=3\n")
        self.assertEqual(main(["bubble", "--config", path, "--out", self._out()]), EXIT_CONFIG_ERROR)

    def test_numeric_failure(self):
        with mock.patch("hevi_slice.cli_io.cli.run_experiment", side_effect=SingularMatrixError(pivot=0.0)):
            self.assertEqual(main(["bubble", "--out", self._out()]), EXIT_NUMERIC_ERROR)

    def test_unwritable_output(self):
        blocker = os.path.join(self.out_dir, "blocker")
        with open(blocker, "w", encoding="utf-8"):
            pass
        self.assertEqual(main(["checks", "--out", os.path.join(blocker, "out")]), EXIT_CONFIG_ERROR)

    def test_stability(self):
        code = main(["stability", "--out", self._out(), "--scheme", "cn", "--nk", "4", "--nl", "4",
                     "--dt-sweep", "0.1", "1.0"])
        self.assertEqual(code, EXIT_OK)
        with open(self._out("stability_crank_nicolson.csv"), encoding="utf-8") as stream:
            self.assertEqual(len(stream.read().splitlines()), 17)
        with open(self._out("stability_boundary.csv"), encoding="utf-8") as stream:
            self.assertEqual(len(stream.read().splitlines()), 3)

    def test_stability_all_schemes(self):
        self.assertEqual(main(["stability", "--out", self._out(), "--nk", "2", "--nl", "2"]), EXIT_OK)
        for scheme in ("crank_nicolson", "hevi_new", "hevi_trapezoidal"):
            self.assertTrue(os.path.exists(self._out("stability_%s.csv" % scheme)))

    def test_column(self):
        path = self._write_config("experiment=column\nnz=8\nsnapshot_interval=0.5\n")
        self.assertEqual(main(["column", "--config", path, "--out", self._out(), "--t-end", "1.0"]), EXIT_OK)
        with open(self._out("energy.csv"), encoding="utf-8") as stream:
            lines = stream.read().splitlines()
        self.assertEqual(lines[0], ",".join(ENERGY_COLUMNS))
        self.assertEqual(len(lines), 4)
        self.assertTrue(os.path.exists(self._out("theta_0002.csv")))
