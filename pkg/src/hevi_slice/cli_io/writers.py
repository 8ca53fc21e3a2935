"""CSV output with a fixed column order and round-trip exact floats"""
# stdlib
import csv
import os

import numpy

from hevi_slice import loggingtools
from hevi_slice.exceptions import OutputError
from hevi_slice.hevi_stepper.simulation import ENERGY_COLUMNS

log = loggingtools.getLogger()

FLOAT_FORMAT = "%.17g"

ENERGY_FILE = "energy.csv"
SNAPSHOT_FILE = "theta_%04d.csv"
FIELD_COLUMNS = ("x", "z", "theta")


def format_value(value):
    """17 significant digits for reals, plain text for everything else"""
    if isinstance(value, (float, numpy.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, (int, numpy.integer)):
        return str(int(value))
    return str(value)


def ensure_directory(path):
    """
    :raises: OutputError
    """
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OutputError(path=path, reason=exc.strerror or str(exc))
    return path


def write_timeseries(path, rows, columns):
    """Writes a header and one line per row; an empty `rows` leaves a header-only file.

    :raises: OutputError
    """
    try:
        with open(path, "w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise OutputError(path=path, reason="row of %d values for %d columns" % (len(row), len(columns)))
                writer.writerow([format_value(value) for value in row])
    except OSError as exc:
        raise OutputError(path=path, reason=exc.strerror or str(exc))
    log.debug("Wrote %d rows to %s", len(rows), path)


def write_field_csv(path, mesh, field, t=None):
    """Dumps a field at every quadrature point as ``x,z,<name>`` rows under a ``#`` header naming the space and time.

    :type mesh: hevi_slice.derham_mesh.MeshComplex
    :type field: hevi_slice.derham_mesh.FieldCoefficients
    :raises: OutputError
    """
    field.check(mesh)
    values = mesh.evaluate(field.space, field.values)
    try:
        with open(path, "w", newline="", encoding="utf-8") as stream:
            stream.write("# space=%s units=%s t=%s\n" % (field.space, field.units,
                                                          "" if t is None else FLOAT_FORMAT % t))
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(FIELD_COLUMNS)
            for x, z, value in zip(mesh.quad_x, mesh.quad_z, values):
                writer.writerow([FLOAT_FORMAT % x, FLOAT_FORMAT % z, FLOAT_FORMAT % value])
    except OSError as exc:
        raise OutputError(path=path, reason=exc.strerror or str(exc))


class RunWriter(object):
    """Simulation observer that appends every energy row as it arrives and writes theta snapshots.

    Lines are flushed per row so an aborted run keeps its partial time series.
    """

    def __init__(self, out_dir, mesh, columns=ENERGY_COLUMNS):
        self.out_dir = ensure_directory(out_dir)
        self.mesh = mesh
        self.columns = columns
        self.energy_path = os.path.join(out_dir, ENERGY_FILE)
        self.snapshot_paths = []
        self._stream = None
        self._writer = None

    def __enter__(self):
        try:
            self._stream = open(self.energy_path, "w", newline="", encoding="utf-8")
        except OSError as exc:
            raise OutputError(path=self.energy_path, reason=exc.strerror or str(exc))
        self._writer = csv.writer(self._stream, lineterminator="\n")
        self._writer.writerow(self.columns)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._stream is not None:
            self._stream.close()
            self._stream = None
        return False

    def on_row(self, row):
        try:
            self._writer.writerow([format_value(value) for value in row])
            self._stream.flush()
        except OSError as exc:
            raise OutputError(path=self.energy_path, reason=exc.strerror or str(exc))

    def on_snapshot(self, index, t, theta):
        path = os.path.join(self.out_dir, SNAPSHOT_FILE % index)
        write_field_csv(path, self.mesh, theta, t)
        self.snapshot_paths.append(path)
