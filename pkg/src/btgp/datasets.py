"""Synthetic regression datasets and train/test CSV handling.

IntSine: a rounded one-dimensional sine on [-pi, pi]; training labels get
additive Gaussian noise, test labels are the noiseless truth on a uniform
grid.  SixHumpCamel: the two-dimensional benchmark function on
[-1, 1] x [-2, 2], shifted to be strictly positive, sampled quasi-uniformly
(Sobol) for training and uniformly at random for testing.
"""

import csv
import warnings

import numpy as np
from scipy.stats import qmc as _qmc

from .errors import LengthMismatch

INTSINE_TRAIN = 51
INTSINE_TEST = 400
INTSINE_NOISE_SD = 0.05
CAMEL_TRAIN = 50
CAMEL_TEST = 400
# clears the function's global minimum of about -1.0316 on this domain
CAMEL_SHIFT = 2.0
CAMEL_BOX = np.array([[-1.0, 1.0], [-2.0, 2.0]])


def intsine(seed, train_size=INTSINE_TRAIN, test_size=INTSINE_TEST,
            noise_sd=INTSINE_NOISE_SD):
    """Rounded-sine data: uniformly spaced train/test grids on [-pi, pi]."""
    rng = np.random.default_rng(seed)
    x_train = np.linspace(-np.pi, np.pi, train_size)
    y_train = np.round(np.sin(x_train)) + rng.normal(0.0, noise_sd, train_size)
    x_test = np.linspace(-np.pi, np.pi, test_size)
    y_test = np.round(np.sin(x_test))
    return (x_train[:, None], y_train), (x_test[:, None], y_test)


def camel_function(x):
    """Six-hump camel function, rows of ``x`` as points."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a, b = x[:, 0], x[:, 1]
    return ((4.0 - 2.1 * a ** 2 + a ** 4 / 3.0) * a ** 2
            + a * b + (-4.0 + 4.0 * b ** 2) * b ** 2)


def sixhumpcamel(seed, train_size=CAMEL_TRAIN, test_size=CAMEL_TEST,
                 shift=CAMEL_SHIFT):
    """Camel data: Sobol training points, uniform test points, labels
    shifted strictly positive (no observation noise)."""
    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        sample = _qmc.Sobol(d=2, scramble=False).random(train_size)
    x_train = CAMEL_BOX[:, 0] + sample * (CAMEL_BOX[:, 1] - CAMEL_BOX[:, 0])
    x_test = rng.uniform(CAMEL_BOX[:, 0], CAMEL_BOX[:, 1], size=(test_size, 2))
    return ((x_train, camel_function(x_train) + shift),
            (x_test, camel_function(x_test) + shift))


def generate(name, seed, **kwargs):
    name = name.lower()
    if name == "intsine":
        return intsine(seed, **kwargs)
    if name in ("camel", "sixhumpcamel"):
        return sixhumpcamel(seed, **kwargs)
    raise ValueError(f"unknown dataset {name!r}")


def write_xy_csv(path, x, y):
    """Write locations and labels as x1..xd, y with full precision."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{x.shape[0]} locations vs {y.shape[0]} labels")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(x.shape[1])] + ["y"])
        for row, label in zip(x, y):
            writer.writerow([f"{v:.17g}" for v in row] + [f"{label:.17g}"])


def read_xy_csv(path):
    """Read a train/test CSV back into (locations, labels)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "y":
            raise ValueError(f"{path}: expected a header ending in 'y'")
        rows = [list(map(float, row)) for row in reader if row]
    data = np.asarray(rows, dtype=float)
    return data[:, :-1], data[:, -1]
