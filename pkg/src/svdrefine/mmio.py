"""Matrix Market array files and triplet directories at any precision.

Entries are written as decimal strings with ``ceil(0.302 * bits) + 2``
significant digits, which is enough for the value to round back to the
same binary number when read at ``bits`` bits. The precision is stored in
a comment line so that :func:`read_mtx` can restore it.
"""

from __future__ import annotations

import json
import math
import os
import re

from gmpy2 import mpc, mpfr

from .errors import ShapeError
from .mpcore import MIN_PRECISION, MpMatrix, precision_context
from .triplet import SvdTriplet

_PRECISION_COMMENT = re.compile(r"^%\s*precision_bits\s*[:=]\s*(\d+)")


def significant_digits(bits):
    """Decimal digits needed to round-trip a ``bits``-bit significand."""
    return math.ceil(bits * 0.302) + 2


def format_real(x, digits):
    """Scientific notation for an mpfr with ``digits`` significant digits."""
    if x.is_nan():
        return "nan"
    if x.is_infinite():
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    mant = mant.rstrip("0") or "0"
    body = mant[0] + ("." + mant[1:] if len(mant) > 1 else "")
    return "%s%se%d" % (sign, body, exp - 1)


def write_mtx(path, A, precision=None):
    """Write ``A`` as a dense Matrix Market array.

    Real matrices (all imaginary parts zero) use the ``real`` field,
    everything else the ``complex`` field.
    """
    bits = A.precision if precision is None else int(precision)
    digits = significant_digits(bits)
    real = A.is_real()
    field = "real" if real else "complex"
    lines = ["%%%%MatrixMarket matrix array %s general" % field,
             "%% precision_bits: %d" % bits,
             "%d %d" % A.shape]
    with precision_context(bits):
        for j in range(A.cols):
            for i in range(A.rows):
                z = A.data[i, j]
                re_part = format_real(mpfr(z.real), digits)
                if real:
                    lines.append(re_part)
                else:
                    lines.append("%s %s" % (re_part, format_real(mpfr(z.imag), digits)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mtx(path, precision=None):
    """Read a dense Matrix Market array (real, integer or complex field).

    Parameters
    ----------
    path : str
    precision : int, optional
        Working precision. Defaults to the value recorded in the file, or 53.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise ValueError("%s is not a Matrix Market file" % path)
    header = lines[0].split()
    if len(header) < 5 or header[1].lower() != "matrix" or header[2].lower() != "array":
        raise ValueError("only dense 'matrix array' files are supported")
    field, symmetry = header[3].lower(), header[4].lower()
    if field not in ("real", "integer", "complex", "double"):
        raise ValueError("unsupported field %r" % field)
    if symmetry != "general":
        raise ValueError("unsupported symmetry %r" % symmetry)
    stored = None
    body = []
    for line in lines[1:]:
        match = _PRECISION_COMMENT.match(line.strip())
        if match:
            stored = int(match.group(1))
            continue
        if line.startswith("%") or not line.strip():
            continue
        body.append(line.split())
    bits = precision or stored or MIN_PRECISION
    rows, cols = int(body[0][0]), int(body[0][1])
    entries = body[1:]
    if len(entries) != rows * cols:
        raise ShapeError("expected %d entries, found %d" % (rows * cols, len(entries)))
    out = MpMatrix.zeros(rows, cols, bits)
    with precision_context(bits):
        for k, parts in enumerate(entries):
            i, j = k % rows, k // rows
            if field == "complex":
                out.data[i, j] = mpc(mpfr(parts[0]), mpfr(parts[1]))
            else:
                out.data[i, j] = mpc(mpfr(parts[0]), 0)
    return out


# --------------------------------------------------------------------------
# Triplet directories
# --------------------------------------------------------------------------


def write_triplet(directory, T):
    """Store ``T`` as ``U.mtx``, ``V.mtx``, ``Sigma.txt`` and ``manifest.json``.

    ``Sigma.txt`` holds the real diagonal, one value per line. In cluster
    mode the full block-diagonal middle factor also goes to ``Sigma.mtx``.
    """
    os.makedirs(directory, exist_ok=True)
    bits = T.precision
    write_mtx(os.path.join(directory, "U.mtx"), T.U, bits)
    write_mtx(os.path.join(directory, "V.mtx"), T.V, bits)
    digits = significant_digits(bits)
    with precision_context(bits):
        values = [format_real(mpfr(v), digits) for v in T.singular_values().values]
    with open(os.path.join(directory, "Sigma.txt"), "w") as fh:
        fh.write("\n".join(values) + "\n")
    if T.partition is not None:
        write_mtx(os.path.join(directory, "Sigma.mtx"), T.sigma, bits)
    manifest = {
        "m": T.U.rows, "n": T.V.rows, "l": T.U.cols, "q": T.V.cols,
        "precision_bits": bits,
        "mode": T.mode,
        "partition": list(T.partition) if T.partition is not None else None,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def read_triplet(directory, precision=None):
    """Load a triplet written by :func:`write_triplet`.

    A missing manifest is tolerated: the shapes are taken from the files
    and regular mode is assumed.
    """
    manifest_path = os.path.join(directory, "manifest.json")
    manifest = {}
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    bits = precision or manifest.get("precision_bits")
    U = read_mtx(os.path.join(directory, "U.mtx"), bits)
    V = read_mtx(os.path.join(directory, "V.mtx"), bits)
    bits = bits or max(U.precision, V.precision)
    U, V = U.round(bits), V.round(bits)
    partition = manifest.get("partition")
    sigma_mtx = os.path.join(directory, "Sigma.mtx")
    if partition is not None and os.path.exists(sigma_mtx):
        sigma = read_mtx(sigma_mtx, bits)
        T = SvdTriplet(U, V, sigma, tuple(partition))
    else:
        with open(os.path.join(directory, "Sigma.txt")) as fh:
            with precision_context(bits):
                values = [mpfr(line.strip()) for line in fh if line.strip()]
        T = SvdTriplet.from_diagonal(U, V, values, tuple(partition) if partition else None)
    for key, actual in (("m", T.U.rows), ("n", T.V.rows), ("l", T.U.cols), ("q", T.V.cols)):
        if key in manifest and manifest[key] != actual:
            raise ShapeError("manifest says %s=%d but the files give %d"
                             % (key, manifest[key], actual))
    return T
