"""Touchstone v1 S-parameter files, 1 to 4 ports.

Only scattering parameters are supported.  RI data written by
:func:`write_touchstone` uses ``repr`` floats, so reading it back is
bit-exact.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import IngestError

UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
FORMATS = ("MA", "DB", "RI")
_UNIT_NAMES = {"HZ": "Hz", "KHZ": "kHz", "MHZ": "MHz", "GHZ": "GHz"}


def _ports_from_name(path) -> int:
    m = re.search(r"\.s(\d+)p$", str(path), re.IGNORECASE)
    if not m:
        raise IngestError("file extension must be .sNp", path)
    n = int(m.group(1))
    if not 1 <= n <= 4:
        raise IngestError(f"{n}-port files are not supported (N <= 4)", path)
    return n


def _pairs_to_complex(a, b, fmt):
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def _complex_to_pairs(s, fmt):
    if fmt == "RI":
        return s.real, s.imag
    ang = np.rad2deg(np.angle(s))
    mag = np.abs(s)
    if fmt == "DB":
        with np.errstate(divide="ignore"):
            mag = 20.0 * np.log10(mag)
    return mag, ang


def read_touchstone(path, n_ports: int | None = None):
    """Parse a Touchstone v1 file.

    Returns
    -------
    freqs : (F,) float, Hz
    s : (F, N, N) complex
    z_ref : float
    """
    path = Path(path)
    n = n_ports or _ports_from_name(path)
    unit, param, fmt, z_ref = "GHZ", "S", "MA", 50.0
    seen_option = False
    values: list[float] = []
    rows: list[int] = []
    try:
        fh = open(path)
    except OSError as exc:
        raise IngestError(f"cannot open file ({exc.strerror})", path) from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                if seen_option:
                    continue  # v1: later option lines are ignored
                seen_option = True
                toks = line[1:].upper().split()
                i = 0
                while i < len(toks):
                    t = toks[i]
                    if t in UNITS:
                        unit = t
                    elif t in ("S", "Y", "Z", "H", "G"):
                        param = t
                    elif t in FORMATS:
                        fmt = t
                    elif t == "R":
                        try:
                            z_ref = float(toks[i + 1])
                        except (IndexError, ValueError):
                            raise IngestError("option line: R needs a value", path, lineno) from None
                        i += 1
                    else:
                        raise IngestError(f"option line: unknown token {t!r}", path, lineno)
                    i += 1
                if param != "S":
                    raise IngestError(f"only S parameters are supported, got {param}", path, lineno)
                continue
            for tok in line.split():
                try:
                    values.append(float(tok))
                except ValueError:
                    raise IngestError(f"non-numeric token {tok!r}", path, lineno) from None
                rows.append(lineno)
    per = 1 + 2 * n * n
    if not values or len(values) % per:
        raise IngestError(
            f"{len(values)} numbers do not form whole {n}-port records of {per}",
            path, rows[-1] if rows else None,
        )
    data = np.array(values).reshape(-1, per)
    freqs = data[:, 0] * UNITS[unit]
    pairs = data[:, 1:].reshape(-1, n * n, 2)
    s = _pairs_to_complex(pairs[..., 0], pairs[..., 1], fmt).reshape(-1, n, n)
    if n == 2:
        # 2-port order is S11 S21 S12 S22
        s = np.swapaxes(s, 1, 2)
    if np.any(np.diff(freqs) <= 0):
        raise IngestError("frequencies must be strictly increasing", path)
    return freqs, s, z_ref


def write_touchstone(path, freqs, s, z_ref: float = 50.0, unit: str = "Hz", fmt: str = "RI",
                     comments=()) -> None:
    freqs = np.asarray(freqs, dtype=float)
    s = np.asarray(s, dtype=complex)
    n = s.shape[1]
    if _ports_from_name(path) != n:
        raise ValueError(f"file name {path} does not match a {n}-port network")
    u = unit.upper()
    fmt = fmt.upper()
    if u not in UNITS or fmt not in FORMATS:
        raise ValueError(f"unsupported unit/format {unit}/{fmt}")
    scale = UNITS[u]
    a, b = _complex_to_pairs(s, fmt)
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"! {c}\n")
        fh.write(f"# {_UNIT_NAMES[u]} S {fmt} R {z_ref!r}\n")
        for fi, f in enumerate(freqs):
            fv = f if scale == 1.0 else f / scale
            ai, bi = a[fi], b[fi]
            if n == 2:
                ai, bi = ai.T, bi.T
            cells = [f"{float(x)!r} {float(y)!r}" for x, y in zip(ai.ravel(), bi.ravel())]
            if n <= 2:
                fh.write(f"{float(fv)!r} " + " ".join(cells) + "\n")
            else:
                for r in range(n):
                    lead = f"{float(fv)!r} " if r == 0 else "    "
                    fh.write(lead + " ".join(cells[r * n:(r + 1) * n]) + "\n")
