"""
Plain-text formats for scattering matrices and channel sets.

Complex numbers are written as ``re+imj`` with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

import numpy as np

from .channels import ScenarioChannels
from .errors import DimensionMismatch
from .solver import TargetReflections


def format_complex(z):
    z = complex(z)
    return f"{z.real:.16e}{z.imag:+.16e}j"


def parse_complex(token):
    return complex(token)


def write_theta(path, Theta, G, Gs):
    """First line ``N G Gs``; then ``N`` rows of ``N`` complex tokens."""
    Theta = np.asarray(Theta, dtype=complex)
    N = Theta.shape[0]
    lines = [f"{N} {G} {Gs}"]
    for row in Theta:
        lines.append(" ".join(format_complex(z) for z in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_theta(path):
    """Inverse of :func:`write_theta`: returns ``(Theta, G, Gs)``."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    N, G, Gs = (int(t) for t in lines[0].split())
    rows = [[parse_complex(t) for t in ln.split()] for ln in lines[1:]]
    Theta = np.array(rows, dtype=complex)
    if Theta.shape != (N, N):
        raise DimensionMismatch(f"header says N={N}, body is {Theta.shape}")
    return Theta, G, Gs


def write_channels(path, channels, targets):
    """Header ``N L``; rows tagged ``h_RI``, ``h_IT1..L``, ``d_2..L`` and optionally ``h_RT``."""
    lines = [f"{channels.N} {channels.L}"]
    lines.append("h_RI " + " ".join(format_complex(z) for z in channels.h_RI))
    for l, h in enumerate(channels.h_IT, start=1):
        lines.append(f"h_IT{l} " + " ".join(format_complex(z) for z in h))
    for l, d in enumerate(targets.d, start=2):
        lines.append(f"d_{l} " + " ".join(format_complex(z) for z in d))
    if channels.h_RT != 0:
        lines.append("h_RT " + format_complex(channels.h_RT))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_channels(path):
    """Parse a channel file into ``(ScenarioChannels, TargetReflections)``."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        N, L = (int(t) for t in lines[0].split())
    except (ValueError, IndexError):
        raise DimensionMismatch("first line must be 'N L'") from None
    rows = {}
    for ln in lines[1:]:
        tag, *vals = ln.split()
        rows[tag] = np.array([parse_complex(v) for v in vals], dtype=complex)
    need = ["h_RI"] + [f"h_IT{l}" for l in range(1, L + 1)] + [f"d_{l}" for l in range(2, L + 1)]
    missing = [t for t in need if t not in rows]
    if missing:
        raise DimensionMismatch(f"missing rows: {', '.join(missing)}")
    for t in need:
        if rows[t].size != N:
            raise DimensionMismatch(f"row {t} has {rows[t].size} entries, expected {N}")
    h_RT = complex(rows["h_RT"][0]) if "h_RT" in rows else 0j
    channels = ScenarioChannels(
        rows["h_RI"], [rows[f"h_IT{l}"] for l in range(1, L + 1)], h_RT=h_RT
    )
    targets = TargetReflections([rows[f"d_{l}"] for l in range(2, L + 1)])
    return channels, targets
