"""Small shared helpers for the CSV/JSON surfaces.

CSV conventions: '.' decimal separator, header always present, rows
newline-terminated, numbers in 6-significant-digit fixed (positional)
notation. JSON is emitted with sorted keys so reruns are byte-identical.
"""

import csv
import io
import json
import math

import numpy as np


def sig6(x) -> str:
    """Six significant digits, positional notation (never scientific)."""
    x = float(x)
    if x == 0.0 or not math.isfinite(x):
        return "0.00000" if x == 0.0 else str(x)
    decimals = max(0, 5 - math.floor(math.log10(abs(x))))
    return f"{x:.{decimals}f}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def state_doc(rho) -> dict:
    """Density matrix as a JSON-ready dict (same layout as the state files)."""
    rho = np.asarray(rho, dtype=complex)
    return {
        "dim": 4,
        "re": [[float(x) for x in row] for row in rho.real],
        "im": [[float(x) for x in row] for row in rho.imag],
        "basis": "HH,HV,VH,VV",
    }
