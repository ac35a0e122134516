import importlib.resources

import pytest


def _parse_value(text):
    text = text.strip()
    if text.startswith("("):
        return complex(text.replace(" ", ""))
    return float(text)


@pytest.fixture(scope="session")
def golden():
    """Golden values frozen from the independent high-precision oracle.

    Keyed by (name, params-string); see tools/make_golden.py for provenance.
    """
    table = {}
    ref = importlib.resources.files("liouville") / "data" / "golden_values.txt"
    for line in ref.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, params, value, _source = (f.strip() for f in line.split("|"))
        table[(name, params)] = _parse_value(value)
    return table
