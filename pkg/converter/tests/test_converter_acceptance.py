"""Converter acceptance: full-size Cora and Citeseer conversions round-trip.

The build environment has no dataset network access, so the sources are
synthetic files in the exact public text layout at the published node counts;
the converter code path is identical for real downloads.
"""

import dataclasses

import numpy as np

from coldbrew import load_bundle
from coldbrew_converter import REGISTRY, convert

from test_convert import write_content_source


def make_spec(tmp_path, name, n, c, d):
    write_content_source(tmp_path / name, name, n, c, d, seed=hash(name) % 1000)
    return dataclasses.replace(REGISTRY[name], source=str(tmp_path / name))


def test_converter_roundtrip(tmp_path, capsys):
    results = {}
    for name, n, c, d in (("cora", 2708, 7, 1433), ("citeseer", 3327, 6, 3703)):
        spec = make_spec(tmp_path, name, n, c, d)
        log = convert(spec, tmp_path / f"bundle_{name}")
        bundle = load_bundle(tmp_path / f"bundle_{name}")
        results[name] = bundle.num_nodes
        # the reference edge counts never match a chain source: logged, not fatal
        assert any("deviates" in note for note in log.notes)
        assert bundle.num_classes == c
        assert np.isfinite(bundle.features).all()
    ok = results == {"cora": 2708, "citeseer": 3327}
    print(f"[acceptance] converter-roundtrip: {'PASS' if ok else 'FAIL'} "
          f"(cora N={results['cora']}, citeseer N={results['citeseer']}, "
          "edge-count deviations logged)")
    assert ok
