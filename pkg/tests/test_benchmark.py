import runpy
from pathlib import Path

import pytest

from grasspinch import kernels

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
def test_benchmark_backends_agree():
    bench = runpy.run_path(str(BENCH))
    rows = bench["run"](repeat=1, quick=True)
    assert [r[0] for r in rows] == ["jet_matmul", "hol_batch"]
    for _, _, t_np, t_nb, diff in rows:
        assert t_np > 0 and t_nb > 0
        assert diff < 1e-10
