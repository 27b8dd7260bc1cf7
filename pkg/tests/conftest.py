import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import pytest

from steklov_iso import scenes as sc
from steklov_iso import spectral as sp
from steklov_iso.tiling import mesh

# criterion number -> (passed, one-line detail); filled by test_acceptance.py
ACCEPTANCE = {}

REFINE = 2


@pytest.fixture(scope="session")
def buser():
    return sc.buser_pair()


@pytest.fixture(scope="session")
def buser_meshes(buser):
    return mesh(buser.D1, REFINE), mesh(buser.D2, REFINE)


@pytest.fixture(scope="session")
def buser_assemblies(buser_meshes):
    bc = {"arc": "steklov"}
    return tuple(sp.assemble(m, bc) for m in buser_meshes)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
