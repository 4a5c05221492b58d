# pylint: disable=redefined-outer-name
from pytest import fixture

import weakvalue
from weakvalue.detector import PixelGrid
from weakvalue.meter import CouplingConfig
from weakvalue.polarization import make_linear_state

from tests import common


@fixture
async def lab():
    """
    Fresh Lab per test; leaving the context shuts its worker pool down.
    """
    async with weakvalue.Lab() as lab:
        yield lab


@fixture(scope="session")
def thin() -> CouplingConfig:
    return CouplingConfig(*common.THIN)


@fixture(scope="session")
def thick() -> CouplingConfig:
    return CouplingConfig(*common.THICK)


@fixture(scope="session")
def anomalous_states():
    """Pre/post selection with weak values 2.5 (H) and -1.5 (V)."""
    return make_linear_state(common.THETA_I), make_linear_state(common.ANOMALOUS_THETA_F)


@fixture(scope="session")
def wide_grid() -> PixelGrid:
    """64x64 array centred on the beam, large enough that truncation is negligible."""
    return PixelGrid.centered(64)


@fixture
def experiment_file(tmp_path):
    def write(text: str = common.EXPERIMENT_FILE) -> str:
        path = tmp_path / "experiment.txt"
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write
