import numpy as np
import pytest

from harqnp.channel import BiAwgnChannel
from harqnp.codes import BinaryLinearCode, CrcSpec, valid_message_set
from harqnp.verify import HAMMING74, REPETITION3, random_code


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def hamming():
    return BinaryLinearCode.from_parity(HAMMING74)


@pytest.fixture(scope="session")
def repetition():
    return BinaryLinearCode.from_parity(REPETITION3)


@pytest.fixture(scope="session")
def small_code():
    """[8, 3] code with minimum distance 3."""
    return random_code(8, 3, 5, min_distance=3)


@pytest.fixture(scope="session")
def medium_code():
    """[12, 6] code carrying a degree-4 CRC on its messages."""
    return random_code(12, 6, 2, min_distance=2)


@pytest.fixture(scope="session")
def crc4():
    return CrcSpec.parse("1+x^2+x^3+x^4")


@pytest.fixture(scope="session")
def medium_messages(medium_code, crc4):
    return valid_message_set(medium_code.k, crc4)


@pytest.fixture
def channel():
    return BiAwgnChannel.from_snr(3.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import result_lines
    except ImportError:
        return
    lines = result_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
