import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from codedcache import CacheState, DemandVector, SystemConfig

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def seven_subfile_instance():
    """Four users, four files, d=(1,2,3,4), two bits per file, one bit per sub-file.

    Non-empty demanded cells: F_{1,{2,3}}, F_{1,{3}}, F_{2,{1,3}}, F_{2,{1}},
    F_{3,{1,2}}, F_{3,{2}}, F_{4,{}}. Bit 1 of file 4 is cached by everyone.
    """
    cfg = SystemConfig(4, 4, 2, 0.0)
    cache = CacheState.from_positions(
        cfg,
        {
            1: [(2, 0), (2, 1), (3, 0), (4, 1)],
            2: [(1, 0), (3, 0), (3, 1), (4, 1)],
            3: [(1, 0), (1, 1), (2, 0), (4, 1)],
            4: [(4, 1)],
        },
    )
    return cfg, cache, DemandVector((1, 2, 3, 4))


def symmetric_cache(num_files: int, num_users: int, cell: int):
    """Every cacher set gets ``cell`` bits of every file, so all same-type cells have equal length."""
    sets = [s for r in range(num_users + 1) for s in itertools.combinations(range(num_users), r)]
    bits = cell * len(sets)
    mask = np.zeros((num_users, num_files, bits), dtype=bool)
    for idx, s in enumerate(sets):
        for k in s:
            mask[k, :, idx * cell : (idx + 1) * cell] = True
    return SystemConfig(num_files, num_users, bits, 0.0), CacheState(mask)


@pytest.fixture
def seven_subfiles():
    return seven_subfile_instance()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
