import numpy as np
import pytest


def naive_step(g):
    """Double-loop B3/S23 with wrap-around, written without numpy tricks."""
    h, w = len(g), len(g[0])
    out = [[0] * w for _ in range(h)]
    for r in range(h):
        for c in range(w):
            n = 0
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr or dc:
                        n += int(g[(r + dr) % h][(c + dc) % w])
            alive = int(g[r][c]) == 1
            out[r][c] = 1 if n == 3 or (alive and n == 2) else 0
    return np.array(out, dtype=np.uint8)


def place(shape, cells):
    g = np.zeros(shape, dtype=np.uint8)
    for r, c in cells:
        g[r, c] = 1
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = {}


def record_criterion(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
    _CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
