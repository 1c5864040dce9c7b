import numpy as np
import pytest

from tracekit.errors import ConfigError
from tracekit.libs.stats.sketch import ProbeKind, ProbeStream, StreamRole, draw_block, draw_column


def test_same_seed_same_block():
    assert np.array_equal(ProbeStream(3, 40).draw(5), ProbeStream(3, 40).draw(5))


def test_different_seeds_differ():
    assert not np.array_equal(ProbeStream(3, 40).draw(2), ProbeStream(4, 40).draw(2))


def test_block_split_does_not_change_columns():
    a = ProbeStream(11, 30)
    b = ProbeStream(11, 30)
    one_three = np.column_stack([a.draw(1), a.draw(3)])
    two_two = np.column_stack([b.draw(2), b.draw(2)])
    assert np.array_equal(one_three, two_two)
    assert a.next_column_index == b.next_column_index == 4


def test_column_depends_only_on_its_index():
    stream = ProbeStream(5, 25, role=StreamRole.HUTCHINSON)
    block = stream.draw(6)
    assert np.array_equal(block[:, 4], draw_column(5, 25, 4, role=StreamRole.HUTCHINSON))


def test_roles_are_independent_streams():
    sketch = ProbeStream(2, 20, role=StreamRole.SKETCH).draw(3)
    hutchinson = ProbeStream(2, 20, role=StreamRole.HUTCHINSON).draw(3)
    assert not np.allclose(sketch, hutchinson)


def test_rademacher_entries():
    block = ProbeStream(0, 1000, kind=ProbeKind.RADEMACHER).draw(4)
    assert set(np.unique(block).tolist()) == {-1.0, 1.0}


@pytest.mark.parametrize("kind", [ProbeKind.GAUSSIAN, ProbeKind.RADEMACHER])
def test_moments(kind):
    x = ProbeStream(1, 100_000, kind=kind).draw(1)[:, 0]
    assert abs(x.mean()) < 0.02
    assert abs(x.var() - 1.0) < 0.03


def test_draw_block_advances_cursor():
    stream = ProbeStream(9, 10)
    first = draw_block(stream, 2)
    second = draw_block(stream, 2)
    assert stream.next_column_index == 4
    assert not np.array_equal(first, second)


def test_empty_block_is_rejected():
    with pytest.raises(ConfigError):
        ProbeStream(0, 10).draw(0)
