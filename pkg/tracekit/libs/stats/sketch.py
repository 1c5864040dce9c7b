"""열 번호로 주소를 매기는 재현 가능한 무작위 탐침 블록.

스트림의 ``j`` 번째 열은 seed 를 키로, ``(role, kind, j)`` 를 카운터로 하는 Philox 블록에서
뽑습니다. 따라서 열은 ``(seed, role, kind, j)`` 에만 의존합니다. 4개 열을 1 + 3 으로 뽑든
2 + 2 로 뽑든 같은 행렬이 나오고, 겹치지 않는 열 범위는 병렬로 뽑을 수 있습니다.
"""
import enum
from dataclasses import dataclass

import numpy as np

from tracekit.errors import ConfigError

_KEY_MASK = (1 << 64) - 1


class ProbeKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"


class StreamRole(enum.IntEnum):
    """추정기 한 번의 호출 안에서 쓰는 서로 독립인 탐침 묶음"""

    SKETCH = 0
    HUTCHINSON = 1
    FROBENIUS = 2
    CO_SKETCH = 3


def draw_column(seed: int, n: int, column: int, *, kind: ProbeKind = ProbeKind.GAUSSIAN,
                role: StreamRole = StreamRole.SKETCH) -> np.ndarray:
    kind = ProbeKind(kind)
    salt = 2 * int(role) + (kind is ProbeKind.RADEMACHER)
    bit_generator = np.random.Philox(key=seed & _KEY_MASK, counter=[0, 0, column, salt])
    generator = np.random.Generator(bit_generator)
    if kind is ProbeKind.RADEMACHER:
        return 2.0 * generator.integers(0, 2, size=n) - 1.0
    return generator.standard_normal(n)


@dataclass
class ProbeStream:
    seed: int
    n: int
    kind: ProbeKind = ProbeKind.GAUSSIAN
    role: StreamRole = StreamRole.SKETCH
    next_column_index: int = 0

    def draw(self, cols: int) -> np.ndarray:
        if cols < 1:
            raise ConfigError(f"a probe block needs at least one column, got {cols}")
        block = np.empty((self.n, cols))
        for offset in range(cols):
            block[:, offset] = draw_column(
                self.seed, self.n, self.next_column_index + offset, kind=self.kind, role=self.role
            )
        self.next_column_index += cols
        return block


def draw_block(stream: ProbeStream, cols: int) -> np.ndarray:
    """``stream`` 의 다음 ``cols`` 개 열을 돌려주고 커서를 옮깁니다."""
    return stream.draw(cols)
