import enum
from pathlib import Path

from pydantic import BaseModel, Field, model_validator


class FixtureKind(str, enum.Enum):
    SYNTHETIC_ALGEBRAIC = "synthetic_algebraic"
    SYNTHETIC_EXPONENTIAL = "synthetic_exponential"
    LOW_RANK = "low_rank"
    GRAPH_TRIANGLES = "graph_triangles"
    ESTRADA = "estrada"
    LOGDET_SPRANDN = "logdet_sprandn"
    LOGDET_MATRIX = "logdet_matrix"
    INVERSE_TRIDIAG = "inverse_tridiag"
    INVERSE_POISSON = "inverse_poisson"
    MATRIX_FILE = "matrix_file"

    @property
    def needs_path(self) -> bool:
        return self in _FILE_BACKED


_FILE_BACKED = {
    FixtureKind.GRAPH_TRIANGLES,
    FixtureKind.ESTRADA,
    FixtureKind.LOGDET_MATRIX,
    FixtureKind.MATRIX_FILE,
}

# 실험용 기본 Lanczos 반복 횟수
DEFAULT_LANCZOS_ITERS = {
    FixtureKind.ESTRADA: 30,
    FixtureKind.LOGDET_SPRANDN: 25,
    FixtureKind.LOGDET_MATRIX: 35,
}


class FixtureSpec(BaseModel):
    """실험 대상 행렬 하나를 기술하는 설정"""

    kind: FixtureKind
    n: int = Field(default=1000, ge=8, description="생성형 fixture의 차원")
    c: float = Field(default=1.0, gt=0, description="고유값 1/i^c 의 감쇠 지수")
    s: float = Field(default=10.0, gt=0, description="고유값 exp(-i/s) 의 감쇠 척도")
    rank: int = Field(default=5, ge=1)
    path: Path | None = None
    iters: int | None = Field(default=None, ge=1)
    mesh_k: int = Field(default=50, ge=2)
    density: float = Field(default=0.025, gt=0, le=1)
    # matrix_file 로 읽은 행렬이 PSD인지 사용자가 선언 (Nystrom++ 허용 여부)
    psd: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.kind.needs_path and self.path is None:
            raise ValueError(f"fixture {self.kind.value} needs a path")
        if self.kind is FixtureKind.LOW_RANK and self.rank > self.n:
            raise ValueError(f"rank {self.rank} exceeds n={self.n}")
        if self.iters is None and self.kind in DEFAULT_LANCZOS_ITERS:
            self.iters = DEFAULT_LANCZOS_ITERS[self.kind]
        return self

    @property
    def fixture_id(self) -> str:
        match self.kind:
            case FixtureKind.SYNTHETIC_ALGEBRAIC:
                detail = f"c={self.c:g},n={self.n}"
            case FixtureKind.SYNTHETIC_EXPONENTIAL:
                detail = f"s={self.s:g},n={self.n}"
            case FixtureKind.LOW_RANK:
                detail = f"rank={self.rank},n={self.n}"
            case FixtureKind.GRAPH_TRIANGLES | FixtureKind.MATRIX_FILE:
                detail = self.path.name
            case FixtureKind.ESTRADA | FixtureKind.LOGDET_MATRIX:
                detail = f"{self.path.name},iters={self.iters}"
            case FixtureKind.LOGDET_SPRANDN:
                detail = f"n={self.n},iters={self.iters}"
            case FixtureKind.INVERSE_TRIDIAG:
                detail = f"n={self.n}"
            case FixtureKind.INVERSE_POISSON:
                detail = f"mesh_k={self.mesh_k}"
        return f"{self.kind.value}({detail})"
