from pathlib import Path

from alembic import command
from alembic.config import Config
from sqlalchemy import create_engine, inspect

ALEMBIC_INI = Path(__file__).resolve().parents[1] / "alembic.ini"


def _config(database: Path) -> Config:
    config = Config(str(ALEMBIC_INI))
    config.set_main_option("sqlalchemy.url", f"sqlite+aiosqlite:///{database}")
    return config


def _tables(database: Path) -> set[str]:
    engine = create_engine(f"sqlite:///{database}")
    try:
        inspector = inspect(engine)
        tables = set(inspector.get_table_names())
        if "result_rows" in tables:
            tables |= {index["name"] for index in inspector.get_indexes("result_rows")}
        return tables
    finally:
        engine.dispose()


def test_upgrade_and_downgrade(tmp_path):
    """마이그레이션을 head 까지 올렸다가 base 로 되돌림"""
    database = tmp_path / "migrate.db"
    config = _config(database)

    command.upgrade(config, "head")
    assert {"experiment_runs", "result_rows", "ix_result_rows_run_id"} <= _tables(database)

    command.downgrade(config, "base")
    assert not {"experiment_runs", "result_rows"} & _tables(database)
