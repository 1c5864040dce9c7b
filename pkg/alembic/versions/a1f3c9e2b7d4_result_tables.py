"""result tables

Revision ID: a1f3c9e2b7d4
Revises: 
Create Date: 2026-10-19 10:12:31.402118

"""
from typing import Sequence, Union

from alembic import op
import sqlalchemy as sa

import sqlalchemy_utc
import sqlmodel.sql.sqltypes

# revision identifiers, used by Alembic.
revision: str = 'a1f3c9e2b7d4'
down_revision: Union[str, Sequence[str], None] = None
branch_labels: Union[str, Sequence[str], None] = None
depends_on: Union[str, Sequence[str], None] = None


def upgrade() -> None:
    """Upgrade schema."""
    # ### commands auto generated by Alembic - please adjust! ###
    op.create_table('experiment_runs',
    sa.Column('id', sa.Integer(), nullable=False),
    sa.Column('fixture_id', sqlmodel.sql.sqltypes.AutoString(length=256), nullable=False),
    sa.Column('estimator', sqlmodel.sql.sqltypes.AutoString(length=32), nullable=False),
    sa.Column('seed', sa.Integer(), nullable=False),
    sa.Column('spec', sa.JSON(), nullable=True),
    sa.Column('row_count', sa.Integer(), nullable=False),
    sa.Column('created_at', sqlalchemy_utc.sqltypes.UtcDateTime(timezone=True), server_default=sa.text('(CURRENT_TIMESTAMP)'), nullable=False),
    sa.PrimaryKeyConstraint('id')
    )
    op.create_table('result_rows',
    sa.Column('fixture_id', sqlmodel.sql.sqltypes.AutoString(length=256), nullable=False),
    sa.Column('estimator', sqlmodel.sql.sqltypes.AutoString(length=32), nullable=False),
    sa.Column('sweep_value', sa.Float(), nullable=False),
    sa.Column('trial', sa.Integer(), nullable=False),
    sa.Column('estimate', sa.Float(), nullable=False),
    sa.Column('truth', sa.Float(), nullable=True),
    sa.Column('rel_error', sa.Float(), nullable=True),
    sa.Column('matvecs_total', sa.Integer(), nullable=False),
    sa.Column('matvecs_lowrank', sa.Integer(), nullable=False),
    sa.Column('matvecs_hutchinson', sa.Integer(), nullable=False),
    sa.Column('rank_used', sa.Integer(), nullable=False),
    sa.Column('seed', sa.Integer(), nullable=False),
    sa.Column('id', sa.Integer(), nullable=False),
    sa.Column('run_id', sa.Integer(), nullable=True),
    sa.Column('created_at', sqlalchemy_utc.sqltypes.UtcDateTime(timezone=True), server_default=sa.text('(CURRENT_TIMESTAMP)'), nullable=False),
    sa.ForeignKeyConstraint(['run_id'], ['experiment_runs.id'], ),
    sa.PrimaryKeyConstraint('id')
    )
    op.create_index(op.f('ix_result_rows_run_id'), 'result_rows', ['run_id'], unique=False)
    # ### end Alembic commands ###


def downgrade() -> None:
    """Downgrade schema."""
    # ### commands auto generated by Alembic - please adjust! ###
    op.drop_index(op.f('ix_result_rows_run_id'), table_name='result_rows')
    op.drop_table('result_rows')
    op.drop_table('experiment_runs')
    # ### end Alembic commands ###
