"""adding server store

Revision ID: 3f1c2a9d7e04
Revises: 
Create Date: 2026-10-17 10:12:31.402118

"""
from typing import Sequence, Union

from alembic import op
import sqlalchemy as sa


# revision identifiers, used by Alembic.
revision: str = '3f1c2a9d7e04'
down_revision: Union[str, None] = None
branch_labels: Union[str, Sequence[str], None] = None
depends_on: Union[str, Sequence[str], None] = None


def upgrade() -> None:
    # ### commands auto generated by Alembic - please adjust! ###
    op.create_table('data',
    sa.Column('content', sa.Text(), nullable=False),
    sa.Column('author', sa.String(length=255), nullable=False),
    sa.Column('consent_id', sa.Uuid(), nullable=True),
    sa.Column('non_crawlable', sa.Boolean(), nullable=False),
    sa.Column('id', sa.Uuid(), nullable=False),
    sa.Column('time_created', sa.DateTime(), nullable=True),
    sa.Column('time_updated', sa.DateTime(), nullable=True),
    sa.PrimaryKeyConstraint('id')
    )
    op.create_table('consent_entries',
    sa.Column('data_id', sa.Uuid(), nullable=False),
    sa.Column('hash', sa.String(length=64), nullable=False),
    sa.Column('signature', sa.Text(), nullable=False),
    sa.Column('config', sa.Text(), nullable=False),
    sa.Column('uploaded', sa.Boolean(), nullable=False),
    sa.Column('id', sa.Uuid(), nullable=False),
    sa.Column('time_created', sa.DateTime(), nullable=True),
    sa.Column('time_updated', sa.DateTime(), nullable=True),
    sa.ForeignKeyConstraint(['data_id'], ['data.id'], ondelete='CASCADE'),
    sa.PrimaryKeyConstraint('id'),
    sa.UniqueConstraint('data_id')
    )
    with op.batch_alter_table('consent_entries', schema=None) as batch_op:
        batch_op.create_index(batch_op.f('ix_consent_entries_hash'), ['hash'], unique=False)
        batch_op.create_index(batch_op.f('ix_consent_entries_uploaded'), ['uploaded'], unique=False)

    op.create_table('crawl_events',
    sa.Column('tag_hash', sa.String(length=64), nullable=False),
    sa.Column('crawler', sa.String(length=255), nullable=False),
    sa.Column('data_id', sa.Uuid(), nullable=False),
    sa.Column('delivered', sa.Boolean(), nullable=False),
    sa.Column('attempts', sa.Integer(), nullable=False),
    sa.Column('last_error', sa.Text(), nullable=True),
    sa.Column('id', sa.Uuid(), nullable=False),
    sa.Column('time_created', sa.DateTime(), nullable=True),
    sa.Column('time_updated', sa.DateTime(), nullable=True),
    sa.PrimaryKeyConstraint('id')
    )
    with op.batch_alter_table('crawl_events', schema=None) as batch_op:
        batch_op.create_index(batch_op.f('ix_crawl_events_delivered'), ['delivered'], unique=False)

    op.create_table('sync_state',
    sa.Column('key', sa.String(length=64), nullable=False),
    sa.Column('value', sa.String(length=255), nullable=False),
    sa.PrimaryKeyConstraint('key')
    )
    # ### end Alembic commands ###


def downgrade() -> None:
    # ### commands auto generated by Alembic - please adjust! ###
    op.drop_table('sync_state')
    with op.batch_alter_table('crawl_events', schema=None) as batch_op:
        batch_op.drop_index(batch_op.f('ix_crawl_events_delivered'))

    op.drop_table('crawl_events')
    with op.batch_alter_table('consent_entries', schema=None) as batch_op:
        batch_op.drop_index(batch_op.f('ix_consent_entries_uploaded'))
        batch_op.drop_index(batch_op.f('ix_consent_entries_hash'))

    op.drop_table('consent_entries')
    op.drop_table('data')
    # ### end Alembic commands ###
