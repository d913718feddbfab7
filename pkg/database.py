from contextlib import contextmanager
from pathlib import Path

from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

CATALOG_FILENAME = "runs.db"

Base = declarative_base()


def catalog_url(output_dir) -> str:
    return f"sqlite:///{Path(output_dir).resolve() / CATALOG_FILENAME}"


def make_session_factory(output_dir):
    """Session factory bound to the run catalog of one output directory.

    Tables are created on first use.
    """
    engine = create_engine(catalog_url(output_dir))
    Base.metadata.create_all(bind=engine)
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


@contextmanager
def get_db(output_dir):
    db = make_session_factory(output_dir)()
    try:
        yield db
    finally:
        db.close()
        db.get_bind().dispose()
