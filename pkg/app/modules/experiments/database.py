"""
SQLAlchemy store for experiment runs; a local SQLite file unless DATABASE_URL says otherwise.
"""
import logging
import os
import time

from sqlalchemy import create_engine
from sqlalchemy.exc import OperationalError
from sqlalchemy.orm import declarative_base, sessionmaker

logger = logging.getLogger(__name__)

DATABASE_URL = os.getenv("DATABASE_URL", "sqlite:///./polarization.db")

engine = create_engine(
    DATABASE_URL,
    connect_args={"check_same_thread": False} if DATABASE_URL.startswith("sqlite") else {},
)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
Base = declarative_base()


def get_db():
    """FastAPI dependency yielding one session per request."""
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def init_db(attempts: int = 5, delay: float = 1.0) -> None:
    """
    Create the run tables, retrying while a server-backed database comes up.

    Raises:
        RuntimeError: Still unreachable after all attempts
    """
    from app.modules.experiments import models  # noqa: F401 - registers the tables

    for attempt in range(1, attempts + 1):
        try:
            Base.metadata.create_all(bind=engine)
            logger.info(f"Run store ready at {engine.url.render_as_string(hide_password=True)}")
            return
        except OperationalError as e:
            logger.warning(f"Run store unreachable ({attempt}/{attempts}): {e}")
            if attempt < attempts:
                time.sleep(delay)
    raise RuntimeError(f"database unreachable after {attempts} attempts")
