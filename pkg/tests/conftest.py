"""
Pytest configuration and shared fixtures for tests.
"""
import os
import tempfile

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from fastapi.testclient import TestClient

# Must be set before importing app modules
os.environ.setdefault("DATABASE_URL", "sqlite:///./test_polarization.db")

from app.modules.experiments.database import Base, get_db
from app.modules.experiments.models import ChosenEdgeRecord, ExperimentRun, TrajectoryPoint  # noqa: F401 - needed for Base.metadata
from app.modules.experiments.corpus import karate_club
from app.modules.graph.graph import Graph
from app.main import app


@pytest.fixture
def p3():
    """Path 0-1-2, unit weights."""
    return Graph.from_edges([0, 1], [1, 2])


@pytest.fixture
def p4():
    """Path 0-1-2-3, unit weights."""
    return Graph.from_edges([0, 1, 2], [1, 2, 3])


@pytest.fixture
def k3():
    return Graph.from_edges([0, 0, 1], [1, 2, 2])


@pytest.fixture
def star():
    """Center 0 with five unit-weight leaves."""
    return Graph.from_edges([0] * 5, [1, 2, 3, 4, 5])


@pytest.fixture
def two_triangles():
    """Triangles {0,1,2} and {3,4,5} plus the pendant edge 3-6."""
    return Graph.from_edges([0, 0, 1, 3, 3, 4, 3], [1, 2, 2, 4, 5, 5, 6])


@pytest.fixture(scope="session")
def karate():
    return karate_club()


@pytest.fixture(scope="function")
def db_session():
    """
    Create a fresh database session for each test.
    Uses a temporary SQLite file database for thread safety with TestClient.
    """
    db_fd, db_path = tempfile.mkstemp(suffix='.db')
    os.close(db_fd)

    try:
        engine = create_engine(
            f"sqlite:///{db_path}",
            echo=False,
            connect_args={"check_same_thread": False}
        )
        Base.metadata.create_all(bind=engine)

        TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
        session = TestingSessionLocal()

        try:
            yield session
        finally:
            session.close()
            Base.metadata.drop_all(bind=engine)
            engine.dispose()
    finally:
        if os.path.exists(db_path):
            os.unlink(db_path)


@pytest.fixture(scope="function")
def test_app(db_session):
    """
    Create a test FastAPI app with overridden database dependency.
    """
    def override_get_db():
        try:
            yield db_session
        finally:
            pass  # fixture closes the session

    app.dependency_overrides[get_db] = override_get_db

    yield app

    app.dependency_overrides.clear()


@pytest.fixture(scope="function")
def client(test_app):
    """
    Create a test client for the FastAPI app.
    """
    return TestClient(test_app)
