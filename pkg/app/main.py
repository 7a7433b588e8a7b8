"""
Leader-Polarization Service - Main FastAPI Application

Modular monolith with feature modules:
- graph: edge-list ingestion, leader configurations, grounded Laplacians
- linalg: dense inverses, preconditioned solves, sketch probes
- greedy: exact and sketched greedy edge selection
- baselines: Random, TopDegree, TopCent and brute force
- dynamics: noisy leader-follower simulation
- experiments: CLI drivers, validation suites and the runs API
"""
import logging
import os
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.modules.experiments.database import init_db
from app.modules.experiments.router import router as runs_router

logger = logging.getLogger(__name__)

CORS_ORIGINS = [o.strip() for o in os.getenv("CORS_ORIGINS", "*").split(",") if o.strip()]


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Create the runs tables on startup; the service keeps running without them.
    """
    logger.info("Starting leader-polarization service...")
    try:
        init_db()
        logger.info("Database initialized successfully")
    except Exception as e:
        logger.error(f"Database initialization failed: {e}", exc_info=True)
        logger.error("Continuing without database - runs will not be stored")

    yield

    logger.info("Shutdown complete")


app = FastAPI(
    title="Leader-Polarization Service",
    description="Edge additions that minimize polarization in leader-follower networks",
    version="0.1.0",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(runs_router, prefix="/api")


@app.get("/api/health")
async def health_check():
    """Health check endpoint for monitoring and deployment verification."""
    return {"status": "healthy", "service": "leader-polarization"}
