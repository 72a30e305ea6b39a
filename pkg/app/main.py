from celery.result import AsyncResult
from fastapi import FastAPI, status
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from app import __version__
from app.core.celery_app import celery_app
from app.tasks.analysis_tasks import (
    AnalyzePayload,
    FixturesPayload,
    VerticesPayload,
    analyze_inequality,
    enumerate_vertices,
    verify_reference_fixtures,
)
from app.tasks.quantum_tasks import OptimizePayload, StrategyPayload, evaluate_strategy, optimize_strategy
from app.tasks.search_tasks import ScanPayload, scan_candidates
from app.utils.task_router import TaskRoute, register_task_routes

# Create FastAPI app
app = FastAPI(title="Hybrid Exclusivity Job Queue", version=__version__)

# --- Add CORS Middleware ---
# Allows all origins, methods and headers; restrict in production.
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# --- Job Status Endpoint ---
class JobStatusResponse(BaseModel):
    job_id: str
    status: str
    result: str | dict | None = None


@app.get("/jobs/{job_id}", response_model=JobStatusResponse, status_code=status.HTTP_200_OK)
def get_job_status(job_id: str):
    """
    Retrieve the status and result of a background job.
    Maps Celery states to: queued, running, completed, failed.
    """
    task_result = AsyncResult(job_id, app=celery_app)

    status_mapping = {
        "PENDING": "queued",
        "STARTED": "running",
        "SUCCESS": "completed",
        "FAILURE": "failed",
    }
    current_status = status_mapping.get(task_result.status, "unknown")

    result = task_result.result if task_result.ready() else None
    if isinstance(result, Exception):
        result = repr(result)

    return JobStatusResponse(job_id=job_id, status=current_status, result=result)


# --- Task routes ---
register_task_routes(
    app,
    [
        TaskRoute(analyze_inequality, AnalyzePayload, "analyze", "Bounds"),
        TaskRoute(enumerate_vertices, VerticesPayload, "vertices", "Polytopes"),
        TaskRoute(verify_reference_fixtures, FixturesPayload, "verify-fixtures", "Reference Fixtures"),
        TaskRoute(evaluate_strategy, StrategyPayload, "quantum", "Quantum Strategies"),
        TaskRoute(optimize_strategy, OptimizePayload, "quantum-optimize", "Quantum Strategies"),
        TaskRoute(scan_candidates, ScanPayload, "search", "Search"),
    ],
)


@app.get("/", summary="Health Check")
def read_root():
    return {"status": "ok", "version": __version__}
