from typing import Iterable, NamedTuple

from celery.app.task import Task
from fastapi import APIRouter, Body, FastAPI, status
from pydantic import BaseModel


class TaskRoute(NamedTuple):
    task: Task
    payload_model: type[BaseModel]
    task_name: str
    tag: str


def create_task_router(task: Task, payload_model: type[BaseModel], task_name: str) -> APIRouter:
    """
    Creates a FastAPI router with synchronous and asynchronous endpoints for a given Celery task.
    """
    router = APIRouter()

    @router.post(f"/sync/{task_name}", status_code=status.HTTP_200_OK)
    def sync_endpoint(payload: payload_model = Body(...)):
        """Blocking execution in the API process, not in a worker."""
        result = task.apply(args=[payload.model_dump(mode="json")]).get()
        return {"status": "completed", "result": result}

    @router.post(f"/async/{task_name}", status_code=status.HTTP_202_ACCEPTED)
    def async_endpoint(payload: payload_model = Body(...)):
        """Queues the task for background execution."""
        task_result = task.delay(payload.model_dump(mode="json"))
        return {"status": "queued", "job_id": task_result.id}

    return router


def register_task_routes(app: FastAPI, routes: Iterable[TaskRoute], prefix: str = "/api") -> None:
    for route in routes:
        router = create_task_router(task=route.task, payload_model=route.payload_model, task_name=route.task_name)
        app.include_router(router, prefix=prefix, tags=[route.tag])
