from fastapi import FastAPI

from .apps.estimation.endpoints import router as estimation_router
from .apps.experiments.endpoints import router as experiments_router

app = FastAPI(title="tracekit")


def include_routers(_app: FastAPI):
    _app.include_router(estimation_router)
    _app.include_router(experiments_router)


include_routers(app)
