import os
from contextlib import asynccontextmanager

import uvicorn
from fastapi import FastAPI

from stablyfree.api import certificates_router, modules_router, squares_router
from stablyfree.utils import logger, worker_count

tags_metadata = [
    {"name": "Squares", "description": "Milnor squares and their exactness checks."},
    {"name": "Modules", "description": "The delta_n family and its distinctness decisions."},
    {"name": "Certificates", "description": "Elementary-matrix trivialization certificates."},
]


@asynccontextmanager
async def lifespan(_: FastAPI):
    logger.info("Serving with %d brute-force worker(s).", worker_count())
    yield
    logger.info("Shutting down.")


app = FastAPI(
    title="StablyFree API",
    version="0.1.0-dev",
    openapi_tags=tags_metadata,
    lifespan=lifespan,
)

app.include_router(squares_router)

app.include_router(modules_router)

app.include_router(certificates_router)


if __name__ == "__main__":
    uvicorn.run(
        "stablyfree.main:app",
        host=os.getenv("HOST", "127.0.0.1"),
        port=int(os.getenv("PORT", "8000")),
    )
