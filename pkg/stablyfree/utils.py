import logging
import os
import random

logger = logging.getLogger("stablyfree")


class AlgebraError(Exception):
    """Base class for every error raised by the algebra layers."""


def worker_count() -> int:
    """
    Number of worker processes used by the brute-force enumerations.

    :return: The value of ``STABLYFREE_WORKERS`` (validated at import time), 1 when unset.
    """
    return int(os.getenv("STABLYFREE_WORKERS", "1"))


def make_rng(seed: int | None = None) -> random.Random:
    """
    Creates the random source used by randomized property checks.

    :param seed: Explicit seed. If None, ``STABLYFREE_SEED`` is used, defaulting to 0.
    :return: A seeded ``random.Random`` instance.
    """
    if seed is None:
        seed = int(os.getenv("STABLYFREE_SEED", "0"))
    return random.Random(seed)


def error_response(description: str, details: list[str]) -> dict:
    """
    OpenAPI description of an HTTPException raised by a router.

    :param description: What went wrong, shown in the docs.
    :param details: Every string the `detail` field may hold.
    """
    return {
        "description": description,
        "content": {
            "application/json": {
                "schema": {
                    "type": "object",
                    "required": ["detail"],
                    "properties": {
                        "detail": {"type": "string", "enum": details},
                    },
                },
            },
        },
    }

