import logging
import os

from dotenv import load_dotenv

if os.getenv("NO_ENV_FILE") != "true":
    load_dotenv()

integer_vars = {"STABLYFREE_WORKERS": 1, "STABLYFREE_SEED": 0, "PORT": 1}

for var, minimum in integer_vars.items():
    value = os.getenv(var)
    if value is None:
        continue
    try:
        parsed = int(value)
    except ValueError:
        raise RuntimeError(f"Expected '{var}' environment variable to be an integer.")
    if parsed < minimum:
        raise RuntimeError(f"Expected '{var}' environment variable to be at least {minimum}.")

logging.getLogger("stablyfree").setLevel(os.getenv("STABLYFREE_LOG_LEVEL", "WARNING").upper())
