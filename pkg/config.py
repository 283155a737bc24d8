# config.py
import os
from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_DIR = os.getenv("LOG_DIR")

POROMECH_THREADS = max(1, int(os.getenv("POROMECH_THREADS", str(os.cpu_count() or 1))))
POROMECH_OUTPUT_ROOT = os.getenv("POROMECH_OUTPUT_ROOT", "./runs")
POROMECH_DEFAULT_SEED = int(os.getenv("POROMECH_DEFAULT_SEED", "0"))
POROMECH_SHOW_PROGRESS = os.getenv("POROMECH_SHOW_PROGRESS", "true").lower() == "true"
