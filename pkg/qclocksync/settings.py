import os
from pathlib import Path
from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent.parent
dotenv_path = BASE_DIR / ".env"
if dotenv_path.exists():
    load_dotenv(dotenv_path)

SECRET_KEY = os.getenv("SECRET_KEY", "changeme")
DEBUG = os.getenv("DEBUG", "True") == "True"
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "syncsim",
]

# Simulation runs are files on disk; nothing is persisted in a database.
DATABASES = {}

LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

SYNCSIM_OUTPUT_DIR = Path(os.getenv("SYNCSIM_OUTPUT_DIR", BASE_DIR / "runs"))
SYNCSIM_SCHWARZSCHILD_RADIUS_M = float(
    os.getenv("SYNCSIM_SCHWARZSCHILD_RADIUS_M", "9e-3")
)
SYNCSIM_QUAD_RTOL = float(os.getenv("SYNCSIM_QUAD_RTOL", "1e-10"))
SYNCSIM_MAX_PANELS = int(os.getenv("SYNCSIM_MAX_PANELS", "8192"))

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {"format": "{levelname} {name}: {message}", "style": "{"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "simple"},
    },
    "loggers": {
        "syncsim": {
            "handlers": ["console"],
            "level": os.getenv("SYNCSIM_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}
