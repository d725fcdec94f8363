import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "qclocksync.settings")
django.setup()
