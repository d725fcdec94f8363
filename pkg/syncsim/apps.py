from django.apps import AppConfig


class SyncSimConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "syncsim"
    verbose_name = "Satellite HOM clock synchronization"
