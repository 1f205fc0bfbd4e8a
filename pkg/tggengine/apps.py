from django.apps import AppConfig


class TggengineConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "tggengine"
    verbose_name = "TGG transformation engine"
