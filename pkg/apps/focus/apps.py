from django.apps import AppConfig


class FocusConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.focus"
    verbose_name = "Adaptive Focus"
